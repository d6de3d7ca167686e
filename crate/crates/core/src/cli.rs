//! Command-line front end.
//!
//! Every exact value is printed as a `p/q` string. Decimal renderings only
//! appear in `table` output, prefixed with `~`, and in Monte Carlo estimates.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::coupling::{self, GapReport, Property, ScanSpec, Verdict};
use crate::error::{Error, Result};
use crate::model::{self, OffspringModel};
use crate::rational::{self, Rational};
use crate::report;
use crate::sampler::{self, BulkMethod, ConditionedMethod, EstimateRow, RngSpec, SpineConfig};
use crate::tree::{self, PlaneTree};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ASSERT: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "gw-monotone", version, about = "Exact analysis of conditioned Galton-Watson trees")]
pub struct Command {
    #[command(subcommand)]
    pub verb: Verb,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Format {
    Json,
    Csv,
    #[default]
    Table,
}

#[derive(Debug, Clone, Args)]
pub struct FamilyArg {
    /// ge | po | binomial:<d> | eps:<p/q> | custom:<json-path>
    #[arg(long, value_parser = parse_family)]
    pub family: OffspringModel,
}

#[derive(Debug, Clone, Copy, Args)]
pub struct FormatArg {
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, Args)]
pub struct AssertArg {
    /// Exit 1 unless the property holds (P1: feasible)
    #[arg(long, conflicts_with = "assert_fails")]
    pub assert_holds: bool,
    /// Exit 1 unless the property fails (P1: infeasible)
    #[arg(long)]
    pub assert_fails: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CheckKind {
    P1,
    Pa,
    Pb,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScanProperty {
    Pa,
    Pb,
}

impl From<ScanProperty> for Property {
    fn from(p: ScanProperty) -> Self {
        match p {
            ScanProperty::Pa => Property::Pa,
            ScanProperty::Pb => Property::Pb,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SampleMethod {
    Exact,
    Rejection,
    Uniform,
}

#[derive(Debug, Subcommand)]
pub enum Verb {
    /// List all plane trees with n vertices
    Enumerate {
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        dmax: Option<u64>,
        #[command(flatten)]
        format: FormatArg,
    },
    /// Exact conditioned distribution of T_n
    Dist {
        #[command(flatten)]
        family: FamilyArg,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
        #[command(flatten)]
        format: FormatArg,
    },
    /// Exact expected profile E W_k(T_n), k = 0..=kmax
    Profile {
        #[command(flatten)]
        family: FamilyArg,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
        /// Largest level reported (default n - 1)
        #[arg(long)]
        k: Option<u64>,
        #[command(flatten)]
        format: FormatArg,
    },
    /// Decide P1 (coupling), Pa (profile monotonicity) or Pb (profile bound)
    Check {
        #[arg(value_enum)]
        property: CheckKind,
        #[command(flatten)]
        family: FamilyArg,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
        #[arg(long, default_value_t = 1)]
        k: u64,
        #[command(flatten)]
        assert: AssertArg,
        #[command(flatten)]
        format: FormatArg,
    },
    /// Sign of the Pa/Pb gap along the epsilon family
    Scan {
        #[arg(long, value_enum)]
        property: ScanProperty,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
        #[arg(long, default_value_t = 1)]
        k: u64,
        /// Comma-separated grid of eps values; a single value is a point evaluation
        #[arg(long, value_delimiter = ',', value_parser = parse_unit_rational, conflicts_with_all = ["lo", "hi"])]
        eps: Vec<Rational>,
        #[arg(long, value_parser = parse_unit_rational, requires = "hi")]
        lo: Option<Rational>,
        #[arg(long, value_parser = parse_unit_rational, requires = "lo")]
        hi: Option<Rational>,
        #[arg(long, default_value_t = 40)]
        iterations: usize,
        #[command(flatten)]
        format: FormatArg,
    },
    /// Exact max of E W_k(T_n)/k over k <= kmax, n <= nmax
    Bound {
        #[command(flatten)]
        family: FamilyArg,
        /// nmax
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
        /// kmax
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        k: u64,
        #[command(flatten)]
        format: FormatArg,
    },
    /// Monte Carlo profile of the truncated size-biased tree
    Spine {
        #[command(flatten)]
        family: FamilyArg,
        #[arg(long, default_value_t = 6, value_parser = clap::value_parser!(u64).range(1..))]
        depth: u64,
        #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
        reps: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        stream: u64,
        #[command(flatten)]
        format: FormatArg,
    },
    /// Monte Carlo profile of sampled conditioned trees T_n
    Sample {
        #[command(flatten)]
        family: FamilyArg,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
        #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
        reps: u64,
        /// Largest level reported
        #[arg(long, default_value_t = 1)]
        k: u64,
        #[arg(long, value_enum, default_value_t = SampleMethod::Exact)]
        method: SampleMethod,
        #[arg(long, default_value_t = 1_000_000)]
        max_attempts: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        stream: u64,
        #[command(flatten)]
        format: FormatArg,
    },
    /// Re-derive the epsilon-family counterexample and write report files
    ReproducePaper {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_unit_rational(s: &str) -> std::result::Result<Rational, String> {
    let r = rational::parse(s).map_err(|e| e.to_string())?;
    OffspringModel::epsilon(r.clone()).map_err(|e| e.to_string())?;
    Ok(r)
}

/// Parses `ge`, `po`, `binomial:<d>`, `eps:<p/q>` or `custom:<json-path>`.
pub fn parse_family(s: &str) -> std::result::Result<OffspringModel, String> {
    let (name, arg) = match s.split_once(':') {
        Some((n, a)) => (n, Some(a)),
        None => (s, None),
    };
    let no_arg = |m: OffspringModel| match arg {
        None => Ok(m),
        Some(_) => Err(format!("family `{name}` takes no parameter")),
    };
    let need = |what: &str| arg.ok_or_else(|| format!("family `{name}` needs a parameter: {name}:<{what}>"));
    match name {
        "ge" | "geometric" => no_arg(OffspringModel::geometric_half()),
        "po" | "poisson" => no_arg(OffspringModel::poisson_one()),
        "binomial" | "bi" => {
            let d: usize = need("d")?.parse().map_err(|_| "binomial degree must be an integer".to_string())?;
            OffspringModel::binomial(d).map_err(|e| e.to_string())
        }
        "eps" | "epsilon" => {
            let eps = rational::parse(need("p/q")?).map_err(|e| e.to_string())?;
            OffspringModel::epsilon(eps).map_err(|e| e.to_string())
        }
        "custom" => load_model(Path::new(need("json-path")?)).map_err(|e| e.to_string()),
        other => Err(format!("unknown family `{other}`")),
    }
}

/// Reads a JSON model spec such as `{"family":"custom","weights":["1/2","0","1/2"]}`.
pub fn load_model(path: &Path) -> Result<OffspringModel> {
    let text = fs::read_to_string(path)?;
    let model: OffspringModel = serde_json::from_str(&text)?;
    model.validated()
}

pub fn parse_args<I, T>(argv: I) -> std::result::Result<Command, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    Command::try_parse_from(argv)
}

/// Rendered output plus the process exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub output: String,
    pub exit_code: i32,
}

impl Outcome {
    fn ok(output: String) -> Self {
        Self { output, exit_code: EXIT_OK }
    }
}

fn json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

fn approx(r: &Rational) -> String {
    format!("~{:.6}", rational::to_f64(r))
}

fn model_json(model: &OffspringModel) -> Value {
    serde_json::to_value(model).expect("models serialize")
}

fn usize_arg(v: u64) -> usize {
    v as usize
}

fn assert_exit(assert: AssertArg, holds: bool) -> i32 {
    match (assert.assert_holds, assert.assert_fails) {
        (true, _) if !holds => EXIT_ASSERT,
        (_, true) if holds => EXIT_ASSERT,
        _ => EXIT_OK,
    }
}

pub fn run(cmd: &Command) -> Result<Outcome> {
    match &cmd.verb {
        Verb::Enumerate { n, dmax, format } => {
            let trees = tree::enumerate(usize_arg(*n), dmax.map(usize_arg));
            Ok(Outcome::ok(render_trees(&trees, format.format)))
        }
        Verb::Dist { family, n, format } => {
            let dist = model::conditioned_dist(&family.family, usize_arg(*n))?;
            let out = match format.format {
                Format::Json => json_text(&json!({
                    "model": model_json(&family.family),
                    "n": n,
                    "probs": dist.probs.iter().map(|(t, p)| json!({"tree": t, "prob": p.to_string()})).collect::<Vec<_>>(),
                })),
                Format::Csv => {
                    let mut s = String::from("tree,prob\n");
                    for (t, p) in &dist.probs {
                        let _ = writeln!(s, "\"{t}\",{p}");
                    }
                    s
                }
                Format::Table => {
                    let mut s = format!("T_{n} for {}\n", family.family);
                    for (t, p) in &dist.probs {
                        let _ = writeln!(s, "{t:<24} {p:<20} {}", approx(p));
                    }
                    s
                }
            };
            Ok(Outcome::ok(out))
        }
        Verb::Profile { family, n, k, format } => {
            let n = usize_arg(*n);
            let kmax = k.map_or(n - 1, usize_arg);
            let profile = model::expected_profile(&family.family, n, kmax)?;
            let out = match format.format {
                Format::Json => json_text(&json!({
                    "model": model_json(&family.family),
                    "n": n,
                    "profile": profile.iter().map(|r| r.to_string()).collect::<Vec<_>>(),
                })),
                Format::Csv => {
                    let mut s = String::from("k,expected_width\n");
                    for (k, r) in profile.iter().enumerate() {
                        let _ = writeln!(s, "{k},{r}");
                    }
                    s
                }
                Format::Table => {
                    let mut s = format!("E W_k(T_{n}) for {}\n", family.family);
                    for (k, r) in profile.iter().enumerate() {
                        let _ = writeln!(s, "k={k:<3} {r:<20} {}", approx(r));
                    }
                    s
                }
            };
            Ok(Outcome::ok(out))
        }
        Verb::Check { property, family, n, k, assert, format } => {
            let (n, k) = (usize_arg(*n), usize_arg(*k));
            match property {
                CheckKind::P1 => {
                    let result = coupling::check_p1(&family.family, n)?;
                    let out = render_p1(&family.family, &result, format.format);
                    Ok(Outcome {
                        output: out,
                        exit_code: assert_exit(*assert, result.verdict == Verdict::Feasible),
                    })
                }
                CheckKind::Pa | CheckKind::Pb => {
                    let prop = if *property == CheckKind::Pa { Property::Pa } else { Property::Pb };
                    let r = coupling::check(prop, &family.family, n, k)?;
                    Ok(Outcome {
                        output: render_gap(&family.family, &r, format.format),
                        exit_code: assert_exit(*assert, r.holds),
                    })
                }
            }
        }
        Verb::Scan { property, n, k, eps, lo, hi, iterations, format } => {
            let prop = Property::from(*property);
            let (n, k) = (usize_arg(*n), usize_arg(*k));
            if let [single] = eps.as_slice() {
                let r = coupling::gap_at(prop, single, n, k)?;
                let model = OffspringModel::epsilon(single.clone())?;
                return Ok(Outcome::ok(render_gap(&model, &r, format.format)));
            }
            let spec = match (lo, hi) {
                (Some(lo), Some(hi)) => ScanSpec::Bisection { lo: lo.clone(), hi: hi.clone(), iterations: *iterations },
                _ if eps.len() >= 2 => ScanSpec::Grid(eps.clone()),
                _ => return Err(Error::InvalidArgument("scan needs --eps values or --lo/--hi".into())),
            };
            let report = coupling::threshold_scan(prop, n, k, &spec)?;
            let out = match format.format {
                Format::Json => json_text(&serde_json::to_value(&report)?),
                Format::Csv => {
                    let mut s = String::from("eps,gap,sign\n");
                    for p in &report.points {
                        let _ = writeln!(s, "{},{},{}", p.eps, p.gap, p.sign);
                    }
                    s
                }
                Format::Table => {
                    let mut s = format!("{prop} gap over eps (n={n}, k={k})\n");
                    for p in &report.points {
                        let _ = writeln!(s, "eps={:<16} gap={:<28} {}", p.eps, p.gap, p.sign);
                    }
                    if let Some(b) = &report.boundary {
                        let _ = writeln!(s, "gap is exactly 0 at eps={b}");
                    }
                    if let Some((a, b)) = &report.bracket {
                        let _ = writeln!(s, "sign change in ({a}, {b})");
                    }
                    s
                }
            };
            Ok(Outcome::ok(out))
        }
        Verb::Bound { family, n, k, format } => {
            let r = coupling::bound_scan(&family.family, usize_arg(*k), usize_arg(*n))?;
            let out = match format.format {
                Format::Json => {
                    let mut v = serde_json::to_value(&r)?;
                    v["model"] = model_json(&family.family);
                    json_text(&v)
                }
                Format::Csv => format!("max,k,n,kmax,nmax\n{},{},{},{},{}\n", r.max, r.k, r.n, r.kmax, r.nmax),
                Format::Table => format!(
                    "max E W_k(T_n)/k over k<={}, n<={}: {} {} at (k={}, n={})\n",
                    r.kmax,
                    r.nmax,
                    r.max,
                    approx(&r.max),
                    r.k,
                    r.n
                ),
            };
            Ok(Outcome::ok(out))
        }
        Verb::Spine { family, depth, reps, seed, stream, format } => {
            let config = SpineConfig {
                model: family.family.clone(),
                depth: usize_arg(*depth),
                replications: usize_arg(*reps),
                rng: RngSpec::new(*seed, *stream),
            };
            let run = sampler::sample_spine(&config)?;
            Ok(Outcome::ok(render_estimates(&run.estimate.rows, format.format)))
        }
        Verb::Sample { family, n, reps, k, method, max_attempts, seed, stream, format } => {
            let bulk = match method {
                SampleMethod::Exact => BulkMethod::Conditioned(ConditionedMethod::ExactTable),
                SampleMethod::Rejection => {
                    BulkMethod::Conditioned(ConditionedMethod::Rejection { max_attempts: *max_attempts })
                }
                SampleMethod::Uniform => BulkMethod::UniformPlane,
            };
            let trees = sampler::sample_many(
                &family.family,
                usize_arg(*n),
                usize_arg(*reps),
                RngSpec::new(*seed, *stream),
                bulk,
            )?;
            let rows = sampler::estimate_profile(&trees, usize_arg(*k));
            Ok(Outcome::ok(render_estimates(&rows, format.format)))
        }
        Verb::ReproducePaper { out } => {
            let report = report::reproduce()?;
            let text = report.to_text();
            if let Some(dir) = out {
                fs::create_dir_all(dir)?;
                fs::write(dir.join("report.txt"), &text)?;
                fs::write(dir.join("report.json"), json_text(&serde_json::to_value(&report)?))?;
            }
            Ok(Outcome { output: text, exit_code: if report.all_pass() { EXIT_OK } else { EXIT_ASSERT } })
        }
    }
}

fn render_trees(trees: &[PlaneTree], format: Format) -> String {
    match format {
        Format::Json => json_text(&serde_json::to_value(trees).expect("trees serialize")),
        Format::Csv => {
            let mut s = String::from("index,tree,height\n");
            for (i, t) in trees.iter().enumerate() {
                let _ = writeln!(s, "{i},\"{t}\",{}", t.height());
            }
            s
        }
        Format::Table => {
            let mut s = String::new();
            for t in trees {
                let _ = writeln!(s, "{t}");
            }
            let _ = writeln!(s, "{} trees", trees.len());
            s
        }
    }
}

fn render_p1(model: &OffspringModel, r: &coupling::FlowResult, format: Format) -> String {
    match format {
        Format::Json => {
            let mut v = json!({
                "property": "P1",
                "model": model_json(model),
                "n": r.n,
                "verdict": r.verdict,
                "max_flow": r.max_flow.to_string(),
            });
            if let Some(w) = &r.witness {
                v["witness"] = serde_json::to_value(&w.trees).expect("trees serialize");
                v["mu_mass"] = json!(w.mu_mass.to_string());
                v["nu_mass"] = json!(w.nu_mass.to_string());
            }
            if let Some(c) = &r.coupling {
                v["coupling"] = c
                    .iter()
                    .map(|((s, b), m)| json!({"from": s, "to": b, "mass": m.to_string()}))
                    .collect();
            }
            json_text(&v)
        }
        Format::Csv => {
            let (witness, mu, nu) = match &r.witness {
                Some(w) => {
                    let trees: Vec<String> = w.trees.iter().map(|t| t.to_string()).collect();
                    (trees.join(" "), w.mu_mass.to_string(), w.nu_mass.to_string())
                }
                None => Default::default(),
            };
            format!(
                "property,model,n,verdict,max_flow,witness,mu_mass,nu_mass\nP1,{},{},{},{},\"{witness}\",{mu},{nu}\n",
                model, r.n, r.verdict, r.max_flow
            )
        }
        Format::Table => {
            let mut s = format!("P1 {model} n={}: {} (max flow {})\n", r.n, r.verdict, r.max_flow);
            if let Some(w) = &r.witness {
                let trees: Vec<String> = w.trees.iter().map(|t| t.to_string()).collect();
                let _ = writeln!(
                    s,
                    "witness A = {{{}}}: mu(A) = {} > nu(Gamma(A)) = {}",
                    trees.join(", "),
                    w.mu_mass,
                    w.nu_mass
                );
            }
            if let Some(c) = &r.coupling {
                for ((from, to), m) in c {
                    let _ = writeln!(s, "{from:<20} -> {to:<22} {m}");
                }
            }
            s
        }
    }
}

fn render_gap(model: &OffspringModel, r: &GapReport, format: Format) -> String {
    let verdict = if r.holds { "holds" } else { "fails" };
    match format {
        Format::Json => {
            let mut v = serde_json::to_value(r).expect("reports serialize");
            v["model"] = model_json(model);
            v["verdict"] = json!(verdict);
            json_text(&v)
        }
        Format::Csv => format!(
            "property,model,n,k,lhs,rhs,gap,verdict,sign\n{},{},{},{},{},{},{},{verdict},{}\n",
            r.property, model, r.n, r.k, r.lhs, r.rhs, r.gap, r.sign
        ),
        Format::Table => {
            let rhs_label = match r.property {
                Property::Pa => format!("E W_{}(T_{})", r.k, r.n + 1),
                Property::Pb => format!("1 + {}σ²", r.k),
            };
            format!(
                "{} {model} n={} k={}: {verdict} ({})\nE W_{}(T_{}) = {} {}\n{rhs_label} = {} {}\ngap = {} {}\n",
                r.property,
                r.n,
                r.k,
                r.sign,
                r.k,
                r.n,
                r.lhs,
                approx(&r.lhs),
                r.rhs,
                approx(&r.rhs),
                r.gap,
                approx(&r.gap)
            )
        }
    }
}

fn render_estimates(rows: &[EstimateRow], format: Format) -> String {
    match format {
        Format::Json => json_text(&serde_json::to_value(rows).expect("rows serialize")),
        Format::Csv => {
            let mut s = String::from("k,mean,half_width,reps,target\n");
            for r in rows {
                let target = r.target.as_ref().map(|t| t.to_string()).unwrap_or_default();
                let _ = writeln!(s, "{},{},{},{},{target}", r.k, r.mean, r.half_width, r.reps);
            }
            s
        }
        Format::Table => {
            let mut s = format!("Monte Carlo estimates (approximate, {:.0}% half-widths)\n", sampler::CONFIDENCE * 100.0);
            for r in rows {
                let target = r.target.as_ref().map(|t| format!("  target {t}")).unwrap_or_default();
                let _ = writeln!(s, "k={:<3} ~{:.4} ± {:.4} ({} reps){target}", r.k, r.mean, r.half_width, r.reps);
            }
            s
        }
    }
}
