//! Acceptance suite: one line per criterion, each timed against its budget.
//!
//! Run with `cargo test -p gw-monotone --test acceptance`. Exits nonzero if
//! any criterion fails.

mod common;

use std::collections::BTreeSet;
use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

use gw_monotone::coupling::{self, FlowProblem, GapSign, Property, Verdict};
use gw_monotone::model::{self, OffspringModel};
use gw_monotone::rational::{int, ratio, to_f64, Rational};
use gw_monotone::sampler::{self, BulkMethod, RngSpec, SpineConfig};
use gw_monotone::tree::{self, PlaneTree};
use num_traits::{One, Signed, Zero};

type Outcome = Result<String, String>;

fn t(code: &[usize]) -> PlaneTree {
    PlaneTree::from_code(code.to_vec()).unwrap()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond { Ok(()) } else { Err(msg()) }
}

fn fail<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn enumeration() -> Outcome {
    let three = tree::enumerate(3, Some(2));
    ensure(three == [t(&[1, 1, 0]), t(&[2, 0, 0])], || format!("enumerate(3, 2) = {three:?}"))?;
    let four: BTreeSet<PlaneTree> = tree::enumerate(4, Some(2)).into_iter().collect();
    let want = BTreeSet::from([t(&[1, 1, 1, 0]), t(&[1, 2, 0, 0]), t(&[2, 1, 0, 0]), t(&[2, 0, 1, 0])]);
    ensure(four == want && tree::enumerate(4, Some(2)).len() == 4, || format!("enumerate(4, 2) = {four:?}"))?;
    for n in 1..=10 {
        let count = tree::enumerate(n, None).len() as u64;
        ensure(count == common::catalan(n - 1), || format!("n={n}: {count} trees"))?;
    }
    Ok("binary sets for n = 3, 4 exact; Catalan counts for n <= 10".into())
}

fn probabilities() -> Outcome {
    let m = OffspringModel::epsilon(ratio(1, 10)).map_err(fail)?;
    let d3 = model::conditioned_dist(&m, 3).map_err(fail)?;
    let d4 = model::conditioned_dist(&m, 4).map_err(fail)?;
    let expected = [
        (&d3, t(&[1, 1, 0]), ratio(4, 85)),
        (&d3, t(&[2, 0, 0]), ratio(81, 85)),
        (&d4, t(&[1, 1, 1, 0]), ratio(4, 247)),
        (&d4, t(&[1, 2, 0, 0]), ratio(81, 247)),
        (&d4, t(&[2, 1, 0, 0]), ratio(81, 247)),
        (&d4, t(&[2, 0, 1, 0]), ratio(81, 247)),
    ];
    for (dist, tr, p) in &expected {
        ensure(dist.prob(tr) == *p, || format!("P({tr}) = {}, expected {p}", dist.prob(tr)))?;
    }
    for (n, dist) in [(3, &d3), (4, &d4)] {
        let oracle = common::brute_force_dist(&m, n);
        let got: Vec<(Vec<usize>, Rational)> = dist.probs.iter().map(|(t, p)| (t.code().to_vec(), p.clone())).collect();
        ensure(got == oracle.into_iter().collect::<Vec<_>>(), || format!("n={n} differs from brute force"))?;
    }
    // leading-order terms: 4 eps^2 and 1/3, checked at a small eps
    let e = ratio(1, 1000);
    let small = OffspringModel::epsilon(e.clone()).map_err(fail)?;
    let p3 = model::conditioned_dist(&small, 3).map_err(fail)?.prob(&t(&[1, 1, 0]));
    let p4 = model::conditioned_dist(&small, 4).map_err(fail)?.prob(&t(&[1, 2, 0, 0]));
    let e2 = &e * &e;
    ensure((&p3 - int(4) * &e2).abs() <= int(10) * &e2 * &e, || format!("P(T_3=t_1) = {p3} at eps=1/1000"))?;
    ensure((&p4 - ratio(1, 3)).abs() <= e2, || format!("P(T_4=t_4) = {p4} at eps=1/1000"))?;
    Ok("4/85, 81/85, 4/247, 3 x 81/247 exact and equal to brute force".into())
}

fn profile_expectations() -> Outcome {
    let m = OffspringModel::epsilon(ratio(1, 10)).map_err(fail)?;
    let w3 = model::conditioned_dist(&m, 3).map_err(fail)?.expected_width(1);
    let w4 = model::conditioned_dist(&m, 4).map_err(fail)?.expected_width(1);
    ensure(w3 == ratio(166, 85), || format!("E W_1(T_3) = {w3}"))?;
    ensure(w4 == ratio(409, 247), || format!("E W_1(T_4) = {w4}"))?;
    let pa = coupling::check_pa(&m, 3, 1).map_err(fail)?;
    ensure(!pa.holds && pa.sign == GapSign::Fails, || format!("check_pa reports {:?}", pa.sign))?;
    Ok(format!("E W_1(T_3) = {w3} > E W_1(T_4) = {w4}; Pa FAILS (gap {})", pa.gap))
}

fn thresholds() -> Outcome {
    let pa = |e: &Rational| coupling::gap_at(Property::Pa, e, 3, 1).map_err(fail);
    let edge = pa(&ratio(1, 3))?;
    ensure(edge.gap.is_zero(), || format!("Pa gap at 1/3 = {}", edge.gap))?;
    let below = [ratio(1, 100), ratio(1, 20), ratio(1, 10), ratio(1, 5), ratio(1, 4), ratio(3, 10), ratio(33, 100)];
    for e in &below {
        let g = pa(e)?.gap;
        ensure(g < Rational::zero(), || format!("Pa gap at {e} = {g}"))?;
    }
    let above = [ratio(34, 100), ratio(7, 20), ratio(2, 5), ratio(9, 20), ratio(1, 2)];
    for e in &above {
        let g = pa(e)?.gap;
        ensure(g >= Rational::zero(), || format!("Pa gap at {e} = {g}"))?;
    }
    let pb = coupling::gap_at(Property::Pb, &ratio(1, 5), 3, 1).map_err(fail)?;
    ensure(pb.gap.is_zero(), || format!("Pb gap at 1/5 = {}", pb.gap))?;
    Ok(format!(
        "Pa gap 0 at 1/3, < 0 at {} points below, >= 0 at {} points above; Pb gap 0 at 1/5",
        below.len(),
        above.len()
    ))
}

fn p1_infeasibility() -> Outcome {
    let m = OffspringModel::epsilon(ratio(1, 10)).map_err(fail)?;
    let r = coupling::check_p1(&m, 3).map_err(fail)?;
    ensure(r.verdict == Verdict::Infeasible, || "verdict is feasible".into())?;
    let w = r.witness.as_ref().ok_or("no witness")?;
    ensure(w.trees == BTreeSet::from([t(&[2, 0, 0])]), || format!("witness {:?}", w.trees))?;
    ensure(w.mu_mass == ratio(81, 85) && w.nu_mass == ratio(162, 247), || {
        format!("masses {} vs {}", w.mu_mass, w.nu_mass)
    })?;
    // recompute Gamma(A) by deletions, independently of the flow network
    let nu = model::conditioned_dist(&m, 4).map_err(fail)?;
    let gamma: Rational = nu
        .probs
        .iter()
        .filter(|(b, _)| b.deletions().unwrap().iter().any(|s| w.trees.contains(s)))
        .map(|(_, p)| p.clone())
        .sum();
    ensure(gamma == ratio(162, 247), || format!("independent nu(Gamma(A)) = {gamma}"))?;

    let mut instances = 0;
    for model in common::model_matrix() {
        for n in 1..=6 {
            let p = FlowProblem::new(
                model::conditioned_dist(&model, n).map_err(fail)?,
                model::conditioned_dist(&model, n + 1).map_err(fail)?,
            )
            .map_err(fail)?;
            let flow = p.solve().map_err(fail)?.verdict == Verdict::Feasible;
            let hall = common::brute_force_hall(&p.mu, &p.nu);
            ensure(flow == hall, || format!("{model} n={n}: flow {flow}, Hall {hall}"))?;
            instances += 1;
        }
    }
    Ok(format!("witness {{[2,0,0]}}: 81/85 > 162/247; flow = Hall on {instances} instances"))
}

fn binomial_feasibility() -> Outcome {
    let mut done = Vec::new();
    for (d, nmax) in [(2, 7), (3, 6)] {
        let model = OffspringModel::binomial(d).map_err(fail)?;
        for n in 1..=nmax {
            let p = FlowProblem::new(
                model::conditioned_dist(&model, n).map_err(fail)?,
                model::conditioned_dist(&model, n + 1).map_err(fail)?,
            )
            .map_err(fail)?;
            let r = p.solve().map_err(fail)?;
            ensure(r.verdict == Verdict::Feasible, || format!("{model} n={n} infeasible"))?;
            r.validate(&p).map_err(fail)?;
            // marginals and support, recomputed here
            let c = r.coupling.as_ref().ok_or("missing coupling")?;
            for (s, mass) in &p.mu.probs {
                let row: Rational = c.iter().filter(|((a, _), _)| a == s).map(|(_, m)| m.clone()).sum();
                ensure(row == *mass, || format!("{model} n={n}: row {s}"))?;
            }
            for (b, mass) in &p.nu.probs {
                let col: Rational = c.iter().filter(|((_, x), _)| x == b).map(|(_, m)| m.clone()).sum();
                ensure(col == *mass, || format!("{model} n={n}: column {b}"))?;
            }
            for ((s, b), m) in c {
                ensure(*m >= Rational::zero() && b.deletions().unwrap().contains(s), || {
                    format!("{model} n={n}: bad entry ({s}, {b})")
                })?;
            }
        }
        done.push(format!("Bi({d}) n<={nmax}"));
    }
    Ok(format!("feasible with validated couplings: {}", done.join(", ")))
}

fn strict_binary() -> Outcome {
    let binary = OffspringModel::binomial(2).map_err(fail)?;
    let strict = OffspringModel::custom(vec![ratio(1, 2), int(0), ratio(1, 2)], None).map_err(fail)?;
    for n in 1..=6 {
        let small = model::conditioned_dist(&binary, n).map_err(fail)?;
        let full = model::conditioned_dist(&strict, 2 * n + 1).map_err(fail)?;
        for k in 0..=4 {
            let lhs = full.expected_width(k + 1);
            let rhs = int(2) * small.expected_width(k);
            ensure(lhs == rhs, || format!("n={n} k={k}: {lhs} != {rhs}"))?;
        }
    }
    Ok("E W_{k+1}(T~_{2n+1}) = 2 E W_k(T_n) for n <= 6, k <= 4".into())
}

fn simulation() -> Outcome {
    let mut parts = Vec::new();
    for (model, k, target, seed) in [
        (OffspringModel::binomial(2).map_err(fail)?, 1, ratio(3, 2), 1),
        (OffspringModel::geometric_half(), 2, int(5), 2),
    ] {
        let config = SpineConfig { model: model.clone(), depth: 6, replications: 100_000, rng: RngSpec::new(seed, 0) };
        let run = sampler::sample_spine(&config).map_err(fail)?;
        let row = &run.estimate.rows[k];
        ensure(row.target.as_ref() == Some(&target), || format!("{model}: target {:?}", row.target))?;
        ensure(row.covers(to_f64(&target), 1.0), || {
            format!("{model}: E W_{k} = {:.4} +/- {:.4}, target {target}", row.mean, row.half_width)
        })?;
        parts.push(format!("{model} E W_{k} = {:.4} +/- {:.4} (target {target})", row.mean, row.half_width));
    }
    let ge = OffspringModel::geometric_half();
    let trees = sampler::sample_many(&ge, 200, 10_000, RngSpec::new(3, 0), BulkMethod::UniformPlane).map_err(fail)?;
    let row = &sampler::estimate_profile(&trees, 1)[1];
    ensure(row.covers(3.0, 3.0), || format!("uniform n=200: E W_1 = {:.4} +/- {:.4}", row.mean, row.half_width))?;
    parts.push(format!("uniform n=200 E W_1 = {:.4} +/- {:.4}", row.mean, row.half_width));
    Ok(parts.join("; "))
}

fn invariants() -> Outcome {
    let factors = [ratio(1, 2), int(1), int(2), int(3)];
    let models = common::model_matrix();
    for m in &models {
        for n in 1..=8 {
            let base = model::conditioned_dist(m, n).map_err(fail)?;
            ensure(base.total() == Rational::one(), || format!("{m} n={n}: total {}", base.total()))?;
            let profile = base.expected_profile(n);
            ensure(profile.iter().sum::<Rational>() == int(n as i64), || format!("{m} n={n}: profile mass"))?;
            for a in &factors {
                for b in &factors {
                    let tilted = model::conditioned_dist(&model::tilt(m, a, b).map_err(fail)?, n).map_err(fail)?;
                    ensure(tilted.probs == base.probs, || format!("{m} n={n} tilt ({a}, {b})"))?;
                }
            }
        }
        // sum_j (j - 1) P(xi^ = j); finite laws exactly, infinite ones by partial sums
        let s2 = m.sigma2().map_err(fail)?;
        match m.max_degree() {
            Some(_) => {
                let hat = model::size_biased(m).map_err(fail)?;
                let excess: Rational = hat.iter().map(|(j, p)| int(*j as i64 - 1) * p).sum();
                ensure(excess == s2, || format!("{m}: size-bias gives {excess}, sigma^2 {s2}"))?;
            }
            None => {
                let jmax = 40;
                let num: Rational = (1..=jmax).map(|j| int((j * (j - 1)) as i64) * m.weight(j)).sum();
                let den: Rational = (0..=jmax).map(|j| m.weight(j)).sum();
                let approx = to_f64(&(num / den));
                ensure((approx - to_f64(&s2)).abs() < 1e-9, || format!("{m}: size-bias gives {approx}"))?;
            }
        }
    }
    for n in 1..=8 {
        for tr in tree::enumerate(n, None) {
            ensure(tr.gap_insertions().len() == 2 * n - 1, || format!("{tr}: gap count"))?;
            for big in tr.extensions(None) {
                ensure(big.deletions().map_err(fail)?.contains(&tr), || format!("{tr} -> {big}"))?;
            }
            if n >= 2 {
                for small in tr.deletions().map_err(fail)? {
                    ensure(small.extensions(None).contains(&tr), || format!("{small} -> {tr}"))?;
                }
            }
        }
    }
    Ok(format!("{} models, n <= 8, 16 tilts each; size-bias; round-trip n <= 8", models.len()))
}

fn open_probes() -> Outcome {
    let mut table = String::new();
    for model in [OffspringModel::geometric_half(), OffspringModel::poisson_one()] {
        let mut row = Vec::new();
        for n in 1..=6 {
            let p = FlowProblem::new(
                model::conditioned_dist(&model, n).map_err(fail)?,
                model::conditioned_dist(&model, n + 1).map_err(fail)?,
            )
            .map_err(fail)?;
            let r = p.solve().map_err(fail)?;
            r.validate(&p).map_err(fail)?;
            row.push(format!("n={n}:{}", r.verdict));
        }
        table.push_str(&format!("\n       {:<8} {}", model.to_string(), row.join(" ")));
    }
    Ok(format!("verdict tables, certificates validated{table}"))
}

struct Criterion {
    id: &'static str,
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn main() {
    let secs = Duration::from_secs;
    let criteria = [
        Criterion { id: "AC1", name: "enumeration", budget: secs(1), run: enumeration },
        Criterion { id: "AC2", name: "counterexample probabilities", budget: secs(1), run: probabilities },
        Criterion { id: "AC3", name: "profile expectations", budget: secs(1), run: profile_expectations },
        Criterion { id: "AC4", name: "thresholds", budget: secs(1), run: thresholds },
        Criterion { id: "AC5", name: "P1 infeasibility and Hall agreement", budget: secs(10), run: p1_infeasibility },
        Criterion { id: "AC6", name: "binomial feasibility", budget: secs(60), run: binomial_feasibility },
        Criterion { id: "AC7", name: "strict-binary correspondence", budget: secs(30), run: strict_binary },
        Criterion { id: "AC8", name: "simulation", budget: secs(120), run: simulation },
        Criterion { id: "AC9", name: "invariant suites", budget: secs(60), run: invariants },
        Criterion { id: "AC10", name: "open-problem probes", budget: secs(60), run: open_probes },
    ];
    let mut failures = Vec::new();
    for c in &criteria {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(c.run)).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > c.budget => Err(format!("over budget: {detail}")),
            other => other,
        };
        let timing = format!("{:.2}s / {}s", elapsed.as_secs_f64(), c.budget.as_secs());
        match &outcome {
            Ok(detail) => println!("[PASS] {} {} ({timing}): {detail}", c.id, c.name),
            Err(why) => {
                println!("[FAIL] {} {} ({timing}): {why}", c.id, c.name);
                failures.push(c.id);
            }
        }
    }
    if !failures.is_empty() {
        println!("failed criteria: {failures:?}");
        std::process::exit(1);
    }
    println!("all {} criteria passed", criteria.len());
}
