//! Exact decision procedures for monotone growth of conditioned trees.
//!
//! * [`check_p1`] decides whether `T_n` and `T_{n+1}` can be coupled with
//!   `T_n` a leaf-deleted subtree of `T_{n+1}`. This is a transportation
//!   feasibility problem on the leaf-insertion relation, solved by an exact
//!   integer max-flow; infeasibility comes with a Hall violator read off the
//!   minimum cut.
//! * [`check_pa`] / [`check_pb`] compare expected profiles against the next
//!   size and against the limit `1 + k sigma^2`.
//! * [`threshold_scan`] locates sign changes of those gaps along the
//!   epsilon family; [`bound_scan`] measures `max E W_k(T_n) / k`.

pub mod flow;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{self, ConditionedDist, OffspringModel};
use crate::rational::{self, int, Rational};
use crate::tree::PlaneTree;

use flow::FlowNetwork;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Feasible,
    Infeasible,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Feasible => "feasible",
            Verdict::Infeasible => "infeasible",
        })
    }
}

/// Transportation problem between `T_n` and `T_{n+1}` along leaf insertions.
#[derive(Clone, Debug)]
pub struct FlowProblem {
    pub mu: ConditionedDist,
    pub nu: ConditionedDist,
    pub edges: BTreeSet<(PlaneTree, PlaneTree)>,
}

impl FlowProblem {
    pub fn new(mu: ConditionedDist, nu: ConditionedDist) -> Result<Self> {
        if nu.n != mu.n + 1 {
            return Err(Error::InvalidArgument(format!(
                "coupling needs sizes n and n+1, got {} and {}",
                mu.n, nu.n
            )));
        }
        let edges = mu
            .support()
            .flat_map(|t| {
                t.extensions(None)
                    .into_iter()
                    .filter(|big| nu.probs.contains_key(big))
                    .map(move |big| (t.clone(), big))
            })
            .collect();
        Ok(Self { mu, nu, edges })
    }

    /// `Gamma(A)`: trees in `supp(nu)` reachable from `A` by one insertion.
    pub fn neighbourhood(&self, set: &BTreeSet<PlaneTree>) -> BTreeSet<PlaneTree> {
        self.edges
            .iter()
            .filter(|(small, _)| set.contains(small))
            .map(|(_, big)| big.clone())
            .collect()
    }

    pub fn solve(&self) -> Result<FlowResult> {
        let small: Vec<&PlaneTree> = self.mu.support().collect();
        let big: Vec<&PlaneTree> = self.nu.support().collect();
        let small_idx: BTreeMap<&PlaneTree, usize> =
            small.iter().enumerate().map(|(i, t)| (*t, i)).collect();
        let big_idx: BTreeMap<&PlaneTree, usize> =
            big.iter().enumerate().map(|(i, t)| (*t, i)).collect();

        // integer capacities after clearing the common denominator
        let scale = rational::common_denominator(self.mu.probs.values().chain(self.nu.probs.values()));
        let to_int = |r: &Rational| -> BigInt { (r * Rational::from_integer(scale.clone())).to_integer() };

        let source = 0;
        let sink = 1;
        let small_node = |i: usize| 2 + i;
        let big_node = |j: usize| 2 + small.len() + j;
        let mut net = FlowNetwork::new(2 + small.len() + big.len());
        for (i, t) in small.iter().enumerate() {
            net.add_edge(source, small_node(i), to_int(&self.mu.probs[*t]));
        }
        for (j, t) in big.iter().enumerate() {
            net.add_edge(big_node(j), sink, to_int(&self.nu.probs[*t]));
        }
        // any capacity >= the total mass acts as unbounded
        let mut relation_edges = Vec::with_capacity(self.edges.len());
        for (s, b) in &self.edges {
            let (i, j) = (small_idx[s], big_idx[b]);
            let id = net.add_edge(small_node(i), big_node(j), scale.clone());
            relation_edges.push((id, s, b));
        }

        let value = net.max_flow(source, sink);
        let max_flow = Rational::new(value.clone(), scale.clone());

        let result = if max_flow.is_one() {
            let coupling = relation_edges
                .iter()
                .filter_map(|&(id, s, b)| {
                    let f = net.flow(id);
                    (!f.is_zero()).then(|| ((s.clone(), b.clone()), Rational::new(f, scale.clone())))
                })
                .collect();
            FlowResult {
                n: self.mu.n,
                verdict: Verdict::Feasible,
                max_flow,
                coupling: Some(coupling),
                witness: None,
            }
        } else {
            let reach = net.residual_reachable(source);
            let trees: BTreeSet<PlaneTree> = small
                .iter()
                .enumerate()
                .filter(|&(i, _)| reach[small_node(i)])
                .map(|(_, t)| (*t).clone())
                .collect();
            let mu_mass = trees.iter().map(|t| self.mu.prob(t)).sum();
            let nu_mass = self.neighbourhood(&trees).iter().map(|t| self.nu.prob(t)).sum();
            FlowResult {
                n: self.mu.n,
                verdict: Verdict::Infeasible,
                max_flow,
                coupling: None,
                witness: Some(Witness { trees, mu_mass, nu_mass }),
            }
        };
        result.validate(self)?;
        Ok(result)
    }
}

/// Hall violator `A` with `mu(A) > nu(Gamma(A))`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub trees: BTreeSet<PlaneTree>,
    #[serde(with = "rational::serde_str")]
    pub mu_mass: Rational,
    #[serde(with = "rational::serde_str")]
    pub nu_mass: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlowResult {
    pub n: usize,
    pub verdict: Verdict,
    pub max_flow: Rational,
    /// Joint law on insertion pairs, present iff feasible.
    pub coupling: Option<BTreeMap<(PlaneTree, PlaneTree), Rational>>,
    pub witness: Option<Witness>,
}

impl FlowResult {
    /// Checks the certificate exactly against the problem.
    pub fn validate(&self, problem: &FlowProblem) -> Result<()> {
        let fail = |msg: String| Err(Error::Invariant(msg));
        match (self.verdict, &self.coupling, &self.witness) {
            (Verdict::Feasible, Some(coupling), None) => {
                let mut rows: BTreeMap<&PlaneTree, Rational> = BTreeMap::new();
                let mut cols: BTreeMap<&PlaneTree, Rational> = BTreeMap::new();
                for ((s, b), mass) in coupling {
                    if mass.is_negative() {
                        return fail(format!("negative coupling mass on ({s}, {b})"));
                    }
                    if !problem.edges.contains(&(s.clone(), b.clone())) {
                        return fail(format!("coupling mass off the insertion relation: ({s}, {b})"));
                    }
                    *rows.entry(s).or_insert_with(Rational::zero) += mass;
                    *cols.entry(b).or_insert_with(Rational::zero) += mass;
                }
                for (t, p) in &problem.mu.probs {
                    if rows.get(t).cloned().unwrap_or_else(Rational::zero) != *p {
                        return fail(format!("row sum of {t} differs from mu"));
                    }
                }
                for (t, p) in &problem.nu.probs {
                    if cols.get(t).cloned().unwrap_or_else(Rational::zero) != *p {
                        return fail(format!("column sum of {t} differs from nu"));
                    }
                }
                Ok(())
            }
            (Verdict::Infeasible, None, Some(w)) => {
                let mu_mass: Rational = w.trees.iter().map(|t| problem.mu.prob(t)).sum();
                let nu_mass: Rational = problem
                    .neighbourhood(&w.trees)
                    .iter()
                    .map(|t| problem.nu.prob(t))
                    .sum();
                if mu_mass != w.mu_mass || nu_mass != w.nu_mass {
                    return fail("witness masses do not match the distributions".into());
                }
                if mu_mass <= nu_mass {
                    return fail(format!("witness is not a Hall violator: {mu_mass} <= {nu_mass}"));
                }
                Ok(())
            }
            _ => fail("verdict and certificate disagree".into()),
        }
    }
}

/// Decides whether `T_n` can be coupled inside `T_{n+1}` by adding one leaf.
///
/// A feasible verdict also asserts `E W_k(T_n) <= E W_k(T_{n+1})` for every `k`,
/// which any such coupling forces.
pub fn check_p1(model: &OffspringModel, n: usize) -> Result<FlowResult> {
    let mu = model::conditioned_dist(model, n)?;
    let nu = model::conditioned_dist(model, n + 1)?;
    let problem = FlowProblem::new(mu, nu)?;
    let result = problem.solve()?;
    if result.verdict == Verdict::Feasible {
        for k in 0..=n {
            let (small, big) = (problem.mu.expected_width(k), problem.nu.expected_width(k));
            if small > big {
                return Err(Error::Invariant(format!(
                    "feasible coupling at n={n} but E W_{k} decreases: {small} > {big}"
                )));
            }
        }
    }
    Ok(result)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Property {
    /// `E W_k(T_n) <= E W_k(T_{n+1})`
    #[serde(rename = "Pa")]
    Pa,
    /// `E W_k(T_n) <= 1 + k sigma^2`
    #[serde(rename = "Pb")]
    Pb,
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Property::Pa => "Pa",
            Property::Pb => "Pb",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GapSign {
    Holds,
    Boundary,
    Fails,
}

impl GapSign {
    pub fn of(gap: &Rational) -> Self {
        if gap.is_zero() {
            GapSign::Boundary
        } else if gap.is_positive() {
            GapSign::Holds
        } else {
            GapSign::Fails
        }
    }
}

impl fmt::Display for GapSign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GapSign::Holds => "holds",
            GapSign::Boundary => "boundary",
            GapSign::Fails => "fails",
        })
    }
}

/// Outcome of a profile inequality `lhs <= rhs` with the exact gap `rhs - lhs`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GapReport {
    pub property: Property,
    pub n: usize,
    pub k: usize,
    /// `E W_k(T_n)`
    #[serde(with = "rational::serde_str")]
    pub lhs: Rational,
    #[serde(with = "rational::serde_str")]
    pub rhs: Rational,
    #[serde(with = "rational::serde_str")]
    pub gap: Rational,
    pub holds: bool,
    pub sign: GapSign,
}

impl GapReport {
    fn new(property: Property, n: usize, k: usize, lhs: Rational, rhs: Rational) -> Self {
        let gap = &rhs - &lhs;
        let sign = GapSign::of(&gap);
        Self { property, n, k, lhs, rhs, holds: sign != GapSign::Fails, gap, sign }
    }
}

pub fn check_pa(model: &OffspringModel, n: usize, k: usize) -> Result<GapReport> {
    let now = model::conditioned_dist(model, n)?.expected_width(k);
    let next = model::conditioned_dist(model, n + 1)?.expected_width(k);
    Ok(GapReport::new(Property::Pa, n, k, now, next))
}

pub fn check_pb(model: &OffspringModel, n: usize, k: usize) -> Result<GapReport> {
    let limit = model::limit_profile(model, k)?;
    let now = model::conditioned_dist(model, n)?.expected_width(k);
    Ok(GapReport::new(Property::Pb, n, k, now, limit))
}

pub fn check(property: Property, model: &OffspringModel, n: usize, k: usize) -> Result<GapReport> {
    match property {
        Property::Pa => check_pa(model, n, k),
        Property::Pb => check_pb(model, n, k),
    }
}

/// Gap of `property` for the epsilon family at one rational `eps`.
pub fn gap_at(property: Property, eps: &Rational, n: usize, k: usize) -> Result<GapReport> {
    check(property, &OffspringModel::epsilon(eps.clone())?, n, k)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ScanSpec {
    Grid(Vec<Rational>),
    Bisection { lo: Rational, hi: Rational, iterations: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ScanPoint {
    #[serde(with = "rational::serde_str")]
    pub eps: Rational,
    #[serde(with = "rational::serde_str")]
    pub gap: Rational,
    pub sign: GapSign,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ThresholdReport {
    pub property: Property,
    pub n: usize,
    pub k: usize,
    pub points: Vec<ScanPoint>,
    /// A tested `eps` where the gap is exactly zero.
    #[serde(with = "rational::serde_str_opt")]
    pub boundary: Option<Rational>,
    /// Adjacent tested values with strictly opposite signs.
    #[serde(skip_serializing_if = "Option::is_none", serialize_with = "serialize_bracket")]
    pub bracket: Option<(Rational, Rational)>,
}

fn serialize_bracket<S: serde::Serializer>(
    b: &Option<(Rational, Rational)>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    match b {
        Some((lo, hi)) => s.collect_seq([lo.to_string(), hi.to_string()]),
        None => s.serialize_none(),
    }
}

/// Scans the sign of the Pa/Pb gap over the epsilon family.
pub fn threshold_scan(property: Property, n: usize, k: usize, spec: &ScanSpec) -> Result<ThresholdReport> {
    let eval = |eps: &Rational| -> Result<ScanPoint> {
        let r = gap_at(property, eps, n, k)?;
        Ok(ScanPoint { eps: eps.clone(), sign: r.sign, gap: r.gap })
    };
    let mut report = ThresholdReport { property, n, k, points: Vec::new(), boundary: None, bracket: None };

    match spec {
        ScanSpec::Grid(grid) => {
            let mut grid = grid.clone();
            grid.sort();
            grid.dedup();
            for eps in &grid {
                report.points.push(eval(eps)?);
            }
            report.boundary = report
                .points
                .iter()
                .find(|p| p.sign == GapSign::Boundary)
                .map(|p| p.eps.clone());
            report.bracket = report.points.windows(2).find_map(|w| {
                (w[0].gap.is_positive() && w[1].gap.is_negative()
                    || w[0].gap.is_negative() && w[1].gap.is_positive())
                .then(|| (w[0].eps.clone(), w[1].eps.clone()))
            });
        }
        ScanSpec::Bisection { lo, hi, iterations } => {
            if lo >= hi {
                return Err(Error::InvalidArgument(format!("empty interval [{lo}, {hi}]")));
            }
            let (mut lo, mut hi) = (eval(lo)?, eval(hi)?);
            report.points.extend([lo.clone(), hi.clone()]);
            if lo.sign == GapSign::Boundary {
                report.boundary = Some(lo.eps.clone());
            } else if hi.sign == GapSign::Boundary {
                report.boundary = Some(hi.eps.clone());
            } else if lo.sign != hi.sign {
                for _ in 0..*iterations {
                    let mid = eval(&((&lo.eps + &hi.eps) / int(2)))?;
                    report.points.push(mid.clone());
                    if mid.sign == GapSign::Boundary {
                        report.boundary = Some(mid.eps.clone());
                        break;
                    }
                    if mid.sign == lo.sign {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                if report.boundary.is_none() {
                    report.bracket = Some((lo.eps.clone(), hi.eps.clone()));
                }
            }
        }
    }

    if report.boundary.is_none() && report.bracket.is_none() {
        let sign = report.points.first().map_or("undefined", |p| rational::sign_str(&p.gap));
        return Err(Error::ConstantSign { sign });
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BoundReport {
    #[serde(with = "rational::serde_str")]
    pub max: Rational,
    pub k: usize,
    pub n: usize,
    pub kmax: usize,
    pub nmax: usize,
}

/// Exact `max E W_k(T_n) / k` over `1 <= k <= kmax`, `1 <= n <= nmax`.
///
/// Ties keep the first cell in `(n, k)` order.
pub fn bound_scan(model: &OffspringModel, kmax: usize, nmax: usize) -> Result<BoundReport> {
    if kmax == 0 || nmax == 0 {
        return Err(Error::InvalidArgument("bound scan needs kmax >= 1 and nmax >= 1".into()));
    }
    let mut best: Option<(Rational, usize, usize)> = None;
    for n in 1..=nmax {
        let profile = model::expected_profile(model, n, kmax)?;
        for (k, width) in profile.iter().enumerate().skip(1) {
            let ratio = width / int(k as i64);
            if best.as_ref().is_none_or(|(b, _, _)| ratio > *b) {
                best = Some((ratio, k, n));
            }
        }
    }
    let (max, k, n) = best.expect("grid is nonempty");
    Ok(BoundReport { max, k, n, kmax, nmax })
}
