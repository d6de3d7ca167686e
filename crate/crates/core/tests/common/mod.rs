//! Independent oracles shared by the integration tests. None of these go
//! through the enumeration, normalization or max-flow code they check.

#![allow(dead_code)]

use std::collections::BTreeMap;

use gw_monotone::model::ConditionedDist;
use gw_monotone::rational::{self, Rational};
use gw_monotone::tree::PlaneTree;
use gw_monotone::OffspringModel;
use num_traits::{ToPrimitive, Zero};

/// Catalan numbers by the convolution recurrence.
pub fn catalan(m: usize) -> u64 {
    let mut c = vec![1u64; m + 1];
    for k in 1..=m {
        c[k] = (0..k).map(|i| c[i] * c[k - 1 - i]).sum();
    }
    c[m]
}

/// Lukasiewicz check: partial sums of `d - 1` stay >= 0 until the final -1.
pub fn is_valid_code(code: &[usize]) -> bool {
    let mut height: i64 = 0;
    for (i, &d) in code.iter().enumerate() {
        height += d as i64 - 1;
        if height < 0 {
            return i == code.len() - 1;
        }
    }
    false
}

/// Every valid code of length `n` with entries `<= dmax`, by exhaustive search
/// over all `(dmax+1)^n` sequences.
pub fn brute_force_codes(n: usize, dmax: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut code = vec![0usize; n];
    loop {
        if is_valid_code(&code) {
            out.push(code.clone());
        }
        // odometer increment
        let mut i = n;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if code[i] < dmax {
                code[i] += 1;
                break;
            }
            code[i] = 0;
        }
    }
}

/// Conditioned law by product-and-normalize over brute-forced codes.
pub fn brute_force_dist(model: &OffspringModel, n: usize) -> BTreeMap<Vec<usize>, Rational> {
    let dmax = model.max_degree().map_or(n - 1, |m| m.min(n - 1));
    let weighted: Vec<(Vec<usize>, Rational)> = brute_force_codes(n, dmax)
        .into_iter()
        .map(|code| {
            let w = code.iter().fold(rational::int(1), |acc, &d| acc * model.weight(d));
            (code, w)
        })
        .filter(|(_, w)| !w.is_zero())
        .collect();
    let total: Rational = weighted.iter().map(|(_, w)| w).sum();
    weighted.into_iter().map(|(c, w)| (c, w / &total)).collect()
}

/// Exhaustive Hall check: whether `mu(A) <= nu(Gamma(A))` for every subset
/// `A` of `supp(mu)`.
///
/// Neighbourhoods come from leaf deletions on the `nu` side rather than from
/// insertions. Subsets are explored by include/exclude branching. A branch is
/// cut only when no completion can violate the inequality: each uncovered
/// `nu` tree charges its mass equally to the remaining `mu` trees adjacent to
/// it, and any completion gains at most the positive parts of mass minus
/// charge.
pub fn brute_force_hall(mu: &ConditionedDist, nu: &ConditionedDist) -> bool {
    let small: Vec<&PlaneTree> = mu.probs.keys().collect();
    let big: Vec<&PlaneTree> = nu.probs.keys().collect();
    let scale = rational::common_denominator(mu.probs.values().chain(nu.probs.values()));
    let scaled = |r: &Rational| -> i128 {
        (r * Rational::from_integer(scale.clone()))
            .to_integer()
            .to_i128()
            .expect("scaled mass fits in i128")
    };
    let mut neighbours = vec![Vec::new(); small.len()];
    for (j, b) in big.iter().enumerate() {
        for s in b.deletions().expect("size >= 2") {
            if let Some(i) = small.iter().position(|t| **t == s) {
                neighbours[i].push(j);
            }
        }
    }
    let mut order: Vec<(i128, Vec<usize>)> =
        small.iter().map(|t| scaled(&mu.probs[*t])).zip(neighbours).collect();
    order.sort_by_key(|entry| std::cmp::Reverse(entry.0));

    // remaining[i][b] = number of mu trees at positions >= i adjacent to b
    let mut remaining = vec![vec![0i128; big.len()]; order.len() + 1];
    for i in (0..order.len()).rev() {
        remaining[i] = remaining[i + 1].clone();
        for &b in &order[i].1 {
            remaining[i][b] += 1;
        }
    }
    // masses are multiplied by `lcm` so that every charge is an integer
    let lcm = (1..=small.len().max(1) as i128).fold(1i128, |acc, d| acc / gcd(acc, d) * d);
    let search = Search {
        order: order.iter().map(|(m, nb)| (m.checked_mul(lcm).expect("mass fits in i128"), nb.clone())).collect(),
        big_mass: big.iter().map(|t| scaled(&nu.probs[*t]).checked_mul(lcm).expect("mass fits in i128")).collect(),
        remaining,
    };
    !search.violates(0, 0, &mut vec![false; big.len()])
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 { a } else { gcd(b, a % b) }
}

struct Search {
    order: Vec<(i128, Vec<usize>)>,
    big_mass: Vec<i128>,
    remaining: Vec<Vec<i128>>,
}

impl Search {
    fn violates(&self, i: usize, mass: i128, covered: &mut [bool]) -> bool {
        let cover: i128 = covered.iter().zip(&self.big_mass).filter(|(c, _)| **c).map(|(_, m)| m).sum();
        if mass > cover {
            return true;
        }
        let gain: i128 = self.order[i..]
            .iter()
            .map(|(m, nb)| {
                let charge: i128 = nb
                    .iter()
                    .filter(|&&b| !covered[b])
                    .map(|&b| self.big_mass[b] / self.remaining[i][b])
                    .sum();
                (m - charge).max(0)
            })
            .sum();
        if mass - cover + gain <= 0 {
            return false;
        }
        let (m, nb) = &self.order[i];
        let fresh: Vec<usize> = nb.iter().copied().filter(|&b| !covered[b]).collect();
        for &b in &fresh {
            covered[b] = true;
        }
        let found = self.violates(i + 1, mass + m, covered);
        for &b in &fresh {
            covered[b] = false;
        }
        found || (!fresh.is_empty() && self.violates(i + 1, mass, covered))
    }
}

/// Named models used across the test matrices.
pub fn model_matrix() -> Vec<OffspringModel> {
    let r = rational::ratio;
    vec![
        OffspringModel::epsilon(r(1, 10)).unwrap(),
        OffspringModel::epsilon(r(1, 3)).unwrap(),
        OffspringModel::epsilon(r(1, 2)).unwrap(),
        OffspringModel::epsilon(r(9, 10)).unwrap(),
        OffspringModel::binomial(2).unwrap(),
        OffspringModel::binomial(3).unwrap(),
        OffspringModel::geometric_half(),
        OffspringModel::poisson_one(),
        OffspringModel::custom(vec![r(1, 3), r(1, 3), r(1, 3)], None).unwrap(),
        OffspringModel::custom(vec![r(2, 5), r(3, 10), r(1, 5), r(1, 10)], None).unwrap(),
    ]
}
