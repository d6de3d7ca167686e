//! Offspring laws and exact conditioned Galton-Watson distributions.
//!
//! Laws are carried as weight sequences `w_j` up to exponential tilting
//! `w_j -> a * b^j * w_j`. The distribution of the tree conditioned on its size
//! only depends on the tilting class, which lets Poisson(1) be represented by
//! the rational weights `1/j!`.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, int, ratio, Rational};
use crate::tree::{self, PlaneTree};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    /// `w_j = 2^-(j+1)`, plane trees.
    #[serde(alias = "ge", alias = "geometric")]
    GeometricHalf,
    /// `w_j = 1/j!` (Poisson(1) up to the factor `e^-1`), Cayley trees.
    #[serde(alias = "po", alias = "poisson")]
    PoissonOne,
    /// Bi(d, 1/d), d-ary trees.
    Binomial { d: usize },
    /// `p_0 = p_2 = (1 - eps)/2`, `p_1 = eps`.
    #[serde(alias = "eps")]
    Epsilon {
        #[serde(with = "rational::serde_str")]
        eps: Rational,
    },
    Custom {
        #[serde(with = "rational::serde_str_vec")]
        weights: Vec<Rational>,
        #[serde(
            default,
            with = "rational::serde_str_opt",
            skip_serializing_if = "Option::is_none"
        )]
        sigma2: Option<Rational>,
    },
}

fn is_one(r: &Rational) -> bool {
    r.is_one()
}

fn one() -> Rational {
    Rational::one()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OffspringModel {
    #[serde(flatten)]
    family: Family,
    #[serde(default = "one", skip_serializing_if = "is_one", with = "rational::serde_str")]
    tilt_scale: Rational,
    #[serde(default = "one", skip_serializing_if = "is_one", with = "rational::serde_str")]
    tilt_base: Rational,
}

impl OffspringModel {
    fn untilted(family: Family) -> Self {
        Self { family, tilt_scale: Rational::one(), tilt_base: Rational::one() }
    }

    pub fn geometric_half() -> Self {
        Self::untilted(Family::GeometricHalf)
    }

    pub fn poisson_one() -> Self {
        Self::untilted(Family::PoissonOne)
    }

    pub fn binomial(d: usize) -> Result<Self> {
        Self::from_family(Family::Binomial { d })
    }

    pub fn epsilon(eps: Rational) -> Result<Self> {
        Self::from_family(Family::Epsilon { eps })
    }

    pub fn custom(weights: Vec<Rational>, sigma2: Option<Rational>) -> Result<Self> {
        Self::from_family(Family::Custom { weights, sigma2 })
    }

    /// Validates the family parameters; custom weights lose trailing zeros.
    pub fn from_family(family: Family) -> Result<Self> {
        let family = match family {
            Family::Binomial { d } if d < 2 => {
                return Err(Error::InvalidModel(format!("binomial d must be >= 2, got {d}")))
            }
            Family::Epsilon { eps } if !(eps.is_positive() && eps < Rational::one()) => {
                return Err(Error::InvalidModel(format!("eps must satisfy 0 < eps < 1, got {eps}")))
            }
            Family::Custom { mut weights, sigma2 } => {
                if weights.iter().any(|w| w.is_negative()) {
                    return Err(Error::InvalidModel("custom weights must be nonnegative".into()));
                }
                while weights.last().is_some_and(|w| w.is_zero()) {
                    weights.pop();
                }
                if weights.first().is_none_or(|w| w.is_zero()) {
                    return Err(Error::InvalidModel("custom weights need w_0 > 0".into()));
                }
                if sigma2.as_ref().is_some_and(|s| s.is_negative()) {
                    return Err(Error::InvalidModel("sigma2 must be nonnegative".into()));
                }
                Family::Custom { weights, sigma2 }
            }
            other => other,
        };
        Ok(Self::untilted(family))
    }

    /// Re-validates a deserialized model.
    pub fn validated(self) -> Result<Self> {
        let Self { family, tilt_scale, tilt_base } = self;
        let model = Self::from_family(family)?;
        model.tilt(&tilt_scale, &tilt_base)
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn is_tilted(&self) -> bool {
        !(self.tilt_scale.is_one() && self.tilt_base.is_one())
    }

    /// The model with weights `a * b^j * w_j`.
    pub fn tilt(&self, a: &Rational, b: &Rational) -> Result<Self> {
        if !a.is_positive() || !b.is_positive() {
            return Err(Error::InvalidModel(format!("tilt factors must be positive, got a={a}, b={b}")));
        }
        Ok(Self {
            family: self.family.clone(),
            tilt_scale: &self.tilt_scale * a,
            tilt_base: &self.tilt_base * b,
        })
    }

    fn family_weight(&self, j: usize) -> Rational {
        match &self.family {
            Family::GeometricHalf => Rational::new(BigInt::one(), BigInt::from(2u32).pow(j as u32 + 1)),
            Family::PoissonOne => {
                let fact = (1..=j).fold(BigInt::one(), |acc, i| acc * BigInt::from(i));
                Rational::new(BigInt::one(), fact)
            }
            Family::Binomial { d } => {
                let d = *d;
                if j > d {
                    return Rational::zero();
                }
                let choose = binomial_coefficient(d, j);
                Rational::from_integer(choose)
                    * rational::pow(&ratio(1, d as i64), j)
                    * rational::pow(&ratio(d as i64 - 1, d as i64), d - j)
            }
            Family::Epsilon { eps } => match j {
                0 | 2 => (Rational::one() - eps) / int(2),
                1 => eps.clone(),
                _ => Rational::zero(),
            },
            Family::Custom { weights, .. } => weights.get(j).cloned().unwrap_or_else(Rational::zero),
        }
    }

    /// Weight `w_j` of outdegree `j`.
    pub fn weight(&self, j: usize) -> Rational {
        let w = self.family_weight(j);
        if w.is_zero() || !self.is_tilted() {
            return w;
        }
        w * &self.tilt_scale * rational::pow(&self.tilt_base, j)
    }

    /// Largest outdegree with nonzero weight, `None` for infinite support.
    pub fn max_degree(&self) -> Option<usize> {
        match &self.family {
            Family::GeometricHalf | Family::PoissonOne => None,
            Family::Binomial { d } => Some(*d),
            Family::Epsilon { .. } => Some(2),
            Family::Custom { weights, .. } => Some(weights.len() - 1),
        }
    }

    pub fn supports_degree(&self, j: usize) -> bool {
        self.max_degree().is_none_or(|m| j <= m) && !self.weight(j).is_zero()
    }

    /// `sum_j w_j` for finite support.
    pub fn total_weight(&self) -> Option<Rational> {
        let m = self.max_degree()?;
        Some((0..=m).map(|j| self.weight(j)).sum())
    }

    /// Mean of the law proportional to the weights; `None` when it diverges.
    pub fn mean(&self) -> Option<Rational> {
        match (&self.family, self.max_degree()) {
            // Ge(1/2) tilted by b has ratio q = b/2 and mean q/(1-q)
            (Family::GeometricHalf, _) => {
                let q = &self.tilt_base / int(2);
                if q >= Rational::one() {
                    return None;
                }
                Some(&q / (Rational::one() - &q))
            }
            // Poisson tilted by b is Poisson(b)
            (Family::PoissonOne, _) => Some(self.tilt_base.clone()),
            (_, Some(m)) => {
                let total = self.total_weight().expect("finite support");
                let first: Rational = (0..=m).map(|j| int(j as i64) * self.weight(j)).sum();
                Some(first / total)
            }
            _ => unreachable!("only the geometric and Poisson families have infinite support"),
        }
    }

    /// Whether the law proportional to the weights has mean 1.
    pub fn is_critical(&self) -> bool {
        self.mean().is_some_and(|m| m.is_one())
    }

    /// Whether the weights are themselves a probability law usable for sampling.
    /// The untilted Poisson weights `1/j!` count as Poisson(1).
    pub fn is_normalized(&self) -> bool {
        match &self.family {
            Family::GeometricHalf | Family::PoissonOne => !self.is_tilted(),
            _ => self.total_weight().is_some_and(|t| t.is_one()),
        }
    }

    /// Variance of the critical law in the tilting class.
    ///
    /// Named families carry it as metadata. For custom weights an explicit
    /// value wins; otherwise it is computed when the weights are a critical law.
    pub fn sigma2(&self) -> Result<Rational> {
        match &self.family {
            Family::GeometricHalf => Ok(int(2)),
            Family::PoissonOne => Ok(int(1)),
            Family::Binomial { d } => Ok(Rational::one() - ratio(1, *d as i64)),
            Family::Epsilon { eps } => Ok(Rational::one() - eps),
            Family::Custom { sigma2: Some(s), .. } => Ok(s.clone()),
            Family::Custom { weights, sigma2: None } => {
                if self.is_tilted() || !self.is_normalized() || !self.is_critical() {
                    return Err(Error::Sigma2Unavailable);
                }
                let second: Rational = weights
                    .iter()
                    .enumerate()
                    .map(|(j, w)| int((j * j) as i64) * w)
                    .sum();
                Ok(second - Rational::one())
            }
        }
    }

    /// Short human label, e.g. `eps(1/10)` or `Bi(2,1/2)`.
    pub fn label(&self) -> String {
        let base = match &self.family {
            Family::GeometricHalf => "Ge(1/2)".to_string(),
            Family::PoissonOne => "Po(1)".to_string(),
            Family::Binomial { d } => format!("Bi({d},1/{d})"),
            Family::Epsilon { eps } => format!("eps({eps})"),
            Family::Custom { weights, .. } => {
                let w: Vec<String> = weights.iter().map(|w| w.to_string()).collect();
                format!("custom[{}]", w.join(","))
            }
        };
        if self.is_tilted() {
            format!("{base}*tilt({},{})", self.tilt_scale, self.tilt_base)
        } else {
            base
        }
    }
}

impl fmt::Display for OffspringModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

fn binomial_coefficient(n: usize, k: usize) -> BigInt {
    (0..k).fold(BigInt::one(), |acc, i| acc * BigInt::from(n - i) / BigInt::from(i + 1))
}

/// `prod_v w_{d(v)}` over the vertices of `t`.
pub fn weight(model: &OffspringModel, t: &PlaneTree) -> Rational {
    let mut acc = Rational::one();
    for &d in t.code() {
        let w = model.weight(d);
        if w.is_zero() {
            return w;
        }
        acc *= w;
    }
    acc
}

/// Exact law of the tree conditioned on having `n` vertices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConditionedDist {
    pub n: usize,
    pub model: OffspringModel,
    pub probs: BTreeMap<PlaneTree, Rational>,
}

impl ConditionedDist {
    pub fn prob(&self, t: &PlaneTree) -> Rational {
        self.probs.get(t).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn support(&self) -> impl Iterator<Item = &PlaneTree> {
        self.probs.keys()
    }

    pub fn total(&self) -> Rational {
        self.probs.values().sum()
    }

    /// `E W_k(T_n)`.
    pub fn expected_width(&self, k: usize) -> Rational {
        self.probs
            .iter()
            .map(|(t, p)| p * int(t.level_width(k) as i64))
            .sum()
    }

    pub fn expected_profile(&self, kmax: usize) -> Vec<Rational> {
        let mut out = vec![Rational::zero(); kmax + 1];
        for (t, p) in &self.probs {
            for (k, w) in t.profile().into_iter().enumerate().take(kmax + 1) {
                out[k] += p * int(w as i64);
            }
        }
        out
    }
}

pub fn conditioned_dist(model: &OffspringModel, n: usize) -> Result<ConditionedDist> {
    if n == 0 {
        return Err(Error::InvalidArgument("tree size must be >= 1".into()));
    }
    let weighted: Vec<(PlaneTree, Rational)> = tree::enumerate_with(n, |d| model.supports_degree(d))
        .into_iter()
        .map(|t| {
            let w = weight(model, &t);
            (t, w)
        })
        .collect();
    // summed in canonical order
    let total: Rational = weighted.iter().map(|(_, w)| w).sum();
    if !total.is_positive() {
        return Err(Error::ZeroMass { n });
    }
    let probs = weighted.into_iter().map(|(t, w)| (t, w / &total)).collect();
    Ok(ConditionedDist { n, model: model.clone(), probs })
}

/// `(E W_0(T_n), ..., E W_kmax(T_n))`.
pub fn expected_profile(model: &OffspringModel, n: usize, kmax: usize) -> Result<Vec<Rational>> {
    Ok(conditioned_dist(model, n)?.expected_profile(kmax))
}

/// Size-biased law `P(xi_hat = j) = j p_j` for a finite-support critical law.
pub fn size_biased(model: &OffspringModel) -> Result<BTreeMap<usize, Rational>> {
    let Some(m) = model.max_degree() else {
        return Err(Error::InfiniteSupport("no finite exact size-biased table"));
    };
    if !model.is_normalized() {
        return Err(Error::NotNormalized {
            total: model.total_weight().expect("finite support").to_string(),
        });
    }
    if !model.is_critical() {
        return Err(Error::NotCritical {
            mean: model.mean().map_or_else(|| "infinite".into(), |m| m.to_string()),
        });
    }
    Ok((1..=m)
        .map(|j| (j, int(j as i64) * model.weight(j)))
        .filter(|(_, p)| !p.is_zero())
        .collect())
}

/// `E W_k(T_inf) = 1 + k sigma^2`.
pub fn limit_profile(model: &OffspringModel, k: usize) -> Result<Rational> {
    Ok(Rational::one() + int(k as i64) * model.sigma2()?)
}

pub fn tilt(model: &OffspringModel, a: &Rational, b: &Rational) -> Result<OffspringModel> {
    model.tilt(a, b)
}
