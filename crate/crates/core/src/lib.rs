//! Exact analysis of conditioned Galton-Watson trees.
//!
//! * [`tree`]: plane trees in preorder-outdegree form, enumeration, profiles and
//!   the leaf-insertion relation.
//! * [`model`]: offspring laws, exact conditioned distributions and expected
//!   profiles in rational arithmetic.
//! * [`coupling`]: exact max-flow feasibility of monotone couplings
//!   `T_n ⊂ T_{n+1}`, profile monotonicity checks and threshold scans.
//! * [`sampler`]: Monte Carlo samplers, including the truncated size-biased tree.
//! * [`cli`] and [`report`]: the `gw-monotone` command-line front end.

pub mod cli;
pub mod coupling;
pub mod error;
pub mod model;
pub mod rational;
pub mod report;
pub mod sampler;
pub mod tree;

pub use coupling::{check_p1, check_pa, check_pb, FlowResult, Verdict};
pub use error::{Error, Result};
pub use model::{conditioned_dist, ConditionedDist, OffspringModel};
pub use rational::Rational;
pub use tree::PlaneTree;
