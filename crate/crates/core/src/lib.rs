//! Exact solvers and verification suites for Pandora's box search with
//! combinatorial inspection costs.

pub mod boxset;
pub mod corpus;
pub mod cost;
pub mod error;
pub mod hardness;
pub mod instances;
pub mod limits;
pub mod rational;
pub mod solvers;
pub mod strategies;
pub mod transforms;

pub use boxset::BoxSet;
pub use error::{Error, Result};
pub use instances::{FiniteDistribution, Instance, Problem, WeightedBernoulli};
pub use limits::Limits;
pub use rational::{Rational, Threshold};
