//! Probability distributions attached to sampling variables.

use std::fmt;

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::Rational;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Distribution {
    /// Finitely supported: `(value, probability)` pairs.
    Finite(Vec<(Rational, Rational)>),
    /// Continuous uniform on `[lo, hi]`.
    Uniform { lo: Rational, hi: Rational },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DistError {
    #[error("probabilities sum to {0}")]
    BadSum(Rational),
    #[error("probability {0} is not positive")]
    NonPositive(Rational),
    #[error("empty support")]
    Empty,
    /// Lower and upper bound.
    #[error("uniform bounds {} >= {}", .0.0, .0.1)]
    BadUniform(Box<(Rational, Rational)>),
}

impl Distribution {
    pub fn check(&self) -> Result<(), DistError> {
        match self {
            Distribution::Finite(pairs) => {
                if pairs.is_empty() {
                    return Err(DistError::Empty);
                }
                let mut sum = Rational::zero();
                for (_, p) in pairs {
                    if !p.is_positive() {
                        return Err(DistError::NonPositive(p.clone()));
                    }
                    sum += p;
                }
                if !sum.is_one() {
                    return Err(DistError::BadSum(sum));
                }
                Ok(())
            }
            Distribution::Uniform { lo, hi } => {
                if lo >= hi {
                    Err(DistError::BadUniform(Box::new((lo.clone(), hi.clone()))))
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Smallest and largest value in the support.
    pub fn support_range(&self) -> (Rational, Rational) {
        match self {
            Distribution::Finite(pairs) => {
                let lo = pairs.iter().map(|(v, _)| v).min().cloned();
                let hi = pairs.iter().map(|(v, _)| v).max().cloned();
                (lo.unwrap_or_default(), hi.unwrap_or_default())
            }
            Distribution::Uniform { lo, hi } => (lo.clone(), hi.clone()),
        }
    }

    /// Exact k-th raw moment `E[X^k]`.
    pub fn moment(&self, k: u32) -> Rational {
        if k == 0 {
            return Rational::one();
        }
        match self {
            Distribution::Finite(pairs) => pairs
                .iter()
                .map(|(v, p)| p * num_traits::pow(v.clone(), k as usize))
                .fold(Rational::zero(), |acc, t| acc + t),
            Distribution::Uniform { lo, hi } => {
                let k1 = k as usize + 1;
                let num = num_traits::pow(hi.clone(), k1) - num_traits::pow(lo.clone(), k1);
                num / (Rational::from_integer((k1 as i64).into()) * (hi - lo))
            }
        }
    }

    pub fn mean(&self) -> Rational {
        self.moment(1)
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Distribution::Finite(pairs) => {
                write!(f, "finite {{ ")?;
                for (i, (v, p)) in pairs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{v} : {p}")?;
                }
                write!(f, " }}")
            }
            Distribution::Uniform { lo, hi } => write!(f, "uniform({lo}, {hi})"),
        }
    }
}
