//! Statistic and parameter vectors, index-aligned to a model's term list.

use serde::{Deserialize, Serialize};

use crate::error::{ErnmError, Result};

macro_rules! aligned_vector {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
        pub struct $name(pub Vec<f64>);

        impl $name {
            pub fn zeros(len: usize) -> Self {
                Self(vec![0.0; len])
            }

            pub fn len(&self) -> usize {
                self.0.len()
            }

            pub fn is_empty(&self) -> bool {
                self.0.is_empty()
            }

            pub fn as_slice(&self) -> &[f64] {
                &self.0
            }

            pub fn iter(&self) -> std::slice::Iter<'_, f64> {
                self.0.iter()
            }

            /// All entries finite?
            pub fn is_finite(&self) -> bool {
                self.0.iter().all(|v| v.is_finite())
            }

            pub fn check_len(&self, expected: usize) -> Result<()> {
                if self.len() == expected {
                    Ok(())
                } else {
                    Err(ErnmError::LengthMismatch {
                        expected,
                        got: self.len(),
                    })
                }
            }
        }

        impl From<Vec<f64>> for $name {
            fn from(v: Vec<f64>) -> Self {
                Self(v)
            }
        }

        impl std::ops::Index<usize> for $name {
            type Output = f64;
            fn index(&self, i: usize) -> &f64 {
                &self.0[i]
            }
        }

        impl std::ops::IndexMut<usize> for $name {
            fn index_mut(&mut self, i: usize) -> &mut f64 {
                &mut self.0[i]
            }
        }
    };
}

aligned_vector!(
    /// Sufficient statistics g(y, x), one entry per model term.
    StatVector
);

aligned_vector!(
    /// Natural parameters, one entry per model term.
    ParamVector
);

impl StatVector {
    /// `self += delta`, used to track statistics incrementally along a chain.
    pub fn add_assign(&mut self, delta: &[f64]) {
        debug_assert_eq!(self.0.len(), delta.len());
        for (a, b) in self.0.iter_mut().zip(delta) {
            *a += b;
        }
    }

    pub fn sub(&self, other: &StatVector) -> StatVector {
        StatVector(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a - b)
                .collect(),
        )
    }
}

impl ParamVector {
    /// Inner product with a statistic vector (or change-statistic slice).
    pub fn dot(&self, stats: &[f64]) -> f64 {
        debug_assert_eq!(self.0.len(), stats.len());
        self.0.iter().zip(stats).map(|(a, b)| a * b).sum()
    }

    pub fn sub(&self, other: &ParamVector) -> ParamVector {
        ParamVector(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a - b)
                .collect(),
        )
    }
}

/// Compensated (Kahan) summation; keeps fold results stable when draw-level
/// contributions are merged in arbitrary order.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    pub fn add(&mut self, value: f64) {
        let y = value - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}
