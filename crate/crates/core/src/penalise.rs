//! Penalisation maps from relative strut density to stiffness scaling,
//! used to push intermediate densities towards 0 or 1.

use crate::error::{Error, Result};

/// Lower bound for relative densities during optimisation.
pub const RHO_MIN: f64 = 1e-6;

/// Floor applied to the penalised density before stiffness assembly so the
/// system stays numerically positive definite.
pub const STIFFNESS_FLOOR: f64 = 1e-12;

/// Map from relative density to the stiffness interpolation factor.
///
/// `Power` raises the density to a fixed exponent below 1 and continues
/// linearly above. `Bezier` follows a degree-5 Bezier curve over densities
/// in [0, 0.5] and continues with the straight line through (1, 1) that
/// matches the curve value and slope at 0.5.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Penalisation {
    Power { exponent: f64 },
    Bezier { ordinates: [f64; 6] },
}

impl Penalisation {
    pub fn power(exponent: f64) -> Result<Self> {
        if !(exponent >= 1.0) || !exponent.is_finite() {
            return Err(Error::InvalidParameter {
                what: "penalisation exponent".into(),
                value: exponent,
                expected: "finite and >= 1".into(),
            });
        }
        Ok(Penalisation::Power { exponent })
    }

    /// The three built-in Bezier variants, from mildest to strongest
    /// intermediate-density suppression. Each satisfies the slope-matching
    /// condition at the join, where the curve value is 0.30, 0.25 and 1/6.
    pub fn bezier_preset(index: usize) -> Result<Self> {
        let ordinates = match index {
            1 => [0.0, 0.0, 0.04, 0.10, 0.16, 0.30],
            2 => [0.0, 0.0, 0.0, 0.05, 0.10, 0.25],
            3 => [0.0, 0.0, 0.0, 0.0, 0.0, 1.0 / 6.0],
            _ => {
                return Err(Error::InvalidParameter {
                    what: "bezier preset".into(),
                    value: index as f64,
                    expected: "1, 2 or 3".into(),
                })
            }
        };
        Ok(Penalisation::Bezier { ordinates })
    }

    pub fn value(&self, rho: f64) -> f64 {
        match *self {
            Penalisation::Power { exponent } => {
                if rho < 1.0 {
                    rho.max(0.0).powf(exponent)
                } else {
                    rho
                }
            }
            Penalisation::Bezier { ordinates } => {
                if rho < 0.5 {
                    bernstein5(&ordinates, 2.0 * rho.max(0.0))
                } else {
                    let join = ordinates[5];
                    join + 2.0 * (1.0 - join) * (rho - 0.5)
                }
            }
        }
    }

    pub fn derivative(&self, rho: f64) -> f64 {
        match *self {
            Penalisation::Power { exponent } => {
                if rho < 1.0 {
                    exponent * rho.max(0.0).powf(exponent - 1.0)
                } else {
                    1.0
                }
            }
            Penalisation::Bezier { ordinates } => {
                if rho < 0.5 {
                    // Hodograph of the degree-5 curve, times dt/drho = 2.
                    let mut hodo = [0.0; 5];
                    for k in 0..5 {
                        hodo[k] = 5.0 * (ordinates[k + 1] - ordinates[k]);
                    }
                    2.0 * bernstein4(&hodo, 2.0 * rho.max(0.0))
                } else {
                    2.0 * (1.0 - ordinates[5])
                }
            }
        }
    }
}

fn bernstein5(b: &[f64; 6], t: f64) -> f64 {
    let s = 1.0 - t;
    let coeff = [1.0, 5.0, 10.0, 10.0, 5.0, 1.0];
    (0..6).map(|k| coeff[k] * b[k] * s.powi(5 - k as i32) * t.powi(k as i32)).sum()
}

fn bernstein4(b: &[f64; 5], t: f64) -> f64 {
    let s = 1.0 - t;
    let coeff = [1.0, 4.0, 6.0, 4.0, 1.0];
    (0..5).map(|k| coeff[k] * b[k] * s.powi(4 - k as i32) * t.powi(k as i32)).sum()
}
