//! Built-in families of initial data.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::spectral::{GridSpec, ScalarField};

/// An initial scalar field.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    Zero,
    /// `A·exp(−|x − x₀|²/(2σ²))`.
    Gaussian { amplitude: f64, sigma: f64, center: (f64, f64) },
    /// `∂₁` of a Gaussian bump; zero mass.
    Dipole { amplitude: f64, sigma: f64, center: (f64, f64) },
    /// Localized random field: a Gaussian envelope of width `sigma` times a bias plus
    /// `modes` random plane waves with wavenumbers below `k_max`.
    Random {
        seed: u64,
        modes: usize,
        k_max: f64,
        sigma: f64,
        bias: f64,
    },
}

impl InitialCondition {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        match *self {
            InitialCondition::Zero => Ok(()),
            InitialCondition::Gaussian { amplitude, sigma, center }
            | InitialCondition::Dipole { amplitude, sigma, center } => {
                if !(sigma > 0.0 && sigma.is_finite()) {
                    return bad("sigma must be positive");
                }
                if !amplitude.is_finite() || !center.0.is_finite() || !center.1.is_finite() {
                    return bad("amplitude and center must be finite");
                }
                Ok(())
            }
            InitialCondition::Random { k_max, sigma, bias, .. } => {
                if !(sigma > 0.0 && sigma.is_finite()) {
                    return bad("sigma must be positive");
                }
                if !(k_max >= 0.0 && k_max.is_finite()) || !bias.is_finite() {
                    return bad("k_max must be nonnegative and bias finite");
                }
                Ok(())
            }
        }
    }

    /// Samples the field on `grid`.
    pub fn build(&self, grid: &GridSpec) -> Result<ScalarField> {
        self.validate()?;
        let field = match *self {
            InitialCondition::Zero => ScalarField::zeros(*grid),
            InitialCondition::Gaussian { amplitude, sigma, center } => ScalarField::from_fn(*grid, |x1, x2| {
                let (d1, d2) = (x1 - center.0, x2 - center.1);
                amplitude * (-(d1 * d1 + d2 * d2) / (2.0 * sigma * sigma)).exp()
            }),
            InitialCondition::Dipole { amplitude, sigma, center } => ScalarField::from_fn(*grid, |x1, x2| {
                let (d1, d2) = (x1 - center.0, x2 - center.1);
                -amplitude * d1 / (sigma * sigma) * (-(d1 * d1 + d2 * d2) / (2.0 * sigma * sigma)).exp()
            }),
            InitialCondition::Random { seed, modes, k_max, sigma, bias } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let waves: Vec<(f64, f64, f64, f64)> = (0..modes)
                    .map(|_| {
                        let kappa = k_max * rng.gen::<f64>().sqrt();
                        let dir = 2.0 * PI * rng.gen::<f64>();
                        let phase = 2.0 * PI * rng.gen::<f64>();
                        let amp = rng.gen_range(-1.0..1.0);
                        (kappa * dir.cos(), kappa * dir.sin(), phase, amp)
                    })
                    .collect();
                ScalarField::from_fn(*grid, |x1, x2| {
                    let envelope = (-(x1 * x1 + x2 * x2) / (2.0 * sigma * sigma)).exp();
                    let osc: f64 = waves.iter().map(|&(k1, k2, ph, a)| a * (k1 * x1 + k2 * x2 + ph).cos()).sum();
                    envelope * (bias + osc)
                })
            }
        };
        Ok(field)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::make_grid;

    #[test]
    fn gaussian_mass() {
        let g = make_grid(128, 32.0).unwrap();
        let f = InitialCondition::Gaussian { amplitude: 1.0, sigma: 1.0, center: (0.0, 0.0) }
            .build(&g)
            .unwrap();
        assert!((f.mass() - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn dipole_has_zero_mass() {
        let g = make_grid(128, 32.0).unwrap();
        let f = InitialCondition::Dipole { amplitude: 1.0, sigma: 1.0, center: (0.5, -0.25) }
            .build(&g)
            .unwrap();
        assert!(f.mass().abs() < 1e-12);
        assert!(f.max_abs() > 0.5);
    }

    #[test]
    fn random_is_seeded() {
        let g = make_grid(32, 16.0).unwrap();
        let ic = |seed| InitialCondition::Random { seed, modes: 6, k_max: 1.5, sigma: 1.5, bias: 1.0 };
        let a = ic(4).build(&g).unwrap();
        assert_eq!(a, ic(4).build(&g).unwrap());
        assert_ne!(a, ic(5).build(&g).unwrap());
    }

    #[test]
    fn rejects_bad_width() {
        let g = make_grid(16, 8.0).unwrap();
        let ic = InitialCondition::Gaussian { amplitude: 1.0, sigma: 0.0, center: (0.0, 0.0) };
        assert!(ic.build(&g).is_err());
    }
}
