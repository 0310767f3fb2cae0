//! Norms, profile residuals and power-law regression.

use crate::error::{Error, Result};
use crate::kernels::{kernel_spectrum, KernelKind, Lp};
use crate::spectral::{inverse_transform, GridSpec, ScalarField};

/// `‖f‖_{L^p}` by grid sum times cell area; `Lp::Inf` is the raw grid maximum.
pub fn lp_norm(f: &ScalarField, p: Lp) -> f64 {
    let da = f.grid().cell_area();
    match p {
        Lp::Inf => f.max_abs(),
        Lp::P(p) if p == 1.0 => f.values().iter().map(|v| v.abs()).sum::<f64>() * da,
        Lp::P(p) if p == 2.0 => (f.values().iter().map(|v| v * v).sum::<f64>() * da).sqrt(),
        Lp::P(p) => (f.values().iter().map(|v| v.abs().powf(p)).sum::<f64>() * da).powf(1.0 / p),
    }
}

/// `(∫(1+|x|²)^m |f|² dx)^{1/2}` with the weight centred at the origin.
pub fn weighted_l2m_norm(f: &ScalarField, m: u32) -> f64 {
    let g = f.grid();
    let n = g.n();
    let mut acc = 0.0;
    for i in 0..n {
        let x1 = g.coordinate(i);
        for j in 0..n {
            let x2 = g.coordinate(j);
            let v = f.values()[i * n + j];
            acc += (1.0 + x1 * x1 + x2 * x2).powi(m as i32) * v * v;
        }
    }
    (acc * g.cell_area()).sqrt()
}

/// Constant `C` with `‖f‖_{L¹} ≤ C‖f‖_{L²(2)}` on the box, from Cauchy–Schwarz.
pub fn embedding_constant(grid: &GridSpec) -> f64 {
    let w = ScalarField::from_fn(*grid, |x1, x2| (1.0 + x1 * x1 + x2 * x2).powi(-2));
    (w.values().iter().sum::<f64>() * grid.cell_area()).sqrt()
}

fn warn_if_wide(grid: &GridSpec, alpha: f64, t: f64) {
    let width = (1.0 + t).powf(1.0 / alpha);
    if 6.0 * width > grid.box_length() / 3.0 {
        log::warn!(
            "profile width {width:.2} at t={t} is large against the box {}; truncation may dominate",
            grid.box_length()
        );
    }
}

/// `mass0 (1+t)^{−2/α} G(x/(1+t)^{1/α})`, periodized, centred at `center`.
pub fn sqg_profile(grid: &GridSpec, t: f64, mass0: f64, alpha: f64, center: (f64, f64)) -> Result<ScalarField> {
    check_time(t)?;
    let spec = kernel_spectrum(grid, alpha, 1.0 + t, KernelKind::G, center).scale(mass0);
    Ok(inverse_transform(&spec))
}

/// Two-term vorticity expansion and one-term temperature profile.
pub fn boussinesq_profiles(
    grid: &GridSpec,
    t: f64,
    gamma1: f64,
    gamma2: f64,
    alpha: f64,
    center: (f64, f64),
) -> Result<(ScalarField, ScalarField)> {
    check_time(t)?;
    let s = 1.0 + t;
    let g = kernel_spectrum(grid, alpha, s, KernelKind::G, center);
    let dg = kernel_spectrum(grid, alpha, s, KernelKind::DG1, center);
    let w = dg.scale(gamma2 * s).axpy(gamma1, &g)?;
    Ok((inverse_transform(&w), inverse_transform(&g.scale(gamma2))))
}

fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("time must be >= 0, got {t}")))
    }
}

/// `‖z − mass0 (1+t)^{−2/α} G(·/(1+t)^{1/α})‖_{L^p}`.
pub fn profile_error_sqg(z: &ScalarField, t: f64, mass0: f64, alpha: f64, p: Lp, center: (f64, f64)) -> Result<f64> {
    if mass0 == 0.0 {
        return Ok(lp_norm(z, p));
    }
    warn_if_wide(z.grid(), alpha, t);
    let profile = sqg_profile(z.grid(), t, mass0, alpha, center)?;
    Ok(lp_norm(&z.sub(&profile)?, p))
}

/// Residual norms of `w` against `γ₂(1+t)^{1−3/α}∂₁G + γ₁(1+t)^{−2/α}G` and of `θ` against
/// `γ₂(1+t)^{−2/α}G`, both at scale `(1+t)^{1/α}`.
#[allow(clippy::too_many_arguments)]
pub fn profile_error_boussinesq(
    w: &ScalarField,
    theta: &ScalarField,
    t: f64,
    gamma1: f64,
    gamma2: f64,
    alpha: f64,
    p: Lp,
    center: (f64, f64),
) -> Result<(f64, f64)> {
    w.grid().check_same(theta.grid())?;
    warn_if_wide(w.grid(), alpha, t);
    let (pw, pt) = boussinesq_profiles(w.grid(), t, gamma1, gamma2, alpha, center)?;
    Ok((lp_norm(&w.sub(&pw)?, p), lp_norm(&theta.sub(&pt)?, p)))
}

/// One row of a decay time series.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticRecord {
    pub time: f64,
    pub mass: f64,
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
    pub weighted_l2_2: f64,
    pub profile_err_l1: Option<f64>,
    pub profile_err_l2: Option<f64>,
    pub u_max: Option<f64>,
    pub low_shell_frac: Option<f64>,
}

impl DiagnosticRecord {
    /// Norms of `f`, with residual norms against `profile` if one is given.
    pub fn measure(time: f64, f: &ScalarField, profile: Option<&ScalarField>) -> Result<Self> {
        let (pe1, pe2) = match profile {
            Some(p) => {
                let r = f.sub(p)?;
                (Some(lp_norm(&r, Lp::P(1.0))), Some(lp_norm(&r, Lp::P(2.0))))
            }
            None => (None, None),
        };
        Ok(Self {
            time,
            mass: f.mass(),
            l1: lp_norm(f, Lp::P(1.0)),
            l2: lp_norm(f, Lp::P(2.0)),
            linf: lp_norm(f, Lp::Inf),
            weighted_l2_2: weighted_l2m_norm(f, 2),
            profile_err_l1: pe1,
            profile_err_l2: pe2,
            u_max: None,
            low_shell_frac: None,
        })
    }

    /// `‖f‖₂² ≤ ‖f‖₁‖f‖_∞` up to round-off.
    pub fn holder_consistent(&self) -> bool {
        self.l2 * self.l2 <= self.l1 * self.linf * (1.0 + 1e-10) + 1e-300
    }
}

/// Regression abscissa.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitMode {
    /// Slope of `log value` against `log(1+t)`.
    Log1pT,
    /// Slope of `log value` against `τ`.
    Tau,
}

/// Least-squares power-law fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub exponent: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
}

/// Ordinary least squares of `log value` against `log(1+t)` or `τ`.
pub fn fit_decay_exponent(series: &[(f64, f64)], mode: FitMode) -> Result<DecayFit> {
    if series.len() < 5 {
        return Err(Error::Fit(format!("need at least 5 samples, got {}", series.len())));
    }
    if series.iter().any(|&(_, v)| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::Fit("nonpositive values".into()));
    }
    let xs: Vec<f64> = series
        .iter()
        .map(|&(t, _)| match mode {
            FitMode::Log1pT => t.ln_1p(),
            FitMode::Tau => t,
        })
        .collect();
    let ys: Vec<f64> = series.iter().map(|&(_, v)| v.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx <= 0.0 {
        return Err(Error::Fit("degenerate time window".into()));
    }
    let slope = sxy / sxx;
    let r_squared = if syy > 0.0 { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) } else { 1.0 };
    let t_min = series.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let t_max = series.iter().map(|s| s.0).fold(f64::NEG_INFINITY, f64::max);
    Ok(DecayFit {
        exponent: slope,
        intercept: my - slope * mx,
        r_squared,
        window: (t_min, t_max),
    })
}

/// Default regression window: the last 60% of the samples, restricted to `t ≥ 1`.
pub fn default_window(series: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let skip = series.len() - (series.len() * 3).div_ceil(5);
    series[skip..].iter().copied().filter(|&(t, _)| t >= 1.0).collect()
}

/// Samples of `series` with `t ∈ [t_min, t_max]`.
pub fn window(series: &[(f64, f64)], t_min: f64, t_max: f64) -> Vec<(f64, f64)> {
    series.iter().copied().filter(|&(t, _)| t >= t_min && t <= t_max).collect()
}
