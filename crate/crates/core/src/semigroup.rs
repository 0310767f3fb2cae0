//! The rescaled semigroup `e^{τL}`, `L = −|∇|^α + (1/α)ξ·∇ + (1 + (β−1)/α)`, in closed form:
//!
//! `(e^{τL}f)^(k) = e^{λ₀τ} e^{−a(τ)|k|^α} f̂(e^{−τ/α}k)`, `a(τ) = 1 − e^{−τ}`, `λ₀ = 1 − (3−β)/α`.
//!
//! The dilated spectrum `f̂(e^{−τ/α}k)` falls between lattice points and is
//! recovered by tensor-product Lagrange interpolation of order 8. Spectra
//! produced by the dissipative flow carry a cusp `e^{−c|k|^α}` at the origin
//! that polynomial interpolation resolves poorly, so the interpolant is
//! applied to `f̂(k)e^{c|k|^α}` and the factor `e^{−c|q|^α}` is restored at
//! the target point `q`. The cusp weight `c` is estimated from the spectrum
//! near `k = 0`; for the profile `G` it is exactly 1 and the eigenrelation
//! `e^{τL}G = e^{λ₀τ}G` holds to round-off.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::diagnostics::{lp_norm, weighted_l2m_norm};
use crate::error::{Error, Result};
use crate::initial::InitialCondition;
use crate::kernels::{kernel_field, KernelKind, KernelPath, KernelTable, Lp};
use crate::spectral::{
    forward_transform, inverse_transform, make_grid, spectral_gradient, Axis, GridSpec, ScalarField, SpectralField,
};

const STENCIL: usize = 8;
/// Largest `c|k|^α` allowed in the preconditioning factor.
const MAX_EXPONENT: f64 = 600.0;

/// Parameters of the generator `L + shift`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SemigroupParams {
    pub alpha: f64,
    pub beta: f64,
    pub shift: f64,
}

impl SemigroupParams {
    pub fn new(alpha: f64, beta: f64, shift: f64) -> Result<Self> {
        if !(alpha > 1.0 && alpha <= 2.0) {
            return Err(Error::InvalidParameter(format!("alpha must lie in (1,2], got {alpha}")));
        }
        if !(0.0..2.0).contains(&beta) {
            return Err(Error::InvalidParameter(format!("beta must lie in [0,2), got {beta}")));
        }
        if !shift.is_finite() {
            return Err(Error::InvalidParameter("shift must be finite".into()));
        }
        Ok(Self { alpha, beta, shift })
    }

    /// Generator of `Z` (SQG) or `W` (Boussinesq, `β = 1`).
    pub fn unshifted(alpha: f64, beta: f64) -> Result<Self> {
        Self::new(alpha, beta, 0.0)
    }

    /// Generator `L + 1 − 1/α` of the scaled temperature, with `β = 1`.
    pub fn temperature(alpha: f64) -> Result<Self> {
        Self::new(alpha, 1.0, 1.0 - 1.0 / alpha)
    }

    /// Growth rate of the zero mode, `1 − (3−β)/α + shift`.
    pub fn lambda0(&self) -> f64 {
        1.0 - (3.0 - self.beta) / self.alpha + self.shift
    }
}

/// `a(τ) = 1 − e^{−τ}`.
pub fn a_of_tau(tau: f64) -> Result<f64> {
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(Error::InvalidParameter(format!("tau must be >= 0, got {tau}")));
    }
    Ok(-(-tau).exp_m1())
}

/// One-dimensional interpolation stencil: first lattice index and weights.
struct Stencil {
    base: i64,
    weights: [f64; STENCIL],
}

fn stencil(q: f64, half: i64) -> Stencil {
    if q < -(half as f64) || q > (half - 1) as f64 {
        return Stencil { base: -half, weights: [0.0; STENCIL] };
    }
    let mut base = q.floor() as i64 - (STENCIL as i64 / 2 - 1);
    base = base.clamp(-half, half - STENCIL as i64);
    let mut weights = [0.0; STENCIL];
    for (i, w) in weights.iter_mut().enumerate() {
        let xi = (base + i as i64) as f64;
        let mut num = 1.0;
        let mut den = 1.0;
        for m in 0..STENCIL {
            if m != i {
                let xm = (base + m as i64) as f64;
                num *= q - xm;
                den *= xi - xm;
            }
        }
        *w = num / den;
    }
    Stencil { base, weights }
}

/// Orthonormal basis of bivariate polynomials of total degree `degree`, sampled on
/// the lattice square `|j₁|, |j₂| ≤ r` in row-major order.
fn polynomial_basis(r: i64, degree: usize) -> Arc<DMatrix<f64>> {
    static CACHE: OnceLock<Mutex<HashMap<(i64, usize), Arc<DMatrix<f64>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    Arc::clone(guard.entry((r, degree)).or_insert_with(|| {
        let mut columns = Vec::new();
        for total in 0..=degree {
            for a in 0..=total {
                columns.push((a as i32, (total - a) as i32));
            }
        }
        let side = (2 * r + 1) as usize;
        let basis = DMatrix::from_fn(side * side, columns.len(), |i, c| {
            let x = (i / side) as f64 / r as f64 - 1.0;
            let y = (i % side) as f64 / r as f64 - 1.0;
            x.powi(columns[c].0) * y.powi(columns[c].1)
        });
        Arc::new(basis.qr().q().transpose())
    }))
}

/// Cusp weight `c ∈ [0, 1]` such that `f̂(k)e^{c|k|^α}` is closest to a bivariate
/// polynomial on the lattice square `|j₁|, |j₂| ≤ 5`.
pub fn estimate_cusp_weight(f: &SpectralField, alpha: f64) -> f64 {
    let grid = f.grid();
    let half = (grid.n() / 2) as i64;
    let (r, degree) = if half > 5 { (5, 10) } else { (3, 4) };
    let mut points = Vec::new();
    for j1 in -r..=r {
        for j2 in -r..=r {
            let k = grid.dk() * ((j1 * j1 + j2 * j2) as f64).sqrt();
            points.push((k.powf(alpha), f.at(j1, j2)));
        }
    }
    let scale = points.iter().map(|p| p.1.norm()).fold(0.0, f64::max);
    if scale == 0.0 || !scale.is_finite() {
        return 0.0;
    }
    let qt = polynomial_basis(r, degree);

    let residual = |c: f64| -> f64 {
        let re = DVector::from_iterator(points.len(), points.iter().map(|p| (p.1.re / scale) * (c * p.0).exp()));
        let im = DVector::from_iterator(points.len(), points.iter().map(|p| (p.1.im / scale) * (c * p.0).exp()));
        let total = re.norm_squared() + im.norm_squared();
        let proj = (&*qt * &re).norm_squared() + (&*qt * &im).norm_squared();
        ((total - proj).max(0.0) / total).sqrt()
    };

    let mut best = (0.0, residual(0.0));
    for i in 1..=50 {
        let c = i as f64 / 50.0;
        let r = residual(c);
        if r < best.1 {
            best = (c, r);
        }
    }
    // Golden-section refinement around the best grid point.
    let (mut lo, mut hi) = ((best.0 - 0.02f64).max(0.0), (best.0 + 0.02f64).min(1.0));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (residual(x1), residual(x2));
    for _ in 0..40 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = residual(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = residual(x2);
        }
    }
    for (c, r) in [(x1, f1), (x2, f2)] {
        if r < best.1 {
            best = (c, r);
        }
    }
    best.0
}

fn warn_compression(grid: &GridSpec, tau: f64, alpha: f64) {
    let n = grid.n() as f64;
    if tau > alpha * (n / 8.0).ln() {
        log::warn!("tau={tau} exceeds alpha*ln(n/8); the dilated spectrum is strongly compressed");
    }
    if (-tau / alpha).exp() * n / 2.0 < 1.0 {
        log::warn!("tau={tau}: dilated spectrum falls inside the first lattice shell; accuracy degraded");
    }
}

/// `e^{τ(L + shift)} f` in Fourier space.
pub fn apply_semigroup(f: &SpectralField, tau: f64, p: &SemigroupParams) -> Result<SpectralField> {
    let a = a_of_tau(tau)?;
    if tau == 0.0 {
        return Ok(f.clone());
    }
    warn_compression(f.grid(), tau, p.alpha);
    dilate_spectrum(f, (-tau / p.alpha).exp(), (p.lambda0() * tau).exp(), a, p.alpha)
}

/// `gain · e^{−damping|k|^α} · f̂(s k)` on every lattice point `k`. Targets `s k` outside
/// the lattice band are set to zero.
pub fn dilate_spectrum(f: &SpectralField, s: f64, gain: f64, damping: f64, alpha: f64) -> Result<SpectralField> {
    if !(s > 0.0 && s.is_finite() && gain.is_finite() && damping.is_finite()) {
        return Err(Error::InvalidParameter(format!("bad dilation s={s}, gain={gain}, damping={damping}")));
    }
    let grid = *f.grid();
    let n = grid.n();
    let half = (n / 2) as i64;
    let kmax = grid.dk() * half as f64 * 2f64.sqrt();
    let c = estimate_cusp_weight(f, alpha).min(MAX_EXPONENT / kmax.powf(alpha));

    // Lattice index j ↦ power |k|^α for every point; reused for both factors.
    let kpow: Vec<f64> = (0..n * n)
        .map(|i| grid.k_mag(i / n, i % n).powf(alpha))
        .collect();

    // Preconditioned spectrum on the centred lattice, index (j + half).
    let mut h = vec![Complex64::new(0.0, 0.0); n * n];
    for m1 in 0..n {
        let r1 = (grid.lattice_index(m1) + half) as usize;
        for m2 in 0..n {
            let r2 = (grid.lattice_index(m2) + half) as usize;
            let idx = m1 * n + m2;
            h[r1 * n + r2] = f.coeffs()[idx] * (c * kpow[idx]).exp();
        }
    }

    let stencils: Vec<Stencil> = (0..n).map(|m| stencil(s * grid.lattice_index(m) as f64, half)).collect();

    // Pass along the first axis: rows indexed by output m1, columns by centred input j2.
    let mut tmp = vec![Complex64::new(0.0, 0.0); n * n];
    for (m1, st) in stencils.iter().enumerate() {
        let row = &mut tmp[m1 * n..(m1 + 1) * n];
        for (i, &w) in st.weights.iter().enumerate() {
            let src = ((st.base + i as i64) + half) as usize;
            let src_row = &h[src * n..(src + 1) * n];
            for (t, &v) in row.iter_mut().zip(src_row) {
                *t += v * w;
            }
        }
    }

    let mut out = SpectralField::zeros(grid);
    let coeffs = out.coeffs_mut();
    for m1 in 0..n {
        let q1 = s * grid.wavenumber(m1);
        let row = &tmp[m1 * n..(m1 + 1) * n];
        for (m2, st) in stencils.iter().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (i, &w) in st.weights.iter().enumerate() {
                acc += row[((st.base + i as i64) + half) as usize] * w;
            }
            let q2 = s * grid.wavenumber(m2);
            let qpow = (q1 * q1 + q2 * q2).sqrt().powf(alpha);
            let idx = m1 * n + m2;
            coeffs[idx] = acc * (gain * (-c * qpow - damping * kpow[idx]).exp());
        }
    }

    // Restore exact Hermitian symmetry lost to one-sided stencils at the lattice edge.
    for m1 in 0..n {
        let n1 = (n - m1) % n;
        for m2 in 0..n {
            let n2 = (n - m2) % n;
            let (i, j) = (m1 * n + m2, n1 * n + n2);
            if i < j {
                let avg = 0.5 * (coeffs[i] + coeffs[j].conj());
                coeffs[i] = avg;
                coeffs[j] = avg.conj();
            } else if i == j {
                coeffs[i] = Complex64::new(coeffs[i].re, 0.0);
            }
        }
    }
    if !out.is_finite() {
        return Err(Error::NonFinite { at_time: None });
    }
    Ok(out)
}

/// `∂_axis e^{τL} f`, together with its relative discrepancy from `e^{τ/α} e^{τL} ∂_axis f`.
pub fn apply_semigroup_gradient_commuted(
    f: &SpectralField,
    tau: f64,
    p: &SemigroupParams,
    axis: Axis,
) -> Result<(SpectralField, f64)> {
    let direct = spectral_gradient(&apply_semigroup(f, tau, p)?, axis);
    let commuted = apply_semigroup(&spectral_gradient(f, axis), tau, p)?.scale((tau / p.alpha).exp());
    let norm = direct.coeff_norm();
    let diff = direct.sub(&commuted)?.coeff_norm();
    let rel = if norm > 0.0 { diff / norm } else { diff };
    Ok((direct, rel))
}

fn profile_on(grid: &GridSpec, kt: &KernelTable) -> Result<ScalarField> {
    kernel_field(grid, kt.alpha(), 1.0, KernelKind::G, KernelPath::Spectral, (0.0, 0.0))
}

/// `P₀f = (∫f) G`.
pub fn project_p0(f: &ScalarField, kt: &KernelTable) -> Result<ScalarField> {
    Ok(profile_on(f.grid(), kt)?.scale(f.mass()))
}

/// `Q₀f = f − P₀f`.
pub fn project_q0(f: &ScalarField, kt: &KernelTable) -> Result<ScalarField> {
    f.sub(&project_p0(f, kt)?)
}

/// Norm measured by [`probe_decay_rate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeNorm {
    L2,
    /// `L²(2)`, weight `(1+|ξ|²)²`.
    WeightedL2,
}

/// Grid and ensemble used by [`probe_decay_rate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeSetup {
    pub grid: GridSpec,
    pub members: usize,
    pub seed: u64,
}

impl Default for ProbeSetup {
    fn default() -> Self {
        Self {
            grid: make_grid(256, 64.0).expect("valid grid"),
            members: 6,
            seed: 17,
        }
    }
}

/// Random smooth localized fields for the probe ensemble.
pub fn probe_ensemble(setup: &ProbeSetup, mean_zero: bool) -> Result<Vec<ScalarField>> {
    let mut rng = ChaCha8Rng::seed_from_u64(setup.seed);
    let grid = &setup.grid;
    (0..setup.members)
        .map(|_| {
            let ic = InitialCondition::Random {
                seed: rng.gen(),
                modes: 6,
                k_max: 1.5,
                sigma: rng.gen_range(1.0..2.0),
                bias: rng.gen_range(0.5..1.5),
            };
            let f = ic.build(grid)?;
            if mean_zero {
                let bump = InitialCondition::Gaussian { amplitude: 1.0, sigma: 1.0, center: (0.0, 0.0) }.build(grid)?;
                f.axpy(-f.mass() / bump.mass(), &bump)
            } else {
                Ok(f)
            }
        })
        .collect()
}

/// Applies the semigroup to a random ensemble and fits `log‖e^{τL}f‖` against `τ`.
/// Returns the largest slope over the ensemble.
pub fn probe_decay_rate(
    p: &SemigroupParams,
    mean_zero: bool,
    norm: ProbeNorm,
    tau_samples: &[f64],
    setup: &ProbeSetup,
) -> Result<f64> {
    let ensemble = probe_ensemble(setup, mean_zero)?;
    let mut worst = f64::NEG_INFINITY;
    for f in &ensemble {
        worst = worst.max(probe_slope(f, p, norm, tau_samples)?);
    }
    Ok(worst)
}

/// Fitted exponential rate of `‖e^{τL}f‖` over `tau_samples`.
pub fn probe_slope(f: &ScalarField, p: &SemigroupParams, norm: ProbeNorm, tau_samples: &[f64]) -> Result<f64> {
    if tau_samples.len() < 2 {
        return Err(Error::InvalidParameter("need at least two tau samples".into()));
    }
    let spec = forward_transform(f);
    let mut xs = Vec::with_capacity(tau_samples.len());
    let mut ys = Vec::with_capacity(tau_samples.len());
    for &tau in tau_samples {
        let g = inverse_transform(&apply_semigroup(&spec, tau, p)?);
        let v = match norm {
            ProbeNorm::L2 => lp_norm(&g, Lp::P(2.0)),
            ProbeNorm::WeightedL2 => weighted_l2m_norm(&g, 2),
        };
        if !(v > 1e-280) {
            return Err(Error::Underflow(format!("norm {v:e} at tau={tau}")));
        }
        xs.push(tau);
        ys.push(v.ln());
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}
