//! Integrating-factor RK4 time stepping for the physical and self-similar
//! forms of the generalized SQG equation and the Boussinesq vorticity system.
//!
//! The dissipative (physical) or drift-dissipative (scaled) linear part is
//! applied exactly; only the advection and the buoyancy coupling `∂₁θ` are
//! integrated by the Runge–Kutta stages.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::initial::InitialCondition;
use crate::semigroup::{apply_semigroup, dilate_spectrum, SemigroupParams};
use crate::spectral::{
    biot_savart_velocity, dealias, forward_transform, forward_transform_pair, inverse_transform,
    inverse_transform_pair, survives_dealiasing, GridSpec, ScalarField,
    SpectralField,
};

/// Largest admissible advective Courant number `u_max·dt/spacing`.
pub const MAX_COURANT: f64 = 0.5;
/// Largest admissible step.
pub const MAX_DT: f64 = 1.0;

/// Which system is integrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    SqgPhysical,
    SqgScaled,
    BoussinesqPhysical,
    BoussinesqScaled,
    /// Scaled SQG with the advection switched off.
    LinearScaled,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::SqgPhysical,
        Variant::SqgScaled,
        Variant::BoussinesqPhysical,
        Variant::BoussinesqScaled,
        Variant::LinearScaled,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::SqgPhysical => "sqg_physical",
            Variant::SqgScaled => "sqg_scaled",
            Variant::BoussinesqPhysical => "boussinesq_physical",
            Variant::BoussinesqScaled => "boussinesq_scaled",
            Variant::LinearScaled => "linear_scaled",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|v| v.name() == s)
    }

    pub fn tag(self) -> u8 {
        match self {
            Variant::SqgPhysical => 0,
            Variant::SqgScaled => 1,
            Variant::BoussinesqPhysical => 2,
            Variant::BoussinesqScaled => 3,
            Variant::LinearScaled => 4,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|v| v.tag() == tag)
    }

    pub fn is_boussinesq(self) -> bool {
        matches!(self, Variant::BoussinesqPhysical | Variant::BoussinesqScaled)
    }

    pub fn is_scaled(self) -> bool {
        matches!(self, Variant::SqgScaled | Variant::BoussinesqScaled | Variant::LinearScaled)
    }

    /// Names of the evolved fields, the advecting one first.
    pub fn fields(self) -> &'static [FieldName] {
        if self.is_boussinesq() {
            &[FieldName::W, FieldName::Theta]
        } else {
            &[FieldName::Z]
        }
    }
}

/// Name of an evolved scalar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FieldName {
    /// SQG scalar `z` (or `Z`).
    Z,
    /// Vorticity `ω` (or `W`).
    W,
    /// Temperature `θ` (or `Θ`).
    Theta,
}

impl FieldName {
    pub fn tag(self) -> u8 {
        match self {
            FieldName::Z => 0,
            FieldName::W => 1,
            FieldName::Theta => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        [FieldName::Z, FieldName::W, FieldName::Theta].into_iter().find(|f| f.tag() == tag)
    }

    pub fn name(self) -> &'static str {
        match self {
            FieldName::Z => "z",
            FieldName::W => "w",
            FieldName::Theta => "theta",
        }
    }
}

/// Model selection and parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub variant: Variant,
    pub alpha: f64,
    pub beta: f64,
    pub grid: GridSpec,
}

impl ModelParams {
    /// Validates the parameters. Boussinesq variants require `β = 1`.
    pub fn new(variant: Variant, alpha: f64, beta: f64, grid: GridSpec) -> Result<Self> {
        if !(alpha > 1.0 && alpha <= 2.0) {
            return Err(Error::InvalidParameter(format!("alpha must lie in (1,2], got {alpha}")));
        }
        if !(0.0..2.0).contains(&beta) {
            return Err(Error::InvalidParameter(format!("beta must lie in [0,2), got {beta}")));
        }
        if variant.is_boussinesq() && beta != 1.0 {
            return Err(Error::InvalidParameter(format!(
                "the Boussinesq system is closed only for beta = 1, got {beta}"
            )));
        }
        if variant.is_boussinesq() {
            if alpha >= 1.5 {
                log::warn!("alpha={alpha} lies outside (1, 3/2), where the Boussinesq asymptotics are established");
            }
        } else if alpha + beta > 3.0 {
            log::warn!("alpha+beta={} exceeds 3; SQG decay results do not cover this regime", alpha + beta);
        }
        Ok(Self { variant, alpha, beta, grid })
    }

    /// Exact linear propagator generator for `field` in the scaled variants.
    pub fn generator(&self, field: FieldName) -> SemigroupParams {
        match field {
            FieldName::Theta => SemigroupParams { alpha: self.alpha, beta: 1.0, shift: 1.0 - 1.0 / self.alpha },
            _ => SemigroupParams { alpha: self.alpha, beta: self.beta, shift: 0.0 },
        }
    }
}

/// Time and spectral fields of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    /// `t` for physical variants, `τ` for scaled ones.
    pub time: f64,
    pub fields: BTreeMap<FieldName, SpectralField>,
    pub step_count: u64,
}

impl SimState {
    pub fn new(time: f64, fields: Vec<(FieldName, ScalarField)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (name, f) in fields {
            if !f.is_finite() {
                return Err(Error::NonFinite { at_time: Some(time) });
            }
            if map.insert(name, forward_transform(&f)).is_some() {
                return Err(Error::InvalidParameter(format!("field {} given twice", name.name())));
            }
        }
        Ok(Self { time, fields: map, step_count: 0 })
    }

    /// Builds the initial state for `params` from one initial condition per field.
    pub fn from_initial(params: &ModelParams, time: f64, ics: &[(FieldName, InitialCondition)]) -> Result<Self> {
        let mut fields = Vec::new();
        for &name in params.variant.fields() {
            let ic = ics
                .iter()
                .find(|(n, _)| *n == name)
                .map(|(_, ic)| ic.clone())
                .ok_or_else(|| Error::InvalidParameter(format!("missing initial condition for {}", name.name())))?;
            fields.push((name, ic.build(&params.grid)?));
        }
        Self::new(time, fields)
    }

    pub fn field(&self, name: FieldName) -> Result<&SpectralField> {
        self.fields
            .get(&name)
            .ok_or_else(|| Error::InvalidParameter(format!("state has no field {}", name.name())))
    }

    pub fn physical(&self, name: FieldName) -> Result<ScalarField> {
        Ok(inverse_transform(self.field(name)?))
    }

    fn check_against(&self, params: &ModelParams) -> Result<()> {
        let expected = params.variant.fields();
        if self.fields.len() != expected.len() || expected.iter().any(|n| !self.fields.contains_key(n)) {
            return Err(Error::InvalidParameter(format!(
                "state fields do not match variant {}",
                params.variant.name()
            )));
        }
        for f in self.fields.values() {
            params.grid.check_same(f.grid())?;
        }
        Ok(())
    }
}

type Fields = BTreeMap<FieldName, SpectralField>;

fn advecting(params: &ModelParams) -> FieldName {
    params.variant.fields()[0]
}

fn velocity_beta(params: &ModelParams) -> f64 {
    if params.variant.is_boussinesq() {
        1.0
    } else {
        params.beta
    }
}

/// Physical-space velocity `(u₁, u₂) = (|∇|^⊥)^{−β}` of the advecting scalar.
pub fn velocity(state: &SimState, params: &ModelParams) -> Result<(ScalarField, ScalarField)> {
    let (u1, u2) = biot_savart_velocity(state.field(advecting(params))?, velocity_beta(params))?;
    Ok((inverse_transform(&u1), inverse_transform(&u2)))
}

/// `max |u|` over the grid.
pub fn max_speed(state: &SimState, params: &ModelParams) -> Result<f64> {
    let (u1, u2) = velocity(state, params)?;
    Ok(u1
        .values()
        .iter()
        .zip(u2.values())
        .fold(0.0, |m, (a, b)| m.max((a * a + b * b).sqrt())))
}

/// Share of the velocity energy carried by the lowest nonzero wavenumber shell
/// `0 < |j| < 1.5`, a trust metric for the periodic surrogate of `R²`.
pub fn lowest_shell_fraction(state: &SimState, params: &ModelParams) -> Result<f64> {
    let (u1, u2) = biot_savart_velocity(state.field(advecting(params))?, velocity_beta(params))?;
    let n = params.grid.n();
    let (mut low, mut total) = (0.0, 0.0);
    for m1 in 0..n {
        let j1 = params.grid.lattice_index(m1);
        for m2 in 0..n {
            let j2 = params.grid.lattice_index(m2);
            let i = m1 * n + m2;
            let e = u1.coeffs()[i].norm_sqr() + u2.coeffs()[i].norm_sqr();
            total += e;
            let r2 = j1 * j1 + j2 * j2;
            if r2 == 1 || r2 == 2 {
                low += e;
            }
        }
    }
    Ok(if total > 0.0 { low / total } else { 0.0 })
}

/// `−∇·(u s)` for a transported scalar `s`, with both factors and the product truncated by the 2/3 rule.
/// `−∇·(u s)` from physical velocity and the dealiased physical scalar; the product is truncated by the 2/3 rule.
fn advection(u1: &ScalarField, u2: &ScalarField, sp: &ScalarField) -> Result<SpectralField> {
    let (f1, f2) = forward_transform_pair(&u1.mul(sp)?, &u2.mul(sp)?)?;
    let g = *f1.grid();
    let n = g.n();
    let mut out = SpectralField::zeros(g);
    for (i, c) in out.coeffs_mut().iter_mut().enumerate() {
        let (m1, m2) = (i / n, i % n);
        if survives_dealiasing(&g, m1, m2) {
            let k1 = g.odd_wavenumber(m1);
            let k2 = g.odd_wavenumber(m2);
            *c = -Complex64::new(0.0, 1.0) * (f1.coeffs()[i] * k1 + f2.coeffs()[i] * k2);
        }
    }
    Ok(out)
}

/// Right-hand side and the largest speed of the (dealiased) velocity it used.
fn nonlinear(fields: &Fields, params: &ModelParams) -> Result<(Fields, f64)> {
    let mut out = BTreeMap::new();
    if params.variant == Variant::LinearScaled {
        for (&name, f) in fields {
            out.insert(name, SpectralField::zeros(*f.grid()));
        }
        return Ok((out, 0.0));
    }
    let lead = dealias(&fields[&advecting(params)]);
    let (u1, u2) = biot_savart_velocity(&lead, velocity_beta(params))?;
    let (u1, u2) = inverse_transform_pair(&u1, &u2)?;
    let u_max = u1.values().iter().zip(u2.values()).fold(0.0, |m: f64, (a, b)| m.max(a.hypot(*b)));
    let scalars: Vec<(FieldName, ScalarField)> = if params.variant.is_boussinesq() {
        let (w, theta) = inverse_transform_pair(&lead, &dealias(&fields[&FieldName::Theta]))?;
        vec![(FieldName::W, w), (FieldName::Theta, theta)]
    } else {
        vec![(FieldName::Z, inverse_transform(&lead))]
    };
    for (name, sp) in scalars {
        let mut rhs = advection(&u1, &u2, &sp)?;
        if name == FieldName::W {
            let theta = &fields[&FieldName::Theta];
            let g = *theta.grid();
            let buoyancy = theta.map_indexed(|m1, _| Complex64::new(0.0, g.odd_wavenumber(m1)));
            rhs = rhs.add(&buoyancy)?;
        }
        if !rhs.is_finite() {
            return Err(Error::NonFinite { at_time: None });
        }
        out.insert(name, rhs);
    }
    Ok((out, u_max))
}

/// Non-stiff right-hand side: `−∇·(u s)` for every transported scalar, plus `∂₁θ` in
/// the vorticity equation. Zero for the linear variant.
pub fn nonlinear_term(state: &SimState, params: &ModelParams) -> Result<Fields> {
    state.check_against(params)?;
    Ok(nonlinear(&state.fields, params)?.0)
}

/// Exact linear propagator over a fixed interval `h`.
enum Propagator<'a> {
    /// `e^{−h|k|^α}` per mode.
    Diagonal(Vec<f64>),
    Semigroup(f64, &'a ModelParams),
}

impl<'a> Propagator<'a> {
    fn new(params: &'a ModelParams, h: f64) -> Self {
        if params.variant.is_scaled() {
            return Propagator::Semigroup(h, params);
        }
        let g = params.grid;
        let n = g.n();
        Propagator::Diagonal((0..n * n).map(|i| (-h * g.k_mag(i / n, i % n).powf(params.alpha)).exp()).collect())
    }

    fn apply(&self, fields: &Fields) -> Result<Fields> {
        let mut out = BTreeMap::new();
        for (&name, f) in fields {
            let g = match self {
                Propagator::Semigroup(h, params) => apply_semigroup(f, *h, &params.generator(name))?,
                Propagator::Diagonal(decay) => {
                    let n = f.grid().n();
                    f.map_indexed(|m1, m2| Complex64::new(decay[m1 * n + m2], 0.0))
                }
            };
            out.insert(name, g);
        }
        Ok(out)
    }
}

fn combine(terms: &[(f64, &Fields)]) -> Result<Fields> {
    let mut out = terms[0].1.clone();
    for f in out.values_mut() {
        *f = f.scale(terms[0].0);
    }
    for &(c, fields) in &terms[1..] {
        for (name, f) in out.iter_mut() {
            *f = f.axpy(c, &fields[name])?;
        }
    }
    Ok(out)
}

/// One integrating-factor RK4 (Lawson) step of size `dt`.
pub fn step(state: &SimState, params: &ModelParams, dt: f64) -> Result<SimState> {
    state.check_against(params)?;
    if !(dt > 0.0 && dt <= MAX_DT) {
        return Err(Error::InvalidParameter(format!("dt must lie in (0, {MAX_DT}], got {dt}")));
    }
    let wrap = |e: Error| Error::StepFailed { time: state.time, source: Box::new(e) };
    let half = 0.5 * dt;
    let e = Propagator::new(params, half);
    let u = &state.fields;
    if params.variant == Variant::LinearScaled {
        let fields = e.apply(&e.apply(u).map_err(wrap)?).map_err(wrap)?;
        return Ok(SimState { time: state.time + dt, fields, step_count: state.step_count + 1 });
    }
    let (k1, u_max) = nonlinear(u, params).map_err(wrap)?;
    let courant = u_max * dt / params.grid.spacing();
    if courant > MAX_COURANT {
        return Err(Error::Cfl { courant, dt, u_max });
    }
    let fields = (|| -> Result<Fields> {
        let a = e.apply(u)?;
        let ek1 = e.apply(&k1)?;
        let (k2, _) = nonlinear(&combine(&[(1.0, &a), (half, &ek1)])?, params)?;
        let (k3, _) = nonlinear(&combine(&[(1.0, &a), (half, &k2)])?, params)?;
        let (k4, _) = nonlinear(&e.apply(&combine(&[(1.0, &a), (dt, &k3)])?)?, params)?;
        let inner = combine(&[(1.0, &a), (dt / 6.0, &ek1), (dt / 3.0, &k2), (dt / 3.0, &k3)])?;
        combine(&[(1.0, &e.apply(&inner)?), (dt / 6.0, &k4)])
    })()
    .map_err(wrap)?;
    if fields.values().any(|f| !f.is_finite()) {
        return Err(Error::NonFinite { at_time: Some(state.time + dt) });
    }
    Ok(SimState { time: state.time + dt, fields, step_count: state.step_count + 1 })
}

/// Steps with fixed `dt` from `initial.time` to `t_end`, invoking `observer` at the start,
/// at every multiple of `cadence` after the start, and at `t_end`. Steps are shortened
/// to land exactly on observation times.
pub fn run<R>(
    params: &ModelParams,
    initial: &SimState,
    t_end: f64,
    dt: f64,
    cadence: f64,
    mut observer: impl FnMut(&SimState) -> Result<R>,
) -> Result<(SimState, Vec<R>)> {
    if !(t_end >= initial.time) {
        return Err(Error::InvalidParameter(format!("t_end {t_end} precedes the initial time {}", initial.time)));
    }
    if !(cadence > 0.0) {
        return Err(Error::InvalidParameter(format!("cadence must be positive, got {cadence}")));
    }
    let t0 = initial.time;
    let mut state = initial.clone();
    let mut records = vec![observer(&state)?];
    let mut k = 1u64;
    while state.time < t_end {
        let target = (t0 + k as f64 * cadence).min(t_end);
        k += 1;
        while state.time < target {
            let remaining = target - state.time;
            let h = if remaining <= dt * (1.0 + 1e-9) { remaining } else { dt };
            let next = step(&state, params, h).map_err(|e| match e {
                Error::StepFailed { .. } => e,
                other => Error::StepFailed { time: state.time, source: Box::new(other) },
            })?;
            state = next;
            if h == remaining {
                state.time = target;
            }
        }
        records.push(observer(&state)?);
    }
    Ok((state, records))
}

/// Exponent `p` in `Z(ξ) = (1+t)^p z((1+t)^{1/α} ξ)` for the scaled counterpart of `field`.
pub fn amplitude_exponent(field: FieldName, alpha: f64, beta: f64) -> f64 {
    match field {
        FieldName::Z => 1.0 + (beta - 1.0) / alpha,
        FieldName::W => 1.0,
        FieldName::Theta => 2.0 - 1.0 / alpha,
    }
}

/// Maps a physical field at time `t` to self-similar variables `ξ = x/(1+t)^{1/α}`.
pub fn scaled_from_physical(
    f: &ScalarField,
    field: FieldName,
    t: f64,
    alpha: f64,
    beta: f64,
) -> Result<ScalarField> {
    rescale(f, field, t, alpha, beta, true)
}

/// Inverse of [`scaled_from_physical`].
pub fn physical_from_scaled(
    f: &ScalarField,
    field: FieldName,
    t: f64,
    alpha: f64,
    beta: f64,
) -> Result<ScalarField> {
    rescale(f, field, t, alpha, beta, false)
}

fn rescale(f: &ScalarField, field: FieldName, t: f64, alpha: f64, beta: f64, forward: bool) -> Result<ScalarField> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("t must be >= 0, got {t}")));
    }
    if t == 0.0 {
        return Ok(f.clone());
    }
    let p = amplitude_exponent(field, alpha, beta);
    let lambda = (1.0 + t).powf(1.0 / alpha);
    // In Fourier space Z(ξ) = A z(λξ) reads Ẑ(k) = A λ^{−2} ẑ(k/λ).
    let gain = (1.0 + t).powf(p) / (lambda * lambda);
    let spec = forward_transform(f);
    let out = if forward {
        dilate_spectrum(&spec, 1.0 / lambda, gain, 0.0, alpha)?
    } else {
        dilate_spectrum(&spec, lambda, 1.0 / gain, 0.0, alpha)?
    };
    Ok(inverse_transform(&out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::make_grid;

    fn bump(sigma: f64) -> InitialCondition {
        InitialCondition::Gaussian { amplitude: 1.0, sigma, center: (0.0, 0.0) }
    }

    #[test]
    fn param_validation() {
        let g = make_grid(16, 8.0).unwrap();
        assert!(ModelParams::new(Variant::SqgPhysical, 2.5, 1.0, g).is_err());
        assert!(ModelParams::new(Variant::SqgPhysical, 1.5, 2.0, g).is_err());
        assert!(ModelParams::new(Variant::BoussinesqScaled, 1.4, 0.5, g).is_err());
        assert!(ModelParams::new(Variant::BoussinesqScaled, 1.4, 1.0, g).is_ok());
        for v in Variant::ALL {
            assert_eq!(Variant::from_name(v.name()), Some(v));
            assert_eq!(Variant::from_tag(v.tag()), Some(v));
        }
    }

    #[test]
    fn zero_stays_zero() {
        let g = make_grid(32, 16.0).unwrap();
        for v in [Variant::SqgPhysical, Variant::SqgScaled, Variant::BoussinesqPhysical] {
            let p = ModelParams::new(v, 1.5, 1.0, g).unwrap();
            let ics: Vec<_> = v.fields().iter().map(|&f| (f, InitialCondition::Zero)).collect();
            let s0 = SimState::from_initial(&p, 0.0, &ics).unwrap();
            let (s, _) = run(&p, &s0, 1.0, 0.25, 1.0, |_| Ok(())).unwrap();
            assert!(s.fields.values().all(|f| f.coeff_norm() == 0.0));
        }
    }

    #[test]
    fn nonlinear_term_has_zero_mean_and_vanishes_on_radial_data() {
        // Periodization breaks radial symmetry at order (σ/L)⁴.
        let g = make_grid(128, 64.0).unwrap();
        for &beta in &[0.0, 1.0] {
            let p = ModelParams::new(Variant::SqgPhysical, 1.5, beta, g).unwrap();
            let s = SimState::from_initial(&p, 0.0, &[(FieldName::Z, bump(1.5))]).unwrap();
            let n = nonlinear_term(&s, &p).unwrap();
            let nz = &n[&FieldName::Z];
            assert_eq!(nz.coeffs()[0], Complex64::new(0.0, 0.0));
            assert!(inverse_transform(nz).max_abs() < 1e-5);
        }
        let p = ModelParams::new(Variant::SqgPhysical, 1.5, 1.0, g).unwrap();
        let s = SimState::from_initial(&p, 0.0, &[(FieldName::Z, InitialCondition::Zero)]).unwrap();
        assert_eq!(nonlinear_term(&s, &p).unwrap()[&FieldName::Z].coeff_norm(), 0.0);
    }

    #[test]
    fn cfl_and_dt_guards() {
        let g = make_grid(32, 8.0).unwrap();
        let p = ModelParams::new(Variant::SqgPhysical, 1.5, 0.0, g).unwrap();
        let big = InitialCondition::Gaussian { amplitude: 50.0, sigma: 1.0, center: (0.0, 0.0) };
        let s = SimState::from_initial(&p, 0.0, &[(FieldName::Z, big)]).unwrap();
        assert!(matches!(step(&s, &p, 0.5), Err(Error::Cfl { .. })));
        assert!(matches!(step(&s, &p, 2.0), Err(Error::InvalidParameter(_))));
        assert!(matches!(
            run(&p, &s, 1.0, 0.5, 1.0, |_| Ok(())),
            Err(Error::StepFailed { time, .. }) if time == 0.0
        ));
    }

    #[test]
    fn physical_mass_is_conserved() {
        let g = make_grid(64, 32.0).unwrap();
        let p = ModelParams::new(Variant::BoussinesqPhysical, 1.4, 1.0, g).unwrap();
        let ics = [
            (FieldName::W, InitialCondition::Dipole { amplitude: 1.0, sigma: 1.0, center: (0.3, 0.0) }),
            (FieldName::Theta, InitialCondition::Gaussian { amplitude: 1.0, sigma: 1.2, center: (0.0, -0.4) }),
        ];
        let s0 = SimState::from_initial(&p, 0.0, &ics).unwrap();
        let m0 = s0.field(FieldName::Theta).unwrap().mass();
        let (s, _) = run(&p, &s0, 2.0, 0.05, 1.0, |_| Ok(())).unwrap();
        assert!((s.field(FieldName::Theta).unwrap().mass() - m0).abs() < 1e-12 * m0.abs());
        assert!(s.field(FieldName::W).unwrap().mass().abs() < 1e-12);
    }

    #[test]
    fn run_schedule_and_chaining() {
        let g = make_grid(32, 16.0).unwrap();
        let p = ModelParams::new(Variant::SqgPhysical, 1.5, 1.0, g).unwrap();
        let s0 = SimState::from_initial(&p, 0.0, &[(FieldName::Z, bump(1.0))]).unwrap();
        let (same, times) = run(&p, &s0, 0.0, 0.1, 1.0, |s| Ok(s.time)).unwrap();
        assert_eq!(times, vec![0.0]);
        assert_eq!(same, s0);

        let (direct, times) = run(&p, &s0, 2.0, 0.3, 0.5, |s| Ok(s.time)).unwrap();
        assert_eq!(times, vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        let (mid, _) = run(&p, &s0, 1.0, 0.3, 0.5, |_| Ok(())).unwrap();
        let (chained, _) = run(&p, &mid, 2.0, 0.3, 0.5, |_| Ok(())).unwrap();
        assert_eq!(chained.fields, direct.fields);
    }

    #[test]
    fn alpha_two_matches_navier_stokes_step() {
        // With α = 2 and β = 1 the scheme is the classical vorticity solver.
        let g = make_grid(32, 16.0).unwrap();
        let p = ModelParams::new(Variant::SqgPhysical, 2.0, 1.0, g).unwrap();
        let ic = InitialCondition::Random { seed: 3, modes: 4, k_max: 1.0, sigma: 2.0, bias: 0.2 };
        let s0 = SimState::from_initial(&p, 0.0, &[(FieldName::Z, ic)]).unwrap();
        let dt = 0.05;
        let s1 = step(&s0, &p, dt).unwrap();
        // Reference: Lawson RK4 with e^{hΔ} and u = ∇^⊥(−Δ)^{-1}ω written out directly.
        let heat = |f: &SpectralField, h: f64| {
            f.map_indexed(|a, b| Complex64::new((-h * g.k_mag(a, b).powi(2)).exp(), 0.0))
        };
        let rhs = |w: &SpectralField| -> SpectralField {
            let psi = dealias(w).map_indexed(|a, b| {
                let k2 = g.wavenumber(a).powi(2) + g.wavenumber(b).powi(2);
                if k2 == 0.0 { Complex64::new(0.0, 0.0) } else { Complex64::new(1.0 / k2, 0.0) }
            });
            let u1 = inverse_transform(&psi.map_indexed(|_, b| {
                -Complex64::new(0.0, g.odd_wavenumber(b))
            }));
            let u2 = inverse_transform(&psi.map_indexed(|a, _| {
                Complex64::new(0.0, g.odd_wavenumber(a))
            }));
            advection(&u1, &u2, &inverse_transform(&dealias(w))).unwrap()
        };
        let w = s0.field(FieldName::Z).unwrap();
        let k1 = rhs(w);
        let a = heat(w, dt / 2.0);
        let ek1 = heat(&k1, dt / 2.0);
        let k2 = rhs(&a.axpy(dt / 2.0, &ek1).unwrap());
        let k3 = rhs(&a.axpy(dt / 2.0, &k2).unwrap());
        let k4 = rhs(&heat(&a.axpy(dt, &k3).unwrap(), dt / 2.0));
        let inner = a.axpy(dt / 6.0, &ek1).unwrap().axpy(dt / 3.0, &k2).unwrap().axpy(dt / 3.0, &k3).unwrap();
        let reference = heat(&inner, dt / 2.0).axpy(dt / 6.0, &k4).unwrap();
        let got = s1.field(FieldName::Z).unwrap();
        assert!(got.sub(&reference).unwrap().coeff_norm() < 1e-13 * reference.coeff_norm());
    }

    #[test]
    fn rescaling_round_trip() {
        let g = make_grid(128, 32.0).unwrap();
        let f = bump(1.0).build(&g).unwrap();
        assert_eq!(scaled_from_physical(&f, FieldName::Z, 0.0, 1.5, 1.0).unwrap(), f);
        let s = scaled_from_physical(&f, FieldName::Z, 1.0, 1.5, 1.0).unwrap();
        // Z(ξ) = 2 z(2^{2/3} ξ) for α = 1.5, β = 1.
        let lam = 2f64.powf(1.0 / 1.5);
        let exact = ScalarField::from_fn(g, |x1, x2| 2.0 * (-(lam * lam) * (x1 * x1 + x2 * x2) / 2.0).exp());
        assert!(s.sub(&exact).unwrap().max_abs() < 1e-6);
        let back = physical_from_scaled(&s, FieldName::Z, 1.0, 1.5, 1.0).unwrap();
        assert!(back.sub(&f).unwrap().max_abs() < 1e-6);
    }

    #[test]
    fn linear_variant_is_the_semigroup() {
        let g = make_grid(64, 32.0).unwrap();
        let p = ModelParams::new(Variant::LinearScaled, 1.5, 1.0, g).unwrap();
        let s0 = SimState::from_initial(&p, 0.0, &[(FieldName::Z, bump(1.2))]).unwrap();
        let (s, _) = run(&p, &s0, 1.0, 0.25, 1.0, |_| Ok(())).unwrap();
        let exact = apply_semigroup(s0.field(FieldName::Z).unwrap(), 1.0, &p.generator(FieldName::Z)).unwrap();
        let got = s.field(FieldName::Z).unwrap();
        // Eight interpolated half steps against one.
        assert!(got.sub(&exact).unwrap().coeff_norm() < 5e-6 * exact.coeff_norm());
        let m0 = s0.field(FieldName::Z).unwrap().mass();
        let decay = p.generator(FieldName::Z).lambda0().exp();
        assert!((got.mass() - decay * m0).abs() < 1e-10 * m0);
    }

    #[test]
    fn shell_fraction_bounds() {
        let g = make_grid(32, 16.0).unwrap();
        let p = ModelParams::new(Variant::SqgPhysical, 1.5, 1.0, g).unwrap();
        let s = SimState::from_initial(&p, 0.0, &[(FieldName::Z, bump(1.0))]).unwrap();
        let f = lowest_shell_fraction(&s, &p).unwrap();
        assert!((0.0..=1.0).contains(&f));
    }
}
