//! Periodic-grid Fourier machinery.
//!
//! Fields live on a square box of side `L` centred on the origin. Sample
//! `(i, j)` sits at `(i·L/n − L/2, j·L/n − L/2)`. Spectral coefficients are
//! stored in FFT order and normalised so that the coefficient at `k`
//! approximates `(1/L²) ∫ f(x) e^{−ik·x} dx`; the zero mode is the spatial
//! mean and `mass = L² · c(0)`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Square periodic grid of `n × n` points over a box of side `box_length`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    n: usize,
    box_length: f64,
}

/// Builds a grid, rejecting odd or tiny resolutions and non-positive boxes.
pub fn make_grid(n: usize, box_length: f64) -> Result<GridSpec> {
    GridSpec::new(n, box_length)
}

impl GridSpec {
    pub fn new(n: usize, box_length: f64) -> Result<Self> {
        if n < 8 || !n.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "n must be even and at least 8, got {n}"
            )));
        }
        if !(box_length.is_finite() && box_length > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "box_length must be positive, got {box_length}"
            )));
        }
        Ok(Self { n, box_length })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    pub fn spacing(&self) -> f64 {
        self.box_length / self.n as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.spacing() * self.spacing()
    }

    /// Number of samples, `n²`.
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Lattice spacing in wavenumber space, `2π/L`.
    pub fn dk(&self) -> f64 {
        2.0 * PI / self.box_length
    }

    /// Signed lattice index `j ∈ {−n/2, …, n/2−1}` for FFT-order position `m`.
    pub fn lattice_index(&self, m: usize) -> i64 {
        let n = self.n as i64;
        let m = m as i64;
        if m < n / 2 {
            m
        } else {
            m - n
        }
    }

    /// FFT-order position of signed lattice index `j`.
    pub fn position(&self, j: i64) -> usize {
        let n = self.n as i64;
        j.rem_euclid(n) as usize
    }

    pub fn wavenumber(&self, m: usize) -> f64 {
        self.dk() * self.lattice_index(m) as f64
    }

    /// Wavenumber used for odd (first-derivative-like) symbols. The Nyquist
    /// mode has no partner, so it is mapped to zero to keep real fields real.
    pub fn odd_wavenumber(&self, m: usize) -> f64 {
        if m == self.n / 2 {
            0.0
        } else {
            self.wavenumber(m)
        }
    }

    /// `|k|` at FFT position `(m1, m2)`.
    pub fn k_mag(&self, m1: usize, m2: usize) -> f64 {
        let j1 = self.lattice_index(m1) as f64;
        let j2 = self.lattice_index(m2) as f64;
        self.dk() * (j1 * j1 + j2 * j2).sqrt()
    }

    /// Physical coordinate of sample index `i` along either axis.
    pub fn coordinate(&self, i: usize) -> f64 {
        i as f64 * self.spacing() - 0.5 * self.box_length
    }

    pub(crate) fn check_same(&self, other: &GridSpec) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!(
                "n={} L={} vs n={} L={}",
                self.n, self.box_length, other.n, other.box_length
            )));
        }
        Ok(())
    }
}

/// Coordinate axis of the plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X1,
    X2,
}

/// Real samples of a scalar on the grid, row-major with `x1` as the slow index.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { at_time: None });
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    /// Samples `f(x1, x2)` at every grid point.
    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64) -> f64) -> Self {
        let n = grid.n();
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..n {
            let x1 = grid.coordinate(i);
            for j in 0..n {
                values.push(f(x1, grid.coordinate(j)));
            }
        }
        Self { grid, values }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.n() + j]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// `∫ f dx` by the grid sum.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_area()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| s * v)
    }

    /// `self + s·other`.
    pub fn axpy(&self, s: f64, other: &ScalarField) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + s * b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &ScalarField) -> Result<Self> {
        self.axpy(-1.0, other)
    }

    /// Pointwise product.
    pub fn mul(&self, other: &ScalarField) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a * b)
                .collect(),
        })
    }

    /// Centre of mass `∫x f / ∫f`, or the origin when the mass vanishes.
    pub fn center_of_mass(&self) -> (f64, f64) {
        let n = self.grid.n();
        let (mut m, mut m1, mut m2) = (0.0, 0.0, 0.0);
        for i in 0..n {
            let x1 = self.grid.coordinate(i);
            for j in 0..n {
                let v = self.values[i * n + j];
                m += v;
                m1 += v * x1;
                m2 += v * self.grid.coordinate(j);
            }
        }
        if m.abs() <= f64::MIN_POSITIVE * n as f64 {
            (0.0, 0.0)
        } else {
            (m1 / m, m2 / m)
        }
    }
}

/// Fourier coefficients of a field, FFT order, `(1/L²)`-normalised.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: GridSpec,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn new(grid: GridSpec, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} coefficients, got {}",
                grid.len(),
                coeffs.len()
            )));
        }
        Ok(Self { grid, coeffs })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            coeffs: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    /// Fills every coefficient from `f(k1, k2)` evaluated at the lattice wavenumbers.
    pub fn from_symbol(grid: GridSpec, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let n = grid.n();
        let mut coeffs = Vec::with_capacity(grid.len());
        for m1 in 0..n {
            let k1 = grid.wavenumber(m1);
            for m2 in 0..n {
                coeffs.push(f(k1, grid.wavenumber(m2)));
            }
        }
        Self { grid, coeffs }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Coefficient at signed lattice indices `(j1, j2)`.
    pub fn at(&self, j1: i64, j2: i64) -> Complex64 {
        let n = self.grid.n();
        self.coeffs[self.grid.position(j1) * n + self.grid.position(j2)]
    }

    /// Spatial mean (zero-mode coefficient).
    pub fn mean(&self) -> f64 {
        self.coeffs[0].re
    }

    /// `∫ f dx = L² · c(0)`.
    pub fn mass(&self) -> f64 {
        let l = self.grid.box_length();
        l * l * self.coeffs[0].re
    }

    /// `(Σ |c_k|²)^{1/2}`; the grid L² norm equals `L` times this.
    pub fn coeff_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Grid L² norm of the represented field, via Parseval.
    pub fn l2_norm(&self) -> f64 {
        self.grid.box_length() * self.coeff_norm()
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Largest `|c(−k) − conj c(k)|`, zero for a real field.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.grid.n();
        let mut worst: f64 = 0.0;
        for m1 in 0..n {
            let p1 = (n - m1) % n;
            for m2 in 0..n {
                let p2 = (n - m2) % n;
                let d = self.coeffs[m1 * n + m2] - self.coeffs[p1 * n + p2].conj();
                worst = worst.max(d.norm());
            }
        }
        worst
    }

    /// Multiplies each coefficient by `f(m1, m2)` (FFT positions).
    pub fn map_indexed(&self, f: impl Fn(usize, usize) -> Complex64) -> Self {
        let n = self.grid.n();
        let mut coeffs = self.coeffs.clone();
        for m1 in 0..n {
            for m2 in 0..n {
                coeffs[m1 * n + m2] *= f(m1, m2);
            }
        }
        Self {
            grid: self.grid,
            coeffs,
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            grid: self.grid,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    /// `self + s·other`.
    pub fn axpy(&self, s: f64, other: &SpectralField) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        Ok(Self {
            grid: self.grid,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b * s)
                .collect(),
        })
    }

    pub fn add(&self, other: &SpectralField) -> Result<Self> {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &SpectralField) -> Result<Self> {
        self.axpy(-1.0, other)
    }
}

struct Plan {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

fn plan(n: usize) -> Arc<Plan> {
    static PLANS: OnceLock<Mutex<(FftPlanner<f64>, HashMap<usize, Arc<Plan>>)>> = OnceLock::new();
    let cache = PLANS.get_or_init(|| Mutex::new((FftPlanner::new(), HashMap::new())));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    let (planner, plans) = &mut *guard;
    if let Some(p) = plans.get(&n) {
        return Arc::clone(p);
    }
    let p = Arc::new(Plan {
        forward: planner.plan_fft_forward(n),
        inverse: planner.plan_fft_inverse(n),
    });
    plans.insert(n, Arc::clone(&p));
    p
}

fn transpose_square(data: &mut [Complex64], n: usize) {
    const BLOCK: usize = 32;
    for bi in (0..n).step_by(BLOCK) {
        for bj in (bi..n).step_by(BLOCK) {
            for i in bi..(bi + BLOCK).min(n) {
                let start = if bi == bj { i + 1 } else { bj };
                for j in start..(bj + BLOCK).min(n) {
                    data.swap(i * n + j, j * n + i);
                }
            }
        }
    }
}

/// Unnormalised 2D DFT in place.
fn fft2(data: &mut [Complex64], n: usize, inverse: bool) {
    let p = plan(n);
    let fft = if inverse { &p.inverse } else { &p.forward };
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    fft.process_with_scratch(data, &mut scratch);
    transpose_square(data, n);
    fft.process_with_scratch(data, &mut scratch);
    transpose_square(data, n);
}

// Samples start at −L/2, so coefficients pick up e^{ik·L/2} = (−1)^{j1+j2}.
fn parity(m1: usize, m2: usize) -> f64 {
    if (m1 + m2).is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

pub fn forward_transform(f: &ScalarField) -> SpectralField {
    let grid = *f.grid();
    let n = grid.n();
    let mut data: Vec<Complex64> = f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft2(&mut data, n, false);
    let norm = 1.0 / (n * n) as f64;
    for m1 in 0..n {
        for m2 in 0..n {
            data[m1 * n + m2] *= norm * parity(m1, m2);
        }
    }
    SpectralField { grid, coeffs: data }
}

/// Forward transforms of two real fields with one complex FFT.
pub fn forward_transform_pair(f: &ScalarField, g: &ScalarField) -> Result<(SpectralField, SpectralField)> {
    f.grid.check_same(&g.grid)?;
    let grid = f.grid;
    let n = grid.n();
    let mut data: Vec<Complex64> = f.values.iter().zip(&g.values).map(|(&a, &b)| Complex64::new(a, b)).collect();
    fft2(&mut data, n, false);
    let norm = 0.5 / (n * n) as f64;
    let mut a = vec![Complex64::new(0.0, 0.0); n * n];
    let mut b = vec![Complex64::new(0.0, 0.0); n * n];
    for m1 in 0..n {
        let p1 = (n - m1) % n;
        for m2 in 0..n {
            let p2 = (n - m2) % n;
            let h = data[m1 * n + m2];
            let hc = data[p1 * n + p2].conj();
            let s = norm * parity(m1, m2);
            a[m1 * n + m2] = (h + hc) * s;
            b[m1 * n + m2] = (h - hc) * Complex64::new(0.0, -s);
        }
    }
    Ok((SpectralField { grid, coeffs: a }, SpectralField { grid, coeffs: b }))
}

/// Inverse transforms of two Hermitian spectra with one complex FFT.
pub fn inverse_transform_pair(a: &SpectralField, b: &SpectralField) -> Result<(ScalarField, ScalarField)> {
    a.grid.check_same(&b.grid)?;
    let grid = a.grid;
    let n = grid.n();
    let mut data: Vec<Complex64> = a
        .coeffs
        .iter()
        .zip(&b.coeffs)
        .enumerate()
        .map(|(i, (&x, &y))| (x + Complex64::new(0.0, 1.0) * y) * parity(i / n, i % n))
        .collect();
    fft2(&mut data, n, true);
    let re = data.iter().map(|c| c.re).collect();
    let im = data.iter().map(|c| c.im).collect();
    Ok((ScalarField { grid, values: re }, ScalarField { grid, values: im }))
}

/// Inverse transform; the imaginary part (round-off for Hermitian input) is dropped.
pub fn inverse_transform(spec: &SpectralField) -> ScalarField {
    let grid = *spec.grid();
    let n = grid.n();
    let mut data = spec.coeffs().to_vec();
    for m1 in 0..n {
        for m2 in 0..n {
            data[m1 * n + m2] *= parity(m1, m2);
        }
    }
    fft2(&mut data, n, true);
    ScalarField {
        grid,
        values: data.into_iter().map(|c| c.re).collect(),
    }
}

/// Radial-power Fourier multipliers used by the models.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SymbolSpec {
    /// `|k|^α`, `α ∈ (0, 2]`.
    FractionalLaplacian { alpha: f64 },
    /// Riesz transform `R_j`, symbol `i k_j / |k|`.
    RieszComponent { axis: Axis },
    /// `|k|^{−β}`, zero at `k = 0`.
    NegPower { beta: f64 },
    /// Component of `∇^⊥ |∇|^{−β−1}`: `(−i k2, i k1) |k|^{−β−1}`, zero at `k = 0`.
    BiotSavartPerp { beta: f64, axis: Axis },
}

impl SymbolSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SymbolSpec::FractionalLaplacian { alpha } if !(alpha > 0.0 && alpha <= 2.0) => Err(
                Error::InvalidParameter(format!("fractional Laplacian order {alpha} outside (0, 2]")),
            ),
            SymbolSpec::NegPower { beta } if !(beta >= 0.0 && beta.is_finite()) => Err(
                Error::InvalidParameter(format!("negative power {beta} must be >= 0")),
            ),
            SymbolSpec::BiotSavartPerp { beta, .. } if !(0.0..2.0).contains(&beta) => Err(
                Error::InvalidParameter(format!("Biot-Savart exponent {beta} outside [0, 2)")),
            ),
            _ => Ok(()),
        }
    }

    /// Symbol value at FFT position `(m1, m2)` of `grid`.
    pub fn value(&self, grid: &GridSpec, m1: usize, m2: usize) -> Complex64 {
        let k = grid.k_mag(m1, m2);
        let zero = Complex64::new(0.0, 0.0);
        match *self {
            SymbolSpec::FractionalLaplacian { alpha } => Complex64::new(k.powf(alpha), 0.0),
            _ if k == 0.0 => zero,
            SymbolSpec::NegPower { beta } => Complex64::new(k.powf(-beta), 0.0),
            SymbolSpec::RieszComponent { axis } => {
                let kj = match axis {
                    Axis::X1 => grid.odd_wavenumber(m1),
                    Axis::X2 => grid.odd_wavenumber(m2),
                };
                Complex64::new(0.0, kj / k)
            }
            SymbolSpec::BiotSavartPerp { beta, axis } => {
                let radial = k.powf(-beta - 1.0);
                match axis {
                    Axis::X1 => Complex64::new(0.0, -grid.odd_wavenumber(m2) * radial),
                    Axis::X2 => Complex64::new(0.0, grid.odd_wavenumber(m1) * radial),
                }
            }
        }
    }
}

/// Pointwise multiplication of the coefficients by a symbol.
pub fn apply_symbol(spec: &SpectralField, symbol: &SymbolSpec) -> Result<SpectralField> {
    symbol.validate()?;
    let grid = *spec.grid();
    Ok(spec.map_indexed(|m1, m2| symbol.value(&grid, m1, m2)))
}

/// Generalised Biot–Savart law `u = ∇^⊥ |∇|^{−β−1} z`.
pub fn biot_savart_velocity(z: &SpectralField, beta: f64) -> Result<(SpectralField, SpectralField)> {
    if !(0.0..2.0).contains(&beta) {
        return Err(Error::InvalidParameter(format!(
            "Biot-Savart exponent {beta} outside [0, 2)"
        )));
    }
    let grid = *z.grid();
    let n = grid.n();
    let mut u1 = SpectralField::zeros(grid);
    let mut u2 = SpectralField::zeros(grid);
    for m1 in 0..n {
        let k1 = grid.odd_wavenumber(m1);
        for m2 in 0..n {
            let k = grid.k_mag(m1, m2);
            if k == 0.0 {
                continue;
            }
            let idx = m1 * n + m2;
            let p = z.coeffs[idx] * k.powf(-beta - 1.0);
            let k2 = grid.odd_wavenumber(m2);
            u1.coeffs[idx] = Complex64::new(0.0, -k2) * p;
            u2.coeffs[idx] = Complex64::new(0.0, k1) * p;
        }
    }
    Ok((u1, u2))
}

/// `∂_axis` as multiplication by `i k_axis`.
pub fn spectral_gradient(spec: &SpectralField, axis: Axis) -> SpectralField {
    let grid = *spec.grid();
    spec.map_indexed(|m1, m2| {
        let k = match axis {
            Axis::X1 => grid.odd_wavenumber(m1),
            Axis::X2 => grid.odd_wavenumber(m2),
        };
        Complex64::new(0.0, k)
    })
}

/// True when the mode at FFT position `(m1, m2)` survives the 2/3 rule.
pub fn survives_dealiasing(grid: &GridSpec, m1: usize, m2: usize) -> bool {
    let cut = grid.n() as i64 / 3;
    grid.lattice_index(m1).abs() <= cut && grid.lattice_index(m2).abs() <= cut
}

/// 2/3-rule truncation: zeroes every mode with `max(|j1|, |j2|) > n/3`.
pub fn dealias(spec: &SpectralField) -> SpectralField {
    let grid = *spec.grid();
    let mut out = spec.clone();
    let n = grid.n();
    for m1 in 0..n {
        for m2 in 0..n {
            if !survives_dealiasing(&grid, m1, m2) {
                out.coeffs[m1 * n + m2] = Complex64::new(0.0, 0.0);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paired_transforms_match_single_ones() {
        let g = make_grid(32, 10.0).unwrap();
        let f = ScalarField::from_fn(g, |x, y| (-(x * x + 2.0 * y * y) / 3.0).exp() * (1.0 + x));
        let h = ScalarField::from_fn(g, |x, y| (0.3 * x).sin() * (-(x * x + y * y) / 5.0).exp() + y * 1e-3);
        let (ff, hh) = forward_transform_pair(&f, &h).unwrap();
        for (got, want) in [(&ff, forward_transform(&f)), (&hh, forward_transform(&h))] {
            assert!(got.sub(&want).unwrap().coeff_norm() < 1e-15 * (1.0 + want.coeff_norm()));
        }
        let (f2, h2) = inverse_transform_pair(&ff, &hh).unwrap();
        assert!(f2.sub(&f).unwrap().max_abs() < 1e-14);
        assert!(h2.sub(&h).unwrap().max_abs() < 1e-14);
    }
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(grid: GridSpec, seed: u64) -> ScalarField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        ScalarField::new(grid, values).unwrap()
    }

    fn max_diff(a: &ScalarField, b: &ScalarField) -> f64 {
        a.values()
            .iter()
            .zip(b.values())
            .fold(0.0, |m, (x, y)| m.max((x - y).abs()))
    }

    #[test]
    fn grid_construction() {
        let g = make_grid(8, 2.0 * PI).unwrap();
        assert!((g.spacing() - 2.0 * PI / 8.0).abs() < 1e-15);
        let idx: Vec<i64> = (0..8).map(|m| g.lattice_index(m)).collect();
        assert_eq!(idx, vec![0, 1, 2, 3, -4, -3, -2, -1]);
        assert!((g.wavenumber(3) - 3.0).abs() < 1e-14);

        let g = make_grid(256, 64.0).unwrap();
        assert_eq!(g.spacing(), 0.25);
        let kmax = (0..256).map(|m| g.wavenumber(m).abs()).fold(0.0, f64::max);
        assert!((kmax - 4.0 * PI).abs() < 1e-12);
        assert!((g.k_mag(3, 4) - g.dk() * 5.0).abs() < 1e-15);

        assert!(make_grid(7, 1.0).is_err());
        assert!(make_grid(6, 1.0).is_err());
        assert!(make_grid(8, 0.0).is_err());
        assert!(make_grid(8, -1.0).is_err());
    }

    #[test]
    fn plane_wave_and_constant() {
        let g = make_grid(16, 4.0).unwrap();
        let f = ScalarField::from_fn(g, |x1, _| (2.0 * PI * x1 / 4.0).cos());
        let s = forward_transform(&f);
        for (idx, c) in s.coeffs().iter().enumerate() {
            let expected = if idx == 16 || idx == 15 * 16 { 0.5 } else { 0.0 };
            assert!((c.re - expected).abs() < 1e-14 && c.im.abs() < 1e-14, "{idx} {c}");
        }
        let c = ScalarField::from_fn(g, |_, _| 2.5);
        let s = forward_transform(&c);
        assert!((s.coeffs()[0].re - 2.5).abs() < 1e-14);
        assert!(s.coeffs()[1..].iter().all(|c| c.norm() < 1e-14));
        assert!((s.mass() - 2.5 * 16.0).abs() < 1e-12);
    }

    #[test]
    fn round_trip_and_parseval() {
        for &n in &[8usize, 32, 64] {
            let g = make_grid(n, 3.0).unwrap();
            let f = random_field(g, n as u64);
            let s = forward_transform(&f);
            let back = inverse_transform(&s);
            assert!(max_diff(&f, &back) <= 10.0 * f64::EPSILON * f.max_abs() * (n as f64).log2());
            let grid_l2 = (f.values().iter().map(|v| v * v).sum::<f64>() * g.cell_area()).sqrt();
            assert!((grid_l2 - s.l2_norm()).abs() <= 1e-12 * grid_l2);
            assert!(s.hermitian_defect() < 1e-15);
        }
    }

    #[test]
    fn fractional_laplacian_on_single_mode() {
        let g = make_grid(32, 2.0 * PI).unwrap();
        let f = ScalarField::from_fn(g, |x1, x2| (3.0 * x1 + 2.0 * x2).cos());
        let k = (13.0f64).sqrt();
        for &alpha in &[0.5, 1.3, 2.0] {
            let out = inverse_transform(
                &apply_symbol(&forward_transform(&f), &SymbolSpec::FractionalLaplacian { alpha }).unwrap(),
            );
            let expected = f.scale(k.powf(alpha));
            assert!(max_diff(&out, &expected) < 1e-12 * k.powf(alpha));
        }
    }

    #[test]
    fn alpha_two_is_negative_laplacian() {
        let g = make_grid(32, 5.0).unwrap();
        let f = ScalarField::from_fn(g, |x1, x2| (-(x1 * x1 + x2 * x2)).exp());
        let s = forward_transform(&f);
        let frac = apply_symbol(&s, &SymbolSpec::FractionalLaplacian { alpha: 2.0 }).unwrap();
        let lap = spectral_gradient(&spectral_gradient(&s, Axis::X1), Axis::X1)
            .add(&spectral_gradient(&spectral_gradient(&s, Axis::X2), Axis::X2))
            .unwrap()
            .scale(-1.0);
        // Only the Nyquist line differs (odd wavenumber is zeroed there).
        let n = g.n();
        let mut worst: f64 = 0.0;
        for m1 in 0..n {
            for m2 in 0..n {
                if m1 == n / 2 || m2 == n / 2 {
                    continue;
                }
                worst = worst.max((frac.coeffs()[m1 * n + m2] - lap.coeffs()[m1 * n + m2]).norm());
            }
        }
        assert!(worst <= 1e-12 * frac.coeff_norm());
    }

    #[test]
    fn symbol_validation_and_zero_mode() {
        let g = make_grid(8, 1.0).unwrap();
        let s = forward_transform(&ScalarField::from_fn(g, |_, _| 1.0));
        assert!(apply_symbol(&s, &SymbolSpec::FractionalLaplacian { alpha: 2.5 }).is_err());
        assert!(apply_symbol(&s, &SymbolSpec::FractionalLaplacian { alpha: 0.0 }).is_err());
        assert!(apply_symbol(&s, &SymbolSpec::NegPower { beta: -0.1 }).is_err());
        let out = apply_symbol(&s, &SymbolSpec::NegPower { beta: 1.0 }).unwrap();
        assert_eq!(out.coeff_norm(), 0.0);
        assert!(biot_savart_velocity(&s, 2.0).is_err());
    }

    #[test]
    fn biot_savart_single_mode() {
        let g = make_grid(32, 2.0 * PI).unwrap();
        let z = forward_transform(&ScalarField::from_fn(g, |x1, _| x1.cos()));
        for &beta in &[0.0, 1.0, 1.5] {
            let (u1, u2) = biot_savart_velocity(&z, beta).unwrap();
            let u1 = inverse_transform(&u1);
            let u2 = inverse_transform(&u2);
            assert!(u1.max_abs() < 1e-13);
            // The Riesz symbol i k/|k| sends cos x1 to −sin x1.
            let expected = ScalarField::from_fn(g, |x1, _| -x1.sin());
            assert!(max_diff(&u2, &expected) < 1e-13);
        }
        // Riesz form for β = 0: u1 = −R2 z, u2 = R1 z.
        let (u1, u2) = biot_savart_velocity(&z, 0.0).unwrap();
        let r1 = apply_symbol(&z, &SymbolSpec::RieszComponent { axis: Axis::X1 }).unwrap();
        let r2 = apply_symbol(&z, &SymbolSpec::RieszComponent { axis: Axis::X2 }).unwrap();
        assert!(u1.add(&r2).unwrap().coeff_norm() < 1e-15);
        assert!(u2.sub(&r1).unwrap().coeff_norm() < 1e-15);
    }

    #[test]
    fn biot_savart_beta_one_is_perp_inverse_laplacian() {
        let g = make_grid(32, 7.0).unwrap();
        let z = forward_transform(&random_field(g, 3));
        let (u1, u2) = biot_savart_velocity(&z, 1.0).unwrap();
        let psi = apply_symbol(&z, &SymbolSpec::NegPower { beta: 2.0 }).unwrap();
        let v1 = spectral_gradient(&psi, Axis::X2).scale(-1.0);
        let v2 = spectral_gradient(&psi, Axis::X1);
        assert!(u1.sub(&v1).unwrap().coeff_norm() <= 1e-12 * u1.coeff_norm());
        assert!(u2.sub(&v2).unwrap().coeff_norm() <= 1e-12 * u2.coeff_norm());
        // ∂1u2 − ∂2u1 = −z away from the zero mode and Nyquist lines.
        let curl = spectral_gradient(&u2, Axis::X1)
            .sub(&spectral_gradient(&u1, Axis::X2))
            .unwrap();
        let n = g.n();
        for m1 in 0..n {
            for m2 in 0..n {
                if (m1, m2) == (0, 0) || m1 == n / 2 || m2 == n / 2 {
                    continue;
                }
                let i = m1 * n + m2;
                assert!((curl.coeffs()[i] + z.coeffs()[i]).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn gradient_examples() {
        let g = make_grid(32, 2.0 * PI).unwrap();
        let s = forward_transform(&ScalarField::from_fn(g, |x1, _| x1.sin()));
        let d1 = inverse_transform(&spectral_gradient(&s, Axis::X1));
        assert!(max_diff(&d1, &ScalarField::from_fn(g, |x1, _| x1.cos())) < 1e-12);
        let d2 = spectral_gradient(&s, Axis::X2);
        assert!(d2.coeff_norm() < 1e-15);
        let f = forward_transform(&random_field(g, 9));
        let a = spectral_gradient(&spectral_gradient(&f, Axis::X1), Axis::X2);
        let b = spectral_gradient(&spectral_gradient(&f, Axis::X2), Axis::X1);
        assert!(a.sub(&b).unwrap().coeff_norm() <= 1e-14 * a.coeff_norm());
        assert!(inverse_transform(&a).is_finite());
        assert!(spectral_gradient(&f, Axis::X1).hermitian_defect() < 1e-15);
    }

    #[test]
    fn dealias_rule() {
        let g = make_grid(12, 1.0).unwrap();
        assert!(survives_dealiasing(&g, g.position(4), g.position(-4)));
        assert!(!survives_dealiasing(&g, g.position(5), 0));
        assert!(!survives_dealiasing(&g, 0, g.position(-5)));
        let f = forward_transform(&random_field(g, 1));
        let once = dealias(&f);
        assert_eq!(dealias(&once), once);
        assert!(once.coeff_norm() <= f.coeff_norm());
        assert_eq!(once.at(4, 4), f.at(4, 4));
        assert_eq!(once.at(5, 0), Complex64::new(0.0, 0.0));
    }
}
