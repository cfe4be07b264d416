//! Truncated Fock-basis states and operators.
//!
//! Quadratures follow `x_θ = (a e^{-iθ} + a† e^{iθ}) / √2`, so `[x, p] = i`
//! and the vacuum variance (shot-noise level) is 1/2. Decibel values are
//! always `10 log10(V / 0.5)`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector, ONE, ZERO};

pub const DEFAULT_DIM: usize = 16;
pub const VACUUM_VARIANCE: f64 = 0.5;

/// Constructors flag their result when more than this much probability was
/// lost to truncation before renormalizing.
pub const TRUNCATION_FLAG: f64 = 1e-6;

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-9;
pub const PSD_TOL: f64 = 1e-10;

pub fn to_db(variance: f64) -> f64 {
    10.0 * (variance / VACUUM_VARIANCE).log10()
}

pub fn from_db(db: f64) -> f64 {
    VACUUM_VARIANCE * 10f64.powf(db / 10.0)
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 {
        Err(Error::InvalidDimension(dim))
    } else {
        Ok(())
    }
}

/// Hermitian, unit-trace, positive semidefinite matrix on Fock levels `0..dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: CMatrix,
}

impl DensityMatrix {
    /// Validates all three invariants.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        check_invariants(&matrix)?;
        Ok(Self { matrix })
    }

    /// Hermitizes and rescales to unit trace without the eigenvalue check.
    /// Used by numerical routines whose output is PSD by construction.
    pub(crate) fn from_raw(matrix: CMatrix) -> Self {
        let h = linalg::hermitize(&matrix);
        let tr = linalg::trace(&h).re;
        Self {
            matrix: h.unscale(tr),
        }
    }

    pub fn from_pure(state: &StateVector) -> Self {
        let v = state.amplitudes();
        Self::from_raw(v * v.adjoint())
    }

    pub fn fock(n: usize, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        if n >= dim {
            return Err(Error::InvalidParameter(format!(
                "Fock level {n} outside dimension {dim}"
            )));
        }
        let mut m = CMatrix::zeros(dim, dim);
        m[(n, n)] = ONE;
        Ok(Self { matrix: m })
    }

    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            matrix: CMatrix::identity(dim, dim).unscale(dim as f64),
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.matrix[(row, col)]
    }

    pub fn trace(&self) -> f64 {
        linalg::trace(&self.matrix).re
    }

    pub fn purity(&self) -> f64 {
        // Tr ρ² = Σ |ρ_mn|² for Hermitian ρ
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn populations(&self) -> Vec<f64> {
        self.matrix.diagonal().iter().map(|z| z.re).collect()
    }

    pub fn mean_photon_number(&self) -> f64 {
        self.populations()
            .iter()
            .enumerate()
            .map(|(n, p)| n as f64 * p)
            .sum()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::eigvalsh(&self.matrix)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn validate(&self) -> Result<()> {
        check_invariants(&self.matrix)
    }

    /// Copy into a larger space (zero padding) or truncate-and-renormalize
    /// into a smaller one.
    pub fn resized(&self, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        let keep = dim.min(self.dim());
        let mut m = CMatrix::zeros(dim, dim);
        m.view_mut((0, 0), (keep, keep))
            .copy_from(&self.matrix.view((0, 0), (keep, keep)));
        if linalg::trace(&m).re <= 0.0 {
            return Err(Error::InvalidParameter(
                "no population left after truncation".into(),
            ));
        }
        Ok(Self::from_raw(m))
    }
}

pub fn check_invariants(m: &CMatrix) -> Result<()> {
    if m.nrows() == 0 || m.nrows() != m.ncols() {
        return Err(Error::InvalidDimension(m.nrows()));
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidParameter("non-finite matrix entry".into()));
    }
    let herm = linalg::hermitian_deviation(m);
    if herm > HERMITIAN_TOL {
        return Err(Error::NotHermitian(herm));
    }
    let tr = linalg::trace(m).re;
    if (tr - 1.0).abs() > TRACE_TOL {
        return Err(Error::InvalidTrace(tr));
    }
    let min = linalg::eigvalsh(m)[0];
    if min < -PSD_TOL {
        return Err(Error::NotPositive(min));
    }
    Ok(())
}

/// Normalized pure state in the Fock basis.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amplitudes: CVector,
}

impl StateVector {
    pub fn new(amplitudes: CVector) -> Result<Self> {
        check_dim(amplitudes.len())?;
        let norm = amplitudes.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::InvalidParameter("state vector has zero norm".into()));
        }
        Ok(Self {
            amplitudes: amplitudes.unscale(norm),
        })
    }

    pub fn fock(n: usize, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        if n >= dim {
            return Err(Error::InvalidParameter(format!(
                "Fock level {n} outside dimension {dim}"
            )));
        }
        let mut v = CVector::zeros(dim);
        v[n] = ONE;
        Ok(Self { amplitudes: v })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }
}

/// Gaussian single-mode parameters: extremal quadrature variances and the
/// angle at which the minimum occurs (`V(theta0) = v_min`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SqueezedStateParams {
    pub v_min: f64,
    pub v_max: f64,
    pub theta0: f64,
}

impl SqueezedStateParams {
    pub fn new(v_min: f64, v_max: f64, theta0: f64) -> Result<Self> {
        let p = Self {
            v_min,
            v_max,
            theta0,
        };
        p.validate()?;
        Ok(p)
    }

    /// Parameters from squeezing / anti-squeezing in dB relative to shot noise.
    pub fn from_db(sq_db: f64, antisq_db: f64, theta0: f64) -> Result<Self> {
        Self::new(from_db(sq_db), from_db(antisq_db), theta0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.v_min > 0.0 && self.v_min <= self.v_max && self.v_max.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "need 0 < v_min <= v_max, got v_min = {}, v_max = {}",
                self.v_min, self.v_max
            )));
        }
        if !self.theta0.is_finite() {
            return Err(Error::InvalidParameter("theta0 must be finite".into()));
        }
        let product = self.v_min * self.v_max;
        if product < 0.25 - 1e-12 {
            return Err(Error::Heisenberg(product));
        }
        Ok(())
    }

    /// Thermal occupation of the underlying squeezed thermal state.
    pub fn thermal_occupation(&self) -> f64 {
        ((self.v_min * self.v_max).sqrt() - 0.5).max(0.0)
    }

    /// Squeezing parameter `r` with `e^{4r} = v_max / v_min`.
    pub fn squeezing_parameter(&self) -> f64 {
        0.25 * (self.v_max / self.v_min).ln()
    }
}

/// A constructed state together with the probability lost to truncation
/// before renormalization.
#[derive(Clone, Debug)]
pub struct BuiltState {
    pub rho: DensityMatrix,
    pub truncation_deficit: f64,
}

impl BuiltState {
    pub fn truncation_flagged(&self) -> bool {
        self.truncation_deficit > TRUNCATION_FLAG
    }
}

pub fn annihilation(dim: usize) -> Result<CMatrix> {
    check_dim(dim)?;
    let mut a = CMatrix::zeros(dim, dim);
    for n in 1..dim {
        a[(n - 1, n)] = Complex64::from((n as f64).sqrt());
    }
    Ok(a)
}

pub fn creation(dim: usize) -> Result<CMatrix> {
    Ok(annihilation(dim)?.adjoint())
}

pub fn number_operator(dim: usize) -> Result<CMatrix> {
    check_dim(dim)?;
    Ok(CMatrix::from_diagonal(&CVector::from_fn(dim, |n, _| {
        Complex64::from(n as f64)
    })))
}

/// `x_θ = (a e^{-iθ} + a† e^{iθ}) / √2` on the truncated space.
pub fn quadrature_operator(theta: f64, dim: usize) -> Result<CMatrix> {
    let a = annihilation(dim)?;
    let phase = Complex64::from_polar(1.0, -theta);
    let m = a.map(|z| z * phase);
    Ok((&m + m.adjoint()).unscale(std::f64::consts::SQRT_2))
}

pub fn vacuum(dim: usize) -> Result<DensityMatrix> {
    DensityMatrix::fock(0, dim)
}

/// Amplitudes `c_{2n} = (−e^{2iθ0} tanh r)^n √((2n)!) / (2^n n!) / √(cosh r)`
/// on `len` Fock levels.
fn squeezed_vacuum_amplitudes(r: f64, theta0: f64, len: usize) -> CVector {
    let mut c = CVector::zeros(len);
    let ratio = -Complex64::from_polar(r.tanh(), 2.0 * theta0);
    let mut amp = Complex64::from(1.0 / r.cosh().sqrt());
    for k in (0..len).step_by(2) {
        if k > 0 {
            let kf = k as f64;
            amp *= ratio * ((kf * (kf - 1.0)).sqrt() / kf);
        }
        c[k] = amp;
    }
    c
}

/// Pure squeezed vacuum with squeezed quadrature at `theta0`, built from the
/// closed-form even-photon amplitudes at twice the target dimension.
pub fn squeezed_vacuum_pure(r: f64, theta0: f64, dim: usize) -> Result<BuiltState> {
    if !(r >= 0.0 && r.is_finite()) {
        return Err(Error::InvalidParameter(format!("squeezing r = {r}")));
    }
    if dim < 2 {
        return Err(Error::InvalidDimension(dim));
    }
    let work = squeezed_vacuum_amplitudes(r, theta0, 2 * dim);
    let kept = work.rows(0, dim).into_owned();
    let deficit = (1.0 - kept.norm_squared()).max(0.0);
    let state = StateVector::new(kept)?;
    Ok(BuiltState {
        rho: DensityMatrix::from_pure(&state),
        truncation_deficit: deficit,
    })
}

/// Apply `cosh r a† + sinh r a` (the squeezed image of `a†`) to `v`.
fn squeezed_raise(v: &CVector, r: f64) -> CVector {
    let len = v.len();
    let (ch, sh) = (r.cosh(), r.sinh());
    CVector::from_fn(len, |j, _| {
        let mut z = ZERO;
        if j > 0 {
            z += v[j - 1] * (ch * (j as f64).sqrt());
        }
        if j + 1 < len {
            z += v[j + 1] * (sh * ((j + 1) as f64).sqrt());
        }
        z
    })
}

/// `S(r) ρ_th(n̄) S(r)†` rotated so that the minimum variance sits at
/// `theta0`. Thermal components `S|k⟩` are generated by the ladder
/// recursion `S|k⟩ = (cosh r a† + sinh r a) S|k−1⟩ / √k`.
pub fn squeezed_thermal(params: &SqueezedStateParams, dim: usize) -> Result<BuiltState> {
    params.validate()?;
    if dim < 2 {
        return Err(Error::InvalidDimension(dim));
    }
    let nbar = params.thermal_occupation();
    let r = params.squeezing_parameter();
    let work = 2 * dim;
    let scratch = 2 * work;

    let mut column = squeezed_vacuum_amplitudes(r, 0.0, scratch);
    let mut acc = CMatrix::zeros(dim, dim);
    let q = if nbar > 0.0 { nbar / (nbar + 1.0) } else { 0.0 };
    let mut weight = 1.0 / (nbar + 1.0);
    for k in 0..work {
        if k > 0 {
            if weight * q == 0.0 {
                break;
            }
            column = squeezed_raise(&column, r).unscale((k as f64).sqrt());
            weight *= q;
        }
        let head = column.rows(0, dim);
        acc += (head * head.adjoint()).scale(weight);
    }
    let kept = linalg::trace(&acc).re;
    let deficit = (1.0 - kept).max(0.0);
    let rho = phase_rotate(&DensityMatrix::from_raw(acc), params.theta0);
    Ok(BuiltState {
        rho,
        truncation_deficit: deficit,
    })
}

/// Thermal state with mean occupation `nbar`.
pub fn thermal(nbar: f64, dim: usize) -> Result<BuiltState> {
    if !(nbar >= 0.0 && nbar.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "thermal occupation {nbar}"
        )));
    }
    check_dim(dim)?;
    let q = nbar / (nbar + 1.0);
    let diag: Vec<f64> = (0..dim).map(|n| q.powi(n as i32) / (nbar + 1.0)).collect();
    let kept: f64 = diag.iter().sum();
    let m = CMatrix::from_diagonal(&CVector::from_iterator(
        dim,
        diag.iter().map(|&p| Complex64::from(p)),
    ));
    Ok(BuiltState {
        rho: DensityMatrix::from_raw(m),
        truncation_deficit: (1.0 - kept).max(0.0),
    })
}

/// `e^{iφn̂} ρ e^{−iφn̂}`; the variance curve moves as `V'(θ) = V(θ − φ)`.
pub fn phase_rotate(rho: &DensityMatrix, phi: f64) -> DensityMatrix {
    let m = rho.matrix();
    let rotated = DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| {
        m[(i, j)] * Complex64::from_polar(1.0, phi * (i as f64 - j as f64))
    });
    DensityMatrix { matrix: rotated }
}

/// `Tr(ρ M)`.
pub fn expectation(rho: &DensityMatrix, op: &CMatrix) -> Result<Complex64> {
    if op.nrows() != rho.dim() || op.ncols() != rho.dim() {
        return Err(Error::DimensionMismatch(rho.dim(), op.nrows()));
    }
    let m = rho.matrix();
    let mut acc = ZERO;
    for i in 0..rho.dim() {
        for j in 0..rho.dim() {
            acc += m[(i, j)] * op[(j, i)];
        }
    }
    Ok(acc)
}

/// First and second ladder moments, from which every quadrature
/// variance follows exactly.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LadderMoments {
    /// ⟨a⟩
    pub a: Complex64,
    /// ⟨a²⟩
    pub a2: Complex64,
    /// ⟨a†a⟩
    pub n: f64,
}

impl LadderMoments {
    pub fn of(rho: &DensityMatrix) -> Self {
        let m = rho.matrix();
        let d = rho.dim();
        let mut a = ZERO;
        let mut a2 = ZERO;
        let mut n = 0.0;
        for k in 0..d {
            let kf = k as f64;
            n += kf * m[(k, k)].re;
            if k >= 1 {
                a += m[(k, k - 1)] * kf.sqrt();
            }
            if k >= 2 {
                a2 += m[(k, k - 2)] * (kf * (kf - 1.0)).sqrt();
            }
        }
        Self { a, a2, n }
    }

    /// Coefficients of `V(θ) = offset + cos_coef cos 2θ + sin_coef sin 2θ`.
    pub fn variance_coefficients(&self) -> (f64, f64, f64) {
        let offset = self.n - self.a.norm_sqr() + 0.5;
        let b = self.a2 - self.a * self.a;
        (offset, b.re, b.im)
    }

    pub fn mean(&self, theta: f64) -> f64 {
        std::f64::consts::SQRT_2 * (self.a * Complex64::from_polar(1.0, -theta)).re
    }

    pub fn second_moment(&self, theta: f64) -> f64 {
        (self.a2 * Complex64::from_polar(1.0, -2.0 * theta)).re + self.n + 0.5
    }

    pub fn variance(&self, theta: f64) -> f64 {
        let (c0, c, s) = self.variance_coefficients();
        c0 + c * (2.0 * theta).cos() + s * (2.0 * theta).sin()
    }
}

/// `⟨x_θ²⟩ − ⟨x_θ⟩²`, evaluated from ladder moments so the result does not
/// depend on the truncated `a a†` corner.
pub fn variance(rho: &DensityMatrix, theta: f64) -> f64 {
    LadderMoments::of(rho).variance(theta)
}
