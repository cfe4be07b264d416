//! Pure-loss channel, built two independent ways: a beam splitter acting on
//! the signal and a vacuum ancilla followed by a partial trace, and the
//! equivalent single-mode Kraus decomposition.
//!
//! `eta` is always the power transmission: the amplitude transmission of
//! the beam splitter is `cos(θ/2) = √η`, so `⟨n⟩_out = η ⟨n⟩_in`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{self, DensityMatrix};
use crate::linalg::{self, CMatrix, ZERO};

/// Largest two-mode dimension `dim_a * dim_b` the dense path will build.
pub const TWO_MODE_BUDGET: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossChannelSpec {
    pub eta: f64,
    pub phi: f64,
    pub ancilla_dim: usize,
}

impl LossChannelSpec {
    pub fn new(eta: f64, phi: f64, ancilla_dim: usize) -> Result<Self> {
        let spec = Self {
            eta,
            phi,
            ancilla_dim,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Φ = 0 and an ancilla as large as the signal space.
    pub fn for_dim(eta: f64, dim: usize) -> Result<Self> {
        Self::new(eta, 0.0, dim)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::InvalidParameter(format!(
                "transmission eta = {} outside [0, 1]",
                self.eta
            )));
        }
        if !self.phi.is_finite() {
            return Err(Error::InvalidParameter("phase must be finite".into()));
        }
        if self.ancilla_dim == 0 {
            return Err(Error::InvalidDimension(0));
        }
        Ok(())
    }

    /// Mixing angle θ with `cos(θ/2) = √η`.
    pub fn mixing_angle(&self) -> f64 {
        2.0 * self.eta.sqrt().clamp(0.0, 1.0).acos()
    }
}

/// Density matrix on the product space of modes `a` and `b`; basis index
/// of `|m⟩_a |n⟩_b` is `m * dim_b + n`.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoModeState {
    dim_a: usize,
    dim_b: usize,
    matrix: CMatrix,
}

impl TwoModeState {
    pub fn new(dim_a: usize, dim_b: usize, matrix: CMatrix) -> Result<Self> {
        let total = dim_a * dim_b;
        if total == 0 {
            return Err(Error::InvalidDimension(0));
        }
        if matrix.nrows() != total || matrix.ncols() != total {
            return Err(Error::DimensionMismatch(total, matrix.nrows()));
        }
        fock::check_invariants(&matrix)?;
        Ok(Self {
            dim_a,
            dim_b,
            matrix,
        })
    }

    pub fn product(a: &DensityMatrix, b: &DensityMatrix) -> Self {
        Self {
            dim_a: a.dim(),
            dim_b: b.dim(),
            matrix: a.matrix().kronecker(b.matrix()),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.dim_a, self.dim_b)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// `U X U†`.
    pub fn conjugate(&self, unitary: &CMatrix) -> Result<Self> {
        let total = self.dim_a * self.dim_b;
        if unitary.nrows() != total || unitary.ncols() != total {
            return Err(Error::DimensionMismatch(total, unitary.nrows()));
        }
        let matrix = linalg::hermitize(&(unitary * &self.matrix * unitary.adjoint()));
        Ok(Self {
            dim_a: self.dim_a,
            dim_b: self.dim_b,
            matrix,
        })
    }
}

/// Reduced state of mode `keep` (0 = a, 1 = b).
pub fn partial_trace(state: &TwoModeState, keep: usize) -> Result<DensityMatrix> {
    let (da, db) = state.dims();
    let m = state.matrix();
    let out = match keep {
        0 => CMatrix::from_fn(da, da, |i, j| {
            (0..db).map(|k| m[(i * db + k, j * db + k)]).sum()
        }),
        1 => CMatrix::from_fn(db, db, |i, j| {
            (0..da).map(|k| m[(k * db + i, k * db + j)]).sum()
        }),
        other => return Err(Error::InvalidMode(other)),
    };
    Ok(DensityMatrix::from_raw(out))
}

/// Beam-splitter unitary `exp{(θ/2)(a†b e^{iΦ} − a b† e^{−iΦ})}` on the
/// truncated two-mode space, exponentiated separately within each
/// total-photon-number block.
pub fn bs_unitary(spec: &LossChannelSpec, dim_a: usize, dim_b: usize) -> Result<CMatrix> {
    spec.validate()?;
    let total = dim_a * dim_b;
    if total == 0 {
        return Err(Error::InvalidDimension(0));
    }
    if total > TWO_MODE_BUDGET {
        return Err(Error::DimensionBudget(total, TWO_MODE_BUDGET));
    }
    let half = 0.5 * spec.mixing_angle();
    let fwd = Complex64::from_polar(half, spec.phi);
    let mut u = CMatrix::zeros(total, total);

    for photons in 0..(dim_a + dim_b - 1) {
        let lo = photons.saturating_sub(dim_b - 1);
        let hi = photons.min(dim_a - 1);
        let size = hi - lo + 1;
        let index = |m: usize| m * dim_b + (photons - m);

        // H = -i G, so U = exp(i H); within the block a†b raises m by one.
        let mut h = CMatrix::zeros(size, size);
        for m in lo..hi {
            let n = photons - m;
            let amp = ((m + 1) as f64 * n as f64).sqrt();
            let g = fwd * amp;
            let (row, col) = (m + 1 - lo, m - lo);
            h[(row, col)] = -Complex64::i() * g;
            h[(col, row)] = (-Complex64::i() * g).conj();
        }
        let block = linalg::expi_hermitian(&h);
        for r in 0..size {
            for c in 0..size {
                u[(index(lo + r), index(lo + c))] = block[(r, c)];
            }
        }
    }
    Ok(u)
}

/// `Tr_b{U (ρ ⊗ |0⟩⟨0|) U†}` through the dense two-mode path.
pub fn apply_loss_unitary(rho: &DensityMatrix, spec: &LossChannelSpec) -> Result<DensityMatrix> {
    spec.validate()?;
    if spec.ancilla_dim < rho.dim() {
        return Err(Error::InvalidParameter(format!(
            "ancilla dimension {} smaller than signal dimension {}",
            spec.ancilla_dim,
            rho.dim()
        )));
    }
    let u = bs_unitary(spec, rho.dim(), spec.ancilla_dim)?;
    let joint = TwoModeState::product(rho, &fock::vacuum(spec.ancilla_dim)?);
    partial_trace(&joint.conjugate(&u)?, 0)
}

/// `K_k = Σ_n √(C(n,k) η^{n−k} (1−η)^k) |n−k⟩⟨n|` for `k = 0..dim`.
pub fn kraus_operators(eta: f64, dim: usize) -> Result<Vec<CMatrix>> {
    LossChannelSpec::for_dim(eta, dim.max(1))?;
    let coeff = KrausCoefficients::new(eta, dim);
    Ok((0..dim)
        .map(|k| {
            let mut m = CMatrix::zeros(dim, dim);
            for n in k..dim {
                m[(n - k, n)] = Complex64::from(coeff.get(n, k));
            }
            m
        })
        .collect())
}

struct KrausCoefficients {
    dim: usize,
    values: Vec<f64>,
}

impl KrausCoefficients {
    fn new(eta: f64, dim: usize) -> Self {
        let mut values = vec![0.0; dim * dim];
        // binomial rows built additively to stay exact for small n
        let mut binom = vec![0.0f64; dim];
        for n in 0..dim {
            for k in (1..=n).rev() {
                binom[k] += binom[k - 1];
            }
            binom[0] = 1.0;
            for k in 0..=n {
                let w = binom[k] * eta.powi((n - k) as i32) * (1.0 - eta).powi(k as i32);
                values[n * dim + k] = w.sqrt();
            }
        }
        Self { dim, values }
    }

    fn get(&self, n: usize, k: usize) -> f64 {
        self.values[n * self.dim + k]
    }
}

/// Pure loss via the Kraus sum `Σ_k K_k ρ K_k†`, evaluated entrywise as
/// `ρ'_{ij} = Σ_k c(i+k, k) c(j+k, k) ρ_{i+k, j+k}`.
pub fn apply_loss_kraus(rho: &DensityMatrix, eta: f64) -> Result<DensityMatrix> {
    let dim = rho.dim();
    LossChannelSpec::for_dim(eta, dim)?;
    let coeff = KrausCoefficients::new(eta, dim);
    let m = rho.matrix();
    let out = CMatrix::from_fn(dim, dim, |i, j| {
        let mut acc = ZERO;
        for k in 0..dim - i.max(j) {
            acc += m[(i + k, j + k)] * (coeff.get(i + k, k) * coeff.get(j + k, k));
        }
        acc
    });
    Ok(DensityMatrix::from_raw(out))
}

/// The loss channel used by the analysis layer (Kraus path).
pub fn apply_loss(rho: &DensityMatrix, eta: f64) -> Result<DensityMatrix> {
    apply_loss_kraus(rho, eta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{vacuum, variance, SqueezedStateParams};
    use crate::linalg::max_abs_diff;

    fn reference_state(dim: usize) -> DensityMatrix {
        let p = SqueezedStateParams::from_db(-1.9, 6.1, 0.0).unwrap();
        fock::squeezed_thermal(&p, dim).unwrap().rho
    }

    #[test]
    fn unitary_is_unitary_and_conserves_photons() {
        let spec = LossChannelSpec::new(0.37, 0.4, 5).unwrap();
        let u = bs_unitary(&spec, 4, 5).unwrap();
        let id = CMatrix::identity(20, 20);
        assert!(max_abs_diff(&(&u * u.adjoint()), &id) < 1e-10);
        for r in 0..20 {
            for c in 0..20 {
                let nr = r / 5 + r % 5;
                let nc = c / 5 + c % 5;
                if nr != nc {
                    assert_eq!(u[(r, c)], ZERO);
                }
            }
        }
    }

    #[test]
    fn full_transmission_is_identity() {
        let spec = LossChannelSpec::for_dim(1.0, 4).unwrap();
        let u = bs_unitary(&spec, 4, 4).unwrap();
        assert!(max_abs_diff(&u, &CMatrix::identity(16, 16)) < 1e-12);
    }

    #[test]
    fn zero_transmission_swaps_modes() {
        let d = 4;
        let spec = LossChannelSpec::for_dim(0.0, d).unwrap();
        let u = bs_unitary(&spec, d, d).unwrap();
        // |m, n⟩ → phase · |n, m⟩ for m + n < d
        for m in 0..d {
            for n in 0..d - m {
                let amp = u[(n * d + m, m * d + n)];
                assert!((amp.norm() - 1.0).abs() < 1e-10, "({m},{n})");
            }
        }
    }

    #[test]
    fn balanced_splitter_single_photon() {
        // block N = 1: {|0,1⟩, |1,0⟩} rotated by θ/2 = π/4
        let d = 3;
        let spec = LossChannelSpec::for_dim(0.5, d).unwrap();
        let u = bs_unitary(&spec, d, d).unwrap();
        let input = d; // |1,0⟩
        let stay = u[(d, input)].norm_sqr();
        let moved = u[(1, input)].norm_sqr();
        assert!((stay - 0.5).abs() < 1e-12);
        assert!((moved - 0.5).abs() < 1e-12);
    }

    #[test]
    fn budget_is_enforced() {
        let spec = LossChannelSpec::for_dim(0.5, 80).unwrap();
        assert!(matches!(
            bs_unitary(&spec, 80, 80),
            Err(Error::DimensionBudget(6400, _))
        ));
    }

    #[test]
    fn invalid_specs() {
        assert!(LossChannelSpec::for_dim(1.2, 4).is_err());
        assert!(LossChannelSpec::for_dim(-0.1, 4).is_err());
        assert!(LossChannelSpec::new(0.5, 0.0, 0).is_err());
        let rho = vacuum(6).unwrap();
        let small = LossChannelSpec::new(0.5, 0.0, 3).unwrap();
        assert!(apply_loss_unitary(&rho, &small).is_err());
    }

    #[test]
    fn unitary_path_limits() {
        let rho = reference_state(10);
        let keep = apply_loss_unitary(&rho, &LossChannelSpec::for_dim(1.0, 10).unwrap()).unwrap();
        assert!(max_abs_diff(keep.matrix(), rho.matrix()) < 1e-10);
        let gone = apply_loss_unitary(&rho, &LossChannelSpec::for_dim(0.0, 10).unwrap()).unwrap();
        assert!(max_abs_diff(gone.matrix(), vacuum(10).unwrap().matrix()) < 1e-10);
    }

    #[test]
    fn variances_after_loss() {
        // V_out = η V_in + (1 − η)/2
        let eta = 0.33;
        let v_min = fock::from_db(-1.9);
        let v_max = fock::from_db(6.1);
        let oracle_min = eta * v_min + (1.0 - eta) / 2.0;
        let oracle_max = eta * v_max + (1.0 - eta) / 2.0;
        assert!((oracle_min - 0.4416).abs() < 1e-4);
        assert!((oracle_max - 1.0072).abs() < 1e-4);
        assert!((fock::to_db(oracle_min) + 0.540).abs() < 1e-3);
        assert!((fock::to_db(oracle_max) - 3.042).abs() < 1.5e-3);

        let rho = reference_state(16);
        let spec = LossChannelSpec::for_dim(eta, 16).unwrap();
        let out = apply_loss_unitary(&rho, &spec).unwrap();
        out.validate().unwrap();
        for theta in [0.0, 0.3, std::f64::consts::FRAC_PI_2] {
            let want = eta * variance(&rho, theta) + (1.0 - eta) / 2.0;
            assert!((variance(&out, theta) - want).abs() < 1e-8);
        }
    }

    #[test]
    fn kraus_completeness() {
        for eta in [0.0, 0.25, 0.33, 1.0] {
            let ks = kraus_operators(eta, 9).unwrap();
            let sum = ks
                .iter()
                .fold(CMatrix::zeros(9, 9), |acc, k| acc + k.adjoint() * k);
            assert!(max_abs_diff(&sum, &CMatrix::identity(9, 9)) < 1e-10);
        }
    }

    #[test]
    fn kraus_matches_explicit_operator_sum() {
        let rho = reference_state(8);
        let ks = kraus_operators(0.6, 8).unwrap();
        let explicit = ks.iter().fold(CMatrix::zeros(8, 8), |acc, k| {
            acc + k * rho.matrix() * k.adjoint()
        });
        let fast = apply_loss_kraus(&rho, 0.6).unwrap();
        assert!(max_abs_diff(&explicit, fast.matrix()) < 1e-14);
    }

    #[test]
    fn kraus_single_photon_binomial() {
        let one = DensityMatrix::fock(1, 6).unwrap();
        let out = apply_loss_kraus(&one, 0.33).unwrap();
        let pops = out.populations();
        assert!((pops[0] - 0.67).abs() < 1e-14);
        assert!((pops[1] - 0.33).abs() < 1e-14);
        assert!(pops[2..].iter().all(|p| p.abs() < 1e-15));
    }

    #[test]
    fn thermal_stays_thermal() {
        // loss maps n̄ → η n̄; compare against a thermal state built directly
        let d = 40;
        let input = fock::thermal(1.0, d).unwrap();
        assert!(input.truncation_deficit < 1e-11);
        let out = apply_loss_kraus(&input.rho, 0.5).unwrap();
        let want = fock::thermal(0.5, d).unwrap().rho;
        assert!(max_abs_diff(out.matrix(), want.matrix()) < 1e-10);
    }

    #[test]
    fn identity_channel() {
        let rho = reference_state(12);
        let out = apply_loss_kraus(&rho, 1.0).unwrap();
        assert!(max_abs_diff(out.matrix(), rho.matrix()) < 1e-15);
    }

    #[test]
    fn partial_trace_cases() {
        let rho = reference_state(3);
        let sigma = DensityMatrix::fock(1, 2).unwrap();
        let joint = TwoModeState::product(&rho, &sigma);
        let back = partial_trace(&joint, 0).unwrap();
        assert!(max_abs_diff(back.matrix(), rho.matrix()) < 1e-14);
        let other = partial_trace(&joint, 1).unwrap();
        assert!(max_abs_diff(other.matrix(), sigma.matrix()) < 1e-14);
        assert!(matches!(
            partial_trace(&joint, 2),
            Err(Error::InvalidMode(2))
        ));

        // (|00⟩ + |11⟩)/√2 reduces to I/2
        let mut bell = CMatrix::zeros(4, 4);
        for &r in &[0usize, 3] {
            for &c in &[0usize, 3] {
                bell[(r, c)] = Complex64::from(0.5);
            }
        }
        let bell = TwoModeState::new(2, 2, bell).unwrap();
        let reduced = partial_trace(&bell, 0).unwrap();
        assert!(max_abs_diff(reduced.matrix(), &CMatrix::identity(2, 2).unscale(2.0)) < 1e-15);
    }
}
