//! Maximum-likelihood state reconstruction from binned homodyne data with
//! the diluted iterative `RρR` algorithm.
//!
//! The POVM element of phase bin `p` and value bin `b` is
//! `Π_{pb} = ∫_{bin b} |x_θ⟩⟨x_θ| dx` with `⟨m|x_θ⟩ = e^{imθ} ψ_m(x)`, so
//! `(Π_{pb})_{mn} = e^{i(m−n)θ_p} s_{m−n} J^b_{mn}` where
//! `J^b_{mn} = ∫ ψ_m ψ_n dx` over the bin and `s_k = sinc(kΔθ/2)` averages
//! the phase uniformly across the bin. The outermost value bins extend to
//! ±∞ so that `Σ_b Π_{pb} = I` for every phase bin.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{self, DensityMatrix, DEFAULT_DIM};
use crate::homodyne::{hermite_functions, QuadratureDataset};
use crate::linalg::{self, CMatrix};

pub const DEFAULT_PHASE_BINS: usize = 100;
pub const DEFAULT_VALUE_BINS: usize = 256;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureHistogram {
    pub phase_bins: usize,
    pub value_bins: usize,
    pub edges: Vec<f64>,
    /// Row-major `phase_bins × value_bins`.
    pub counts: Vec<u64>,
    pub phase_centers: Vec<f64>,
}

impl QuadratureHistogram {
    pub fn validate(&self) -> Result<()> {
        if self.phase_bins == 0 || self.value_bins == 0 {
            return Err(Error::InvalidParameter(
                "histogram needs at least one bin".into(),
            ));
        }
        if self.edges.len() != self.value_bins + 1
            || self.counts.len() != self.phase_bins * self.value_bins
            || self.phase_centers.len() != self.phase_bins
        {
            return Err(Error::InvalidParameter(
                "histogram arrays have inconsistent sizes".into(),
            ));
        }
        if self.edges.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter(
                "bin edges must increase strictly".into(),
            ));
        }
        if self.total() == 0 {
            return Err(Error::EmptyDataset);
        }
        Ok(())
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn count(&self, phase_bin: usize, value_bin: usize) -> u64 {
        self.counts[phase_bin * self.value_bins + value_bin]
    }

    pub fn phase_width(&self) -> f64 {
        TAU / self.phase_bins as f64
    }
}

/// Bins records over `[0, 2π)` in phase and `[min, max]` in value with
/// half-open `[lo, hi)` cells; the top edge sits one ulp above the maximum.
pub fn bin(
    ds: &QuadratureDataset,
    phase_bins: usize,
    value_bins: usize,
) -> Result<QuadratureHistogram> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if phase_bins == 0 || value_bins == 0 {
        return Err(Error::InvalidParameter(
            "histogram needs at least one bin".into(),
        ));
    }
    let (lo, hi) = ds
        .values()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
            (a.min(v), b.max(v))
        });
    let hi = if hi > lo { hi.next_up() } else { lo + 1.0 };
    let width = (hi - lo) / value_bins as f64;
    let mut edges: Vec<f64> = (0..=value_bins).map(|k| lo + k as f64 * width).collect();
    edges[value_bins] = hi;

    let phase_width = TAU / phase_bins as f64;
    let mut counts = vec![0u64; phase_bins * value_bins];
    for r in &ds.records {
        let p = ((r.phase / phase_width) as usize).min(phase_bins - 1);
        // guess from the uniform spacing, then settle against the stored edges
        let mut b = (((r.value - lo) / width) as usize).min(value_bins - 1);
        while b > 0 && r.value < edges[b] {
            b -= 1;
        }
        while b + 1 < value_bins && r.value >= edges[b + 1] {
            b += 1;
        }
        counts[p * value_bins + b] += 1;
    }
    let phase_centers = (0..phase_bins)
        .map(|p| (p as f64 + 0.5) * phase_width)
        .collect();
    Ok(QuadratureHistogram {
        phase_bins,
        value_bins,
        edges,
        counts,
        phase_centers,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TomographySettings {
    pub dim: usize,
    pub max_iters: usize,
    pub rel_ll_tol: f64,
    pub prob_floor: f64,
    pub dilution: f64,
    /// Average each POVM element uniformly over its phase bin instead of
    /// evaluating it at the bin centre.
    pub phase_averaging: bool,
    /// Run the density-matrix invariant suite on every iterate.
    pub validate_iterates: bool,
}

impl Default for TomographySettings {
    fn default() -> Self {
        Self {
            dim: DEFAULT_DIM,
            max_iters: 2000,
            rel_ll_tol: 1e-10,
            prob_floor: 1e-12,
            dilution: 0.5,
            phase_averaging: true,
            validate_iterates: false,
        }
    }
}

impl TomographySettings {
    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(Error::InvalidDimension(self.dim));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be positive".into()));
        }
        if !(self.rel_ll_tol > 0.0) || !(self.prob_floor > 0.0) {
            return Err(Error::InvalidParameter(
                "rel_ll_tol and prob_floor must be positive".into(),
            ));
        }
        if !(self.dilution > 0.0 && self.dilution <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "dilution {} outside (0, 1]",
                self.dilution
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct ReconstructionResult {
    pub rho: DensityMatrix,
    pub iterations: usize,
    pub final_log_likelihood: f64,
    pub converged: bool,
    /// Log-likelihood of the starting point followed by every iterate.
    pub log_likelihood_trace: Vec<f64>,
}

/// Gauss-Legendre nodes and weights on [−1, 1] by Newton iteration.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let step = p1 / dp;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

struct OverlapIntegrator {
    dim: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

const QUAD_ORDER: usize = 12;
const QUAD_TOL: f64 = 1e-14;
const QUAD_MAX_DEPTH: usize = 40;

impl OverlapIntegrator {
    fn new(dim: usize) -> Self {
        let (nodes, weights) = gauss_legendre(QUAD_ORDER);
        Self {
            dim,
            nodes,
            weights,
        }
    }

    /// Half-width beyond which every `ψ_n`, `n < dim`, is negligible.
    fn reach(&self) -> f64 {
        (2.0 * self.dim as f64 + 1.0).sqrt() + 12.0
    }

    fn rule(&self, lo: f64, hi: f64) -> Vec<f64> {
        let d = self.dim;
        let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        let mut acc = vec![0.0; d * d];
        for (t, w) in self.nodes.iter().zip(&self.weights) {
            let psi = hermite_functions(mid + half * t, d);
            for m in 0..d {
                for n in m..d {
                    acc[m * d + n] += w * half * psi[m] * psi[n];
                }
            }
        }
        acc
    }

    fn adapt(&self, lo: f64, hi: f64, whole: Vec<f64>, depth: usize) -> Result<Vec<f64>> {
        let mid = 0.5 * (lo + hi);
        let left = self.rule(lo, mid);
        let right = self.rule(mid, hi);
        let err = whole
            .iter()
            .zip(left.iter().zip(&right))
            .map(|(w, (l, r))| (w - l - r).abs())
            .fold(0.0, f64::max);
        if err <= QUAD_TOL {
            return Ok(left.iter().zip(&right).map(|(l, r)| l + r).collect());
        }
        if depth >= QUAD_MAX_DEPTH {
            return Err(Error::Quadrature { lo, hi });
        }
        let a = self.adapt(lo, mid, left, depth + 1)?;
        let b = self.adapt(mid, hi, right, depth + 1)?;
        Ok(a.iter().zip(&b).map(|(x, y)| x + y).collect())
    }

    /// Symmetric `J_{mn} = ∫_lo^hi ψ_m ψ_n dx`, row-major `dim × dim`.
    fn overlaps(&self, lo: f64, hi: f64) -> Result<Vec<f64>> {
        if !(hi > lo) {
            return Err(Error::InvalidParameter(format!(
                "empty interval [{lo}, {hi}]"
            )));
        }
        let reach = self.reach();
        let (a, b) = (lo.max(-reach), hi.min(reach));
        let d = self.dim;
        let mut j = vec![0.0; d * d];
        if b > a {
            let upper = self.adapt(a, b, self.rule(a, b), 0)?;
            for m in 0..d {
                for n in m..d {
                    j[m * d + n] = upper[m * d + n];
                    j[n * d + m] = upper[m * d + n];
                }
            }
        }
        Ok(j)
    }
}

/// `Π = ∫_{x_lo}^{x_hi} |x_θ⟩⟨x_θ| dx` in the Fock basis; infinite limits
/// are accepted.
pub fn povm_element(theta: f64, x_lo: f64, x_hi: f64, dim: usize) -> Result<CMatrix> {
    if dim == 0 {
        return Err(Error::InvalidDimension(0));
    }
    if !(x_lo < x_hi) {
        return Err(Error::InvalidParameter(format!(
            "need x_lo < x_hi, got [{x_lo}, {x_hi}]"
        )));
    }
    let j = OverlapIntegrator::new(dim).overlaps(x_lo, x_hi)?;
    Ok(CMatrix::from_fn(dim, dim, |m, n| {
        Complex64::from_polar(j[m * dim + n], (m as f64 - n as f64) * theta)
    }))
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Histogram plus precomputed POVM data, ready for likelihood evaluation.
pub struct Tomography {
    dim: usize,
    phase_bins: usize,
    value_bins: usize,
    counts: Vec<u64>,
    total: f64,
    prob_floor: f64,
    /// `d² × B`; column `b` holds `J^b` flattened row-major.
    overlaps: DMatrix<f64>,
    /// `P × d²` phase factors `e^{i(m−n)θ_p} s_{m−n}`.
    phases: Vec<Complex64>,
}

impl Tomography {
    pub fn new(hist: &QuadratureHistogram, settings: &TomographySettings) -> Result<Self> {
        hist.validate()?;
        settings.validate()?;
        let d = settings.dim;
        let b_count = hist.value_bins;
        let integrator = OverlapIntegrator::new(d);
        let mut overlaps = DMatrix::zeros(d * d, b_count);
        for b in 0..b_count {
            let lo = if b == 0 {
                f64::NEG_INFINITY
            } else {
                hist.edges[b]
            };
            let hi = if b + 1 == b_count {
                f64::INFINITY
            } else {
                hist.edges[b + 1]
            };
            let j = integrator.overlaps(lo, hi)?;
            overlaps.column_mut(b).copy_from_slice(&j);
        }

        let half_width = 0.5 * hist.phase_width();
        let mut phases = Vec::with_capacity(hist.phase_bins * d * d);
        for &theta in &hist.phase_centers {
            for m in 0..d {
                for n in 0..d {
                    let k = m as f64 - n as f64;
                    let damp = if settings.phase_averaging {
                        sinc(k * half_width)
                    } else {
                        1.0
                    };
                    phases.push(Complex64::from_polar(damp, k * theta));
                }
            }
        }
        Ok(Self {
            dim: d,
            phase_bins: hist.phase_bins,
            value_bins: b_count,
            counts: hist.counts.clone(),
            total: hist.total() as f64,
            prob_floor: settings.prob_floor,
            overlaps,
            phases,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `p_{pb} = Tr(ρ Π_{pb})` as a `P × B` matrix.
    pub fn probabilities(&self, rho: &DensityMatrix) -> Result<DMatrix<f64>> {
        let d = self.dim;
        if rho.dim() != d {
            return Err(Error::DimensionMismatch(d, rho.dim()));
        }
        let m = rho.matrix();
        // Tr(ρΠ) = Σ_mn ρ_nm Π_mn; imaginary parts cancel since J is symmetric
        let weighted = DMatrix::from_fn(self.phase_bins, d * d, |p, idx| {
            let (row, col) = (idx / d, idx % d);
            (m[(col, row)] * self.phases[p * d * d + idx]).re
        });
        Ok(weighted * &self.overlaps)
    }

    fn ll_from(&self, probs: &DMatrix<f64>) -> f64 {
        let b = self.value_bins;
        linalg::compensated_sum(
            self.counts
                .iter()
                .enumerate()
                .filter(|(_, &c)| c > 0)
                .map(|(idx, &c)| c as f64 * probs[(idx / b, idx % b)].max(self.prob_floor).ln()),
        )
    }

    /// `Σ_j n_j ln max(p_j, prob_floor)`.
    pub fn log_likelihood(&self, rho: &DensityMatrix) -> Result<f64> {
        Ok(self.ll_from(&self.probabilities(rho)?))
    }

    fn r_from(&self, probs: &DMatrix<f64>) -> CMatrix {
        let d = self.dim;
        let b = self.value_bins;
        let weights = DMatrix::from_fn(self.phase_bins, b, |p, k| {
            let c = self.counts[p * b + k];
            if c == 0 {
                0.0
            } else {
                c as f64 / self.total / probs[(p, k)].max(self.prob_floor)
            }
        });
        let summed = weights * self.overlaps.transpose();
        CMatrix::from_fn(d, d, |m, n| {
            let idx = m * d + n;
            (0..self.phase_bins)
                .map(|p| self.phases[p * d * d + idx] * summed[(p, idx)])
                .sum()
        })
    }

    /// `R(ρ) = Σ_j (f_j / p_j(ρ)) Π_j`.
    pub fn r_operator(&self, rho: &DensityMatrix) -> Result<CMatrix> {
        Ok(self.r_from(&self.probabilities(rho)?))
    }

    /// Frobenius norm of `R(ρ)ρ − ρ`; zero at a maximum-likelihood fixed point.
    pub fn fixed_point_residual(&self, rho: &DensityMatrix) -> Result<f64> {
        let r = self.r_operator(rho)?;
        Ok((r * rho.matrix() - rho.matrix()).norm())
    }

    /// Diluted iteration `ρ ← N[A ρ A]`, `A = (1−d) I + d R(ρ)`, from the
    /// maximally mixed state.
    pub fn run(&self, settings: &TomographySettings) -> Result<ReconstructionResult> {
        settings.validate()?;
        let d = self.dim;
        let identity = CMatrix::identity(d, d);
        let mut rho = DensityMatrix::maximally_mixed(d)?;
        let mut probs = self.probabilities(&rho)?;
        let mut ll = self.ll_from(&probs);
        if !ll.is_finite() {
            return Err(Error::NonFiniteLikelihood(0));
        }
        let mut trace = vec![ll];
        let mut converged = false;
        let mut iterations = 0;

        for it in 1..=settings.max_iters {
            let r = self.r_from(&probs);
            let a = identity.scale(1.0 - settings.dilution) + r.scale(settings.dilution);
            let next = &a * rho.matrix() * &a;
            let tr = linalg::trace(&next).re;
            if !(tr.is_finite() && tr > 0.0) {
                return Err(Error::NonFiniteLikelihood(it));
            }
            rho = DensityMatrix::from_raw(next);
            if settings.validate_iterates {
                rho.validate()?;
            }
            probs = self.probabilities(&rho)?;
            let next_ll = self.ll_from(&probs);
            if !next_ll.is_finite() {
                return Err(Error::NonFiniteLikelihood(it));
            }
            trace.push(next_ll);
            iterations = it;
            let gain = next_ll - ll;
            let scale = if ll != 0.0 { ll.abs() } else { 1.0 };
            ll = next_ll;
            if gain / scale < settings.rel_ll_tol {
                converged = true;
                break;
            }
        }
        Ok(ReconstructionResult {
            rho,
            iterations,
            final_log_likelihood: ll,
            converged,
            log_likelihood_trace: trace,
        })
    }
}

pub fn reconstruct(
    hist: &QuadratureHistogram,
    settings: &TomographySettings,
) -> Result<ReconstructionResult> {
    Tomography::new(hist, settings)?.run(settings)
}

/// Log-likelihood of `rho` under `hist` with the default probability floor.
pub fn log_likelihood(rho: &DensityMatrix, hist: &QuadratureHistogram) -> Result<f64> {
    let settings = TomographySettings {
        dim: rho.dim(),
        ..TomographySettings::default()
    };
    Tomography::new(hist, &settings)?.log_likelihood(rho)
}

/// Bins with the default grid and reconstructs.
pub fn reconstruct_dataset(
    ds: &QuadratureDataset,
    settings: &TomographySettings,
) -> Result<ReconstructionResult> {
    let hist = bin(ds, DEFAULT_PHASE_BINS, DEFAULT_VALUE_BINS)?;
    reconstruct(&hist, settings)
}

/// Invariant check usable on every iterate.
pub fn check_iterate(rho: &DensityMatrix) -> Result<()> {
    fock::check_invariants(rho.matrix())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homodyne::{self, DatasetMeta, PhaseSchedule, QuadratureRecord};
    use crate::linalg::max_abs_diff;

    fn dataset(values: &[(f64, f64)]) -> QuadratureDataset {
        QuadratureDataset::new(
            values
                .iter()
                .map(|&(phase, value)| QuadratureRecord { phase, value })
                .collect(),
            DatasetMeta::default(),
        )
        .unwrap()
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(QUAD_ORDER);
        let sum: f64 = w.iter().sum();
        assert!((sum - 2.0).abs() < 1e-14);
        // ∫ x^22 over [−1, 1] = 2/23, exact for a 12-point rule
        let p: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(22)).sum();
        assert!((p - 2.0 / 23.0).abs() < 1e-14);
    }

    #[test]
    fn binning_conserves_counts() {
        let ds = dataset(&[(0.1, -1.0), (0.2, 1.0), (4.0, -0.5), (4.1, 0.5)]);
        let h = bin(&ds, 2, 2).unwrap();
        assert_eq!(h.total(), 4);
        assert_eq!(h.counts, vec![1, 1, 1, 1]);
        assert_eq!(h, bin(&ds, 2, 2).unwrap());
    }

    #[test]
    fn single_phase_occupies_one_row() {
        let ds = dataset(&[(1.0, -1.0), (1.0, 0.3), (1.0, 2.0)]);
        let h = bin(&ds, 4, 3).unwrap();
        for p in 0..4 {
            let row: u64 = (0..3).map(|b| h.count(p, b)).sum();
            assert_eq!(row, if p == 0 { 3 } else { 0 });
        }
        // the maximum lands in the last bin despite half-open cells
        assert_eq!(h.count(0, 2), 1);
    }

    #[test]
    fn whole_line_povm_is_identity() {
        for theta in [0.0, 0.7, 2.0] {
            let pi = povm_element(theta, f64::NEG_INFINITY, f64::INFINITY, 10).unwrap();
            assert!(max_abs_diff(&pi, &CMatrix::identity(10, 10)) < 1e-6);
        }
    }

    #[test]
    fn vacuum_bin_mass_is_gaussian() {
        let vac = fock::vacuum(6).unwrap();
        let pi = povm_element(1.1, -0.3, 0.9, 6).unwrap();
        let got = fock::expectation(&vac, &pi).unwrap().re;
        // (erf(0.9) + erf(0.3)) / 2 to 30 digits
        let want = 0.562_767_485_940_979_8;
        assert!((got - want).abs() < 1e-14, "{got} vs {want}");
    }

    #[test]
    fn povm_diagonal_ignores_phase() {
        let a = povm_element(0.0, -0.5, 0.2, 8).unwrap();
        let b = povm_element(1.3, -0.5, 0.2, 8).unwrap();
        for k in 0..8 {
            assert!((a[(k, k)] - b[(k, k)]).norm() < 1e-15);
        }
        assert!(povm_element(0.0, 1.0, 1.0, 4).is_err());
    }

    #[test]
    fn povm_trace_matches_pdf_integral() {
        // Tr(ρΠ) must equal ∫ pr(x|θ) dx over the bin for an asymmetric state
        let rho = fock::squeezed_vacuum_pure(0.4, 0.3, 12).unwrap().rho;
        let (lo, hi, theta) = (-0.4, 0.35, 0.9);
        let pi = povm_element(theta, lo, hi, 12).unwrap();
        let got = fock::expectation(&rho, &pi).unwrap().re;
        let steps = 4000;
        let h = (hi - lo) / steps as f64;
        let simpson: f64 = (0..=steps)
            .map(|i| {
                let w = if i == 0 || i == steps {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                w * homodyne::quadrature_pdf(&rho, theta, lo + i as f64 * h)
            })
            .sum::<f64>()
            * h
            / 3.0;
        assert!((got - simpson).abs() < 1e-12, "{got} vs {simpson}");
    }

    #[test]
    fn probabilities_sum_to_one_per_phase() {
        let rho = fock::squeezed_vacuum_pure(0.3, 0.0, 8).unwrap().rho;
        let ds = homodyne::sample(&rho, &PhaseSchedule::full_turn(), 5000, 1).unwrap();
        let h = bin(&ds, 10, 30).unwrap();
        let settings = TomographySettings {
            dim: 8,
            ..Default::default()
        };
        let t = Tomography::new(&h, &settings).unwrap();
        let p = t.probabilities(&rho).unwrap();
        for row in 0..10 {
            let s: f64 = p.row(row).iter().sum();
            assert!((s - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn adding_empty_bins_leaves_likelihood_unchanged() {
        let vac = fock::vacuum(6).unwrap();
        let narrow = QuadratureHistogram {
            phase_bins: 1,
            value_bins: 3,
            edges: vec![-30.0, -0.5, 0.5, 30.0],
            counts: vec![3, 4, 5],
            phase_centers: vec![0.5],
        };
        // same partition with empty bins split off the far tails
        let wide = QuadratureHistogram {
            value_bins: 5,
            edges: vec![-40.0, -30.0, -0.5, 0.5, 30.0, 40.0],
            counts: vec![0, 3, 4, 5, 0],
            ..narrow.clone()
        };
        let a = log_likelihood(&vac, &narrow).unwrap();
        let b = log_likelihood(&vac, &wide).unwrap();
        let erf = statrs::function::erf::erf;
        let side = 0.5 * (1.0 - erf(0.5));
        let want = 8.0 * side.ln() + 4.0 * erf(0.5).ln();
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        assert!((a - want).abs() < 1e-9, "{a} vs {want}");
    }

    #[test]
    fn likelihood_is_a_direct_sum() {
        let vac = fock::vacuum(6).unwrap();
        let ds = dataset(&[(0.5, -0.8), (0.5, 0.1), (0.5, 0.2), (3.5, 1.2)]);
        let h = bin(&ds, 2, 3).unwrap();
        // oracle: Σ n_j ln p_j with p_j from povm_element at the bin centres
        let erf = statrs::function::erf::erf;
        let mut want = 0.0;
        for p in 0..2 {
            for b in 0..3 {
                let n = h.count(p, b) as f64;
                if n == 0.0 {
                    continue;
                }
                let lo = if b == 0 { -40.0 } else { h.edges[b] };
                let hi = if b == 2 { 40.0 } else { h.edges[b + 1] };
                want += n * (0.5 * (erf(hi) - erf(lo))).ln();
            }
        }
        let got = log_likelihood(&vac, &h).unwrap();
        assert!((got - want).abs() < 1e-10, "{got} vs {want}");
    }

    #[test]
    fn degenerate_histogram_stays_finite() {
        let ds = dataset(&[(0.0, 0.25), (3.0, 0.25)]);
        let h = bin(&ds, 1, 1).unwrap();
        let res = reconstruct(
            &h,
            &TomographySettings {
                dim: 6,
                ..Default::default()
            },
        )
        .unwrap();
        res.rho.validate().unwrap();
        assert!(res.final_log_likelihood.is_finite());
    }

    #[test]
    fn settings_are_checked() {
        let bad = [
            TomographySettings {
                dim: 1,
                ..Default::default()
            },
            TomographySettings {
                dilution: 0.0,
                ..Default::default()
            },
            TomographySettings {
                prob_floor: 0.0,
                ..Default::default()
            },
            TomographySettings {
                rel_ll_tol: -1.0,
                ..Default::default()
            },
        ];
        for s in bad {
            assert!(s.validate().is_err());
        }
    }

    #[test]
    fn small_reconstruction_is_monotone_and_valid() {
        let truth = fock::squeezed_vacuum_pure(0.3, 0.4, 8).unwrap().rho;
        let ds = homodyne::sample(&truth, &PhaseSchedule::full_turn(), 40_000, 9).unwrap();
        let h = bin(&ds, 20, 40).unwrap();
        let settings = TomographySettings {
            dim: 8,
            max_iters: 300,
            validate_iterates: true,
            ..Default::default()
        };
        let res = reconstruct(&h, &settings).unwrap();
        for w in res.log_likelihood_trace.windows(2) {
            assert!(w[1] - w[0] >= -1e-9, "{} -> {}", w[0], w[1]);
        }
        assert!(res.log_likelihood_trace.len() == res.iterations + 1);
    }
}
