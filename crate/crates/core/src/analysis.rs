//! Derived quantities: noise power curves, squeezing metrics, Wigner
//! functions, fidelity, loss sweeps and the polarization transmission model.

use std::f64::consts::{PI, TAU};
use std::fs;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel;
use crate::error::{Error, Result};
use crate::fock::{self, DensityMatrix, LadderMoments, VACUUM_VARIANCE};
use crate::homodyne::QuadratureDataset;
use crate::linalg::{self, CMatrix};

pub const MIN_RECORDS_PER_BIN: usize = 100;
pub const DEFAULT_ETA_STEP: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseCurve {
    pub thetas: Vec<f64>,
    pub variance: Vec<f64>,
    pub db: Vec<f64>,
}

impl NoiseCurve {
    fn from_variances(thetas: Vec<f64>, variance: Vec<f64>) -> Self {
        let db = variance.iter().map(|&v| fock::to_db(v)).collect();
        Self {
            thetas,
            variance,
            db,
        }
    }

    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty()
    }

    pub fn min_db(&self) -> f64 {
        self.db.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_db(&self) -> f64 {
        self.db.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `V(θ_k)` at `n_points` phases evenly spaced over `[0, π)`.
pub fn noise_curve_from_state(rho: &DensityMatrix, n_points: usize) -> Result<NoiseCurve> {
    if n_points == 0 {
        return Err(Error::InvalidParameter(
            "noise curve needs at least one point".into(),
        ));
    }
    let moments = LadderMoments::of(rho);
    let thetas: Vec<f64> = (0..n_points)
        .map(|k| PI * k as f64 / n_points as f64)
        .collect();
    let variance = thetas.iter().map(|&t| moments.variance(t)).collect();
    Ok(NoiseCurve::from_variances(thetas, variance))
}

/// Unbiased sample variance per phase bin over `[0, 2π)`; thetas are bin
/// centres.
pub fn noise_curve_from_data(ds: &QuadratureDataset, n_phase_bins: usize) -> Result<NoiseCurve> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if n_phase_bins == 0 {
        return Err(Error::InvalidParameter(
            "noise curve needs at least one phase bin".into(),
        ));
    }
    let width = TAU / n_phase_bins as f64;
    let mut groups: Vec<Vec<f64>> = vec![Vec::new(); n_phase_bins];
    for r in &ds.records {
        let b = ((r.phase / width) as usize).min(n_phase_bins - 1);
        groups[b].push(r.value);
    }
    let mut variance = Vec::with_capacity(n_phase_bins);
    for (bin, values) in groups.iter().enumerate() {
        if values.len() < MIN_RECORDS_PER_BIN {
            return Err(Error::UnderpopulatedBin {
                bin,
                count: values.len(),
                min: MIN_RECORDS_PER_BIN,
            });
        }
        let n = values.len() as f64;
        let mean = linalg::compensated_sum(values.iter().copied()) / n;
        let ss = linalg::compensated_sum(values.iter().map(|v| (v - mean) * (v - mean)));
        let v = ss / (n - 1.0);
        // rescale if the data were recorded against another shot-noise level
        variance.push(v * VACUUM_VARIANCE / ds.meta.vacuum_variance);
    }
    let thetas = (0..n_phase_bins)
        .map(|k| (k as f64 + 0.5) * width)
        .collect();
    Ok(NoiseCurve::from_variances(thetas, variance))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SqueezingMetrics {
    pub v_min: f64,
    pub v_max: f64,
    /// Phase of minimum variance in `[0, π)`.
    pub theta_min: f64,
    pub db_min: f64,
    pub db_max: f64,
    pub purity: f64,
    pub mean_n: f64,
}

/// Extrema of `V(θ) = c₀ + c cos 2θ + s sin 2θ`, namely `c₀ ∓ √(c² + s²)`.
pub fn squeezing_metrics(rho: &DensityMatrix) -> SqueezingMetrics {
    let (c0, c, s) = LadderMoments::of(rho).variance_coefficients();
    let amp = c.hypot(s);
    let v_min = c0 - amp;
    let v_max = c0 + amp;
    let theta_min = if amp > 0.0 {
        ((s.atan2(c) + PI) / 2.0).rem_euclid(PI)
    } else {
        0.0
    };
    SqueezingMetrics {
        v_min,
        v_max,
        theta_min,
        db_min: fock::to_db(v_min),
        db_max: fock::to_db(v_max),
        purity: rho.purity(),
        mean_n: rho.mean_photon_number(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WignerGridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub x_points: usize,
    pub p_min: f64,
    pub p_max: f64,
    pub p_points: usize,
}

impl Default for WignerGridSpec {
    fn default() -> Self {
        Self::square(5.0, 201)
    }
}

impl WignerGridSpec {
    pub fn square(half_width: f64, points: usize) -> Self {
        Self {
            x_min: -half_width,
            x_max: half_width,
            x_points: points,
            p_min: -half_width,
            p_max: half_width,
            p_points: points,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.x_points < 2 || self.p_points < 2 {
            return Err(Error::InvalidParameter(
                "Wigner grid needs at least 2 points per axis".into(),
            ));
        }
        if !(self.x_max > self.x_min) || !(self.p_max > self.p_min) {
            return Err(Error::InvalidParameter(
                "Wigner grid axes must have positive extent".into(),
            ));
        }
        Ok(())
    }

    fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WignerGrid {
    pub x_axis: Vec<f64>,
    pub p_axis: Vec<f64>,
    /// `values[i][j] = W(x_axis[i], p_axis[j])`.
    pub values: Vec<Vec<f64>>,
}

impl WignerGrid {
    pub fn dx(&self) -> f64 {
        self.x_axis[1] - self.x_axis[0]
    }

    pub fn dp(&self) -> f64 {
        self.p_axis[1] - self.p_axis[0]
    }

    /// Riemann sum of `W Δx Δp`.
    pub fn normalization(&self) -> f64 {
        let cell = self.dx() * self.dp();
        linalg::compensated_sum(self.values.iter().flatten().copied()) * cell
    }

    /// `∫ W(x, p) dp` at each `x`.
    pub fn x_marginal(&self) -> Vec<f64> {
        let dp = self.dp();
        self.values
            .iter()
            .map(|row| linalg::compensated_sum(row.iter().copied()) * dp)
            .collect()
    }

    /// `∫ W(x, p) dx` at each `p`.
    pub fn p_marginal(&self) -> Vec<f64> {
        let dx = self.dx();
        (0..self.p_axis.len())
            .map(|j| linalg::compensated_sum(self.values.iter().map(|row| row[j])) * dx)
            .collect()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["x", "p", "w"])?;
        for (i, x) in self.x_axis.iter().enumerate() {
            for (j, p) in self.p_axis.iter().enumerate() {
                w.write_record(&[
                    format!("{x:.16e}"),
                    format!("{p:.16e}"),
                    format!("{:.16e}", self.values[i][j]),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// `⟨m|D(β)|n⟩` for `m, n < dim`, from `⟨m|D|0⟩ = e^{−|β|²/2} βᵐ/√m!` and
/// `⟨m|D|n⟩ = (√m ⟨m−1|D|n−1⟩ − β* ⟨m|D|n−1⟩)/√n`.
pub fn displacement_matrix(beta: Complex64, dim: usize) -> CMatrix {
    let mut d = CMatrix::zeros(dim, dim);
    if dim == 0 {
        return d;
    }
    d[(0, 0)] = Complex64::new((-0.5 * beta.norm_sqr()).exp(), 0.0);
    for m in 1..dim {
        d[(m, 0)] = d[(m - 1, 0)] * beta / (m as f64).sqrt();
    }
    let bc = beta.conj();
    for n in 1..dim {
        let sn = (n as f64).sqrt();
        for m in 0..dim {
            let up = if m > 0 {
                d[(m - 1, n - 1)] * (m as f64).sqrt()
            } else {
                Complex64::new(0.0, 0.0)
            };
            d[(m, n)] = (up - bc * d[(m, n - 1)]) / sn;
        }
    }
    d
}

/// Displaced parity in `(x, p)` units: `W = (1/π) Tr[ρ D(2α) Π]` with
/// `α = (x + ip)/√2`.
pub fn wigner_point(rho: &DensityMatrix, x: f64, p: f64) -> f64 {
    let dim = rho.dim();
    let beta = Complex64::new(x, p) * std::f64::consts::SQRT_2;
    let d = displacement_matrix(beta, dim);
    let m = rho.matrix();
    let mut acc = Complex64::new(0.0, 0.0);
    for n in 0..dim {
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        for k in 0..dim {
            acc += m[(n, k)] * d[(k, n)] * sign;
        }
    }
    acc.re / PI
}

pub fn wigner(rho: &DensityMatrix, spec: &WignerGridSpec) -> Result<WignerGrid> {
    spec.validate()?;
    let x_axis = WignerGridSpec::axis(spec.x_min, spec.x_max, spec.x_points);
    let p_axis = WignerGridSpec::axis(spec.p_min, spec.p_max, spec.p_points);
    let values = x_axis
        .par_iter()
        .map(|&x| p_axis.iter().map(|&p| wigner_point(rho, x, p)).collect())
        .collect();
    Ok(WignerGrid {
        x_axis,
        p_axis,
        values,
    })
}

/// Root fidelity `Tr √(√ρ_a ρ_b √ρ_a)`, computed as the nuclear norm of
/// `√ρ_a √ρ_b`.
pub fn fidelity(rho_a: &DensityMatrix, rho_b: &DensityMatrix) -> Result<f64> {
    if rho_a.dim() != rho_b.dim() {
        return Err(Error::DimensionMismatch(rho_a.dim(), rho_b.dim()));
    }
    rho_a.validate()?;
    rho_b.validate()?;
    let product = linalg::psd_sqrt(rho_a.matrix()) * linalg::psd_sqrt(rho_b.matrix());
    let sv = product.singular_values();
    Ok(sv.iter().sum::<f64>().min(1.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EtaSweepResult {
    pub etas: Vec<f64>,
    pub fidelities: Vec<f64>,
    pub best_eta: f64,
    pub best_fidelity: f64,
    /// Rotation applied to the input state before the sweep.
    pub alignment_phase: f64,
}

/// `0, step, 2·step, …` up to 1 inclusive.
pub fn eta_grid(step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "eta grid step {step} outside (0, 1]"
        )));
    }
    let n = (1.0 / step + 1e-9).floor() as usize;
    let mut etas: Vec<f64> = (0..=n).map(|k| (k as f64 * step).min(1.0)).collect();
    if 1.0 - etas[n] > 1e-12 {
        etas.push(1.0);
    }
    Ok(etas)
}

/// Phase that moves the squeezing axis of `rho_in` onto that of `rho_target`.
pub fn alignment_phase(rho_in: &DensityMatrix, rho_target: &DensityMatrix) -> f64 {
    squeezing_metrics(rho_target).theta_min - squeezing_metrics(rho_in).theta_min
}

pub fn eta_sweep(
    rho_in: &DensityMatrix,
    rho_target: &DensityMatrix,
    etas: &[f64],
    align: bool,
) -> Result<EtaSweepResult> {
    if rho_in.dim() != rho_target.dim() {
        return Err(Error::DimensionMismatch(rho_in.dim(), rho_target.dim()));
    }
    if etas.is_empty() {
        return Err(Error::InvalidParameter("eta grid is empty".into()));
    }
    if let Some(bad) = etas.iter().find(|e| !(0.0..=1.0).contains(*e)) {
        return Err(Error::InvalidParameter(format!("eta {bad} outside [0, 1]")));
    }
    let phase = if align {
        alignment_phase(rho_in, rho_target)
    } else {
        0.0
    };
    let source = fock::phase_rotate(rho_in, phase);
    let fidelities = etas
        .par_iter()
        .map(|&eta| fidelity(&channel::apply_loss(&source, eta)?, rho_target))
        .collect::<Result<Vec<f64>>>()?;
    let mut best = 0;
    for (k, &f) in fidelities.iter().enumerate() {
        if f > fidelities[best] {
            best = k;
        }
    }
    Ok(EtaSweepResult {
        etas: etas.to_vec(),
        best_eta: etas[best],
        best_fidelity: fidelities[best],
        fidelities,
        alignment_phase: phase,
    })
}

/// `T(α) = t_tm cos²α + t_bg sin²α`.
pub fn polarization_transmission(alpha: f64, t_tm: f64, t_bg: f64) -> Result<f64> {
    if !(0.0 <= t_bg && t_bg <= t_tm && t_tm <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "need 0 <= t_bg <= t_tm <= 1, got t_bg={t_bg}, t_tm={t_tm}"
        )));
    }
    let c = alpha.cos();
    Ok(t_tm * c * c + t_bg * (1.0 - c * c))
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub metrics: Option<SqueezingMetrics>,
    pub noise_curve_state: Option<NoiseCurve>,
    pub noise_curve_data: Option<NoiseCurve>,
    pub wigner: Option<WignerGrid>,
    pub dim: Option<usize>,
    pub records: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportOptions {
    pub noise_points: usize,
    pub data_phase_bins: usize,
    pub wigner: Option<WignerGridSpec>,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            noise_points: 181,
            data_phase_bins: 50,
            wigner: None,
        }
    }
}

pub fn build_report(
    rho: Option<&DensityMatrix>,
    data: Option<&QuadratureDataset>,
    options: &ReportOptions,
) -> Result<AnalysisReport> {
    if rho.is_none() && data.is_none() {
        return Err(Error::InvalidParameter(
            "report needs a state or a dataset".into(),
        ));
    }
    let mut report = AnalysisReport::default();
    if let Some(rho) = rho {
        report.metrics = Some(squeezing_metrics(rho));
        report.noise_curve_state = Some(noise_curve_from_state(rho, options.noise_points)?);
        report.dim = Some(rho.dim());
        if let Some(spec) = &options.wigner {
            report.wigner = Some(wigner(rho, spec)?);
        }
    }
    if let Some(ds) = data {
        report.noise_curve_data = Some(noise_curve_from_data(ds, options.data_phase_bins)?);
        report.records = Some(ds.len());
    }
    Ok(report)
}

pub fn write_report(report: &AnalysisReport, path: &Path) -> Result<()> {
    fs::write(path, crate::io::to_json_string(report)?)?;
    Ok(())
}
