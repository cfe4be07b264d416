//! Forward model of balanced homodyne detection: quadrature marginals,
//! phase-scanned sampling and ADC quantization.

use std::f64::consts::{PI, TAU};
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel;
use crate::error::{Error, Result};
use crate::fock::{DensityMatrix, LadderMoments, VACUUM_VARIANCE};
use crate::io;

pub const GRID_POINTS: usize = 4096;
/// Sampling grid half-width in units of the widest quadrature standard
/// deviation, `x_max = 5 √(2 V_max)`.
pub const GRID_WIDTH: f64 = 5.0;
pub const MAX_TAIL_MASS: f64 = 1e-9;
pub const DEFAULT_SAMPLES: usize = 500_000;

const CHUNK: usize = 1 << 15;
const TAIL_CHECK_PHASES: usize = 64;

/// Oscillator eigenfunctions `ψ_0..ψ_{len-1}` at `x`, by the upward
/// three-term recurrence.
pub fn hermite_functions(x: f64, len: usize) -> Vec<f64> {
    let mut psi = vec![0.0; len];
    if len == 0 {
        return psi;
    }
    psi[0] = PI.powf(-0.25) * (-0.5 * x * x).exp();
    if len > 1 {
        psi[1] = std::f64::consts::SQRT_2 * x * psi[0];
    }
    for n in 1..len.saturating_sub(1) {
        let nf = n as f64;
        psi[n + 1] = (2.0 / (nf + 1.0)).sqrt() * x * psi[n] - (nf / (nf + 1.0)).sqrt() * psi[n - 1];
    }
    psi
}

/// Homodyne density `pr(x|θ) = Σ ρ_mn ψ_m(x) ψ_n(x) e^{i(n−m)θ}`.
pub fn quadrature_pdf(rho: &DensityMatrix, theta: f64, x: f64) -> f64 {
    let psi = hermite_functions(x, rho.dim());
    let m = rho.matrix();
    let mut acc = 0.0;
    for i in 0..rho.dim() {
        acc += m[(i, i)].re * psi[i] * psi[i];
        for j in i + 1..rho.dim() {
            let phase = Complex64::from_polar(1.0, (j - i) as f64 * theta);
            acc += 2.0 * (m[(i, j)] * phase).re * psi[i] * psi[j];
        }
    }
    acc.max(0.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRecord {
    pub phase: f64,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub seed: Option<u64>,
    pub source: String,
    pub vacuum_variance: f64,
    #[serde(default)]
    pub digitizer_bits: Option<u32>,
    #[serde(default)]
    pub digitizer_range: Option<f64>,
}

impl Default for DatasetMeta {
    fn default() -> Self {
        Self {
            seed: None,
            source: String::new(),
            vacuum_variance: VACUUM_VARIANCE,
            digitizer_bits: None,
            digitizer_range: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureDataset {
    pub records: Vec<QuadratureRecord>,
    pub meta: DatasetMeta,
}

impl QuadratureDataset {
    pub fn new(records: Vec<QuadratureRecord>, meta: DatasetMeta) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if !(meta.vacuum_variance > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "vacuum variance calibration {}",
                meta.vacuum_variance
            )));
        }
        for r in &records {
            if !(0.0..TAU).contains(&r.phase) || !r.value.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "bad record (phase {}, value {})",
                    r.phase, r.value
                )));
            }
        }
        Ok(Self { records, meta })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.value)
    }
}

/// Linear phase ramp from `start` to `end`, traversed `sweeps` times over
/// the record index.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseSchedule {
    pub start: f64,
    pub end: f64,
    pub sweeps: usize,
}

impl PhaseSchedule {
    pub fn new(start: f64, end: f64, sweeps: usize) -> Result<Self> {
        let s = Self { start, end, sweeps };
        s.validate()?;
        Ok(s)
    }

    /// A single 0 → 2π sweep.
    pub fn full_turn() -> Self {
        Self {
            start: 0.0,
            end: TAU,
            sweeps: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.end > self.start && self.start.is_finite() && self.end.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "phase schedule needs end > start (got {} .. {})",
                self.start, self.end
            )));
        }
        if self.sweeps == 0 {
            return Err(Error::InvalidParameter(
                "phase schedule needs sweeps >= 1".into(),
            ));
        }
        Ok(())
    }

    /// Phase of record `index` out of `total`, wrapped into `[0, 2π)`.
    pub fn phase(&self, index: usize, total: usize) -> f64 {
        let t = (index as f64 * self.sweeps as f64 / total as f64).fract();
        wrap_phase(self.start + (self.end - self.start) * t)
    }
}

pub fn wrap_phase(phase: f64) -> f64 {
    let w = phase.rem_euclid(TAU);
    // rem_euclid can round up to exactly 2π
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Cumulative distribution of `pr(x|θ)` on a fixed grid, stored per phase
/// harmonic so it can be evaluated at any θ:
/// `CDF(x_g|θ) = C_0[g] + 2 Re Σ_{k≥1} C_k[g] e^{ikθ}`.
pub struct CdfTable {
    grid: Vec<f64>,
    harmonics: Vec<Vec<Complex64>>,
}

impl CdfTable {
    pub fn new(rho: &DensityMatrix, x_max: f64, points: usize) -> Self {
        let d = rho.dim();
        let m = rho.matrix();
        let dx = 2.0 * x_max / (points - 1) as f64;
        let grid: Vec<f64> = (0..points).map(|g| -x_max + g as f64 * dx).collect();
        // ψ_0..ψ_d and ψ'_0..ψ'_{d-1}, with ψ'_n = √(n/2) ψ_{n-1} − √((n+1)/2) ψ_{n+1}
        let basis: Vec<(Vec<f64>, Vec<f64>)> = grid
            .iter()
            .map(|&x| {
                let psi = hermite_functions(x, d + 1);
                let dpsi = (0..d)
                    .map(|n| {
                        let down = if n > 0 {
                            (n as f64 / 2.0).sqrt() * psi[n - 1]
                        } else {
                            0.0
                        };
                        down - ((n + 1) as f64 / 2.0).sqrt() * psi[n + 1]
                    })
                    .collect();
                (psi, dpsi)
            })
            .collect();

        let harmonics = (0..d)
            .into_par_iter()
            .map(|k| {
                let (density, slope): (Vec<Complex64>, Vec<Complex64>) = basis
                    .iter()
                    .map(|(psi, dpsi)| {
                        let mut f = Complex64::new(0.0, 0.0);
                        let mut df = Complex64::new(0.0, 0.0);
                        for i in 0..d - k {
                            let z = m[(i, i + k)];
                            f += z * (psi[i] * psi[i + k]);
                            df += z * (dpsi[i] * psi[i + k] + psi[i] * dpsi[i + k]);
                        }
                        (f, df)
                    })
                    .unzip();
                // trapezoid with the Euler-Maclaurin end correction per cell
                let mut cdf = vec![Complex64::new(0.0, 0.0); points];
                for g in 1..points {
                    let cell = (density[g - 1] + density[g]) * (0.5 * dx)
                        - (slope[g] - slope[g - 1]) * (dx * dx / 12.0);
                    cdf[g] = cdf[g - 1] + cell;
                }
                cdf
            })
            .collect();
        Self { grid, harmonics }
    }

    /// Grid for `rho` with half-width `5 √(2 V_max)` plus the largest mean
    /// displacement.
    pub fn for_state(rho: &DensityMatrix) -> Self {
        Self::new(rho, sampling_half_width(rho), GRID_POINTS)
    }

    pub fn x_max(&self) -> f64 {
        *self.grid.last().unwrap()
    }

    fn phase_factors(&self, theta: f64) -> Vec<Complex64> {
        (0..self.harmonics.len())
            .map(|k| Complex64::from_polar(1.0, k as f64 * theta))
            .collect()
    }

    fn cdf_at(&self, g: usize, factors: &[Complex64]) -> f64 {
        let mut acc = self.harmonics[0][g].re;
        for (h, f) in self.harmonics.iter().zip(factors).skip(1) {
            acc += 2.0 * (h[g] * f).re;
        }
        acc
    }

    /// Probability captured inside the grid at phase θ.
    pub fn total_mass(&self, theta: f64) -> f64 {
        self.cdf_at(self.grid.len() - 1, &self.phase_factors(theta))
    }

    /// Inverse CDF at uniform deviate `u ∈ [0, 1)`, linear between grid
    /// points.
    pub fn invert(&self, theta: f64, u: f64) -> f64 {
        let factors = self.phase_factors(theta);
        let last = self.grid.len() - 1;
        let target = u * self.cdf_at(last, &factors);
        let (mut lo, mut hi) = (0usize, last);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.cdf_at(mid, &factors) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (c_lo, c_hi) = (self.cdf_at(lo, &factors), self.cdf_at(hi, &factors));
        let frac = if c_hi > c_lo {
            ((target - c_lo) / (c_hi - c_lo)).clamp(0.0, 1.0)
        } else {
            0.5
        };
        self.grid[lo] + frac * (self.grid[hi] - self.grid[lo])
    }

    fn check_tails(&self) -> Result<()> {
        for p in 0..TAIL_CHECK_PHASES {
            let theta = TAU * p as f64 / TAIL_CHECK_PHASES as f64;
            let outside = 1.0 - self.total_mass(theta);
            if outside > MAX_TAIL_MASS {
                return Err(Error::GridExhausted {
                    mass: outside,
                    x_max: self.x_max(),
                });
            }
        }
        Ok(())
    }
}

pub fn sampling_half_width(rho: &DensityMatrix) -> f64 {
    let moments = LadderMoments::of(rho);
    let (c0, c, s) = moments.variance_coefficients();
    let v_max = c0 + c.hypot(s);
    GRID_WIDTH * (2.0 * v_max).sqrt() + std::f64::consts::SQRT_2 * moments.a.norm()
}

fn draw<F>(table: &CdfTable, n_samples: usize, seed: u64, phase_of: F) -> Vec<QuadratureRecord>
where
    F: Fn(usize) -> f64 + Sync,
{
    let chunks = n_samples.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(n_samples);
            (lo..hi)
                .map(|i| {
                    let phase = phase_of(i);
                    let u: f64 = rng.random();
                    QuadratureRecord {
                        phase,
                        value: table.invert(phase, u),
                    }
                })
                .collect::<Vec<_>>()
        })
        .collect()
}

/// Phase-scanned homodyne records drawn by inverse-CDF sampling. Chunks
/// use independent ChaCha streams derived from `seed`, so the output does
/// not depend on thread scheduling.
pub fn sample(
    rho: &DensityMatrix,
    schedule: &PhaseSchedule,
    n_samples: usize,
    seed: u64,
) -> Result<QuadratureDataset> {
    schedule.validate()?;
    if n_samples == 0 {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    let table = CdfTable::for_state(rho);
    table.check_tails()?;
    let records = draw(&table, n_samples, seed, |i| schedule.phase(i, n_samples));
    QuadratureDataset::new(
        records,
        DatasetMeta {
            seed: Some(seed),
            source: format!(
                "simulated: {} samples, phase {}..{} rad x{} sweeps",
                n_samples, schedule.start, schedule.end, schedule.sweeps
            ),
            ..DatasetMeta::default()
        },
    )
}

/// Records at a single fixed local-oscillator phase.
pub fn sample_at_phase(
    rho: &DensityMatrix,
    theta: f64,
    n_samples: usize,
    seed: u64,
) -> Result<QuadratureDataset> {
    if n_samples == 0 {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    let table = CdfTable::for_state(rho);
    table.check_tails()?;
    let phase = wrap_phase(theta);
    let records = draw(&table, n_samples, seed, |_| phase);
    QuadratureDataset::new(
        records,
        DatasetMeta {
            seed: Some(seed),
            source: format!("simulated: {n_samples} samples at phase {phase} rad"),
            ..DatasetMeta::default()
        },
    )
}

/// Uniform `2^bits`-level ADC over `[−range, range]` with mid-rise levels
/// `−range + (k + ½)Δ`; out-of-range values clip to the end levels and
/// exact ties round half to even.
pub fn digitize(ds: &QuadratureDataset, bits: u32, range: f64) -> Result<QuadratureDataset> {
    if !(2..=16).contains(&bits) {
        return Err(Error::InvalidParameter(format!(
            "digitizer bits {bits} outside [2, 16]"
        )));
    }
    if !(range > 0.0 && range.is_finite()) {
        return Err(Error::InvalidParameter(format!("digitizer range {range}")));
    }
    let levels = 1u32 << bits;
    let step = 2.0 * range / levels as f64;
    let top = (levels - 1) as f64;
    let records = ds
        .records
        .iter()
        .map(|r| {
            let k = ((r.value + range) / step - 0.5)
                .round_ties_even()
                .clamp(0.0, top);
            QuadratureRecord {
                phase: r.phase,
                value: -range + (k + 0.5) * step,
            }
        })
        .collect();
    let mut meta = ds.meta.clone();
    meta.digitizer_bits = Some(bits);
    meta.digitizer_range = Some(range);
    QuadratureDataset::new(records, meta)
}

/// Mode mismatch with the local oscillator as an effective loss of
/// `η = visibility²`.
pub fn detection_efficiency(rho: &DensityMatrix, visibility: f64) -> Result<DensityMatrix> {
    if !(visibility > 0.0 && visibility <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "visibility {visibility} outside (0, 1]"
        )));
    }
    channel::apply_loss(rho, visibility * visibility)
}

pub const CSV_HEADER: [&str; 2] = ["phase_rad", "value"];

/// `data.csv` → `data.meta.json`.
pub fn meta_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("meta.json")
}

pub fn write_dataset(ds: &QuadratureDataset, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(CSV_HEADER)?;
    for r in &ds.records {
        w.write_record([r.phase.to_string(), r.value.to_string()])?;
    }
    w.flush()?;
    fs::write(meta_path(path), io::to_json_string(&ds.meta)?)?;
    Ok(())
}

/// Reads `phase_rad,value` CSV plus the optional `.meta.json` sidecar.
pub fn read_dataset(path: &Path) -> Result<QuadratureDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)?;
    let mut rows = reader.records();
    let header = rows.next().ok_or(Error::Parse {
        line: 1,
        msg: "empty file, expected header \"phase_rad,value\"".into(),
    })??;
    if header.iter().collect::<Vec<_>>() != CSV_HEADER {
        return Err(Error::Parse {
            line: 1,
            msg: format!(
                "expected header \"phase_rad,value\", found {:?}",
                header.as_slice()
            ),
        });
    }
    let mut records = Vec::new();
    for row in rows {
        let row = row?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let field = |i: usize| -> Result<f64> {
            let raw = row.get(i).ok_or(Error::Parse {
                line,
                msg: "missing field".into(),
            })?;
            raw.trim().parse::<f64>().map_err(|e| Error::Parse {
                line,
                msg: format!("{raw:?}: {e}"),
            })
        };
        if row.len() != 2 {
            return Err(Error::Parse {
                line,
                msg: format!("expected 2 fields, found {}", row.len()),
            });
        }
        let phase = field(0)?;
        let value = field(1)?;
        if !(0.0..TAU).contains(&phase) || !value.is_finite() {
            return Err(Error::Parse {
                line,
                msg: format!("record out of range (phase {phase}, value {value})"),
            });
        }
        records.push(QuadratureRecord { phase, value });
    }
    if records.is_empty() {
        return Err(Error::Parse {
            line: 2,
            msg: "no records after header".into(),
        });
    }
    let sidecar = meta_path(path);
    let meta = if sidecar.exists() {
        serde_json::from_str(&fs::read_to_string(sidecar)?)?
    } else {
        DatasetMeta {
            source: format!("file: {}", path.display()),
            ..DatasetMeta::default()
        }
    };
    QuadratureDataset::new(records, meta)
}
