#![allow(dead_code)]

use cvtomo::fock::{self, DensityMatrix, SqueezedStateParams};
use cvtomo::linalg::CMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn reference_state(dim: usize) -> DensityMatrix {
    let p = SqueezedStateParams::from_db(-1.9, 6.1, 0.0).unwrap();
    fock::squeezed_thermal(&p, dim).unwrap().rho
}

/// `G G† / Tr` with Gaussian `G` of the given rank.
pub fn random_state(seed: u64, dim: usize, rank: usize) -> DensityMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal = || -> f64 {
        // Box-Muller
        let u: f64 = 1.0 - rng.random::<f64>();
        let v: f64 = rng.random();
        (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
    };
    let g = CMatrix::from_fn(dim, rank, |_, _| Complex64::new(normal(), normal()));
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    DensityMatrix::new(m.unscale(tr)).unwrap()
}
