//! Deterministic initial data.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::spectral::{SpectralDirector, SpectralVector, SpectralVelocity, TorusGrid};
use crate::tensor::Vec3;

/// Pointwise norms below this are replaced by the background direction.
pub const NORM_FLOOR: f64 = 0.1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomSmooth {
    pub seed: u64,
    /// Largest mode `max_i |m_i|` receiving noise.
    #[serde(default = "default_cutoff")]
    pub cutoff: usize,
    /// Amplitude of the director perturbation before normalization.
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    #[serde(default = "default_amplitude")]
    pub velocity_amplitude: f64,
    #[serde(default = "default_background")]
    pub background: [f64; 3],
}

impl RandomSmooth {
    pub fn with_seed(seed: u64) -> Self {
        RandomSmooth {
            seed,
            cutoff: default_cutoff(),
            amplitude: default_amplitude(),
            velocity_amplitude: default_amplitude(),
            background: default_background(),
        }
    }
}

fn default_cutoff() -> usize {
    1
}

fn default_amplitude() -> f64 {
    0.2
}

fn default_background() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

/// Seeded band-limited Gaussian noise with Gaussian spectral decay.
pub fn gaussian_field(grid: &TorusGrid, rng: &mut ChaCha20Rng, cutoff: usize) -> SpectralVector {
    let mut f = SpectralVector::zeros(grid);
    let c = cutoff as i64;
    let width = (cutoff.max(1) as f64).powi(2);
    for p in 0..grid.len() {
        let m = grid.mode(p);
        if p == 0 || m.iter().any(|x| x.abs() > c) {
            continue;
        }
        let m2 = (m[0] * m[0] + m[1] * m[1] + m[2] * m[2]) as f64;
        let decay = (-m2 / width).exp();
        for comp in f.comps.iter_mut() {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            comp[p] = decay * Complex64::new(re, im);
        }
    }
    for comp in f.comps.iter_mut() {
        grid.enforce_hermitian(comp);
    }
    f
}

fn normalize(f: &mut SpectralVector, scale: f64, grid: &TorusGrid) {
    let vals = grid.vector_to_grid(f);
    let rms = (vals.iter().map(Vec3::norm_sq).sum::<f64>() / vals.len() as f64).sqrt();
    if rms > 0.0 {
        *f = f.scaled(scale / rms);
    }
}

pub fn constant(grid: &TorusGrid, direction: [f64; 3]) -> (SpectralVelocity, SpectralDirector) {
    let mut d = SpectralDirector::zeros(grid);
    let u = Vec3(direction);
    let u = u * (1.0 / u.norm());
    for i in 0..3 {
        d.comps[i][0] = Complex64::new(u.0[i], 0.0);
    }
    (SpectralVelocity::zeros(grid), d)
}

/// Returns `(v₀, d₀)`; `d₀` is unit length on the grid before the final
/// truncation to `galerkin_n` modes.
pub fn random_smooth(grid: &TorusGrid, spec: &RandomSmooth, galerkin_n: usize) -> (SpectralVelocity, SpectralDirector) {
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    let mut pert = gaussian_field(grid, &mut rng, spec.cutoff);
    normalize(&mut pert, spec.amplitude, grid);
    let mut vel = gaussian_field(grid, &mut rng, spec.cutoff);
    grid.leray_project(&mut vel);
    normalize(&mut vel, spec.velocity_amplitude, grid);

    let bg = Vec3(spec.background);
    let bg = bg * (1.0 / bg.norm());
    let raw = grid.vector_to_grid(&pert);
    let unit: Vec<Vec3> = raw
        .iter()
        .map(|p| {
            let x = bg + *p;
            let n = x.norm();
            if n < NORM_FLOOR {
                bg
            } else {
                x * (1.0 / n)
            }
        })
        .collect();
    let mut d = grid.vector_from_grid(&unit);
    grid.truncate(&mut d, galerkin_n);
    grid.truncate(&mut vel, galerkin_n);
    for c in vel.comps.iter_mut() {
        c[0] = Complex64::new(0.0, 0.0);
    }
    (SpectralVelocity(vel), SpectralDirector(d))
}

/// Uniform random coefficients on the modes `max_i |m_i| ≤ kmax`, drawn in a
/// fixed mode order so the same field results on every grid that resolves it.
pub fn band_limited_field(grid: &TorusGrid, kmax: usize, seed: u64) -> SpectralVector {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let n = grid.n() as i64;
    let k = kmax as i64;
    assert!(k < n / 2, "band {kmax} not resolved on N = {n}");
    let mut f = SpectralVector::zeros(grid);
    let wrap = |m: i64| (m.rem_euclid(n)) as usize;
    for a in -k..=k {
        for b in -k..=k {
            for c in -k..=k {
                let p = (wrap(a) * grid.n() + wrap(b)) * grid.n() + wrap(c);
                for comp in f.comps.iter_mut() {
                    comp[p] = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                }
            }
        }
    }
    for comp in f.comps.iter_mut() {
        grid.enforce_hermitian(comp);
    }
    f
}

/// `max_x ||d(x)| − 1|` on the grid.
pub fn unit_defect(grid: &TorusGrid, d: &SpectralDirector) -> f64 {
    grid.vector_to_grid(d).iter().map(|v| (v.norm() - 1.0).abs()).fold(0.0, f64::max)
}
