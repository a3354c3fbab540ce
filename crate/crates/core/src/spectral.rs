//! Periodic-box Fourier discretization.
//!
//! Fields are stored as full complex coefficient arrays of length `N³`
//! (flat index `(ix * N + iy) * N + iz`) normalized so that
//! `f(x) = Σ_k f̂(k) e^{i k·x}`. Real fields keep Hermitian symmetry; it is
//! re-imposed after every transform from physical space.
//!
//! Spectral derivatives use wavenumbers with the Nyquist entry set to zero,
//! which makes the discrete gradient exactly skew-adjoint for the grid
//! quadrature. Consequently discrete integration by parts holds to round-off
//! for arbitrary grid functions, not only for band-limited ones.

use std::f64::consts::PI;
use std::ops::{Deref, DerefMut};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::tensor::{Mat3, Ten3, Vec3};

pub type Coeffs = Vec<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Clone)]
pub struct TorusGrid {
    n: usize,
    length: f64,
    cutoff: usize,
    /// Signed integer mode per axis index; Nyquist reported as `−N/2`.
    modes: Vec<i64>,
    /// Derivative wavenumber per axis index (Nyquist → 0).
    wavenumbers: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for TorusGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TorusGrid").field("n", &self.n).field("length", &self.length).field("cutoff", &self.cutoff).finish()
    }
}

impl TorusGrid {
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < 8 || !n.is_multiple_of(2) {
            return Err(Error::InvalidParameter { name: "N", reason: format!("modes per axis must be even and >= 8, got {n}") });
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidParameter { name: "L", reason: format!("box length must be positive, got {length}") });
        }
        let half = (n / 2) as i64;
        let modes: Vec<i64> = (0..n as i64).map(|i| if i < half { i } else { i - n as i64 }).collect();
        let scale = 2.0 * PI / length;
        let wavenumbers = modes.iter().map(|&m| if m == -half { 0.0 } else { m as f64 * scale }).collect();
        let mut planner = FftPlanner::new();
        Ok(TorusGrid {
            n,
            length,
            cutoff: n / 3,
            modes,
            wavenumbers,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        })
    }

    pub fn periodic_2pi(n: usize) -> Result<Self> {
        Self::new(n, 2.0 * PI)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Largest retained mode under the 2/3 rule, `floor(N/3)`.
    pub fn dealias_cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn volume(&self) -> f64 {
        self.length.powi(3)
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(3)
    }

    #[inline]
    pub fn split_index(&self, p: usize) -> [usize; 3] {
        let n = self.n;
        [p / (n * n), (p / n) % n, p % n]
    }

    /// Physical coordinates of grid point `p`.
    pub fn point(&self, p: usize) -> [f64; 3] {
        let h = self.spacing();
        self.split_index(p).map(|i| i as f64 * h)
    }

    pub fn points(&self) -> impl Iterator<Item = [f64; 3]> + '_ {
        (0..self.len()).map(|p| self.point(p))
    }

    /// Signed integer mode of coefficient `p`.
    #[inline]
    pub fn mode(&self, p: usize) -> [i64; 3] {
        self.split_index(p).map(|i| self.modes[i])
    }

    /// Derivative wavenumber of coefficient `p`.
    #[inline]
    pub fn wavevector(&self, p: usize) -> [f64; 3] {
        self.split_index(p).map(|i| self.wavenumbers[i])
    }

    #[inline]
    pub fn k_sq(&self, p: usize) -> f64 {
        let k = self.wavevector(p);
        k[0] * k[0] + k[1] * k[1] + k[2] * k[2]
    }

    /// Index of the coefficient at `−k`.
    #[inline]
    pub fn conjugate_index(&self, p: usize) -> usize {
        let n = self.n;
        let [a, b, c] = self.split_index(p);
        (((n - a) % n) * n + (n - b) % n) * n + (n - c) % n
    }

    #[inline]
    fn max_mode(&self, p: usize) -> i64 {
        self.mode(p).iter().map(|m| m.abs()).max().unwrap()
    }

    // ------------------------------------------------------------ transforms

    fn transform(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        assert_eq!(data.len(), n * n * n, "field length does not match grid");
        let mut scratch = vec![ZERO; plan.get_inplace_scratch_len()];
        // z lines are contiguous
        plan.process_with_scratch(data, &mut scratch);
        let mut lines = vec![ZERO; n * n * n];
        // y lines
        for a in 0..n {
            for c in 0..n {
                for b in 0..n {
                    lines[(a * n + c) * n + b] = data[(a * n + b) * n + c];
                }
            }
        }
        plan.process_with_scratch(&mut lines, &mut scratch);
        for a in 0..n {
            for c in 0..n {
                for b in 0..n {
                    data[(a * n + b) * n + c] = lines[(a * n + c) * n + b];
                }
            }
        }
        // x lines
        for b in 0..n {
            for c in 0..n {
                for a in 0..n {
                    lines[(b * n + c) * n + a] = data[(a * n + b) * n + c];
                }
            }
        }
        plan.process_with_scratch(&mut lines, &mut scratch);
        for b in 0..n {
            for c in 0..n {
                for a in 0..n {
                    data[(a * n + b) * n + c] = lines[(b * n + c) * n + a];
                }
            }
        }
    }

    /// Physical values → Fourier coefficients, Hermitian symmetry enforced.
    pub fn forward_real(&self, values: &[f64]) -> Coeffs {
        let mut data: Coeffs = values.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.transform(&mut data, &self.forward);
        let scale = 1.0 / self.len() as f64;
        data.iter_mut().for_each(|c| *c *= scale);
        self.enforce_hermitian(&mut data);
        data
    }

    /// Fourier coefficients → physical values (real part).
    pub fn inverse_real(&self, coeffs: &[Complex64]) -> Vec<f64> {
        let mut data = coeffs.to_vec();
        self.transform(&mut data, &self.inverse);
        data.into_iter().map(|c| c.re).collect()
    }

    pub fn enforce_hermitian(&self, coeffs: &mut [Complex64]) {
        for p in 0..coeffs.len() {
            let q = self.conjugate_index(p);
            if q < p {
                continue;
            }
            if q == p {
                coeffs[p].im = 0.0;
            } else {
                let avg = 0.5 * (coeffs[p] + coeffs[q].conj());
                coeffs[p] = avg;
                coeffs[q] = avg.conj();
            }
        }
    }

    // ------------------------------------------------------------ vector fields

    pub fn vector_to_grid(&self, f: &SpectralVector) -> Vec<Vec3> {
        let comps = f.comps.each_ref().map(|c| self.inverse_real(c));
        (0..self.len()).map(|p| Vec3([comps[0][p], comps[1][p], comps[2][p]])).collect()
    }

    pub fn vector_from_grid(&self, values: &[Vec3]) -> SpectralVector {
        SpectralVector {
            comps: std::array::from_fn(|i| self.forward_real(&values.iter().map(|v| v.0[i]).collect::<Vec<_>>())),
        }
    }

    pub fn vector_from_fn(&self, f: impl Fn([f64; 3]) -> Vec3) -> SpectralVector {
        let values: Vec<Vec3> = self.points().map(f).collect();
        self.vector_from_grid(&values)
    }

    pub fn scalar_from_fn(&self, f: impl Fn([f64; 3]) -> f64) -> Coeffs {
        let values: Vec<f64> = self.points().map(f).collect();
        self.forward_real(&values)
    }

    /// `S_ij = ∂_j f_i` on the grid.
    pub fn gradient_grid(&self, f: &SpectralVector) -> Vec<Mat3> {
        let mut out = vec![Mat3::ZERO; self.len()];
        let mut buf = vec![ZERO; self.len()];
        for i in 0..3 {
            for j in 0..3 {
                for (p, b) in buf.iter_mut().enumerate() {
                    *b = I * self.wavevector(p)[j] * f.comps[i][p];
                }
                for (o, v) in out.iter_mut().zip(self.inverse_real(&buf)) {
                    o.0[i][j] = v;
                }
            }
        }
        out
    }

    /// `Γ_ijk = ∂_j ∂_k f_i` on the grid.
    pub fn hessian_grid(&self, f: &SpectralVector) -> Vec<Ten3> {
        let mut out = vec![Ten3::ZERO; self.len()];
        let mut buf = vec![ZERO; self.len()];
        for i in 0..3 {
            for j in 0..3 {
                for k in j..3 {
                    for (p, b) in buf.iter_mut().enumerate() {
                        let kv = self.wavevector(p);
                        *b = -(kv[j] * kv[k]) * f.comps[i][p];
                    }
                    for (o, v) in out.iter_mut().zip(self.inverse_real(&buf)) {
                        o.0[i][j][k] = v;
                        o.0[i][k][j] = v;
                    }
                }
            }
        }
        out
    }

    /// Spectral gradient of a scalar.
    pub fn grad_scalar(&self, f: &[Complex64]) -> SpectralVector {
        SpectralVector {
            comps: std::array::from_fn(|j| (0..self.len()).map(|p| I * self.wavevector(p)[j] * f[p]).collect()),
        }
    }

    pub fn divergence(&self, f: &SpectralVector) -> Coeffs {
        (0..self.len())
            .map(|p| {
                let k = self.wavevector(p);
                I * (k[0] * f.comps[0][p] + k[1] * f.comps[1][p] + k[2] * f.comps[2][p])
            })
            .collect()
    }

    pub fn curl(&self, f: &SpectralVector) -> SpectralVector {
        let c = &f.comps;
        let mut out = SpectralVector::zeros(self);
        for p in 0..self.len() {
            let k = self.wavevector(p);
            out.comps[0][p] = I * (k[1] * c[2][p] - k[2] * c[1][p]);
            out.comps[1][p] = I * (k[2] * c[0][p] - k[0] * c[2][p]);
            out.comps[2][p] = I * (k[0] * c[1][p] - k[1] * c[0][p]);
        }
        out
    }

    pub fn laplacian(&self, f: &SpectralVector) -> SpectralVector {
        f.map_modes(|p, c| -self.k_sq(p) * c)
    }

    pub fn bilaplacian(&self, f: &SpectralVector) -> SpectralVector {
        f.map_modes(|p, c| self.k_sq(p).powi(2) * c)
    }

    /// `(div A)_i = Σ_j ∂_j A_ij` for a matrix field given on the grid.
    pub fn divergence_of_matrix(&self, a: &[Mat3]) -> SpectralVector {
        let mut out = SpectralVector::zeros(self);
        for i in 0..3 {
            for j in 0..3 {
                let hat = self.forward_real(&a.iter().map(|m| m.0[i][j]).collect::<Vec<_>>());
                for (p, o) in out.comps[i].iter_mut().enumerate() {
                    *o += I * self.wavevector(p)[j] * hat[p];
                }
            }
        }
        out
    }

    /// Leray projection `(I − k⊗k/|k|²) f̂(k)`; the mean mode is left alone.
    pub fn leray_project(&self, f: &mut SpectralVector) {
        for p in 0..self.len() {
            let k = self.wavevector(p);
            let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
            if k2 == 0.0 {
                continue;
            }
            let kdot = (k[0] * f.comps[0][p] + k[1] * f.comps[1][p] + k[2] * f.comps[2][p]) / k2;
            for i in 0..3 {
                f.comps[i][p] -= kdot * k[i];
            }
        }
    }

    /// Zero every coefficient with `max_i |m_i| > n`.
    pub fn truncate(&self, f: &mut SpectralVector, n: usize) {
        for p in 0..self.len() {
            if self.max_mode(p) > n as i64 {
                for c in f.comps.iter_mut() {
                    c[p] = ZERO;
                }
            }
        }
    }

    pub fn truncate_scalar(&self, f: &mut [Complex64], n: usize) {
        for (p, c) in f.iter_mut().enumerate() {
            if self.max_mode(p) > n as i64 {
                *c = ZERO;
            }
        }
    }

    /// Product of two scalar fields under the 2/3 rule.
    pub fn dealiased_product(&self, a: &[Complex64], b: &[Complex64]) -> Coeffs {
        let mut ta = a.to_vec();
        let mut tb = b.to_vec();
        self.truncate_scalar(&mut ta, self.cutoff);
        self.truncate_scalar(&mut tb, self.cutoff);
        let (ga, gb) = (self.inverse_real(&ta), self.inverse_real(&tb));
        let prod: Vec<f64> = ga.iter().zip(&gb).map(|(x, y)| x * y).collect();
        let mut out = self.forward_real(&prod);
        self.truncate_scalar(&mut out, self.cutoff);
        out
    }

    /// `max_k |k·f̂(k)|`.
    pub fn divergence_defect(&self, f: &SpectralVector) -> f64 {
        self.divergence(f).iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    // ------------------------------------------------------------ quadrature

    /// `∫ f` by the rectangle rule.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.cell_volume() * values.iter().sum::<f64>()
    }

    pub fn integrate_by<T>(&self, values: &[T], f: impl Fn(&T) -> f64) -> f64 {
        self.cell_volume() * values.iter().map(f).sum::<f64>()
    }

    /// `‖f‖²` from coefficients (Parseval).
    pub fn spectral_norm_sq(&self, f: &SpectralVector) -> f64 {
        self.volume() * f.comps.iter().flat_map(|c| c.iter()).map(|c| c.norm_sqr()).sum::<f64>()
    }

    /// `(f, g)` from coefficients.
    pub fn spectral_inner(&self, f: &SpectralVector, g: &SpectralVector) -> f64 {
        let mut s = 0.0;
        for i in 0..3 {
            for (a, b) in f.comps[i].iter().zip(&g.comps[i]) {
                s += (a * b.conj()).re;
            }
        }
        self.volume() * s
    }
}

/// Coefficients of a three-component real field.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralVector {
    pub comps: [Coeffs; 3],
}

impl SpectralVector {
    pub fn zeros(grid: &TorusGrid) -> Self {
        SpectralVector { comps: std::array::from_fn(|_| vec![ZERO; grid.len()]) }
    }

    pub fn len(&self) -> usize {
        self.comps[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.comps[0].is_empty()
    }

    pub fn map_modes(&self, f: impl Fn(usize, Complex64) -> Complex64) -> SpectralVector {
        SpectralVector { comps: self.comps.each_ref().map(|c| c.iter().enumerate().map(|(p, x)| f(p, *x)).collect()) }
    }

    pub fn axpy(&mut self, a: f64, x: &SpectralVector) {
        for (dst, src) in self.comps.iter_mut().zip(&x.comps) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += a * s;
            }
        }
    }

    pub fn scaled(&self, a: f64) -> SpectralVector {
        self.map_modes(|_, c| a * c)
    }

    /// Mean value (the `k = 0` coefficient).
    pub fn mean(&self) -> Vec3 {
        Vec3(self.comps.each_ref().map(|c| c[0].re))
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.iter().flat_map(|c| c.iter()).map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().flat_map(|c| c.iter()).all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

macro_rules! spectral_newtype {
    ($(#[$m:meta])* $name:ident) => {
        $(#[$m])*
        #[derive(Clone, Debug, PartialEq)]
        pub struct $name(pub SpectralVector);

        impl $name {
            pub fn zeros(grid: &TorusGrid) -> Self {
                $name(SpectralVector::zeros(grid))
            }
        }

        impl Deref for $name {
            type Target = SpectralVector;
            fn deref(&self) -> &SpectralVector {
                &self.0
            }
        }

        impl DerefMut for $name {
            fn deref_mut(&mut self) -> &mut SpectralVector {
                &mut self.0
            }
        }
    };
}

spectral_newtype!(
    /// Divergence-free velocity coefficients with zero mean.
    SpectralVelocity
);
spectral_newtype!(
    /// Director coefficients; the mean mode is the background orientation.
    SpectralDirector
);

/// The Galerkin truncation pair: Leray projection plus mode cut for the
/// velocity, mode cut for the director.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Projectors {
    pub n: usize,
}

impl Projectors {
    pub fn new(grid: &TorusGrid, n: usize) -> Result<Self> {
        if n > grid.n() / 2 {
            return Err(Error::InvalidParameter { name: "galerkin_n", reason: format!("must not exceed N/2 = {}, got {n}", grid.n() / 2) });
        }
        Ok(Projectors { n })
    }

    pub fn velocity(&self, grid: &TorusGrid, f: &mut SpectralVector) {
        grid.truncate(f, self.n);
        grid.leray_project(f);
        for c in f.comps.iter_mut() {
            c[0] = ZERO;
        }
    }

    pub fn director(&self, grid: &TorusGrid, f: &mut SpectralVector) {
        grid.truncate(f, self.n);
    }
}

/// Residuals of the two pointwise-integrated coercivity identities.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct CoercivityReport {
    /// `∫|∇d|²`.
    pub grad_sq: f64,
    /// `∫(div d)² + |curl d|²`.
    pub div_curl_sq: f64,
    /// `∫|d|²|curl d|²`.
    pub weighted_curl_sq: f64,
    /// `∫(d·curl d)² + |d × curl d|²`.
    pub twist_bend_sq: f64,
}

impl CoercivityReport {
    pub fn first_residual(&self) -> f64 {
        self.grad_sq - self.div_curl_sq
    }

    pub fn second_residual(&self) -> f64 {
        self.weighted_curl_sq - self.twist_bend_sq
    }

    pub fn first_relative(&self) -> f64 {
        self.first_residual().abs() / self.grad_sq.abs().max(f64::MIN_POSITIVE)
    }

    pub fn second_relative(&self) -> f64 {
        self.second_residual().abs() / self.weighted_curl_sq.abs().max(f64::MIN_POSITIVE)
    }
}

/// On the torus the null-Lagrangian `tr(∇d²) − (div d)²` integrates to zero,
/// so `∫|∇d|² = ∫(div d)² + |curl d|²`; the second identity is pointwise.
pub fn coercivity_identity_check(grid: &TorusGrid, d: &SpectralDirector) -> CoercivityReport {
    let values = grid.vector_to_grid(d);
    let grad = grid.gradient_grid(d);
    let div = grid.inverse_real(&grid.divergence(d));
    let curl = grid.vector_to_grid(&grid.curl(d));
    let grad_sq = grid.integrate_by(&grad, Mat3::norm_sq);
    let div_curl_sq = grid.cell_volume() * div.iter().zip(&curl).map(|(dv, c)| dv * dv + c.norm_sq()).sum::<f64>();
    let mut weighted = 0.0;
    let mut split = 0.0;
    for (h, c) in values.iter().zip(&curl) {
        weighted += h.norm_sq() * c.norm_sq();
        let tw = h.dot(c);
        split += tw * tw + h.cross(c).norm_sq();
    }
    CoercivityReport {
        grad_sq,
        div_curl_sq,
        weighted_curl_sq: weighted * grid.cell_volume(),
        twist_bend_sq: split * grid.cell_volume(),
    }
}
