//! Energy ledgers, identity residuals, norm control, Young-measure
//! transforms and defect quantities.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::oseen_frank::ElasticModel;
use crate::spectral::{SpectralDirector, TorusGrid};
use crate::tensor::{Mat3, Vec3};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct EnergyBreakdown {
    pub kinetic: f64,
    pub frank_k1: f64,
    pub frank_k2: f64,
    pub frank_k3: f64,
    pub frank_k4: f64,
    pub frank_k5: f64,
    pub penalty: f64,
    pub reg_delta: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    pub fn new(kinetic: f64, frank: [f64; 5], penalty: f64, reg_delta: f64) -> Self {
        let [frank_k1, frank_k2, frank_k3, frank_k4, frank_k5] = frank;
        let total = kinetic + frank.iter().sum::<f64>() + penalty + reg_delta;
        EnergyBreakdown { kinetic, frank_k1, frank_k2, frank_k3, frank_k4, frank_k5, penalty, reg_delta, total }
    }

    pub fn frank(&self) -> [f64; 5] {
        [self.frank_k1, self.frank_k2, self.frank_k3, self.frank_k4, self.frank_k5]
    }

    pub fn frank_total(&self) -> f64 {
        self.frank().iter().sum()
    }

    pub fn free_energy(&self) -> f64 {
        self.total - self.kinetic
    }

    pub fn with_kinetic(self, kinetic: f64) -> Self {
        EnergyBreakdown::new(kinetic, self.frank(), self.penalty, self.reg_delta)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct DissipationBreakdown {
    pub mu1_term: f64,
    pub mu4_term: f64,
    pub aniso_term: f64,
    pub q_term: f64,
    pub cross_term: f64,
    pub power_in: f64,
}

impl DissipationBreakdown {
    pub fn dissipated(&self) -> f64 {
        self.mu1_term + self.mu4_term + self.aniso_term + self.q_term
    }

    pub fn supplied(&self) -> f64 {
        self.power_in + self.cross_term
    }

    /// `dE/dt` predicted by the energy equality.
    pub fn rate(&self) -> f64 {
        self.supplied() - self.dissipated()
    }
}

/// Trapezoid-rule bookkeeping of the energy equality.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnergyLedger {
    pub e0: f64,
    pub t: f64,
    pub energy: f64,
    pub dissipated: f64,
    pub supplied: f64,
    last: DissipationBreakdown,
}

impl EnergyLedger {
    pub fn new(t0: f64, energy: &EnergyBreakdown, rates: &DissipationBreakdown) -> Self {
        EnergyLedger { e0: energy.total, t: t0, energy: energy.total, dissipated: 0.0, supplied: 0.0, last: *rates }
    }

    /// Adds the interval up to `t` and returns the normalized residual.
    pub fn push(&mut self, t: f64, energy: &EnergyBreakdown, rates: &DissipationBreakdown) -> f64 {
        let h = 0.5 * (t - self.t);
        self.dissipated += h * (self.last.dissipated() + rates.dissipated());
        self.supplied += h * (self.last.supplied() + rates.supplied());
        self.t = t;
        self.energy = energy.total;
        self.last = *rates;
        self.residual()
    }

    /// `E(t) + ∫D − E0 − ∫(power + cross)`
    pub fn defect(&self) -> f64 {
        self.energy + self.dissipated - self.e0 - self.supplied
    }

    pub fn residual(&self) -> f64 {
        let scale = self.e0.abs();
        if scale == 0.0 {
            self.defect().abs()
        } else {
            self.defect().abs() / scale
        }
    }

    pub fn inequality(&self, tolerance: f64) -> InequalityReport {
        let lhs = self.energy + self.dissipated;
        let rhs = self.e0 + self.supplied;
        let margin = rhs - lhs;
        InequalityReport { lhs, rhs, margin, holds: margin >= -tolerance * self.e0.abs() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InequalityReport {
    /// `E(t) + ∫ dissipation`
    pub lhs: f64,
    /// `E(0) + ∫ supplied power`
    pub rhs: f64,
    pub margin: f64,
    pub holds: bool,
}

pub fn energy_inequality_check(ledger: &EnergyLedger, tolerance: f64) -> InequalityReport {
    ledger.inequality(tolerance)
}

/// `‖q‖²` against `‖d×q‖² + ‖d·q‖²`; equal where `|d| = 1`.
pub fn q_norm_splitting(grid: &TorusGrid, d: &[Vec3], q: &[Vec3]) -> (f64, f64) {
    let mut full = 0.0;
    let mut split = 0.0;
    for (d, q) in d.iter().zip(q) {
        full += q.norm_sq();
        split += d.cross(q).norm_sq() + d.dot(q).powi(2);
    }
    (full * grid.cell_volume(), split * grid.cell_volume())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct NormResidual {
    /// `‖|d|²−1‖_{L²}`
    pub l2: f64,
    /// `‖|d|²−1‖_{L∞}`
    pub linf: f64,
}

impl NormResidual {
    pub fn of(grid: &TorusGrid, d: &[Vec3]) -> Self {
        let mut sq = 0.0;
        let mut linf: f64 = 0.0;
        for h in d {
            let m = h.norm_sq() - 1.0;
            sq += m * m;
            linf = linf.max(m.abs());
        }
        NormResidual { l2: (sq * grid.cell_volume()).sqrt(), linf }
    }
}

pub fn norm_constraint_residual(grid: &TorusGrid, d: &SpectralDirector) -> NormResidual {
    NormResidual::of(grid, &grid.vector_to_grid(d))
}

// ---------------------------------------------------------------- Young measures

fn compactification_weight(ht: &Vec3, st: &Mat3) -> Result<(f64, f64)> {
    let (h2, s2) = (ht.norm_sq(), st.norm_sq());
    if !(h2 < 1.0 && s2 < 1.0) {
        return Err(Error::OutsideUnitBall { h_norm: h2.sqrt(), s_norm: s2.sqrt() });
    }
    Ok((1.0 - h2, 1.0 - s2))
}

/// `f(h̃/√(1−|h̃|²), S̃/√(1−|S̃|²)) (1−|h̃|²)(1−|S̃|²)` on the open unit balls.
pub fn young_transform(f: impl Fn(&Vec3, &Mat3) -> f64, ht: &Vec3, st: &Mat3) -> Result<f64> {
    let (wh, ws) = compactification_weight(ht, st)?;
    let h = *ht * (1.0 / wh.sqrt());
    let s = *st * (1.0 / ws.sqrt());
    Ok(f(&h, &s) * wh * ws)
}

/// Maps `(h, S)` to the compactified coordinates `(h/√(1+|h|²), S/√(1+|S|²))`.
pub fn compactify(h: &Vec3, s: &Mat3) -> (Vec3, Mat3) {
    (*h * (1.0 / (1.0 + h.norm_sq()).sqrt()), *s * (1.0 / (1.0 + s.norm_sq()).sqrt()))
}

/// Integrands `g(h/|h|, S/|S|) |h|²|S|²`, which the transform leaves unchanged.
pub struct RecessionInvariant<G> {
    pub g: G,
}

impl<G: Fn(&Vec3, &Mat3) -> f64> RecessionInvariant<G> {
    pub fn eval(&self, h: &Vec3, s: &Mat3) -> f64 {
        let (hn, sn) = (h.norm(), s.norm_sq().sqrt());
        if hn == 0.0 || sn == 0.0 {
            return 0.0;
        }
        (self.g)(&(*h * (1.0 / hn)), &(*s * (1.0 / sn))) * hn * hn * sn * sn
    }

    /// Closed form of the transform, valid on the closed unit balls.
    pub fn transform(&self, ht: &Vec3, st: &Mat3) -> f64 {
        self.eval(ht, st)
    }
}

/// Library integrands with known growth at infinity.
#[derive(Clone, Debug)]
pub enum Integrand {
    One,
    /// `|h|²|S|²`
    HSqSSq,
    /// `(|h|²−1)(1+|S|²)`
    PenaltyGrowth,
    /// `|S|²`
    SSq,
    /// `S_ij`
    SComponent(usize, usize),
    /// Frank density.
    Frank(ElasticModel),
    /// One of the five Frank terms, zero based.
    FrankTerm(ElasticModel, usize),
}

impl Integrand {
    pub fn name(&self) -> String {
        match self {
            Integrand::One => "one".into(),
            Integrand::HSqSSq => "h2_s2".into(),
            Integrand::PenaltyGrowth => "penalty_growth".into(),
            Integrand::SSq => "s2".into(),
            Integrand::SComponent(i, j) => format!("s{}{}", i + 1, j + 1),
            Integrand::Frank(_) => "frank".into(),
            Integrand::FrankTerm(_, i) => format!("frank_k{}", i + 1),
        }
    }

    pub fn eval(&self, h: &Vec3, s: &Mat3) -> f64 {
        match self {
            Integrand::One => 1.0,
            Integrand::HSqSSq => h.norm_sq() * s.norm_sq(),
            Integrand::PenaltyGrowth => (h.norm_sq() - 1.0) * (1.0 + s.norm_sq()),
            Integrand::SSq => s.norm_sq(),
            Integrand::SComponent(i, j) => s.0[*i][*j],
            Integrand::Frank(m) => m.density(h, s),
            Integrand::FrankTerm(m, i) => m.terms(h, s)[*i],
        }
    }

    /// Closed form of the transform where one is known.
    pub fn closed_transform(&self, ht: &Vec3, st: &Mat3) -> Option<f64> {
        match self {
            Integrand::One => Some((1.0 - ht.norm_sq()) * (1.0 - st.norm_sq())),
            Integrand::HSqSSq => Some(ht.norm_sq() * st.norm_sq()),
            Integrand::PenaltyGrowth => Some(2.0 * ht.norm_sq() - 1.0),
            _ => None,
        }
    }
}

/// Grid samples of a director and its gradient.
#[derive(Clone, Debug)]
pub struct FieldSamples {
    pub d: Vec<Vec3>,
    pub grad: Vec<Mat3>,
    pub cell_volume: f64,
}

impl FieldSamples {
    pub fn from_spectral(grid: &TorusGrid, d: &SpectralDirector) -> Self {
        FieldSamples { d: grid.vector_to_grid(d), grad: grid.gradient_grid(d), cell_volume: grid.cell_volume() }
    }

    /// Two-phase laminate along `x₁` with `∇d = ±A` on equal volumes,
    /// `A = a ⊗ e₁`, `periods` sawtooth periods across the box.
    pub fn laminate(grid: &TorusGrid, base: Vec3, a: Vec3, periods: usize) -> Self {
        let n = grid.n();
        let l = grid.length();
        let lam = l / periods as f64;
        let mut d = Vec::with_capacity(grid.len());
        let mut grad = Vec::with_capacity(grid.len());
        for p in 0..grid.len() {
            let i = grid.split_index(p)[0];
            let x = grid.point(p)[0];
            let phase = x - lam * (x / lam).floor();
            let (profile, sign) = if (2 * periods * i / n).is_multiple_of(2) { (phase, 1.0) } else { (lam - phase, -1.0) };
            d.push(base + profile * a);
            grad.push(Mat3::from_fn(|r, c| if c == 0 { sign * a.0[r] } else { 0.0 }));
        }
        FieldSamples { d, grad, cell_volume: grid.cell_volume() }
    }

    pub fn integrate(&self, f: impl Fn(&Vec3, &Mat3) -> f64) -> f64 {
        self.cell_volume * self.d.iter().zip(&self.grad).map(|(h, s)| f(h, s)).sum::<f64>()
    }
}

/// Weighted histogram over the radial compactified coordinates.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EmpiricalYoungMeasure {
    pub bins: usize,
    /// `weights[i][j]`: mass with `|h̃|` in bin `i` and `|S̃|` in bin `j`.
    pub weights: Vec<Vec<f64>>,
    pub mass: f64,
    /// Mass-weighted mean of `h̃`.
    pub mean_h: [f64; 3],
    /// Mass-weighted mean of `S̃`.
    pub mean_s: [[f64; 3]; 3],
    pub max_h_radius: f64,
    pub max_s_radius: f64,
}

impl EmpiricalYoungMeasure {
    pub const DEFAULT_BINS: usize = 16;

    pub fn from_samples(samples: &FieldSamples, bins: usize) -> Self {
        let mut weights = vec![vec![0.0; bins]; bins];
        let mut mass = 0.0;
        let mut mean_h = Vec3::ZERO;
        let mut mean_s = Mat3::ZERO;
        let (mut max_h, mut max_s): (f64, f64) = (0.0, 0.0);
        let bin = |r: f64| ((r * bins as f64) as usize).min(bins - 1);
        for (h, s) in samples.d.iter().zip(&samples.grad) {
            let w = (1.0 + h.norm_sq()) * (1.0 + s.norm_sq()) * samples.cell_volume;
            let (ht, st) = compactify(h, s);
            let (rh, rs) = (ht.norm(), st.norm_sq().sqrt());
            max_h = max_h.max(rh);
            max_s = max_s.max(rs);
            weights[bin(rh)][bin(rs)] += w;
            mass += w;
            mean_h += w * ht;
            mean_s += w * st;
        }
        let inv = if mass > 0.0 { 1.0 / mass } else { 0.0 };
        EmpiricalYoungMeasure {
            bins,
            weights,
            mass,
            mean_h: (inv * mean_h).0,
            mean_s: (inv * mean_s).0,
            max_h_radius: max_h,
            max_s_radius: max_s,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PairingEntry {
    pub integrand: String,
    pub value: f64,
    pub measure: EmpiricalYoungMeasure,
}

/// `∫ f(d, ∇d)` for every member of a family, with its histogram.
pub fn empirical_pairing(family: &[FieldSamples], f: &Integrand) -> Vec<PairingEntry> {
    family
        .iter()
        .map(|m| PairingEntry {
            integrand: f.name(),
            value: m.integrate(|h, s| f.eval(h, s)),
            measure: EmpiricalYoungMeasure::from_samples(m, EmpiricalYoungMeasure::DEFAULT_BINS),
        })
        .collect()
}

// ---------------------------------------------------------------- defect

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DefectEstimate {
    /// `δ‖∇²d‖²`
    pub total_hessian: f64,
    /// `δ‖Δd‖²`
    pub total_laplacian: f64,
    #[serde(skip)]
    pub spatial_density: Vec<f64>,
}

impl DefectEstimate {
    pub fn relative_difference(&self) -> f64 {
        let scale = self.total_hessian.abs().max(self.total_laplacian.abs());
        if scale == 0.0 {
            0.0
        } else {
            (self.total_hessian - self.total_laplacian).abs() / scale
        }
    }
}

pub fn defect_density(grid: &TorusGrid, d: &SpectralDirector, delta: f64) -> DefectEstimate {
    let hess = grid.hessian_grid(d);
    let spatial_density: Vec<f64> = hess.iter().map(|g| delta * g.norm_sq()).collect();
    let total_hessian = grid.integrate(&spatial_density);
    let lap = grid.vector_to_grid(&grid.laplacian(d));
    let total_laplacian = delta * grid.integrate_by(&lap, Vec3::norm_sq);
    DefectEstimate { total_hessian, total_laplacian, spatial_density }
}

// ---------------------------------------------------------------- sweeps

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual in log space.
    pub rms_residual: f64,
    pub points: usize,
}

/// Least-squares fit of `log y = slope · log x + intercept`; needs at least
/// four positive points.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Option<SlopeFit> {
    let pts: Vec<(f64, f64)> = x.iter().zip(y).filter(|(a, b)| **a > 0.0 && **b > 0.0).map(|(a, b)| (a.ln(), b.ln())).collect();
    if pts.len() < 4 || pts.len() != x.len() {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx = pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    if sxx == 0.0 {
        return None;
    }
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx;
    let intercept = my - slope * mx;
    let rms = (pts.iter().map(|p| (p.1 - slope * p.0 - intercept).powi(2)).sum::<f64>() / n).sqrt();
    Some(SlopeFit { slope, intercept, rms_residual: rms, points: pts.len() })
}

/// True when `values` strictly decrease along the list.
pub fn strictly_decreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] < w[0])
}
