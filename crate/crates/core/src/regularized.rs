//! The δ-regularized, ε-penalized free energy and its variational derivative.

use serde::{Deserialize, Serialize};

use crate::diagnostics::EnergyBreakdown;
use crate::error::{Error, Result};
use crate::oseen_frank::{DirectorSample, ElasticModel};
use crate::spectral::{SpectralDirector, SpectralVector, TorusGrid};
use crate::tensor::{Mat3, Vec3};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PenaltySchedule {
    /// `ε = δ`
    #[default]
    Linear,
    /// `ε = δ^{7/3}`
    SevenThirds,
}

impl PenaltySchedule {
    pub fn epsilon(self, delta: f64) -> f64 {
        match self {
            PenaltySchedule::Linear => delta,
            PenaltySchedule::SevenThirds => delta.powf(7.0 / 3.0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegularizationParams {
    delta: f64,
    schedule: PenaltySchedule,
    epsilon: f64,
}

impl RegularizationParams {
    pub fn new(delta: f64, schedule: PenaltySchedule) -> Result<Self> {
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(Error::InvalidParameter { name: "delta", reason: format!("must lie in (0, 1], got {delta}") });
        }
        Ok(RegularizationParams { delta, schedule, epsilon: schedule.epsilon(delta) })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn schedule(&self) -> PenaltySchedule {
        self.schedule
    }
}

/// The three summands of the regularized density.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegDensity {
    pub frank: [f64; 5],
    pub penalty: f64,
    pub reg_delta: f64,
}

impl RegDensity {
    pub fn elastic(&self) -> f64 {
        self.frank.iter().sum()
    }

    pub fn total(&self) -> f64 {
        self.elastic() + self.penalty + self.reg_delta
    }
}

#[inline]
pub fn penalty_density(eps: f64, h: &Vec3) -> f64 {
    let m = h.norm_sq() - 1.0;
    m * m / (4.0 * eps)
}

pub fn reg_energy_terms(model: &ElasticModel, p: &RegularizationParams, s: &DirectorSample) -> Result<RegDensity> {
    let gamma = s.gamma.as_ref().ok_or(Error::MissingSecondGradient)?;
    Ok(RegDensity {
        frank: model.terms(&s.h, &s.s),
        penalty: penalty_density(p.epsilon, &s.h),
        reg_delta: 0.5 * p.delta * gamma.trace_last().norm_sq(),
    })
}

pub fn reg_energy_density(model: &ElasticModel, p: &RegularizationParams, s: &DirectorSample) -> Result<f64> {
    reg_energy_terms(model, p, s).map(|t| t.total())
}

/// Grid values of a director and its first derivatives.
#[derive(Clone, Debug)]
pub struct DirectorFields {
    pub d: Vec<Vec3>,
    pub grad: Vec<Mat3>,
    pub lap: Vec<Vec3>,
}

impl DirectorFields {
    pub fn new(grid: &TorusGrid, d: &SpectralVector) -> Self {
        DirectorFields { d: grid.vector_to_grid(d), grad: grid.gradient_grid(d), lap: grid.vector_to_grid(&grid.laplacian(d)) }
    }
}

pub fn total_free_energy(grid: &TorusGrid, d: &SpectralDirector, model: &ElasticModel, p: &RegularizationParams) -> EnergyBreakdown {
    free_energy_of(grid, &DirectorFields::new(grid, d), model, p)
}

pub fn free_energy_of(grid: &TorusGrid, f: &DirectorFields, model: &ElasticModel, p: &RegularizationParams) -> EnergyBreakdown {
    let mut frank = [0.0; 5];
    let mut penalty = 0.0;
    let mut reg = 0.0;
    for ((h, s), l) in f.d.iter().zip(&f.grad).zip(&f.lap) {
        for (acc, t) in frank.iter_mut().zip(model.terms(h, s)) {
            *acc += t;
        }
        penalty += penalty_density(p.epsilon, h);
        reg += l.norm_sq();
    }
    let dv = grid.cell_volume();
    EnergyBreakdown::new(0.0, frank.map(|x| x * dv), penalty * dv, 0.5 * p.delta * reg * dv)
}

/// Coefficients of `F_h − div F_S + (1/ε)(|d|²−1)d + δΔ²d` with the
/// nonlinear part evaluated on the full grid.
///
/// This is the exact gradient of the grid-quadrature energy with respect to
/// the director coefficients.
pub fn variational_derivative(grid: &TorusGrid, d: &SpectralVector, f: &DirectorFields, model: &ElasticModel, p: &RegularizationParams) -> SpectralVector {
    let inv_eps = 1.0 / p.epsilon;
    let mut local = Vec::with_capacity(grid.len());
    let mut flux = Vec::with_capacity(grid.len());
    for (h, s) in f.d.iter().zip(&f.grad) {
        local.push(model.f_h(h, s) + (inv_eps * (h.norm_sq() - 1.0)) * *h);
        flux.push(model.f_s(h, s));
    }
    let mut q = grid.vector_from_grid(&local);
    q.axpy(-1.0, &grid.divergence_of_matrix(&flux));
    q.axpy(p.delta, &grid.bilaplacian(d));
    q
}

/// `q_δ` on the grid.
pub fn variational_derivative_q(grid: &TorusGrid, d: &SpectralDirector, model: &ElasticModel, p: &RegularizationParams) -> Vec<Vec3> {
    let f = DirectorFields::new(grid, d);
    grid.vector_to_grid(&variational_derivative(grid, d, &f, model, p))
}
