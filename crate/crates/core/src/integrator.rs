//! Galerkin ODE system and its time stepping.

use serde::{Deserialize, Serialize};

use crate::diagnostics::{DissipationBreakdown, EnergyBreakdown, NormResidual};
use crate::error::{Error, Result};
use crate::oseen_frank::ElasticModel;
use crate::regularized::{free_energy_of, variational_derivative, DirectorFields, RegularizationParams};
use crate::spectral::{Projectors, SpectralDirector, SpectralVector, SpectralVelocity, TorusGrid};
use crate::stresses::{discrete_leslie_stress, LeslieCoefficients};
use crate::tensor::Vec3;

#[derive(Clone, Debug)]
pub struct Physics {
    pub model: ElasticModel,
    pub leslie: LeslieCoefficients,
    pub reg: RegularizationParams,
}

#[derive(Clone, Debug, Default)]
pub enum Forcing {
    #[default]
    Zero,
    /// Body force sampled on the grid.
    Grid(Vec<Vec3>),
}

impl Forcing {
    fn value(&self, p: usize) -> Vec3 {
        match self {
            Forcing::Zero => Vec3::ZERO,
            Forcing::Grid(g) => g[p],
        }
    }
}

#[derive(Clone, Debug)]
pub struct SimState {
    pub t: f64,
    pub v: SpectralVelocity,
    pub d: SpectralDirector,
    pub grid: TorusGrid,
    pub projectors: Projectors,
    pub physics: Physics,
    pub forcing: Forcing,
    /// Holds the velocity fixed, leaving the director equation as a
    /// gradient flow.
    pub frozen_velocity: bool,
}

impl SimState {
    /// Projects the initial data onto the Galerkin spaces.
    pub fn new(grid: TorusGrid, galerkin_n: Option<usize>, physics: Physics, forcing: Forcing, v0: SpectralVelocity, d0: SpectralDirector) -> Result<Self> {
        let projectors = Projectors::new(&grid, galerkin_n.unwrap_or(grid.dealias_cutoff()))?;
        for (name, len) in [("v0", v0.len()), ("d0", d0.len())] {
            if len != grid.len() {
                return Err(Error::InvalidParameter { name: "initial data", reason: format!("{name} has {len} coefficients, grid needs {}", grid.len()) });
            }
        }
        if let Forcing::Grid(g) = &forcing {
            if g.len() != grid.len() {
                return Err(Error::GridMismatch { expected: grid.len(), found: g.len() });
            }
        }
        let (mut v, mut d) = (v0, d0);
        projectors.velocity(&grid, &mut v);
        projectors.director(&grid, &mut d);
        Ok(SimState { t: 0.0, v, d, grid, projectors, physics, forcing, frozen_velocity: false })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    Imex1,
    Rk4Explicit,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepperConfig {
    pub dt: f64,
    pub t_end: f64,
    #[serde(default)]
    pub scheme: Scheme,
    /// Enables the CFL guard when set.
    #[serde(default)]
    pub cfl_safety: Option<f64>,
}

impl StepperConfig {
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            errs.push(format!("time.dt must be positive, got {}", self.dt));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            errs.push(format!("time.t_end must be non-negative, got {}", self.t_end));
        }
        if let Some(c) = self.cfl_safety {
            if !(c > 0.0 && c <= 1.0) {
                errs.push(format!("time.cfl_safety must lie in (0, 1], got {c}"));
            }
        }
        if errs.is_empty() {
            let steps = self.t_end / self.dt;
            if (steps - steps.round()).abs() > 1e-9 * steps.max(1.0) {
                errs.push(format!("time.t_end = {} is not an integer multiple of dt = {}", self.t_end, self.dt));
            }
        }
        errs
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

/// Everything derived from one right-hand-side evaluation.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub dv: SpectralVector,
    pub dd: SpectralVector,
    pub energy: EnergyBreakdown,
    pub dissipation: DissipationBreakdown,
    pub norm: NormResidual,
    /// `δ‖∇²d‖²`
    pub defect_total: f64,
}

/// Time derivatives of the Galerkin system together with the energy and
/// dissipation of the state they were computed from.
pub fn assemble_rhs(state: &SimState) -> Evaluation {
    evaluate(state, &state.v, &state.d)
}

fn evaluate(state: &SimState, v_hat: &SpectralVector, d_hat: &SpectralVector) -> Evaluation {
    let grid = &state.grid;
    let ph = &state.physics;
    let lc = &ph.leslie;

    let fields = DirectorFields::new(grid, d_hat);
    let mut q_hat = variational_derivative(grid, d_hat, &fields, &ph.model, &ph.reg);
    state.projectors.director(grid, &mut q_hat);
    let q = grid.vector_to_grid(&q_hat);

    let v = grid.vector_to_grid(v_hat);
    let grad_v = grid.gradient_grid(v_hat);
    let omega = grid.vector_to_grid(&grid.curl(v_hat));

    let n = grid.len();
    let mut transport = Vec::with_capacity(n);
    let mut force = Vec::with_capacity(n);
    let mut diss = [0.0; 6];
    for p in 0..n {
        let (d, s, gv, qv) = (&fields.d[p], &fields.grad[p], &grad_v[p], &q[p]);
        let a = gv.sym();
        let ad = a.mul_vec(d);
        transport.push(gv.skw().mul_vec(d) - s.mul_vec(&v[p]) - lc.lambda * ad);
        let g = state.forcing.value(p);
        force.push(v[p].cross(&omega[p]) + s.tr_mul_vec(qv) + g);
        diss[0] += d.dot(&ad).powi(2);
        diss[1] += a.norm_sq();
        diss[2] += ad.norm_sq();
        diss[3] += qv.norm_sq();
        diss[4] += qv.dot(&ad);
        diss[5] += g.dot(&v[p]);
    }

    let mut dd = grid.vector_from_grid(&transport);
    state.projectors.director(grid, &mut dd);
    dd.axpy(-1.0, &q_hat);

    let stress = discrete_leslie_stress(lc, &fields.d, &grad_v, &q);
    let mut dv = grid.vector_from_grid(&force);
    let div_t = grid.divergence_of_matrix(&stress);
    dv.axpy(1.0, &div_t);
    state.projectors.velocity(grid, &mut dv);
    if state.frozen_velocity {
        dv = SpectralVector::zeros(grid);
    }

    let dvol = grid.cell_volume();
    let kinetic = 0.5 * grid.spectral_norm_sq(v_hat);
    let energy = free_energy_of(grid, &fields, &ph.model, &ph.reg).with_kinetic(kinetic);
    let dissipation = DissipationBreakdown {
        mu1_term: lc.mu1 * diss[0] * dvol,
        mu4_term: lc.mu4 * diss[1] * dvol,
        aniso_term: lc.alpha() * diss[2] * dvol,
        q_term: diss[3] * dvol,
        cross_term: lc.beta() * diss[4] * dvol,
        power_in: diss[5] * dvol,
    };
    let defect_total = ph.reg.delta() * grid.spectral_norm_sq(&grid.laplacian(d_hat));
    Evaluation { dv, dd, energy, dissipation, norm: NormResidual::of(grid, &fields.d), defect_total }
}

fn check_cfl(state: &SimState, cfg: &StepperConfig) -> Result<()> {
    let Some(safety) = cfg.cfl_safety else { return Ok(()) };
    let h = state.grid.spacing();
    let vmax = state.grid.vector_to_grid(&state.v).iter().map(Vec3::norm).fold(0.0, f64::max);
    let mut limit = if vmax > 0.0 { safety * h / vmax } else { f64::INFINITY };
    if cfg.scheme == Scheme::Rk4Explicit {
        limit = limit.min(safety * h.powi(4) / state.physics.reg.delta());
    }
    if cfg.dt > limit {
        return Err(Error::CflViolation { dt: cfg.dt, limit });
    }
    Ok(())
}

/// `(I + dt L)⁻¹` for the implicit director and velocity operators.
fn implicit_solve(state: &SimState, dt: f64, v: &mut SpectralVector, d: &mut SpectralVector) {
    let grid = &state.grid;
    let (c_curl, c_div) = state.physics.model.linear_coefficients();
    let delta = state.physics.reg.delta();
    let visc = 0.5 * state.physics.leslie.mu4;
    for p in 0..grid.len() {
        let k = grid.wavevector(p);
        let k2 = grid.k_sq(p);
        let a = 1.0 + dt * (c_curl * k2 + delta * k2 * k2);
        let b = dt * (c_div - c_curl);
        let kr = k[0] * d.comps[0][p] + k[1] * d.comps[1][p] + k[2] * d.comps[2][p];
        let corr = b * kr / (a * (a + b * k2));
        let vf = 1.0 / (1.0 + dt * visc * k2);
        for i in 0..3 {
            d.comps[i][p] = d.comps[i][p] / a - corr * k[i];
            v.comps[i][p] *= vf;
        }
    }
}

/// `L x` for the same operators.
fn implicit_apply(state: &SimState, v: &SpectralVector, d: &SpectralVector) -> (SpectralVector, SpectralVector) {
    let grid = &state.grid;
    let (c_curl, c_div) = state.physics.model.linear_coefficients();
    let delta = state.physics.reg.delta();
    let visc = 0.5 * state.physics.leslie.mu4;
    let mut lv = SpectralVector::zeros(grid);
    let mut ld = SpectralVector::zeros(grid);
    for p in 0..grid.len() {
        let k = grid.wavevector(p);
        let k2 = grid.k_sq(p);
        let kd = k[0] * d.comps[0][p] + k[1] * d.comps[1][p] + k[2] * d.comps[2][p];
        for i in 0..3 {
            ld.comps[i][p] = (c_curl * k2 + delta * k2 * k2) * d.comps[i][p] + (c_div - c_curl) * k[i] * kd;
            lv.comps[i][p] = visc * k2 * v.comps[i][p];
        }
    }
    (lv, ld)
}

fn finish(state: &mut SimState, v: SpectralVector, d: SpectralVector, t: f64) -> Result<()> {
    let (mut v, mut d) = (v, d);
    if !(v.is_finite() && d.is_finite()) {
        return Err(Error::BlowUp { t });
    }
    state.projectors.velocity(&state.grid, &mut v);
    state.projectors.director(&state.grid, &mut d);
    for c in v.comps.iter_mut().chain(d.comps.iter_mut()) {
        state.grid.enforce_hermitian(c);
    }
    state.v = SpectralVelocity(v);
    state.d = SpectralDirector(d);
    state.t = t;
    Ok(())
}

/// Advances one step; `eval` must be the evaluation of the current state.
pub fn step_with(state: &mut SimState, cfg: &StepperConfig, eval: &Evaluation) -> Result<()> {
    check_cfl(state, cfg)?;
    let dt = cfg.dt;
    let t_new = state.t + dt;
    match cfg.scheme {
        Scheme::Imex1 => {
            let (lv, ld) = implicit_apply(state, &state.v, &state.d);
            let mut v = state.v.0.clone();
            v.axpy(dt, &eval.dv);
            v.axpy(dt, &lv);
            let mut d = state.d.0.clone();
            d.axpy(dt, &eval.dd);
            d.axpy(dt, &ld);
            implicit_solve(state, dt, &mut v, &mut d);
            finish(state, v, d, t_new)
        }
        Scheme::Rk4Explicit => {
            let stage = |c: f64, k: &Evaluation| {
                let mut v = state.v.0.clone();
                v.axpy(c * dt, &k.dv);
                let mut d = state.d.0.clone();
                d.axpy(c * dt, &k.dd);
                evaluate(state, &v, &d)
            };
            let k2 = stage(0.5, eval);
            let k3 = stage(0.5, &k2);
            let k4 = stage(1.0, &k3);
            let mut v = state.v.0.clone();
            let mut d = state.d.0.clone();
            for (w, k) in [(1.0, eval), (2.0, &k2), (2.0, &k3), (1.0, &k4)] {
                v.axpy(w * dt / 6.0, &k.dv);
                d.axpy(w * dt / 6.0, &k.dd);
            }
            finish(state, v, d, t_new)
        }
    }
}

pub fn step(state: &mut SimState, cfg: &StepperConfig) -> Result<()> {
    let eval = assemble_rhs(state);
    step_with(state, cfg, &eval)
}

/// Advances to `cfg.t_end`, calling `observer(step_index, state, eval)` for
/// the initial state and after every step.
pub fn run<F>(state: &mut SimState, cfg: &StepperConfig, mut observer: F) -> Result<()>
where
    F: FnMut(usize, &SimState, &Evaluation) -> Result<()>,
{
    let errs = cfg.validate();
    if !errs.is_empty() {
        return Err(Error::Config(errs));
    }
    let t0 = state.t;
    let mut eval = assemble_rhs(state);
    observer(0, state, &eval)?;
    for i in 1..=cfg.steps() {
        step_with(state, cfg, &eval)?;
        // avoid drift from repeated addition
        state.t = t0 + i as f64 * cfg.dt;
        eval = assemble_rhs(state);
        if !eval.energy.total.is_finite() {
            return Err(Error::BlowUp { t: state.t });
        }
        observer(i, state, &eval)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regularized::PenaltySchedule;

    fn physics(model: ElasticModel) -> Physics {
        Physics {
            model,
            leslie: LeslieCoefficients { mu1: 1.0, mu2: -0.2, mu3: 0.7, mu4: 1.0, mu5: 0.8, mu6: 0.45, lambda: 0.5 },
            reg: RegularizationParams::new(0.1, PenaltySchedule::Linear).unwrap(),
        }
    }

    fn perturbed(grid: &TorusGrid, a: f64) -> SpectralDirector {
        SpectralDirector(grid.vector_from_fn(|x| Vec3::new(a * x[0].sin(), 0.0, 1.0)))
    }

    /// Amplitude of the sin(x) e1 mode after running to `t_end`.
    fn heat_amplitude(scheme: Scheme, dt: f64, t_end: f64, a: f64) -> f64 {
        let grid = TorusGrid::periodic_2pi(8).unwrap();
        let ph = physics(ElasticModel::OneConstant { k: 1.0 });
        let mut st = SimState::new(grid.clone(), None, ph, Forcing::Zero, SpectralVelocity::zeros(&grid), perturbed(&grid, a)).unwrap();
        st.frozen_velocity = true;
        run(&mut st, &StepperConfig { dt, t_end, scheme, cfl_safety: None }, |_, _, _| Ok(())).unwrap();
        let p = grid.len() - grid.n() * grid.n();
        // sin(x) has coefficient −i/2 at mode (−1,0,0)
        2.0 * st.d.comps[0][p].im
    }

    #[test]
    fn single_mode_relaxes_at_linear_rate() {
        let a = 1e-6;
        let t_end: f64 = 0.5;
        let exact = a * (-(1.0 + 0.1) * t_end).exp();
        let got = heat_amplitude(Scheme::Rk4Explicit, 1e-2, t_end, a);
        assert!(((got - exact) / exact).abs() < 1e-5, "{got} vs {exact}");
    }

    #[test]
    fn imex_error_is_first_order() {
        let a = 1e-6;
        let t_end: f64 = 0.5;
        let exact = a * (-1.1 * t_end).exp();
        let e1 = (heat_amplitude(Scheme::Imex1, 2e-2, t_end, a) - exact).abs();
        let e2 = (heat_amplitude(Scheme::Imex1, 1e-2, t_end, a) - exact).abs();
        let ratio = e2 / e1;
        assert!((0.45..0.55).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn forcing_enters_through_the_projection() {
        let grid = TorusGrid::periodic_2pi(8).unwrap();
        let g: Vec<Vec3> = grid.points().map(|x| Vec3::new(x[1].sin() + x[0].cos(), 0.3, x[0].sin())).collect();
        let d = SpectralDirector(grid.vector_from_fn(|_| Vec3::unit(2)));
        let st = SimState::new(grid.clone(), None, physics(ElasticModel::OneConstant { k: 1.0 }), Forcing::Grid(g.clone()), SpectralVelocity::zeros(&grid), d).unwrap();
        let eval = assemble_rhs(&st);
        let mut want = grid.vector_from_grid(&g);
        st.projectors.velocity(&grid, &mut want);
        let mut diff = eval.dv.clone();
        diff.axpy(-1.0, &want);
        assert!(diff.max_abs() < 1e-14);
        assert!(eval.dd.max_abs() < 1e-14);
        // x-gradient of cos x is not solenoidal, the sin y part is
        assert!((want.comps[0][grid.n() * grid.n()].re).abs() < 1e-15);
    }

    #[test]
    fn initial_velocity_is_projected() {
        let grid = TorusGrid::periodic_2pi(8).unwrap();
        let v = SpectralVelocity(grid.vector_from_fn(|x| Vec3::new(x[0].sin(), x[1].cos(), 1.0)));
        let st = SimState::new(grid.clone(), None, physics(ElasticModel::OneConstant { k: 1.0 }), Forcing::Zero, v, perturbed(&grid, 0.1)).unwrap();
        assert!(grid.divergence_defect(&st.v) < 1e-14);
        assert!(st.v.mean().norm() < 1e-15);
    }

    #[test]
    fn rejects_mismatched_forcing() {
        let grid = TorusGrid::periodic_2pi(8).unwrap();
        let err = SimState::new(grid.clone(), None, physics(ElasticModel::OneConstant { k: 1.0 }), Forcing::Grid(vec![Vec3::ZERO; 3]), SpectralVelocity::zeros(&grid), perturbed(&grid, 0.0));
        assert!(matches!(err, Err(Error::GridMismatch { .. })));
    }

    #[test]
    fn t_end_must_be_a_multiple_of_dt() {
        let cfg = StepperConfig { dt: 0.3, t_end: 1.0, scheme: Scheme::Imex1, cfl_safety: None };
        assert!(!cfg.validate().is_empty());
        let cfg = StepperConfig { dt: 0.25, t_end: 1.0, ..cfg };
        assert!(cfg.validate().is_empty());
        assert_eq!(cfg.steps(), 4);
    }

    fn smooth_run(scheme: Scheme, dt: f64) -> SimState {
        let grid = TorusGrid::periodic_2pi(8).unwrap();
        let spec = crate::initial::RandomSmooth::with_seed(3);
        let (v, d) = crate::initial::random_smooth(&grid, &spec, grid.dealias_cutoff());
        let model = ElasticModel::OseenFrank(crate::oseen_frank::FrankConstants::new(1.0, 0.8, 1.2, crate::oseen_frank::SplitMode::MinSplit).unwrap());
        let mut st = SimState::new(grid, None, physics(model), Forcing::Zero, v, d).unwrap();
        run(&mut st, &StepperConfig { dt, t_end: 0.08, scheme, cfl_safety: None }, |_, _, _| Ok(())).unwrap();
        st
    }

    fn distance(a: &SimState, b: &SimState) -> f64 {
        let mut dv = a.v.0.clone();
        dv.axpy(-1.0, &b.v);
        let mut dd = a.d.0.clone();
        dd.axpy(-1.0, &b.d);
        dv.max_abs().max(dd.max_abs())
    }

    #[test]
    fn rk4_self_convergence_is_fourth_order() {
        let runs: Vec<_> = [4e-3, 2e-3, 1e-3].map(|dt| smooth_run(Scheme::Rk4Explicit, dt)).into();
        let order = (distance(&runs[0], &runs[1]) / distance(&runs[1], &runs[2])).log2();
        assert!(order >= 3.9, "order {order}");
    }

    #[test]
    fn imex_converges_to_rk4_at_first_order() {
        let reference = smooth_run(Scheme::Rk4Explicit, 1e-3);
        let e1 = distance(&smooth_run(Scheme::Imex1, 4e-3), &reference);
        let e2 = distance(&smooth_run(Scheme::Imex1, 2e-3), &reference);
        let order = (e1 / e2).log2();
        assert!(order >= 0.9, "order {order}");
    }
}
