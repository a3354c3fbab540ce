//! Named invariant checks behind `el-sim check`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::diagnostics::{young_transform, FieldSamples, Integrand, RecessionInvariant};
use crate::initial::band_limited_field;
use crate::integrator::{step, Forcing, Physics, Scheme, SimState, StepperConfig};
use crate::oseen_frank::{
    energy_density, energy_density_tensor_form, f_h, f_s, quad_form_ellipticity, DirectorSample, ElasticModel,
    FrankConstants, SplitMode,
};
use crate::regularized::{free_energy_of, variational_derivative, DirectorFields, PenaltySchedule, RegularizationParams};
use crate::spectral::{coercivity_identity_check, SpectralDirector, SpectralVector, SpectralVelocity, TorusGrid};
use crate::stresses::{discrete_leslie_stress_at, ericksen_identity_residual, LeslieCoefficients};
use crate::tensor::{hat, naive::einsum, vee, Mat3, Ten3, Ten4, Ten6, Vec3};


#[derive(Clone, Debug, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    /// Worst measured quantity.
    pub measured: f64,
    pub tolerance: f64,
    pub detail: String,
}

/// Deliberate corruptions used to prove the suite can fail.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fault {
    LambdaSymmetry,
}

impl std::str::FromStr for Fault {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "lambda-symmetry" => Ok(Fault::LambdaSymmetry),
            other => Err(format!("unknown fault `{other}`")),
        }
    }
}

type CheckFn = fn(Option<Fault>) -> CheckOutcome;

pub const CHECKS: &[(&str, CheckFn)] = &[
    ("tensor_oracles", tensor_oracles),
    ("lambda_symmetry", lambda_symmetry),
    ("energy_forms", energy_forms),
    ("gradient_fs", gradient_fs),
    ("gradient_fh", gradient_fh),
    ("gradient_q", gradient_q),
    ("ellipticity", ellipticity),
    ("leray_projection", leray_projection),
    ("integration_by_parts", integration_by_parts),
    ("coercivity", coercivity),
    ("ericksen_identity", ericksen_identity),
    ("leslie_dissipation", leslie_dissipation),
    ("young_transform", young_transform_fixed_points),
    ("laminate_pairing", laminate_pairing),
    ("equilibrium", equilibrium),
];

pub fn check_names() -> Vec<&'static str> {
    CHECKS.iter().map(|c| c.0).collect()
}

/// Runs every check whose name contains `filter`.
pub fn run_checks(filter: Option<&str>, fault: Option<Fault>) -> Vec<CheckOutcome> {
    CHECKS.iter().filter(|(name, _)| filter.is_none_or(|f| name.contains(f))).map(|(_, f)| f(fault)).collect()
}

fn outcome(name: &'static str, measured: f64, tolerance: f64, passed: bool, detail: impl Into<String>) -> CheckOutcome {
    CheckOutcome { name, passed: passed && measured.is_finite(), measured, tolerance, detail: detail.into() }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vec(r: &mut ChaCha8Rng) -> Vec3 {
    Vec3::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0), r.random_range(-1.0..1.0))
}

pub fn random_mat(r: &mut ChaCha8Rng) -> Mat3 {
    Mat3([0; 3].map(|_| [0; 3].map(|_| r.random_range(-1.0..1.0))))
}

fn random_ten3(r: &mut ChaCha8Rng) -> Ten3 {
    Ten3([0; 3].map(|_| [0; 3].map(|_| [0; 3].map(|_| r.random_range(-1.0..1.0)))))
}

fn random_frank(r: &mut ChaCha8Rng, split: SplitMode) -> FrankConstants {
    FrankConstants::new(r.random_range(0.2..2.0), r.random_range(0.2..2.0), r.random_range(0.2..2.0), split).unwrap()
}

fn rel_err(got: &[f64], want: &[f64]) -> f64 {
    let scale = want.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
    got.iter().zip(want).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())) / scale
}

fn tensor_oracles(_: Option<Fault>) -> CheckOutcome {
    let mut r = rng(1);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let (a, b) = (random_mat(&mut r), random_mat(&mut r));
        let v = random_vec(&mut r);
        let g = random_ten3(&mut r);
        let lam = Ten4(std::array::from_fn(|_| r.random_range(-1.0..1.0)));
        let th = Ten6(Box::new(std::array::from_fn(|_| r.random_range(-1.0..1.0))));
        let (af, bf, gf) = (a.as_flat(), b.as_flat(), g.as_flat());
        let cases: [(Vec<f64>, Vec<f64>); 12] = [
            (a.matmul(&b).as_flat().to_vec(), einsum("ij,jk->ik", &[&af, &bf])),
            (a.mul_vec(&v).0.to_vec(), einsum("ij,j->i", &[&af, &v.0])),
            (g.contract_mat(&a).0.to_vec(), einsum("ijk,jk->i", &[&gf, &af])),
            (g.dot_mat(&a).as_flat().to_vec(), einsum("ijk,kl->ijl", &[&gf, &af])),
            (g.dot_vec(&v).as_flat().to_vec(), einsum("ijk,k->ij", &[&gf, &v.0])),
            (g.left_dot_vec(&v).as_flat().to_vec(), einsum("ijk,i->jk", &[&gf, &v.0])),
            (lam.contract_mat(&a).as_flat().to_vec(), einsum("ijkl,kl->ij", &[&lam.0, &af])),
            (lam.dot_vec(&v).as_flat().to_vec(), einsum("ijkl,l->ijk", &[&lam.0, &v.0])),
            (lam.contract_ten3(&g).as_flat().to_vec(), einsum("ijkl,klm->ijm", &[&lam.0, &gf])),
            (lam.triple_dot_ten3(&g).0.to_vec(), einsum("ijkl,jkl->i", &[&lam.0, &gf])),
            (th.left_contract_mat(&a).0.to_vec(), einsum("ijklmn,ij->klmn", &[&th.0[..], &af])),
            (th.triple_dot_ten3(&g).as_flat().to_vec(), einsum("ijklmn,lmn->ijk", &[&th.0[..], &gf])),
        ];
        for (got, want) in &cases {
            worst = worst.max(rel_err(got, want));
        }
        let five = th.left_dot_vec(&v);
        worst = worst.max(rel_err(&five.0[..], &einsum("ijklmn,k->ijlmn", &[&th.0[..], &v.0])));
        worst = worst.max((vee(&hat(&v)) - v).norm() / v.norm());
    }
    outcome("tensor_oracles", worst, 1e-13, worst < 1e-13, "max relative error against naive einsum over 1000 inputs")
}

fn lambda_symmetry(fault: Option<Fault>) -> CheckOutcome {
    let mut r = rng(2);
    let mut worst = 0.0f64;
    for split in [SplitMode::MinSplit, SplitMode::EqualSplit] {
        for _ in 0..50 {
            let c = random_frank(&mut r, split);
            let mut lam = c.tensors().lambda;
            if fault == Some(Fault::LambdaSymmetry) {
                let x = lam.get(0, 1, 2, 0);
                lam.set(0, 1, 2, 0, x + 1e-3);
            }
            worst = worst.max(lam.major_symmetry_defect());
        }
    }
    outcome("lambda_symmetry", worst, 1e-15, worst <= 1e-15, "max |Λ_ijkl − Λ_klij|")
}

fn energy_forms(_: Option<Fault>) -> CheckOutcome {
    let mut r = rng(3);
    let mut worst = 0.0f64;
    for split in [SplitMode::MinSplit, SplitMode::EqualSplit] {
        let c = random_frank(&mut r, split);
        for _ in 0..1000 {
            let s = DirectorSample::new(random_vec(&mut r), random_mat(&mut r));
            let a = energy_density(&c, &s);
            let b = energy_density_tensor_form(&c, &s);
            worst = worst.max((a - b).abs() / a.abs().max(1e-300));
        }
    }
    outcome("energy_forms", worst, 1e-12, worst < 1e-12, "(h,S) form against the Λ/Θ form, both split modes")
}

/// Fourth-order central difference.
fn fd(f: impl Fn(f64) -> f64, tau: f64) -> f64 {
    (-f(2.0 * tau) + 8.0 * f(tau) - 8.0 * f(-tau) + f(-2.0 * tau)) / (12.0 * tau)
}

fn gradient_fs(_: Option<Fault>) -> CheckOutcome {
    let mut r = rng(4);
    let c = random_frank(&mut r, SplitMode::MinSplit);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let s0 = DirectorSample::new(random_vec(&mut r), random_mat(&mut r));
        let an = f_s(&c, &s0);
        let mut num = Mat3::ZERO;
        for i in 0..3 {
            for j in 0..3 {
                num.0[i][j] = fd(
                    |t| {
                        let mut s = s0.s;
                        s.0[i][j] += t;
                        energy_density(&c, &DirectorSample::new(s0.h, s))
                    },
                    1e-3,
                );
            }
        }
        worst = worst.max(rel_err(&num.as_flat(), &an.as_flat()));
    }
    outcome("gradient_fs", worst, 1e-6, worst < 1e-6, "F_S against finite differences, 100 samples")
}

fn gradient_fh(_: Option<Fault>) -> CheckOutcome {
    let mut r = rng(5);
    let c = random_frank(&mut r, SplitMode::EqualSplit);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let s0 = DirectorSample::new(random_vec(&mut r), random_mat(&mut r));
        let an = f_h(&c, &s0);
        let num = Vec3(std::array::from_fn(|i| {
            fd(
                |t| {
                    let mut h = s0.h;
                    h.0[i] += t;
                    energy_density(&c, &DirectorSample::new(h, s0.s))
                },
                1e-3,
            )
        }));
        worst = worst.max(rel_err(&num.0, &an.0));
    }
    outcome("gradient_fh", worst, 1e-6, worst < 1e-6, "F_h against finite differences, 100 samples")
}

pub fn sample_director(grid: &TorusGrid, amplitude: f64, seed: u64) -> SpectralDirector {
    let mut d = band_limited_field(grid, 3, seed).scaled(amplitude);
    d.comps[2][0] += 1.0;
    SpectralDirector(d)
}

pub fn sample_frank() -> ElasticModel {
    ElasticModel::OseenFrank(FrankConstants::new(1.0, 0.8, 1.2, SplitMode::MinSplit).unwrap())
}

fn gradient_q(_: Option<Fault>) -> CheckOutcome {
    let grid = TorusGrid::periodic_2pi(16).unwrap();
    let model = sample_frank();
    let p = RegularizationParams::new(0.1, PenaltySchedule::Linear).unwrap();
    let d = sample_director(&grid, 0.1, 6);
    let q = grid.vector_to_grid(&variational_derivative(&grid, &d, &DirectorFields::new(&grid, &d), &model, &p));
    let energy = |x: &SpectralVector| free_energy_of(&grid, &DirectorFields::new(&grid, x), &model, &p).total;
    let mut worst = 0.0f64;
    for k in 0..20 {
        let psi = band_limited_field(&grid, 3, 100 + k).scaled(0.05);
        let psi_grid = grid.vector_to_grid(&psi);
        let an = grid.cell_volume() * q.iter().zip(&psi_grid).map(|(a, b)| a.dot(b)).sum::<f64>();
        let num = fd(
            |t| {
                let mut x = d.0.clone();
                x.axpy(t, &psi);
                energy(&x)
            },
            1e-3,
        );
        worst = worst.max((num - an).abs() / an.abs());
    }
    outcome("gradient_q", worst, 1e-6, worst < 1e-6, "q_δ against the Gateaux derivative of the grid energy, N=16")
}

fn ellipticity(_: Option<Fault>) -> CheckOutcome {
    let mut r = rng(7);
    let mut worst = f64::INFINITY;
    for split in [SplitMode::MinSplit, SplitMode::EqualSplit] {
        let c = random_frank(&mut r, split);
        for _ in 0..50_000 {
            worst = worst.min(quad_form_ellipticity(&c, &random_vec(&mut r), &random_vec(&mut r)).margin());
        }
    }
    outcome("ellipticity", worst, -1e-12, worst >= -1e-12, "min of a⊗b:Λ:a⊗b − min(k1,k2)|a|²|b|²")
}

fn leray_projection(_: Option<Fault>) -> CheckOutcome {
    let grid = TorusGrid::periodic_2pi(16).unwrap();
    let a = band_limited_field(&grid, 5, 8);
    let b = band_limited_field(&grid, 5, 9);
    let (mut pa, mut pb) = (a.clone(), b.clone());
    grid.leray_project(&mut pa);
    grid.leray_project(&mut pb);
    let mut ppa = pa.clone();
    grid.leray_project(&mut ppa);
    let mut diff = ppa.clone();
    diff.axpy(-1.0, &pa);
    let idem = diff.max_abs() / pa.max_abs();
    let (l, rr) = (grid.spectral_inner(&pa, &b), grid.spectral_inner(&a, &pb));
    let adj = (l - rr).abs() / l.abs().max(rr.abs());
    let div = grid.divergence_defect(&pa) / pa.max_abs();
    let worst = idem.max(adj).max(div);
    outcome("leray_projection", worst, 1e-13, worst < 1e-13, format!("idempotence {idem:.1e}, adjointness {adj:.1e}, divergence {div:.1e}"))
}

fn integration_by_parts(_: Option<Fault>) -> CheckOutcome {
    let grid = TorusGrid::new(16, 3.0).unwrap();
    let a = band_limited_field(&grid, 5, 10).comps[0].clone();
    let b = band_limited_field(&grid, 5, 11);
    let ga = grid.vector_to_grid(&grid.grad_scalar(&a));
    let bv = grid.vector_to_grid(&b);
    let lhs = grid.cell_volume() * ga.iter().zip(&bv).map(|(x, y)| x.dot(y)).sum::<f64>();
    let av = grid.inverse_real(&a);
    let db = grid.inverse_real(&grid.divergence(&b));
    let rhs = -grid.cell_volume() * av.iter().zip(&db).map(|(x, y)| x * y).sum::<f64>();
    let ibp = (lhs - rhs).abs() / lhs.abs();
    let grid_sq = grid.integrate_by(&bv, Vec3::norm_sq);
    let spec_sq = grid.spectral_norm_sq(&b);
    let pars = (grid_sq - spec_sq).abs() / spec_sq;
    let worst = ibp.max(pars);
    outcome("integration_by_parts", worst, 1e-12, worst < 1e-12, format!("(∇a,b)+(a,div b) {ibp:.1e}, Parseval {pars:.1e}"))
}

fn coercivity(_: Option<Fault>) -> CheckOutcome {
    let grid = TorusGrid::periodic_2pi(32).unwrap();
    let d = sample_director(&grid, 0.3, 12);
    let rep = coercivity_identity_check(&grid, &d);
    let worst = rep.first_relative().max(rep.second_relative());
    outcome("coercivity", worst, 1e-10, worst < 1e-10, format!("first {:.1e}, second {:.1e} at N=32", rep.first_relative(), rep.second_relative()))
}

/// Normalized Ericksen identity residual for the sample fields on `grid`.
pub fn ericksen_sample_residual(grid: &TorusGrid) -> f64 {
    let model = sample_frank();
    let p = RegularizationParams::new(0.1, PenaltySchedule::Linear).unwrap();
    let d = SpectralDirector({ let mut d = band_limited_field(grid, 4, 13).scaled(0.3); d.comps[2][0] += 1.0; d });
    let mut w = band_limited_field(grid, 4, 14);
    grid.leray_project(&mut w);
    ericksen_identity_residual(grid, &d, &model, &p, &w).map(|r| r.normalized).unwrap_or(f64::INFINITY)
}

fn ericksen_identity(_: Option<Fault>) -> CheckOutcome {
    let coarse = ericksen_sample_residual(&TorusGrid::periodic_2pi(16).unwrap());
    let fine = ericksen_sample_residual(&TorusGrid::periodic_2pi(32).unwrap());
    outcome(
        "ericksen_identity",
        fine,
        1e-8,
        fine < 1e-8 && fine < coarse,
        format!("normalized residual {coarse:.1e} at N=16, {fine:.1e} at N=32"),
    )
}

fn leslie_dissipation(_: Option<Fault>) -> CheckOutcome {
    let mut r = rng(15);
    let lc = LeslieCoefficients { mu1: 1.0, mu2: -0.2, mu3: 0.7, mu4: 1.0, mu5: 0.8, mu6: 0.45, lambda: 0.5 };
    let mut worst_form = 0.0f64;
    let mut min_diss = f64::INFINITY;
    for _ in 0..2000 {
        let (d, g, q) = (random_vec(&mut r), random_mat(&mut r), random_vec(&mut r));
        let a = g.sym();
        let ad = a.mul_vec(&d);
        let diss = lc.mu1 * d.dot(&ad).powi(2) + lc.mu4 * a.norm_sq() + lc.alpha() * ad.norm_sq() + q.norm_sq() - lc.beta() * q.dot(&ad);
        let t = discrete_leslie_stress_at(&lc, &d, &g, &q);
        let form = t.frob(&g) - q.dot(&g.skw().mul_vec(&d)) + lc.lambda * q.dot(&ad) + q.norm_sq();
        worst_form = worst_form.max((form - diss).abs() / diss.max(1.0));
        min_diss = min_diss.min(diss);
    }
    outcome("leslie_dissipation", worst_form, 1e-12, worst_form < 1e-12 && min_diss >= 0.0, format!("min dissipation {min_diss:.3e}"))
}

fn random_in_ball(r: &mut ChaCha8Rng) -> (Vec3, Mat3) {
    let h = random_vec(r);
    let s = random_mat(r);
    let (rh, rs) = (r.random_range(0.0..0.999), r.random_range(0.0..0.999));
    (h * (rh / h.norm()), s * (rs / s.norm_sq().sqrt()))
}

fn young_transform_fixed_points(_: Option<Fault>) -> CheckOutcome {
    let mut r = rng(16);
    let inv = RecessionInvariant { g: |h: &Vec3, s: &Mat3| 1.0 + h.dot(&s.mul_vec(h)).powi(2) + s.trace() };
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let (ht, st) = random_in_ball(&mut r);
        for f in [Integrand::One, Integrand::HSqSSq, Integrand::PenaltyGrowth] {
            let closed = f.closed_transform(&ht, &st).unwrap();
            let v = young_transform(|h, s| f.eval(h, s), &ht, &st).unwrap();
            worst = worst.max((v - closed).abs() / closed.abs().max(1.0));
        }
        let v = young_transform(|h, s| inv.eval(h, s), &ht, &st).unwrap();
        let c = inv.transform(&ht, &st);
        worst = worst.max((v - c).abs() / c.abs().max(1.0));
    }
    outcome("young_transform", worst, 1e-13, worst < 1e-13, "closed forms on 10⁴ admissible points")
}

fn laminate_pairing(_: Option<Fault>) -> CheckOutcome {
    let grid = TorusGrid::periodic_2pi(16).unwrap();
    let a = Vec3::new(0.3, -0.4, 1.2);
    let mut worst = 0.0f64;
    for periods in [1, 2, 4, 8] {
        let lam = FieldSamples::laminate(&grid, Vec3::unit(2), a, periods);
        for i in 0..3 {
            worst = worst.max(lam.integrate(|h, s| Integrand::SComponent(i, 0).eval(h, s)).abs() / grid.volume());
        }
        let quad = lam.integrate(|h, s| Integrand::SSq.eval(h, s));
        let expect = a.norm_sq() * grid.volume();
        worst = worst.max((quad - expect).abs() / expect);
    }
    outcome("laminate_pairing", worst, 1e-10, worst < 1e-10, "linear pairing → 0, quadratic pairing → |A|²·volume")
}

fn equilibrium(_: Option<Fault>) -> CheckOutcome {
    let grid = TorusGrid::periodic_2pi(8).unwrap();
    let physics = Physics {
        model: sample_frank(),
        leslie: LeslieCoefficients { mu1: 1.0, mu2: -0.2, mu3: 0.7, mu4: 1.0, mu5: 0.8, mu6: 0.45, lambda: 0.5 },
        reg: RegularizationParams::new(0.1, PenaltySchedule::Linear).unwrap(),
    };
    let mut d = SpectralDirector::zeros(&grid);
    d.comps[0][0].re = 0.6;
    d.comps[2][0].re = 0.8;
    let mut st = match SimState::new(grid.clone(), None, physics, Forcing::Zero, SpectralVelocity::zeros(&grid), d.clone()) {
        Ok(s) => s,
        Err(e) => return outcome("equilibrium", f64::INFINITY, 1e-14, false, e.to_string()),
    };
    let cfg = StepperConfig { dt: 1e-2, t_end: 1e-2, scheme: Scheme::Imex1, cfl_safety: None };
    let mut worst = 0.0f64;
    for _ in 0..10 {
        if let Err(e) = step(&mut st, &cfg) {
            return outcome("equilibrium", f64::INFINITY, 1e-14, false, e.to_string());
        }
        let mut diff = st.d.0.clone();
        diff.axpy(-1.0, &d);
        worst = worst.max(diff.max_abs()).max(st.v.max_abs());
    }
    outcome("equilibrium", worst, 1e-14, worst < 1e-14, "constant unit director at rest, 10 steps")
}
