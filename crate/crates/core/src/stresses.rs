//! Leslie and Ericksen stresses, coefficient validation and the
//! Ericksen identity.
//!
//! Matrix fields of velocity gradients follow the director convention:
//! `(∇v)_jk = ∂_k v_j`, and `T : ∇w = Σ T_jk ∂_k w_j`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oseen_frank::ElasticModel;
use crate::regularized::{variational_derivative, DirectorFields, RegularizationParams};
use crate::spectral::{SpectralDirector, SpectralVector, TorusGrid};
use crate::tensor::{Mat3, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeslieCoefficients {
    pub mu1: f64,
    pub mu2: f64,
    pub mu3: f64,
    pub mu4: f64,
    pub mu5: f64,
    pub mu6: f64,
    pub lambda: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Condition {
    pub name: &'static str,
    /// Left side minus right side of the strict inequality.
    pub margin: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LeslieReport {
    pub conditions: Vec<Condition>,
    pub parodi: bool,
    pub warnings: Vec<String>,
}

impl LeslieReport {
    pub fn is_valid(&self) -> bool {
        self.conditions.iter().all(|c| c.holds)
    }

    pub fn violations(&self) -> Vec<String> {
        self.conditions
            .iter()
            .filter(|c| !c.holds)
            .map(|c| format!("Leslie condition `{}` violated (margin {:e})", c.name, c.margin))
            .collect()
    }
}

impl LeslieCoefficients {
    /// `(μ5+μ6) − λ(μ2+μ3)`
    pub fn alpha(&self) -> f64 {
        (self.mu5 + self.mu6) - self.lambda * (self.mu2 + self.mu3)
    }

    /// `(μ2+μ3) − λ`, zero under Parodi's relation.
    pub fn beta(&self) -> f64 {
        (self.mu2 + self.mu3) - self.lambda
    }

    pub fn parodi(&self) -> bool {
        let s = self.mu2 + self.mu3;
        (s - self.lambda).abs() <= 1e-14 * s.abs().max(self.lambda.abs())
    }

    pub fn validate(&self) -> LeslieReport {
        let cond = |name, margin: f64| Condition { name, margin, holds: margin > 0.0 };
        let mut warnings = Vec::new();
        let mut conditions = Vec::with_capacity(4);
        if self.mu1 == 0.0 {
            warnings.push("mu1 = 0: the quartic viscous term is switched off".to_string());
            conditions.push(Condition { name: "mu1 > 0", margin: 0.0, holds: true });
        } else {
            conditions.push(cond("mu1 > 0", self.mu1));
        }
        conditions.push(cond("mu4 > 0", self.mu4));
        conditions.push(cond("(mu5+mu6) - lambda(mu2+mu3) > 0", self.alpha()));
        conditions.push(cond("4((mu5+mu6) - lambda(mu2+mu3)) > ((mu2+mu3) - lambda)^2", 4.0 * self.alpha() - self.beta().powi(2)));
        if [self.mu1, self.mu2, self.mu3, self.mu4, self.mu5, self.mu6, self.lambda].iter().any(|x| !x.is_finite()) {
            conditions.push(Condition { name: "finite coefficients", margin: f64::NAN, holds: false });
        }
        LeslieReport { conditions, parodi: self.parodi(), warnings }
    }

    pub fn validated(self) -> Result<Self> {
        let report = self.validate();
        if report.is_valid() {
            Ok(self)
        } else {
            Err(Error::Config(report.violations()))
        }
    }
}

/// `e = ∂t d + (v·∇)d − (∇v)_skw d` on the grid.
pub fn corotational_rate(v: &[Vec3], grad_v: &[Mat3], grad_d: &[Mat3], d: &[Vec3], dd_dt: &[Vec3]) -> Vec<Vec3> {
    (0..d.len()).map(|p| dd_dt[p] + grad_d[p].mul_vec(&v[p]) - grad_v[p].skw().mul_vec(&d[p])).collect()
}

/// Pointwise continuous Leslie stress for a given corotational rate `e`.
pub fn leslie_stress_at(lc: &LeslieCoefficients, d: &Vec3, grad_v: &Mat3, e: &Vec3) -> Mat3 {
    let a = grad_v.sym();
    let ad = a.mul_vec(d);
    let dad = d.dot(&ad);
    let (d_ad_sym, d_ad_skw) = (d.outer(&ad).sym(), d.outer(&ad).skw());
    let (d_e_sym, d_e_skw) = (d.outer(e).sym(), d.outer(e).skw());
    (lc.mu1 * dad) * d.outer(d)
        + lc.mu4 * a
        + (lc.mu5 + lc.mu6) * d_ad_sym
        + (lc.mu2 + lc.mu3) * d_e_sym
        + lc.lambda * d_ad_skw
        + d_e_skw
}

/// Pointwise discrete Leslie stress with `e` replaced by `−λ(∇v)_sym d − q`.
pub fn discrete_leslie_stress_at(lc: &LeslieCoefficients, d: &Vec3, grad_v: &Mat3, q: &Vec3) -> Mat3 {
    let a = grad_v.sym();
    let ad = a.mul_vec(d);
    let dq = d.outer(q);
    (lc.mu1 * d.dot(&ad)) * d.outer(d) + lc.mu4 * a - (lc.mu2 + lc.mu3) * dq.sym() - dq.skw() + lc.alpha() * d.outer(&ad).sym()
}

pub fn leslie_stress(lc: &LeslieCoefficients, d: &[Vec3], grad_v: &[Mat3], e: &[Vec3]) -> Vec<Mat3> {
    d.iter().zip(grad_v).zip(e).map(|((d, g), e)| leslie_stress_at(lc, d, g, e)).collect()
}

pub fn discrete_leslie_stress(lc: &LeslieCoefficients, d: &[Vec3], grad_v: &[Mat3], q: &[Vec3]) -> Vec<Mat3> {
    d.iter().zip(grad_v).zip(q).map(|((d, g), q)| discrete_leslie_stress_at(lc, d, g, q)).collect()
}

/// `T^E = (∇d)ᵀ F_S(d, ∇d)` on the grid.
pub fn ericksen_stress(grid: &TorusGrid, d: &SpectralDirector, model: &ElasticModel) -> Vec<Mat3> {
    let f = DirectorFields::new(grid, d);
    f.d.iter().zip(&f.grad).map(|(h, s)| s.transpose().matmul(&model.f_s(h, s))).collect()
}

/// `T^E + δ(Δd·∇²d) − δ(∇d)ᵀ∇Δd` on the grid.
pub fn regularized_ericksen_stress(grid: &TorusGrid, d: &SpectralDirector, model: &ElasticModel, delta: f64) -> Vec<Mat3> {
    let mut t = ericksen_stress(grid, d, model);
    if delta == 0.0 {
        return t;
    }
    let lap_hat = grid.laplacian(d);
    let lap = grid.vector_to_grid(&lap_hat);
    let grad_lap = grid.gradient_grid(&lap_hat);
    let grad = grid.gradient_grid(d);
    let hess = grid.hessian_grid(d);
    for p in 0..grid.len() {
        let extra = Mat3::from_fn(|j, k| {
            (0..3).map(|i| lap[p].0[i] * hess[p].0[i][j][k] - grad[p].0[i][j] * grad_lap[p].0[i][k]).sum::<f64>()
        });
        t[p] += delta * extra;
    }
    t
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IdentityResidual {
    /// `(T^E_δ ; ∇w)`
    pub stress_pairing: f64,
    /// `((∇d)ᵀ q_δ, w)`
    pub force_pairing: f64,
    /// `|a − b| / (|a| + |b|)`, zero when both vanish.
    pub normalized: f64,
}

/// Residual of `(T^E_δ ; ∇w) = ((∇d)ᵀ q_δ, w)` for divergence-free `w`.
pub fn ericksen_identity_residual(
    grid: &TorusGrid,
    d: &SpectralDirector,
    model: &ElasticModel,
    p: &RegularizationParams,
    w: &SpectralVector,
) -> Result<IdentityResidual> {
    let scale = w.max_abs().max(f64::MIN_POSITIVE);
    let defect = grid.divergence_defect(w);
    if defect > 1e-12 * scale * grid.n() as f64 {
        return Err(Error::NotDivergenceFree { defect });
    }
    let t = regularized_ericksen_stress(grid, d, model, p.delta());
    let grad_w = grid.gradient_grid(w);
    let stress_pairing = grid.cell_volume() * t.iter().zip(&grad_w).map(|(a, b)| a.frob(b)).sum::<f64>();

    let f = DirectorFields::new(grid, d);
    let q = grid.vector_to_grid(&variational_derivative(grid, d, &f, model, p));
    let w_grid = grid.vector_to_grid(w);
    let force_pairing =
        grid.cell_volume() * (0..grid.len()).map(|i| f.grad[i].tr_mul_vec(&q[i]).dot(&w_grid[i])).sum::<f64>();
    let denom = stress_pairing.abs() + force_pairing.abs();
    let normalized = if denom == 0.0 { 0.0 } else { (stress_pairing - force_pairing).abs() / denom };
    Ok(IdentityResidual { stress_pairing, force_pairing, normalized })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oseen_frank::FrankConstants;
    use crate::regularized::PenaltySchedule;
    use crate::tensor::hat;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn parodi_coefficients() -> LeslieCoefficients {
        LeslieCoefficients { mu1: 1.0, mu2: -0.2, mu3: 0.7, mu4: 1.0, mu5: 0.8, mu6: 0.45, lambda: 0.5 }
    }

    fn rand_vec(rng: &mut ChaCha8Rng) -> Vec3 {
        Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    }

    fn rand_mat(rng: &mut ChaCha8Rng) -> Mat3 {
        Mat3([0, 1, 2].map(|_| [0, 1, 2].map(|_| rng.random_range(-1.0..1.0))))
    }

    #[test]
    fn validation_examples() {
        let ok = parodi_coefficients().validate();
        assert!(ok.is_valid() && ok.parodi);
        assert!((parodi_coefficients().alpha() - 1.0).abs() < 1e-15);

        let bad = LeslieCoefficients { mu4: -1.0, ..parodi_coefficients() }.validate();
        assert!(!bad.is_valid());
        assert_eq!(bad.violations().len(), 1);
        assert!(bad.violations()[0].contains("mu4 > 0"));

        let lc = LeslieCoefficients { mu1: 1.0, mu2: 1.0, mu3: 1.0, mu4: 1.0, mu5: 0.5, mu6: 0.5, lambda: 0.0 };
        let r = lc.validate();
        assert!(!r.is_valid() && !r.parodi);
        assert!(r.violations()[0].starts_with("Leslie condition `4("));

        let zero = LeslieCoefficients { mu1: 0.0, ..parodi_coefficients() }.validate();
        assert!(zero.is_valid() && !zero.warnings.is_empty());
    }

    #[test]
    fn corotational_rigid_rotation() {
        // v = ω × x, d(t) = R(t) d0: ∂t d = ω × d, (v·∇)d = 0 for constant d
        let omega = Vec3::new(0.3, -0.2, 0.9);
        let grad_v = hat(&omega);
        let d = Vec3::new(0.6, 0.0, 0.8);
        let e = corotational_rate(&[omega.cross(&Vec3::new(1.0, 2.0, 3.0))], &[grad_v], &[Mat3::ZERO], &[d], &[omega.cross(&d)]);
        assert!(e[0].norm() < 1e-15);

        let psi = Vec3::new(1.0, 2.0, 3.0);
        assert_eq!(corotational_rate(&[Vec3::ZERO], &[Mat3::ZERO], &[Mat3::ZERO], &[d], &[psi])[0], psi);
    }

    #[test]
    fn discrete_form_matches_substitution() {
        let lc = LeslieCoefficients { mu1: 1.3, mu2: -0.4, mu3: 0.9, mu4: 0.7, mu5: 0.3, mu6: 1.1, lambda: 0.2 };
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..200 {
            let (d, g, q) = (rand_vec(&mut rng), rand_mat(&mut rng), rand_vec(&mut rng));
            let e = -lc.lambda * g.sym().mul_vec(&d) - q;
            let diff = leslie_stress_at(&lc, &d, &g, &e) - discrete_leslie_stress_at(&lc, &d, &g, &q);
            assert!(diff.norm_sq().sqrt() < 1e-12);
        }
    }

    #[test]
    fn mu4_only_and_zero_state() {
        let lc = LeslieCoefficients { mu1: 0.0, mu2: 0.0, mu3: 0.0, mu4: 2.0, mu5: 0.0, mu6: 0.0, lambda: 0.0 };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = rand_mat(&mut rng);
        let d = rand_vec(&mut rng);
        assert_eq!(leslie_stress_at(&lc, &d, &g, &Vec3::ZERO), 2.0 * g.sym());
        assert_eq!(leslie_stress_at(&parodi_coefficients(), &d, &Mat3::ZERO, &Vec3::ZERO), Mat3::ZERO);
    }

    #[test]
    fn dissipation_is_nonnegative() {
        let lc = parodi_coefficients();
        let lc2 = LeslieCoefficients { lambda: 0.1, ..lc };
        assert!(lc2.validate().is_valid());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for c in [lc, lc2] {
            for _ in 0..500 {
                let (d, g, q) = (rand_vec(&mut rng), rand_mat(&mut rng), rand_vec(&mut rng));
                let a = g.sym();
                let ad = a.mul_vec(&d);
                let diss = c.mu1 * d.dot(&ad).powi(2) + c.mu4 * a.norm_sq() + c.alpha() * ad.norm_sq() + q.norm_sq()
                    - c.beta() * q.dot(&ad);
                assert!(diss >= -1e-14);
                // T^L : ∇v − (q, Wd) + λ(q, Ad) reproduces it with the transport terms removed
                let t = discrete_leslie_stress_at(&c, &d, &g, &q);
                let form = t.frob(&g) - q.dot(&g.skw().mul_vec(&d)) + c.lambda * q.dot(&ad) + q.norm_sq();
                assert!((form - diss).abs() < 1e-12 * diss.max(1.0));
                // skew parts do not see the symmetric gradient
                assert!(d.outer(&q).skw().frob(&a).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn ericksen_examples() {
        let g = TorusGrid::periodic_2pi(8).unwrap();
        let k = 1.7;
        let model = ElasticModel::OneConstant { k };
        let c = SpectralDirector(g.vector_from_fn(|_| Vec3::new(0.0, 0.0, 1.0)));
        assert!(regularized_ericksen_stress(&g, &c, &model, 0.3).iter().all(|m| m.norm_sq() < 1e-28));

        let d = SpectralDirector(g.vector_from_fn(|x| Vec3::new(x[1].sin(), (x[0] + x[2]).cos(), 0.3 * x[2].sin())));
        let grad = g.gradient_grid(&d);
        let t = ericksen_stress(&g, &d, &model);
        for (s, m) in grad.iter().zip(&t) {
            let expect = k * s.transpose().matmul(s);
            assert!((*m - expect).norm_sq() < 1e-26);
            assert!((*m - m.transpose()).norm_sq() < 1e-26);
            // psd: x·Tx = K|Sx|² ≥ 0
            for x in [Vec3::unit(0), Vec3::new(1.0, -1.0, 0.5)] {
                assert!(x.dot(&m.mul_vec(&x)) >= -1e-13);
            }
        }
        assert_eq!(regularized_ericksen_stress(&g, &d, &model, 0.0), t);
    }

    #[test]
    fn identity_rejects_gradients_and_accepts_constant_director() {
        let g = TorusGrid::periodic_2pi(8).unwrap();
        let model = ElasticModel::OseenFrank(FrankConstants::new(1.0, 0.8, 1.2, Default::default()).unwrap());
        let p = RegularizationParams::new(0.1, PenaltySchedule::Linear).unwrap();
        let d = SpectralDirector(g.vector_from_fn(|_| Vec3::unit(2)));
        let phi = g.scalar_from_fn(|x| x[0].sin() * x[1].cos());
        let grad_phi = g.grad_scalar(&phi);
        assert!(matches!(ericksen_identity_residual(&g, &d, &model, &p, &grad_phi), Err(Error::NotDivergenceFree { .. })));

        let mut w = g.vector_from_fn(|x| Vec3::new(x[1].sin(), x[2].cos(), x[0].sin()));
        g.leray_project(&mut w);
        let r = ericksen_identity_residual(&g, &d, &model, &p, &w).unwrap();
        assert_eq!(r.normalized, 0.0);
    }

}
