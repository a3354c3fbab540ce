//! Oseen–Frank elastic energy in the (h, S) form and in the tensor form
//! `2F = S : Λ : S + (S ⊗ h) ⋮ Θ ⋮ (S ⊗ h)`, with closed-form derivatives.
//!
//! `h` stands for the director value and `S` for its gradient
//! (`S_ij = ∂_j d_i`). The splay/twist/bend moduli `K1, K2, K3` are split into
//! five nonnegative coefficients so that, for `|h| = 1`,
//!
//! ```text
//! 2F = k1 tr(S)² + k2 |curl|² + k3 |h|² tr(S)² + k4 (h·curl)² + k5 |h × curl|²
//! ```
//!
//! where `curl = 2 vee(S_skw)` and `|curl|² = 2 |S_skw|²`.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::tensor::{hat, kron, vee, Mat3, Ten3, Ten4, Ten6, Vec3};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitMode {
    /// `k1 = k3 = K1/2`, `k2 = min(K2, K3)/2`, `k4 = K2 − k2`, `k5 = K3 − k2`.
    #[default]
    MinSplit,
    /// `k1 = k2 = k = min(K1, K2, K3)/2`, `k3 = K1 − k`, `k4 = K2 − k`, `k5 = K3 − k`.
    EqualSplit,
}

#[derive(Clone, Debug)]
pub struct FrankTensors {
    pub lambda: Ten4,
    pub theta: Ten6,
}

#[derive(Clone, Debug)]
pub struct FrankConstants {
    moduli: [f64; 3],
    split: Option<SplitMode>,
    k: [f64; 5],
    tensors: OnceLock<FrankTensors>,
}

impl FrankConstants {
    pub fn new(k1: f64, k2: f64, k3: f64, split: SplitMode) -> Result<Self> {
        for (name, v) in [("K1", k1), ("K2", k2), ("K3", k3)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter { name, reason: format!("must be positive and finite, got {v}") });
            }
        }
        let k = match split {
            SplitMode::MinSplit => {
                let c2 = 0.5 * k2.min(k3);
                [0.5 * k1, c2, 0.5 * k1, k2 - c2, k3 - c2]
            }
            SplitMode::EqualSplit => {
                let c = 0.5 * k1.min(k2).min(k3);
                [c, c, k1 - c, k2 - c, k3 - c]
            }
        };
        Ok(FrankConstants { moduli: [k1, k2, k3], split: Some(split), k, tensors: OnceLock::new() })
    }

    /// Constants given directly by their split coefficients `k1..k5`.
    pub fn from_coefficients(k: [f64; 5]) -> Result<Self> {
        if let Some(bad) = k.iter().find(|x| !(**x >= 0.0 && x.is_finite())) {
            return Err(Error::InvalidParameter { name: "k", reason: format!("split coefficients must be nonnegative, got {bad}") });
        }
        Ok(FrankConstants { moduli: [k[0] + k[2], k[1] + k[3], k[1] + k[4]], split: None, k, tensors: OnceLock::new() })
    }

    /// `(K1, K2, K3)`.
    pub fn moduli(&self) -> [f64; 3] {
        self.moduli
    }

    pub fn split_mode(&self) -> Option<SplitMode> {
        self.split
    }

    /// `(k1, .., k5)`.
    pub fn coefficients(&self) -> [f64; 5] {
        self.k
    }

    pub fn tensors(&self) -> &FrankTensors {
        self.tensors.get_or_init(|| FrankTensors { lambda: build_lambda(self), theta: build_theta(self) })
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct DirectorSample {
    pub h: Vec3,
    pub s: Mat3,
    pub gamma: Option<Ten3>,
}

impl DirectorSample {
    pub fn new(h: Vec3, s: Mat3) -> Self {
        DirectorSample { h, s, gamma: None }
    }

    pub fn with_gamma(h: Vec3, s: Mat3, gamma: Ten3) -> Self {
        DirectorSample { h, s, gamma: Some(gamma) }
    }
}

/// The five contributions `½ k_i (term_i)` to `F(h, S)`.
pub fn energy_terms(c: &FrankConstants, h: &Vec3, s: &Mat3) -> [f64; 5] {
    let [k1, k2, k3, k4, k5] = c.k;
    let tr = s.trace();
    let w = s.skw();
    let twist = hat(h).frob(&w);
    [
        0.5 * k1 * tr * tr,
        k2 * w.norm_sq(),
        0.5 * k3 * h.norm_sq() * tr * tr,
        0.5 * k4 * twist * twist,
        2.0 * k5 * w.mul_vec(h).norm_sq(),
    ]
}

pub fn energy_density(c: &FrankConstants, s: &DirectorSample) -> f64 {
    energy_terms(c, &s.h, &s.s).iter().sum()
}

pub fn energy_density_tensor_form(c: &FrankConstants, s: &DirectorSample) -> f64 {
    let t = c.tensors();
    let x = s.s.outer_vec(&s.h);
    0.5 * (t.lambda.quad_form(&s.s, &s.s) + t.theta.sandwich(&x, &x))
}

/// `Λ_ijkl = k1 δ_ij δ_kl + k2 (δ_ik δ_jl − δ_il δ_jk)`.
pub fn build_lambda(c: &FrankConstants) -> Ten4 {
    let [k1, k2, ..] = c.k;
    Ten4::from_fn(|i, j, k, l| k1 * kron(i, j) * kron(k, l) + k2 * (kron(i, k) * kron(j, l) - kron(i, l) * kron(j, k)))
}

pub fn build_theta(c: &FrankConstants) -> Ten6 {
    let [_, _, k3, k4, k5] = c.k;
    let d = kron;
    Ten6::from_fn(|i, j, k, l, m, n| {
        k3 * d(i, j) * d(l, m) * d(k, n)
            + k5 * (d(i, l) * d(m, n) * d(j, k) - d(m, i) * d(l, n) * d(j, k) - d(l, j) * d(m, n) * d(i, k)
                + d(j, m) * d(l, n) * d(i, k))
            + k4 * (d(k, n) * d(j, m) * d(i, l) + d(k, m) * d(j, l) * d(i, n) + d(k, l) * d(j, n) * d(i, m)
                - d(k, n) * d(j, l) * d(i, m)
                - d(k, m) * d(j, n) * d(i, l)
                - d(k, l) * d(j, m) * d(i, n))
    })
}

/// `∂F/∂S`.
pub fn f_s(c: &FrankConstants, s: &DirectorSample) -> Mat3 {
    let [k1, k2, k3, k4, k5] = c.k;
    let (h, sm) = (&s.h, &s.s);
    let tr = sm.trace();
    let w = sm.skw();
    let hh = hat(h);
    let twist = hh.frob(&w);
    Mat3::IDENTITY * ((k1 + k3 * h.norm_sq()) * tr)
        + w * (2.0 * k2)
        + hh * (k4 * twist)
        + w.mul_vec(h).outer(h).skw() * (4.0 * k5)
}

/// `∂F/∂h`.
pub fn f_h(c: &FrankConstants, s: &DirectorSample) -> Vec3 {
    let [_, _, k3, k4, k5] = c.k;
    let (h, sm) = (&s.h, &s.s);
    let tr = sm.trace();
    let w = sm.skw();
    let twist = hat(h).frob(&w);
    *h * (k3 * tr * tr) + vee(&w) * (2.0 * k4 * twist) + w.tr_mul_vec(&w.mul_vec(h)) * (4.0 * k5)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ellipticity {
    pub value: f64,
    pub lower_bound: f64,
}

impl Ellipticity {
    pub fn margin(&self) -> f64 {
        self.value - self.lower_bound
    }
}

/// `a⊗b : Λ : a⊗b` and its bound `min(k1, k2) |a|² |b|²`.
pub fn quad_form_ellipticity(c: &FrankConstants, a: &Vec3, b: &Vec3) -> Ellipticity {
    let ab = a.outer(b);
    let value = c.tensors().lambda.quad_form(&ab, &ab);
    let lower_bound = c.k[0].min(c.k[1]) * a.norm_sq() * b.norm_sq();
    Ellipticity { value, lower_bound }
}

/// Dirichlet energy `K/2 |S|²`.
pub fn one_constant_density(k: f64, s: &Mat3) -> f64 {
    0.5 * k * s.norm_sq()
}

/// Elastic energy used by the field-level code.
#[derive(Clone, Debug)]
pub enum ElasticModel {
    OseenFrank(FrankConstants),
    OneConstant { k: f64 },
}

impl ElasticModel {
    pub fn terms(&self, h: &Vec3, s: &Mat3) -> [f64; 5] {
        match self {
            ElasticModel::OseenFrank(c) => energy_terms(c, h, s),
            ElasticModel::OneConstant { k } => [one_constant_density(*k, s), 0.0, 0.0, 0.0, 0.0],
        }
    }

    pub fn density(&self, h: &Vec3, s: &Mat3) -> f64 {
        self.terms(h, s).iter().sum()
    }

    pub fn f_s(&self, h: &Vec3, s: &Mat3) -> Mat3 {
        match self {
            ElasticModel::OseenFrank(c) => f_s(c, &DirectorSample::new(*h, *s)),
            ElasticModel::OneConstant { k } => *s * *k,
        }
    }

    pub fn f_h(&self, h: &Vec3, s: &Mat3) -> Vec3 {
        match self {
            ElasticModel::OseenFrank(c) => f_h(c, &DirectorSample::new(*h, *s)),
            ElasticModel::OneConstant { .. } => Vec3::ZERO,
        }
    }

    /// Coefficients `(c_curl, c_div)` of the constant-coefficient part of
    /// `−div F_S`, which acts on a Fourier mode as
    /// `c_curl |k|² I + (c_div − c_curl) k ⊗ k`.
    pub fn linear_coefficients(&self) -> (f64, f64) {
        match self {
            ElasticModel::OseenFrank(c) => (c.k[1], c.k[0]),
            ElasticModel::OneConstant { k } => (*k, *k),
        }
    }

    /// `F_S` restricted to its constant-coefficient part.
    pub fn linear_f_s(&self, s: &Mat3) -> Mat3 {
        let (c_curl, c_div) = self.linear_coefficients();
        match self {
            ElasticModel::OseenFrank(_) => Mat3::IDENTITY * (c_div * s.trace()) + s.skw() * (2.0 * c_curl),
            ElasticModel::OneConstant { .. } => *s * c_div,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frank(k: [f64; 5]) -> FrankConstants {
        FrankConstants::from_coefficients(k).unwrap()
    }

    #[test]
    fn min_split_coefficients() {
        let c = FrankConstants::new(1.0, 0.6, 1.4, SplitMode::MinSplit).unwrap();
        for (got, want) in c.coefficients().iter().zip([0.5, 0.3, 0.5, 0.3, 1.1]) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn equal_split_coefficients() {
        let c = FrankConstants::new(1.0, 0.6, 1.4, SplitMode::EqualSplit).unwrap();
        let k = c.coefficients();
        assert_eq!(k[0], k[1]);
        assert!((k[0] - 0.3).abs() < 1e-15);
        assert!((k[2] - 0.7).abs() < 1e-15 && (k[3] - 0.3).abs() < 1e-15 && (k[4] - 1.1).abs() < 1e-15);
    }

    #[test]
    fn rejects_nonpositive_moduli() {
        assert!(FrankConstants::new(0.0, 1.0, 1.0, SplitMode::MinSplit).is_err());
        assert!(FrankConstants::new(1.0, -1.0, 1.0, SplitMode::EqualSplit).is_err());
    }

    #[test]
    fn energy_examples() {
        let c = frank([1.3, 0.7, 0.9, 0.4, 1.1]);
        let e3 = Vec3::unit(2);
        assert_eq!(energy_density(&c, &DirectorSample::new(e3, Mat3::ZERO)), 0.0);
        // tr = 0, |S_skw|² = 2, hat(h):S_skw = 2, S_skw h = 0
        let v = energy_density(&c, &DirectorSample::new(e3, hat(&e3)));
        assert!((v - (2.0 * 0.7 + 2.0 * 0.4)).abs() < 1e-14);
        let v = energy_density(&c, &DirectorSample::new(Vec3::ZERO, Mat3::IDENTITY));
        assert!((v - 0.5 * 1.3 * 9.0).abs() < 1e-14);
    }

    #[test]
    fn lambda_examples() {
        let c = frank([1.0, 0.0, 0.0, 0.0, 0.0]);
        let a = Mat3([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0], [7.0, 8.0, 10.0]]);
        assert_eq!(build_lambda(&c).contract_mat(&a), Mat3::IDENTITY * a.trace());
        assert_eq!(build_lambda(&c).contract_mat(&Mat3::ZERO), Mat3::ZERO);
        let c = frank([1.0, 2.0, 0.0, 0.0, 0.0]);
        assert!(build_theta(&c).0.iter().all(|x| *x == 0.0));
        assert_eq!(build_lambda(&c).major_symmetry_defect(), 0.0);
    }

    #[test]
    fn derivative_reductions() {
        let c = frank([1.3, 0.7, 0.9, 0.4, 1.1]);
        let h = Vec3::new(0.3, -0.2, 0.9);
        assert_eq!(f_h(&c, &DirectorSample::new(h, Mat3::ZERO)), Vec3::ZERO);
        let s = Mat3([[0.1, 0.5, -0.3], [0.2, -0.4, 0.7], [0.6, 0.0, 0.25]]);
        let got = f_s(&c, &DirectorSample::new(Vec3::ZERO, s));
        let want = Mat3::IDENTITY * (1.3 * s.trace()) + s.skw() * (2.0 * 0.7);
        assert!((got - want).norm_sq() < 1e-28);
    }

    #[test]
    fn ellipticity_examples() {
        let c = frank([2.0, 3.0, 0.0, 0.0, 0.0]);
        let (e1, e2) = (Vec3::unit(0), Vec3::unit(1));
        assert!((quad_form_ellipticity(&c, &e1, &e2).value - 3.0).abs() < 1e-15);
        assert!((quad_form_ellipticity(&c, &e1, &e1).value - 2.0).abs() < 1e-15);
        let z = quad_form_ellipticity(&c, &Vec3::ZERO, &e2);
        assert_eq!((z.value, z.lower_bound), (0.0, 0.0));
    }

    #[test]
    fn one_constant_examples() {
        assert_eq!(one_constant_density(3.0, &Mat3::ZERO), 0.0);
        assert_eq!(one_constant_density(2.0, &Mat3::IDENTITY), 3.0);
        assert_eq!(one_constant_density(1.0, &hat(&Vec3::unit(2))), 1.0);
    }

    #[test]
    fn linear_part_matches_full_f_s_at_zero_director() {
        let m = ElasticModel::OseenFrank(frank([1.3, 0.7, 0.9, 0.4, 1.1]));
        let s = Mat3([[0.1, 0.5, -0.3], [0.2, -0.4, 0.7], [0.6, 0.0, 0.25]]);
        let diff = m.f_s(&Vec3::ZERO, &s) - m.linear_f_s(&s);
        assert!(diff.norm_sq() < 1e-28);
    }
}

