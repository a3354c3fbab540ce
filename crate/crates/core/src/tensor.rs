//! Fixed-size (d = 3) tensor algebra.
//!
//! Index conventions follow the usual continuum-mechanics layout: for a
//! vector field `d`, `grad d` is stored as `S[i][j] = ∂_j d_i` and the second
//! gradient as `Γ[i][j][k] = ∂_j ∂_k d_i`. Higher-order tensors are stored
//! flat in row-major order.
//!
//! Every product here has an independent reference implementation in
//! [`naive`], which enumerates index assignments from an einsum-style
//! specification.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

const R: [usize; 3] = [0, 1, 2];

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Vec3(pub [f64; 3]);

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Mat3(pub [[f64; 3]; 3]);

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Ten3(pub [[[f64; 3]; 3]; 3]);

/// Fourth-order tensor, flat index `((i*3 + j)*3 + k)*3 + l`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ten4(pub [f64; 81]);

/// Fifth-order tensor; only produced by [`Ten6::left_dot_vec`].
#[derive(Clone, Debug, PartialEq)]
pub struct Ten5(pub Box<[f64; 243]>);

/// Sixth-order tensor, flat index over `(i, j, k, l, m, n)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Ten6(pub Box<[f64; 729]>);

#[inline]
fn i4(i: usize, j: usize, k: usize, l: usize) -> usize {
    ((i * 3 + j) * 3 + k) * 3 + l
}

#[inline]
fn i5(i: usize, j: usize, k: usize, l: usize, m: usize) -> usize {
    i4(i, j, k, l) * 3 + m
}

#[inline]
fn i6(i: usize, j: usize, k: usize, l: usize, m: usize, n: usize) -> usize {
    i5(i, j, k, l, m) * 3 + n
}

#[inline]
pub fn kron(i: usize, j: usize) -> f64 {
    if i == j {
        1.0
    } else {
        0.0
    }
}

// ---------------------------------------------------------------- Vec3

impl Vec3 {
    pub const ZERO: Vec3 = Vec3([0.0; 3]);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3([x, y, z])
    }

    pub fn unit(axis: usize) -> Self {
        let mut v = [0.0; 3];
        v[axis] = 1.0;
        Vec3(v)
    }

    #[inline]
    pub fn dot(&self, o: &Vec3) -> f64 {
        self.0[0] * o.0[0] + self.0[1] * o.0[1] + self.0[2] * o.0[2]
    }

    #[inline]
    pub fn cross(&self, o: &Vec3) -> Vec3 {
        let [a1, a2, a3] = self.0;
        let [b1, b2, b3] = o.0;
        Vec3([a2 * b3 - a3 * b2, a3 * b1 - a1 * b3, a1 * b2 - a2 * b1])
    }

    #[inline]
    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// `a ⊗ b = a bᵀ`.
    #[inline]
    pub fn outer(&self, b: &Vec3) -> Mat3 {
        let mut m = [[0.0; 3]; 3];
        for i in R {
            for j in R {
                m[i][j] = self.0[i] * b.0[j];
            }
        }
        Mat3(m)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl Index<usize> for Vec3 {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for Vec3 {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    #[inline]
    fn add(self, o: Vec3) -> Vec3 {
        Vec3([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}

impl AddAssign for Vec3 {
    #[inline]
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    #[inline]
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }
}

impl SubAssign for Vec3 {
    #[inline]
    fn sub_assign(&mut self, o: Vec3) {
        *self = *self - o;
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    #[inline]
    fn neg(self) -> Vec3 {
        Vec3([-self.0[0], -self.0[1], -self.0[2]])
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    #[inline]
    fn mul(self, s: f64) -> Vec3 {
        Vec3([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }
}

impl Mul<Vec3> for f64 {
    type Output = Vec3;
    #[inline]
    fn mul(self, v: Vec3) -> Vec3 {
        v * self
    }
}

// ---------------------------------------------------------------- Mat3

impl Mat3 {
    pub const ZERO: Mat3 = Mat3([[0.0; 3]; 3]);
    pub const IDENTITY: Mat3 = Mat3([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    pub fn from_fn(f: impl Fn(usize, usize) -> f64) -> Self {
        let mut m = [[0.0; 3]; 3];
        for i in R {
            for j in R {
                m[i][j] = f(i, j);
            }
        }
        Mat3(m)
    }

    #[inline]
    pub fn transpose(&self) -> Mat3 {
        let a = &self.0;
        Mat3([
            [a[0][0], a[1][0], a[2][0]],
            [a[0][1], a[1][1], a[2][1]],
            [a[0][2], a[1][2], a[2][2]],
        ])
    }

    #[inline]
    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    /// Frobenius product `A : B`.
    #[inline]
    pub fn frob(&self, b: &Mat3) -> f64 {
        let mut s = 0.0;
        for i in R {
            for j in R {
                s += self.0[i][j] * b.0[i][j];
            }
        }
        s
    }

    #[inline]
    pub fn norm_sq(&self) -> f64 {
        self.frob(self)
    }

    #[inline]
    pub fn sym(&self) -> Mat3 {
        Mat3::from_fn(|i, j| 0.5 * (self.0[i][j] + self.0[j][i]))
    }

    #[inline]
    pub fn skw(&self) -> Mat3 {
        Mat3::from_fn(|i, j| 0.5 * (self.0[i][j] - self.0[j][i]))
    }

    #[inline]
    pub fn mul_vec(&self, a: &Vec3) -> Vec3 {
        let m = &self.0;
        Vec3([
            m[0][0] * a.0[0] + m[0][1] * a.0[1] + m[0][2] * a.0[2],
            m[1][0] * a.0[0] + m[1][1] * a.0[1] + m[1][2] * a.0[2],
            m[2][0] * a.0[0] + m[2][1] * a.0[1] + m[2][2] * a.0[2],
        ])
    }

    /// `Aᵀ a`.
    #[inline]
    pub fn tr_mul_vec(&self, a: &Vec3) -> Vec3 {
        let m = &self.0;
        Vec3([
            m[0][0] * a.0[0] + m[1][0] * a.0[1] + m[2][0] * a.0[2],
            m[0][1] * a.0[0] + m[1][1] * a.0[1] + m[2][1] * a.0[2],
            m[0][2] * a.0[0] + m[1][2] * a.0[1] + m[2][2] * a.0[2],
        ])
    }

    #[inline]
    pub fn matmul(&self, b: &Mat3) -> Mat3 {
        Mat3::from_fn(|i, k| self.0[i][0] * b.0[0][k] + self.0[i][1] * b.0[1][k] + self.0[i][2] * b.0[2][k])
    }

    /// `A ⊗ a`, the third-order tensor `A_ij a_k`.
    pub fn outer_vec(&self, a: &Vec3) -> Ten3 {
        let mut t = [[[0.0; 3]; 3]; 3];
        for i in R {
            for j in R {
                for k in R {
                    t[i][j][k] = self.0[i][j] * a.0[k];
                }
            }
        }
        Ten3(t)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|x| x.is_finite())
    }

    pub fn as_flat(&self) -> [f64; 9] {
        let mut out = [0.0; 9];
        for i in R {
            for j in R {
                out[i * 3 + j] = self.0[i][j];
            }
        }
        out
    }
}

impl Add for Mat3 {
    type Output = Mat3;
    #[inline]
    fn add(self, o: Mat3) -> Mat3 {
        Mat3::from_fn(|i, j| self.0[i][j] + o.0[i][j])
    }
}

impl AddAssign for Mat3 {
    #[inline]
    fn add_assign(&mut self, o: Mat3) {
        *self = *self + o;
    }
}

impl Sub for Mat3 {
    type Output = Mat3;
    #[inline]
    fn sub(self, o: Mat3) -> Mat3 {
        Mat3::from_fn(|i, j| self.0[i][j] - o.0[i][j])
    }
}

impl Neg for Mat3 {
    type Output = Mat3;
    fn neg(self) -> Mat3 {
        self * -1.0
    }
}

impl Mul<f64> for Mat3 {
    type Output = Mat3;
    #[inline]
    fn mul(self, s: f64) -> Mat3 {
        Mat3::from_fn(|i, j| self.0[i][j] * s)
    }
}

impl Mul<Mat3> for f64 {
    type Output = Mat3;
    #[inline]
    fn mul(self, m: Mat3) -> Mat3 {
        m * self
    }
}

impl Mul<Vec3> for Mat3 {
    type Output = Vec3;
    #[inline]
    fn mul(self, a: Vec3) -> Vec3 {
        self.mul_vec(&a)
    }
}

/// Skew matrix with `hat(a) b = a × b`.
#[inline]
pub fn hat(a: &Vec3) -> Mat3 {
    let [a1, a2, a3] = a.0;
    Mat3([[0.0, -a3, a2], [a3, 0.0, -a1], [-a2, a1, 0.0]])
}

/// Left inverse of [`hat`]; reads `(A32, A13, A21)`.
#[inline]
pub fn vee(m: &Mat3) -> Vec3 {
    Vec3([m.0[2][1], m.0[0][2], m.0[1][0]])
}

pub fn sym_skw(m: &Mat3) -> (Mat3, Mat3) {
    (m.sym(), m.skw())
}

// ---------------------------------------------------------------- Ten3

impl Ten3 {
    pub const ZERO: Ten3 = Ten3([[[0.0; 3]; 3]; 3]);

    pub fn from_fn(f: impl Fn(usize, usize, usize) -> f64) -> Self {
        let mut t = [[[0.0; 3]; 3]; 3];
        for i in R {
            for j in R {
                for k in R {
                    t[i][j][k] = f(i, j, k);
                }
            }
        }
        Ten3(t)
    }

    /// `Γ : A = Σ_jk Γ_ijk A_jk`.
    pub fn contract_mat(&self, a: &Mat3) -> Vec3 {
        let mut out = [0.0; 3];
        for i in R {
            let g = &self.0[i];
            out[i] = g[0][0] * a.0[0][0]
                + g[0][1] * a.0[0][1]
                + g[0][2] * a.0[0][2]
                + g[1][0] * a.0[1][0]
                + g[1][1] * a.0[1][1]
                + g[1][2] * a.0[1][2]
                + g[2][0] * a.0[2][0]
                + g[2][1] * a.0[2][1]
                + g[2][2] * a.0[2][2];
        }
        Vec3(out)
    }

    /// `Γ · A = Σ_k Γ_ijk A_kl`.
    pub fn dot_mat(&self, a: &Mat3) -> Ten3 {
        let mut out = [[[0.0; 3]; 3]; 3];
        for i in R {
            for j in R {
                let g = &self.0[i][j];
                out[i][j] = [
                    g[0] * a.0[0][0] + g[1] * a.0[1][0] + g[2] * a.0[2][0],
                    g[0] * a.0[0][1] + g[1] * a.0[1][1] + g[2] * a.0[2][1],
                    g[0] * a.0[0][2] + g[1] * a.0[1][2] + g[2] * a.0[2][2],
                ];
            }
        }
        Ten3(out)
    }

    /// `Γ · a = Σ_k Γ_ijk a_k`.
    pub fn dot_vec(&self, a: &Vec3) -> Mat3 {
        Mat3::from_fn(|i, j| {
            let g = &self.0[i][j];
            g[0] * a.0[0] + g[1] * a.0[1] + g[2] * a.0[2]
        })
    }

    /// `a · Γ = Σ_i a_i Γ_ijk`, contraction over the leading index.
    pub fn left_dot_vec(&self, a: &Vec3) -> Mat3 {
        Mat3::from_fn(|j, k| a.0[0] * self.0[0][j][k] + a.0[1] * self.0[1][j][k] + a.0[2] * self.0[2][j][k])
    }

    /// Scalar product of third-order tensors, `Σ_jkl Υ_jkl Γ_jkl`.
    pub fn triple_dot(&self, o: &Ten3) -> f64 {
        let mut s = 0.0;
        for i in R {
            for j in R {
                for k in R {
                    s += self.0[i][j][k] * o.0[i][j][k];
                }
            }
        }
        s
    }

    pub fn norm_sq(&self) -> f64 {
        self.triple_dot(self)
    }

    /// Trace over the last two indices, `Γ : I`. For `Γ = ∇²d` this is `Δd`.
    pub fn trace_last(&self) -> Vec3 {
        Vec3(std::array::from_fn(|i| self.0[i][0][0] + self.0[i][1][1] + self.0[i][2][2]))
    }

    pub fn as_flat(&self) -> [f64; 27] {
        let mut out = [0.0; 27];
        for i in R {
            for j in R {
                for k in R {
                    out[(i * 3 + j) * 3 + k] = self.0[i][j][k];
                }
            }
        }
        out
    }
}

impl Add for Ten3 {
    type Output = Ten3;
    fn add(self, o: Ten3) -> Ten3 {
        Ten3::from_fn(|i, j, k| self.0[i][j][k] + o.0[i][j][k])
    }
}

impl Mul<f64> for Ten3 {
    type Output = Ten3;
    fn mul(self, s: f64) -> Ten3 {
        Ten3::from_fn(|i, j, k| self.0[i][j][k] * s)
    }
}

/// Levi-Civita symbol `Υ`.
pub fn levi_civita() -> Ten3 {
    Ten3::from_fn(|i, j, k| match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    })
}

// ---------------------------------------------------------------- Ten4

impl Default for Ten4 {
    fn default() -> Self {
        Ten4([0.0; 81])
    }
}

impl Ten4 {
    pub fn zeros() -> Self {
        Self::default()
    }

    pub fn from_fn(f: impl Fn(usize, usize, usize, usize) -> f64) -> Self {
        let mut t = [0.0; 81];
        for i in R {
            for j in R {
                for k in R {
                    for l in R {
                        t[i4(i, j, k, l)] = f(i, j, k, l);
                    }
                }
            }
        }
        Ten4(t)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.0[i4(i, j, k, l)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, l: usize, v: f64) {
        self.0[i4(i, j, k, l)] = v;
    }

    /// `Λ : A = Σ_kl Λ_ijkl A_kl`.
    pub fn contract_mat(&self, a: &Mat3) -> Mat3 {
        let af = a.as_flat();
        let mut out = [[0.0; 3]; 3];
        for (ij, row) in self.0.chunks_exact(9).enumerate() {
            let mut s = 0.0;
            for (x, y) in row.iter().zip(af.iter()) {
                s += x * y;
            }
            out[ij / 3][ij % 3] = s;
        }
        Mat3(out)
    }

    /// `Λ : a = Σ_l Λ_ijkl a_l`.
    pub fn dot_vec(&self, a: &Vec3) -> Ten3 {
        let mut out = [[[0.0; 3]; 3]; 3];
        for (ijk, row) in self.0.chunks_exact(3).enumerate() {
            out[ijk / 9][(ijk / 3) % 3][ijk % 3] = row[0] * a.0[0] + row[1] * a.0[1] + row[2] * a.0[2];
        }
        Ten3(out)
    }

    /// `Λ : Γ = Σ_kl Λ_ijkl Γ_klm`.
    pub fn contract_ten3(&self, g: &Ten3) -> Ten3 {
        let mut out = [[[0.0; 3]; 3]; 3];
        for (ij, row) in self.0.chunks_exact(9).enumerate() {
            let (i, j) = (ij / 3, ij % 3);
            for m in R {
                let mut s = 0.0;
                for (kl, x) in row.iter().enumerate() {
                    s += x * g.0[kl / 3][kl % 3][m];
                }
                out[i][j][m] = s;
            }
        }
        Ten3(out)
    }

    /// `Λ ⋮ Γ = Σ_jkl Λ_ijkl Γ_jkl`.
    pub fn triple_dot_ten3(&self, g: &Ten3) -> Vec3 {
        let gf = g.as_flat();
        let mut out = [0.0; 3];
        for (i, row) in self.0.chunks_exact(27).enumerate() {
            let mut s = 0.0;
            for (x, y) in row.iter().zip(gf.iter()) {
                s += x * y;
            }
            out[i] = s;
        }
        Vec3(out)
    }

    /// `A : Λ : B`.
    pub fn quad_form(&self, a: &Mat3, b: &Mat3) -> f64 {
        a.frob(&self.contract_mat(b))
    }

    /// Largest violation of the major symmetry `Λ_ijkl = Λ_klij`.
    pub fn major_symmetry_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in R {
            for j in R {
                for k in R {
                    for l in R {
                        worst = worst.max((self.get(i, j, k, l) - self.get(k, l, i, j)).abs());
                    }
                }
            }
        }
        worst
    }
}

// ---------------------------------------------------------------- Ten5 / Ten6

impl Ten5 {
    pub fn zeros() -> Self {
        Ten5(Box::new([0.0; 243]))
    }

    pub fn get(&self, i: usize, j: usize, k: usize, l: usize, m: usize) -> f64 {
        self.0[i5(i, j, k, l, m)]
    }
}

impl Ten6 {
    pub fn zeros() -> Self {
        Ten6(Box::new([0.0; 729]))
    }

    pub fn from_fn(f: impl Fn(usize, usize, usize, usize, usize, usize) -> f64) -> Self {
        let mut t = Self::zeros();
        for (idx, slot) in t.0.iter_mut().enumerate() {
            let n = idx % 3;
            let m = (idx / 3) % 3;
            let l = (idx / 9) % 3;
            let k = (idx / 27) % 3;
            let j = (idx / 81) % 3;
            let i = idx / 243;
            *slot = f(i, j, k, l, m, n);
        }
        t
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize, m: usize, n: usize) -> f64 {
        self.0[i6(i, j, k, l, m, n)]
    }

    /// `A : Θ = Σ_ij A_ij Θ_ijklmn`.
    pub fn left_contract_mat(&self, a: &Mat3) -> Ten4 {
        let af = a.as_flat();
        let mut out = [0.0; 81];
        for (ij, block) in self.0.chunks_exact(81).enumerate() {
            let w = af[ij];
            if w == 0.0 {
                continue;
            }
            for (o, x) in out.iter_mut().zip(block.iter()) {
                *o += w * x;
            }
        }
        Ten4(out)
    }

    /// `Θ ⋮ Γ = Σ_lmn Θ_ijklmn Γ_lmn`.
    pub fn triple_dot_ten3(&self, g: &Ten3) -> Ten3 {
        let gf = g.as_flat();
        let mut out = [[[0.0; 3]; 3]; 3];
        for (ijk, row) in self.0.chunks_exact(27).enumerate() {
            let mut s = 0.0;
            for (x, y) in row.iter().zip(gf.iter()) {
                s += x * y;
            }
            out[ijk / 9][(ijk / 3) % 3][ijk % 3] = s;
        }
        Ten3(out)
    }

    /// `a · Θ = Σ_k a_k Θ_ijklmn`, indexed by `(i, j, l, m, n)`.
    pub fn left_dot_vec(&self, a: &Vec3) -> Ten5 {
        let mut out = Ten5::zeros();
        for i in R {
            for j in R {
                for l in R {
                    for m in R {
                        for n in R {
                            out.0[i5(i, j, l, m, n)] = a.0[0] * self.get(i, j, 0, l, m, n)
                                + a.0[1] * self.get(i, j, 1, l, m, n)
                                + a.0[2] * self.get(i, j, 2, l, m, n);
                        }
                    }
                }
            }
        }
        out
    }

    /// `X ⋮ Θ ⋮ Y` for third-order `X`, `Y`.
    pub fn sandwich(&self, x: &Ten3, y: &Ten3) -> f64 {
        x.triple_dot(&self.triple_dot_ten3(y))
    }
}

/// Reference contractions by explicit index enumeration.
///
/// `einsum("ijkl,kl->ij", &[lambda, a])` sums the product of operands over
/// every assignment of the letters not appearing in the output. All axes have
/// extent 3. This is deliberately slow and shares no code with the kernels
/// above.
pub mod naive {
    pub fn einsum(spec: &str, operands: &[&[f64]]) -> Vec<f64> {
        let (lhs, out) = spec.split_once("->").expect("einsum spec needs '->'");
        let inputs: Vec<Vec<char>> = lhs.split(',').map(|s| s.chars().collect()).collect();
        assert_eq!(inputs.len(), operands.len(), "operand count mismatch");
        for (labels, op) in inputs.iter().zip(operands) {
            assert_eq!(op.len(), 3usize.pow(labels.len() as u32), "operand size mismatch for {labels:?}");
        }
        let out: Vec<char> = out.chars().collect();
        let mut letters: Vec<char> = out.clone();
        for labels in &inputs {
            for c in labels {
                if !letters.contains(c) {
                    letters.push(*c);
                }
            }
        }
        let mut result = vec![0.0; 3usize.pow(out.len() as u32)];
        let total = 3usize.pow(letters.len() as u32);
        let mut assign = vec![0usize; letters.len()];
        for code in 0..total {
            let mut c = code;
            for slot in assign.iter_mut().rev() {
                *slot = c % 3;
                c /= 3;
            }
            let value_of = |ch: char| assign[letters.iter().position(|x| *x == ch).unwrap()];
            let mut prod = 1.0;
            for (labels, op) in inputs.iter().zip(operands) {
                let mut idx = 0;
                for ch in labels {
                    idx = idx * 3 + value_of(*ch);
                }
                prod *= op[idx];
            }
            let mut oidx = 0;
            for ch in &out {
                oidx = oidx * 3 + value_of(*ch);
            }
            result[oidx] += prod;
        }
        result
    }
}
