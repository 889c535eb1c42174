//! Dense square matrices of dimension 1..=3 with closed-form spectral data.
//!
//! Everything here is sized for the three-dimensional setting: eigenvalues
//! come from explicit quadratic/cubic formulas rather than iterative solvers,
//! so results are deterministic and cheap enough to evaluate millions of
//! times inside orbit scans.

use num_complex::Complex64;
use serde::Serialize;
use std::fmt;

/// Largest supported matrix dimension.
pub const MAX_DIM: usize = 3;

/// Relative tolerance under which two real eigenvalues count as equal.
pub const EIGEN_EQ_REL_TOL: f64 = 1e-9;

/// Relative tolerance on the quadratic/cubic discriminant below which the
/// spectrum is classified as having a repeated root.
pub const DISC_REL_TOL: f64 = 1e-12;

/// Singular values below `RANK_REL_TOL * sigma_max` do not count towards rank.
pub const RANK_REL_TOL: f64 = 1e-9;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum LinalgError {
    #[error("matrix is numerically singular (|det| = {det:.3e} < {tol:.0e})")]
    Singular { det: f64, tol: f64 },
    #[error("dimension {0} outside supported range 1..=3")]
    BadDimension(usize),
}

/// Row-major square matrix, dimension 1..=3.
#[derive(Clone, Copy, PartialEq)]
pub struct SmallMat {
    dim: usize,
    a: [f64; 9],
}

impl fmt::Debug for SmallMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SmallMat{}x{}[", self.dim, self.dim)?;
        for r in 0..self.dim {
            if r > 0 {
                write!(f, "; ")?;
            }
            for c in 0..self.dim {
                if c > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{}", self.get(r, c))?;
            }
        }
        write!(f, "]")
    }
}

impl SmallMat {
    pub fn zeros(dim: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim), "dimension must be 1..=3");
        SmallMat { dim, a: [0.0; 9] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Build from row-major entries; `entries.len()` must equal `dim * dim`.
    pub fn from_rows(dim: usize, entries: &[f64]) -> Self {
        assert_eq!(entries.len(), dim * dim, "need dim*dim entries");
        let mut m = Self::zeros(dim);
        for r in 0..dim {
            for c in 0..dim {
                m.set(r, c, entries[r * dim + c]);
            }
        }
        m
    }

    pub fn diag(entries: &[f64]) -> Self {
        let mut m = Self::zeros(entries.len());
        for (i, &v) in entries.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    /// 2x2 rotation by `theta` (counter-clockwise).
    pub fn rotation2(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self::from_rows(2, &[c, -s, s, c])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.a[r * 3 + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.a[r * 3 + c] = v;
    }

    pub fn row_major(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dim * self.dim);
        for r in 0..self.dim {
            for c in 0..self.dim {
                out.push(self.get(r, c));
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut m = Self::zeros(self.dim);
        for r in 0..self.dim {
            for c in 0..self.dim {
                m.set(c, r, self.get(r, c));
            }
        }
        m
    }

    pub fn mul(&self, rhs: &SmallMat) -> SmallMat {
        debug_assert_eq!(self.dim, rhs.dim);
        let mut m = Self::zeros(self.dim);
        for r in 0..self.dim {
            for c in 0..self.dim {
                let mut acc = 0.0;
                for k in 0..self.dim {
                    acc += self.get(r, k) * rhs.get(k, c);
                }
                m.set(r, c, acc);
            }
        }
        m
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(self.dim, v.len());
        (0..self.dim)
            .map(|r| (0..self.dim).map(|c| self.get(r, c) * v[c]).sum())
            .collect()
    }

    pub fn add(&self, rhs: &SmallMat) -> SmallMat {
        debug_assert_eq!(self.dim, rhs.dim);
        let mut m = *self;
        for r in 0..self.dim {
            for c in 0..self.dim {
                m.set(r, c, self.get(r, c) + rhs.get(r, c));
            }
        }
        m
    }

    pub fn sub(&self, rhs: &SmallMat) -> SmallMat {
        debug_assert_eq!(self.dim, rhs.dim);
        let mut m = *self;
        for r in 0..self.dim {
            for c in 0..self.dim {
                m.set(r, c, self.get(r, c) - rhs.get(r, c));
            }
        }
        m
    }

    pub fn scale(&self, f: f64) -> SmallMat {
        let mut m = *self;
        for r in 0..self.dim {
            for c in 0..self.dim {
                m.set(r, c, self.get(r, c) * f);
            }
        }
        m
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn det(&self) -> f64 {
        match self.dim {
            1 => self.get(0, 0),
            2 => self.get(0, 0) * self.get(1, 1) - self.get(0, 1) * self.get(1, 0),
            3 => {
                self.get(0, 0) * (self.get(1, 1) * self.get(2, 2) - self.get(1, 2) * self.get(2, 1))
                    - self.get(0, 1)
                        * (self.get(1, 0) * self.get(2, 2) - self.get(1, 2) * self.get(2, 0))
                    + self.get(0, 2)
                        * (self.get(1, 0) * self.get(2, 1) - self.get(1, 1) * self.get(2, 0))
            }
            _ => unreachable!(),
        }
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        let mut m = 0.0f64;
        for r in 0..self.dim {
            for c in 0..self.dim {
                m = m.max(self.get(r, c).abs());
            }
        }
        m
    }

    /// Inverse via the adjugate. Errors when |det| < `tol`.
    pub fn inverse_with_tol(&self, tol: f64) -> Result<SmallMat, LinalgError> {
        let d = self.det();
        if d.abs() < tol {
            return Err(LinalgError::Singular { det: d, tol });
        }
        let inv_d = 1.0 / d;
        let mut m = Self::zeros(self.dim);
        match self.dim {
            1 => m.set(0, 0, inv_d),
            2 => {
                m.set(0, 0, self.get(1, 1) * inv_d);
                m.set(0, 1, -self.get(0, 1) * inv_d);
                m.set(1, 0, -self.get(1, 0) * inv_d);
                m.set(1, 1, self.get(0, 0) * inv_d);
            }
            3 => {
                for r in 0..3 {
                    for c in 0..3 {
                        // cofactor of (c, r) for the adjugate transpose
                        let (r1, r2) = ((c + 1) % 3, (c + 2) % 3);
                        let (c1, c2) = ((r + 1) % 3, (r + 2) % 3);
                        let cof = self.get(r1, c1) * self.get(r2, c2)
                            - self.get(r1, c2) * self.get(r2, c1);
                        m.set(r, c, cof * inv_d);
                    }
                }
            }
            _ => unreachable!(),
        }
        Ok(m)
    }

    pub fn inverse(&self) -> Result<SmallMat, LinalgError> {
        self.inverse_with_tol(1e-300)
    }

    /// Singular values in descending order.
    pub fn singular_values(&self) -> Vec<f64> {
        let gram = self.transpose().mul(self);
        let mut eig = sym_eigenvalues(&gram);
        // Guard tiny negatives from rounding.
        for e in eig.iter_mut() {
            *e = e.max(0.0).sqrt();
        }
        eig.sort_by(|x, y| y.total_cmp(x));
        eig
    }

    /// Operator (spectral) norm.
    pub fn op_norm(&self) -> f64 {
        self.singular_values()[0]
    }

    /// Smallest singular value.
    pub fn min_singular_value(&self) -> f64 {
        *self.singular_values().last().unwrap()
    }

    /// Rank with relative tolerance [`RANK_REL_TOL`].
    pub fn rank(&self) -> usize {
        let sv = self.singular_values();
        let top = sv[0];
        if top == 0.0 {
            return 0;
        }
        sv.iter().filter(|&&s| s > RANK_REL_TOL * top).count()
    }

    /// Rank measured against an external scale: singular values at or below
    /// `RANK_REL_TOL * scale` count as zero. Needed when `self` is a shifted
    /// copy of a larger matrix (e.g. `M - lambda I`) whose own norm may be
    /// pure rounding noise.
    pub fn rank_with_scale(&self, scale: f64) -> usize {
        self.singular_values()
            .iter()
            .filter(|&&s| s > RANK_REL_TOL * scale.max(1e-300))
            .count()
    }

    /// Eigenvalues with deterministic ordering (modulus, then real part,
    /// then imaginary part). Closed-form quadratic/cubic roots.
    pub fn eigenvalues(&self) -> Vec<Complex64> {
        let mut eig = match self.dim {
            1 => vec![Complex64::new(self.get(0, 0), 0.0)],
            2 => eig2(self),
            3 => eig3(self),
            _ => unreachable!(),
        };
        eig.sort_by(|x, y| {
            x.norm()
                .total_cmp(&y.norm())
                .then(x.re.total_cmp(&y.re))
                .then(x.im.total_cmp(&y.im))
        });
        eig
    }

    /// Frobenius norm.
    pub fn frobenius(&self) -> f64 {
        let mut s = 0.0;
        for r in 0..self.dim {
            for c in 0..self.dim {
                s += self.get(r, c) * self.get(r, c);
            }
        }
        s.sqrt()
    }
}

/// Quadratic formula with a discriminant tolerance: near-zero discriminants
/// collapse to a double real root so boundary cases classify stably.
fn eig2(m: &SmallMat) -> Vec<Complex64> {
    let tr = m.trace();
    let det = m.det();
    let disc = tr * tr - 4.0 * det;
    let scale = (tr * tr).max((4.0 * det).abs()).max(1e-300);
    if disc.abs() <= DISC_REL_TOL * scale {
        let l = tr / 2.0;
        vec![Complex64::new(l, 0.0), Complex64::new(l, 0.0)]
    } else if disc > 0.0 {
        // Vieta for the small root: avoids cancellation when |det| << tr^2.
        let s = disc.sqrt();
        let big = if tr >= 0.0 { (tr + s) / 2.0 } else { (tr - s) / 2.0 };
        let small = if big != 0.0 { det / big } else { (tr - s) / 2.0 };
        vec![Complex64::new(small, 0.0), Complex64::new(big, 0.0)]
    } else {
        let s = (-disc).sqrt() / 2.0;
        vec![
            Complex64::new(tr / 2.0, -s),
            Complex64::new(tr / 2.0, s),
        ]
    }
}

/// Closed-form roots of the characteristic cubic.
fn eig3(m: &SmallMat) -> Vec<Complex64> {
    // Normalize so the polynomial coefficients stay in range.
    let f = m.max_abs();
    if f == 0.0 {
        return vec![Complex64::new(0.0, 0.0); 3];
    }
    let n = m.scale(1.0 / f);
    // char poly: x^3 - t x^2 + s x - d
    let t = n.trace();
    let d = n.det();
    let s = principal_minor_sum(&n);
    // depressed cubic y^3 + p y + q with x = y + t/3
    let p = s - t * t / 3.0;
    let q = -d + t * s / 3.0 - 2.0 * t * t * t / 27.0;
    let shift = t / 3.0;

    let disc = -4.0 * p * p * p - 27.0 * q * q;
    let scale = (p.abs().powi(3)).max(q * q).max(1e-300);
    let roots: Vec<Complex64> = if disc.abs() <= DISC_REL_TOL * scale * 27.0 {
        // repeated roots
        if p.abs() <= 1e-14 * scale.cbrt().max(1.0) {
            vec![Complex64::new(0.0, 0.0); 3]
        } else {
            let double = -3.0 * q / (2.0 * p);
            let simple = 3.0 * q / p;
            vec![
                Complex64::new(double, 0.0),
                Complex64::new(double, 0.0),
                Complex64::new(simple, 0.0),
            ]
        }
    } else if disc > 0.0 {
        // three distinct real roots: trigonometric method (p < 0 here)
        let r = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (2.0 * p)) * (-3.0 / p).sqrt();
        let phi = arg.clamp(-1.0, 1.0).acos() / 3.0;
        (0..3)
            .map(|k| {
                Complex64::new(
                    r * (phi - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos(),
                    0.0,
                )
            })
            .collect()
    } else {
        // one real root + complex pair: Cardano
        let half_q = q / 2.0;
        let inner = (half_q * half_q + p * p * p / 27.0).sqrt();
        let u = (-half_q + inner).cbrt();
        let v = (-half_q - inner).cbrt();
        let real = u + v;
        let re = -real / 2.0;
        let im = (u - v) * 3f64.sqrt() / 2.0;
        vec![
            Complex64::new(real, 0.0),
            Complex64::new(re, -im.abs()),
            Complex64::new(re, im.abs()),
        ]
    };

    roots
        .into_iter()
        .map(|y| Complex64::new((y.re + shift) * f, y.im * f))
        .collect()
}

fn principal_minor_sum(m: &SmallMat) -> f64 {
    let mut s = 0.0;
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        s += m.get(j, j) * m.get(k, k) - m.get(j, k) * m.get(k, j);
    }
    s
}

/// Eigenvalues of a symmetric matrix (all real), unordered.
pub fn sym_eigenvalues(m: &SmallMat) -> Vec<f64> {
    match m.dim() {
        1 => vec![m.get(0, 0)],
        2 => {
            let tr = m.trace();
            let det = m.det();
            let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
            vec![(tr - disc) / 2.0, (tr + disc) / 2.0]
        }
        3 => {
            // Standard trigonometric solution for symmetric 3x3.
            let p1 = m.get(0, 1).powi(2) + m.get(0, 2).powi(2) + m.get(1, 2).powi(2);
            if p1 == 0.0 {
                return vec![m.get(0, 0), m.get(1, 1), m.get(2, 2)];
            }
            let q = m.trace() / 3.0;
            let p2 = (m.get(0, 0) - q).powi(2)
                + (m.get(1, 1) - q).powi(2)
                + (m.get(2, 2) - q).powi(2)
                + 2.0 * p1;
            let p = (p2 / 6.0).sqrt();
            let mut b = *m;
            for i in 0..3 {
                b.set(i, i, b.get(i, i) - q);
            }
            let b = b.scale(1.0 / p);
            let r = (b.det() / 2.0).clamp(-1.0, 1.0);
            let phi = r.acos() / 3.0;
            let e1 = q + 2.0 * p * phi.cos();
            let e3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
            let e2 = 3.0 * q - e1 - e3;
            vec![e1, e2, e3]
        }
        _ => unreachable!(),
    }
}

/// Orthonormal eigenvector basis of a symmetric matrix, paired with its
/// eigenvalues in ascending order. Columns of the returned matrix are the
/// eigenvectors. Repeated eigenvalues are completed as the orthogonal
/// complement of the simple ones (eigenspaces of a symmetric matrix are
/// orthogonal).
pub fn sym_eigen_basis(m: &SmallMat) -> (Vec<f64>, SmallMat) {
    let dim = m.dim();
    let mut vals = sym_eigenvalues(m);
    vals.sort_by(f64::total_cmp);
    let scale = vals.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300);
    let cluster_tol = 1e-8 * scale;
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); dim];
    // Mark clusters of (numerically) equal eigenvalues.
    let mut cluster_id = vec![0usize; dim];
    for i in 1..dim {
        cluster_id[i] = if (vals[i] - vals[i - 1]).abs() <= cluster_tol {
            cluster_id[i - 1]
        } else {
            cluster_id[i - 1] + 1
        };
    }
    let n_clusters = cluster_id[dim - 1] + 1;
    if n_clusters == 1 {
        return (vals, SmallMat::identity(dim));
    }
    // Simple eigenvalues first.
    for i in 0..dim {
        let simple = cluster_id.iter().filter(|&&c| c == cluster_id[i]).count() == 1;
        if simple {
            let shifted = m.sub(&SmallMat::identity(dim).scale(vals[i]));
            cols[i] = kernel_vector(&shifted, scale);
        }
    }
    // Fill repeated clusters from orthogonal complements.
    let simple_vecs: Vec<Vec<f64>> = cols.iter().filter(|v| !v.is_empty()).cloned().collect();
    let complement = orthonormal_complement(dim, &simple_vecs);
    let mut comp_iter = complement.into_iter();
    for col in cols.iter_mut() {
        if col.is_empty() {
            *col = comp_iter.next().expect("complement exhausted");
        }
    }
    let mut basis = SmallMat::zeros(dim);
    for (c, col) in cols.iter().enumerate() {
        for (r, &x) in col.iter().enumerate() {
            basis.set(r, c, x);
        }
    }
    (vals, basis)
}

/// Orthonormal basis of the orthogonal complement of the span of `vs`
/// (assumed orthonormal) in R^dim.
fn orthonormal_complement(dim: usize, vs: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = vs.to_vec();
    let mut out = vec![];
    for axis in 0..dim {
        if basis.len() == dim {
            break;
        }
        let mut v = vec![0.0; dim];
        v[axis] = 1.0;
        for b in &basis {
            let d = dot(&v, b);
            for (x, y) in v.iter_mut().zip(b.iter()) {
                *x -= d * y;
            }
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-6 {
            for x in v.iter_mut() {
                *x /= n;
            }
            basis.push(v.clone());
            out.push(v);
        }
    }
    out
}

/// Best-effort unit kernel vector of a (near-)singular matrix.
fn kernel_vector(m: &SmallMat, scale: f64) -> Vec<f64> {
    let dim = m.dim();
    match dim {
        1 => vec![1.0],
        2 => {
            // Choose the larger row to read a null direction from.
            let r0 = (m.get(0, 0).abs() + m.get(0, 1).abs(), 0usize);
            let r1 = (m.get(1, 0).abs() + m.get(1, 1).abs(), 1usize);
            let r = if r0.0 >= r1.0 { 0 } else { 1 };
            let (a, b) = (m.get(r, 0), m.get(r, 1));
            let mut v = if a.abs().max(b.abs()) <= 1e-14 * scale.max(1.0) {
                vec![1.0, 0.0]
            } else {
                vec![-b, a]
            };
            normalize(&mut v);
            v
        }
        3 => {
            // Cross products of row pairs; take the largest.
            let rows: Vec<[f64; 3]> = (0..3)
                .map(|r| [m.get(r, 0), m.get(r, 1), m.get(r, 2)])
                .collect();
            let mut best: Option<(f64, [f64; 3])> = None;
            for i in 0..3 {
                for j in (i + 1)..3 {
                    let c = cross(&rows[i], &rows[j]);
                    let n = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
                    if best.as_ref().map_or(true, |(bn, _)| n > *bn) {
                        best = Some((n, c));
                    }
                }
            }
            let (n, c) = best.unwrap();
            if n > 1e-13 * scale.max(1.0) {
                let mut v = c.to_vec();
                normalize(&mut v);
                return v;
            }
            // Rank <= 1: kernel is a plane; any vector orthogonal to the
            // largest row works.
            let r = (0..3)
                .max_by(|&i, &j| {
                    row_norm(&rows[i]).total_cmp(&row_norm(&rows[j]))
                })
                .unwrap();
            if row_norm(&rows[r]) <= 1e-13 * scale.max(1.0) {
                return vec![1.0, 0.0, 0.0];
            }
            let mut v = orthogonal_to(&rows[r]);
            normalize(&mut v);
            v
        }
        _ => unreachable!(),
    }
}

fn row_norm(r: &[f64; 3]) -> f64 {
    (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt()
}

fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn orthogonal_to(r: &[f64; 3]) -> Vec<f64> {
    let pick = if r[0].abs() <= r[1].abs() && r[0].abs() <= r[2].abs() {
        [1.0, 0.0, 0.0]
    } else if r[1].abs() <= r[2].abs() {
        [0.0, 1.0, 0.0]
    } else {
        [0.0, 0.0, 1.0]
    };
    cross(r, &pick).to_vec()
}

pub fn normalize(v: &mut [f64]) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        for x in v.iter_mut() {
            *x /= n;
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Orthonormal basis (columns) of the `k`-dimensional kernel of `m`,
/// computed from the Gram matrix spectrum.
pub fn kernel_basis(m: &SmallMat, k: usize) -> Vec<Vec<f64>> {
    let gram = m.transpose().mul(m);
    let (_, basis) = sym_eigen_basis(&gram);
    // ascending eigenvalues: first k columns span the numerical kernel
    (0..k)
        .map(|c| (0..m.dim()).map(|r| basis.get(r, c)).collect())
        .collect()
}

/// Matrix product with explicit log-scale bookkeeping so very long orbit
/// products never overflow. The represented value is `exp(log_scale) * m`.
#[derive(Clone, Copy, Debug)]
pub struct ScaledMat {
    pub m: SmallMat,
    pub log_scale: f64,
}

impl ScaledMat {
    pub fn identity(dim: usize) -> Self {
        ScaledMat {
            m: SmallMat::identity(dim),
            log_scale: 0.0,
        }
    }

    pub fn from_mat(m: SmallMat) -> Self {
        let mut s = ScaledMat { m, log_scale: 0.0 };
        s.renormalize();
        s
    }

    /// Left-multiply by `f`: self <- f * self.
    pub fn apply(&mut self, f: &SmallMat) {
        self.m = f.mul(&self.m);
        self.renormalize();
    }

    fn renormalize(&mut self) {
        let scale = self.m.max_abs();
        if scale > 0.0 && (scale > 1e30 || scale < 1e-30) {
            self.m = self.m.scale(1.0 / scale);
            self.log_scale += scale.ln();
        }
    }

    /// log |det| of the represented matrix.
    pub fn log_abs_det(&self) -> f64 {
        self.m.det().abs().ln() + self.dim() as f64 * self.log_scale
    }

    pub fn dim(&self) -> usize {
        self.m.dim()
    }

    /// Plain matrix; may overflow for long expanding products.
    pub fn to_mat(&self) -> SmallMat {
        self.m.scale(self.log_scale.exp())
    }
}

/// Signature-friendly complex value for serialized reports.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ComplexEntry {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for ComplexEntry {
    fn from(z: Complex64) -> Self {
        ComplexEntry { re: z.re, im: z.im }
    }
}
