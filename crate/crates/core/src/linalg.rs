//! Small dense complex linear algebra.
//!
//! Every matrix in this crate is at most a few antennas per side, so the
//! routines here favour clarity over asymptotics: Jacobi sweeps for the
//! Hermitian eigenproblem and Gaussian elimination for null spaces.
//!
//! Vectors follow the convention `a.dot(b) = a† b`.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use serde::ser::{SerializeSeq, Serializer};
use serde::Serialize;

use crate::error::{Error, Result};

pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Column vector of complex amplitudes.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct CVec(Vec<C64>);

impl CVec {
    /// Checked constructor: at least one entry, all finite.
    pub fn new(entries: Vec<C64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidInput("vector must have dimension >= 1".into()));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput("vector has non-finite entries".into()));
        }
        Ok(Self(entries))
    }

    /// Unchecked constructor for internally produced values.
    pub fn from_entries(entries: Vec<C64>) -> Self {
        Self(entries)
    }

    pub fn from_real(entries: &[f64]) -> Self {
        Self(entries.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![ZERO; n])
    }

    /// Standard basis vector e_i.
    pub fn unit(n: usize, i: usize) -> Self {
        let mut v = Self::zeros(n);
        v.0[i] = ONE;
        v
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, C64> {
        self.0.iter()
    }

    pub fn into_inner(self) -> Vec<C64> {
        self.0
    }

    /// Inner product `self† other`.
    pub fn dot(&self, other: &CVec) -> C64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.0
            .iter()
            .zip(other.0.iter())
            .fold(ZERO, |acc, (a, b)| acc + a.conj() * b)
    }

    /// `|self† other|²`, the received power of `other` through channel `self`.
    pub fn gain(&self, other: &CVec) -> f64 {
        self.dot(other).norm_sqr()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn scale(&self, k: f64) -> CVec {
        Self(self.0.iter().map(|z| z * k).collect())
    }

    pub fn scale_c(&self, k: C64) -> CVec {
        Self(self.0.iter().map(|z| z * k).collect())
    }

    pub fn conj(&self) -> CVec {
        Self(self.0.iter().map(|z| z.conj()).collect())
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Unit-norm copy.
    pub fn normalized(&self) -> Result<CVec> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::DegenerateInput("cannot normalize a zero vector"));
        }
        Ok(self.scale(1.0 / n))
    }

    /// Copy rotated so that its first non-negligible entry is real and positive.
    pub fn phase_normalized(&self) -> CVec {
        let scale = self.0.iter().fold(0.0_f64, |m, z| m.max(z.norm()));
        if scale == 0.0 {
            return self.clone();
        }
        let Some(k) = self.0.iter().position(|z| z.norm() > 1e-14 * scale) else {
            return self.clone();
        };
        let lead = self.0[k];
        let rot = lead.conj() / lead.norm();
        let mut out: Vec<C64> = self.0.iter().map(|z| z * rot).collect();
        out[k] = C64::new(lead.norm(), 0.0);
        Self(out)
    }

    /// Rank-one matrix `self · self†`.
    pub fn outer(&self) -> CMat {
        let n = self.dim();
        CMat::from_fn(n, n, |r, c| self.0[r] * self.0[c].conj())
    }
}

impl From<Vec<C64>> for CVec {
    fn from(v: Vec<C64>) -> Self {
        Self(v)
    }
}

impl std::ops::Index<usize> for CVec {
    type Output = C64;
    fn index(&self, i: usize) -> &C64 {
        &self.0[i]
    }
}

impl Add for &CVec {
    type Output = CVec;
    fn add(self, rhs: &CVec) -> CVec {
        CVec(self.0.iter().zip(rhs.0.iter()).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &CVec {
    type Output = CVec;
    fn sub(self, rhs: &CVec) -> CVec {
        CVec(self.0.iter().zip(rhs.0.iter()).map(|(a, b)| a - b).collect())
    }
}

impl Mul<f64> for &CVec {
    type Output = CVec;
    fn mul(self, k: f64) -> CVec {
        self.scale(k)
    }
}

impl fmt::Display for CVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, z) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{:.6}{:+.6}i", z.re, z.im)?;
        }
        write!(f, "]")
    }
}

impl Serialize for CVec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.0.len()))?;
        for z in &self.0 {
            seq.serialize_element(&[z.re, z.im])?;
        }
        seq.end()
    }
}

/// Row-major complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMat {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 || rows * cols != data.len() {
            return Err(Error::InvalidInput(format!(
                "matrix shape {rows}x{cols} does not match {} entries",
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput("matrix has non-finite entries".into()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |r, c| if r == c { ONE } else { ZERO })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: C64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> CVec {
        CVec(self.data[r * self.cols..(r + 1) * self.cols].to_vec())
    }

    pub fn col(&self, c: usize) -> CVec {
        CVec((0..self.rows).map(|r| self.get(r, c)).collect())
    }

    pub fn mul_vec(&self, v: &CVec) -> CVec {
        debug_assert_eq!(self.cols, v.dim());
        CVec(
            (0..self.rows)
                .map(|r| {
                    self.data[r * self.cols..(r + 1) * self.cols]
                        .iter()
                        .zip(v.iter())
                        .fold(ZERO, |acc, (a, b)| acc + a * b)
                })
                .collect(),
        )
    }

    pub fn mul(&self, other: &CMat) -> CMat {
        debug_assert_eq!(self.cols, other.rows);
        CMat::from_fn(self.rows, other.cols, |r, c| {
            (0..self.cols).fold(ZERO, |acc, k| acc + self.get(r, k) * other.get(k, c))
        })
    }

    pub fn adjoint(&self) -> CMat {
        CMat::from_fn(self.cols, self.rows, |r, c| self.get(c, r).conj())
    }

    /// `self† self`.
    pub fn gram(&self) -> CMat {
        CMat::from_fn(self.cols, self.cols, |r, c| {
            (0..self.rows).fold(ZERO, |acc, k| acc + self.get(k, r).conj() * self.get(k, c))
        })
    }

    pub fn scale(&self, k: f64) -> CMat {
        CMat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z * k).collect() }
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).fold(ZERO, |acc, i| acc + self.get(i, i))
    }

    /// `tr(self · other)` without forming the product.
    pub fn trace_product(&self, other: &CMat) -> C64 {
        debug_assert_eq!(self.cols, other.rows);
        debug_assert_eq!(self.rows, other.cols);
        let mut acc = ZERO;
        for r in 0..self.rows {
            for k in 0..self.cols {
                acc += self.get(r, k) * other.get(k, r);
            }
        }
        acc
    }

    /// Real part of `v† self v`.
    pub fn quad_form(&self, v: &CVec) -> f64 {
        v.dot(&self.mul_vec(v)).re
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// ‖A − A†‖_F relative to ‖A‖_F.
    pub fn hermitian_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut d = 0.0;
        for r in 0..self.rows {
            for c in 0..self.cols {
                d += (self.get(r, c) - self.get(c, r).conj()).norm_sqr();
            }
        }
        let n = self.frobenius_norm();
        if n == 0.0 {
            0.0
        } else {
            d.sqrt() / n
        }
    }
}

impl Add for &CMat {
    type Output = CMat;
    fn add(self, rhs: &CMat) -> CMat {
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(rhs.data.iter()).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &CMat {
    type Output = CMat;
    fn sub(self, rhs: &CMat) -> CMat {
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(rhs.data.iter()).map(|(a, b)| a - b).collect(),
        }
    }
}

/// Hermitian positive semidefinite matrix, validated on construction.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianPsd(CMat);

impl HermitianPsd {
    pub fn new(m: CMat) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::InvalidInput("PSD matrix must be square".into()));
        }
        if m.hermitian_defect() > 1e-12 {
            return Err(Error::InvalidInput("matrix is not Hermitian".into()));
        }
        let eig = hermitian_eig(&m)?;
        let trace = m.trace().re;
        let min = eig.values.last().copied().unwrap_or(0.0);
        if min < -1e-10 * trace.abs().max(f64::MIN_POSITIVE) {
            return Err(Error::InvalidInput(format!("matrix has negative eigenvalue {min:e}")));
        }
        Ok(Self(m))
    }

    pub fn matrix(&self) -> &CMat {
        &self.0
    }
}

/// Orthogonal projection of `x` onto span{basis}.
pub fn project_onto(x: &CVec, basis: &CVec) -> Result<CVec> {
    let nb = basis.norm_sqr();
    if nb == 0.0 {
        return Err(Error::DegenerateInput("projection onto a zero vector"));
    }
    Ok(basis.scale_c(basis.dot(x) / nb))
}

/// Projection of `x` onto the orthogonal complement of span{basis}.
pub fn project_complement(x: &CVec, basis: &CVec) -> Result<CVec> {
    let p = project_onto(x, basis)?;
    Ok(x - &p)
}

/// Some unit vector orthogonal to the nonzero vector `u` (dimension ≥ 2),
/// built from the coordinate axis least aligned with `u`.
pub fn orthogonal_unit(u: &CVec) -> Result<CVec> {
    if u.dim() < 2 {
        return Err(Error::DegenerateInput("no orthogonal direction in one dimension"));
    }
    let k = (0..u.dim())
        .min_by(|&i, &j| u[i].norm().partial_cmp(&u[j].norm()).unwrap_or(std::cmp::Ordering::Equal))
        .unwrap_or(0);
    project_complement(&CVec::unit(u.dim(), k), u)?.normalized()
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues in descending order.
#[derive(Clone, Debug)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: Vec<CVec>,
}

/// Cyclic complex Jacobi. Eigenvectors are unit norm with the leading-entry
/// phase convention; equal eigenvalues keep their coordinate order.
pub fn hermitian_eig(m: &CMat) -> Result<Eigen> {
    if !m.is_square() {
        return Err(Error::InvalidInput("eigenproblem needs a square matrix".into()));
    }
    if m.hermitian_defect() > 1e-10 {
        return Err(Error::InvalidInput("eigenproblem input is not Hermitian".into()));
    }
    let n = m.rows();
    let mut a: Vec<Vec<C64>> = (0..n)
        .map(|r| (0..n).map(|c| (m.get(r, c) + m.get(c, r).conj()) * 0.5).collect())
        .collect();
    let mut v: Vec<Vec<C64>> =
        (0..n).map(|r| (0..n).map(|c| if r == c { ONE } else { ZERO }).collect()).collect();

    let total: f64 = a.iter().flatten().map(|z| z.norm_sqr()).sum();
    let mut converged = false;
    for _sweep in 0..64 {
        let off: f64 = (0..n)
            .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
            .map(|(p, q)| a[p][q].norm_sqr())
            .sum();
        if off <= 1e-32 * total || off == 0.0 {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let g = a[p][q];
                let r = g.norm();
                if r == 0.0 {
                    continue;
                }
                let e = g / r;
                let theta = (a[q][q].re - a[p][p].re) / (2.0 * r);
                let t = if theta == 0.0 {
                    1.0
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // J = diag(1, e*) · [[c, s], [-s, c]]
                let j00 = C64::new(c, 0.0);
                let j01 = C64::new(s, 0.0);
                let j10 = e.conj() * (-s);
                let j11 = e.conj() * c;
                for row in a.iter_mut() {
                    let (x, y) = (row[p], row[q]);
                    row[p] = x * j00 + y * j10;
                    row[q] = x * j01 + y * j11;
                }
                for k in 0..n {
                    let (x, y) = (a[p][k], a[q][k]);
                    a[p][k] = j00.conj() * x + j10.conj() * y;
                    a[q][k] = j01.conj() * x + j11.conj() * y;
                }
                a[p][q] = ZERO;
                a[q][p] = ZERO;
                a[p][p] = C64::new(a[p][p].re, 0.0);
                a[q][q] = C64::new(a[q][q].re, 0.0);
                for row in v.iter_mut() {
                    let (x, y) = (row[p], row[q]);
                    row[p] = x * j00 + y * j10;
                    row[q] = x * j01 + y * j11;
                }
            }
        }
    }
    if !converged {
        return Err(Error::Numerical("Jacobi sweeps did not converge".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j][j].re.partial_cmp(&a[i][i].re).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&i| a[i][i].re).collect();
    let vectors = order
        .iter()
        .map(|&i| CVec((0..n).map(|r| v[r][i]).collect()).phase_normalized())
        .collect();
    Ok(Eigen { values, vectors })
}

/// Largest eigenvalue and its unit eigenvector.
pub fn top_eigvec(m: &CMat) -> Result<(f64, CVec)> {
    let mut e = hermitian_eig(m)?;
    Ok((e.values[0], e.vectors.swap_remove(0)))
}

/// A nonzero solution of the real homogeneous system `rows · x = 0`, or
/// `None` when the system has full column rank.
pub fn real_null_vector(rows: &[Vec<f64>], ncols: usize) -> Option<Vec<f64>> {
    let mut m: Vec<Vec<f64>> = rows.to_vec();
    let scale = m.iter().flatten().fold(0.0_f64, |s, x| s.max(x.abs()));
    let tol = 1e-12 * scale.max(f64::MIN_POSITIVE);
    let mut pivots: Vec<(usize, usize)> = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        if r == m.len() {
            break;
        }
        let (best, val) = (r..m.len())
            .map(|i| (i, m[i][c].abs()))
            .fold((r, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if val <= tol {
            continue;
        }
        m.swap(r, best);
        let p = m[r][c];
        for x in m[r].iter_mut() {
            *x /= p;
        }
        for i in 0..m.len() {
            if i != r {
                let f = m[i][c];
                if f != 0.0 {
                    for k in 0..ncols {
                        m[i][k] -= f * m[r][k];
                    }
                }
            }
        }
        pivots.push((r, c));
        r += 1;
    }
    let free = (0..ncols).find(|c| !pivots.iter().any(|&(_, pc)| pc == *c))?;
    let mut x = vec![0.0; ncols];
    x[free] = 1.0;
    for &(row, pc) in &pivots {
        x[pc] = -m[row][free];
    }
    Some(x)
}

/// Rank-one extraction: returns `z` with `tr(A_i z z†) = tr(A_i X)` for every
/// supplied `A_i` (at most three), by repeatedly stepping along a Hermitian
/// direction that is invisible to all trace functionals until one factor is left.
pub fn rank_one_extract(x: &HermitianPsd, a: &[CMat]) -> Result<CVec> {
    if a.len() > 3 {
        return Err(Error::InvalidInput("rank-one extraction supports at most three functionals".into()));
    }
    let xm = x.matrix();
    let n = xm.rows();
    if a.iter().any(|m| m.rows() != n || m.cols() != n) {
        return Err(Error::InvalidInput("functional dimension mismatch".into()));
    }
    let eig = hermitian_eig(xm)?;
    let lmax = eig.values[0];
    if lmax <= 0.0 {
        return Err(Error::DegenerateInput("rank-one extraction of a zero matrix"));
    }
    let tol = 1e-12 * eig.values.iter().filter(|v| **v > 0.0).sum::<f64>();
    let mut factors: Vec<CVec> = eig
        .values
        .iter()
        .zip(eig.vectors.iter())
        .filter(|(v, _)| **v > tol)
        .map(|(v, u)| u.scale(v.sqrt()))
        .collect();

    let mut steps = 0;
    while factors.len() > 1 {
        steps += 1;
        if steps > n + 2 {
            return Err(Error::Numerical(format!(
                "rank reduction stalled at rank {} after {} steps",
                factors.len(),
                steps
            )));
        }
        let r = factors.len();
        // Parameterize Hermitian Δ (r×r) by r² reals: diagonal, then Re/Im of the upper triangle.
        let mut upper = Vec::new();
        for j in 0..r {
            for k in (j + 1)..r {
                upper.push((j, k));
            }
        }
        let nvar = r + 2 * upper.len();
        let rows: Vec<Vec<f64>> = a
            .iter()
            .map(|am| {
                let ma: Vec<CVec> = factors.iter().map(|f| am.mul_vec(f)).collect();
                let mut row = Vec::with_capacity(nvar);
                for j in 0..r {
                    row.push(factors[j].dot(&ma[j]).re);
                }
                for &(j, k) in &upper {
                    let mjk = factors[j].dot(&ma[k]);
                    row.push(2.0 * mjk.re);
                    row.push(2.0 * mjk.im);
                }
                row
            })
            .collect();
        let dir = real_null_vector(&rows, nvar)
            .ok_or_else(|| Error::Numerical(format!("no trace-invisible direction at rank {r}")))?;
        let mut delta = CMat::zeros(r, r);
        for j in 0..r {
            delta.set(j, j, C64::new(dir[j], 0.0));
        }
        for (idx, &(j, k)) in upper.iter().enumerate() {
            let z = C64::new(dir[r + 2 * idx], dir[r + 2 * idx + 1]);
            delta.set(j, k, z);
            delta.set(k, j, z.conj());
        }
        let de = hermitian_eig(&delta)?;
        let (top, bottom) = (de.values[0], de.values[r - 1]);
        let step = if top >= -bottom { top } else { bottom };
        if step == 0.0 {
            return Err(Error::Numerical("null direction vanished".into()));
        }
        let k = &CMat::identity(r) - &delta.scale(1.0 / step);
        let ke = hermitian_eig(&k)?;
        let kmax = ke.values[0].max(f64::MIN_POSITIVE);
        let mut next = Vec::new();
        for (mu, q) in ke.values.iter().zip(ke.vectors.iter()) {
            if *mu > 1e-12 * kmax {
                let mut acc = CVec::zeros(n);
                for (j, f) in factors.iter().enumerate() {
                    acc = &acc + &f.scale_c(q[j]);
                }
                next.push(acc.scale(mu.sqrt()));
            }
        }
        if next.len() >= r {
            return Err(Error::Numerical(format!("rank did not drop below {r}")));
        }
        factors = next;
    }
    Ok(factors.swap_remove(0).phase_normalized())
}
