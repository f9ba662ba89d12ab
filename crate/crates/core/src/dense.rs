//! Dense complex matrices: products, LU with partial pivoting, eigenvalue
//! solvers and a power iteration for Hermitian positive semidefinite maps.
//!
//! Everything here is plain `O(n³)` code sized for windows of a few thousand
//! unknowns.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use crate::math::{abs, hypot, sqrt};
use crate::{Error, Result, C64};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidArgument(alloc::format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::InvalidArgument(alloc::format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let rhs_row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                for (o, b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, x: &[C64]) -> Result<Vec<C64>> {
        if x.len() != self.cols {
            return Err(Error::InvalidArgument(alloc::format!(
                "vector of length {} for {} columns",
                x.len(),
                self.cols
            )));
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        if (self.rows, self.cols) != (rhs.rows, rhs.cols) {
            return Err(Error::InvalidArgument("shape mismatch in subtraction".into()));
        }
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect();
        Ok(Self { rows: self.rows, cols: self.cols, data })
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest column sum of moduli.
    pub fn norm1(&self) -> f64 {
        let mut sums = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (s, z) in sums.iter_mut().zip(self.row(i)) {
                *s += z.norm();
            }
        }
        sums.into_iter().fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        (0..self.rows).all(|i| (i..self.cols).all(|j| (self[(i, j)] - self[(j, i)].conj()).norm() <= tol))
    }

    pub fn is_real(&self) -> bool {
        self.data.iter().all(|z| z.im == 0.0)
    }

    pub fn lu(&self) -> Result<Lu> {
        Lu::factor(self)
    }

    /// Inverse through LU, rejecting matrices whose 1-norm condition number
    /// exceeds `max_condition`. Returns the inverse and the condition number.
    pub fn inverse(&self, max_condition: f64) -> Result<(Self, f64)> {
        let lu = self.lu()?;
        let inv = lu.inverse();
        let condition = self.norm1() * inv.norm1();
        if !condition.is_finite() || condition > max_condition {
            return Err(Error::Singular { condition });
        }
        Ok((inv, condition))
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

/// `P A = L U` with unit lower `L`, stored packed.
#[derive(Debug, Clone)]
pub struct Lu {
    n: usize,
    packed: Vec<C64>,
    perm: Vec<usize>,
}

impl Lu {
    fn factor(a: &DenseMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::InvalidArgument("LU needs a square matrix".into()));
        }
        let n = a.rows;
        let mut lu = a.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pivot) = (k..n)
                .map(|i| (i, lu[i * n + k].l1_norm()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pivot == 0.0 {
                return Err(Error::Singular { condition: f64::INFINITY });
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let diag = lu[k * n + k];
            let (upper, lower) = lu.split_at_mut((k + 1) * n);
            let pivot_row = &upper[k * n + k + 1..k * n + n];
            for i in 0..n - k - 1 {
                let row = &mut lower[i * n..(i + 1) * n];
                if row[k] == ZERO {
                    continue;
                }
                let f = row[k] / diag;
                row[k] = f;
                for (x, u) in row[k + 1..].iter_mut().zip(pivot_row) {
                    *x -= f * u;
                }
            }
        }
        Ok(Self { n, packed: lu, perm })
    }

    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        let n = self.n;
        let mut x: Vec<C64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for k in 0..i {
                s -= self.packed[i * n + k] * x[k];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= self.packed[i * n + k] * x[k];
            }
            x[i] = s / self.packed[i * n + i];
        }
        x
    }

    /// Full inverse by row-oriented substitution against `P`.
    pub fn inverse(&self) -> DenseMatrix {
        let n = self.n;
        let mut x = DenseMatrix::zeros(n, n);
        for (i, &p) in self.perm.iter().enumerate() {
            x.data[i * n + p] = ONE;
        }
        for i in 0..n {
            let (done, rest) = x.data.split_at_mut(i * n);
            let row = &mut rest[..n];
            for k in 0..i {
                let f = self.packed[i * n + k];
                if f == ZERO {
                    continue;
                }
                for (t, s) in row.iter_mut().zip(&done[k * n..(k + 1) * n]) {
                    *t -= f * s;
                }
            }
        }
        for i in (0..n).rev() {
            let (head, tail) = x.data.split_at_mut((i + 1) * n);
            let row = &mut head[i * n..];
            for k in i + 1..n {
                let f = self.packed[i * n + k];
                if f == ZERO {
                    continue;
                }
                let src = &tail[(k - i - 1) * n..(k - i) * n];
                for (t, s) in row.iter_mut().zip(src) {
                    *t -= f * s;
                }
            }
            let d = self.packed[i * n + i];
            for t in row.iter_mut() {
                *t /= d;
            }
        }
        x
    }
}

/// Eigenvalues of a Hermitian matrix in ascending order.
///
/// Real symmetric input is tridiagonalized directly; complex input goes
/// through the real symmetric embedding `[[Re, -Im], [Im, Re]]`, whose
/// spectrum is the original one with every eigenvalue doubled.
pub fn hermitian_eigenvalues(a: &DenseMatrix) -> Result<Vec<f64>> {
    if !a.is_square() {
        return Err(Error::InvalidArgument("eigenvalues need a square matrix".into()));
    }
    let n = a.rows;
    if a.is_real() {
        let mut sym: Vec<f64> = a.data.iter().map(|z| z.re).collect();
        return symmetric_eigenvalues(&mut sym, n);
    }
    let big = 2 * n;
    let mut sym = vec![0.0; big * big];
    for i in 0..n {
        for j in 0..n {
            let z = a[(i, j)];
            sym[i * big + j] = z.re;
            sym[(i + n) * big + j + n] = z.re;
            sym[i * big + j + n] = -z.im;
            sym[(i + n) * big + j] = z.im;
        }
    }
    let doubled = symmetric_eigenvalues(&mut sym, big)?;
    Ok(doubled.into_iter().step_by(2).collect())
}

fn symmetric_eigenvalues(a: &mut [f64], n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tridiagonalize(a, n, &mut d, &mut e);
    tridiagonal_ql(&mut d, &mut e)?;
    d.sort_by(|x, y| x.partial_cmp(y).unwrap_or(core::cmp::Ordering::Equal));
    Ok(d)
}

// Householder reduction of a real symmetric matrix to tridiagonal form,
// eigenvalues only. On exit d holds the diagonal and e[i] the (i, i-1) entry.
fn tridiagonalize(a: &mut [f64], n: usize, d: &mut [f64], e: &mut [f64]) {
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        if l > 0 {
            let scale: f64 = (0..=l).map(|k| abs(a[i * n + k])).sum();
            if scale == 0.0 {
                e[i] = a[i * n + l];
            } else {
                for k in 0..=l {
                    a[i * n + k] /= scale;
                    h += a[i * n + k] * a[i * n + k];
                }
                let f = a[i * n + l];
                let g = if f >= 0.0 { -sqrt(h) } else { sqrt(h) };
                e[i] = scale * g;
                h -= f * g;
                a[i * n + l] = f - g;
                let mut f = 0.0;
                for j in 0..=l {
                    let mut g = 0.0;
                    for k in 0..=j {
                        g += a[j * n + k] * a[i * n + k];
                    }
                    for k in j + 1..=l {
                        g += a[k * n + j] * a[i * n + k];
                    }
                    e[j] = g / h;
                    f += e[j] * a[i * n + j];
                }
                let hh = f / (h + h);
                for j in 0..=l {
                    let f = a[i * n + j];
                    let g = e[j] - hh * f;
                    e[j] = g;
                    for k in 0..=j {
                        a[j * n + k] -= f * e[k] + g * a[i * n + k];
                    }
                }
            }
        } else {
            e[i] = a[i * n + l];
        }
        d[i] = h;
    }
    e[0] = 0.0;
    for i in 0..n {
        d[i] = a[i * n + i];
    }
}

// Implicit QL with Wilkinson-type shifts on a symmetric tridiagonal matrix.
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = abs(d[m]) + abs(d[m + 1]);
                if abs(e[m]) <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::EigenFailure);
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = hypot(g, 1.0);
            g = d[m] - d[l] + e[l] / (g + if g >= 0.0 { abs(r) } else { -abs(r) });
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = hypot(f, g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Eigenvalues of a general square matrix by Hessenberg reduction and
/// shifted complex QR.
pub fn eigenvalues(a: &DenseMatrix) -> Result<Vec<C64>> {
    if !a.is_square() {
        return Err(Error::InvalidArgument("eigenvalues need a square matrix".into()));
    }
    let n = a.rows;
    let mut h = a.data.clone();
    hessenberg(&mut h, n);
    hessenberg_qr(&mut h, n)
}

fn hessenberg(h: &mut [C64], n: usize) {
    if n < 3 {
        return;
    }
    let mut v = vec![ZERO; n];
    for k in 0..n - 2 {
        let norm_x = sqrt((k + 1..n).map(|i| h[i * n + k].norm_sqr()).sum::<f64>());
        if norm_x == 0.0 {
            continue;
        }
        let x0 = h[(k + 1) * n + k];
        let phase = if x0.norm() == 0.0 { ONE } else { x0 / x0.norm() };
        let alpha = -phase * norm_x;
        for i in k + 1..n {
            v[i] = h[i * n + k];
        }
        v[k + 1] -= alpha;
        let vnorm = sqrt((k + 1..n).map(|i| v[i].norm_sqr()).sum::<f64>());
        if vnorm == 0.0 {
            continue;
        }
        for vi in &mut v[k + 1..n] {
            *vi /= vnorm;
        }
        // H <- (I - 2vv*) H
        for j in k..n {
            let s: C64 = (k + 1..n).map(|i| v[i].conj() * h[i * n + j]).sum();
            for i in k + 1..n {
                h[i * n + j] -= 2.0 * v[i] * s;
            }
        }
        // H <- H (I - 2vv*)
        for i in 0..n {
            let s: C64 = (k + 1..n).map(|j| h[i * n + j] * v[j]).sum();
            for j in k + 1..n {
                h[i * n + j] -= 2.0 * s * v[j].conj();
            }
        }
        for i in k + 2..n {
            h[i * n + k] = ZERO;
        }
    }
}

fn hessenberg_qr(h: &mut [C64], n: usize) -> Result<Vec<C64>> {
    let mut eig = vec![ZERO; n];
    if n == 0 {
        return Ok(eig);
    }
    // a subdiagonal below ε‖H‖ is a backward-stable deflation; the local
    // test alone stalls on defective clusters near zero
    let floor = f64::EPSILON * sqrt(h.iter().map(|z| z.norm_sqr()).sum::<f64>());
    let mut hi = n - 1;
    let mut iter = 0usize;
    let mut total = 0usize;
    let mut rot = vec![(ZERO, ZERO); n];
    loop {
        if hi == 0 {
            eig[0] = h[0];
            break;
        }
        let mut l = hi;
        while l > 0 {
            let sub = h[l * n + l - 1].l1_norm();
            let diag = h[l * n + l].l1_norm() + h[(l - 1) * n + l - 1].l1_norm();
            if sub <= f64::EPSILON * diag || sub <= floor || sub < f64::MIN_POSITIVE {
                h[l * n + l - 1] = ZERO;
                break;
            }
            l -= 1;
        }
        if l == hi {
            eig[hi] = h[hi * n + hi];
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        total += 1;
        if total > 100 * n.max(10) {
            return Err(Error::EigenFailure);
        }
        let shift = if iter % 11 == 10 {
            h[hi * n + hi] + h[hi * n + hi - 1].l1_norm()
        } else {
            let a = h[(hi - 1) * n + hi - 1];
            let b = h[(hi - 1) * n + hi];
            let c = h[hi * n + hi - 1];
            let d = h[hi * n + hi];
            let half = (a - d) * 0.5;
            let disc = (half * half + b * c).sqrt();
            let mid = (a + d) * 0.5;
            let r1 = mid + disc;
            let r2 = mid - disc;
            if (r1 - d).norm() <= (r2 - d).norm() {
                r1
            } else {
                r2
            }
        };
        for k in l..=hi {
            h[k * n + k] -= shift;
        }
        for k in l..hi {
            let a = h[k * n + k];
            let b = h[(k + 1) * n + k];
            let r = hypot(a.norm(), b.norm());
            let (c, s) = if r == 0.0 { (ONE, ZERO) } else { (a / r, b / r) };
            rot[k] = (c, s);
            for j in k..=hi {
                let x = h[k * n + j];
                let y = h[(k + 1) * n + j];
                h[k * n + j] = c.conj() * x + s.conj() * y;
                h[(k + 1) * n + j] = -s * x + c * y;
            }
        }
        for k in l..hi {
            let (c, s) = rot[k];
            let top = (k + 2).min(hi);
            for i in l..=top {
                let x = h[i * n + k];
                let y = h[i * n + k + 1];
                h[i * n + k] = x * c + y * s;
                h[i * n + k + 1] = -x * s.conj() + y * c.conj();
            }
        }
        for k in l..=hi {
            h[k * n + k] += shift;
        }
    }
    Ok(eig)
}

/// Dominant eigenvalue of a Hermitian positive semidefinite map given by
/// `apply(x, y)` (`y = M x`). Stops when the Rayleigh residual
/// `‖Mv − λv‖` drops below `tol · λ`.
pub fn power_iteration(
    n: usize,
    mut apply: impl FnMut(&[C64], &mut [C64]),
    tol: f64,
    iter_max: usize,
) -> Result<f64> {
    if n == 0 {
        return Ok(0.0);
    }
    let mut v: Vec<C64> = (0..n)
        .map(|i| {
            let t = (i as f64 * 0.618_033_988_749_895) % 1.0;
            C64::new(1.0 + 0.5 * t, 0.25 * (1.0 - t))
        })
        .collect();
    normalize(&mut v);
    let mut w = vec![ZERO; n];
    let mut gap = f64::INFINITY;
    for _ in 0..iter_max {
        apply(&v, &mut w);
        let lambda: f64 = v.iter().zip(&w).map(|(a, b)| (a.conj() * b).re).sum();
        let wnorm = norm(&w);
        if wnorm == 0.0 {
            return Ok(0.0);
        }
        gap = sqrt(v.iter().zip(&w).map(|(a, b)| (b - a * lambda).norm_sqr()).sum::<f64>());
        if gap <= tol * abs(lambda) {
            return Ok(lambda.max(0.0));
        }
        for (a, b) in v.iter_mut().zip(&w) {
            *a = b / wnorm;
        }
    }
    Err(Error::NoConvergence { iterations: iter_max, gap })
}

/// Conjugate gradients for a Hermitian positive definite map. Returns the
/// solution and the final relative residual.
pub fn conjugate_gradient(
    mut apply: impl FnMut(&[C64], &mut [C64]),
    b: &[C64],
    tol: f64,
    iter_max: usize,
) -> Result<Vec<C64>> {
    let n = b.len();
    let mut x = vec![ZERO; n];
    let mut r = b.to_vec();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok(x);
    }
    let mut p = r.clone();
    let mut ap = vec![ZERO; n];
    let mut rr: f64 = r.iter().map(|z| z.norm_sqr()).sum();
    for _ in 0..iter_max {
        if sqrt(rr) <= tol * bnorm {
            return Ok(x);
        }
        apply(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| (a.conj() * b).re).sum();
        if !(pap > 0.0) {
            return Err(Error::NoConvergence { iterations: 0, gap: sqrt(rr) / bnorm });
        }
        let alpha = rr / pap;
        for i in 0..n {
            x[i] += p[i] * alpha;
            r[i] -= ap[i] * alpha;
        }
        let rr_new: f64 = r.iter().map(|z| z.norm_sqr()).sum();
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + p[i] * beta;
        }
    }
    if sqrt(rr) <= tol * bnorm {
        Ok(x)
    } else {
        Err(Error::NoConvergence { iterations: iter_max, gap: sqrt(rr) / bnorm })
    }
}

pub(crate) fn norm(v: &[C64]) -> f64 {
    sqrt(v.iter().map(|z| z.norm_sqr()).sum())
}

fn normalize(v: &mut [C64]) {
    let s = norm(v);
    if s > 0.0 {
        for z in v {
            *z /= s;
        }
    }
}
