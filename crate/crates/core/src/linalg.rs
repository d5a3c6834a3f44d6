//! Small dense linear algebra over any [`Scalar`].
//!
//! Matrices are row-major. The routines here cover what the protocol and its
//! certificates need: products, Kronecker products, symmetric eigenvalues
//! (cyclic Jacobi), general eigenvalues (Hessenberg reduction followed by
//! Francis double-shift QR), spectral norms and LU solves.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("matrix is singular to working precision")]
    Singular,
    #[error("eigenvalue iteration did not converge")]
    NoConvergence,
}

#[derive(Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: fmt::Debug> fmt::Debug for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                write!(f, "{:>12.6?} ", self.data[r * self.cols + c])?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_diagonal(diag: &[T]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Builds a matrix from row slices. Panics on ragged input.
    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(nrows * ncols);
        for r in rows {
            assert_eq!(r.as_ref().len(), ncols, "ragged rows");
            data.extend_from_slice(r.as_ref());
        }
        Self {
            rows: nrows,
            cols: ncols,
            data,
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.rows.min(self.cols))
            .map(|i| self[(i, i)])
            .collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| v * s).collect(),
        }
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.cols, v.len(), "matrix-vector dimension mismatch");
        (0..self.rows)
            .map(|r| self.row(r).iter().zip(v).map(|(&a, &b)| a * b).sum())
            .collect()
    }

    /// `A ⊗ B`.
    pub fn kron(&self, other: &Self) -> Self {
        let (p, q) = (other.rows, other.cols);
        Self::from_fn(self.rows * p, self.cols * q, |r, c| {
            self[(r / p, c / q)] * other[(r % p, c % q)]
        })
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn row_sums(&self) -> Vec<T> {
        (0..self.rows)
            .map(|r| self.row(r).iter().copied().sum())
            .collect()
    }

    pub fn col_sums(&self) -> Vec<T> {
        (0..self.cols)
            .map(|c| (0..self.rows).map(|r| self[(r, c)]).sum())
            .collect()
    }

    pub fn is_symmetric(&self, tol: T) -> bool {
        self.is_square()
            && (0..self.rows).all(|r| (0..r).all(|c| (self[(r, c)] - self[(c, r)]).abs() <= tol))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Eigenvalues of a symmetric matrix in ascending order (cyclic Jacobi).
    ///
    /// Only the lower triangle's mirror is assumed to match; no symmetry check is made.
    pub fn symmetric_eigenvalues(&self) -> Vec<T> {
        assert!(
            self.is_square(),
            "symmetric_eigenvalues needs a square matrix"
        );
        let n = self.rows;
        let mut a = self.clone();
        let two = T::lit(2.0);
        for _sweep in 0..100 {
            let mut off = T::zero();
            let mut diag = T::zero();
            for r in 0..n {
                for c in 0..n {
                    if r != c {
                        off += a[(r, c)] * a[(r, c)];
                    } else {
                        diag += a[(r, c)] * a[(r, c)];
                    }
                }
            }
            if off <= T::epsilon() * T::epsilon() * (diag + off) || off == T::zero() {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[(p, q)];
                    if apq == T::zero() {
                        continue;
                    }
                    let theta = (a[(q, q)] - a[(p, p)]) / (two * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                    let t = if theta == T::zero() { T::one() } else { t };
                    let c = T::one() / (t * t + T::one()).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = c * akp - s * akq;
                        a[(k, q)] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = c * apk - s * aqk;
                        a[(q, k)] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut ev = a.diagonal();
        ev.sort_by(|x, y| x.partial_cmp(y).expect("finite eigenvalues"));
        ev
    }

    /// Largest singular value.
    pub fn spectral_norm(&self) -> T {
        if self.rows == 0 || self.cols == 0 {
            return T::zero();
        }
        let gram = if self.rows <= self.cols {
            self * &self.transpose()
        } else {
            &self.transpose() * self
        };
        let top = gram
            .symmetric_eigenvalues()
            .last()
            .copied()
            .unwrap_or_else(T::zero);
        top.max(T::zero()).sqrt()
    }

    /// All eigenvalues of a general square matrix as `(re, im)` pairs, unordered.
    pub fn eigenvalues(&self) -> Result<Vec<(T, T)>, LinalgError> {
        if !self.is_square() {
            return Err(LinalgError::Dimension(format!(
                "eigenvalues of a {}x{} matrix",
                self.rows, self.cols
            )));
        }
        let mut h = self.clone();
        h.reduce_to_hessenberg();
        h.hessenberg_qr()
    }

    pub fn spectral_radius(&self) -> Result<T, LinalgError> {
        Ok(self
            .eigenvalues()?
            .into_iter()
            .fold(T::zero(), |m, (re, im)| m.max(re.hypot(im))))
    }

    /// Solves `A x = b` by Gaussian elimination with partial pivoting.
    pub fn solve(&self, b: &[T]) -> Result<Vec<T>, LinalgError> {
        if !self.is_square() || self.rows != b.len() {
            return Err(LinalgError::Dimension(format!(
                "solve with {}x{} matrix and rhs of length {}",
                self.rows,
                self.cols,
                b.len()
            )));
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut x = b.to_vec();
        let scale = a.max_abs();
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| {
                    a[(i, col)]
                        .abs()
                        .partial_cmp(&a[(j, col)].abs())
                        .expect("finite entries")
                })
                .expect("non-empty range");
            if a[(pivot, col)].abs() <= scale * T::epsilon() {
                return Err(LinalgError::Singular);
            }
            if pivot != col {
                for c in 0..n {
                    a.data.swap(pivot * n + c, col * n + c);
                }
                x.swap(pivot, col);
            }
            let inv = T::one() / a[(col, col)];
            for r in (col + 1)..n {
                let factor = a[(r, col)] * inv;
                if factor == T::zero() {
                    continue;
                }
                for c in col..n {
                    let v = a[(col, c)];
                    a[(r, c)] -= factor * v;
                }
                let xc = x[col];
                x[r] -= factor * xc;
            }
        }
        for r in (0..n).rev() {
            let mut acc = x[r];
            for c in (r + 1)..n {
                acc -= a[(r, c)] * x[c];
            }
            x[r] = acc / a[(r, r)];
        }
        Ok(x)
    }

    /// Reduction to upper Hessenberg form by stabilized elementary similarity
    /// transforms. Entries below the subdiagonal are cleared afterwards.
    fn reduce_to_hessenberg(&mut self) {
        let n = self.rows;
        for m in 1..n.saturating_sub(1) {
            let mut x = T::zero();
            let mut piv = m;
            for j in m..n {
                if self[(j, m - 1)].abs() > x.abs() {
                    x = self[(j, m - 1)];
                    piv = j;
                }
            }
            if piv != m {
                for j in (m - 1)..n {
                    self.data.swap(piv * n + j, m * n + j);
                }
                for j in 0..n {
                    self.data.swap(j * n + piv, j * n + m);
                }
            }
            if x != T::zero() {
                for i in (m + 1)..n {
                    let mut y = self[(i, m - 1)];
                    if y != T::zero() {
                        y /= x;
                        self[(i, m - 1)] = y;
                        for j in m..n {
                            let v = self[(m, j)];
                            self[(i, j)] -= y * v;
                        }
                        for j in 0..n {
                            let v = self[(j, i)];
                            self[(j, m)] += y * v;
                        }
                    }
                }
            }
        }
        for r in 2..n {
            for c in 0..(r - 1) {
                self[(r, c)] = T::zero();
            }
        }
    }

    /// Francis double-shift QR on an upper Hessenberg matrix.
    fn hessenberg_qr(mut self) -> Result<Vec<(T, T)>, LinalgError> {
        let n = self.rows;
        let mut wr = vec![T::zero(); n];
        let mut wi = vec![T::zero(); n];
        if n == 0 {
            return Ok(Vec::new());
        }
        // 1-based accessors keep the classical index arithmetic readable.
        macro_rules! a {
            ($i:expr, $j:expr) => {
                self.data[($i - 1) * n + ($j - 1)]
            };
        }
        let mut anorm = T::zero();
        for i in 1..=n {
            for j in i.saturating_sub(1).max(1)..=n {
                anorm += a!(i, j).abs();
            }
        }
        let half = T::lit(0.5);
        let mut nn = n;
        let mut shift = T::zero();
        while nn >= 1 {
            let mut its = 0;
            loop {
                let mut l = nn;
                while l >= 2 {
                    let mut s = a!(l - 1, l - 1).abs() + a!(l, l).abs();
                    if s == T::zero() {
                        s = anorm;
                    }
                    if a!(l, l - 1).abs() + s == s {
                        a!(l, l - 1) = T::zero();
                        break;
                    }
                    l -= 1;
                }
                let mut x = a!(nn, nn);
                if l == nn {
                    wr[nn - 1] = x + shift;
                    wi[nn - 1] = T::zero();
                    nn -= 1;
                    break;
                }
                let mut y = a!(nn - 1, nn - 1);
                let mut w = a!(nn, nn - 1) * a!(nn - 1, nn);
                if l == nn - 1 {
                    let p = half * (y - x);
                    let q = p * p + w;
                    let z = q.abs().sqrt();
                    x += shift;
                    if q >= T::zero() {
                        let z = p + z.copysign(p);
                        wr[nn - 2] = x + z;
                        wr[nn - 1] = x + z;
                        if z != T::zero() {
                            wr[nn - 1] = x - w / z;
                        }
                        wi[nn - 2] = T::zero();
                        wi[nn - 1] = T::zero();
                    } else {
                        wr[nn - 2] = x + p;
                        wr[nn - 1] = x + p;
                        wi[nn - 2] = -z;
                        wi[nn - 1] = z;
                    }
                    nn -= 2;
                    break;
                }
                if its == 60 {
                    return Err(LinalgError::NoConvergence);
                }
                if its == 10 || its == 20 || its == 40 {
                    shift += x;
                    for i in 1..=nn {
                        a!(i, i) -= x;
                    }
                    let s = a!(nn, nn - 1).abs() + a!(nn - 1, nn - 2).abs();
                    x = T::lit(0.75) * s;
                    y = x;
                    w = T::lit(-0.4375) * s * s;
                }
                its += 1;
                let (mut p, mut q, mut r);
                let mut z;
                let mut m = nn - 2;
                loop {
                    z = a!(m, m);
                    r = x - z;
                    let s = y - z;
                    p = (r * s - w) / a!(m + 1, m) + a!(m, m + 1);
                    q = a!(m + 1, m + 1) - z - r - s;
                    r = a!(m + 2, m + 1);
                    let s = p.abs() + q.abs() + r.abs();
                    p /= s;
                    q /= s;
                    r /= s;
                    if m == l {
                        break;
                    }
                    let u = a!(m, m - 1).abs() * (q.abs() + r.abs());
                    let v = p.abs() * (a!(m - 1, m - 1).abs() + z.abs() + a!(m + 1, m + 1).abs());
                    if u + v == v {
                        break;
                    }
                    m -= 1;
                }
                for i in (m + 2)..=nn {
                    a!(i, i - 2) = T::zero();
                    if i != m + 2 {
                        a!(i, i - 3) = T::zero();
                    }
                }
                let mut k = m;
                while k < nn {
                    if k != m {
                        p = a!(k, k - 1);
                        q = a!(k + 1, k - 1);
                        r = T::zero();
                        if k != nn - 1 {
                            r = a!(k + 2, k - 1);
                        }
                        x = p.abs() + q.abs() + r.abs();
                        if x != T::zero() {
                            p /= x;
                            q /= x;
                            r /= x;
                        }
                    }
                    let s = (p * p + q * q + r * r).sqrt().copysign(p);
                    if s != T::zero() {
                        if k == m {
                            if l != m {
                                a!(k, k - 1) = -a!(k, k - 1);
                            }
                        } else {
                            a!(k, k - 1) = -s * x;
                        }
                        p += s;
                        x = p / s;
                        y = q / s;
                        z = r / s;
                        q /= p;
                        r /= p;
                        for j in k..=nn {
                            p = a!(k, j) + q * a!(k + 1, j);
                            if k != nn - 1 {
                                p += r * a!(k + 2, j);
                                a!(k + 2, j) -= p * z;
                            }
                            a!(k + 1, j) -= p * y;
                            a!(k, j) -= p * x;
                        }
                        let mmin = nn.min(k + 3);
                        for i in l..=mmin {
                            p = x * a!(i, k) + y * a!(i, k + 1);
                            if k != nn - 1 {
                                p += z * a!(i, k + 2);
                                a!(i, k + 2) -= p * r;
                            }
                            a!(i, k + 1) -= p * q;
                            a!(i, k) -= p;
                        }
                    }
                    k += 1;
                }
                if l >= nn - 1 {
                    break;
                }
            }
        }
        Ok(wr.into_iter().zip(wi).collect())
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &T {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut T {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

impl<T: Scalar> Mul for &Matrix<T> {
    type Output = Matrix<T>;
    fn mul(self, rhs: &Matrix<T>) -> Matrix<T> {
        assert_eq!(self.cols, rhs.rows, "matrix product dimension mismatch");
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a == T::zero() {
                    continue;
                }
                let src = rhs.row(k);
                let dst = &mut out.data[r * rhs.cols..(r + 1) * rhs.cols];
                for (d, &b) in dst.iter_mut().zip(src) {
                    *d += a * b;
                }
            }
        }
        out
    }
}

impl<T: Scalar> Add for &Matrix<T> {
    type Output = Matrix<T>;
    fn add(self, rhs: &Matrix<T>) -> Matrix<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(&a, &b)| a + b)
                .collect(),
        }
    }
}

impl<T: Scalar> Sub for &Matrix<T> {
    type Output = Matrix<T>;
    fn sub(self, rhs: &Matrix<T>) -> Matrix<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(&a, &b)| a - b)
                .collect(),
        }
    }
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub fn norm2<T: Scalar>(v: &[T]) -> T {
    dot(v, v).sqrt()
}

pub fn max_abs<T: Scalar>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, x| m.max(x.abs()))
}

/// `1_n ⊗ v`: the vector `v` repeated `n` times.
pub fn repeat<T: Scalar>(n: usize, v: &[T]) -> Vec<T> {
    let mut out = Vec::with_capacity(n * v.len());
    for _ in 0..n {
        out.extend_from_slice(v);
    }
    out
}
