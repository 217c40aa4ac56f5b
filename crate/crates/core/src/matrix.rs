//! Dense complex matrices, row-major.
//!
//! Sizes in this crate are small (a full compile touches matrices no larger
//! than the contraction guard, 2¹⁴), so storage is a flat `Vec` and products
//! are textbook O(n³). The JSON form is `{"dim": n, "re": [...], "im": [...]}`
//! for square matrices, row-major; readers reject non-finite entries.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scalar::{czero, C, Real};

/// Dense complex matrix with row-major storage.
#[derive(Clone, PartialEq)]
pub struct Mat<T: Real> {
    rows: usize,
    cols: usize,
    data: Vec<C<T>>,
}

impl<T: Real> Mat<T> {
    /// Zero matrix of the given shape.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![czero(); rows * cols] }
    }

    /// Identity of size `n`.
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C::new(T::one(), T::zero());
        }
        m
    }

    /// Build from a function of (row, col).
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    /// Square matrix with the given diagonal.
    pub fn from_diag(diag: &[C<T>]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &v) in diag.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Build from nested row slices (test convenience).
    pub fn from_rows(rows: &[Vec<C<T>>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Mat { rows: r, cols: c, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Side length of a square matrix.
    pub fn dim(&self) -> usize {
        debug_assert_eq!(self.rows, self.cols);
        self.rows
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[C<T>] {
        &self.data
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Self {
        Mat::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Mat::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        Mat::from_fn(self.rows, self.cols, |i, j| self[(i, j)].conj())
    }

    pub fn trace(&self) -> C<T> {
        let n = self.rows.min(self.cols);
        let mut t = czero();
        for i in 0..n {
            t += self[(i, i)];
        }
        t
    }

    /// Frobenius norm.
    pub fn fro_norm(&self) -> T {
        self.data
            .iter()
            .map(|z| z.norm_sqr())
            .fold(T::zero(), |a, b| a + b)
            .sqrt()
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> T {
        self.data
            .iter()
            .map(|z| z.norm())
            .fold(T::zero(), |a, b| if b > a { b } else { a })
    }

    /// Largest entrywise |self − other|.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(T::zero(), |a, b| if b > a { b } else { a })
    }

    /// Multiply every entry by a complex scalar.
    pub fn scale(&self, z: C<T>) -> Self {
        let mut out = self.clone();
        for v in &mut out.data {
            *v = *v * z;
        }
        out
    }

    /// `self * rhs` on a column vector.
    pub fn mul_vec(&self, v: &[C<T>]) -> Vec<C<T>> {
        assert_eq!(self.cols, v.len());
        let mut out = vec![czero(); self.rows];
        for i in 0..self.rows {
            let mut acc = czero();
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            for (a, b) in row.iter().zip(v) {
                acc += a * b;
            }
            out[i] = acc;
        }
        out
    }

    /// Integer matrix power by repeated squaring.
    pub fn powi(&self, mut k: u64) -> Self {
        assert!(self.is_square());
        let mut base = self.clone();
        let mut acc = Mat::identity(self.rows);
        while k > 0 {
            if k & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            k >>= 1;
        }
        acc
    }

    /// Kronecker product.
    pub fn kron(&self, other: &Self) -> Self {
        let (r1, c1, r2, c2) = (self.rows, self.cols, other.rows, other.cols);
        Mat::from_fn(r1 * r2, c1 * c2, |i, j| {
            self[(i / r2, j / c2)] * other[(i % r2, j % c2)]
        })
    }

    /// Block-diagonal direct sum.
    pub fn direct_sum(&self, other: &Self) -> Self {
        let mut out = Self::zeros(self.rows + other.rows, self.cols + other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(i, j)] = self[(i, j)];
            }
        }
        for i in 0..other.rows {
            for j in 0..other.cols {
                out[(self.rows + i, self.cols + j)] = other[(i, j)];
            }
        }
        out
    }

    /// Copy of the rectangular block at (`row0`, `col0`) of the given shape.
    pub fn block(&self, row0: usize, col0: usize, rows: usize, cols: usize) -> Self {
        assert!(row0 + rows <= self.rows && col0 + cols <= self.cols);
        Mat::from_fn(rows, cols, |i, j| self[(row0 + i, col0 + j)])
    }

    /// Write `block` into `self` at (`row0`, `col0`).
    pub fn set_block(&mut self, row0: usize, col0: usize, block: &Self) {
        assert!(row0 + block.rows <= self.rows && col0 + block.cols <= self.cols);
        for i in 0..block.rows {
            for j in 0..block.cols {
                self[(row0 + i, col0 + j)] = block[(i, j)];
            }
        }
    }

    /// Max deviation of `U†U` from the identity; 0 for a perfect unitary.
    pub fn unitarity_deviation(&self) -> T {
        if !self.is_square() {
            return T::infinity();
        }
        let gram = &self.dagger() * self;
        gram.max_abs_diff(&Mat::identity(self.rows))
    }

    /// Error unless `self` is unitary within `tol`.
    pub fn require_unitary(&self, tol: T) -> Result<()> {
        let dev = self.unitarity_deviation();
        if dev <= tol {
            Ok(())
        } else {
            Err(Error::NotUnitary { deviation: dev.to_f64().unwrap_or(f64::NAN) })
        }
    }

    /// Column `j` as a vector.
    pub fn col(&self, j: usize) -> Vec<C<T>> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_col(&mut self, j: usize, v: &[C<T>]) {
        assert_eq!(v.len(), self.rows);
        for i in 0..self.rows {
            self[(i, j)] = v[i];
        }
    }

    /// True if every entry is finite.
    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Lossy conversion to another scalar (used by the f32 aliases and tests).
    pub fn cast<U: Real>(&self) -> Mat<U> {
        Mat::from_fn(self.rows, self.cols, |i, j| {
            let z = self[(i, j)];
            C::new(
                U::from_f64(z.re.to_f64().unwrap()).unwrap(),
                U::from_f64(z.im.to_f64().unwrap()).unwrap(),
            )
        })
    }
}

impl<T: Real> Index<(usize, usize)> for Mat<T> {
    type Output = C<T>;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C<T> {
        &self.data[i * self.cols + j]
    }
}

impl<T: Real> IndexMut<(usize, usize)> for Mat<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C<T> {
        &mut self.data[i * self.cols + j]
    }
}

impl<T: Real> Mul for &Mat<T> {
    type Output = Mat<T>;
    fn mul(self, rhs: &Mat<T>) -> Mat<T> {
        assert_eq!(self.cols, rhs.rows, "shape mismatch in matrix product");
        let mut out = Mat::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.re == T::zero() && a.im == T::zero() {
                    continue;
                }
                let lhs_row = i * out.cols;
                let rhs_row = k * rhs.cols;
                for j in 0..rhs.cols {
                    out.data[lhs_row + j] += a * rhs.data[rhs_row + j];
                }
            }
        }
        out
    }
}

impl<T: Real> Add for &Mat<T> {
    type Output = Mat<T>;
    fn add(self, rhs: &Mat<T>) -> Mat<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&rhs.data) {
            *a += *b;
        }
        out
    }
}

impl<T: Real> Sub for &Mat<T> {
    type Output = Mat<T>;
    fn sub(self, rhs: &Mat<T>) -> Mat<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&rhs.data) {
            *a -= *b;
        }
        out
    }
}

impl<T: Real> Neg for &Mat<T> {
    type Output = Mat<T>;
    fn neg(self) -> Mat<T> {
        self.scale(C::new(-T::one(), T::zero()))
    }
}

impl<T: Real> fmt::Debug for Mat<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Mat {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.4}{:+.4}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl<T: Real> Serialize for Mat<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::Error as _;
        if !self.is_square() {
            return Err(S::Error::custom("only square matrices serialize"));
        }
        #[derive(Serialize)]
        struct Wire {
            dim: usize,
            re: Vec<f64>,
            im: Vec<f64>,
        }
        let wire = Wire {
            dim: self.rows,
            re: self.data.iter().map(|z| z.re.to_f64().unwrap()).collect(),
            im: self.data.iter().map(|z| z.im.to_f64().unwrap()).collect(),
        };
        wire.serialize(serializer)
    }
}

impl<'de, T: Real> Deserialize<'de> for Mat<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Wire {
            dim: usize,
            re: Vec<f64>,
            im: Vec<f64>,
        }
        let wire = Wire::deserialize(deserializer)?;
        let n = wire.dim;
        if wire.re.len() != n * n || wire.im.len() != n * n {
            return Err(D::Error::custom(format!(
                "matrix dim {} needs {} entries, got re: {}, im: {}",
                n,
                n * n,
                wire.re.len(),
                wire.im.len()
            )));
        }
        if wire.re.iter().chain(&wire.im).any(|x| !x.is_finite()) {
            return Err(D::Error::custom("matrix entries must be finite"));
        }
        let data = wire
            .re
            .iter()
            .zip(&wire.im)
            .map(|(&re, &im)| C::new(T::lit(re), T::lit(im)))
            .collect();
        Ok(Mat { rows: n, cols: n, data })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cis;

    type M = Mat<f64>;

    #[test]
    fn product_against_hand_computation() {
        let a = M::from_rows(&[
            vec![C::new(1.0, 0.0), C::new(2.0, 0.0)],
            vec![C::new(0.0, 1.0), C::new(0.0, 0.0)],
        ]);
        let b = M::from_rows(&[
            vec![C::new(0.0, 0.0), C::new(1.0, 0.0)],
            vec![C::new(1.0, 0.0), C::new(0.0, -1.0)],
        ]);
        let p = &a * &b;
        assert_eq!(p[(0, 0)], C::new(2.0, 0.0));
        assert_eq!(p[(0, 1)], C::new(1.0, -2.0));
        assert_eq!(p[(1, 0)], C::new(0.0, 0.0));
        assert_eq!(p[(1, 1)], C::new(0.0, 1.0));
    }

    #[test]
    fn kron_shape_and_entries() {
        let i2 = M::identity(2);
        let x = M::from_rows(&[
            vec![C::new(0.0, 0.0), C::new(1.0, 0.0)],
            vec![C::new(1.0, 0.0), C::new(0.0, 0.0)],
        ]);
        let k = i2.kron(&x);
        assert_eq!(k.dim(), 4);
        assert_eq!(k[(0, 1)], C::new(1.0, 0.0));
        assert_eq!(k[(2, 3)], C::new(1.0, 0.0));
        assert_eq!(k[(0, 2)], C::new(0.0, 0.0));
    }

    #[test]
    fn unitarity_detects_scaling() {
        let mut m = M::identity(3);
        assert!(m.unitarity_deviation() < 1e-15);
        m[(0, 0)] = C::new(1.1, 0.0);
        assert!(m.unitarity_deviation() > 0.1);
    }

    #[test]
    fn json_round_trip_and_nan_rejection() {
        let m = M::from_fn(3, 3, |i, j| cis(0.1 * (i * 3 + j) as f64));
        let text = serde_json::to_string(&m).unwrap();
        let back: M = serde_json::from_str(&text).unwrap();
        assert!(m.max_abs_diff(&back) < 1e-15);

        let bad = r#"{"dim":1,"re":[null],"im":[0.0]}"#;
        assert!(serde_json::from_str::<M>(bad).is_err());
        let nan = r#"{"dim":1,"re":[1e999],"im":[0.0]}"#;
        assert!(serde_json::from_str::<M>(nan).is_err());
        let short = r#"{"dim":2,"re":[1.0],"im":[0.0]}"#;
        assert!(serde_json::from_str::<M>(short).is_err());
    }

    #[test]
    fn powi_matches_repeated_product() {
        let m = M::from_rows(&[
            vec![C::new(0.0, 0.0), C::new(1.0, 0.0)],
            vec![C::new(1.0, 0.0), C::new(0.0, 0.0)],
        ]);
        assert!(m.powi(0).max_abs_diff(&M::identity(2)) < 1e-15);
        assert!(m.powi(3).max_abs_diff(&m) < 1e-15);
        assert!(m.powi(4).max_abs_diff(&M::identity(2)) < 1e-15);
    }
}
