//! Dense matrices over the extended reals with the max-plus product
//! and its two residuals.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::ext::ExtReal;

/// Row-major dense matrix of extended reals.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<ExtReal>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<ExtReal>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Invalid(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn filled(rows: usize, cols: usize, value: ExtReal) -> Self {
        Matrix { rows, cols, data: vec![value; rows * cols] }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> ExtReal) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn from_rows(rows: Vec<Vec<ExtReal>>) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n * m);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != m {
                return Err(Error::Invalid(format!("row {i} has {} entries, expected {m}", row.len())));
            }
            data.extend(row);
        }
        Ok(Matrix { rows: n, cols: m, data })
    }

    /// Builds from float rows; `f64::INFINITY` and `f64::NEG_INFINITY` map to the infinities.
    pub fn from_f64_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let rows = rows
            .iter()
            .map(|r| r.iter().map(|&v| ExtReal::new(v)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Self::from_rows(rows)
    }

    /// The max-plus identity: `0` on the diagonal, `-inf` elsewhere.
    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { ExtReal::ZERO } else { ExtReal::NEG_INF })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> ExtReal {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: ExtReal) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[ExtReal] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn entries(&self) -> &[ExtReal] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<ExtReal>> {
        self.data.chunks(self.cols.max(1)).take(self.rows).map(<[ExtReal]>::to_vec).collect()
    }

    pub fn transpose(&self) -> Matrix {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn map(&self, f: impl Fn(ExtReal) -> ExtReal) -> Matrix {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_with(&self, other: &Matrix, f: impl Fn(ExtReal, ExtReal) -> ExtReal) -> Result<Matrix> {
        self.same_shape(other)?;
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Ok(Matrix { rows: self.rows, cols: self.cols, data })
    }

    /// Principal submatrix on the given indices.
    pub fn restrict(&self, idx: &[usize]) -> Matrix {
        Self::from_fn(idx.len(), idx.len(), |i, j| self.get(idx[i], idx[j]))
    }

    /// Submatrix with the given row and column indices.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Matrix {
        Self::from_fn(rows.len(), cols.len(), |i, j| self.get(rows[i], cols[j]))
    }

    fn same_shape(&self, other: &Matrix) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Domain(format!(
                "shape mismatch: {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }

    /// Max-plus product `(A ⊗ B)(i,j) = max_k A(i,k) ∔̣ B(k,j)`.
    pub fn maxplus_mul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::Domain(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::filled(self.rows, other.cols, ExtReal::NEG_INF);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_neg_inf() {
                    continue;
                }
                let brow = other.row(k);
                let orow = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (o, &b) in orow.iter_mut().zip(brow) {
                    let v = a.lower_add(b);
                    if v > *o {
                        *o = v;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Max-plus matrix-vector product `max_j A(i,j) ∔̣ v(j)`.
    pub fn maxplus_apply(&self, v: &[ExtReal]) -> Result<Vec<ExtReal>> {
        if v.len() != self.cols {
            return Err(Error::Domain(format!("vector of length {} for {} columns", v.len(), self.cols)));
        }
        Ok((0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(ExtReal::NEG_INF, |acc, (&a, &x)| acc.max(a.lower_add(x)))
            })
            .collect())
    }

    /// Left residual `X \ Y`, the greatest `A` with `X ⊗ A ≤ Y`:
    /// `(X \ Y)(i,j) = min_k Y(k,j) ∸ X(k,i)`.
    pub fn left_residual(x: &Matrix, y: &Matrix) -> Result<Matrix> {
        if x.rows != y.rows {
            return Err(Error::Domain("left residual needs matching row counts".into()));
        }
        Ok(Self::from_fn(x.cols, y.cols, |i, j| {
            (0..x.rows).fold(ExtReal::INF, |acc, k| acc.min(y.get(k, j).upper_sub(x.get(k, i))))
        }))
    }

    /// Right residual `Y / X`, the greatest `A` with `A ⊗ X ≤ Y`:
    /// `(Y / X)(i,j) = min_k Y(i,k) ∸ X(j,k)`.
    pub fn right_residual(y: &Matrix, x: &Matrix) -> Result<Matrix> {
        if x.cols != y.cols {
            return Err(Error::Domain("right residual needs matching column counts".into()));
        }
        Ok(Self::from_fn(y.rows, x.rows, |i, j| {
            (0..x.cols).fold(ExtReal::INF, |acc, k| acc.min(y.get(i, k).upper_sub(x.get(j, k))))
        }))
    }

    pub fn approx_eq(&self, other: &Matrix, tol: f64) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self.data.iter().zip(&other.data).all(|(a, b)| a.approx_eq(*b, tol))
    }

    /// Entrywise `self <= other` up to `tol`.
    pub fn approx_le(&self, other: &Matrix, tol: f64) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self.data.iter().zip(&other.data).all(|(a, b)| a.approx_le(*b, tol))
    }

    /// First `(i, j)` with `i < j` whose entries differ by more than `tol`.
    pub fn asymmetry(&self, tol: f64) -> Option<(usize, usize)> {
        if !self.is_square() {
            return Some((0, 0));
        }
        for i in 0..self.rows {
            for j in i + 1..self.cols {
                if !self.get(i, j).approx_eq(self.get(j, i), tol) {
                    return Some((i, j));
                }
            }
        }
        None
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.asymmetry(tol).is_none()
    }

    /// Largest absolute difference over entries finite in both matrices,
    /// with the positions where exactly one side is finite counted separately.
    pub fn max_finite_diff(&self, other: &Matrix) -> (f64, usize) {
        let mut worst = 0.0f64;
        let mut mismatched = 0;
        for (a, b) in self.data.iter().zip(&other.data) {
            match (a.finite(), b.finite()) {
                (Some(x), Some(y)) => worst = worst.max((x - y).abs()),
                _ if a == b => {}
                _ => mismatched += 1,
            }
        }
        (worst, mismatched)
    }
}

impl std::fmt::Debug for Matrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.to_rows()).finish()
    }
}

impl Serialize for Matrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Matrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<ExtReal>>::deserialize(d)?;
        Matrix::from_rows(rows).map_err(serde::de::Error::custom)
    }
}
