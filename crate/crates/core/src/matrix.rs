//! Column-sparse matrices over GF(q) and the linear algebra behind them.
//!
//! [`SparseMatrix`] stores, for each column, the sorted list of nonzero
//! `(row, coefficient)` pairs. Elimination runs on dense row copies; GF(2)
//! takes a bit-packed path ([`linalg::rref_gf2`], [`PackedGf2Matrix`]) whose
//! results are identical to the generic residue path.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::gf::{FieldSpec, Symbol};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatrixError {
    #[error("dimension mismatch: expected length {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("matrices are over different fields")]
    FieldMismatch,
    #[error("entry ({row}, {col}) outside a {rows}x{cols} matrix")]
    OutOfBounds { row: usize, col: usize, rows: usize, cols: usize },
    #[error("symbol {value} is not a residue modulo {q}")]
    BadSymbol { value: Symbol, q: u32 },
    #[error("a matrix needs at least one column")]
    NoColumns,
}

/// An `l x n` matrix over GF(q), stored column by column.
///
/// Every stored coefficient is nonzero and rows within a column are strictly
/// increasing. A matrix with zero rows is allowed and maps everything to the
/// empty vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SparseMatrix {
    field: FieldSpec,
    rows: usize,
    cols: Vec<Vec<(u32, Symbol)>>,
}

impl SparseMatrix {
    pub fn zeros(field: FieldSpec, rows: usize, cols: usize) -> Result<Self, MatrixError> {
        if cols == 0 {
            return Err(MatrixError::NoColumns);
        }
        Ok(SparseMatrix { field, rows, cols: vec![Vec::new(); cols] })
    }

    pub fn identity(field: FieldSpec, n: usize) -> Result<Self, MatrixError> {
        let mut m = Self::zeros(field, n, n)?;
        for (j, col) in m.cols.iter_mut().enumerate() {
            col.push((j as u32, 1));
        }
        Ok(m)
    }

    /// Build from row-major dense entries.
    pub fn from_dense(
        field: FieldSpec,
        rows: usize,
        cols: usize,
        entries: &[Symbol],
    ) -> Result<Self, MatrixError> {
        if entries.len() != rows * cols {
            return Err(MatrixError::Dimension { expected: rows * cols, got: entries.len() });
        }
        let mut m = Self::zeros(field, rows, cols)?;
        for r in 0..rows {
            for c in 0..cols {
                let v = entries[r * cols + c];
                if v as u32 >= field.q() {
                    return Err(MatrixError::BadSymbol { value: v, q: field.q() });
                }
                if v != 0 {
                    m.cols[c].push((r as u32, v));
                }
            }
        }
        Ok(m)
    }

    pub fn from_rows(field: FieldSpec, rows: &[Vec<Symbol>]) -> Result<Self, MatrixError> {
        let n = rows.first().map_or(0, |r| r.len());
        let flat: Vec<Symbol> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Self::from_dense(field, rows.len(), n, &flat)
    }

    #[inline]
    pub fn field(&self) -> FieldSpec {
        self.field
    }

    /// Row count `l`.
    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Column count `n`.
    #[inline]
    pub fn cols(&self) -> usize {
        self.cols.len()
    }

    pub fn column(&self, j: usize) -> &[(u32, Symbol)] {
        &self.cols[j]
    }

    pub fn nnz(&self) -> usize {
        self.cols.iter().map(|c| c.len()).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.cols.iter().all(|c| c.is_empty())
    }

    pub fn get(&self, row: usize, col: usize) -> Symbol {
        self.cols[col]
            .binary_search_by_key(&(row as u32), |e| e.0)
            .map(|i| self.cols[col][i].1)
            .unwrap_or(0)
    }

    /// Add `value` to entry `(row, col)`; an entry that cancels to zero is removed.
    pub fn add_to(&mut self, row: usize, col: usize, value: Symbol) -> Result<(), MatrixError> {
        if row >= self.rows || col >= self.cols.len() {
            return Err(MatrixError::OutOfBounds {
                row,
                col,
                rows: self.rows,
                cols: self.cols.len(),
            });
        }
        if value as u32 >= self.field.q() {
            return Err(MatrixError::BadSymbol { value, q: self.field.q() });
        }
        if value == 0 {
            return Ok(());
        }
        let f = self.field;
        let column = &mut self.cols[col];
        match column.binary_search_by_key(&(row as u32), |e| e.0) {
            Ok(i) => {
                let s = f.add(column[i].1, value);
                if s == 0 {
                    column.remove(i);
                } else {
                    column[i].1 = s;
                }
            }
            Err(i) => column.insert(i, (row as u32, value)),
        }
        Ok(())
    }

    /// Append a column given as sorted nonzero entries (used by enumerators).
    pub(crate) fn from_columns(field: FieldSpec, rows: usize, cols: Vec<Vec<(u32, Symbol)>>) -> Self {
        SparseMatrix { field, rows, cols }
    }

    pub fn to_dense_rows(&self) -> Vec<Vec<Symbol>> {
        let mut out = vec![vec![0; self.cols()]; self.rows];
        for (j, col) in self.cols.iter().enumerate() {
            for &(r, v) in col {
                out[r as usize][j] = v;
            }
        }
        out
    }

    /// `A u` over GF(q).
    pub fn matvec(&self, u: &[Symbol]) -> Result<Vec<Symbol>, MatrixError> {
        let mut out = vec![0; self.rows];
        self.matvec_into(u, &mut out)?;
        Ok(out)
    }

    pub fn matvec_into(&self, u: &[Symbol], out: &mut [Symbol]) -> Result<(), MatrixError> {
        if u.len() != self.cols() {
            return Err(MatrixError::Dimension { expected: self.cols(), got: u.len() });
        }
        if out.len() != self.rows {
            return Err(MatrixError::Dimension { expected: self.rows, got: out.len() });
        }
        out.iter_mut().for_each(|x| *x = 0);
        let f = self.field;
        for (col, &uj) in self.cols.iter().zip(u) {
            if uj == 0 {
                continue;
            }
            for &(r, v) in col {
                let o = &mut out[r as usize];
                *o = f.add(*o, f.mul(v, uj));
            }
        }
        Ok(())
    }

    /// Row-wise concatenation `[self; other]`, the map `u -> (Au, Bu)`.
    pub fn stack(&self, other: &SparseMatrix) -> Result<SparseMatrix, MatrixError> {
        if self.field != other.field {
            return Err(MatrixError::FieldMismatch);
        }
        if self.cols() != other.cols() {
            return Err(MatrixError::Dimension { expected: self.cols(), got: other.cols() });
        }
        let off = self.rows as u32;
        let cols = self
            .cols
            .iter()
            .zip(&other.cols)
            .map(|(a, b)| a.iter().copied().chain(b.iter().map(|&(r, v)| (r + off, v))).collect())
            .collect();
        Ok(SparseMatrix { field: self.field, rows: self.rows + other.rows, cols })
    }

    pub fn rank(&self) -> usize {
        self.rank_and_image().rank
    }

    /// Rank and a reduced-echelon basis of the column space `Im A`.
    pub fn rank_and_image(&self) -> ImageBasis {
        let transposed: Vec<Vec<Symbol>> = self
            .cols
            .iter()
            .map(|col| {
                let mut row = vec![0; self.rows];
                for &(r, v) in col {
                    row[r as usize] = v;
                }
                row
            })
            .collect();
        let (basis, pivots) = linalg::rref(self.field, transposed, self.rows);
        ImageBasis { field: self.field, rank: pivots.len(), basis, pivots }
    }
}

/// The column space of a matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageBasis {
    pub field: FieldSpec,
    pub rank: usize,
    /// Rows of the reduced echelon form, each of length `l`.
    pub basis: Vec<Vec<Symbol>>,
    pub pivots: Vec<usize>,
}

impl ImageBasis {
    /// Whether `c` lies in the span (reduce against the echelon basis).
    pub fn contains(&self, c: &[Symbol]) -> bool {
        let f = self.field;
        let mut r = c.to_vec();
        for (row, &p) in self.basis.iter().zip(&self.pivots) {
            let coef = r[p];
            if coef != 0 {
                f.axpy(&mut r, f.neg(coef), row);
            }
        }
        r.iter().all(|&x| x == 0)
    }

    /// `q^rank`, if it fits.
    pub fn size(&self) -> Option<u128> {
        (self.field.q() as u128).checked_pow(self.rank as u32)
    }
}

/// Dense GF(2) matrix with bit-packed columns, for fast products.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PackedGf2Matrix {
    rows: usize,
    words: usize,
    cols: Vec<u64>,
}

impl PackedGf2Matrix {
    pub fn from_sparse(a: &SparseMatrix) -> Option<Self> {
        if !a.field().is_binary() {
            return None;
        }
        let words = a.rows().div_ceil(64).max(1);
        let mut cols = vec![0u64; words * a.cols()];
        for j in 0..a.cols() {
            for &(r, _) in a.column(j) {
                cols[j * words + r as usize / 64] |= 1u64 << (r % 64);
            }
        }
        Some(PackedGf2Matrix { rows: a.rows(), words, cols })
    }

    pub fn matvec_packed(&self, u: &[u64]) -> Vec<u64> {
        let n = self.cols.len() / self.words;
        let mut out = vec![0u64; self.words];
        for j in 0..n {
            if (u[j / 64] >> (j % 64)) & 1 == 1 {
                for (o, c) in out.iter_mut().zip(&self.cols[j * self.words..(j + 1) * self.words]) {
                    *o ^= c;
                }
            }
        }
        out
    }

    pub fn matvec(&self, u: &[Symbol]) -> Vec<Symbol> {
        let packed = linalg::pack_bits(u);
        let out = self.matvec_packed(&packed);
        linalg::unpack_bits(&out, self.rows)
    }
}

pub mod linalg {
    //! Gaussian elimination over GF(q).

    use super::*;

    pub fn pack_bits(v: &[Symbol]) -> Vec<u64> {
        let mut out = vec![0u64; v.len().div_ceil(64).max(1)];
        for (i, &b) in v.iter().enumerate() {
            if b & 1 == 1 {
                out[i / 64] |= 1u64 << (i % 64);
            }
        }
        out
    }

    pub fn unpack_bits(w: &[u64], len: usize) -> Vec<Symbol> {
        (0..len).map(|i| ((w[i / 64] >> (i % 64)) & 1) as Symbol).collect()
    }

    /// Reduced row echelon form. Zero rows are dropped; returns the reduced
    /// rows with their pivot columns.
    pub fn rref(field: FieldSpec, rows: Vec<Vec<Symbol>>, ncols: usize) -> (Vec<Vec<Symbol>>, Vec<usize>) {
        let (mut rows, pivots) = eliminate(field, rows, ncols);
        rows.truncate(pivots.len());
        (rows, pivots)
    }

    /// Gauss-Jordan elimination pivoting only on the first `ncols` columns.
    /// Rows keep their full width (so an augmented column is carried along)
    /// and rows past the rank are kept, which exposes inconsistent systems.
    pub fn eliminate(field: FieldSpec, rows: Vec<Vec<Symbol>>, ncols: usize) -> (Vec<Vec<Symbol>>, Vec<usize>) {
        if field.is_binary() {
            eliminate_gf2(rows, ncols)
        } else {
            eliminate_generic(field, rows, ncols)
        }
    }

    pub fn rref_generic(field: FieldSpec, rows: Vec<Vec<Symbol>>, ncols: usize) -> (Vec<Vec<Symbol>>, Vec<usize>) {
        let (mut rows, pivots) = eliminate_generic(field, rows, ncols);
        rows.truncate(pivots.len());
        (rows, pivots)
    }

    pub fn rref_gf2(rows: Vec<Vec<Symbol>>, ncols: usize) -> (Vec<Vec<Symbol>>, Vec<usize>) {
        let (mut rows, pivots) = eliminate_gf2(rows, ncols);
        rows.truncate(pivots.len());
        (rows, pivots)
    }

    /// Residue-arithmetic elimination for any prime field.
    pub fn eliminate_generic(
        field: FieldSpec,
        mut rows: Vec<Vec<Symbol>>,
        ncols: usize,
    ) -> (Vec<Vec<Symbol>>, Vec<usize>) {
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..ncols {
            if r == rows.len() {
                break;
            }
            let Some(p) = (r..rows.len()).find(|&i| rows[i][c] != 0) else {
                continue;
            };
            rows.swap(r, p);
            let inv = field.inv(rows[r][c]).expect("pivot is nonzero");
            if inv != 1 {
                for x in rows[r].iter_mut() {
                    *x = field.mul(*x, inv);
                }
            }
            let pivot_row = rows[r].clone();
            for (i, row) in rows.iter_mut().enumerate() {
                if i != r && row[c] != 0 {
                    let s = field.neg(row[c]);
                    field.axpy(row, s, &pivot_row);
                }
            }
            pivots.push(c);
            r += 1;
        }
        (rows, pivots)
    }

    /// Bit-packed elimination over GF(2).
    pub fn eliminate_gf2(rows: Vec<Vec<Symbol>>, ncols: usize) -> (Vec<Vec<Symbol>>, Vec<usize>) {
        let width = rows.first().map_or(ncols, |r| r.len());
        let mut packed: Vec<Vec<u64>> = rows.iter().map(|r| pack_bits(r)).collect();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..ncols {
            if r == packed.len() {
                break;
            }
            let (w, b) = (c / 64, c % 64);
            let Some(p) = (r..packed.len()).find(|&i| (packed[i][w] >> b) & 1 == 1) else {
                continue;
            };
            packed.swap(r, p);
            let pivot_row = packed[r].clone();
            for (i, row) in packed.iter_mut().enumerate() {
                if i != r && (row[w] >> b) & 1 == 1 {
                    for (x, y) in row.iter_mut().zip(&pivot_row) {
                        *x ^= y;
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        let out = packed.iter().map(|p| unpack_bits(p, width)).collect();
        (out, pivots)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gf(q: u32) -> FieldSpec {
        FieldSpec::new(q).unwrap()
    }

    #[test]
    fn hand_matvec() {
        let a = SparseMatrix::from_dense(gf(2), 2, 2, &[1, 1, 0, 1]).unwrap();
        assert_eq!(a.matvec(&[1, 1]).unwrap(), vec![0, 1]);
        assert_eq!(a.matvec(&[0, 0]).unwrap(), vec![0, 0]);
        assert!(matches!(a.matvec(&[1]), Err(MatrixError::Dimension { .. })));
    }

    #[test]
    fn insertion_sums_and_cancels() {
        let mut a = SparseMatrix::zeros(gf(3), 2, 2).unwrap();
        a.add_to(1, 0, 2).unwrap();
        a.add_to(1, 0, 2).unwrap();
        assert_eq!(a.get(1, 0), 1);
        a.add_to(1, 0, 2).unwrap();
        assert_eq!(a.get(1, 0), 0);
        assert_eq!(a.nnz(), 0);
        assert!(a.add_to(2, 0, 1).is_err());
        assert!(a.add_to(0, 0, 3).is_err());
    }

    #[test]
    fn rank_of_special_matrices() {
        for q in [2, 3, 5] {
            let z = SparseMatrix::zeros(gf(q), 3, 4).unwrap();
            assert_eq!(z.rank(), 0);
            let i = SparseMatrix::identity(gf(q), 4).unwrap();
            let img = i.rank_and_image();
            assert_eq!(img.rank, 4);
            assert_eq!(img.size(), Some((q as u128).pow(4)));
        }
        let a = SparseMatrix::from_dense(gf(2), 2, 3, &[1, 1, 0, 1, 1, 0]).unwrap();
        let img = a.rank_and_image();
        assert_eq!(img.rank, 1);
        assert!(img.contains(&[1, 1]));
        assert!(!img.contains(&[1, 0]));
    }

    #[test]
    fn stacking() {
        let a = SparseMatrix::from_dense(gf(3), 1, 2, &[1, 2]).unwrap();
        let b = SparseMatrix::from_dense(gf(3), 1, 2, &[0, 1]).unwrap();
        let s = a.stack(&b).unwrap();
        assert_eq!(s.rows(), 2);
        assert_eq!(s.matvec(&[1, 1]).unwrap(), vec![0, 1]);
        let c = SparseMatrix::zeros(gf(2), 1, 2).unwrap();
        assert_eq!(a.stack(&c), Err(MatrixError::FieldMismatch));
    }

    #[test]
    fn zero_row_matrix() {
        let a = SparseMatrix::zeros(gf(2), 0, 3).unwrap();
        assert_eq!(a.matvec(&[1, 0, 1]).unwrap(), Vec::<u8>::new());
        assert_eq!(a.rank(), 0);
    }

    fn matrix_strategy(q: u32, rows: usize, cols: usize) -> impl Strategy<Value = SparseMatrix> {
        proptest::collection::vec(0..q as u8, rows * cols)
            .prop_map(move |e| SparseMatrix::from_dense(gf(q), rows, cols, &e).unwrap())
    }

    proptest! {
        #[test]
        fn matvec_is_linear(
            q in prop::sample::select(vec![2u32, 3, 5, 7]),
            seed in any::<u64>(),
        ) {
            use rand::Rng;
            let mut rng = crate::Seed(seed).rng();
            let (l, n) = (rng.gen_range(1..6), rng.gen_range(1..9));
            let f = gf(q);
            let e: Vec<u8> = (0..l * n).map(|_| rng.gen_range(0..q) as u8).collect();
            let a = SparseMatrix::from_dense(f, l, n, &e).unwrap();
            let u: Vec<u8> = (0..n).map(|_| rng.gen_range(0..q) as u8).collect();
            let v: Vec<u8> = (0..n).map(|_| rng.gen_range(0..q) as u8).collect();
            let s = rng.gen_range(0..q) as u8;
            let uv: Vec<u8> = u.iter().zip(&v).map(|(&x, &y)| f.add(x, y)).collect();
            let au = a.matvec(&u).unwrap();
            let av = a.matvec(&v).unwrap();
            let sum: Vec<u8> = au.iter().zip(&av).map(|(&x, &y)| f.add(x, y)).collect();
            prop_assert_eq!(a.matvec(&uv).unwrap(), sum);
            let su: Vec<u8> = u.iter().map(|&x| f.mul(s, x)).collect();
            let sau: Vec<u8> = au.iter().map(|&x| f.mul(s, x)).collect();
            prop_assert_eq!(a.matvec(&su).unwrap(), sau);
        }

        #[test]
        fn packed_gf2_matches_generic(a in matrix_strategy(2, 7, 70), u in proptest::collection::vec(0..2u8, 70)) {
            let p = PackedGf2Matrix::from_sparse(&a).unwrap();
            prop_assert_eq!(p.matvec(&u), a.matvec(&u).unwrap());
            let rows = a.to_dense_rows();
            prop_assert_eq!(
                linalg::rref_gf2(rows.clone(), 70),
                linalg::rref_generic(gf(2), rows, 70)
            );
        }

        #[test]
        fn rank_plus_nullity(a in matrix_strategy(3, 3, 4)) {
            // brute-force kernel size over all 81 inputs
            let mut kernel = 0u32;
            for idx in 0..81u32 {
                let u: Vec<u8> = (0..4).map(|i| ((idx / 3u32.pow(i)) % 3) as u8).collect();
                if a.matvec(&u).unwrap().iter().all(|&x| x == 0) {
                    kernel += 1;
                }
            }
            prop_assert_eq!(kernel * 3u32.pow(a.rank() as u32), 81);
        }
    }
}
