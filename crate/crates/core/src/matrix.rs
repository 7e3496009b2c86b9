//! Dense row-major sample matrices and the row operations the test is built from.

use crate::error::{Error, Result};

/// A dense `n_rows × n_cols` table of finite `f64` values, one sample per row.
///
/// A matrix may have zero columns; this is how an absent conditioning set is
/// carried through a [`Dataset`](crate::Dataset).
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    data: Vec<f64>,
    n_rows: usize,
    n_cols: usize,
}

impl SampleMatrix {
    /// Builds a matrix from row-major data, rejecting NaN and infinite entries.
    pub fn new(n_rows: usize, n_cols: usize, data: Vec<f64>) -> Result<Self> {
        if n_rows * n_cols != data.len() {
            return Err(Error::Dimension(format!("{} values cannot fill a {n_rows}x{n_cols} matrix", data.len())));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: pos / n_cols, col: pos % n_cols });
        }
        Ok(Self { data, n_rows, n_cols })
    }

    /// Builds a matrix from a slice of equally long rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n_cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * n_cols);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != n_cols {
                return Err(Error::Dimension(format!("row {i} has {} columns, expected {n_cols}", row.len())));
            }
            data.extend_from_slice(row);
        }
        Self::new(rows.len(), n_cols, data)
    }

    /// A single-column matrix.
    pub fn column_vector(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        Self::new(n, 1, values)
    }

    /// A matrix with `n_rows` rows and no columns.
    pub fn empty(n_rows: usize) -> Self {
        Self { data: Vec::new(), n_rows, n_cols: 0 }
    }

    pub(crate) fn from_parts_unchecked(n_rows: usize, n_cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(n_rows * n_cols, data.len());
        debug_assert!(data.iter().all(|v| v.is_finite()));
        Self { data, n_rows, n_cols }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.n_cols + col]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.n_rows).map(move |i| self.row(i))
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_rows).map(|i| self.get(i, j)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Copies the listed rows, in the listed order, into a new matrix.
    pub fn select_rows(&self, rows: &[usize]) -> SampleMatrix {
        let mut data = Vec::with_capacity(rows.len() * self.n_cols);
        for &r in rows {
            data.extend_from_slice(self.row(r));
        }
        Self::from_parts_unchecked(rows.len(), self.n_cols, data)
    }

    /// Copies the listed columns, in the listed order, into a new matrix.
    pub fn select_columns(&self, cols: &[usize]) -> Result<SampleMatrix> {
        if let Some(&bad) = cols.iter().find(|&&c| c >= self.n_cols) {
            return Err(Error::Dimension(format!("column {bad} out of range for {} columns", self.n_cols)));
        }
        let mut data = Vec::with_capacity(self.n_rows * cols.len());
        for row in self.rows() {
            data.extend(cols.iter().map(|&c| row[c]));
        }
        Ok(Self::from_parts_unchecked(self.n_rows, cols.len(), data))
    }
}

/// Places the columns of `b` to the right of the columns of `a`.
pub fn concat_features(a: &SampleMatrix, b: &SampleMatrix) -> Result<SampleMatrix> {
    if a.n_rows != b.n_rows {
        return Err(Error::Dimension(format!("cannot concatenate {} rows with {} rows", a.n_rows, b.n_rows)));
    }
    let n_cols = a.n_cols + b.n_cols;
    let mut data = Vec::with_capacity(a.n_rows * n_cols);
    for i in 0..a.n_rows {
        data.extend_from_slice(a.row(i));
        data.extend_from_slice(b.row(i));
    }
    Ok(SampleMatrix::from_parts_unchecked(a.n_rows, n_cols, data))
}

pub(crate) fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    if perm.len() != n {
        return Err(Error::InvalidPermutation(format!("length {} does not match {n} rows", perm.len())));
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || seen[p] {
            return Err(Error::InvalidPermutation(format!("index {p} is out of range or repeated")));
        }
        seen[p] = true;
    }
    Ok(())
}

/// Row `i` of the result is row `perm[i]` of `m`.
pub fn permute_rows(m: &SampleMatrix, perm: &[usize]) -> Result<SampleMatrix> {
    check_permutation(perm, m.n_rows)?;
    Ok(m.select_rows(perm))
}

/// Inverse of a permutation: `inverse[perm[i]] == i`.
pub fn invert_permutation(perm: &[usize]) -> Result<Vec<usize>> {
    check_permutation(perm, perm.len())?;
    let mut inv = vec![0; perm.len()];
    for (i, &p) in perm.iter().enumerate() {
        inv[p] = i;
    }
    Ok(inv)
}

/// Number of test rows for a test fraction, `floor(frac_test * n_samples)`.
pub fn test_size(frac_test: f64, n_samples: usize) -> usize {
    (frac_test * n_samples as f64).floor() as usize
}

/// Splits permuted row indices into the first `n_test` (test) and the rest (train).
pub(crate) fn split_indices(perm: &[usize], n_rows: usize, n_test: usize) -> Result<(&[usize], &[usize])> {
    check_permutation(perm, n_rows)?;
    if n_test == 0 || n_test >= n_rows {
        return Err(Error::Split(format!("n_test = {n_test} must lie in [1, {n_rows})")));
    }
    Ok(perm.split_at(n_test))
}

/// Permutes the rows of `m`, then returns `(test, train)` where test holds the
/// first `n_test` permuted rows.
pub fn split_train_test(m: &SampleMatrix, perm: &[usize], n_test: usize) -> Result<(SampleMatrix, SampleMatrix)> {
    let (test, train) = split_indices(perm, m.n_rows, n_test)?;
    Ok((m.select_rows(test), m.select_rows(train)))
}

/// Mean over all rows and output columns of the squared elementwise error.
pub fn mse(pred: &SampleMatrix, truth: &SampleMatrix) -> Result<f64> {
    if pred.n_rows != truth.n_rows || pred.n_cols != truth.n_cols {
        return Err(Error::Dimension(format!(
            "prediction is {}x{}, truth is {}x{}",
            pred.n_rows, pred.n_cols, truth.n_rows, truth.n_cols
        )));
    }
    if pred.data.is_empty() {
        return Ok(0.0);
    }
    let sse: f64 = pred.data.iter().zip(&truth.data).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok(sse / pred.data.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m(rows: &[&[f64]]) -> SampleMatrix {
        SampleMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn rejects_non_finite() {
        let err = SampleMatrix::new(2, 1, vec![1.0, f64::NAN]).unwrap_err();
        assert!(matches!(err, Error::NonFinite { row: 1, col: 0 }));
        assert!(SampleMatrix::new(1, 1, vec![f64::INFINITY]).is_err());
        assert!(SampleMatrix::new(2, 2, vec![1.0; 3]).is_err());
    }

    #[test]
    fn concat_puts_a_first() {
        let a = SampleMatrix::new(3, 2, (0..6).map(f64::from).collect()).unwrap();
        let b = SampleMatrix::new(3, 1, vec![10.0, 11.0, 12.0]).unwrap();
        let c = concat_features(&a, &b).unwrap();
        assert_eq!((c.n_rows(), c.n_cols()), (3, 3));
        assert_eq!(c.row(1), &[2.0, 3.0, 11.0]);

        let c = concat_features(&m(&[&[1.0], &[2.0]]), &m(&[&[3.0], &[4.0]])).unwrap();
        assert_eq!(c, m(&[&[1.0, 3.0], &[2.0, 4.0]]));

        let a = SampleMatrix::new(5, 2, vec![0.0; 10]).unwrap();
        let b = SampleMatrix::new(4, 2, vec![0.0; 8]).unwrap();
        assert!(matches!(concat_features(&a, &b), Err(Error::Dimension(_))));
    }

    #[test]
    fn permute_small_cases() {
        let x = m(&[&[1.0], &[2.0], &[3.0]]);
        assert_eq!(permute_rows(&x, &[0, 1, 2]).unwrap(), x);
        assert_eq!(permute_rows(&x, &[2, 0, 1]).unwrap(), m(&[&[3.0], &[1.0], &[2.0]]));
        assert!(matches!(permute_rows(&x, &[0, 0, 1]), Err(Error::InvalidPermutation(_))));
        assert!(permute_rows(&x, &[0, 1]).is_err());
        assert!(permute_rows(&x, &[0, 1, 3]).is_err());
    }

    #[test]
    fn split_sizes() {
        let x = SampleMatrix::new(10, 1, (0..10).map(f64::from).collect()).unwrap();
        let id: Vec<usize> = (0..10).collect();
        let (test, train) = split_train_test(&x, &id, 1).unwrap();
        assert_eq!((test.n_rows(), train.n_rows()), (1, 9));
        assert_eq!(test_size(0.1, 100), 10);
        assert!(matches!(split_train_test(&x, &id, 10), Err(Error::Split(_))));
        assert!(split_train_test(&x, &id, 0).is_err());
    }

    #[test]
    fn mse_hand_values() {
        let t = m(&[&[3.0, 4.0]]);
        assert_eq!(mse(&t, &t).unwrap(), 0.0);
        assert_eq!(mse(&m(&[&[0.0, 0.0]]), &t).unwrap(), 12.5);
        assert_eq!(mse(&m(&[&[1.0], &[3.0]]), &m(&[&[2.0], &[5.0]])).unwrap(), 2.5);
        assert!(mse(&m(&[&[1.0]]), &t).is_err());
    }

    fn matrix_and_perm() -> impl Strategy<Value = (SampleMatrix, Vec<usize>)> {
        (1usize..20, 1usize..4).prop_flat_map(|(n, d)| {
            (prop::collection::vec(-1e6f64..1e6, n * d), Just((0..n).collect::<Vec<_>>()).prop_shuffle())
                .prop_map(move |(data, perm)| (SampleMatrix::new(n, d, data).unwrap(), perm))
        })
    }

    proptest! {
        #[test]
        fn permute_then_inverse_is_identity((x, perm) in matrix_and_perm()) {
            let inv = invert_permutation(&perm).unwrap();
            let back = permute_rows(&permute_rows(&x, &perm).unwrap(), &inv).unwrap();
            prop_assert_eq!(back, x);
        }

        #[test]
        fn identity_split_concatenates_back((x, _) in matrix_and_perm(), frac in 0.0f64..1.0) {
            let n = x.n_rows();
            prop_assume!(n >= 2);
            let n_test = 1 + ((n - 2) as f64 * frac) as usize;
            let id: Vec<usize> = (0..n).collect();
            let (test, train) = split_train_test(&x, &id, n_test).unwrap();
            let mut data = test.into_vec();
            data.extend(train.into_vec());
            prop_assert_eq!(SampleMatrix::new(n, x.n_cols(), data).unwrap(), x);
        }

        #[test]
        fn mse_ignores_joint_row_order((x, perm) in matrix_and_perm(), shift in -5.0f64..5.0) {
            let truth = SampleMatrix::new(
                x.n_rows(), x.n_cols(),
                x.as_slice().iter().map(|v| v * 0.5 + shift).collect(),
            ).unwrap();
            let a = mse(&x, &truth).unwrap();
            let b = mse(&permute_rows(&x, &perm).unwrap(), &permute_rows(&truth, &perm).unwrap()).unwrap();
            prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0));
        }
    }
}
