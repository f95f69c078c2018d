//! Dense complex linear algebra used by the estimators.
//!
//! Everything here is deliberately small: row-major dense matrices, a
//! Hermitian wrapper that keeps both triangles, the Sherman–Morrison style
//! rank-one inverse update, a Cholesky factorization for periodic
//! refreshes, and a real cubic solver.

mod cubic;

use std::ops::{Deref, Index, IndexMut};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use cubic::solve_cubic_real;

pub type C64 = Complex64;

/// Denominators below this are treated as singular.
pub const NUMERICAL_FLOOR: f64 = 1e-14;

/// Hermitian check tolerance when importing a general matrix.
const HERMITIAN_TOL: f64 = 1e-12;

/// Dense complex matrix, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::contract(format!(
                "{} entries supplied for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::contract("matrix entries must be finite"));
        }
        Ok(ComplexMatrix { rows, cols, data })
    }

    /// Builds a matrix from a closure over `(row, col)`.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        ComplexMatrix { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn row(&self, r: usize) -> &[C64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<C64> {
        (0..self.rows).map(|r| self.data[r * self.cols + c]).collect()
    }

    pub fn conj_transpose(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn matmul(&self, rhs: &ComplexMatrix) -> Result<ComplexMatrix> {
        if self.cols != rhs.rows {
            return Err(Error::contract(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = ComplexMatrix::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            let out_row = &mut out.data[r * rhs.cols..(r + 1) * rhs.cols];
            for k in 0..self.cols {
                let a = self.data[r * self.cols + k];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for (o, b) in out_row.iter_mut().zip(rhs.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Largest absolute entry-wise difference.
    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.data[r * self.cols + c]
    }
}

/// Complex vector newtype; derefs to a slice.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexVector(Vec<C64>);

impl ComplexVector {
    pub fn new(entries: Vec<C64>) -> Self {
        ComplexVector(entries)
    }

    /// The `l`-th standard basis vector of dimension `dim`.
    pub fn basis(dim: usize, l: usize) -> Self {
        let mut v = vec![C64::new(0.0, 0.0); dim];
        v[l] = C64::new(1.0, 0.0);
        ComplexVector(v)
    }

    pub fn into_inner(self) -> Vec<C64> {
        self.0
    }
}

impl Deref for ComplexVector {
    type Target = [C64];

    fn deref(&self) -> &[C64] {
        &self.0
    }
}

impl From<Vec<C64>> for ComplexVector {
    fn from(v: Vec<C64>) -> Self {
        ComplexVector(v)
    }
}

/// Dense Hermitian matrix. Both triangles are stored; every mutating
/// operation in this module leaves the storage exactly Hermitian.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HermitianMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl HermitianMatrix {
    pub fn zeros(dim: usize) -> Self {
        HermitianMatrix {
            dim,
            data: vec![C64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn scaled_identity(dim: usize, value: f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = C64::new(value, 0.0);
        }
        m
    }

    pub fn identity(dim: usize) -> Self {
        Self::scaled_identity(dim, 1.0)
    }

    /// Real diagonal matrix.
    pub fn diagonal(diag: &[f64]) -> Self {
        let dim = diag.len();
        let mut m = Self::zeros(dim);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * dim + i] = C64::new(d, 0.0);
        }
        m
    }

    /// Imports a square matrix, checking Hermitian symmetry to 1e-12 and
    /// then symmetrizing exactly.
    pub fn from_matrix(m: ComplexMatrix) -> Result<Self> {
        if m.rows != m.cols {
            return Err(Error::contract(format!(
                "Hermitian matrix must be square, got {}x{}",
                m.rows, m.cols
            )));
        }
        let n = m.rows;
        for i in 0..n {
            for j in i..n {
                if (m[(i, j)] - m[(j, i)].conj()).norm() > HERMITIAN_TOL * (1.0 + m[(i, j)].norm()) {
                    return Err(Error::contract(format!("entry ({i},{j}) breaks Hermitian symmetry")));
                }
            }
        }
        let mut h = HermitianMatrix { dim: n, data: m.data };
        h.symmetrize();
        Ok(h)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[C64] {
        &self.data[r * self.dim..(r + 1) * self.dim]
    }

    /// Column `c`, which for a Hermitian matrix is the conjugate of row `c`.
    pub fn column(&self, c: usize) -> Vec<C64> {
        self.row(c).iter().map(|z| z.conj()).collect()
    }

    pub fn to_matrix(&self) -> ComplexMatrix {
        ComplexMatrix {
            rows: self.dim,
            cols: self.dim,
            data: self.data.clone(),
        }
    }

    /// Averages with the conjugate transpose and zeroes diagonal imaginary parts.
    pub fn symmetrize(&mut self) {
        let n = self.dim;
        for i in 0..n {
            self.data[i * n + i].im = 0.0;
            for j in (i + 1)..n {
                let avg = (self.data[i * n + j] + self.data[j * n + i].conj()) * 0.5;
                self.data[i * n + j] = avg;
                self.data[j * n + i] = avg.conj();
            }
        }
    }

    /// `self * v`.
    pub fn matvec(&self, v: &[C64]) -> Vec<C64> {
        debug_assert_eq!(v.len(), self.dim);
        (0..self.dim)
            .map(|r| {
                self.row(r)
                    .iter()
                    .zip(v)
                    .fold(C64::new(0.0, 0.0), |acc, (a, b)| acc + a * b)
            })
            .collect()
    }

    /// `Re(vᴴ · self · v)` without the dimension check.
    pub(crate) fn quad(&self, v: &[C64]) -> f64 {
        let n = self.dim;
        let mut acc = 0.0;
        for i in 0..n {
            let row = self.row(i);
            // diagonal is real
            acc += row[i].re * v[i].norm_sqr();
            let mut off = C64::new(0.0, 0.0);
            for j in (i + 1)..n {
                off += row[j] * v[j];
            }
            acc += 2.0 * (v[i].conj() * off).re;
        }
        acc
    }

    /// `self -= scale · w · wᴴ`, written on the upper triangle and mirrored.
    pub(crate) fn sub_outer(&mut self, w: &[C64], scale: f64) {
        let n = self.dim;
        for i in 0..n {
            let wi = w[i] * scale;
            for (out, wj) in self.data[i * n + i..(i + 1) * n].iter_mut().zip(&w[i..]) {
                *out -= wi * wj.conj();
            }
        }
        self.mirror_upper();
    }

    fn mirror_upper(&mut self) {
        let n = self.dim;
        for i in 0..n {
            self.data[i * n + i].im = 0.0;
            for j in (i + 1)..n {
                self.data[j * n + i] = self.data[i * n + j].conj();
            }
        }
    }

    /// `Re tr(self · other)` for two Hermitian matrices.
    pub fn trace_product(&self, other: &HermitianMatrix) -> f64 {
        debug_assert_eq!(self.dim, other.dim);
        // tr(AB) = Σ_ij A_ij B_ji = Σ_ij A_ij conj(B_ij)
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.re * b.re + a.im * b.im)
            .sum()
    }

    pub fn max_abs_diff(&self, other: &HermitianMatrix) -> f64 {
        debug_assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Exact Hermitian symmetry check on the raw storage.
    pub fn is_exactly_hermitian(&self) -> bool {
        let n = self.dim;
        (0..n).all(|i| {
            self.data[i * n + i].im == 0.0 && ((i + 1)..n).all(|j| self.data[i * n + j] == self.data[j * n + i].conj())
        })
    }

    /// Cholesky factorization `self = G · Gᴴ` with `G` lower triangular.
    pub fn cholesky(&self) -> Result<Cholesky> {
        let n = self.dim;
        let mut g = vec![C64::new(0.0, 0.0); n * n];
        for j in 0..n {
            let mut diag = self.data[j * n + j].re;
            for k in 0..j {
                diag -= g[j * n + k].norm_sqr();
            }
            if !(diag > 0.0) {
                return Err(Error::NotPositiveDefinite { pivot: j, value: diag });
            }
            let gjj = diag.sqrt();
            g[j * n + j] = C64::new(gjj, 0.0);
            for i in (j + 1)..n {
                let mut s = self.data[i * n + j];
                for k in 0..j {
                    s -= g[i * n + k] * g[j * n + k].conj();
                }
                g[i * n + j] = s / gjj;
            }
        }
        Ok(Cholesky { dim: n, factor: g })
    }
}

impl Index<(usize, usize)> for HermitianMatrix {
    type Output = C64;

    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[r * self.dim + c]
    }
}

pub struct Cholesky {
    dim: usize,
    factor: Vec<C64>,
}

impl Cholesky {
    pub fn log_det(&self) -> f64 {
        (0..self.dim).map(|i| 2.0 * self.factor[i * self.dim + i].re.ln()).sum()
    }

    /// Inverse of the factored matrix, exactly Hermitian.
    pub fn inverse(&self) -> HermitianMatrix {
        let n = self.dim;
        let g = &self.factor;
        // invert the lower-triangular factor column by column
        let mut ginv = vec![C64::new(0.0, 0.0); n * n];
        for c in 0..n {
            ginv[c * n + c] = C64::new(1.0 / g[c * n + c].re, 0.0);
            for r in (c + 1)..n {
                let mut s = C64::new(0.0, 0.0);
                for k in c..r {
                    s += g[r * n + k] * ginv[k * n + c];
                }
                ginv[r * n + c] = -s / g[r * n + r].re;
            }
        }
        // A⁻¹ = G⁻ᴴ · G⁻¹
        let mut out = HermitianMatrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                let mut s = C64::new(0.0, 0.0);
                for k in j..n {
                    s += ginv[k * n + i].conj() * ginv[k * n + j];
                }
                out.data[i * n + j] = s;
            }
        }
        out.mirror_upper();
        out
    }
}

fn check_dims(minv: &HermitianMatrix, v: &[C64]) -> Result<()> {
    if minv.dim() != v.len() {
        return Err(Error::contract(format!(
            "vector of length {} against a {}x{} matrix",
            v.len(),
            minv.dim(),
            minv.dim()
        )));
    }
    Ok(())
}

/// `Re(vᴴ · M⁻¹ · v)`.
pub fn quadratic_form(minv: &HermitianMatrix, v: &[C64]) -> Result<f64> {
    check_dims(minv, v)?;
    Ok(minv.quad(v))
}

/// `Re(vᴴ · M⁻¹ · S · M⁻¹ · v)`.
pub fn weighted_quadratic_form(minv: &HermitianMatrix, s: &HermitianMatrix, v: &[C64]) -> Result<f64> {
    check_dims(minv, v)?;
    if s.dim() != minv.dim() {
        return Err(Error::contract("weight matrix dimension differs from inverse"));
    }
    let w = minv.matvec(v);
    Ok(s.quad(&w))
}

/// Replaces `M⁻¹` by `(M + c·v·vᴴ)⁻¹` in place.
pub fn rank_one_inverse_update(minv: &mut HermitianMatrix, v: &[C64], c: f64) -> Result<()> {
    check_dims(minv, v)?;
    if c == 0.0 {
        return Ok(());
    }
    let w = minv.matvec(v);
    let s = v.iter().zip(&w).map(|(a, b)| (a.conj() * b).re).sum::<f64>();
    apply_rank_one(minv, &w, c, s)
}

/// Update with a precomputed `w = M⁻¹·v` and `s = vᴴ·M⁻¹·v`.
pub(crate) fn apply_rank_one(minv: &mut HermitianMatrix, w: &[C64], c: f64, s: f64) -> Result<()> {
    let denominator = 1.0 + c * s;
    if !(denominator > NUMERICAL_FLOOR) {
        return Err(Error::SingularUpdate { denominator });
    }
    minv.sub_outer(w, c / denominator);
    Ok(())
}

/// `log|M + c·v·vᴴ| − log|M|`, i.e. `log(1 + c·vᴴ·M⁻¹·v)`.
pub fn log_det_rank_one_increment(minv: &HermitianMatrix, v: &[C64], c: f64) -> Result<f64> {
    check_dims(minv, v)?;
    if c == 0.0 {
        return Ok(0.0);
    }
    log_det_increment_from(c, minv.quad(v))
}

pub(crate) fn log_det_increment_from(c: f64, s: f64) -> Result<f64> {
    let arg = 1.0 + c * s;
    if !(arg > NUMERICAL_FLOOR) {
        return Err(Error::SingularUpdate { denominator: arg });
    }
    Ok((c * s).ln_1p())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn quadratic_form_identity_and_diagonal() {
        let id = HermitianMatrix::identity(2);
        assert_eq!(quadratic_form(&id, &[c(1.0, 0.0), c(0.0, 1.0)]).unwrap(), 2.0);
        let d = HermitianMatrix::diagonal(&[2.0, 3.0]);
        assert_eq!(quadratic_form(&d, &[c(1.0, 0.0), c(1.0, 0.0)]).unwrap(), 5.0);
    }

    #[test]
    fn quadratic_form_matches_naive_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let m = oracle::random_hpd(&mut rng, 4);
            let v = oracle::random_vector(&mut rng, 4);
            let got = quadratic_form(&m, &v).unwrap();
            let want = oracle::naive_quadratic(&m.to_matrix(), &v).re;
            assert!((got - want).abs() <= 1e-10 * want.abs(), "{got} vs {want}");
            assert!(got > 0.0);
        }
    }

    #[test]
    fn quadratic_form_rejects_mismatch() {
        let id = HermitianMatrix::identity(3);
        assert!(matches!(quadratic_form(&id, &[c(1.0, 0.0)]), Err(Error::Contract(_))));
    }

    #[test]
    fn weighted_quadratic_form_examples() {
        let id = HermitianMatrix::identity(2);
        let v = [c(1.0, 0.0), c(0.0, 0.0)];
        assert_eq!(weighted_quadratic_form(&id, &id, &v).unwrap(), 1.0);
        let zero = HermitianMatrix::zeros(2);
        assert_eq!(weighted_quadratic_form(&id, &zero, &v).unwrap(), 0.0);

        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..20 {
            let minv = oracle::random_hpd(&mut rng, 4);
            let s = oracle::random_hpd(&mut rng, 4);
            let v = oracle::random_vector(&mut rng, 4);
            let got = weighted_quadratic_form(&minv, &s, &v).unwrap();
            let chain = oracle::naive_mul(&oracle::naive_mul(&minv.to_matrix(), &s.to_matrix()), &minv.to_matrix());
            let want = oracle::naive_quadratic(&chain, &v).re;
            assert!((got - want).abs() <= 1e-10 * want.abs());
        }
    }

    #[test]
    fn rank_one_update_examples() {
        let mut m = HermitianMatrix::identity(3);
        rank_one_inverse_update(&mut m, &[c(1.0, 2.0), c(0.0, 0.0), c(1.0, 0.0)], 0.0).unwrap();
        assert_eq!(m, HermitianMatrix::identity(3));

        let mut s = HermitianMatrix::identity(1);
        rank_one_inverse_update(&mut s, &[c(1.0, 0.0)], 1.0).unwrap();
        assert!((s[(0, 0)].re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rank_one_update_matches_dense_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..10 {
            let m = oracle::random_hpd(&mut rng, 6);
            let v = oracle::random_vector(&mut rng, 6);
            let mut minv = HermitianMatrix::from_matrix(oracle::lu_inverse(&m.to_matrix())).unwrap();
            rank_one_inverse_update(&mut minv, &v, 0.7).unwrap();
            let updated = oracle::add_outer(&m.to_matrix(), &v, 0.7);
            let want = oracle::lu_inverse(&updated);
            assert!(minv.to_matrix().max_abs_diff(&want) < 1e-8);
            assert!(minv.is_exactly_hermitian());
        }
    }

    #[test]
    fn rank_one_update_rejects_singular() {
        let mut m = HermitianMatrix::identity(1);
        let err = rank_one_inverse_update(&mut m, &[c(1.0, 0.0)], -1.0).unwrap_err();
        assert!(matches!(err, Error::SingularUpdate { .. }));
    }

    #[test]
    fn log_det_increment_examples() {
        let id = HermitianMatrix::identity(1);
        assert_eq!(log_det_rank_one_increment(&id, &[c(1.0, 0.0)], 0.0).unwrap(), 0.0);
        let got = log_det_rank_one_increment(&id, &[c(1.0, 0.0)], 1.0).unwrap();
        assert!((got - std::f64::consts::LN_2).abs() < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..10 {
            let m = oracle::random_hpd(&mut rng, 5);
            let v = oracle::random_vector(&mut rng, 5);
            let cc = rng.random_range(0.1..2.0);
            let minv = HermitianMatrix::from_matrix(oracle::lu_inverse(&m.to_matrix())).unwrap();
            let got = log_det_rank_one_increment(&minv, &v, cc).unwrap();
            let want =
                oracle::lu_log_det(&oracle::add_outer(&m.to_matrix(), &v, cc)) - oracle::lu_log_det(&m.to_matrix());
            assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        }
        let err = log_det_rank_one_increment(&id, &[c(1.0, 0.0)], -2.0).unwrap_err();
        assert!(matches!(err, Error::SingularUpdate { .. }));
    }

    #[test]
    fn cholesky_inverse_and_log_det() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let m = oracle::random_hpd(&mut rng, 7);
        let chol = m.cholesky().unwrap();
        let inv = chol.inverse();
        let prod = oracle::naive_mul(&inv.to_matrix(), &m.to_matrix());
        assert!(prod.max_abs_diff(&ComplexMatrix::identity(7)) < 1e-10);
        assert!((chol.log_det() - oracle::lu_log_det(&m.to_matrix())).abs() < 1e-10);
        assert!(inv.is_exactly_hermitian());

        let neg = HermitianMatrix::scaled_identity(2, -1.0);
        assert!(matches!(
            neg.cholesky(),
            Err(Error::NotPositiveDefinite { pivot: 0, .. })
        ));
    }

    #[test]
    fn trace_product_matches_naive() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let a = oracle::random_hpd(&mut rng, 5);
        let b = oracle::random_hpd(&mut rng, 5);
        let prod = oracle::naive_mul(&a.to_matrix(), &b.to_matrix());
        let want: f64 = (0..5).map(|i| prod[(i, i)].re).sum();
        assert!((a.trace_product(&b) - want).abs() < 1e-10 * want.abs());
    }

    #[test]
    fn from_matrix_rejects_non_hermitian() {
        let m = ComplexMatrix::from_vec(2, 2, vec![c(1.0, 0.0), c(1.0, 1.0), c(1.0, 1.0), c(1.0, 0.0)]).unwrap();
        assert!(HermitianMatrix::from_matrix(m).is_err());
        assert!(ComplexMatrix::from_vec(2, 2, vec![c(1.0, 0.0)]).is_err());
        assert!(ComplexMatrix::from_vec(1, 1, vec![c(f64::NAN, 0.0)]).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn sherman_morrison_consistency(seed in any::<u64>(), dim in 1usize..8, c in -0.5f64..3.0) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let m = oracle::random_hpd(&mut rng, dim);
                let v = oracle::random_vector(&mut rng, dim);
                let mut minv = m.cholesky().unwrap().inverse();
                let updated = oracle::add_outer(&m.to_matrix(), &v, c);
                // admissible c only: the updated matrix must stay positive definite
                prop_assume!(HermitianMatrix::from_matrix(updated.clone()).unwrap().cholesky().is_ok());
                prop_assume!(1.0 + c * quadratic_form(&minv, &v).unwrap() > 1e-3);
                rank_one_inverse_update(&mut minv, &v, c).unwrap();
                let prod = oracle::naive_mul(&minv.to_matrix(), &updated);
                prop_assert!(prod.max_abs_diff(&ComplexMatrix::identity(dim)) < 1e-8);
                prop_assert!(minv.is_exactly_hermitian());
            }

            #[test]
            fn quadratic_form_positive_on_hpd(seed in any::<u64>(), dim in 1usize..8) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let m = oracle::random_hpd(&mut rng, dim);
                let v = oracle::random_vector(&mut rng, dim);
                prop_assert!(quadratic_form(&m, &v).unwrap() > 0.0);
            }
        }
    }
}
