//! Dense complex linear algebra used by the channel and precoding layers.

mod cone;

pub use cone::{
    cone_solve, ConeProblem, ConeSolution, ConeStatus, InterferenceBlock, SolverTolerances,
};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Relative Hermitian deviation accepted by [`hermitian_eig`].
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Eigenpairs of a Hermitian matrix, values sorted in descending order with
/// `vectors` columns matching.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub vectors: CMatrix,
    pub values: Vec<f64>,
}

/// `‖M − Mᴴ‖_F / ‖M‖_F` (0 for the zero matrix).
pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    let norm = m.norm();
    if norm == 0.0 {
        return 0.0;
    }
    (m - m.adjoint()).norm() / norm
}

pub fn check_finite(m: &CMatrix, what: &'static str) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// Eigendecomposition of a Hermitian matrix.
///
/// The input is symmetrized before decomposition; anything further than
/// [`HERMITIAN_TOL`] from Hermitian is rejected.
pub fn hermitian_eig(r: &CMatrix) -> Result<HermitianEigen> {
    if r.nrows() != r.ncols() {
        return Err(Error::DimensionMismatch {
            context: "hermitian_eig (square matrix)",
            expected: r.nrows(),
            found: r.ncols(),
        });
    }
    check_finite(r, "hermitian_eig input")?;
    let deviation = hermitian_deviation(r);
    if deviation > HERMITIAN_TOL {
        return Err(Error::NotHermitian { deviation });
    }
    let n = r.nrows();
    if n == 0 {
        return Ok(HermitianEigen {
            vectors: CMatrix::zeros(0, 0),
            values: Vec::new(),
        });
    }
    let sym = (r + r.adjoint()).scale(0.5);
    let eig = SymmetricEigen::new(sym);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |row, col| eig.eigenvectors[(row, order[col])]);
    Ok(HermitianEigen { vectors, values })
}

/// Orthonormal basis for the column span of `m` by modified Gram-Schmidt with
/// one re-orthogonalization pass. Columns whose residual falls below
/// `rel_tol` times the largest column norm are dropped.
pub fn orthonormal_basis(m: &CMatrix, rel_tol: f64) -> CMatrix {
    let scale = (0..m.ncols())
        .map(|j| m.column(j).norm())
        .fold(0.0, f64::max);
    let mut basis: Vec<CVector> = Vec::new();
    if scale == 0.0 {
        return CMatrix::zeros(m.nrows(), 0);
    }
    for j in 0..m.ncols() {
        let mut v: CVector = m.column(j).into_owned();
        for _ in 0..2 {
            for q in &basis {
                let coef = q.dotc(&v);
                v.axpy(-coef, q, Complex64::new(1.0, 0.0));
            }
        }
        let norm = v.norm();
        if norm > rel_tol * scale {
            basis.push(v.unscale(norm));
        }
    }
    if basis.is_empty() {
        return CMatrix::zeros(m.nrows(), 0);
    }
    CMatrix::from_columns(&basis)
}

/// Left pseudo-inverse `(HᴴH)⁻¹Hᴴ` of a tall full-column-rank matrix.
///
/// Computed through a thin QR factorization (`H = QR`, result `R⁻¹Qᴴ`). A
/// matrix whose smallest singular value is at most `1e-10` times the largest
/// is rejected, naming the column with the smallest Gram-Schmidt residual
/// relative to its own norm.
pub fn pseudo_inverse(h: &CMatrix) -> Result<CMatrix> {
    let (n, k) = h.shape();
    if k == 0 {
        return Err(Error::Empty("pseudo_inverse input has no columns"));
    }
    if k > n {
        return Err(Error::DimensionMismatch {
            context: "pseudo_inverse (needs rows >= columns)",
            expected: n,
            found: k,
        });
    }
    check_finite(h, "pseudo_inverse input")?;

    let mut q = CMatrix::zeros(n, k);
    let mut r = CMatrix::zeros(k, k);
    let mut worst = (0usize, f64::INFINITY);
    for j in 0..k {
        let mut v: CVector = h.column(j).into_owned();
        let col_norm = v.norm();
        for _ in 0..2 {
            for i in 0..j {
                let coef = q.column(i).dotc(&v);
                r[(i, j)] += coef;
                v.axpy(-coef, &q.column(i), Complex64::new(1.0, 0.0));
            }
        }
        let res = v.norm();
        let ratio = if col_norm > 0.0 { res / col_norm } else { 0.0 };
        if ratio < worst.1 {
            worst = (j, ratio);
        }
        r[(j, j)] = Complex64::new(res, 0.0);
        if res > 0.0 {
            q.set_column(j, &v.unscale(res));
        }
    }

    let sv = h.clone().singular_values();
    let smax = sv.max();
    let smin = sv.min();
    if !(smin > 1e-10 * smax) {
        return Err(Error::RankDeficient { column: worst.0 + 1 });
    }

    // Back substitution: X = R⁻¹ Qᴴ, one column of Qᴴ at a time.
    let qh = q.adjoint();
    let mut x = CMatrix::zeros(k, n);
    for c in 0..n {
        for i in (0..k).rev() {
            let mut acc = qh[(i, c)];
            for l in i + 1..k {
                acc -= r[(i, l)] * x[(l, c)];
            }
            x[(i, c)] = acc / r[(i, i)];
        }
    }
    Ok(x)
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    pub fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMatrix {
        CMatrix::from_fn(rows, cols, |_, _| {
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        })
    }

    pub fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
        let a = random_matrix(rng, n, n);
        (&a + a.adjoint()).scale(0.5)
    }

    pub fn random_psd(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
        let a = random_matrix(rng, n, n);
        &a * a.adjoint()
    }
}

#[cfg(test)]
mod tests {
    use super::testutil::*;
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn eig_identity() {
        let eig = hermitian_eig(&CMatrix::identity(5, 5)).unwrap();
        assert!(eig.values.iter().all(|v| (v - 1.0).abs() < 1e-14));
    }

    #[test]
    fn eig_diagonal_is_axis_aligned() {
        let r = CMatrix::from_diagonal(&CVector::from_vec(vec![c(1.0), c(3.0)]));
        let eig = hermitian_eig(&r).unwrap();
        assert!((eig.values[0] - 3.0).abs() < 1e-14 && (eig.values[1] - 1.0).abs() < 1e-14);
        assert!((eig.vectors[(1, 0)].norm() - 1.0).abs() < 1e-12);
        assert!(eig.vectors[(0, 0)].norm() < 1e-12);
    }

    #[test]
    fn eig_random_hermitian_residual() {
        let mut g = rng(7);
        for n in [1, 2, 8, 33] {
            let r = random_hermitian(&mut g, n);
            let eig = hermitian_eig(&r).unwrap();
            let d = CMatrix::from_diagonal(&CVector::from_iterator(
                n,
                eig.values.iter().map(|&v| c(v)),
            ));
            let residual = (&r * &eig.vectors - &eig.vectors * d).norm();
            assert!(residual <= 1e-8 * r.norm(), "n={n} residual={residual}");
            assert!(eig.values.windows(2).all(|w| w[0] >= w[1]));
            let gram = eig.vectors.adjoint() * &eig.vectors;
            assert!((gram - CMatrix::identity(n, n)).norm() < 1e-10);
        }
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let mut r = CMatrix::identity(3, 3);
        r[(0, 1)] = c(0.5);
        assert!(matches!(hermitian_eig(&r), Err(Error::NotHermitian { .. })));
        let r = CMatrix::zeros(2, 3);
        assert!(hermitian_eig(&r).is_err());
    }

    #[test]
    fn pinv_of_orthonormal_columns_is_adjoint() {
        let mut g = rng(3);
        let q = orthonormal_basis(&random_matrix(&mut g, 8, 3), 1e-12);
        let p = pseudo_inverse(&q).unwrap();
        assert!((p - q.adjoint()).norm() < 1e-12);
    }

    #[test]
    fn pinv_single_column() {
        let mut g = rng(4);
        let h = random_matrix(&mut g, 6, 1);
        let p = pseudo_inverse(&h).unwrap();
        let expected = h.adjoint().unscale(h.norm_squared());
        assert!((p - expected).norm() < 1e-14);
    }

    #[test]
    fn pinv_random_residual() {
        let mut g = rng(5);
        for _ in 0..20 {
            let h = random_matrix(&mut g, 8, 3);
            let p = pseudo_inverse(&h).unwrap();
            assert!((&p * &h - CMatrix::identity(3, 3)).norm() <= 1e-8);
        }
    }

    #[test]
    fn pinv_names_deficient_column() {
        let mut g = rng(6);
        let mut h = random_matrix(&mut g, 5, 3);
        let dup = h.column(0) * Complex64::new(0.3, -2.0) + h.column(1) * c(0.5);
        h.set_column(2, &dup);
        match pseudo_inverse(&h) {
            Err(Error::RankDeficient { column }) => assert_eq!(column, 3),
            other => panic!("expected rank deficiency, got {other:?}"),
        }
        assert!(pseudo_inverse(&CMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn orthonormal_basis_drops_dependent_columns() {
        let mut g = rng(8);
        let a = random_matrix(&mut g, 6, 2);
        let m = CMatrix::from_columns(&[
            a.column(0).into_owned(),
            a.column(1).into_owned(),
            a.column(0) + a.column(1),
        ]);
        let q = orthonormal_basis(&m, 1e-10);
        assert_eq!(q.ncols(), 2);
        assert!((q.adjoint() * &q - CMatrix::identity(2, 2)).norm() < 1e-13);
    }
}
