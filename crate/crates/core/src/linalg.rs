//! Small dense helpers on top of nalgebra: numerical rank, kernels and
//! subspace intersections.

use nalgebra::DMatrix;

/// Threshold under which a singular value is treated as zero.
fn cutoff(singular: &[f64], rel_tol: f64, abs_floor: f64) -> f64 {
    let smax = singular.iter().cloned().fold(0.0, f64::max);
    (rel_tol * smax).max(abs_floor)
}

pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    m.clone().svd(false, false).singular_values.iter().cloned().collect()
}

/// Count of singular values above `max(rel_tol * sigma_max, abs_floor)`.
pub fn numerical_rank(m: &DMatrix<f64>, rel_tol: f64, abs_floor: f64) -> usize {
    let s = singular_values(m);
    let cut = cutoff(&s, rel_tol, abs_floor);
    s.iter().filter(|&&v| v > cut && v > 0.0).count()
}

/// Eigenpairs of the symmetric matrix `g` ordered by decreasing eigenvalue,
/// ties by index.
fn sorted_eigen(g: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = g.symmetric_eigen();
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let values = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(eig.eigenvectors.nrows(), idx.len());
    for (c, &i) in idx.iter().enumerate() {
        vectors.set_column(c, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

/// Orthonormal basis of the `k`-dimensional subspace best approximating the
/// column span of `m`.
///
/// Singular vectors are taken from the eigenvectors of `m m^T`: nalgebra's
/// SVD loses accuracy in its vectors on rank-deficient input.
pub fn dominant_columns(m: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    if k == 0 {
        return DMatrix::zeros(m.nrows(), 0);
    }
    let (_, vectors) = sorted_eigen(m * m.transpose());
    vectors.columns(0, k).into_owned()
}

/// Orthonormal basis (as columns) of the kernel of `m` together with the rank.
pub fn null_space(m: &DMatrix<f64>, rel_tol: f64, abs_floor: f64) -> (DMatrix<f64>, usize) {
    let n = m.ncols();
    if n == 0 {
        return (DMatrix::zeros(0, 0), 0);
    }
    let rank = numerical_rank(m, rel_tol, abs_floor);
    let (_, vectors) = sorted_eigen(m.transpose() * m);
    (vectors.columns(rank, n - rank).into_owned(), rank)
}

/// Orthonormal basis of the column span of `m`.
pub fn column_space(m: &DMatrix<f64>, rel_tol: f64, abs_floor: f64) -> DMatrix<f64> {
    if m.ncols() == 0 || m.nrows() == 0 {
        return DMatrix::zeros(m.nrows(), 0);
    }
    dominant_columns(m, numerical_rank(m, rel_tol, abs_floor))
}

/// Orthogonal projector onto the span of the orthonormal columns of `basis`.
pub fn projector(basis: &DMatrix<f64>) -> DMatrix<f64> {
    basis * basis.transpose()
}

pub fn hstack(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(a.nrows(), b.nrows());
    let mut out = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), (a.nrows(), a.ncols())).copy_from(a);
    out.view_mut((0, a.ncols()), (b.nrows(), b.ncols())).copy_from(b);
    out
}

/// Dimension of `span(a) ∩ span(b)` for full-column-rank `a`, `b`.
pub fn intersection_dim(a: &DMatrix<f64>, b: &DMatrix<f64>, rel_tol: f64, abs_floor: f64) -> usize {
    let joint = numerical_rank(&hstack(a, b), rel_tol, abs_floor);
    (a.ncols() + b.ncols()).saturating_sub(joint)
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_and_kernel_of_wide_matrix() {
        let m = DMatrix::from_row_slice(1, 3, &[0.0, 2.0, 0.0]);
        let (k, r) = null_space(&m, 1e-12, 0.0);
        assert_eq!(r, 1);
        assert_eq!(k.ncols(), 2);
        assert!(max_abs(&(&m * &k)) < 1e-14);
        assert!(max_abs(&(k.transpose() * &k - DMatrix::identity(2, 2))) < 1e-14);
    }

    #[test]
    fn zero_matrix_has_full_kernel() {
        let m = DMatrix::zeros(2, 4);
        let (k, r) = null_space(&m, 1e-9, 1e-6);
        assert_eq!(r, 0);
        assert_eq!(k.ncols(), 4);
    }

    #[test]
    fn intersection_of_planes() {
        let a = DMatrix::from_column_slice(3, 2, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let b = DMatrix::from_column_slice(3, 2, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        assert_eq!(intersection_dim(&a, &b, 1e-12, 0.0), 1);
        assert_eq!(intersection_dim(&a, &a, 1e-12, 0.0), 2);
    }

    #[test]
    fn column_space_drops_dependent_columns() {
        let m = DMatrix::from_column_slice(3, 3, &[1.0, 1.0, 0.0, 2.0, 2.0, 0.0, 0.0, 0.0, 1.0]);
        assert_eq!(column_space(&m, 1e-12, 0.0).ncols(), 2);
    }
}
