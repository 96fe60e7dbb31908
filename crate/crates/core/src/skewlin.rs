//! Real skew-symmetric matrices: spectra with multiplicities, the orthogonal
//! block normal form, similarity testing and invariant subspaces.
//!
//! The eigenvalues of a real skew matrix are `0` and pairs `±i alpha`. All
//! computations go through the symmetric positive semidefinite matrix
//! `J^T J = -J^2`, whose eigenvalues are the `alpha^2`, each with even
//! multiplicity off the kernel.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::linalg::{dominant_columns, max_abs};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SkewError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("ambiguous eigenvalue clustering near {value}: cluster of odd size {size}, gap {gap:e}")]
    ClusterAmbiguity { value: f64, size: usize, gap: f64 },
    #[error("normal form residual {residual:e} exceeds tolerance {tol:e}")]
    NormalFormResidual { residual: f64, tol: f64 },
    #[error("invariant subspace check failed: residual {residual:e}")]
    NotInvariant { residual: f64 },
}

/// Spectrum of a real skew matrix: kernel dimension and the distinct positive
/// magnitudes `alpha_j` (ascending) with their multiplicities `m_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct SkewSpectrum {
    pub m0: usize,
    pub pairs: Vec<(f64, usize)>,
    /// Smallest separation between adjacent distinct values of
    /// `{0, alpha_1, ..., alpha_k}`, relative to `1 + max alpha`. Zero when
    /// there are no pairs.
    pub stratum_gap: f64,
}

impl SkewSpectrum {
    pub fn size(&self) -> usize {
        self.m0 + 2 * self.pairs.iter().map(|p| p.1).sum::<usize>()
    }

    pub fn multiplicities(&self) -> Vec<usize> {
        self.pairs.iter().map(|p| p.1).collect()
    }

    pub fn max_alpha(&self) -> f64 {
        self.pairs.last().map_or(0.0, |p| p.0)
    }

    /// The block matrix `diag(0_{m0}, [[0, a], [-a, 0]], ...)` with blocks in
    /// ascending order.
    pub fn normal_matrix(&self) -> DMatrix<f64> {
        let n = self.size();
        let mut m = DMatrix::zeros(n, n);
        let mut p = self.m0;
        for &(alpha, mult) in &self.pairs {
            for _ in 0..mult {
                m[(p, p + 1)] = alpha;
                m[(p + 1, p)] = -alpha;
                p += 2;
            }
        }
        m
    }
}

/// Spectrum together with orthonormal bases of the kernel and of each
/// `±i alpha_j` invariant subspace.
#[derive(Debug, Clone)]
pub(crate) struct Decomposition {
    pub spectrum: SkewSpectrum,
    pub kernel: DMatrix<f64>,
    pub planes: Vec<DMatrix<f64>>,
}

fn check_square(j: &DMatrix<f64>) -> Result<(), SkewError> {
    if j.nrows() != j.ncols() {
        return Err(SkewError::NotSquare {
            rows: j.nrows(),
            cols: j.ncols(),
        });
    }
    if j.iter().any(|v| !v.is_finite()) {
        return Err(SkewError::NonFinite);
    }
    Ok(())
}

/// Skew part of `j`, warning when `j` was not skew to begin with.
fn skew_part(j: &DMatrix<f64>) -> DMatrix<f64> {
    let asym = max_abs(&(j + j.transpose()));
    if asym > 1e-12 * (1.0 + max_abs(j)) {
        log::warn!(
            "matrix is not skew-symmetric (|J + J^T| = {:e}); using its skew part",
            asym
        );
        (j - j.transpose()) * 0.5
    } else {
        j.clone()
    }
}

fn columns_of(v: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(v.nrows(), idx.len());
    for (c, &i) in idx.iter().enumerate() {
        out.set_column(c, &v.column(i));
    }
    out
}

pub(crate) fn decompose(j: &DMatrix<f64>, tol_cluster: f64) -> Result<Decomposition, SkewError> {
    check_square(j)?;
    let n = j.nrows();
    if n == 0 {
        return Ok(Decomposition {
            spectrum: SkewSpectrum {
                m0: 0,
                pairs: Vec::new(),
                stratum_gap: 0.0,
            },
            kernel: DMatrix::zeros(0, 0),
            planes: Vec::new(),
        });
    }
    let j = skew_part(j);
    let eig = (j.transpose() * &j).symmetric_eigen();
    let vecs = eig.eigenvectors;
    // |J v| is more accurate than sqrt(lambda) for magnitudes near zero
    let mut order: Vec<(f64, usize)> = (0..n).map(|i| ((&j * vecs.column(i)).norm(), i)).collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let max = order.last().map_or(0.0, |o| o.0);
    let thr = tol_cluster * (1.0 + max);

    let mut clusters: Vec<Vec<(f64, usize)>> = Vec::new();
    for &item in &order {
        match clusters.last_mut() {
            Some(c) if item.0 - c.last().expect("nonempty cluster").0 <= thr => c.push(item),
            _ => clusters.push(vec![item]),
        }
    }
    let mut kernel_idx = Vec::new();
    let mut start = 0;
    if clusters[0][0].0 <= thr {
        kernel_idx = clusters[0].iter().map(|c| c.1).collect();
        start = 1;
    }
    let mut pairs = Vec::new();
    let mut planes = Vec::new();
    for (ci, c) in clusters.iter().enumerate().skip(start) {
        let mean = c.iter().map(|v| v.0).sum::<f64>() / c.len() as f64;
        if c.len() % 2 == 1 {
            let lo = c[0].0;
            let hi = c[c.len() - 1].0;
            let below = if ci > 0 {
                lo - clusters[ci - 1].last().expect("nonempty").0
            } else {
                lo
            };
            let above = clusters.get(ci + 1).map_or(f64::INFINITY, |next| next[0].0 - hi);
            return Err(SkewError::ClusterAmbiguity {
                value: mean,
                size: c.len(),
                gap: below.min(above) / (1.0 + max),
            });
        }
        pairs.push((mean, c.len() / 2));
        let idx: Vec<usize> = c.iter().map(|v| v.1).collect();
        planes.push(columns_of(&vecs, &idx));
    }
    let stratum_gap = if pairs.is_empty() {
        0.0
    } else {
        let mut prev = 0.0;
        let mut gap = f64::INFINITY;
        for &(a, _) in &pairs {
            gap = gap.min(a - prev);
            prev = a;
        }
        gap / (1.0 + max)
    };
    Ok(Decomposition {
        spectrum: SkewSpectrum {
            m0: kernel_idx.len(),
            pairs,
            stratum_gap,
        },
        kernel: columns_of(&vecs, &kernel_idx),
        planes,
    })
}

pub fn skew_spectrum(j: &DMatrix<f64>, tol_cluster: f64) -> Result<SkewSpectrum, SkewError> {
    Ok(decompose(j, tol_cluster)?.spectrum)
}

/// Orthonormal bases `(V0, V1, ..., Vk)`: the kernel of `j` (possibly with no
/// columns) followed by the invariant subspaces of `±i alpha_j` in ascending
/// order of `alpha_j`.
pub fn invariant_subspaces(j: &DMatrix<f64>, tol_cluster: f64) -> Result<Vec<DMatrix<f64>>, SkewError> {
    let d = decompose(j, tol_cluster)?;
    let mut out = Vec::with_capacity(d.planes.len() + 1);
    out.push(d.kernel);
    out.extend(d.planes);
    let bound = 1e-6 * (1.0 + max_abs(j));
    for v in &out {
        if v.ncols() == 0 {
            continue;
        }
        let jv = j * v;
        let residual = max_abs(&(&jv - v * (v.transpose() * &jv)));
        if residual > bound {
            return Err(SkewError::NotInvariant { residual });
        }
    }
    Ok(out)
}

/// Pick the unit vector of `span(basis)` closest to a coordinate axis: the
/// normalized projection of the axis with the largest projection, lowest
/// index on ties. The choice depends only on the subspace.
fn coordinate_pick(basis: &DMatrix<f64>) -> DVector<f64> {
    let n = basis.nrows();
    let mut best = 0;
    let mut best_norm = -1.0;
    for i in 0..n {
        let norm = basis.row(i).norm();
        if norm > best_norm + 1e-12 {
            best = i;
            best_norm = norm;
        }
    }
    let proj = basis * basis.row(best).transpose();
    proj / best_norm
}

/// Orthonormal basis of `span(basis) ∩ span(used)^⊥`, of dimension `keep`.
fn deflate(basis: &DMatrix<f64>, used: &[DVector<f64>], keep: usize) -> DMatrix<f64> {
    let mut rest = basis.clone();
    for u in used {
        rest -= u * (u.transpose() * &rest);
    }
    if keep == 0 {
        return DMatrix::zeros(basis.nrows(), 0);
    }
    dominant_columns(&rest, keep)
}

/// Orthogonal `O` and block matrix `J~` with `O J O^T = J~`.
///
/// Rows of `O` are the kernel vectors first, then for each cluster in
/// ascending `alpha` the pairs `(u, -J u / |J u|)`. Within a cluster `u` is
/// chosen by [`coordinate_pick`], so the output is reproducible.
pub fn skew_normal_form(j: &DMatrix<f64>, tol: f64) -> Result<(DMatrix<f64>, DMatrix<f64>), SkewError> {
    let d = decompose(j, tol)?;
    let j = skew_part(j);
    let n = j.nrows();
    let mut rows: Vec<DVector<f64>> = Vec::with_capacity(n);

    let mut rest = d.kernel.clone();
    for k in 0..d.spectrum.m0 {
        let u = coordinate_pick(&rest);
        rest = deflate(&rest, std::slice::from_ref(&u), d.spectrum.m0 - k - 1);
        rows.push(u);
    }
    for (plane, &(_, mult)) in d.planes.iter().zip(&d.spectrum.pairs) {
        let mut rest = plane.clone();
        for k in 0..mult {
            let u = coordinate_pick(&rest);
            let mut w = -(&j * &u);
            w = &rest * (rest.transpose() * &w);
            w -= &u * u.dot(&w);
            w /= w.norm();
            rest = deflate(&rest, &[u.clone(), w.clone()], 2 * (mult - k - 1));
            rows.push(u);
            rows.push(w);
        }
    }
    let o = DMatrix::from_rows(&rows.iter().map(|r| r.transpose()).collect::<Vec<_>>());
    let jt = d.spectrum.normal_matrix();
    let residual = if n == 0 {
        0.0
    } else {
        max_abs(&(&o * &j * o.transpose() - &jt))
    };
    let bound = tol * (1.0 + max_abs(&j));
    if residual > bound {
        return Err(SkewError::NormalFormResidual { residual, tol: bound });
    }
    Ok((o, jt))
}

/// Whether `j1` and `j2` have the same clustered spectrum, magnitudes
/// compared to `tol * (1 + max alpha)`.
pub fn orthogonally_similar(j1: &DMatrix<f64>, j2: &DMatrix<f64>, tol: f64) -> bool {
    if j1.shape() != j2.shape() {
        return false;
    }
    let (Ok(s1), Ok(s2)) = (skew_spectrum(j1, tol), skew_spectrum(j2, tol)) else {
        return false;
    };
    if s1.m0 != s2.m0 || s1.pairs.len() != s2.pairs.len() {
        return false;
    }
    let scale = 1.0 + s1.max_alpha().max(s2.max_alpha());
    s1.pairs
        .iter()
        .zip(&s2.pairs)
        .all(|(a, b)| a.1 == b.1 && (a.0 - b.0).abs() <= tol * scale)
}
