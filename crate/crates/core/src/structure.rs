//! Coordinate model of a corank-one sub-Riemannian structure: the defining
//! one-form, a frame of its kernel, the metric, and the pointwise data built
//! from them (exterior derivative, brackets, flag ranks, Levi form).

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::batch::{self, Execution};
use crate::expr::{parse_expr, Expr, ExprError};
use crate::linalg::{max_abs, numerical_rank};
use crate::{fmt_point, Tolerances};

/// Components of a vector field in the coordinate basis.
pub type VectorField = Vec<Expr>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StructureError {
    #[error("invalid structure: {0}")]
    Shape(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("theta vanishes at {}", fmt_point(.point))]
    ThetaVanishes { point: Vec<f64> },
    #[error("frame vector {index} is not in ker(theta) at {}: |theta(E)| = {residual:e}", fmt_point(.point))]
    FrameNotInKernel {
        point: Vec<f64>,
        index: usize,
        residual: f64,
    },
    #[error("Gram matrix is not symmetric at {}", fmt_point(.point))]
    GramNotSymmetric { point: Vec<f64> },
    #[error("Gram matrix is not positive definite at {}: smallest eigenvalue {min_eigenvalue:e}", fmt_point(.point))]
    GramNotPositive { point: Vec<f64>, min_eigenvalue: f64 },
    #[error("frame does not span a corank-one subspace at {}", fmt_point(.point))]
    FrameDegenerate { point: Vec<f64> },
    #[error("Levi form disagrees with -d(theta) on D at {} by {deviation:e}", fmt_point(.point))]
    LeviMismatch { point: Vec<f64>, deviation: f64 },
    #[error("structure is not corank-one at {}: the Levi form vanishes", fmt_point(.point))]
    NotCorankOne { point: Vec<f64> },
}

#[derive(Debug, Clone)]
pub enum Metric {
    /// The frame is declared orthonormal.
    Orthonormal,
    Gram(Vec<Vec<Expr>>),
}

#[derive(Debug, Clone)]
pub struct SRStructure {
    coords: Vec<String>,
    theta: Vec<Expr>,
    frame: Vec<VectorField>,
    metric: Metric,
    dtheta: Vec<Vec<Expr>>,
    // brackets[a][b] = [E_a, E_b]
    brackets: Vec<Vec<VectorField>>,
}

/// `(d theta)_ij = d_i theta_j - d_j theta_i`, antisymmetric by construction.
pub fn exterior_derivative(theta: &[Expr]) -> Vec<Vec<Expr>> {
    let n = theta.len();
    let mut d = vec![vec![Expr::zero(); n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let upper = theta[j].differentiate(i) - theta[i].differentiate(j);
            d[j][i] = -upper.clone();
            d[i][j] = upper;
        }
    }
    d
}

/// `[X, Y]^k = X^i d_i Y^k - Y^i d_i X^k`.
pub fn lie_bracket(x: &[Expr], y: &[Expr]) -> VectorField {
    assert_eq!(x.len(), y.len(), "vector fields over different coordinates");
    let n = x.len();
    (0..n)
        .map(|k| {
            let mut acc = Expr::zero();
            for i in 0..n {
                if !x[i].is_zero() {
                    acc = acc + x[i].clone() * y[k].differentiate(i);
                }
                if !y[i].is_zero() {
                    acc = acc - y[i].clone() * x[k].differentiate(i);
                }
            }
            acc
        })
        .collect()
}

pub fn is_zero_field(v: &[Expr]) -> bool {
    v.iter().all(Expr::is_zero)
}

pub fn evaluate_field(v: &[Expr], x: &[f64]) -> Result<DVector<f64>, ExprError> {
    let vals: Result<Vec<f64>, _> = v.iter().map(|e| e.evaluate(x)).collect();
    Ok(DVector::from_vec(vals?))
}

impl SRStructure {
    pub fn new(
        coords: Vec<String>,
        theta: Vec<Expr>,
        frame: Vec<VectorField>,
        metric: Metric,
    ) -> Result<Self, StructureError> {
        let n = coords.len();
        if n < 3 {
            return Err(StructureError::Shape(format!(
                "ambient dimension must be at least 3, got {}",
                n
            )));
        }
        if theta.len() != n {
            return Err(StructureError::Shape(format!(
                "theta has {} components, expected {}",
                theta.len(),
                n
            )));
        }
        if frame.len() != n - 1 {
            return Err(StructureError::Shape(format!(
                "frame has {} vectors, expected {}",
                frame.len(),
                n - 1
            )));
        }
        for (j, v) in frame.iter().enumerate() {
            if v.len() != n {
                return Err(StructureError::Shape(format!(
                    "frame vector {} has {} components, expected {}",
                    j,
                    v.len(),
                    n
                )));
            }
        }
        if let Metric::Gram(g) = &metric {
            if g.len() != n - 1 || g.iter().any(|row| row.len() != n - 1) {
                return Err(StructureError::Shape(format!("gram must be {0}x{0}", n - 1)));
            }
        }
        let all_exprs = theta.iter().chain(frame.iter().flatten()).chain(match &metric {
            Metric::Gram(g) => g.iter().flatten().collect::<Vec<_>>(),
            Metric::Orthonormal => Vec::new(),
        });
        for e in all_exprs {
            if e.max_var_index().is_some_and(|i| i >= n) {
                return Err(StructureError::Shape(
                    "expression references an undeclared coordinate".into(),
                ));
            }
        }
        let dtheta = exterior_derivative(&theta);
        let r = frame.len();
        let mut brackets = vec![vec![Vec::new(); r]; r];
        for a in 0..r {
            brackets[a][a] = vec![Expr::zero(); n];
            for b in (a + 1)..r {
                let ab = lie_bracket(&frame[a], &frame[b]);
                brackets[b][a] = ab.iter().map(|e| -e.clone()).collect();
                brackets[a][b] = ab;
            }
        }
        Ok(SRStructure {
            coords,
            theta,
            frame,
            metric,
            dtheta,
            brackets,
        })
    }

    /// Build from textual expressions; `gram = None` declares the frame orthonormal.
    pub fn parse(
        coords: &[&str],
        theta: &[&str],
        frame: &[Vec<&str>],
        gram: Option<&[Vec<&str>]>,
    ) -> Result<Self, StructureError> {
        let coords: Vec<String> = coords.iter().map(|s| s.to_string()).collect();
        let p = |t: &str| parse_expr(t, &coords);
        let theta = theta.iter().map(|t| p(t)).collect::<Result<Vec<_>, _>>()?;
        let frame = frame
            .iter()
            .map(|v| v.iter().map(|t| p(t)).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()?;
        let metric = match gram {
            None => Metric::Orthonormal,
            Some(rows) => Metric::Gram(
                rows.iter()
                    .map(|row| row.iter().map(|t| p(t)).collect::<Result<Vec<_>, _>>())
                    .collect::<Result<Vec<_>, _>>()?,
            ),
        };
        SRStructure::new(coords, theta, frame, metric)
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn rank(&self) -> usize {
        self.frame.len()
    }

    pub fn coords(&self) -> &[String] {
        &self.coords
    }

    pub fn theta(&self) -> &[Expr] {
        &self.theta
    }

    pub fn frame(&self) -> &[VectorField] {
        &self.frame
    }

    pub fn metric(&self) -> &Metric {
        &self.metric
    }

    /// Symbolic `d theta` as an antisymmetric matrix of expressions.
    pub fn exterior_derivative(&self) -> &[Vec<Expr>] {
        &self.dtheta
    }

    /// Same distribution and metric, defining form multiplied by `factor`.
    pub fn rescaled(&self, factor: &Expr) -> Result<SRStructure, StructureError> {
        let theta = self.theta.iter().map(|t| factor.clone() * t.clone()).collect();
        SRStructure::new(self.coords.clone(), theta, self.frame.clone(), self.metric.clone())
    }

    /// Replace the frame `E` by `E * a` for a constant invertible `a`, carrying
    /// the metric along so that the sub-Riemannian structure is unchanged.
    pub fn recombined(&self, a: &DMatrix<f64>) -> Result<SRStructure, StructureError> {
        let r = self.rank();
        if a.shape() != (r, r) {
            return Err(StructureError::Shape(format!("recombination must be {0}x{0}", r)));
        }
        let n = self.dim();
        let frame: Vec<VectorField> = (0..r)
            .map(|j| {
                (0..n)
                    .map(|k| {
                        (0..r).fold(Expr::zero(), |acc, i| {
                            acc + self.frame[i][k].clone() * Expr::constant(a[(i, j)])
                        })
                    })
                    .collect()
            })
            .collect();
        let gram_entry = |i: usize, j: usize| match &self.metric {
            Metric::Orthonormal => Expr::constant(if i == j { 1.0 } else { 0.0 }),
            Metric::Gram(g) => g[i][j].clone(),
        };
        let gram: Vec<Vec<Expr>> = (0..r)
            .map(|p| {
                (0..r)
                    .map(|q| {
                        let mut acc = Expr::zero();
                        for i in 0..r {
                            for j in 0..r {
                                let w = a[(i, p)] * a[(j, q)];
                                if w != 0.0 {
                                    acc = acc + Expr::constant(w) * gram_entry(i, j);
                                }
                            }
                        }
                        acc
                    })
                    .collect()
            })
            .collect();
        SRStructure::new(self.coords.clone(), self.theta.clone(), frame, Metric::Gram(gram))
    }

    fn check_point(&self, x: &[f64]) -> Result<(), StructureError> {
        if x.len() != self.dim() {
            return Err(ExprError::PointLength {
                expected: self.dim(),
                found: x.len(),
            }
            .into());
        }
        Ok(())
    }

    pub fn theta_at(&self, x: &[f64]) -> Result<DVector<f64>, StructureError> {
        self.check_point(x)?;
        Ok(evaluate_field(&self.theta, x)?)
    }

    /// Frame vectors evaluated at `x`, as the columns of a `dim x rank` matrix.
    pub fn frame_at(&self, x: &[f64]) -> Result<DMatrix<f64>, StructureError> {
        self.check_point(x)?;
        let mut m = DMatrix::zeros(self.dim(), self.rank());
        for (j, v) in self.frame.iter().enumerate() {
            m.set_column(j, &evaluate_field(v, x)?);
        }
        Ok(m)
    }

    pub fn gram_at(&self, x: &[f64]) -> Result<DMatrix<f64>, StructureError> {
        self.check_point(x)?;
        let r = self.rank();
        match &self.metric {
            Metric::Orthonormal => Ok(DMatrix::identity(r, r)),
            Metric::Gram(g) => {
                let mut m = DMatrix::zeros(r, r);
                for i in 0..r {
                    for j in 0..r {
                        m[(i, j)] = g[i][j].evaluate(x)?;
                    }
                }
                let asym = max_abs(&(&m - m.transpose()));
                if asym > 1e-12 * (1.0 + max_abs(&m)) {
                    return Err(StructureError::GramNotSymmetric { point: x.to_vec() });
                }
                Ok(m)
            }
        }
    }

    pub fn dtheta_at(&self, x: &[f64]) -> Result<DMatrix<f64>, StructureError> {
        self.check_point(x)?;
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = self.dtheta[i][j].evaluate(x)?;
            }
        }
        Ok(m)
    }

    /// Check the structure invariants at `x`: nonzero `theta`, frame inside
    /// its kernel and spanning it, positive-definite Gram matrix.
    pub fn validate_at(&self, x: &[f64], tol: &Tolerances) -> Result<(), StructureError> {
        let theta = self.theta_at(x)?;
        if theta.amax() == 0.0 {
            return Err(StructureError::ThetaVanishes { point: x.to_vec() });
        }
        let frame = self.frame_at(x)?;
        for j in 0..self.rank() {
            let residual = theta.dot(&frame.column(j)).abs();
            if residual > tol.frame {
                return Err(StructureError::FrameNotInKernel {
                    point: x.to_vec(),
                    index: j,
                    residual,
                });
            }
        }
        if numerical_rank(&frame, tol.rank, 0.0) != self.rank() {
            return Err(StructureError::FrameDegenerate { point: x.to_vec() });
        }
        self.orthonormalize(x)?;
        Ok(())
    }

    /// Change of basis `C` with `C^T G(x) C = I`, from modified Gram-Schmidt
    /// on the frame in frame order. `C` is upper triangular.
    pub fn orthonormalize(&self, x: &[f64]) -> Result<DMatrix<f64>, StructureError> {
        let g = self.gram_at(x)?;
        orthonormalize_gram(&g).map_err(|min_eigenvalue| StructureError::GramNotPositive {
            point: x.to_vec(),
            min_eigenvalue,
        })
    }

    /// Matrix of the Levi form in the frame, with `TM/D` trivialized by
    /// `theta`: `L_ab = theta([E_a, E_b])(x)`.
    pub fn levi_form(&self, x: &[f64]) -> Result<DMatrix<f64>, StructureError> {
        let theta = self.theta_at(x)?;
        let r = self.rank();
        let mut l = DMatrix::zeros(r, r);
        for a in 0..r {
            for b in (a + 1)..r {
                let v = evaluate_field(&self.brackets[a][b], x)?.dot(&theta);
                l[(a, b)] = v;
                l[(b, a)] = -v;
            }
        }
        let frame = self.frame_at(x)?;
        let cartan = -(frame.transpose() * self.dtheta_at(x)? * &frame);
        let deviation = max_abs(&(&l - &cartan));
        if deviation > 1e-10 * (1.0 + max_abs(&l)) {
            return Err(StructureError::LeviMismatch {
                point: x.to_vec(),
                deviation,
            });
        }
        Ok(l)
    }

    /// Step-two osculating algebra `D + TM/D` at `x`: its only bracket block is
    /// the Levi form in a `g`-orthonormal frame, and up to isomorphism it is a
    /// Heisenberg algebra plus an abelian factor of dimension `dim ker L`.
    pub fn osculating_algebra(&self, x: &[f64], tol: &Tolerances) -> Result<OsculatingAlgebra, StructureError> {
        let theta = self.theta_at(x)?;
        if theta.amax() == 0.0 {
            return Err(StructureError::ThetaVanishes { point: x.to_vec() });
        }
        let c = self.orthonormalize(x)?;
        let levi = c.transpose() * self.levi_form(x)? * &c;
        let rank = numerical_rank(&levi, tol.rank, 0.0);
        if rank == 0 {
            return Err(StructureError::NotCorankOne { point: x.to_vec() });
        }
        Ok(OsculatingAlgebra {
            levi,
            kernel_dim: self.rank() - rank,
            heisenberg_dim: rank + 1,
        })
    }

    /// Ranks of `D^{-1} ⊆ D^{-2} ⊆ ...` at `x`, up to `max_step` levels.
    pub fn flag_ranks(&self, x: &[f64], max_step: usize, tol: &Tolerances) -> Result<FlagRanks, StructureError> {
        FlagGenerators::new(self, max_step).ranks_at(x, tol)
    }
}

/// Modified Gram-Schmidt in the inner product `g`. On failure returns the
/// smallest eigenvalue of `g`.
pub fn orthonormalize_gram(g: &DMatrix<f64>) -> Result<DMatrix<f64>, f64> {
    let r = g.nrows();
    let min_eig = || {
        g.clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    };
    let mut c = DMatrix::<f64>::identity(r, r);
    for j in 0..r {
        let mut v = c.column(j).into_owned();
        for i in 0..j {
            let ci = c.column(i).into_owned();
            let proj = (ci.transpose() * g * &v)[(0, 0)];
            v -= ci * proj;
        }
        let norm2 = (v.transpose() * g * &v)[(0, 0)];
        if norm2 <= 0.0 || !norm2.is_finite() {
            return Err(min_eig());
        }
        c.set_column(j, &(v / norm2.sqrt()));
    }
    Ok(c)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OsculatingAlgebra {
    /// Levi form in a `g`-orthonormal frame of `D`.
    pub levi: DMatrix<f64>,
    pub kernel_dim: usize,
    pub heisenberg_dim: usize,
}

impl OsculatingAlgebra {
    pub fn is_contact(&self) -> bool {
        self.kernel_dim == 0
    }

    pub fn is_quasi_contact(&self) -> bool {
        self.kernel_dim == 1
    }

    /// Isomorphism class, e.g. `h5` or `h3 ⊕ R^2`.
    pub fn label(&self) -> String {
        step_two_label(self.heisenberg_dim, self.kernel_dim)
    }
}

/// Name of the step-two corank-one nilpotent algebra `h_{2m+1} ⊕ R^k`.
pub fn step_two_label(heisenberg_dim: usize, kernel_dim: usize) -> String {
    match kernel_dim {
        0 => format!("h{}", heisenberg_dim),
        1 => format!("h{} ⊕ R", heisenberg_dim),
        k => format!("h{} ⊕ R^{}", heisenberg_dim, k),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FlagRanks {
    /// Ranks of `D^{-1}, D^{-2}, ...`, truncated once the full dimension is reached.
    pub ranks: Vec<usize>,
    /// Whether the last rank equals the ambient dimension.
    pub full: bool,
}

/// Iterated brackets of the frame, grouped by length.
#[derive(Debug, Clone)]
pub struct FlagGenerators {
    levels: Vec<Vec<VectorField>>,
    dim: usize,
}

impl FlagGenerators {
    pub fn new(s: &SRStructure, max_step: usize) -> Self {
        let max_step = max_step.max(1);
        let mut levels: Vec<Vec<VectorField>> = vec![s.frame.clone()];
        for step in 2..=max_step {
            let prev = levels.last().expect("at least one level");
            let mut next = Vec::new();
            for (a, e) in s.frame.iter().enumerate() {
                for (b, g) in prev.iter().enumerate() {
                    if step == 2 && b <= a {
                        continue;
                    }
                    let v = if step == 2 {
                        s.brackets[a][b].clone()
                    } else {
                        lie_bracket(e, g)
                    };
                    if !is_zero_field(&v) && !next.contains(&v) {
                        next.push(v);
                    }
                }
            }
            levels.push(next);
        }
        FlagGenerators { levels, dim: s.dim() }
    }

    pub fn ranks_at(&self, x: &[f64], tol: &Tolerances) -> Result<FlagRanks, StructureError> {
        let mut columns: Vec<DVector<f64>> = Vec::new();
        let mut ranks = Vec::new();
        for level in &self.levels {
            for v in level {
                columns.push(evaluate_field(v, x)?);
            }
            let rank = if columns.is_empty() {
                0
            } else {
                numerical_rank(&DMatrix::from_columns(&columns), tol.rank, 0.0)
            };
            ranks.push(rank);
            if rank == self.dim {
                return Ok(FlagRanks { ranks, full: true });
            }
        }
        Ok(FlagRanks { ranks, full: false })
    }
}

/// Three-valued answer for properties that are only decidable in some cases.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Yes,
    No,
    Undetermined,
}

/// Flag data over a sample set. Regularity is evidence over the samples only.
#[derive(Debug, Clone)]
pub struct FlagReport {
    pub ranks: Vec<FlagRanks>,
    /// Largest number of levels needed to reach the full tangent space.
    pub step: Option<usize>,
    pub bracket_generating: bool,
    pub equiregular: bool,
    /// Samples whose rank sequence differs from the most common one.
    pub irregular_witnesses: Vec<usize>,
    pub equinilpotent_step2: Verdict,
    pub levi_kernel_dims: Vec<Option<usize>>,
}

impl FlagReport {
    pub fn compute(
        s: &SRStructure,
        samples: &[Vec<f64>],
        max_step: usize,
        tol: &Tolerances,
        exec: Execution,
    ) -> Result<FlagReport, StructureError> {
        let gens = FlagGenerators::new(s, max_step);
        let per_point = batch::map_points(exec, samples, |x| -> Result<_, StructureError> {
            let ranks = gens.ranks_at(x, tol)?;
            let kernel = if ranks.ranks.len() == 2 && ranks.full {
                Some(s.osculating_algebra(x, tol)?.kernel_dim)
            } else {
                None
            };
            Ok((ranks, kernel))
        });
        let mut ranks = Vec::with_capacity(samples.len());
        let mut levi_kernel_dims = Vec::with_capacity(samples.len());
        for r in per_point {
            let (fr, k) = r?;
            ranks.push(fr);
            levi_kernel_dims.push(k);
        }
        let bracket_generating = ranks.iter().all(|r| r.full);
        let step = if bracket_generating {
            ranks.iter().map(|r| r.ranks.len()).max()
        } else {
            None
        };
        let mut counts: HashMap<&[usize], usize> = HashMap::new();
        for r in &ranks {
            *counts.entry(r.ranks.as_slice()).or_default() += 1;
        }
        // most common pattern, ties broken by first occurrence
        let mut reference: Option<&[usize]> = None;
        for r in &ranks {
            let c = counts[r.ranks.as_slice()];
            if reference.is_none_or(|best| c > counts[best]) {
                reference = Some(r.ranks.as_slice());
            }
        }
        let irregular_witnesses: Vec<usize> = ranks
            .iter()
            .enumerate()
            .filter(|(_, r)| Some(r.ranks.as_slice()) != reference)
            .map(|(i, _)| i)
            .collect();
        let equinilpotent_step2 = if levi_kernel_dims.iter().any(Option::is_none) {
            Verdict::Undetermined
        } else if levi_kernel_dims.windows(2).all(|w| w[0] == w[1]) {
            Verdict::Yes
        } else {
            Verdict::No
        };
        Ok(FlagReport {
            equiregular: irregular_witnesses.is_empty(),
            ranks,
            step,
            bracket_generating,
            irregular_witnesses,
            equinilpotent_step2,
            levi_kernel_dims,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn charlotte(f: &str) -> SRStructure {
        let neg_f = format!("-({})", f);
        SRStructure::parse(
            &["x1", "x2", "y1", "y2", "z"],
            &["-y1", &neg_f, "0", "0", "1"],
            &[
                vec!["0", "0", "1", "0", "0"],
                vec!["0", "0", "0", "1", "0"],
                vec!["1", "0", "0", "0", "y1"],
                vec!["0", "1", "0", "0", f],
            ],
            None,
        )
        .unwrap()
    }

    fn heisenberg() -> SRStructure {
        SRStructure::parse(
            &["x", "y", "z"],
            &["-y", "0", "1"],
            &[vec!["1", "0", "y"], vec!["0", "1", "0"]],
            None,
        )
        .unwrap()
    }

    fn martinet() -> SRStructure {
        SRStructure::parse(
            &["x", "y", "z"],
            &["-z^2", "1", "0"],
            &[vec!["1", "z^2", "0"], vec!["0", "0", "1"]],
            None,
        )
        .unwrap()
    }

    fn eval_matrix(m: &[Vec<Expr>], x: &[f64]) -> DMatrix<f64> {
        let n = m.len();
        DMatrix::from_fn(n, n, |i, j| m[i][j].evaluate(x).unwrap())
    }

    #[test]
    fn dtheta_of_charlotte() {
        let s = charlotte("y2^2/2");
        let x = [0.1, 0.2, 0.3, 0.7, 0.9];
        let d = eval_matrix(s.exterior_derivative(), &x);
        // d theta = dx1∧dy1 + y2 dx2∧dy2
        let mut expected = DMatrix::zeros(5, 5);
        expected[(0, 2)] = 1.0;
        expected[(2, 0)] = -1.0;
        expected[(1, 3)] = 0.7;
        expected[(3, 1)] = -0.7;
        assert!(max_abs(&(d - expected)) < 1e-15);
    }

    #[test]
    fn dtheta_of_closed_form_is_zero() {
        let s = SRStructure::parse(
            &["x", "y", "z"],
            &["0", "0", "1"],
            &[vec!["1", "0", "0"], vec!["0", "1", "0"]],
            None,
        )
        .unwrap();
        assert!(s.exterior_derivative().iter().flatten().all(Expr::is_zero));
    }

    #[test]
    fn dtheta_single_block() {
        let s = heisenberg();
        let d = s.exterior_derivative();
        // theta = dz - y dx: (d theta)_{xy} = d_x(0) - d_y(-y) = 1
        assert_eq!(d[0][1].as_const(), Some(1.0));
        assert_eq!(d[1][0].evaluate(&[0.0; 3]).unwrap(), -1.0);
        assert!(d[0][2].is_zero() && d[1][2].is_zero());
    }

    #[test]
    fn dtheta_is_exactly_antisymmetric() {
        let s = charlotte("exp(y2)+y2");
        let x = [0.3, -1.0, 0.2, 0.8, 5.0];
        let d = s.dtheta_at(&x).unwrap();
        assert_eq!(d.clone() + d.transpose(), DMatrix::zeros(5, 5));
    }

    #[test]
    fn charlotte_brackets() {
        let s = charlotte("y2^2/2");
        let f = s.frame();
        let b = lie_bracket(&f[0], &f[2]);
        assert_eq!(
            b.iter().map(|e| e.as_const()).collect::<Vec<_>>(),
            vec![Some(0.0), Some(0.0), Some(0.0), Some(0.0), Some(1.0)]
        );
        let b = lie_bracket(&f[1], &f[3]);
        let x = [0.0, 0.0, 0.0, 0.6, 0.0];
        assert!((b[4].evaluate(&x).unwrap() - 0.6).abs() < 1e-15);
        assert!(b[..4].iter().all(Expr::is_zero));
        assert!(is_zero_field(&lie_bracket(&f[3], &f[3])));
    }

    #[test]
    fn martinet_flag() {
        let s = martinet();
        let tol = Tolerances::default();
        assert_eq!(s.flag_ranks(&[0.0, 0.0, 0.0], 4, &tol).unwrap().ranks, vec![2, 2, 3]);
        assert_eq!(s.flag_ranks(&[0.0, 0.0, 1.0], 4, &tol).unwrap().ranks, vec![2, 3]);
        let short = s.flag_ranks(&[0.0, 0.0, 0.0], 2, &tol).unwrap();
        assert_eq!(short.ranks, vec![2, 2]);
        assert!(!short.full);
    }

    #[test]
    fn heisenberg_flag_and_levi() {
        let s = heisenberg();
        let tol = Tolerances::default();
        let x = [0.4, -1.2, 3.0];
        assert_eq!(s.flag_ranks(&x, 3, &tol).unwrap().ranks, vec![2, 3]);
        let l = s.levi_form(&x).unwrap();
        assert!(l[(0, 1)].abs() > 0.5);
        let alg = s.osculating_algebra(&x, &tol).unwrap();
        assert_eq!(alg.kernel_dim, 0);
        assert_eq!(alg.label(), "h3");
    }

    #[test]
    fn involutive_levi_is_zero() {
        let s = SRStructure::parse(
            &["x", "y", "z"],
            &["0", "0", "1"],
            &[vec!["1", "0", "0"], vec!["0", "1", "0"]],
            None,
        )
        .unwrap();
        let x = [0.1, 0.2, 0.3];
        assert_eq!(s.levi_form(&x).unwrap(), DMatrix::zeros(2, 2));
        assert!(matches!(
            s.osculating_algebra(&x, &Tolerances::default()),
            Err(StructureError::NotCorankOne { .. })
        ));
    }

    #[test]
    fn charlotte_levi_kernel() {
        let s = charlotte("y2^2/2");
        let tol = Tolerances::default();
        let l = s.levi_form(&[0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(l.row(1).iter().all(|v| *v == 0.0));
        assert!(l.row(3).iter().all(|v| *v == 0.0));
        let alg = s.osculating_algebra(&[0.0; 5], &tol).unwrap();
        assert_eq!(alg.kernel_dim, 2);
        assert_eq!(alg.label(), "h3 ⊕ R^2");
        let alg = s.osculating_algebra(&[0.0, 0.0, 0.0, 0.5, 0.0], &tol).unwrap();
        assert_eq!(alg.kernel_dim, 0);
        assert_eq!(alg.label(), "h5");
    }

    #[test]
    fn orthonormalize_identity_and_diagonal() {
        let c = orthonormalize_gram(&DMatrix::identity(3, 3)).unwrap();
        assert_eq!(c, DMatrix::identity(3, 3));
        let g = DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 1.0, 1.0]));
        let c = orthonormalize_gram(&g).unwrap();
        assert_eq!(c, DMatrix::from_diagonal(&DVector::from_vec(vec![0.5, 1.0, 1.0])));
    }

    #[test]
    fn orthonormalize_rejects_indefinite() {
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let err = orthonormalize_gram(&g).unwrap_err();
        assert!((err + 1.0).abs() < 1e-12);
    }

    #[test]
    fn validation_errors() {
        let tol = Tolerances::default();
        let bad_frame = SRStructure::parse(
            &["x", "y", "z"],
            &["-y", "0", "1"],
            &[vec!["1", "0", "0"], vec!["0", "1", "0"]],
            None,
        )
        .unwrap();
        assert!(matches!(
            bad_frame.validate_at(&[0.0, 1.0, 0.0], &tol),
            Err(StructureError::FrameNotInKernel { index: 0, .. })
        ));
        assert!(bad_frame.validate_at(&[0.0, 0.0, 0.0], &tol).is_ok());
        let vanishing = SRStructure::parse(
            &["x", "y", "z"],
            &["0", "0", "z"],
            &[vec!["1", "0", "0"], vec!["0", "1", "0"]],
            None,
        )
        .unwrap();
        assert!(matches!(
            vanishing.validate_at(&[0.0, 0.0, 0.0], &tol),
            Err(StructureError::ThetaVanishes { .. })
        ));
        let indefinite = SRStructure::parse(
            &["x", "y", "z"],
            &["-y", "0", "1"],
            &[vec!["1", "0", "y"], vec!["0", "1", "0"]],
            Some(&[vec!["1", "0"], vec!["0", "x"]]),
        )
        .unwrap();
        assert!(matches!(
            indefinite.validate_at(&[-1.0, 0.0, 0.0], &tol),
            Err(StructureError::GramNotPositive { .. })
        ));
    }

    #[test]
    fn shape_errors() {
        let r = SRStructure::parse(&["x", "y", "z"], &["0", "1"], &[vec!["1", "0", "0"]], None);
        assert!(matches!(r, Err(StructureError::Shape(_))));
        let r = SRStructure::parse(
            &["x", "y", "z"],
            &["0", "0", "1"],
            &[vec!["1", "0", "0"], vec!["0", "1"]],
            None,
        );
        assert!(matches!(r, Err(StructureError::Shape(_))));
    }

    #[test]
    fn martinet_report_is_not_equiregular() {
        let s = martinet();
        let samples = vec![vec![0.0, 0.0, -0.5], vec![0.0, 0.0, 0.0], vec![0.0, 0.0, 0.5]];
        let report = FlagReport::compute(&s, &samples, 4, &Tolerances::default(), Execution::Sequential).unwrap();
        assert!(report.bracket_generating);
        assert_eq!(report.step, Some(3));
        assert!(!report.equiregular);
        assert_eq!(report.irregular_witnesses, vec![1]);
        assert_eq!(report.equinilpotent_step2, Verdict::Undetermined);
    }
}
