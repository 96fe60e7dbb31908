//! Pointwise invariants of a structure: the skew operator `J` on `D`, the
//! type in the simplex, the stratum and isotropy, a finite-difference
//! differential of the type, and in dimension five the secondary type.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::expr::ExprError;
use crate::linalg::{hstack, intersection_dim, null_space, numerical_rank};
use crate::sampling::SampleBox;
use crate::skewlin::{decompose, SkewError, SkewSpectrum};
use crate::structure::{SRStructure, StructureError};
use crate::{fmt_point, Tolerances};

/// Singular values of a finite-difference type differential below this are
/// treated as noise.
pub const DALPHA_FLOOR: f64 = 1e-6;
/// Noise floor for differentials that involve the secondary type, which is
/// itself computed from a finite difference.
pub const DBETA_FLOOR: f64 = 1e-5;

const KINK_RATIO: f64 = 1e-2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TypeError {
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error("at {}: {source}", fmt_point(.point))]
    Spectral { point: Vec<f64>, source: SkewError },
    #[error("J vanishes at {}: not corank-one", fmt_point(.point))]
    NotCorankOne { point: Vec<f64> },
    #[error("type map is not smooth near {} along axis {axis}: one-sided slopes {forward:e} and {backward:e}", fmt_point(.point))]
    NonSmooth {
        point: Vec<f64>,
        axis: usize,
        forward: f64,
        backward: f64,
    },
    #[error("secondary type is only defined in dimension 5, got {found}")]
    Dimension { found: usize },
    #[error("{what} has dimension {found} at {}, expected {expected}", fmt_point(.point))]
    KernelDimension {
        point: Vec<f64>,
        what: &'static str,
        expected: usize,
        found: usize,
    },
}

impl TypeError {
    /// Whether the failure is an expression evaluated outside its domain.
    pub fn is_domain(&self) -> bool {
        matches!(
            self,
            TypeError::Structure(StructureError::Expr(ExprError::Domain { .. }))
        )
    }
}

/// Point of the simplex: `n = (dim - 1) / 2` eigenvalue magnitudes of `J`,
/// sorted ascending and normalized to sum one.
#[derive(Debug, Clone, PartialEq)]
pub struct TypeValue {
    pub simplex: Vec<f64>,
    /// Magnitudes before normalization.
    pub raw: Vec<f64>,
}

impl TypeValue {
    fn from_spectrum(sp: &SkewSpectrum, rank: usize) -> Option<TypeValue> {
        let n = rank / 2;
        let zeros = (sp.m0 - rank % 2) / 2;
        let mut raw = vec![0.0; zeros];
        for &(alpha, m) in &sp.pairs {
            raw.extend(std::iter::repeat_n(alpha, m));
        }
        debug_assert_eq!(raw.len(), n);
        let sum: f64 = raw.iter().sum();
        if sum <= 0.0 {
            return None;
        }
        let simplex = raw.iter().map(|a| a / sum).collect();
        Some(TypeValue { simplex, raw })
    }

    pub fn max_deviation(&self, other: &TypeValue) -> f64 {
        self.simplex
            .iter()
            .zip(&other.simplex)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// No coordinate is zero.
    pub fn is_interior(&self) -> bool {
        self.simplex.iter().all(|&v| v > 0.0)
    }
}

/// Multiplicity pattern of the spectrum of `J`. `m0` counts every zero
/// eigenvalue, including the one forced by odd rank.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StratumSignature {
    pub m0: usize,
    pub mults: Vec<usize>,
}

impl StratumSignature {
    pub fn mults_label(&self) -> String {
        let parts: Vec<String> = self.mults.iter().map(|m| m.to_string()).collect();
        parts.join(";")
    }
}

impl fmt::Display for StratumSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.mults.iter().map(|m| m.to_string()).collect();
        write!(f, "m0={} mults=({})", self.m0, parts.join(","))
    }
}

/// Isotropy group `O(m0) × U(m1) × ... × U(mk)` of the metric symbol.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IsotropyDescriptor {
    pub orthogonal_factor: usize,
    pub unitary_factors: Vec<usize>,
    pub dimension: usize,
    pub discrete: bool,
}

impl IsotropyDescriptor {
    pub fn from_signature(sig: &StratumSignature) -> Self {
        let m0 = sig.m0;
        let dimension = m0 * m0.saturating_sub(1) / 2 + sig.mults.iter().map(|m| m * m).sum::<usize>();
        IsotropyDescriptor {
            orthogonal_factor: m0,
            unitary_factors: sig.mults.clone(),
            dimension,
            discrete: sig.mults.is_empty() && m0 <= 1,
        }
    }
}

impl fmt::Display for IsotropyDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if self.orthogonal_factor > 0 {
            parts.push(format!("O({})", self.orthogonal_factor));
        }
        for m in &self.unitary_factors {
            parts.push(format!("U({})", m));
        }
        if parts.is_empty() {
            f.write_str("{1}")
        } else {
            f.write_str(&parts.join("×"))
        }
    }
}

/// Everything the analysis reports about a single point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointData {
    pub type_value: TypeValue,
    pub stratum: StratumSignature,
    pub isotropy: IsotropyDescriptor,
    pub contact: bool,
    pub quasicontact: bool,
    pub stratum_gap: f64,
}

/// Finite-difference differential of the type.
#[derive(Debug, Clone, PartialEq)]
pub struct DAlpha {
    /// `(n - 1) x dim`: the last simplex coordinate is dropped.
    pub jacobian: DMatrix<f64>,
    pub rank: usize,
    /// Orthonormal basis of `ker d alpha` in coordinates.
    pub kernel: DMatrix<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BetaStratum {
    /// `l` lies in the eigenplane of the smaller magnitude.
    InV1,
    /// `l` lies in the eigenplane of the larger magnitude.
    InV2,
    Generic,
    /// The type is not in its open stratum or has zero differential; the
    /// line `l` is not defined.
    Undefined,
}

impl fmt::Display for BetaStratum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BetaStratum::InV1 => "IN_V1",
            BetaStratum::InV2 => "IN_V2",
            BetaStratum::Generic => "GENERIC",
            BetaStratum::Undefined => "UNDEFINED",
        })
    }
}

/// Secondary type in dimension five: the angle `psi` between the line
/// `l = (ker d alpha ∩ D)^⊥` and the first eigenplane of `J`.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaValue {
    pub psi: Option<f64>,
    pub stratum: BetaStratum,
    /// Stabilizer of `l` in the isotropy group, as a sorted factor multiset.
    pub stabilizer: Vec<&'static str>,
    /// Unit vector spanning `l`, in a `g`-orthonormal frame of `D`.
    pub line: Option<DVector<f64>>,
}

impl BetaValue {
    fn undefined() -> Self {
        BetaValue {
            psi: None,
            stratum: BetaStratum::Undefined,
            stabilizer: Vec::new(),
            line: None,
        }
    }

    pub fn stabilizer_label(&self) -> String {
        if self.stabilizer.is_empty() {
            "n/a".to_string()
        } else {
            self.stabilizer.join("×")
        }
    }
}

/// Differential of `(alpha, psi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DAlphaBeta {
    /// `2 x dim`: the `alpha` row followed by the `psi` row.
    pub jacobian: DMatrix<f64>,
    pub rank: usize,
}

/// How `W = ker d(alpha, beta) ∩ D` sits relative to the eigenplanes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitData {
    pub w_dim: usize,
    pub in_v1: usize,
    pub in_v2: usize,
    pub projections_nonzero: bool,
}

impl SplitData {
    /// `W` is two-dimensional and is the sum of a line in each eigenplane.
    pub fn splits(&self) -> bool {
        self.projections_nonzero && self.w_dim == 2 && self.in_v1 == 1 && self.in_v2 == 1
    }
}

/// Per-point evaluator bound to one structure and one set of tolerances.
///
/// When a domain box is attached, finite differences switch to one-sided
/// stencils near its faces instead of leaving the box.
#[derive(Debug, Clone)]
pub struct TypeMap<'a> {
    structure: &'a SRStructure,
    tol: Tolerances,
    domain: Option<SampleBox>,
}

impl<'a> TypeMap<'a> {
    pub fn new(structure: &'a SRStructure, tol: Tolerances) -> Self {
        TypeMap {
            structure,
            tol,
            domain: None,
        }
    }

    pub fn with_domain(mut self, domain: SampleBox) -> Self {
        self.domain = Some(domain);
        self
    }

    pub fn structure(&self) -> &SRStructure {
        self.structure
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tol
    }

    /// Matrix of `J` in the `g`-orthonormal frame `E C`: `K = -C^T E^T dθ E C`.
    pub fn j_matrix(&self, x: &[f64]) -> Result<DMatrix<f64>, TypeError> {
        let s = self.structure;
        let ec = s.frame_at(x)? * s.orthonormalize(x)?;
        Ok(-(ec.transpose() * s.dtheta_at(x)? * ec))
    }

    fn spectral(&self, x: &[f64], e: SkewError) -> TypeError {
        TypeError::Spectral {
            point: x.to_vec(),
            source: e,
        }
    }

    pub fn spectrum_at(&self, x: &[f64]) -> Result<SkewSpectrum, TypeError> {
        let k = self.j_matrix(x)?;
        let sp = decompose(&k, self.tol.cluster)
            .map_err(|e| self.spectral(x, e))?
            .spectrum;
        if sp.pairs.is_empty() {
            return Err(TypeError::NotCorankOne { point: x.to_vec() });
        }
        Ok(sp)
    }

    pub fn type_at(&self, x: &[f64]) -> Result<TypeValue, TypeError> {
        Ok(self.point_data(x)?.type_value)
    }

    pub fn stratum_at(&self, x: &[f64]) -> Result<StratumSignature, TypeError> {
        Ok(self.point_data(x)?.stratum)
    }

    pub fn isotropy_at(&self, x: &[f64]) -> Result<IsotropyDescriptor, TypeError> {
        Ok(self.point_data(x)?.isotropy)
    }

    pub fn point_data(&self, x: &[f64]) -> Result<PointData, TypeError> {
        let sp = self.spectrum_at(x)?;
        let type_value = TypeValue::from_spectrum(&sp, self.structure.rank())
            .ok_or_else(|| TypeError::NotCorankOne { point: x.to_vec() })?;
        let stratum = StratumSignature {
            m0: sp.m0,
            mults: sp.multiplicities(),
        };
        let isotropy = IsotropyDescriptor::from_signature(&stratum);
        Ok(PointData {
            type_value,
            contact: stratum.m0 == 0,
            quasicontact: stratum.m0 == 1,
            stratum,
            isotropy,
            stratum_gap: sp.stratum_gap,
        })
    }

    /// Same type and same stratum signature, simplex coordinates compared to
    /// the clustering tolerance.
    pub fn symbols_isomorphic(&self, x: &[f64], y: &[f64]) -> bool {
        match (self.point_data(x), self.point_data(y)) {
            (Ok(a), Ok(b)) => a.stratum == b.stratum && a.type_value.max_deviation(&b.type_value) <= self.tol.cluster,
            _ => false,
        }
    }

    fn simplex_head(&self, x: &[f64]) -> Result<Vec<f64>, TypeError> {
        let mut t = self.type_at(x)?.simplex;
        t.pop();
        Ok(t)
    }

    /// Jacobian of `f` at `x` by finite differences with steps
    /// `scale * (1 + |x_i|)`. Central differences inside the domain,
    /// second-order one-sided ones within a step of its faces.
    fn fd_jacobian<F>(&self, x: &[f64], scale: f64, check_kinks: bool, f: F) -> Result<DMatrix<f64>, TypeError>
    where
        F: Fn(&[f64]) -> Result<Vec<f64>, TypeError>,
    {
        let f0 = f(x)?;
        let rows = f0.len();
        let dim = x.len();
        let mut jac = DMatrix::zeros(rows, dim);
        if rows == 0 {
            return Ok(jac);
        }
        let shifted = |axis: usize, delta: f64| -> Result<Vec<f64>, TypeError> {
            let mut y = x.to_vec();
            y[axis] += delta;
            f(&y)
        };
        for i in 0..dim {
            let h = scale * (1.0 + x[i].abs());
            let (near_lower, near_upper) = match &self.domain {
                Some(b) => (x[i] - h < b.lower()[i], x[i] + h > b.upper()[i]),
                None => (false, false),
            };
            if near_lower && !near_upper {
                let f1 = shifted(i, h)?;
                let f2 = shifted(i, 2.0 * h)?;
                for r in 0..rows {
                    jac[(r, i)] = (-3.0 * f0[r] + 4.0 * f1[r] - f2[r]) / (2.0 * h);
                }
            } else if near_upper && !near_lower {
                let f1 = shifted(i, -h)?;
                let f2 = shifted(i, -2.0 * h)?;
                for r in 0..rows {
                    jac[(r, i)] = (3.0 * f0[r] - 4.0 * f1[r] + f2[r]) / (2.0 * h);
                }
            } else {
                let fp = shifted(i, h)?;
                let fm = shifted(i, -h)?;
                for r in 0..rows {
                    let forward = (fp[r] - f0[r]) / h;
                    let backward = (f0[r] - fm[r]) / h;
                    if check_kinks
                        && (forward - backward).abs() > KINK_RATIO * (1.0 + forward.abs().max(backward.abs()))
                    {
                        return Err(TypeError::NonSmooth {
                            point: x.to_vec(),
                            axis: i,
                            forward,
                            backward,
                        });
                    }
                    jac[(r, i)] = (fp[r] - fm[r]) / (2.0 * h);
                }
            }
        }
        Ok(jac)
    }

    /// Differential of the type with its numerical rank and kernel.
    pub fn dalpha(&self, x: &[f64]) -> Result<DAlpha, TypeError> {
        let jacobian = self.fd_jacobian(x, self.tol.fd_step, true, |y| self.simplex_head(y))?;
        let (kernel, rank) = if jacobian.nrows() == 0 {
            (DMatrix::identity(x.len(), x.len()), 0)
        } else {
            null_space(&jacobian, self.tol.rank, DALPHA_FLOOR)
        };
        Ok(DAlpha { jacobian, rank, kernel })
    }

    /// Whether `ker d alpha` and `D` together span the tangent space.
    pub fn transversality_check(&self, x: &[f64]) -> Result<bool, TypeError> {
        let da = self.dalpha(x)?;
        Ok(transversal(&da.kernel, &self.structure.frame_at(x)?, self.tol.rank))
    }

    /// Differential of `alpha` restricted to `D`, in a `g`-orthonormal frame.
    fn dalpha_on_d(&self, x: &[f64], da: &DAlpha) -> Result<DMatrix<f64>, TypeError> {
        let s = self.structure;
        Ok(&da.jacobian * s.frame_at(x)? * s.orthonormalize(x)?)
    }

    fn require_dim5(&self) -> Result<(), TypeError> {
        match self.structure.dim() {
            5 => Ok(()),
            found => Err(TypeError::Dimension { found }),
        }
    }

    pub fn secondary_type_at(&self, x: &[f64]) -> Result<BetaValue, TypeError> {
        self.secondary_type_with_gauge(x, None)
    }

    /// Secondary type with the bases of the eigenplanes replaced by random
    /// orthogonal recombinations drawn from `gauge`. The result must not
    /// depend on the seed.
    pub fn secondary_type_with_gauge(&self, x: &[f64], gauge: Option<u64>) -> Result<BetaValue, TypeError> {
        self.require_dim5()?;
        let k = self.j_matrix(x)?;
        let d = decompose(&k, self.tol.cluster).map_err(|e| self.spectral(x, e))?;
        if d.spectrum.m0 != 0 || d.spectrum.multiplicities() != [1, 1] {
            return Ok(BetaValue::undefined());
        }
        let da = self.dalpha(x)?;
        if da.rank == 0 {
            return Ok(BetaValue::undefined());
        }
        let row = self.dalpha_on_d(x, &da)?.row(0).transpose();
        beta_from_planes(&d.planes[0], &d.planes[1], &row, &self.tol, gauge).map_err(|e| with_point(e, x))
    }

    /// Differential of `(alpha, psi)`. The `psi` row is zero where the
    /// secondary type sits in a closed stratum (it is constant there).
    pub fn d_alpha_beta(&self, x: &[f64]) -> Result<DAlphaBeta, TypeError> {
        self.require_dim5()?;
        let da = self.dalpha(x)?;
        let beta = self.secondary_type_at(x)?;
        let mut jacobian = DMatrix::zeros(2, x.len());
        jacobian.row_mut(0).copy_from(&da.jacobian.row(0));
        if beta.stratum == BetaStratum::Generic {
            let dpsi = self.fd_jacobian(x, self.tol.fd_step.sqrt(), false, |y| {
                let b = self.secondary_type_at(y)?;
                match b.psi {
                    Some(psi) => Ok(vec![psi]),
                    None => Err(TypeError::NonSmooth {
                        point: x.to_vec(),
                        axis: 0,
                        forward: f64::NAN,
                        backward: f64::NAN,
                    }),
                }
            })?;
            jacobian.row_mut(1).copy_from(&dpsi.row(0));
        }
        let rank = numerical_rank(&jacobian, self.tol.rank, DBETA_FLOOR);
        Ok(DAlphaBeta { jacobian, rank })
    }

    /// Position of `ker d(alpha, beta) ∩ D` relative to the eigenplanes.
    pub fn representation_split(&self, x: &[f64]) -> Result<SplitData, TypeError> {
        self.require_dim5()?;
        let k = self.j_matrix(x)?;
        let dab = self.d_alpha_beta(x)?;
        let s = self.structure;
        let on_d = &dab.jacobian * s.frame_at(x)? * s.orthonormalize(x)?;
        split_from_data(&k, &on_d, &self.tol).map_err(|e| with_point(e, x))
    }
}

fn with_point(e: TypeError, x: &[f64]) -> TypeError {
    match e {
        TypeError::Spectral { source, .. } => TypeError::Spectral {
            point: x.to_vec(),
            source,
        },
        TypeError::KernelDimension {
            what, expected, found, ..
        } => TypeError::KernelDimension {
            point: x.to_vec(),
            what,
            expected,
            found,
        },
        other => other,
    }
}

/// Rank test: the columns of `kernel` and `frame` span the whole space.
pub fn transversal(kernel: &DMatrix<f64>, frame: &DMatrix<f64>, tol_rank: f64) -> bool {
    numerical_rank(&hstack(kernel, frame), tol_rank, 0.0) == frame.nrows()
}

/// Random element of `O(2)` acting on the columns of a 2-column basis,
/// possibly followed by swapping the columns.
fn regauge(basis: &DMatrix<f64>, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let t = rng.random::<f64>() * 2.0 * PI;
    let (s, c) = t.sin_cos();
    let flip = if rng.random::<bool>() { -1.0 } else { 1.0 };
    let mut r = DMatrix::from_row_slice(2, 2, &[c, -s * flip, s, c * flip]);
    if rng.random::<bool>() {
        r.swap_columns(0, 1);
    }
    basis * r
}

fn beta_from_planes(
    v1: &DMatrix<f64>,
    v2: &DMatrix<f64>,
    differential: &DVector<f64>,
    tol: &Tolerances,
    gauge: Option<u64>,
) -> Result<BetaValue, TypeError> {
    let norm = differential.norm();
    if norm <= DALPHA_FLOOR {
        return Err(TypeError::KernelDimension {
            point: Vec::new(),
            what: "ker dα ∩ D",
            expected: differential.len() - 1,
            found: differential.len(),
        });
    }
    let line = differential / norm;
    let (v1, v2) = match gauge {
        Some(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (regauge(v1, &mut rng), regauge(v2, &mut rng))
        }
        None => (v1.clone(), v2.clone()),
    };
    let p1 = (v1.transpose() * &line).norm();
    let p2 = (v2.transpose() * &line).norm();
    let psi = p2.atan2(p1);
    let (stratum, stabilizer) = if psi <= tol.beta_const {
        (BetaStratum::InV1, vec!["SO(2)", "Z2"])
    } else if psi >= FRAC_PI_2 - tol.beta_const {
        (BetaStratum::InV2, vec!["SO(2)", "Z2"])
    } else {
        (BetaStratum::Generic, vec!["Z2", "Z2"])
    };
    Ok(BetaValue {
        psi: Some(psi),
        stratum,
        stabilizer,
        line: Some(line),
    })
}

/// Orthonormal bases of the two eigenplanes.
type PlanePair = (DMatrix<f64>, DMatrix<f64>);

fn open_stratum_planes(k: &DMatrix<f64>, tol: &Tolerances) -> Result<Option<PlanePair>, TypeError> {
    if k.shape() != (4, 4) {
        return Err(TypeError::Dimension { found: k.nrows() + 1 });
    }
    let d = decompose(k, tol.cluster).map_err(|source| TypeError::Spectral {
        point: Vec::new(),
        source,
    })?;
    if d.spectrum.m0 != 0 || d.spectrum.multiplicities() != [1, 1] {
        return Ok(None);
    }
    Ok(Some((d.planes[0].clone(), d.planes[1].clone())))
}

/// Secondary type from pointwise data: the 4x4 matrix of `J` and the
/// differential of the first simplex coordinate restricted to `D`, both in
/// the same `g`-orthonormal frame.
pub fn secondary_type_from_data(
    k: &DMatrix<f64>,
    differential: &DVector<f64>,
    tol: &Tolerances,
    gauge: Option<u64>,
) -> Result<BetaValue, TypeError> {
    match open_stratum_planes(k, tol)? {
        Some((v1, v2)) => beta_from_planes(&v1, &v2, differential, tol, gauge),
        None => Ok(BetaValue::undefined()),
    }
}

/// Split data from pointwise data: `J` and the rows of `d(alpha, psi)`
/// restricted to `D`, in the same `g`-orthonormal frame.
pub fn split_from_data(k: &DMatrix<f64>, rows_on_d: &DMatrix<f64>, tol: &Tolerances) -> Result<SplitData, TypeError> {
    let Some((v1, v2)) = open_stratum_planes(k, tol)? else {
        return Ok(SplitData {
            w_dim: 4 - numerical_rank(rows_on_d, tol.rank, DBETA_FLOOR),
            in_v1: 0,
            in_v2: 0,
            projections_nonzero: false,
        });
    };
    let beta = beta_from_planes(&v1, &v2, &rows_on_d.row(0).transpose(), tol, None)?;
    let (w, rank) = null_space(rows_on_d, tol.rank, DBETA_FLOOR);
    Ok(SplitData {
        w_dim: 4 - rank,
        in_v1: intersection_dim(&w, &v1, DBETA_FLOOR, 0.0),
        in_v2: intersection_dim(&w, &v2, DBETA_FLOOR, 0.0),
        projections_nonzero: beta.stratum == BetaStratum::Generic,
    })
}
