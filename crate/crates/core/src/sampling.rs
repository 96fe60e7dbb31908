//! Sample sets over an axis-aligned box: regular grids and seeded uniform
//! random draws.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SamplingError {
    #[error("box bounds have lengths {lower} and {upper}, expected {dim}")]
    Length { lower: usize, upper: usize, dim: usize },
    #[error("axis {axis}: bounds must be finite with lower < upper, got [{lower}, {upper}]")]
    Bounds { axis: usize, lower: f64, upper: f64 },
    #[error("grid needs {expected} counts, got {found}")]
    Counts { expected: usize, found: usize },
    #[error("grid count on axis {axis} must be at least 1")]
    EmptyAxis { axis: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl SampleBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, SamplingError> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(SamplingError::Length {
                lower: lower.len(),
                upper: upper.len(),
                dim: lower.len().max(upper.len()),
            });
        }
        for (axis, (&lo, &hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(SamplingError::Bounds {
                    axis,
                    lower: lo,
                    upper: hi,
                });
            }
        }
        Ok(SampleBox { lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| lo <= v && v <= hi)
    }

    /// Values along one axis: the midpoint for a count of one, otherwise
    /// `count` evenly spaced values including both bounds.
    pub fn axis_values(&self, axis: usize, count: usize) -> Vec<f64> {
        let (lo, hi) = (self.lower[axis], self.upper[axis]);
        match count {
            0 => Vec::new(),
            1 => vec![lo + 0.5 * (hi - lo)],
            n => (0..n)
                .map(|i| {
                    if i == n - 1 {
                        hi
                    } else {
                        lo + (hi - lo) * i as f64 / (n - 1) as f64
                    }
                })
                .collect(),
        }
    }

    /// Tensor grid, first axis varying slowest.
    pub fn grid(&self, counts: &[usize]) -> Result<Vec<Vec<f64>>, SamplingError> {
        if counts.len() != self.dim() {
            return Err(SamplingError::Counts {
                expected: self.dim(),
                found: counts.len(),
            });
        }
        if let Some(axis) = counts.iter().position(|&c| c == 0) {
            return Err(SamplingError::EmptyAxis { axis });
        }
        let axes: Vec<Vec<f64>> = counts
            .iter()
            .enumerate()
            .map(|(a, &c)| self.axis_values(a, c))
            .collect();
        let mut points = vec![Vec::with_capacity(self.dim())];
        for values in &axes {
            let mut next = Vec::with_capacity(points.len() * values.len());
            for p in &points {
                for &v in values {
                    let mut q = p.clone();
                    q.push(v);
                    next.push(q);
                }
            }
            points = next;
        }
        Ok(points)
    }

    /// `count` points drawn uniformly from the box with a ChaCha8 stream
    /// seeded by `seed`; reproducible across runs.
    pub fn random(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| {
                self.lower
                    .iter()
                    .zip(&self.upper)
                    .map(|(lo, hi)| lo + (hi - lo) * rng.random::<f64>())
                    .collect()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_includes_bounds_and_midpoints() {
        let b = SampleBox::new(vec![0.0, 0.5], vec![1.0, 1.5]).unwrap();
        let g = b.grid(&[1, 11]).unwrap();
        assert_eq!(g.len(), 11);
        assert!(g.iter().all(|p| p[0] == 0.5));
        assert_eq!(g[0][1], 0.5);
        assert_eq!(g[5][1], 1.0);
        assert_eq!(g[10][1], 1.5);
    }

    #[test]
    fn grid_order_first_axis_slowest() {
        let b = SampleBox::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let g = b.grid(&[2, 3]).unwrap();
        assert_eq!(g[0], vec![0.0, 0.0]);
        assert_eq!(g[1], vec![0.0, 0.5]);
        assert_eq!(g[3], vec![1.0, 0.0]);
    }

    #[test]
    fn random_is_reproducible_and_inside() {
        let b = SampleBox::new(vec![-1.0, 2.0], vec![1.0, 3.0]).unwrap();
        let a = b.random(50, 7);
        assert_eq!(a, b.random(50, 7));
        assert_ne!(a, b.random(50, 8));
        assert!(a.iter().all(|p| b.contains(p)));
    }

    #[test]
    fn rejects_bad_boxes() {
        assert!(SampleBox::new(vec![1.0], vec![1.0]).is_err());
        assert!(SampleBox::new(vec![0.0, 0.0], vec![1.0]).is_err());
        assert!(SampleBox::new(vec![f64::NAN], vec![1.0]).is_err());
        let b = SampleBox::new(vec![0.0], vec![1.0]).unwrap();
        assert!(b.grid(&[0]).is_err());
        assert!(b.grid(&[1, 1]).is_err());
    }
}
