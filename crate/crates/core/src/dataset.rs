use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledPoint {
    pub x: Vec<f64>,
    pub y: f64,
}

impl LabeledPoint {
    pub fn new(x: Vec<f64>, y: f64) -> Self {
        LabeledPoint { x, y }
    }
}

/// An ordered, nonempty list of points sharing one dimension.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dataset {
    points: Vec<LabeledPoint>,
    dim: usize,
}

impl Dataset {
    pub fn new(points: Vec<LabeledPoint>) -> Result<Self> {
        let first = points.first().ok_or(Error::EmptyDataset)?;
        let dim = first.x.len();
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        for (i, p) in points.iter().enumerate() {
            if p.x.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: p.x.len(),
                });
            }
            if !p.y.is_finite() || p.x.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { index: i });
            }
        }
        Ok(Dataset { points, dim })
    }

    pub fn from_rows(xs: &[Vec<f64>], ys: &[f64]) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::DimensionMismatch {
                expected: xs.len(),
                found: ys.len(),
            });
        }
        Dataset::new(
            xs.iter()
                .zip(ys)
                .map(|(x, y)| LabeledPoint::new(x.clone(), *y))
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    /// Always false; kept for API symmetry with `len`.
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[LabeledPoint] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &LabeledPoint {
        &self.points[i]
    }

    pub fn inputs(&self) -> Vec<Vec<f64>> {
        self.points.iter().map(|p| p.x.clone()).collect()
    }

    pub fn labels(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.y).collect()
    }

    pub fn into_points(self) -> Vec<LabeledPoint> {
        self.points
    }

    /// Errors unless every label is exactly 0 or 1.
    pub fn check_binary(&self) -> Result<()> {
        for (i, p) in self.points.iter().enumerate() {
            if p.y != 0.0 && p.y != 1.0 {
                return Err(Error::NonBinaryLabel { index: i, label: p.y });
            }
        }
        Ok(())
    }

    pub fn is_binary(&self) -> bool {
        self.check_binary().is_ok()
    }

    /// Indices with label 1.
    pub fn s1(&self) -> Vec<usize> {
        self.indices_with(|y| y == 1.0)
    }

    /// Indices with label 0.
    pub fn s0(&self) -> Vec<usize> {
        self.indices_with(|y| y == 0.0)
    }

    fn indices_with(&self, f: impl Fn(f64) -> bool) -> Vec<usize> {
        self.points
            .iter()
            .enumerate()
            .filter(|(_, p)| f(p.y))
            .map(|(i, _)| i)
            .collect()
    }

    /// Keeps the points at `idx`, in that order.
    pub fn subset(&self, idx: &[usize]) -> Result<Dataset> {
        Dataset::new(idx.iter().map(|&i| self.points[i].clone()).collect())
    }
}

impl<'de> Deserialize<'de> for Dataset {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            points: Vec<LabeledPoint>,
        }
        let raw = Raw::deserialize(d)?;
        Dataset::new(raw.points).map_err(serde::de::Error::custom)
    }
}
