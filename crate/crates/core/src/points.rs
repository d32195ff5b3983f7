use crate::error::{Error, Result};

/// An ordered set of points in `[0,1]^d` (or `R^d`), stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
}

impl PointSet {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("point dimension must be at least 1".into()));
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(Error::InvalidInput(format!(
                "{} coordinates do not split into points of dimension {dim}",
                coords.len()
            )));
        }
        Ok(Self { dim, coords })
    }

    pub fn empty(dim: usize) -> Self {
        Self { dim: dim.max(1), coords: Vec::new() }
    }

    /// One-dimensional point set from scalar values.
    pub fn from_scalars(values: &[f64]) -> Self {
        Self { dim: 1, coords: values.to_vec() }
    }

    pub fn from_rows(dim: usize, rows: &[Vec<f64>]) -> Result<Self> {
        let mut coords = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: row.len() });
            }
            coords.extend_from_slice(row);
        }
        Self::new(dim, coords)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn push(&mut self, point: &[f64]) -> Result<()> {
        if point.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: point.len() });
        }
        self.coords.extend_from_slice(point);
        Ok(())
    }

    /// Points at the given indices, in the given order.
    pub fn select(&self, indices: &[usize]) -> Self {
        let mut coords = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            coords.extend_from_slice(self.point(i));
        }
        Self { dim: self.dim, coords }
    }

    /// Contiguous sub-range of points.
    pub fn slice(&self, start: usize, end: usize) -> Self {
        Self { dim: self.dim, coords: self.coords[start * self.dim..end * self.dim].to_vec() }
    }

    /// `self` followed by `other`.
    pub fn concat(&self, other: &PointSet) -> Result<Self> {
        if other.dim != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        let mut coords = self.coords.clone();
        coords.extend_from_slice(&other.coords);
        Ok(Self { dim: self.dim, coords })
    }

    pub fn check_unit_cube(&self) -> Result<()> {
        match self.coords.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            Some(&value) => Err(Error::Domain { value }),
            None => Ok(()),
        }
    }
}
