use ndarray::Array2;

use crate::beam::{Axis, Grid2D};
use crate::error::{Error, Result};
use crate::exec::Execution;

/// Samples of a scalar field on a [`Grid2D`]; `values[[j, i]]` sits at
/// `(grid.x(i), grid.y(j))`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldMap<T> {
    grid: Grid2D,
    values: Array2<T>,
}

impl<T> FieldMap<T> {
    pub fn new(grid: Grid2D, values: Array2<T>) -> Result<Self> {
        if values.dim() != (grid.ny, grid.nx) {
            return Err(Error::GridMismatch);
        }
        Ok(FieldMap { grid, values })
    }

    /// Build from `f(row, col)`.
    pub fn from_fn<F>(exec: Execution, grid: Grid2D, f: F) -> Self
    where
        T: Send,
        F: Fn(usize, usize) -> T + Sync + Send,
    {
        let data = exec.fill(grid.ny, grid.nx, f);
        let values =
            Array2::from_shape_vec((grid.ny, grid.nx), data).expect("fill returns ny*nx samples");
        FieldMap { grid, values }
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn values(&self) -> &Array2<T> {
        &self.values
    }

    pub fn into_values(self) -> Array2<T> {
        self.values
    }

    pub fn map<U, F>(&self, exec: Execution, f: F) -> FieldMap<U>
    where
        T: Sync,
        U: Send,
        F: Fn(&T) -> U + Sync + Send,
    {
        let v = &self.values;
        FieldMap::from_fn(exec, self.grid, |j, i| f(&v[[j, i]]))
    }
}

impl<T: Copy> FieldMap<T> {
    pub fn get(&self, row: usize, col: usize) -> T {
        self.values[[row, col]]
    }
}

impl FieldMap<f64> {
    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// max |value|, scanned in row-major order.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Samples along the line through the grid centre parallel to `axis`
    /// (y = centre row for `Axis::X`).
    pub fn central_cross_section(&self, axis: Axis) -> Vec<f64> {
        match axis {
            Axis::X => self.values.row(self.grid.ny / 2).to_vec(),
            Axis::Y => self.values.column(self.grid.nx / 2).to_vec(),
        }
    }
}
