use std::sync::Arc;

use super::{GroupLayout, ShapeError, SymmetrySpec};

/// Dimension, ranks and symmetries of a (possibly nested) tensor field.
///
/// The inner group models tensors of tensors such as `dg(i,j)(k)`; `inner_rank == 0`
/// means there is no inner group. Every slot of both groups shares `dim`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TensorShape {
    pub dim: usize,
    pub outer_rank: usize,
    pub outer_sym: SymmetrySpec,
    pub inner_rank: usize,
    pub inner_sym: SymmetrySpec,
}

impl TensorShape {
    pub fn new(
        dim: usize,
        outer_rank: usize,
        outer_sym: SymmetrySpec,
        inner_rank: usize,
        inner_sym: SymmetrySpec,
    ) -> Result<Self, ShapeError> {
        if dim == 0 {
            return Err(ShapeError::ZeroDimension);
        }
        outer_sym.check_rank(outer_rank)?;
        inner_sym.check_rank(inner_rank)?;
        Ok(Self {
            dim,
            outer_rank,
            outer_sym,
            inner_rank,
            inner_sym,
        })
    }

    /// A single-group tensor.
    pub fn simple(dim: usize, rank: usize, sym: SymmetrySpec) -> Result<Self, ShapeError> {
        Self::new(dim, rank, sym, 0, SymmetrySpec::none())
    }

    pub fn total_rank(&self) -> usize {
        self.outer_rank + self.inner_rank
    }

    pub fn layouts(&self) -> Result<(GroupLayout, GroupLayout), ShapeError> {
        Ok((
            GroupLayout::new(self.dim, self.outer_rank, self.outer_sym.clone())?,
            GroupLayout::new(self.dim, self.inner_rank, self.inner_sym.clone())?,
        ))
    }

    pub fn component_count(&self) -> Result<usize, ShapeError> {
        let (o, i) = self.layouts()?;
        Ok(o.component_count() * i.component_count())
    }
}

/// A named tensor on a grid of `N` points: one array of `N` doubles per
/// canonical component, ordered outer slot major, inner slot minor.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorField {
    name: String,
    shape: TensorShape,
    layouts: Arc<(GroupLayout, GroupLayout)>,
    gridsize: usize,
    data: Vec<Vec<f64>>,
}

impl TensorField {
    /// A zero-filled field.
    pub fn new(name: impl Into<String>, shape: TensorShape, gridsize: usize) -> Result<Self, ShapeError> {
        let layouts = shape.layouts()?;
        let count = layouts.0.component_count() * layouts.1.component_count();
        Ok(Self {
            name: name.into(),
            shape,
            layouts: Arc::new(layouts),
            gridsize,
            data: vec![vec![0.0; gridsize]; count],
        })
    }

    /// Builds a field from per-slot arrays, which must all have the same length.
    pub fn from_components(
        name: impl Into<String>,
        shape: TensorShape,
        data: Vec<Vec<f64>>,
    ) -> Result<Self, ShapeError> {
        let mut field = Self::new(name, shape, 0)?;
        if data.len() != field.data.len() {
            return Err(ShapeError::ComponentCount {
                expected: field.data.len(),
                found: data.len(),
            });
        }
        let n = data.first().map_or(0, Vec::len);
        if let Some(bad) = data.iter().find(|c| c.len() != n) {
            return Err(ShapeError::GridsizeMismatch {
                expected: n,
                found: bad.len(),
            });
        }
        field.gridsize = n;
        field.data = data;
        Ok(field)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn shape(&self) -> &TensorShape {
        &self.shape
    }

    pub fn outer_layout(&self) -> &GroupLayout {
        &self.layouts.0
    }

    pub fn inner_layout(&self) -> &GroupLayout {
        &self.layouts.1
    }

    pub fn gridsize(&self) -> usize {
        self.gridsize
    }

    pub fn component_count(&self) -> usize {
        self.data.len()
    }

    /// Storage slot for an (outer, inner) multi-index, resolving symmetries.
    pub fn slot(&self, outer: &[usize], inner: &[usize]) -> Result<usize, ShapeError> {
        let o = self.layouts.0.slot_index(outer)?;
        let i = self.layouts.1.slot_index(inner)?;
        Ok(o * self.layouts.1.component_count() + i)
    }

    pub fn component(&self, outer: &[usize], inner: &[usize]) -> Result<&[f64], ShapeError> {
        Ok(&self.data[self.slot(outer, inner)?])
    }

    pub fn component_mut(&mut self, outer: &[usize], inner: &[usize]) -> Result<&mut [f64], ShapeError> {
        let slot = self.slot(outer, inner)?;
        Ok(&mut self.data[slot])
    }

    pub fn set_component(&mut self, outer: &[usize], inner: &[usize], values: &[f64]) -> Result<(), ShapeError> {
        if values.len() != self.gridsize {
            return Err(ShapeError::GridsizeMismatch {
                expected: self.gridsize,
                found: values.len(),
            });
        }
        self.component_mut(outer, inner)?.copy_from_slice(values);
        Ok(())
    }

    pub fn slot_data(&self, slot: usize) -> &[f64] {
        &self.data[slot]
    }

    pub fn slot_data_mut(&mut self, slot: usize) -> &mut [f64] {
        &mut self.data[slot]
    }

    /// All component arrays in slot order.
    pub fn components(&self) -> &[Vec<f64>] {
        &self.data
    }

    /// Changes the gridsize; existing values are kept up to the new length and
    /// new points are zero.
    pub fn resize(&mut self, gridsize: usize) {
        for c in &mut self.data {
            c.resize(gridsize, 0.0);
        }
        self.gridsize = gridsize;
    }
}

/// A named scalar on the grid: one double per point.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub name: String,
    pub data: Vec<f64>,
}

impl ScalarField {
    pub fn new(name: impl Into<String>, data: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            data,
        }
    }

    pub fn gridsize(&self) -> usize {
        self.data.len()
    }
}
