//! Canonical slot numbering and symmetry-constrained iteration for one index group.

use super::{MultiIndex, ShapeError, SymmetrySpec};

/// Storage layout of one index group `(dim, rank, sym)`.
///
/// Canonical slots are numbered by walking all multi-indices in odometer order
/// (slot 0 varies fastest) and keeping only canonical representatives.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupLayout {
    dim: usize,
    rank: usize,
    sym: SymmetrySpec,
    canonical: Vec<MultiIndex>,
    // odometer-flat index -> canonical slot
    lookup: Vec<u32>,
}

impl GroupLayout {
    pub fn new(dim: usize, rank: usize, sym: SymmetrySpec) -> Result<Self, ShapeError> {
        if dim == 0 {
            return Err(ShapeError::ZeroDimension);
        }
        sym.check_rank(rank)?;
        let total = checked_pow(dim, rank).ok_or(ShapeError::TooLarge { dim, rank })?;
        let mut lookup = vec![u32::MAX; total];
        let mut canonical = Vec::new();
        let mut idx = vec![0usize; rank];
        let mut canon = vec![0usize; rank];
        for flat in 0..total {
            decode_into(flat, dim, &mut idx);
            canon.copy_from_slice(&idx);
            sym.canonicalize_in_place(&mut canon);
            if canon == idx {
                lookup[flat] = canonical.len() as u32;
                canonical.push(idx.clone());
            } else {
                // The canonical image never follows its permutations in odometer order.
                let target = lookup[flatten(&canon, dim)];
                debug_assert_ne!(target, u32::MAX);
                lookup[flat] = target;
            }
        }
        Ok(Self {
            dim,
            rank,
            sym,
            canonical,
            lookup,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn sym(&self) -> &SymmetrySpec {
        &self.sym
    }

    /// Number of independent (canonical) components.
    pub fn component_count(&self) -> usize {
        self.canonical.len()
    }

    /// Canonical representatives in slot order.
    pub fn canonical(&self) -> &[MultiIndex] {
        &self.canonical
    }

    /// Number of full multi-indices, `dim^rank`.
    pub fn full_len(&self) -> usize {
        self.lookup.len()
    }

    pub fn slot_index(&self, idx: &[usize]) -> Result<usize, ShapeError> {
        if idx.len() != self.rank {
            return Err(ShapeError::ArityMismatch {
                expected: self.rank,
                found: idx.len(),
            });
        }
        if let Some((pos, &value)) = idx.iter().enumerate().find(|(_, &v)| v >= self.dim) {
            return Err(ShapeError::IndexOutOfRange {
                position: pos,
                value,
                dim: self.dim,
            });
        }
        Ok(self.lookup[flatten(idx, self.dim)] as usize)
    }

    /// Slot for an odometer-flattened index; `flat < dim^rank`.
    pub fn slot_of_flat(&self, flat: usize) -> usize {
        self.lookup[flat] as usize
    }
}

/// Total component count of a group.
pub fn component_count(dim: usize, rank: usize, sym: &SymmetrySpec) -> Result<usize, ShapeError> {
    Ok(GroupLayout::new(dim, rank, sym.clone())?.component_count())
}

/// Slot of `idx` within the group `(dim, rank, sym)`.
pub fn slot_index(
    dim: usize,
    rank: usize,
    sym: &SymmetrySpec,
    idx: &[usize],
) -> Result<usize, ShapeError> {
    GroupLayout::new(dim, rank, sym.clone())?.slot_index(idx)
}

/// Odometer flattening with slot 0 fastest: `i0 + D*i1 + D^2*i2 + ..`.
pub fn flatten(idx: &[usize], dim: usize) -> usize {
    idx.iter().rev().fold(0, |acc, &v| acc * dim + v)
}

fn decode_into(mut flat: usize, dim: usize, out: &mut [usize]) {
    for v in out.iter_mut() {
        *v = flat % dim;
        flat /= dim;
    }
}

fn checked_pow(base: usize, exp: usize) -> Option<usize> {
    let total = base.checked_pow(u32::try_from(exp).ok()?)?;
    // Keeps lookup tables bounded; real tensors never approach this.
    (total <= 1 << 24).then_some(total)
}

/// Visits every index assignment of a loop nest in which the highest slot is
/// outermost and slot 0 innermost. Slot `p` runs from the current value of its
/// lower-bound partner `q` (if `(p, q)` is an inequality, else 0) up to `dims[p] - 1`.
pub fn iterate_with<F>(dims: &[usize], sym: &SymmetrySpec, mut visit: F)
where
    F: FnMut(&[usize]),
{
    let rank = dims.len();
    let bounds: Vec<Option<usize>> = (0..rank).map(|p| sym.lower_bound_of(p)).collect();
    let mut idx = vec![0usize; rank];
    if rank == 0 {
        visit(&idx);
        return;
    }
    fn rec<F: FnMut(&[usize])>(
        slot: usize,
        dims: &[usize],
        bounds: &[Option<usize>],
        idx: &mut Vec<usize>,
        visit: &mut F,
    ) {
        let lo = bounds[slot].map_or(0, |q| idx[q]);
        for v in lo..dims[slot] {
            idx[slot] = v;
            if slot == 0 {
                visit(idx);
            } else {
                rec(slot - 1, dims, bounds, idx, visit);
            }
        }
    }
    rec(rank - 1, dims, &bounds, &mut idx, &mut visit);
}

/// Collects [`iterate_with`] into a vector.
pub fn iterate(dims: &[usize], sym: &SymmetrySpec) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    iterate_with(dims, sym, |idx| out.push(idx.to_vec()));
    out
}
