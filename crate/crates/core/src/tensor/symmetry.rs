//! Index symmetries expressed as ordering constraints between slot positions.

use std::fmt;

use super::ShapeError;

/// A multi-index into one index group: one value per slot.
pub type MultiIndex = Vec<usize>;

/// A set of inequalities `idx[pos1] >= idx[pos2]` (with `pos1 < pos2`) that
/// select the canonical representative of each symmetric component.
///
/// Positions joined by inequalities form symmetry classes. The stored pairs are
/// normalized to chain form: every class with sorted positions `c0 < c1 < .. < ck`
/// is kept as `(c0,c1), (c1,c2), ..`. `{(0,1),(0,2)}` and `{(0,1),(1,2)}` therefore
/// compare equal, and each position has at most one lower-bound partner.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SymmetrySpec {
    pairs: Vec<(usize, usize)>,
}

impl SymmetrySpec {
    pub fn none() -> Self {
        Self::default()
    }

    /// Builds a spec from inequality pairs. Every pair must satisfy
    /// `pos1 < pos2` and no pair may repeat.
    pub fn new<I>(pairs: I) -> Result<Self, ShapeError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut raw: Vec<(usize, usize)> = pairs.into_iter().collect();
        for &(p, q) in &raw {
            if p >= q {
                return Err(ShapeError::InvalidInequality { pos1: p, pos2: q });
            }
        }
        raw.sort_unstable();
        if let Some(w) = raw.windows(2).find(|w| w[0] == w[1]) {
            return Err(ShapeError::DuplicateInequality {
                pos1: w[0].0,
                pos2: w[0].1,
            });
        }
        Ok(Self::from_classes(classes_of(&raw)))
    }

    /// All `rank` slots in one class.
    pub fn fully_symmetric(rank: usize) -> Self {
        if rank < 2 {
            return Self::none();
        }
        Self::from_classes(vec![(0..rank).collect()])
    }

    fn from_classes(classes: Vec<Vec<usize>>) -> Self {
        let mut pairs = Vec::new();
        for class in classes {
            pairs.extend(class.windows(2).map(|w| (w[0], w[1])));
        }
        pairs.sort_unstable();
        Self { pairs }
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Highest slot position mentioned, if any.
    pub fn max_position(&self) -> Option<usize> {
        self.pairs.iter().map(|&(_, q)| q).max()
    }

    pub fn check_rank(&self, rank: usize) -> Result<(), ShapeError> {
        match self.max_position() {
            Some(p) if p >= rank => Err(ShapeError::PositionOutOfRange { position: p, rank }),
            _ => Ok(()),
        }
    }

    /// Symmetry classes with at least two members, each sorted ascending.
    pub fn classes(&self) -> Vec<Vec<usize>> {
        classes_of(&self.pairs)
    }

    /// The position whose value bounds `pos` from below, if any.
    pub fn lower_bound_of(&self, pos: usize) -> Option<usize> {
        self.pairs.iter().find(|&&(p, _)| p == pos).map(|&(_, q)| q)
    }

    /// Restricts the spec to the positions selected by `keep` and renumbers them
    /// densely in increasing order. Classes keep whatever members survive.
    pub fn restrict(&self, keep: &[bool]) -> SymmetrySpec {
        let mut renumber = vec![usize::MAX; keep.len()];
        let mut next = 0;
        for (pos, &k) in keep.iter().enumerate() {
            if k {
                renumber[pos] = next;
                next += 1;
            }
        }
        let classes = self
            .classes()
            .into_iter()
            .map(|class| {
                class
                    .into_iter()
                    .filter(|&p| p < keep.len() && keep[p])
                    .map(|p| renumber[p])
                    .collect::<Vec<_>>()
            })
            .filter(|c| c.len() > 1)
            .collect();
        Self::from_classes(classes)
    }

    /// Like [`restrict`](Self::restrict) but keeps the original position numbers.
    pub fn restrict_in_place(&self, keep: &[bool]) -> SymmetrySpec {
        let classes = self
            .classes()
            .into_iter()
            .map(|class| {
                class
                    .into_iter()
                    .filter(|&p| p < keep.len() && keep[p])
                    .collect::<Vec<_>>()
            })
            .filter(|c| c.len() > 1)
            .collect();
        Self::from_classes(classes)
    }

    /// Maps `idx` to its canonical representative: values are sorted in
    /// non-increasing order within every symmetry class; other slots are untouched.
    pub fn canonicalize(&self, idx: &[usize]) -> Result<MultiIndex, ShapeError> {
        self.check_rank(idx.len())?;
        let mut out = idx.to_vec();
        self.canonicalize_in_place(&mut out);
        Ok(out)
    }

    /// Unchecked variant of [`canonicalize`](Self::canonicalize); positions must be in range.
    pub(crate) fn canonicalize_in_place(&self, idx: &mut [usize]) {
        // Chain pairs are adjacent within a class, so bubbling over them sorts
        // each class in descending order.
        let mut swapped = true;
        while swapped {
            swapped = false;
            for &(p, q) in &self.pairs {
                if idx[p] < idx[q] {
                    idx.swap(p, q);
                    swapped = true;
                }
            }
        }
    }

    pub fn is_canonical(&self, idx: &[usize]) -> bool {
        self.pairs.iter().all(|&(p, q)| idx[p] >= idx[q])
    }
}

impl fmt::Display for SymmetrySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (n, (p, q)) in self.pairs.iter().enumerate() {
            if n > 0 {
                f.write_str(",")?;
            }
            write!(f, "({p},{q})")?;
        }
        f.write_str("]")
    }
}

fn classes_of(pairs: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let size = pairs.iter().map(|&(_, q)| q + 1).max().unwrap_or(0);
    let mut parent: Vec<usize> = (0..size).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &(p, q) in pairs {
        let (rp, rq) = (find(&mut parent, p), find(&mut parent, q));
        if rp != rq {
            parent[rp.max(rq)] = rp.min(rq);
        }
    }
    let mut in_pair = vec![false; size];
    for &(p, q) in pairs {
        in_pair[p] = true;
        in_pair[q] = true;
    }
    let mut classes: Vec<Vec<usize>> = Vec::new();
    let mut root_class = vec![usize::MAX; size];
    for pos in 0..size {
        if !in_pair[pos] {
            continue;
        }
        let r = find(&mut parent, pos);
        if root_class[r] == usize::MAX {
            root_class[r] = classes.len();
            classes.push(Vec::new());
        }
        classes[root_class[r]].push(pos);
    }
    classes
}
