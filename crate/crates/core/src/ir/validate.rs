use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use super::free::{free_indices, names};
use super::{AssignOp, Declarations, Declared, Expr, IndexTerm, IndexVar, IrError, Statement, TensorLeaf};
use crate::tensor::{iterate_with, SymmetrySpec, TensorShape};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValidationError {
    #[error("`{name}` is not declared")]
    Undeclared { name: String },
    #[error("`{name}` is not a {expected}")]
    WrongKind { name: String, expected: &'static str },
    #[error("`{name}` takes {expected} {group} indices, found {found}")]
    Arity {
        name: String,
        group: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("repeated index `{var}` on the left-hand side (CheckUniqueIndices)")]
    RepeatedIndex { var: String },
    #[error("{0} (CheckIndices)")]
    Expression(IrError),
    #[error("left-hand side indices {{{}}} do not match right-hand side indices {{{}}} (CheckIndices)", lhs.join(","), rhs.join(","))]
    IndexMismatch { lhs: Vec<String>, rhs: Vec<String> },
    #[error("declared symmetry {declared} on `{name}` does not match the field symmetry {expected} (CheckSymmetries)")]
    SymmetryMismatch {
        name: String,
        declared: SymmetrySpec,
        expected: SymmetrySpec,
    },
    #[error("symmetric slots {pos1} and {pos2} of `{name}` must use indices with equal offsets (CheckSymmetries)")]
    SymmetricOffsets { name: String, pos1: usize, pos2: usize },
    #[error("index `{term}` at slot {slot} of `{name}` reaches {max}, beyond dimension {dim} (CheckExtents)")]
    OutOfBounds {
        name: String,
        slot: usize,
        term: String,
        max: usize,
        dim: usize,
    },
    #[error("{context} must be scalar-valued, found free indices {{{}}}", found.join(","))]
    NonScalar {
        context: &'static str,
        found: Vec<String>,
    },
}

impl ValidationError {
    /// Stable short code for the check that failed.
    pub fn code(&self) -> &'static str {
        match self {
            ValidationError::Undeclared { .. }
            | ValidationError::WrongKind { .. }
            | ValidationError::Arity { .. } => "declaration",
            ValidationError::RepeatedIndex { .. } => "unique-indices",
            ValidationError::Expression(_) | ValidationError::IndexMismatch { .. } => "index-match",
            ValidationError::SymmetryMismatch { .. } | ValidationError::SymmetricOffsets { .. } => "symmetry",
            ValidationError::OutOfBounds { .. } => "index-bounds",
            ValidationError::NonScalar { .. } => "scalar-operand",
        }
    }
}

/// The loop nest over a left-hand side's free indices.
///
/// `vars` are in increasing slot order (outer group first); `sym` constrains
/// positions of `vars` and is the field symmetry restricted to index-bound slots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LhsLoops {
    pub vars: Vec<IndexVar>,
    /// Slot of each var within the concatenated outer+inner index list.
    pub slots: Vec<usize>,
    pub sym: SymmetrySpec,
}

impl LhsLoops {
    pub fn dims(&self) -> Vec<usize> {
        self.vars.iter().map(|v| v.dim).collect()
    }

    /// Position in `vars` whose current value is the lower bound of `pos`.
    pub fn lower_bound(&self, pos: usize) -> Option<usize> {
        self.sym.lower_bound_of(pos)
    }

    /// Visits every loop assignment in execution order.
    pub fn for_each(&self, visit: impl FnMut(&[usize])) {
        iterate_with(&self.dims(), &self.sym, visit);
    }

    pub fn assignments(&self) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        self.for_each(|a| out.push(a.to_vec()));
        out
    }
}

/// A statement that passed [`validate_statement`], with the shapes of every
/// field it references.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckedStatement {
    statement: Statement,
    shapes: BTreeMap<String, TensorShape>,
    scalars: BTreeSet<String>,
    loops: LhsLoops,
}

impl CheckedStatement {
    pub fn statement(&self) -> &Statement {
        &self.statement
    }

    pub fn lhs(&self) -> &TensorLeaf {
        &self.statement.lhs
    }

    pub fn op(&self) -> AssignOp {
        self.statement.op
    }

    pub fn rhs(&self) -> &Expr {
        &self.statement.rhs
    }

    pub fn shape(&self, name: &str) -> Option<&TensorShape> {
        self.shapes.get(name)
    }

    pub fn lhs_shape(&self) -> &TensorShape {
        &self.shapes[&self.statement.lhs.name]
    }

    pub fn shapes(&self) -> &BTreeMap<String, TensorShape> {
        &self.shapes
    }

    pub fn scalars(&self) -> &BTreeSet<String> {
        &self.scalars
    }

    pub fn loops(&self) -> &LhsLoops {
        &self.loops
    }
}

/// Checks a statement against declarations, in order: left-hand indices are
/// distinct; free indices agree across the assignment (a scalar right-hand side
/// broadcasts); the declared symmetry matches the field's on index-bound slots;
/// every index stays within its field's dimension; divisors, square-root
/// arguments and the right-hand side of `*=`/`/=` are scalar-valued.
pub fn validate_statement(stmt: &Statement, decls: &Declarations) -> Result<CheckedStatement, ValidationError> {
    let mut shapes = BTreeMap::new();
    let mut scalars = BTreeSet::new();
    collect_leaf(&stmt.lhs, decls, &mut shapes)?;
    let mut structural = Ok(());
    stmt.rhs.walk(&mut |e| {
        if structural.is_err() {
            return;
        }
        structural = match e {
            Expr::Leaf(leaf) => collect_leaf(leaf, decls, &mut shapes),
            Expr::Field(name) => match decls.get(name) {
                Some(Declared::Scalar) => {
                    scalars.insert(name.clone());
                    Ok(())
                }
                Some(_) => Err(ValidationError::WrongKind {
                    name: name.clone(),
                    expected: "scalar field",
                }),
                None => Err(ValidationError::Undeclared { name: name.clone() }),
            },
            _ => Ok(()),
        };
    });
    structural?;

    // (1) unique left-hand indices
    let mut seen = BTreeSet::new();
    for var in stmt.lhs.terms().filter_map(IndexTerm::as_var) {
        if !seen.insert(var.name.as_str()) {
            return Err(ValidationError::RepeatedIndex { var: var.name.clone() });
        }
    }

    // (2) free indices
    let lhs_free: BTreeSet<IndexVar> = stmt.lhs.terms().filter_map(|t| t.as_var().cloned()).collect();
    let rhs_free = free_indices(&stmt.rhs).map_err(ValidationError::Expression)?;
    if !rhs_free.is_empty() && rhs_free != lhs_free {
        return Err(ValidationError::IndexMismatch {
            lhs: names(&lhs_free),
            rhs: names(&rhs_free),
        });
    }

    // (3) symmetry
    let lhs_shape = &shapes[&stmt.lhs.name];
    check_symmetry(&stmt.lhs, lhs_shape)?;

    // (4) extents
    check_bounds(&stmt.lhs, lhs_shape)?;
    let mut bounds = Ok(());
    stmt.rhs.walk(&mut |e| {
        if let (Ok(()), Expr::Leaf(leaf)) = (&bounds, e) {
            bounds = check_bounds(leaf, &shapes[&leaf.name]);
        }
    });
    bounds?;

    // (5) scalar operands
    check_scalars(&stmt.rhs)?;
    if matches!(stmt.op, AssignOp::Mul | AssignOp::Div) && !rhs_free.is_empty() {
        return Err(ValidationError::NonScalar {
            context: "right-hand side of *= and /=",
            found: names(&rhs_free),
        });
    }

    let loops = lhs_loops(&stmt.lhs, lhs_shape);
    Ok(CheckedStatement {
        statement: stmt.clone(),
        shapes,
        scalars,
        loops,
    })
}

fn collect_leaf(
    leaf: &TensorLeaf,
    decls: &Declarations,
    shapes: &mut BTreeMap<String, TensorShape>,
) -> Result<(), ValidationError> {
    let shape = match decls.get(&leaf.name) {
        Some(Declared::Tensor(shape)) => shape,
        Some(_) => {
            return Err(ValidationError::WrongKind {
                name: leaf.name.clone(),
                expected: "tensor",
            })
        }
        None => return Err(ValidationError::Undeclared { name: leaf.name.clone() }),
    };
    for (group, expected, found) in [
        ("outer", shape.outer_rank, leaf.outer.len()),
        ("inner", shape.inner_rank, leaf.inner.len()),
    ] {
        if expected != found {
            return Err(ValidationError::Arity {
                name: leaf.name.clone(),
                group,
                expected,
                found,
            });
        }
    }
    shapes.insert(leaf.name.clone(), shape.clone());
    Ok(())
}

fn var_mask(terms: &[IndexTerm]) -> Vec<bool> {
    terms.iter().map(|t| t.as_var().is_some()).collect()
}

fn check_symmetry(lhs: &TensorLeaf, shape: &TensorShape) -> Result<(), ValidationError> {
    let declared = lhs.declared_sym.clone().unwrap_or_default();
    let mask = var_mask(&lhs.outer);
    let expected = shape.outer_sym.restrict_in_place(&mask);
    if declared.check_rank(shape.outer_rank).is_err() || declared.restrict_in_place(&mask) != expected {
        return Err(ValidationError::SymmetryMismatch {
            name: lhs.name.clone(),
            declared,
            expected: shape.outer_sym.clone(),
        });
    }
    let terms: Vec<&IndexTerm> = lhs.terms().collect();
    for &(p, q) in combined_sym(lhs, shape).pairs() {
        let offset = |t: &IndexTerm| match t {
            IndexTerm::Var { offset, .. } => *offset,
            IndexTerm::Fixed(_) => unreachable!("restricted to index-bound slots"),
        };
        if offset(terms[p]) != offset(terms[q]) {
            return Err(ValidationError::SymmetricOffsets {
                name: lhs.name.clone(),
                pos1: p,
                pos2: q,
            });
        }
    }
    Ok(())
}

/// Field symmetry over the concatenated outer+inner slots, restricted to
/// index-bound slots (positions kept).
fn combined_sym(lhs: &TensorLeaf, shape: &TensorShape) -> SymmetrySpec {
    let outer = shape.outer_sym.restrict_in_place(&var_mask(&lhs.outer));
    let inner = shape.inner_sym.restrict_in_place(&var_mask(&lhs.inner));
    let pairs = outer
        .pairs()
        .iter()
        .copied()
        .chain(inner.pairs().iter().map(|&(p, q)| (p + shape.outer_rank, q + shape.outer_rank)));
    SymmetrySpec::new(pairs).expect("pairs of two valid specs over disjoint slots")
}

pub(crate) fn lhs_loops(lhs: &TensorLeaf, shape: &TensorShape) -> LhsLoops {
    let mask: Vec<bool> = lhs.terms().map(|t| t.as_var().is_some()).collect();
    let mut vars = Vec::new();
    let mut slots = Vec::new();
    for (slot, term) in lhs.terms().enumerate() {
        if let Some(v) = term.as_var() {
            vars.push(v.clone());
            slots.push(slot);
        }
    }
    LhsLoops {
        vars,
        slots,
        sym: combined_sym(lhs, shape).restrict(&mask),
    }
}

fn check_bounds(leaf: &TensorLeaf, shape: &TensorShape) -> Result<(), ValidationError> {
    for (slot, term) in leaf.terms().enumerate() {
        let max = term.max_value();
        if max >= shape.dim {
            let rendered = match term {
                IndexTerm::Fixed(v) => v.to_string(),
                IndexTerm::Var { var, offset: 0 } => var.name.clone(),
                IndexTerm::Var { var, offset } => format!("{}+{}", var.name, offset),
            };
            return Err(ValidationError::OutOfBounds {
                name: leaf.name.clone(),
                slot,
                term: rendered,
                max,
                dim: shape.dim,
            });
        }
    }
    Ok(())
}

fn check_scalars(e: &Expr) -> Result<(), ValidationError> {
    let mut result = Ok(());
    e.walk(&mut |node| {
        if result.is_err() {
            return;
        }
        let (context, operand) = match node {
            Expr::Div(_, r) => ("divisor", r),
            Expr::Sqrt(a) => ("sqrt argument", a),
            _ => return,
        };
        match free_indices(operand) {
            Ok(set) if set.is_empty() => {}
            Ok(set) => {
                result = Err(ValidationError::NonScalar {
                    context,
                    found: names(&set),
                })
            }
            Err(e) => result = Err(ValidationError::Expression(e)),
        }
    });
    result
}
