use std::collections::BTreeSet;

use super::{Expr, IndexVar, IrError};

/// Free index set of an expression.
///
/// Products take the union of their operands (a repeated index is a
/// component-wise product, never an implicit sum). Sums and differences require
/// both operands to carry the same set. `Sum(v, body)` removes `v`.
pub fn free_indices(e: &Expr) -> Result<BTreeSet<IndexVar>, IrError> {
    match e {
        Expr::Leaf(leaf) => Ok(leaf.terms().filter_map(|t| t.as_var().cloned()).collect()),
        Expr::Const(_) | Expr::Field(_) => Ok(BTreeSet::new()),
        Expr::Add(l, r) => same_set("+", l, r),
        Expr::Sub(l, r) => same_set("-", l, r),
        Expr::Mul(l, r) | Expr::Div(l, r) => {
            let mut set = free_indices(l)?;
            set.extend(free_indices(r)?);
            Ok(set)
        }
        Expr::Neg(e) | Expr::Sqrt(e) => free_indices(e),
        Expr::Sum(v, body) => {
            let mut set = free_indices(body)?;
            if !set.remove(v) {
                return Err(IrError::UnboundSum { var: v.name.clone() });
            }
            Ok(set)
        }
    }
}

fn same_set(op: &'static str, l: &Expr, r: &Expr) -> Result<BTreeSet<IndexVar>, IrError> {
    let left = free_indices(l)?;
    let right = free_indices(r)?;
    if left != right {
        return Err(IrError::IndexMismatch {
            op,
            left: names(&left),
            right: names(&right),
        });
    }
    Ok(left)
}

pub(crate) fn names(set: &BTreeSet<IndexVar>) -> Vec<String> {
    set.iter().map(|v| v.name.clone()).collect()
}
