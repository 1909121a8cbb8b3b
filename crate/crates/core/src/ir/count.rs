use std::collections::{BTreeMap, HashSet};

use serde::Serialize;

use super::{CheckedStatement, Expr, IndexTerm, IndexVar, TensorLeaf};
use crate::tensor::GroupLayout;

/// Data volume of one statement: distinct component arrays touched (`n_e`,
/// scalar fields counting one each) and bare doubles outside any grid array (`n_d`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DataCount {
    pub n_e: usize,
    pub n_d: usize,
}

/// Counts touched components per field by projecting the left-hand loop
/// assignments onto the indices each leaf actually uses.
pub fn count_data(checked: &CheckedStatement) -> DataCount {
    let assignments = checked.loops().assignments();
    let mut counter = Counter {
        checked,
        assignments: &assignments,
        touched: BTreeMap::new(),
    };
    counter.mark(checked.lhs(), &[]);
    let mut n_d = 0;
    counter.visit(checked.rhs(), &mut Vec::new(), &mut n_d);
    let n_e: usize = counter
        .touched
        .values()
        .map(|(_, _, marks)| marks.iter().filter(|&&m| m).count())
        .sum();
    DataCount {
        n_e: n_e + checked.scalars().len(),
        n_d,
    }
}

struct Counter<'a> {
    checked: &'a CheckedStatement,
    assignments: &'a [Vec<usize>],
    touched: BTreeMap<String, (GroupLayout, GroupLayout, Vec<bool>)>,
}

enum Source {
    Lhs(usize),
    Sum(usize),
}

impl Counter<'_> {
    fn visit<'e>(&mut self, e: &'e Expr, scope: &mut Vec<&'e IndexVar>, n_d: &mut usize) {
        match e {
            Expr::Leaf(leaf) => self.mark(leaf, scope),
            Expr::Const(_) => *n_d += 1,
            Expr::Field(_) => {}
            Expr::Add(l, r) | Expr::Sub(l, r) | Expr::Mul(l, r) | Expr::Div(l, r) => {
                self.visit(l, scope, n_d);
                self.visit(r, scope, n_d);
            }
            Expr::Neg(x) | Expr::Sqrt(x) => self.visit(x, scope, n_d),
            Expr::Sum(v, body) => {
                scope.push(v);
                self.visit(body, scope, n_d);
                scope.pop();
            }
        }
    }

    fn mark(&mut self, leaf: &TensorLeaf, scope: &[&IndexVar]) {
        let loops = self.checked.loops();
        let mut lhs_used: Vec<usize> = Vec::new();
        let mut sum_used: Vec<usize> = Vec::new();
        let sources: Vec<Option<(Source, usize)>> = leaf
            .terms()
            .map(|t| match t {
                IndexTerm::Fixed(_) => None,
                IndexTerm::Var { var, offset } => {
                    if let Some(s) = scope.iter().rposition(|v| v.name == var.name) {
                        let k = push_unique(&mut sum_used, s);
                        Some((Source::Sum(k), *offset))
                    } else {
                        let p = loops
                            .vars
                            .iter()
                            .position(|v| v.name == var.name)
                            .expect("validated: free index bound on the left-hand side");
                        let k = push_unique(&mut lhs_used, p);
                        Some((Source::Lhs(k), *offset))
                    }
                }
            })
            .collect();

        let projections: HashSet<Vec<usize>> = self
            .assignments
            .iter()
            .map(|a| lhs_used.iter().map(|&p| a[p]).collect())
            .collect();
        let sum_dims: Vec<usize> = sum_used.iter().map(|&s| scope[s].dim).collect();

        let shape = self.checked.shape(&leaf.name).expect("validated leaf");
        let entry = self.touched.entry(leaf.name.clone()).or_insert_with(|| {
            let (o, i) = shape.layouts().expect("validated shape");
            let n = o.component_count() * i.component_count();
            (o, i, vec![false; n])
        });
        let (outer, inner, marks) = entry;
        let rank = leaf.outer.len();
        let mut idx = vec![0usize; sources.len()];
        let mut sum_vals = vec![0usize; sum_dims.len()];
        for proj in &projections {
            loop {
                for (n, (src, t)) in sources.iter().zip(leaf.terms()).enumerate() {
                    idx[n] = match (src, t) {
                        (None, IndexTerm::Fixed(v)) => *v,
                        (Some((Source::Lhs(k), off)), _) => proj[*k] + off,
                        (Some((Source::Sum(k), off)), _) => sum_vals[*k] + off,
                        (None, IndexTerm::Var { .. }) => unreachable!(),
                    };
                }
                let o = outer.slot_index(&idx[..rank]).expect("validated bounds");
                let i = inner.slot_index(&idx[rank..]).expect("validated bounds");
                marks[o * inner.component_count() + i] = true;
                if !advance(&mut sum_vals, &sum_dims) {
                    break;
                }
            }
        }
    }
}

fn push_unique(list: &mut Vec<usize>, value: usize) -> usize {
    match list.iter().position(|&x| x == value) {
        Some(k) => k,
        None => {
            list.push(value);
            list.len() - 1
        }
    }
}

/// Odometer increment; false once every combination was produced.
fn advance(vals: &mut [usize], dims: &[usize]) -> bool {
    for (v, &d) in vals.iter_mut().zip(dims) {
        *v += 1;
        if *v < d {
            return true;
        }
        *v = 0;
    }
    false
}
