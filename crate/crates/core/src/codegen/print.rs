//! Expression printing shared by both backends.

use std::collections::HashMap;

use super::mangle;
use crate::ir::{Expr, IndexTerm, TensorLeaf};

const ADD: u8 = 1;
const MUL: u8 = 2;
const UNARY: u8 = 3;
const ATOM: u8 = 4;

/// How Sum nodes are printed.
pub(crate) enum SumStyle {
    /// As the accumulator `s<k>` computed by a surrounding loop.
    Accumulator(HashMap<*const Expr, usize>),
    /// As the chain `body[v:=0] + body[v:=1] + ..`, left-associated.
    Unrolled,
}

/// Index values fixed by unrolled Sums, innermost last.
pub(crate) type Bindings<'e> = Vec<(&'e str, usize)>;

pub(crate) struct Printer<'a> {
    pub consts: HashMap<*const Expr, usize>,
    pub sums: SumStyle,
    pub leaf: &'a dyn Fn(&TensorLeaf, &Bindings) -> String,
    pub field: &'a dyn Fn(&str) -> String,
    pub constant: &'a dyn Fn(usize) -> String,
}

/// Numbers the nodes matching `pred` in preorder, keyed by node address.
pub(crate) fn number_nodes(e: &Expr, pred: impl Fn(&Expr) -> bool) -> HashMap<*const Expr, usize> {
    let mut map = HashMap::new();
    e.walk(&mut |node| {
        if pred(node) {
            let n = map.len();
            map.insert(node as *const Expr, n);
        }
    });
    map
}

impl Printer<'_> {
    pub fn print(&self, e: &Expr) -> String {
        self.expr(e, &mut Vec::new()).0
    }

    fn expr<'e>(&self, e: &'e Expr, bindings: &mut Bindings<'e>) -> (String, u8) {
        match e {
            Expr::Leaf(leaf) => ((self.leaf)(leaf, bindings), ATOM),
            Expr::Const(_) => ((self.constant)(self.consts[&(e as *const Expr)]), ATOM),
            Expr::Field(name) => ((self.field)(name), ATOM),
            Expr::Add(l, r) => self.binary(l, "+", r, ADD, bindings),
            Expr::Sub(l, r) => self.binary(l, "-", r, ADD, bindings),
            Expr::Mul(l, r) => self.binary(l, "*", r, MUL, bindings),
            Expr::Div(l, r) => self.binary(l, "/", r, MUL, bindings),
            Expr::Neg(x) => {
                let (s, p) = self.expr(x, bindings);
                (format!("-{}", wrap(s, p <= UNARY)), UNARY)
            }
            Expr::Sqrt(x) => (format!("sqrt({})", self.expr(x, bindings).0), ATOM),
            Expr::Sum(v, body) => match &self.sums {
                SumStyle::Accumulator(map) => (format!("s{}", map[&(e as *const Expr)]), ATOM),
                SumStyle::Unrolled => {
                    bindings.push((v.name.as_str(), 0));
                    let (mut acc, mut prec) = self.expr(body, bindings);
                    for value in 1..v.dim {
                        bindings.last_mut().expect("pushed above").1 = value;
                        let (term, p) = self.expr(body, bindings);
                        acc = format!("{} + {}", wrap(acc, prec < ADD), wrap(term, p <= ADD));
                        prec = ADD;
                    }
                    bindings.pop();
                    (acc, prec)
                }
            },
        }
    }

    fn binary<'e>(&self, l: &'e Expr, op: &str, r: &'e Expr, prec: u8, bindings: &mut Bindings<'e>) -> (String, u8) {
        let (ls, lp) = self.expr(l, bindings);
        let (rs, rp) = self.expr(r, bindings);
        // Right operands of equal precedence keep their parentheses so the
        // printed association matches the tree.
        let op = if prec == ADD { format!(" {op} ") } else { op.to_string() };
        (format!("{}{op}{}", wrap(ls, lp < prec), wrap(rs, rp <= prec)), prec)
    }
}

fn wrap(s: String, paren: bool) -> String {
    if paren {
        format!("({s})")
    } else {
        s
    }
}

/// A leaf's index terms with unrolled Sum variables replaced by their values.
pub(crate) enum Term {
    Fixed(usize),
    Var(String, usize),
}

pub(crate) fn leaf_terms(leaf: &TensorLeaf, bindings: &Bindings) -> Vec<Term> {
    leaf.terms()
        .map(|t| match t {
            IndexTerm::Fixed(v) => Term::Fixed(*v),
            IndexTerm::Var { var, offset } => match bindings.iter().rev().find(|(n, _)| *n == var.name) {
                Some((_, value)) => Term::Fixed(value + offset),
                None => Term::Var(mangle(&var.name), *offset),
            },
        })
        .collect()
}

/// Flat index with constants folded: variables in slot order with their
/// strides, then the constant part, e.g. `i+4*c+1`.
pub(crate) fn flat_folded(terms: &[Term], dim: usize) -> String {
    let mut parts = Vec::new();
    let mut constant = 0;
    let mut stride = 1;
    for t in terms {
        match t {
            Term::Fixed(v) => constant += v * stride,
            Term::Var(name, offset) => {
                parts.push(if stride == 1 { name.clone() } else { format!("{stride}*{name}") });
                constant += offset * stride;
            }
        }
        stride *= dim;
    }
    if constant > 0 || parts.is_empty() {
        parts.push(constant.to_string());
    }
    parts.join("+")
}

/// Flat index with one summand per slot, e.g. `a+4*0` or `(i+1)+4*c`.
pub(crate) fn flat_per_slot(terms: &[Term], dim: usize) -> String {
    if terms.is_empty() {
        return "0".to_string();
    }
    let mut stride = 1;
    let mut parts = Vec::new();
    for t in terms {
        let value = match t {
            Term::Fixed(v) => v.to_string(),
            Term::Var(name, 0) => name.clone(),
            Term::Var(name, off) => format!("({name}+{off})"),
        };
        parts.push(if stride == 1 { value } else { format!("{stride}*{value}") });
        stride *= dim;
    }
    parts.join("+")
}
