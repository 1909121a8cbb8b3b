//! Expression-tree IR for tensor assignment statements.

mod count;
mod free;
mod signature;
mod validate;

use std::collections::BTreeMap;
use std::fmt;
use std::ops;

use thiserror::Error;

use crate::tensor::{SymmetrySpec, TensorShape};

pub use count::{count_data, DataCount};
pub use free::free_indices;
pub use signature::signature;
pub use validate::{validate_statement, CheckedStatement, LhsLoops, ValidationError};

/// A symbolic loop index. Identity within a program is the name.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IndexVar {
    pub name: String,
    pub dim: usize,
}

impl IndexVar {
    pub fn new(name: impl Into<String>, dim: usize) -> Self {
        Self {
            name: name.into(),
            dim,
        }
    }
}

/// One slot of an indexed tensor: a fixed value or a loop index plus offset.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum IndexTerm {
    Fixed(usize),
    Var { var: IndexVar, offset: usize },
}

impl IndexTerm {
    pub fn var(var: &IndexVar) -> Self {
        IndexTerm::Var {
            var: var.clone(),
            offset: 0,
        }
    }

    pub fn offset(var: &IndexVar, offset: usize) -> Self {
        IndexTerm::Var {
            var: var.clone(),
            offset,
        }
    }

    pub fn as_var(&self) -> Option<&IndexVar> {
        match self {
            IndexTerm::Var { var, .. } => Some(var),
            IndexTerm::Fixed(_) => None,
        }
    }

    /// Largest component value this term can take.
    pub fn max_value(&self) -> usize {
        match self {
            IndexTerm::Fixed(v) => *v,
            IndexTerm::Var { var, offset } => offset + var.dim.saturating_sub(1),
        }
    }
}

/// An indexed tensor. `declared_sym` is only meaningful on a left-hand side.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorLeaf {
    pub name: String,
    pub outer: Vec<IndexTerm>,
    pub inner: Vec<IndexTerm>,
    pub declared_sym: Option<SymmetrySpec>,
}

impl TensorLeaf {
    pub fn new(name: impl Into<String>, outer: Vec<IndexTerm>) -> Self {
        Self {
            name: name.into(),
            outer,
            inner: Vec::new(),
            declared_sym: None,
        }
    }

    pub fn with_inner(mut self, inner: Vec<IndexTerm>) -> Self {
        self.inner = inner;
        self
    }

    pub fn with_sym(mut self, sym: SymmetrySpec) -> Self {
        self.declared_sym = Some(sym);
        self
    }

    /// Outer terms followed by inner terms.
    pub fn terms(&self) -> impl Iterator<Item = &IndexTerm> {
        self.outer.iter().chain(self.inner.iter())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Leaf(TensorLeaf),
    Const(f64),
    /// Reference to a scalar grid field.
    Field(String),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    /// Division by a scalar-valued expression.
    Div(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Sqrt(Box<Expr>),
    /// Explicit summation of the body over every value of the index.
    Sum(IndexVar, Box<Expr>),
}

impl Expr {
    pub fn leaf(leaf: TensorLeaf) -> Self {
        Expr::Leaf(leaf)
    }

    pub fn field(name: impl Into<String>) -> Self {
        Expr::Field(name.into())
    }

    pub fn sum(var: &IndexVar, body: Expr) -> Self {
        Expr::Sum(var.clone(), Box::new(body))
    }

    pub fn sqrt(e: Expr) -> Self {
        Expr::Sqrt(Box::new(e))
    }

    /// Visits every node in depth-first, left-to-right preorder.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        match self {
            Expr::Leaf(_) | Expr::Const(_) | Expr::Field(_) => {}
            Expr::Add(l, r) | Expr::Sub(l, r) | Expr::Mul(l, r) | Expr::Div(l, r) => {
                l.walk(f);
                r.walk(f);
            }
            Expr::Neg(e) | Expr::Sqrt(e) | Expr::Sum(_, e) => e.walk(f),
        }
    }

    /// Number of tensor, field and constant leaves.
    pub fn leaf_count(&self) -> usize {
        let mut n = 0;
        self.walk(&mut |e| {
            if matches!(e, Expr::Leaf(_) | Expr::Const(_) | Expr::Field(_)) {
                n += 1;
            }
        });
        n
    }
}

impl ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::Add(Box::new(self), Box::new(rhs))
    }
}

impl ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::Sub(Box::new(self), Box::new(rhs))
    }
}

impl ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::Mul(Box::new(self), Box::new(rhs))
    }
}

impl ops::Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        Expr::Div(Box::new(self), Box::new(rhs))
    }
}

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::Neg(Box::new(self))
    }
}

impl From<TensorLeaf> for Expr {
    fn from(leaf: TensorLeaf) -> Self {
        Expr::Leaf(leaf)
    }
}

impl From<f64> for Expr {
    fn from(v: f64) -> Self {
        Expr::Const(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AssignOp {
    Set,
    Add,
    Sub,
    Mul,
    Div,
}

impl AssignOp {
    pub fn symbol(self) -> &'static str {
        match self {
            AssignOp::Set => "=",
            AssignOp::Add => "+=",
            AssignOp::Sub => "-=",
            AssignOp::Mul => "*=",
            AssignOp::Div => "/=",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            AssignOp::Set => "set",
            AssignOp::Add => "add",
            AssignOp::Sub => "sub",
            AssignOp::Mul => "mul",
            AssignOp::Div => "div",
        }
    }

    /// True for operators that read the left-hand side.
    pub fn reads_lhs(self) -> bool {
        self != AssignOp::Set
    }
}

impl fmt::Display for AssignOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Statement {
    pub lhs: TensorLeaf,
    pub op: AssignOp,
    pub rhs: Expr,
}

impl Statement {
    pub fn new(lhs: TensorLeaf, op: AssignOp, rhs: Expr) -> Self {
        Self { lhs, op, rhs }
    }
}

/// What a name was declared as.
#[derive(Debug, Clone, PartialEq)]
pub enum Declared {
    Tensor(TensorShape),
    Scalar,
    Const(f64),
}

/// Field and constant declarations a statement is checked against.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Declarations {
    entries: BTreeMap<String, Declared>,
}

impl Declarations {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, decl: Declared) -> Option<Declared> {
        self.entries.insert(name.into(), decl)
    }

    pub fn tensor(mut self, name: &str, shape: TensorShape) -> Self {
        self.insert(name, Declared::Tensor(shape));
        self
    }

    pub fn scalar(mut self, name: &str) -> Self {
        self.insert(name, Declared::Scalar);
        self
    }

    pub fn get(&self, name: &str) -> Option<&Declared> {
        self.entries.get(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Declared)> {
        self.entries.iter()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IrError {
    #[error("operands of `{op}` have different free indices {{{}}} and {{{}}}", left.join(","), right.join(","))]
    IndexMismatch {
        op: &'static str,
        left: Vec<String>,
        right: Vec<String>,
    },
    #[error("Sum over `{var}` which does not occur free in its body")]
    UnboundSum { var: String },
}

/// Replaces every free occurrence of `var` by the fixed value `value + offset`.
/// Sums that rebind the same name shadow it.
pub fn substitute(expr: &Expr, var: &str, value: usize) -> Expr {
    match expr {
        Expr::Leaf(leaf) => Expr::Leaf(substitute_leaf(leaf, var, value)),
        Expr::Const(_) | Expr::Field(_) => expr.clone(),
        Expr::Add(l, r) => substitute(l, var, value) + substitute(r, var, value),
        Expr::Sub(l, r) => substitute(l, var, value) - substitute(r, var, value),
        Expr::Mul(l, r) => substitute(l, var, value) * substitute(r, var, value),
        Expr::Div(l, r) => substitute(l, var, value) / substitute(r, var, value),
        Expr::Neg(e) => -substitute(e, var, value),
        Expr::Sqrt(e) => Expr::sqrt(substitute(e, var, value)),
        Expr::Sum(v, body) if v.name == var => Expr::Sum(v.clone(), body.clone()),
        Expr::Sum(v, body) => Expr::sum(v, substitute(body, var, value)),
    }
}

/// Substitutes `var` in the index terms of one leaf.
pub fn substitute_leaf(leaf: &TensorLeaf, var: &str, value: usize) -> TensorLeaf {
    let sub = |t: &IndexTerm| match t {
        IndexTerm::Var { var: v, offset } if v.name == var => IndexTerm::Fixed(value + offset),
        other => other.clone(),
    };
    TensorLeaf {
        name: leaf.name.clone(),
        outer: leaf.outer.iter().map(sub).collect(),
        inner: leaf.inner.iter().map(sub).collect(),
        declared_sym: leaf.declared_sym.clone(),
    }
}

/// Expands one Sum into the left-associated chain
/// `((body[v:=0] + body[v:=1]) + ..)` with `v.dim` terms.
pub fn expand_sum(var: &IndexVar, body: &Expr) -> Expr {
    let mut terms = (0..var.dim).map(|value| substitute(body, &var.name, value));
    let first = terms.next().expect("index dimension is positive");
    terms.fold(first, |acc, t| acc + t)
}

/// Expands every Sum in `expr`, innermost bodies included.
pub fn expand_sums(expr: &Expr) -> Expr {
    match expr {
        Expr::Leaf(_) | Expr::Const(_) | Expr::Field(_) => expr.clone(),
        Expr::Add(l, r) => expand_sums(l) + expand_sums(r),
        Expr::Sub(l, r) => expand_sums(l) - expand_sums(r),
        Expr::Mul(l, r) => expand_sums(l) * expand_sums(r),
        Expr::Div(l, r) => expand_sums(l) / expand_sums(r),
        Expr::Neg(e) => -expand_sums(e),
        Expr::Sqrt(e) => Expr::sqrt(expand_sums(e)),
        Expr::Sum(v, body) => expand_sums(&expand_sum(v, body)),
    }
}
