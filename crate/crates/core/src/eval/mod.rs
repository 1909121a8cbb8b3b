//! Direct execution of checked statements over field data.
//!
//! The left-hand loop nest follows [`crate::tensor::iterate_with`]; for every
//! left-hand component the right-hand side is evaluated over the whole grid
//! range and then combined into the component. Reads of the left-hand field
//! see components already written earlier in the loop order, which is the same
//! result a per-point loop with the grid loop innermost would give (every read
//! happens at the point being written).

use indexmap::IndexMap;
use rayon::prelude::*;
use thiserror::Error;

use crate::ir::{expand_sums, substitute, AssignOp, CheckedStatement, Expr, IndexTerm, TensorLeaf};
use crate::tensor::{ScalarField, TensorField, TensorShape};

/// One named entry of an [`Env`].
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Tensor(TensorField),
    Scalar(ScalarField),
    Const(f64),
}

/// Named fields and constants in insertion order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Env {
    values: IndexMap<String, Value>,
}

impl Env {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts or replaces an entry, keeping the position of a replaced one.
    pub fn insert(&mut self, name: impl Into<String>, value: Value) -> Option<Value> {
        self.values.insert(name.into(), value)
    }

    pub fn insert_tensor(&mut self, field: TensorField) -> Option<Value> {
        self.insert(field.name().to_string(), Value::Tensor(field))
    }

    pub fn insert_scalar(&mut self, field: ScalarField) -> Option<Value> {
        self.insert(field.name.clone(), Value::Scalar(field))
    }

    pub fn insert_const(&mut self, name: impl Into<String>, value: f64) -> Option<Value> {
        self.insert(name, Value::Const(value))
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.values.get(name)
    }

    pub fn tensor(&self, name: &str) -> Option<&TensorField> {
        match self.values.get(name) {
            Some(Value::Tensor(t)) => Some(t),
            _ => None,
        }
    }

    pub fn tensor_mut(&mut self, name: &str) -> Option<&mut TensorField> {
        match self.values.get_mut(name) {
            Some(Value::Tensor(t)) => Some(t),
            _ => None,
        }
    }

    pub fn scalar(&self, name: &str) -> Option<&ScalarField> {
        match self.values.get(name) {
            Some(Value::Scalar(s)) => Some(s),
            _ => None,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Value)> {
        self.values.iter()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("field `{name}` is missing from the data")]
    Missing { name: String },
    #[error("`{name}` in the data is not a {expected}")]
    WrongKind { name: String, expected: &'static str },
    #[error("field `{name}` has shape {found:?}, declared {declared:?}")]
    ShapeMismatch {
        name: String,
        declared: TensorShape,
        found: TensorShape,
    },
    #[error("field `{name}` has gridsize {found}, expected {expected}")]
    GridsizeMismatch { name: String, expected: usize, found: usize },
}

/// How a statement is executed; all modes give bitwise-identical results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    /// One loop nest over the left-hand components with Sums evaluated in place.
    #[default]
    WholeTensor,
    /// A fully index-substituted, Sum-expanded scalar statement per component.
    PerComponent,
}

/// What an evaluation wrote.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalSummary {
    /// Gridsize the statement ran at.
    pub gridsize: usize,
    /// Number of times each left-hand storage slot was written.
    pub lhs_writes: Vec<u32>,
}

/// Grid points per parallel work item.
const CHUNK: usize = 4096;

/// Executes one statement in whole-tensor mode.
pub fn eval_statement(env: &mut Env, checked: &CheckedStatement) -> Result<EvalSummary, EvalError> {
    eval_with(env, checked, Mode::WholeTensor, false)
}

/// Executes one statement one left-hand component at a time.
pub fn eval_statement_per_component(env: &mut Env, checked: &CheckedStatement) -> Result<EvalSummary, EvalError> {
    eval_with(env, checked, Mode::PerComponent, false)
}

/// Executes one statement. With `parallel`, each component's grid range is split
/// into chunks evaluated on the rayon pool; per-point arithmetic is unchanged.
pub fn eval_with(
    env: &mut Env,
    checked: &CheckedStatement,
    mode: Mode,
    parallel: bool,
) -> Result<EvalSummary, EvalError> {
    let n = prepare(env, checked)?;
    let lhs_name = checked.lhs().name.clone();
    // Take the left-hand field out so it can be written while the rest of the
    // environment is read; the placeholder keeps its position.
    let mut lhs = match env.values.get_mut(&lhs_name) {
        Some(v) => match std::mem::replace(v, Value::Const(0.0)) {
            Value::Tensor(t) => t,
            _ => unreachable!("checked in prepare"),
        },
        None => unreachable!("created in prepare"),
    };
    let mut writes = vec![0u32; lhs.component_count()];
    let mut tmp = vec![0.0; n];
    let loops = checked.loops();
    let mut assignment_slots = Vec::new();
    loops.for_each(|a| assignment_slots.push(a.to_vec()));

    for values in &assignment_slots {
        let bindings: Vec<(&str, usize)> = loops.vars.iter().map(|v| v.name.as_str()).zip(values.iter().copied()).collect();
        let slot = leaf_slot(&lhs, checked.lhs(), &bindings);
        let per_component;
        let (rhs, bindings) = match mode {
            Mode::WholeTensor => (checked.rhs(), bindings),
            Mode::PerComponent => {
                let mut e = checked.rhs().clone();
                for (name, value) in &bindings {
                    e = substitute(&e, name, *value);
                }
                per_component = expand_sums(&e);
                (&per_component, Vec::new())
            }
        };
        let ctx = Ctx {
            env,
            lhs_name: &lhs_name,
            lhs: &lhs,
        };
        if parallel && n > CHUNK {
            tmp.par_chunks_mut(CHUNK).enumerate().for_each(|(c, out)| {
                let lo = c * CHUNK;
                let mut b = bindings.clone();
                ctx.eval(rhs, &mut b, lo, lo + out.len()).write_to(out);
            });
        } else {
            ctx.eval(rhs, &mut bindings.clone(), 0, n).write_to(&mut tmp);
        }
        combine(checked.op(), lhs.slot_data_mut(slot), &tmp, parallel);
        writes[slot] += 1;
    }

    env.values[&lhs_name] = Value::Tensor(lhs);
    Ok(EvalSummary {
        gridsize: n,
        lhs_writes: writes,
    })
}

/// Checks field kinds, shapes and gridsizes; creates or resizes the left-hand
/// field for `=`. Returns the gridsize.
fn prepare(env: &mut Env, checked: &CheckedStatement) -> Result<usize, EvalError> {
    let lhs_name = &checked.lhs().name;
    for (name, declared) in checked.shapes() {
        match env.get(name) {
            Some(Value::Tensor(t)) if t.shape() == declared => {}
            Some(Value::Tensor(t)) => {
                return Err(EvalError::ShapeMismatch {
                    name: name.clone(),
                    declared: declared.clone(),
                    found: t.shape().clone(),
                })
            }
            Some(_) => {
                return Err(EvalError::WrongKind {
                    name: name.clone(),
                    expected: "tensor field",
                })
            }
            None if name == lhs_name && checked.op() == AssignOp::Set => {}
            None => return Err(EvalError::Missing { name: name.clone() }),
        }
    }
    for name in checked.scalars() {
        match env.get(name) {
            Some(Value::Scalar(_)) => {}
            Some(_) => {
                return Err(EvalError::WrongKind {
                    name: name.clone(),
                    expected: "scalar field",
                })
            }
            None => return Err(EvalError::Missing { name: name.clone() }),
        }
    }

    let mut grid: Option<(String, usize)> = None;
    let mut agree = |name: &str, size: usize| -> Result<(), EvalError> {
        match &grid {
            None => {
                grid = Some((name.to_string(), size));
                Ok(())
            }
            Some((_, n)) if *n == size => Ok(()),
            Some((_, n)) => Err(EvalError::GridsizeMismatch {
                name: name.to_string(),
                expected: *n,
                found: size,
            }),
        }
    };
    let mut result = Ok(());
    checked.rhs().walk(&mut |e| {
        if result.is_err() {
            return;
        }
        result = match e {
            Expr::Leaf(leaf) => agree(&leaf.name, env.tensor(&leaf.name).expect("checked above").gridsize()),
            Expr::Field(name) => agree(name, env.scalar(name).expect("checked above").gridsize()),
            _ => Ok(()),
        };
    });
    result?;

    let lhs_size = env.tensor(lhs_name).map(TensorField::gridsize);
    let n = match (grid, lhs_size) {
        (Some((_, n)), _) => n,
        (None, Some(n)) => n,
        (None, None) => return Err(EvalError::Missing { name: lhs_name.clone() }),
    };
    match lhs_size {
        Some(size) if size == n => {}
        Some(size) if checked.op().reads_lhs() => {
            return Err(EvalError::GridsizeMismatch {
                name: lhs_name.clone(),
                expected: n,
                found: size,
            })
        }
        Some(_) => env.tensor_mut(lhs_name).expect("present").resize(n),
        None => {
            let field = TensorField::new(lhs_name.clone(), checked.lhs_shape().clone(), n)
                .expect("validated shape has a layout");
            env.insert_tensor(field);
        }
    }
    Ok(n)
}

fn combine(op: AssignOp, dst: &mut [f64], src: &[f64], parallel: bool) {
    let f = match op {
        AssignOp::Set => |_: f64, r: f64| r,
        AssignOp::Add => |l: f64, r: f64| l + r,
        AssignOp::Sub => |l: f64, r: f64| l - r,
        AssignOp::Mul => |l: f64, r: f64| l * r,
        AssignOp::Div => |l: f64, r: f64| l / r,
    };
    if parallel && dst.len() > CHUNK {
        dst.par_iter_mut().zip(src).for_each(|(d, &s)| *d = f(*d, s));
    } else {
        for (d, &s) in dst.iter_mut().zip(src) {
            *d = f(*d, s);
        }
    }
}

/// Resolves a leaf's index terms under `bindings` to a storage slot.
fn leaf_slot(field: &TensorField, leaf: &TensorLeaf, bindings: &[(&str, usize)]) -> usize {
    let value = |t: &IndexTerm| match t {
        IndexTerm::Fixed(v) => *v,
        IndexTerm::Var { var, offset } => {
            let bound = bindings
                .iter()
                .rev()
                .find(|(name, _)| *name == var.name)
                .expect("validated: every index is bound");
            bound.1 + offset
        }
    };
    let outer: Vec<usize> = leaf.outer.iter().map(value).collect();
    let inner: Vec<usize> = leaf.inner.iter().map(value).collect();
    field.slot(&outer, &inner).expect("validated: indices within bounds")
}

/// A value over a grid range.
enum Val<'a> {
    Scalar(f64),
    Slice(&'a [f64]),
    Owned(Vec<f64>),
}

impl Val<'_> {
    fn write_to(self, out: &mut [f64]) {
        match self {
            Val::Scalar(v) => out.fill(v),
            Val::Slice(s) => out.copy_from_slice(s),
            Val::Owned(v) => out.copy_from_slice(&v),
        }
    }

    fn into_owned(self, len: usize) -> Vec<f64> {
        match self {
            Val::Scalar(v) => vec![v; len],
            Val::Slice(s) => s.to_vec(),
            Val::Owned(v) => v,
        }
    }
}

struct Ctx<'a> {
    env: &'a Env,
    lhs_name: &'a str,
    lhs: &'a TensorField,
}

impl<'a> Ctx<'a> {
    fn tensor(&self, name: &str) -> &'a TensorField {
        if name == self.lhs_name {
            self.lhs
        } else {
            self.env.tensor(name).expect("checked in prepare")
        }
    }

    fn eval<'e>(&self, e: &'e Expr, bindings: &mut Vec<(&'e str, usize)>, lo: usize, hi: usize) -> Val<'a> {
        match e {
            Expr::Leaf(leaf) => {
                let field = self.tensor(&leaf.name);
                Val::Slice(&field.slot_data(leaf_slot(field, leaf, bindings))[lo..hi])
            }
            Expr::Const(v) => Val::Scalar(*v),
            Expr::Field(name) => Val::Slice(&self.env.scalar(name).expect("checked in prepare").data[lo..hi]),
            Expr::Add(l, r) => self.binary(l, r, bindings, lo, hi, |a, b| a + b),
            Expr::Sub(l, r) => self.binary(l, r, bindings, lo, hi, |a, b| a - b),
            Expr::Mul(l, r) => self.binary(l, r, bindings, lo, hi, |a, b| a * b),
            Expr::Div(l, r) => self.binary(l, r, bindings, lo, hi, |a, b| a / b),
            Expr::Neg(x) => self.unary(x, bindings, lo, hi, |a| -a),
            Expr::Sqrt(x) => self.unary(x, bindings, lo, hi, f64::sqrt),
            Expr::Sum(v, body) => {
                // body(0) + body(1) + .., the same chain expand_sum builds.
                bindings.push((v.name.as_str(), 0));
                let mut acc = self.eval(body, bindings, lo, hi);
                for value in 1..v.dim {
                    bindings.last_mut().expect("pushed above").1 = value;
                    let term = self.eval(body, bindings, lo, hi);
                    acc = apply2(acc, term, hi - lo, |a, b| a + b);
                }
                bindings.pop();
                acc
            }
        }
    }

    fn binary<'e>(
        &self,
        l: &'e Expr,
        r: &'e Expr,
        bindings: &mut Vec<(&'e str, usize)>,
        lo: usize,
        hi: usize,
        f: impl Fn(f64, f64) -> f64,
    ) -> Val<'a> {
        let a = self.eval(l, bindings, lo, hi);
        let b = self.eval(r, bindings, lo, hi);
        apply2(a, b, hi - lo, f)
    }

    fn unary<'e>(
        &self,
        x: &'e Expr,
        bindings: &mut Vec<(&'e str, usize)>,
        lo: usize,
        hi: usize,
        f: impl Fn(f64) -> f64,
    ) -> Val<'a> {
        match self.eval(x, bindings, lo, hi) {
            Val::Scalar(v) => Val::Scalar(f(v)),
            other => {
                let mut out = other.into_owned(hi - lo);
                out.iter_mut().for_each(|v| *v = f(*v));
                Val::Owned(out)
            }
        }
    }
}

fn apply2<'a>(a: Val<'a>, b: Val<'a>, len: usize, f: impl Fn(f64, f64) -> f64) -> Val<'a> {
    match (a, b) {
        (Val::Scalar(x), Val::Scalar(y)) => Val::Scalar(f(x, y)),
        (Val::Owned(mut x), b) => {
            match b {
                Val::Scalar(y) => x.iter_mut().for_each(|v| *v = f(*v, y)),
                Val::Slice(y) => x.iter_mut().zip(y).for_each(|(v, &w)| *v = f(*v, w)),
                Val::Owned(y) => x.iter_mut().zip(&y).for_each(|(v, &w)| *v = f(*v, w)),
            }
            Val::Owned(x)
        }
        (a, Val::Owned(mut y)) => {
            match a {
                Val::Scalar(x) => y.iter_mut().for_each(|w| *w = f(x, *w)),
                Val::Slice(x) => y.iter_mut().zip(x).for_each(|(w, &v)| *w = f(v, *w)),
                Val::Owned(_) => unreachable!("handled above"),
            }
            Val::Owned(y)
        }
        (a, b) => {
            let x = a.into_owned(len);
            apply2(Val::Owned(x), b, len, f)
        }
    }
}
