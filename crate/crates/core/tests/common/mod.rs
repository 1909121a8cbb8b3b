//! Reference implementations used as oracles. Everything here is written from
//! the definitions, without the library's layout tables, loop planner or
//! evaluator.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};

use tloops::{AssignOp, CheckedStatement, Env, Expr, IndexTerm, SymmetrySpec, TensorShape, Value};

/// Symmetry classes from inequality pairs (union-find), as position lists.
pub fn classes(rank: usize, pairs: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..rank).collect();
    fn find(parent: &mut [usize], x: usize) -> usize {
        if parent[x] == x {
            x
        } else {
            let r = find(parent, parent[x]);
            parent[x] = r;
            r
        }
    }
    for &(p, q) in pairs {
        let (a, b) = (find(&mut parent, p), find(&mut parent, q));
        parent[a] = b;
    }
    let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
    for p in 0..rank {
        let r = find(&mut parent, p);
        groups.entry(r).or_default().push(p);
    }
    let mut out: Vec<Vec<usize>> = groups.into_values().collect();
    out.sort();
    out
}

/// Canonical form: within each class, values non-increasing with position.
pub fn is_canonical(idx: &[usize], pairs: &[(usize, usize)]) -> bool {
    classes(idx.len(), pairs)
        .iter()
        .all(|c| c.windows(2).all(|w| idx[w[0]] >= idx[w[1]]))
}

pub fn canonicalize(idx: &[usize], pairs: &[(usize, usize)]) -> Vec<usize> {
    let mut out = idx.to_vec();
    for c in classes(idx.len(), pairs) {
        let mut vals: Vec<usize> = c.iter().map(|&p| idx[p]).collect();
        vals.sort_by(|a, b| b.cmp(a));
        for (&p, v) in c.iter().zip(vals) {
            out[p] = v;
        }
    }
    out
}

/// Every multi-index in odometer order, position 0 fastest.
pub fn odometer(dims: &[usize]) -> Vec<Vec<usize>> {
    let total: usize = dims.iter().product();
    (0..total)
        .map(|mut f| {
            dims.iter()
                .map(|&d| {
                    let v = f % d;
                    f /= d;
                    v
                })
                .collect()
        })
        .collect()
}

/// Canonical representatives in storage order.
pub fn canonical_reps(dim: usize, rank: usize, pairs: &[(usize, usize)]) -> Vec<Vec<usize>> {
    odometer(&vec![dim; rank])
        .into_iter()
        .filter(|i| is_canonical(i, pairs))
        .collect()
}

fn group_slot(dim: usize, idx: &[usize], sym: &SymmetrySpec) -> (usize, usize) {
    let reps = canonical_reps(dim, idx.len(), sym.pairs());
    let canon = canonicalize(idx, sym.pairs());
    (reps.iter().position(|r| *r == canon).unwrap(), reps.len())
}

/// Storage slot of an (outer, inner) index: outer slot major, inner minor.
pub fn storage_slot(shape: &TensorShape, outer: &[usize], inner: &[usize]) -> usize {
    let (o, _) = group_slot(shape.dim, outer, &shape.outer_sym);
    let (i, inner_count) = group_slot(shape.dim, inner, &shape.inner_sym);
    o * inner_count + i
}

fn term_value(t: &IndexTerm, bind: &HashMap<String, usize>) -> usize {
    match t {
        IndexTerm::Fixed(v) => *v,
        IndexTerm::Var { var, offset } => bind[&var.name] + offset,
    }
}

/// Left-hand index variables in order of first appearance.
fn lhs_vars(checked: &CheckedStatement) -> Vec<(String, usize)> {
    let mut out: Vec<(String, usize)> = Vec::new();
    for t in checked.lhs().terms() {
        if let Some(v) = t.as_var() {
            if !out.iter().any(|(n, _)| *n == v.name) {
                out.push((v.name.clone(), v.dim));
            }
        }
    }
    out
}

/// Left-hand assignments the statement performs: one per stored component,
/// in odometer order over the variables.
fn lhs_assignments(checked: &CheckedStatement) -> Vec<HashMap<String, usize>> {
    let vars = lhs_vars(checked);
    let dims: Vec<usize> = vars.iter().map(|v| v.1).collect();
    let shape = checked.lhs_shape();
    let lhs = checked.lhs();
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for values in odometer(&dims) {
        let bind: HashMap<String, usize> = vars.iter().map(|v| v.0.clone()).zip(values).collect();
        let outer: Vec<usize> = lhs.outer.iter().map(|t| term_value(t, &bind)).collect();
        let inner: Vec<usize> = lhs.inner.iter().map(|t| term_value(t, &bind)).collect();
        if !is_canonical(&outer, shape.outer_sym.pairs()) || !is_canonical(&inner, shape.inner_sym.pairs()) {
            continue;
        }
        if seen.insert(storage_slot(shape, &outer, &inner)) {
            out.push(bind);
        }
    }
    out
}

fn eval_point(e: &Expr, env: &Env, checked: &CheckedStatement, bind: &mut HashMap<String, usize>, x: usize) -> f64 {
    match e {
        Expr::Const(v) => *v,
        Expr::Field(name) => match env.get(name).unwrap() {
            Value::Scalar(s) => s.data[x],
            Value::Const(c) => *c,
            Value::Tensor(_) => panic!("tensor used as scalar"),
        },
        Expr::Leaf(leaf) => {
            let t = env.tensor(&leaf.name).unwrap();
            let outer: Vec<usize> = leaf.outer.iter().map(|t| term_value(t, bind)).collect();
            let inner: Vec<usize> = leaf.inner.iter().map(|t| term_value(t, bind)).collect();
            t.components()[storage_slot(t.shape(), &outer, &inner)][x]
        }
        Expr::Add(a, b) => eval_point(a, env, checked, bind, x) + eval_point(b, env, checked, bind, x),
        Expr::Sub(a, b) => eval_point(a, env, checked, bind, x) - eval_point(b, env, checked, bind, x),
        Expr::Mul(a, b) => eval_point(a, env, checked, bind, x) * eval_point(b, env, checked, bind, x),
        Expr::Div(a, b) => eval_point(a, env, checked, bind, x) / eval_point(b, env, checked, bind, x),
        Expr::Neg(a) => -eval_point(a, env, checked, bind, x),
        Expr::Sqrt(a) => eval_point(a, env, checked, bind, x).sqrt(),
        Expr::Sum(v, body) => {
            let saved = bind.get(&v.name).copied();
            let mut acc = 0.0;
            for k in 0..v.dim {
                bind.insert(v.name.clone(), k);
                acc += eval_point(body, env, checked, bind, x);
            }
            match saved {
                Some(s) => bind.insert(v.name.clone(), s),
                None => bind.remove(&v.name),
            };
            acc
        }
    }
}

/// Point-by-point nested-loop evaluation: grid point outermost, then the
/// left-hand assignments, then Sum loops. The left-hand field must exist in `env`.
pub fn oracle_eval(env: &mut Env, checked: &CheckedStatement) {
    let name = checked.lhs().name.clone();
    let shape = checked.lhs_shape().clone();
    let n = env.tensor(&name).expect("oracle needs the lhs field").gridsize();
    let assignments = lhs_assignments(checked);
    for x in 0..n {
        for bind in &assignments {
            let mut b = bind.clone();
            let value = eval_point(checked.rhs(), env, checked, &mut b, x);
            let lhs = checked.lhs();
            let outer: Vec<usize> = lhs.outer.iter().map(|t| term_value(t, bind)).collect();
            let inner: Vec<usize> = lhs.inner.iter().map(|t| term_value(t, bind)).collect();
            let slot = storage_slot(&shape, &outer, &inner);
            let t = env.tensor_mut(&name).unwrap();
            let cell = &mut t.slot_data_mut(slot)[x];
            match checked.op() {
                AssignOp::Set => *cell = value,
                AssignOp::Add => *cell += value,
                AssignOp::Sub => *cell -= value,
                AssignOp::Mul => *cell *= value,
                AssignOp::Div => *cell /= value,
            }
        }
    }
}

/// Touched (field, stored component) pairs and constant leaves, by enumeration
/// over every left-hand assignment and every Sum value.
pub fn brute_count(checked: &CheckedStatement) -> (usize, usize) {
    let mut touched: BTreeSet<(String, usize)> = BTreeSet::new();
    let mut consts = 0;
    checked.rhs().walk(&mut |e| {
        if matches!(e, Expr::Const(_)) {
            consts += 1;
        }
    });
    fn visit(e: &Expr, checked: &CheckedStatement, bind: &mut HashMap<String, usize>, out: &mut BTreeSet<(String, usize)>) {
        match e {
            Expr::Const(_) => {}
            Expr::Field(name) => {
                out.insert((name.clone(), 0));
            }
            Expr::Leaf(leaf) => {
                let shape = checked.shape(&leaf.name).unwrap();
                let outer: Vec<usize> = leaf.outer.iter().map(|t| term_value(t, bind)).collect();
                let inner: Vec<usize> = leaf.inner.iter().map(|t| term_value(t, bind)).collect();
                out.insert((leaf.name.clone(), storage_slot(shape, &outer, &inner)));
            }
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                visit(a, checked, bind, out);
                visit(b, checked, bind, out);
            }
            Expr::Neg(a) | Expr::Sqrt(a) => visit(a, checked, bind, out),
            Expr::Sum(v, body) => {
                for k in 0..v.dim {
                    bind.insert(v.name.clone(), k);
                    visit(body, checked, bind, out);
                }
                bind.remove(&v.name);
            }
        }
    }
    let lhs = checked.lhs();
    for bind in lhs_assignments(checked) {
        let outer: Vec<usize> = lhs.outer.iter().map(|t| term_value(t, &bind)).collect();
        let inner: Vec<usize> = lhs.inner.iter().map(|t| term_value(t, &bind)).collect();
        touched.insert((lhs.name.clone(), storage_slot(checked.lhs_shape(), &outer, &inner)));
        let mut b = bind.clone();
        visit(checked.rhs(), checked, &mut b, &mut touched);
    }
    (touched.len(), consts)
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
    }
}

/// Largest relative difference between two fields' stored components.
pub fn max_rel_err(a: &tloops::TensorField, b: &tloops::TensorField) -> f64 {
    assert_eq!(a.component_count(), b.component_count());
    a.components()
        .iter()
        .zip(b.components())
        .flat_map(|(x, y)| x.iter().zip(y).map(|(p, q)| rel_err(*p, *q)))
        .fold(0.0, f64::max)
}

pub fn bits(t: &tloops::TensorField) -> Vec<Vec<u64>> {
    t.components().iter().map(|c| c.iter().map(|v| v.to_bits()).collect()).collect()
}

pub const GOLDEN_DIR: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/golden");

/// Expected golden files: C and CUDA for every suite statement (ordinal =
/// suite position) and for the dim-4 extras (ordinal 1).
pub fn golden_units() -> Vec<(String, String)> {
    let mut out = Vec::new();
    for (k, e) in tloops::bench::builtin_suite().iter().enumerate() {
        let c = e.load().0;
        out.push((format!("{}.c", e.name), tloops::codegen::emit_c(&c, k + 1).source));
        out.push((format!("{}.cu", e.name), tloops::codegen::emit_cuda(&c, k + 1).source));
    }
    for e in tloops::bench::dim4_extras() {
        let c = e.load().0;
        out.push((format!("{}.c", e.name), tloops::codegen::emit_c(&c, 1).source));
        out.push((format!("{}.cu", e.name), tloops::codegen::emit_cuda(&c, 1).source));
    }
    out
}

/// Names of golden files whose content differs from `golden_units`; with
/// `TLOOPS_BLESS` set the files are rewritten instead.
pub fn golden_mismatches() -> Vec<String> {
    let bless = std::env::var_os("TLOOPS_BLESS").is_some();
    let dir = std::path::Path::new(GOLDEN_DIR);
    let mut bad = Vec::new();
    for (name, text) in golden_units() {
        let path = dir.join(&name);
        if bless {
            std::fs::create_dir_all(dir).unwrap();
            std::fs::write(&path, &text).unwrap();
        } else if std::fs::read_to_string(&path).ok().as_deref() != Some(text.as_str()) {
            bad.push(name);
        }
    }
    bad
}

pub fn golden(name: &str) -> String {
    std::fs::read_to_string(std::path::Path::new(GOLDEN_DIR).join(name)).unwrap_or_default()
}
