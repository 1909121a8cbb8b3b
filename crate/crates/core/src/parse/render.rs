use std::fmt::Write;

use super::{DeclKind, Program};
use crate::ir::{Expr, IndexTerm, Statement, TensorLeaf};
use crate::tensor::SymmetrySpec;

/// Renders a program back to source text, items in source order. Binary
/// operations are fully parenthesized; parsing the output yields the same
/// program structure.
pub fn render_program(program: &Program) -> String {
    let mut items: Vec<(super::Pos, String)> = Vec::new();
    for d in &program.decls {
        items.push((d.pos, render_decl(&d.kind)));
    }
    for s in &program.statements {
        items.push((s.pos, render_statement(&s.statement)));
    }
    items.sort_by_key(|(pos, _)| *pos);
    let mut out = String::new();
    for (_, line) in items {
        out.push_str(&line);
        out.push('\n');
    }
    out
}

fn render_decl(kind: &DeclKind) -> String {
    match kind {
        DeclKind::Tensor { name, shape } => {
            let mut s = format!("tensor {name} dim {} rank {}", shape.dim, shape.outer_rank);
            write_decl_sym(&mut s, &shape.outer_sym);
            if shape.inner_rank > 0 {
                write!(s, " inner rank {}", shape.inner_rank).unwrap();
                write_decl_sym(&mut s, &shape.inner_sym);
            }
            s.push(';');
            s
        }
        DeclKind::Field { name } => format!("field {name};"),
        DeclKind::Const { name, value } => format!("const {name} = {value:?};"),
        DeclKind::Index { name, dim } => format!("index {name} : {dim};"),
    }
}

fn write_decl_sym(s: &mut String, sym: &SymmetrySpec) {
    for (p, q) in sym.pairs() {
        write!(s, " sym({p},{q})").unwrap();
    }
}

/// One statement, e.g. `A(sym<0,1>, i, j) = (B(i,j) + B(j,i));`.
pub fn render_statement(stmt: &Statement) -> String {
    let mut s = String::new();
    s.push_str(&stmt.lhs.name);
    s.push('(');
    if let Some(sym) = stmt.lhs.declared_sym.as_ref().filter(|s| !s.is_empty()) {
        let parts: Vec<String> = sym.pairs().iter().map(|(p, q)| format!("sym<{p},{q}>")).collect();
        s.push_str(&parts.join(" && "));
        s.push_str(", ");
    }
    write_terms(&mut s, &stmt.lhs.outer);
    s.push(')');
    write_inner(&mut s, &stmt.lhs);
    write!(s, " {} ", stmt.op).unwrap();
    write_expr(&mut s, &stmt.rhs);
    s.push(';');
    s
}

fn write_terms(s: &mut String, terms: &[IndexTerm]) {
    for (n, t) in terms.iter().enumerate() {
        if n > 0 {
            s.push_str(", ");
        }
        match t {
            IndexTerm::Fixed(v) => write!(s, "{v}").unwrap(),
            IndexTerm::Var { var, offset: 0 } => s.push_str(&var.name),
            IndexTerm::Var { var, offset } => write!(s, "{}+{}", var.name, offset).unwrap(),
        }
    }
}

fn write_inner(s: &mut String, leaf: &TensorLeaf) {
    if !leaf.inner.is_empty() {
        s.push('(');
        write_terms(s, &leaf.inner);
        s.push(')');
    }
}

fn write_expr(s: &mut String, e: &Expr) {
    let binary = |s: &mut String, op: &str, l: &Expr, r: &Expr| {
        s.push('(');
        write_expr(s, l);
        write!(s, " {op} ").unwrap();
        write_expr(s, r);
        s.push(')');
    };
    match e {
        Expr::Leaf(leaf) => {
            s.push_str(&leaf.name);
            s.push('(');
            write_terms(s, &leaf.outer);
            s.push(')');
            write_inner(s, leaf);
        }
        Expr::Const(v) => write!(s, "{v:?}").unwrap(),
        Expr::Field(name) => s.push_str(name),
        Expr::Add(l, r) => binary(s, "+", l, r),
        Expr::Sub(l, r) => binary(s, "-", l, r),
        Expr::Mul(l, r) => binary(s, "*", l, r),
        Expr::Div(l, r) => binary(s, "/", l, r),
        Expr::Neg(x) => {
            s.push_str("-(");
            write_expr(s, x);
            s.push(')');
        }
        Expr::Sqrt(x) => {
            s.push_str("sqrt(");
            write_expr(s, x);
            s.push(')');
        }
        Expr::Sum(v, body) => {
            write!(s, "Sum({}, ", v.name).unwrap();
            write_expr(s, body);
            s.push(')');
        }
    }
}
