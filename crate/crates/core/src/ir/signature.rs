use std::fmt::Write;

use super::{CheckedStatement, Expr, IndexTerm, TensorLeaf};

/// Deterministic string identifying a statement's structure, used to
/// deduplicate kernels:
///
/// `ASSIGN(op;LHS(name,dim,[outer,inner],sym,terms);RHS)` where terms render as
/// `v<name>:<dim>+<offset>` or `f<value>` and the right-hand tree is written
/// depth-first, each tensor leaf with its declared shape. Field names, index
/// names, dimensions and constant values are all part of the string.
pub fn signature(checked: &CheckedStatement) -> String {
    let stmt = checked.statement();
    let shape = checked.lhs_shape();
    let mut out = String::new();
    write!(
        out,
        "ASSIGN({};LHS({},{},[{},{}],{},",
        stmt.op.name(),
        stmt.lhs.name,
        shape.dim,
        shape.outer_rank,
        shape.inner_rank,
        stmt.lhs.declared_sym.clone().unwrap_or_default(),
    )
    .unwrap();
    write_terms(&mut out, &stmt.lhs);
    out.push_str(");");
    write_expr(&mut out, checked, &stmt.rhs);
    out.push(')');
    out
}

fn write_terms(out: &mut String, leaf: &TensorLeaf) {
    write_term_list(out, &leaf.outer);
    if !leaf.inner.is_empty() {
        out.push(',');
        write_term_list(out, &leaf.inner);
    }
}

fn write_term_list(out: &mut String, terms: &[IndexTerm]) {
    out.push('[');
    for (n, t) in terms.iter().enumerate() {
        if n > 0 {
            out.push(',');
        }
        match t {
            IndexTerm::Fixed(v) => write!(out, "f{v}").unwrap(),
            IndexTerm::Var { var, offset } => write!(out, "v{}:{}+{}", var.name, var.dim, offset).unwrap(),
        }
    }
    out.push(']');
}

fn write_expr(out: &mut String, checked: &CheckedStatement, e: &Expr) {
    let binary = |out: &mut String, tag: &str, l: &Expr, r: &Expr| {
        write!(out, "{tag}(").unwrap();
        write_expr(out, checked, l);
        out.push(',');
        write_expr(out, checked, r);
        out.push(')');
    };
    match e {
        Expr::Leaf(leaf) => {
            write!(out, "LEAF({},", leaf.name).unwrap();
            if let Some(shape) = checked.shape(&leaf.name) {
                write!(
                    out,
                    "{},[{},{}],{},{},",
                    shape.dim, shape.outer_rank, shape.inner_rank, shape.outer_sym, shape.inner_sym
                )
                .unwrap();
            }
            write_terms(out, leaf);
            out.push(')');
        }
        // Debug formatting of f64 is the shortest exact round-trip form.
        Expr::Const(v) => write!(out, "CONST({v:?})").unwrap(),
        Expr::Field(name) => write!(out, "FIELD({name})").unwrap(),
        Expr::Add(l, r) => binary(out, "ADD", l, r),
        Expr::Sub(l, r) => binary(out, "SUB", l, r),
        Expr::Mul(l, r) => binary(out, "MUL", l, r),
        Expr::Div(l, r) => binary(out, "DIV", l, r),
        Expr::Neg(e) => {
            out.push_str("NEG(");
            write_expr(out, checked, e);
            out.push(')');
        }
        Expr::Sqrt(e) => {
            out.push_str("SQRT(");
            write_expr(out, checked, e);
            out.push(')');
        }
        Expr::Sum(v, body) => {
            write!(out, "SUM(v{}:{},", v.name, v.dim).unwrap();
            write_expr(out, checked, body);
            out.push(')');
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{validate_statement, AssignOp, Declarations, IndexVar, Statement};
    use crate::tensor::{SymmetrySpec, TensorShape};

    fn assign(lhs: &str, rhs: &str) -> CheckedStatement {
        let i = IndexVar::new("i", 3);
        let shape = TensorShape::simple(3, 1, SymmetrySpec::none()).unwrap();
        let decls = Declarations::new()
            .tensor("A", shape.clone())
            .tensor("B", shape.clone())
            .tensor("C", shape);
        let s = Statement::new(
            TensorLeaf::new(lhs, vec![IndexTerm::var(&i)]),
            AssignOp::Set,
            TensorLeaf::new(rhs, vec![IndexTerm::var(&i)]).into(),
        );
        validate_statement(&s, &decls).unwrap()
    }

    #[test]
    fn simple_assignment() {
        assert_eq!(
            signature(&assign("A", "B")),
            "ASSIGN(set;LHS(A,3,[1,0],[],[vi:3+0]);LEAF(B,3,[1,0],[],[],[vi:3+0]))"
        );
    }

    #[test]
    fn deterministic_and_name_sensitive() {
        assert_eq!(signature(&assign("A", "B")), signature(&assign("A", "B")));
        assert_ne!(signature(&assign("A", "B")), signature(&assign("A", "C")));
    }

    #[test]
    fn dimensions_distinguish() {
        let sig = |src: &str| signature(&crate::parse_program(src).unwrap().check().unwrap()[0]);
        let base = "tensor A dim 3 rank 1;\ntensor B dim 3 rank 2;\n";
        let a = sig(&format!("{base}index m : 2;\nA(i) = Sum(m, B(i,m));"));
        let b = sig(&format!("{base}index m : 3;\nA(i) = Sum(m, B(i,m));"));
        assert_ne!(a, b);
        let c = sig("tensor A dim 3 rank 1;\ntensor B dim 3 rank 2 sym(0,1);\nA(i) = Sum(m, B(i,m));");
        assert_ne!(b, c);
    }
}
