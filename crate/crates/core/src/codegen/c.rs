use std::fmt::Write;

use super::print::{flat_folded, leaf_terms, number_nodes, Printer, SumStyle};
use super::{arguments, kernel_name, mangle, ArgDesc, ArgRole, GeneratedUnit};
use crate::ir::{CheckedStatement, Expr, TensorLeaf};

/// Emits a C99 kernel `tl_<ordinal>` for a checked statement.
///
/// Parameters are `const long N`, the left-hand pointer array `L`, right-hand
/// tensor arrays `R<k>`, scalar fields `F<k>` and constants `d<k>`. The loop
/// nest runs the left-hand indices (highest slot outermost, symmetric lower
/// bounds), then the grid, then one accumulator loop per Sum.
pub fn emit_c(checked: &CheckedStatement, ordinal: usize) -> GeneratedUnit {
    let args = arguments(checked);
    let name = kernel_name("tl", ordinal);
    let mut out = String::new();
    writeln!(out, "{}", c_prototype(&name, &args)).unwrap();
    out.push_str("{\n");

    let lhs = checked.lhs();
    let dim = checked.lhs_shape().dim;
    let loops = checked.loops();
    let mut depth = 1;
    for pos in (0..loops.vars.len()).rev() {
        let var = mangle(&loops.vars[pos].name);
        let lo = loops.lower_bound(pos).map_or("0".to_string(), |q| mangle(&loops.vars[q].name));
        line(&mut out, depth, &format!("for(int {var}={lo}; {var}<{}; ++{var}){{", loops.vars[pos].dim));
        depth += 1;
    }
    line(&mut out, depth, "for(long x=0; x<N; ++x){");
    depth += 1;

    let rhs = checked.rhs();
    let field_param = |n: &str| param_for(&args, n);
    let leaf = |leaf: &TensorLeaf, b: &Vec<(&str, usize)>| {
        let dim = checked.shape(&leaf.name).expect("validated").dim;
        format!("{}[{}][x]", field_param(&leaf.name), flat_folded(&leaf_terms(leaf, b), dim))
    };
    let field = |n: &str| format!("{}[x]", field_param(n));
    let constant = |k: usize| format!("d{k}");
    let printer = Printer {
        consts: number_nodes(rhs, |e| matches!(e, Expr::Const(_))),
        sums: SumStyle::Accumulator(number_nodes(rhs, |e| matches!(e, Expr::Sum(..)))),
        leaf: &leaf,
        field: &field,
        constant: &constant,
    };
    emit_sums(&printer, rhs, &mut out, depth);
    let target = format!("L[{}][x]", flat_folded(&leaf_terms(lhs, &Vec::new()), dim));
    line(&mut out, depth, &format!("{target} {} {};", checked.op().symbol(), printer.print(rhs)));

    while depth > 1 {
        depth -= 1;
        line(&mut out, depth, "}");
    }
    out.push_str("}\n");
    GeneratedUnit {
        kernel_name: name,
        source: out,
        args,
    }
}

/// `void tl_0001(const long N, double* const* L, ...)`
pub(crate) fn c_prototype(name: &str, args: &[ArgDesc]) -> String {
    let mut params = vec!["const long N".to_string()];
    for role in [ArgRole::Lhs, ArgRole::Tensor, ArgRole::Scalar, ArgRole::Const] {
        for a in args.iter().filter(|a| a.role == role) {
            params.push(match role {
                ArgRole::Lhs => "double* const* L".to_string(),
                ArgRole::Tensor => format!("const double* const* R{}", a.index),
                ArgRole::Scalar => format!("const double* F{}", a.index),
                ArgRole::Const => format!("const double d{}", a.index),
            });
        }
    }
    format!("void {name}({})", params.join(", "))
}

fn param_for(args: &[ArgDesc], name: &str) -> String {
    let a = args.iter().find(|a| a.name == name).expect("every field has an argument");
    match a.role {
        ArgRole::Lhs => "L".to_string(),
        ArgRole::Tensor => format!("R{}", a.index),
        ArgRole::Scalar => format!("F{}", a.index),
        ArgRole::Const => unreachable!("constants are not named"),
    }
}

/// Emits accumulator loops for every Sum in `e`, in preorder; nested Sums are
/// computed inside the loop of their enclosing Sum.
fn emit_sums(printer: &Printer, e: &Expr, out: &mut String, depth: usize) {
    match e {
        Expr::Sum(v, body) => {
            let SumStyle::Accumulator(map) = &printer.sums else { unreachable!() };
            let k = map[&(e as *const Expr)];
            let var = mangle(&v.name);
            line(out, depth, &format!("double s{k} = 0;"));
            line(out, depth, &format!("for(int {var}=0; {var}<{}; ++{var}){{", v.dim));
            emit_sums(printer, body, out, depth + 1);
            line(out, depth + 1, &format!("s{k} += {};", printer.print(body)));
            line(out, depth, "}");
        }
        Expr::Leaf(_) | Expr::Const(_) | Expr::Field(_) => {}
        Expr::Add(l, r) | Expr::Sub(l, r) | Expr::Mul(l, r) | Expr::Div(l, r) => {
            emit_sums(printer, l, out, depth);
            emit_sums(printer, r, out, depth);
        }
        Expr::Neg(x) | Expr::Sqrt(x) => emit_sums(printer, x, out, depth),
    }
}

pub(crate) fn line(out: &mut String, depth: usize, text: &str) {
    for _ in 0..depth {
        out.push_str("  ");
    }
    out.push_str(text);
    out.push('\n');
}
