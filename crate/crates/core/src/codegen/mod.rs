//! Source emission for the C and CUDA backends.
//!
//! Both backends address a tensor through a full, flattened pointer array of
//! length `dim^rank` (outer and inner slots concatenated, slot 0 fastest), in
//! which symmetric components alias one buffer. Generated code therefore needs
//! no symmetry logic beyond loop lower bounds.

mod c;
mod cuda;
mod print;

use std::collections::HashMap;

use serde::Serialize;

use crate::ir::{CheckedStatement, Expr};
use crate::tensor::TensorShape;

pub use c::emit_c;
pub(crate) use c::c_prototype;
pub(crate) use cuda::{cuda_param_name, cuda_params};
pub use cuda::{emit_cuda, emit_pointer_cache, plan_parallelization, tune, Coord, LaunchConfig, Plan};

/// What a kernel argument carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ArgRole {
    /// The written tensor (also used for any reads of the same field).
    Lhs,
    /// A read-only tensor.
    Tensor,
    /// A scalar grid field.
    Scalar,
    /// A constant; one argument per occurrence.
    Const,
}

/// One kernel argument, in manifest order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArgDesc {
    pub role: ArgRole,
    /// Field name; empty for constants.
    pub name: String,
    /// Position among arguments of the same role.
    pub index: usize,
    #[serde(skip)]
    pub shape: Option<TensorShape>,
    pub value: Option<f64>,
}

impl ArgDesc {
    /// Read-only arguments are declared `const` in generated code.
    pub fn is_const(&self) -> bool {
        self.role != ArgRole::Lhs
    }

    /// Length of the flattened pointer array for tensor arguments.
    pub fn full_len(&self) -> Option<usize> {
        self.shape.as_ref().map(|s| s.dim.pow(s.total_rank() as u32))
    }
}

/// Emitted source for one statement.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedUnit {
    pub kernel_name: String,
    pub source: String,
    pub args: Vec<ArgDesc>,
}

/// Arguments of a statement: the left-hand tensor, then right-hand tensors and
/// scalar fields in depth-first first-occurrence order, with every constant
/// occurrence in place.
pub fn arguments(checked: &CheckedStatement) -> Vec<ArgDesc> {
    let lhs = &checked.lhs().name;
    let mut args = vec![ArgDesc {
        role: ArgRole::Lhs,
        name: lhs.clone(),
        index: 0,
        shape: Some(checked.lhs_shape().clone()),
        value: None,
    }];
    let mut counts: HashMap<ArgRole, usize> = HashMap::new();
    let mut push = |args: &mut Vec<ArgDesc>, role, name: &str, shape, value| {
        let index = counts.entry(role).or_insert(0);
        args.push(ArgDesc {
            role,
            name: name.to_string(),
            index: *index,
            shape,
            value,
        });
        *index += 1;
    };
    checked.rhs().walk(&mut |e| match e {
        Expr::Leaf(leaf) if leaf.name != *lhs && !args.iter().any(|a| a.name == leaf.name) => {
            push(&mut args, ArgRole::Tensor, &leaf.name, checked.shape(&leaf.name).cloned(), None)
        }
        Expr::Field(name) if !args.iter().any(|a| a.name == *name) => {
            push(&mut args, ArgRole::Scalar, name, None, None)
        }
        Expr::Const(v) => push(&mut args, ArgRole::Const, "", None, Some(*v)),
        _ => {}
    });
    args
}

/// Kernel name for an ordinal in the given backend style.
pub fn kernel_name(prefix: &str, ordinal: usize) -> String {
    format!("{prefix}_{ordinal:04}")
}

/// Identifiers generated code reserves for itself or the C language.
const RESERVED: &[&str] = &[
    "N", "x", "L", "auto", "break", "case", "char", "const", "continue", "default", "do", "double", "else", "enum",
    "extern", "float", "for", "goto", "if", "inline", "int", "long", "register", "restrict", "return", "short",
    "signed", "sizeof", "static", "struct", "switch", "typedef", "union", "unsigned", "void", "volatile", "while",
    "sqrt", "dim3", "threadIdx", "blockIdx", "blockDim", "gridDim",
];

/// C spelling of an index variable, renamed when it could collide with a
/// generated identifier. The renaming is injective.
pub(crate) fn mangle(name: &str) -> String {
    let generated = |p: &str| {
        name.strip_prefix(p)
            .is_some_and(|rest| !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()))
    };
    let clash = RESERVED.contains(&name)
        || name.starts_with("ix_")
        || ["R", "F", "d", "s", "TDm", "Dm"].iter().any(|p| generated(p));
    if clash {
        format!("ix_{name}")
    } else {
        name.to_string()
    }
}
