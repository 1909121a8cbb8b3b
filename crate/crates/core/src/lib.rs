//! Symmetry-aware tensor-loop compiler.
//!
//! Tensor assignment statements such as
//!
//! ```text
//! dtg(sym<0,1>, i, j) = -2*alpha*K(i,j) + db(i,j) + db(j,i);
//! ```
//!
//! are parsed ([`parse`]), checked ([`ir::validate_statement`]), evaluated directly over
//! gridded field data ([`eval`]), and lowered to loop-based C or CUDA kernels
//! ([`codegen`], [`codewriter`]). [`bench`] measures effective bandwidth over a
//! built-in suite of statements, and [`tldf`] is the binary field-container format.

pub mod bench;
pub mod codegen;
pub mod codewriter;
pub mod eval;
pub mod ir;
pub mod parse;
pub mod tensor;
pub mod tldf;

pub use eval::{eval_statement, eval_statement_per_component, Env, EvalError, Value};
pub use ir::{
    count_data, free_indices, signature, validate_statement, AssignOp, CheckedStatement, DataCount, Declarations,
    Declared, Expr, IndexTerm, IndexVar, Statement, TensorLeaf, ValidationError,
};
pub use parse::{parse_program, Program};
pub use tensor::{GroupLayout, MultiIndex, ScalarField, ShapeError, SymmetrySpec, TensorField, TensorShape};
