//! Statement registry and emission of the generated source tree.
//!
//! Each backend gets three files:
//!
//! * `tloops_dispatch.*`: one routing function `tloops_NNNN` per statement,
//!   choosing the CUDA or CPU kernel by `ACCEL_CUDA` / `ACCEL_CPU`, plus
//!   argument-name tables. Without either flag it reports
//!   `TL_NOT_ACCELERATED` so the caller can fall back to its own loops.
//! * `tloops_bindings.*`: builds the full aliased pointer arrays a kernel
//!   expects from `tl_field` descriptors holding only stored components.
//! * `tloops_kernels.*`: the kernels themselves.
//!
//! The dispatch file also exports `tl_routes`, indexed by ordinal - 1.
//! A `tloops_manifest.tsv` lists `ordinal, signature, N_e, N_d` per line.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::codegen::{arguments, emit_c, emit_cuda, emit_pointer_cache, kernel_name, ArgDesc, ArgRole};
use crate::ir::{count_data, signature, CheckedStatement, DataCount};
use crate::tensor::TensorShape;

pub const MANIFEST_FILE: &str = "tloops_manifest.tsv";

/// Target of [`Registry::write_all`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    C,
    Cuda,
    Both,
}

impl Backend {
    fn c(self) -> bool {
        self != Backend::Cuda
    }

    fn cuda(self) -> bool {
        self != Backend::C
    }
}

#[derive(Debug, thiserror::Error)]
pub enum WriteError {
    #[error("nothing to generate")]
    Empty,
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

/// A registered statement.
#[derive(Debug, Clone)]
pub struct Entry {
    pub ordinal: usize,
    pub signature: String,
    pub statement: CheckedStatement,
    pub count: DataCount,
}

/// Unique statements in first-registration order.
#[derive(Debug, Default)]
pub struct Registry {
    entries: Vec<Entry>,
    by_signature: HashMap<String, usize>,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Ordinal of the statement, assigning the next one (from 1) if its
    /// signature is new.
    pub fn register(&mut self, checked: &CheckedStatement) -> usize {
        let sig = signature(checked);
        if let Some(&ordinal) = self.by_signature.get(&sig) {
            return ordinal;
        }
        let ordinal = self.entries.len() + 1;
        self.entries.push(Entry {
            ordinal,
            signature: sig.clone(),
            statement: checked.clone(),
            count: count_data(checked),
        });
        self.by_signature.insert(sig, ordinal);
        ordinal
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    /// File names and contents for `backend`, manifest last.
    pub fn render(&self, backend: Backend) -> Result<Vec<(String, String)>, WriteError> {
        if self.is_empty() {
            return Err(WriteError::Empty);
        }
        let mut files = Vec::new();
        if backend.c() {
            files.push(("tloops_dispatch.c".to_string(), self.dispatch(backend)));
            files.push(("tloops_bindings.c".to_string(), self.c_bindings()));
            files.push(("tloops_kernels.c".to_string(), self.c_kernels()));
        }
        if backend.cuda() {
            files.push(("tloops_dispatch.cu".to_string(), self.dispatch(backend)));
            files.push(("tloops_bindings.cu".to_string(), self.cuda_bindings()));
            files.push(("tloops_kernels.cu".to_string(), self.cuda_kernels()));
        }
        files.push((MANIFEST_FILE.to_string(), self.manifest()));
        Ok(files)
    }

    /// Writes [`Registry::render`] into `dir`, creating it if needed.
    pub fn write_all(&self, dir: &Path, backend: Backend) -> Result<Vec<PathBuf>, WriteError> {
        let files = self.render(backend)?;
        fs::create_dir_all(dir).map_err(|source| WriteError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let mut written = Vec::new();
        for (name, text) in files {
            let path = dir.join(name);
            fs::write(&path, text).map_err(|source| WriteError::Io {
                path: path.clone(),
                source,
            })?;
            written.push(path);
        }
        Ok(written)
    }

    pub fn manifest(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            writeln!(out, "{}\t{}\t{}\t{}", e.ordinal, e.signature, e.count.n_e, e.count.n_d).unwrap();
        }
        out
    }

    fn c_kernels(&self) -> String {
        let mut out = String::from("/* Generated kernels. */\n#include <math.h>\n\n");
        for e in &self.entries {
            out.push_str(&emit_c(&e.statement, e.ordinal).source);
            out.push('\n');
        }
        out
    }

    fn cuda_kernels(&self) -> String {
        let mut out = String::from("/* Generated kernels. */\n\n");
        for e in &self.entries {
            out.push_str(&emit_cuda(&e.statement, e.ordinal).source);
            out.push('\n');
        }
        out
    }

    fn dispatch(&self, backend: Backend) -> String {
        let mut out = String::from("/* Routing from field descriptors to generated kernels. */\n");
        out.push_str(&self.preamble(backend));
        for e in &self.entries {
            let args = arguments(&e.statement);
            let n = e.ordinal;
            let fields: Vec<&ArgDesc> = field_args(&args).collect();
            let names: Vec<String> = fields.iter().map(|a| c_string(&a.name)).collect();
            writeln!(
                out,
                "\nconst char* const tl_argnames_{n:04}[{}] = {{{}}};",
                names.len(),
                names.join(", ")
            )
            .unwrap();
            writeln!(out, "\nint tloops_{n:04}(tl_field* const* fields, int nfields)\n{{").unwrap();
            let mut branch = "#if";
            if backend.cuda() {
                writeln!(out, "{branch} defined(ACCEL_CUDA)").unwrap();
                for text in [
                    format!("tl_cuda_args_{n:04} a;"),
                    format!("const int err = tl_cuda_bind_{n:04}(fields, nfields, &a);"),
                    "if (err != TL_OK) return err;".to_string(),
                    format!(
                        "return CUDAWrapper_{}({}) ? TL_ERR_LAUNCH : TL_OK;",
                        kernel_name("g", n),
                        member_list(&args, cuda_member)
                    ),
                ] {
                    writeln!(out, "  {text}").unwrap();
                }
                branch = "#elif";
            }
            if backend.c() {
                writeln!(out, "{branch} defined(ACCEL_CPU)").unwrap();
                for text in [
                    format!("tl_args_{n:04} a;"),
                    format!("const int err = tl_bind_{n:04}(fields, nfields, &a);"),
                    "if (err != TL_OK) return err;".to_string(),
                    format!("{}({});", kernel_name("tl", n), member_list(&args, c_member)),
                    "return TL_OK;".to_string(),
                ] {
                    writeln!(out, "  {text}").unwrap();
                }
            }
            out.push_str("#else\n  (void)fields;\n  (void)nfields;\n  return TL_NOT_ACCELERATED;\n#endif\n}\n");
        }
        writeln!(out, "\nconst int tl_nroutes = {};\nconst tl_route tl_routes[{}] = {{", self.len(), self.len()).unwrap();
        for e in &self.entries {
            let n = e.ordinal;
            let nfields = field_args(&arguments(&e.statement)).count();
            writeln!(out, "  {{{n}, {nfields}, tl_argnames_{n:04}, tloops_{n:04}}},").unwrap();
        }
        out.push_str("};\n");
        out
    }

    fn c_bindings(&self) -> String {
        let mut out = String::from("/* Aliased component-pointer arrays for the CPU kernels. */\n");
        out.push_str(&self.preamble(Backend::C));
        out.push_str(CHECKS);
        for e in &self.entries {
            let n = e.ordinal;
            let args = arguments(&e.statement);
            bind_tables(&mut out, n, &args);
            writeln!(out, "\nint tl_bind_{n:04}(tl_field* const* fields, int nfields, tl_args_{n:04}* a)\n{{").unwrap();
            bind_checks(&mut out, n, &args);
            line(&mut out, "a->N = fields[0]->N;");
            for (k, arg) in field_args(&args).enumerate() {
                let member = c_member(arg);
                match arg.role {
                    ArgRole::Scalar => line(&mut out, &format!("a->{member} = fields[{k}]->comp[0];")),
                    _ => line(
                        &mut out,
                        &format!(
                            "for(i=0; i<{len}; ++i) a->{member}[i] = fields[{k}]->comp[tl_map_{n:04}_{k}[i]];",
                            len = arg.full_len().unwrap()
                        ),
                    ),
                }
            }
            for arg in args.iter().filter(|a| a.role == ArgRole::Const) {
                line(&mut out, &format!("a->{} = {};", c_member(arg), c_double(arg.value.unwrap())));
            }
            line(&mut out, "return TL_OK;");
            out.push_str("}\n");
        }
        out
    }

    fn cuda_bindings(&self) -> String {
        let mut out = String::from("/* Device-resident aliased component-pointer arrays for the CUDA kernels. */\n");
        out.push_str(&self.preamble(Backend::Cuda));
        out.push('\n');
        out.push_str(&emit_pointer_cache());
        out.push_str(CHECKS);
        for e in &self.entries {
            let n = e.ordinal;
            let args = arguments(&e.statement);
            bind_tables(&mut out, n, &args);
            writeln!(
                out,
                "\nint tl_cuda_bind_{n:04}(tl_field* const* fields, int nfields, tl_cuda_args_{n:04}* a)\n{{"
            )
            .unwrap();
            bind_checks(&mut out, n, &args);
            line(&mut out, "if (fields[0]->N > 2147483647L) return TL_ERR_GRIDSIZE;");
            line(&mut out, "a->N = (int)fields[0]->N;");
            for (k, arg) in field_args(&args).enumerate() {
                let member = cuda_member(arg);
                match arg.role {
                    ArgRole::Scalar => line(&mut out, &format!("a->{member} = fields[{k}]->comp[0];")),
                    _ => {
                        let len = arg.full_len().unwrap();
                        line(&mut out, "{");
                        line(&mut out, &format!("  double* host[{len}];"));
                        line(
                            &mut out,
                            &format!("  for(i=0; i<{len}; ++i) host[i] = fields[{k}]->comp[tl_map_{n:04}_{k}[i]];"),
                        );
                        line(
                            &mut out,
                            &format!("  a->{member} = tl_device_pointers(fields[{k}], host, {len});"),
                        );
                        line(&mut out, &format!("  if (a->{member} == NULL) return TL_ERR_DEVICE;"));
                        line(&mut out, "}");
                    }
                }
            }
            for arg in args.iter().filter(|a| a.role == ArgRole::Const) {
                line(&mut out, &format!("a->{} = {};", cuda_member(arg), c_double(arg.value.unwrap())));
            }
            line(&mut out, "return TL_OK;");
            out.push_str("}\n");
        }
        out
    }

    /// Types, status codes and prototypes shared by dispatch and bindings.
    fn preamble(&self, backend: Backend) -> String {
        let mut out = String::from(PREAMBLE);
        for e in &self.entries {
            let n = e.ordinal;
            let args = arguments(&e.statement);
            if backend.c() {
                writeln!(out, "\ntypedef struct tl_args_{n:04} {{\n  long N;").unwrap();
                for a in &args {
                    let m = c_member(a);
                    let decl = match a.role {
                        ArgRole::Lhs => format!("double* {m}[{}];", a.full_len().unwrap()),
                        ArgRole::Tensor => format!("const double* {m}[{}];", a.full_len().unwrap()),
                        ArgRole::Scalar => format!("const double* {m};"),
                        ArgRole::Const => format!("double {m};"),
                    };
                    line(&mut out, &decl);
                }
                writeln!(out, "}} tl_args_{n:04};").unwrap();
                writeln!(out, "int tl_bind_{n:04}(tl_field* const* fields, int nfields, tl_args_{n:04}* a);").unwrap();
                writeln!(out, "{};", crate::codegen::c_prototype(&kernel_name("tl", n), &args)).unwrap();
            }
            if backend.cuda() {
                writeln!(out, "\ntypedef struct tl_cuda_args_{n:04} {{\n  int N;").unwrap();
                for a in &args {
                    let m = cuda_member(a);
                    let decl = match a.role {
                        ArgRole::Lhs => format!("double** {m};"),
                        ArgRole::Tensor => format!("double** {m};"),
                        ArgRole::Scalar => format!("const double* {m};"),
                        ArgRole::Const => format!("double {m};"),
                    };
                    line(&mut out, &decl);
                }
                writeln!(out, "}} tl_cuda_args_{n:04};").unwrap();
                writeln!(
                    out,
                    "int tl_cuda_bind_{n:04}(tl_field* const* fields, int nfields, tl_cuda_args_{n:04}* a);"
                )
                .unwrap();
                writeln!(
                    out,
                    "int CUDAWrapper_{}({});",
                    kernel_name("g", n),
                    crate::codegen::cuda_params(&args, false)
                )
                .unwrap();
            }
            writeln!(out, "int tloops_{n:04}(tl_field* const* fields, int nfields);").unwrap();
        }
        out
    }
}

const PREAMBLE: &str = r#"#include <stddef.h>

#ifndef TLOOPS_SHARED_TYPES
#define TLOOPS_SHARED_TYPES
/* A grid field as stored by the host: `ncomp` arrays of `N` doubles, one per
   independent component (outer slot major, inner slot minor). Scalar fields
   have ncomp == 1. */
typedef struct tl_field {
  const char* name;
  long N;
  int ncomp;
  double** comp;
} tl_field;

enum {
  TL_OK = 0,
  TL_NOT_ACCELERATED = 1,
  TL_ERR_ARITY = 2,
  TL_ERR_SHAPE = 3,
  TL_ERR_GRIDSIZE = 4,
  TL_ERR_DEVICE = 5,
  TL_ERR_LAUNCH = 6
};

/* One entry per ordinal, in ordinal order. `fields` passed to `run` follow
   `argnames`. */
typedef struct tl_route {
  int ordinal;
  int nfields;
  const char* const* argnames;
  int (*run)(tl_field* const* fields, int nfields);
} tl_route;
extern const tl_route tl_routes[];
extern const int tl_nroutes;
#endif
"#;

const CHECKS: &str = r#"
static int tl_check(tl_field* const* fields, int nfields, const int* ncomp, int expected)
{
  int k;
  if (nfields != expected) return TL_ERR_ARITY;
  for(k=0; k<expected; ++k){
    if (fields[k] == NULL || fields[k]->ncomp != ncomp[k]) return TL_ERR_SHAPE;
    if (fields[k]->N != fields[0]->N) return TL_ERR_GRIDSIZE;
  }
  return TL_OK;
}
"#;

/// Tensor and scalar arguments, which are passed as fields in this order.
fn field_args(args: &[ArgDesc]) -> impl Iterator<Item = &ArgDesc> {
    args.iter().filter(|a| a.role != ArgRole::Const)
}

fn c_member(a: &ArgDesc) -> String {
    match a.role {
        ArgRole::Lhs => "L".to_string(),
        ArgRole::Tensor => format!("R{}", a.index),
        ArgRole::Scalar => format!("F{}", a.index),
        ArgRole::Const => format!("d{}", a.index),
    }
}

fn cuda_member(a: &ArgDesc) -> String {
    crate::codegen::cuda_param_name(a)
}

/// Kernel call arguments drawn from an args struct `a`, in prototype order.
fn member_list(args: &[ArgDesc], member: fn(&ArgDesc) -> String) -> String {
    let mut out = vec!["a.N".to_string()];
    for role in [ArgRole::Lhs, ArgRole::Tensor, ArgRole::Scalar, ArgRole::Const] {
        for a in args.iter().filter(|a| a.role == role) {
            out.push(format!("a.{}", member(a)));
        }
    }
    out.join(", ")
}

/// Component count expected of each field argument and, per tensor, the map
/// from a full flattened index to its stored component.
fn bind_tables(out: &mut String, n: usize, args: &[ArgDesc]) {
    let counts: Vec<String> = field_args(args)
        .map(|a| a.shape.as_ref().map_or(1, |s| s.component_count().unwrap()).to_string())
        .collect();
    writeln!(out, "\nstatic const int tl_ncomp_{n:04}[{}] = {{{}}};", counts.len(), counts.join(", ")).unwrap();
    for (k, a) in field_args(args).enumerate() {
        if let Some(shape) = &a.shape {
            let map: Vec<String> = full_map(shape).iter().map(usize::to_string).collect();
            writeln!(out, "static const int tl_map_{n:04}_{k}[{}] = {{{}}};", map.len(), map.join(", ")).unwrap();
        }
    }
}

fn bind_checks(out: &mut String, n: usize, args: &[ArgDesc]) {
    line(out, "int i;");
    line(out, "int err;");
    line(
        out,
        &format!("err = tl_check(fields, nfields, tl_ncomp_{n:04}, {});", field_args(args).count()),
    );
    line(out, "if (err != TL_OK) return err;");
}

/// Stored component for each full index, outer slots first, slot 0 fastest.
pub fn full_map(shape: &TensorShape) -> Vec<usize> {
    let (outer, inner) = shape.layouts().expect("validated shape");
    let outer_len = outer.full_len();
    let inner_count = inner.component_count();
    (0..outer_len * inner.full_len())
        .map(|f| outer.slot_of_flat(f % outer_len) * inner_count + inner.slot_of_flat(f / outer_len))
        .collect()
}

fn line(out: &mut String, text: &str) {
    out.push_str("  ");
    out.push_str(text);
    out.push('\n');
}

fn c_string(s: &str) -> String {
    let mut out = String::from("\"");
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            _ => out.push(ch),
        }
    }
    out.push('"');
    out
}

/// A C literal that reads back as exactly `v`.
fn c_double(v: f64) -> String {
    if v.is_nan() {
        "(0.0/0.0)".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "(1.0/0.0)" } else { "(-1.0/0.0)" }.to_string()
    } else {
        format!("{v:?}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::builtin_suite;
    use crate::parse_program;

    fn checked(src: &str) -> Vec<CheckedStatement> {
        parse_program(src).unwrap().check().unwrap()
    }

    fn identity() -> CheckedStatement {
        checked("tensor A dim 3 rank 1;\ntensor B dim 3 rank 1;\nA(i) = B(i);").remove(0)
    }

    #[test]
    fn register_is_idempotent() {
        let mut r = Registry::new();
        assert_eq!(r.register(&identity()), 1);
        assert_eq!(r.register(&identity()), 1);
        assert_eq!(r.len(), 1);
    }

    #[test]
    fn distinct_statements_get_dense_ordinals() {
        let mut r = Registry::new();
        let s = checked("tensor A dim 3 rank 1;\ntensor B dim 3 rank 1;\nA(i) = B(i);\nA(i) += B(i);\nA(i) = B(i);");
        let ords: Vec<usize> = s.iter().map(|c| r.register(c)).collect();
        assert_eq!(ords, vec![1, 2, 1]);
    }

    #[test]
    fn suite_registers_fourteen() {
        let mut r = Registry::new();
        for e in builtin_suite() {
            r.register(&e.load().0);
        }
        assert_eq!(r.len(), 14);
        assert_eq!(r.entries().iter().map(|e| e.ordinal).collect::<Vec<_>>(), (1..=14).collect::<Vec<_>>());
    }

    #[test]
    fn empty_registry_refuses() {
        assert!(matches!(Registry::new().render(Backend::C), Err(WriteError::Empty)));
    }

    #[test]
    fn file_sets() {
        let mut r = Registry::new();
        r.register(&identity());
        let names = |b| r.render(b).unwrap().into_iter().map(|(n, _)| n).collect::<Vec<_>>();
        assert_eq!(
            names(Backend::C),
            ["tloops_dispatch.c", "tloops_bindings.c", "tloops_kernels.c", MANIFEST_FILE]
        );
        assert_eq!(names(Backend::Both).len(), 7);
    }

    #[test]
    fn kernel_names_appear_once_in_dispatch() {
        let mut r = Registry::new();
        for e in builtin_suite() {
            r.register(&e.load().0);
        }
        let files = r.render(Backend::Both).unwrap();
        let dispatch = &files.iter().find(|(n, _)| n == "tloops_dispatch.cu").unwrap().1;
        for k in 1..=14 {
            for name in [format!("tl_{k:04}("), format!("CUDAWrapper_g_{k:04}(")] {
                // Declared once in the shared preamble, called once.
                assert_eq!(dispatch.matches(&name).count(), 2, "{name}");
                assert_eq!(dispatch.matches(&format!("{name}a.N")).count(), 1, "{name}");
            }
            assert_eq!(dispatch.matches(&format!("int tloops_{k:04}(tl_field* const* fields, int nfields)\n{{")).count(), 1);
        }
    }

    #[test]
    fn symmetric_map_aliases() {
        let shape = TensorShape::simple(3, 2, crate::tensor::SymmetrySpec::new([(0, 1)]).unwrap()).unwrap();
        let map = full_map(&shape);
        assert_eq!(map.len(), 9);
        for a in 0..3 {
            for b in 0..3 {
                assert_eq!(map[a + 3 * b], map[b + 3 * a]);
            }
        }
        let mut distinct = map.clone();
        distinct.sort();
        distinct.dedup();
        assert_eq!(distinct, (0..6).collect::<Vec<_>>());
    }

    #[test]
    fn manifest_lines() {
        let mut r = Registry::new();
        r.register(&identity());
        let m = r.manifest();
        let cols: Vec<&str> = m.trim_end().split('\t').collect();
        assert_eq!(cols.len(), 4);
        assert_eq!(cols[0], "1");
        assert_eq!(cols[1], signature(&identity()));
        assert_eq!((cols[2], cols[3]), ("6", "0"));
    }

    #[test]
    fn constants_are_exact_literals() {
        assert_eq!(c_double(0.1), "0.1");
        assert_eq!(c_double(2.0), "2.0");
        assert_eq!(c_double(-1e-300), "-1e-300");
        assert_eq!("0.1".parse::<f64>().unwrap(), 0.1);
    }
}
