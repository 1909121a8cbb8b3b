use std::fmt::Write;

use super::c::line;
use super::print::{flat_per_slot, leaf_terms, number_nodes, Printer, SumStyle};
use super::{arguments, kernel_name, mangle, ArgDesc, ArgRole, GeneratedUnit};
use crate::ir::{CheckedStatement, Expr, LhsLoops, TensorLeaf};

/// Thread coordinates available to left-hand indices; `x` always carries the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coord {
    ThreadY,
    BlockY,
    ThreadZ,
    BlockZ,
}

impl Coord {
    /// Assignment order for parallel indices.
    pub const ORDER: [Coord; 4] = [Coord::ThreadY, Coord::BlockY, Coord::ThreadZ, Coord::BlockZ];

    pub fn as_str(self) -> &'static str {
        match self {
            Coord::ThreadY => "threadIdx.y",
            Coord::BlockY => "blockIdx.y",
            Coord::ThreadZ => "threadIdx.z",
            Coord::BlockZ => "blockIdx.z",
        }
    }
}

/// Which left-hand loop positions run on thread coordinates and which loop
/// inside the kernel. Positions index [`LhsLoops::vars`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Plan {
    pub parallel: Vec<(usize, Coord)>,
    /// Serialized positions in increasing order.
    pub serial: Vec<usize>,
}

/// Serializes the lower-bounded member of every symmetric pair, then assigns
/// the remaining indices in slot order to `threadIdx.y`, `blockIdx.y`,
/// `threadIdx.z`, `blockIdx.z`; indices beyond four are serialized too.
pub fn plan_parallelization(loops: &LhsLoops) -> Plan {
    let n = loops.vars.len();
    let mut serial: Vec<usize> = (0..n).filter(|&p| loops.lower_bound(p).is_some()).collect();
    let mut parallel = Vec::new();
    for p in (0..n).filter(|&p| loops.lower_bound(p).is_none()) {
        match Coord::ORDER.get(parallel.len()) {
            Some(&c) => parallel.push((p, c)),
            None => serial.push(p),
        }
    }
    serial.sort_unstable();
    Plan { parallel, serial }
}

/// Launch shape for a plan. `nblocks_x` depends on `N` and is computed in the
/// generated wrapper.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LaunchConfig {
    pub blocksize: (usize, usize, usize),
    /// `(nblocks_y, nblocks_z)`.
    pub nblocks_yz: (usize, usize),
}

impl LaunchConfig {
    /// Largest gridsize a launch can cover.
    pub fn max_gridsize(&self) -> usize {
        MAX_BLOCKS_X * self.blocksize.0
    }

    /// `ceil(N / bx)`, as the wrapper computes it.
    pub fn nblocks_x(&self, n: usize) -> usize {
        n / self.blocksize.0 + usize::from(n % self.blocksize.0 != 0)
    }
}

/// Hardware limit on `gridDim.x`.
pub const MAX_BLOCKS_X: usize = 65535;

/// `blocksize_x` for a given `blocksize_y * blocksize_z`.
fn blocksize_x(p: usize) -> usize {
    match p {
        1 => 256,
        3 | 4 => 64,
        9 => 32,
        12 => 16,
        16 => 32,
        // Outside the tuned set (index dimensions other than 3 and 4).
        _ => 32,
    }
}

/// Launch configuration from the dimensions of the indices on each coordinate.
pub fn tune(plan: &Plan, loops: &LhsLoops) -> LaunchConfig {
    let dim_of = |c: Coord| {
        plan.parallel
            .iter()
            .find(|(_, k)| *k == c)
            .map_or(1, |&(p, _)| loops.vars[p].dim)
    };
    let (by, bz) = (dim_of(Coord::ThreadY), dim_of(Coord::ThreadZ));
    LaunchConfig {
        blocksize: (blocksize_x(by * bz), by, bz),
        nblocks_yz: (dim_of(Coord::BlockY), dim_of(Coord::BlockZ)),
    }
}

/// Emits the CUDA kernel `g_<ordinal>` and its launch wrapper
/// `CUDAWrapper_g_<ordinal>`. Sums are unrolled in expansion order.
pub fn emit_cuda(checked: &CheckedStatement, ordinal: usize) -> GeneratedUnit {
    let args = arguments(checked);
    let name = kernel_name("g", ordinal);
    let loops = checked.loops();
    let plan = plan_parallelization(loops);
    let config = tune(&plan, loops);
    let mut out = String::new();

    writeln!(out, "__global__ void {name}({}){{", cuda_params(&args, true)).unwrap();
    for &(p, c) in &plan.parallel {
        line(&mut out, 2, &format!("const int {} = {};", mangle(&loops.vars[p].name), c.as_str()));
    }
    line(&mut out, 2, "const int x = blockIdx.x*blockDim.x + threadIdx.x;");
    let mut guard = vec!["(x<N)".to_string()];
    for &(p, _) in &plan.parallel {
        guard.push(format!("({}<{})", mangle(&loops.vars[p].name), loops.vars[p].dim));
    }
    line(&mut out, 2, &format!("if ({}){{", guard.join("&&")));
    let mut depth = 3;
    for &p in plan.serial.iter().rev() {
        let var = mangle(&loops.vars[p].name);
        let lo = loops.lower_bound(p).map_or("0".to_string(), |q| mangle(&loops.vars[q].name));
        line(&mut out, depth, &format!("for(int {var}={lo}; {var}<{}; ++{var}){{", loops.vars[p].dim));
        depth += 1;
    }

    let rhs = checked.rhs();
    let leaf = |leaf: &TensorLeaf, b: &Vec<(&str, usize)>| {
        let dim = checked.shape(&leaf.name).expect("validated").dim;
        format!("{}[{}][x]", param_for(&args, &leaf.name), flat_per_slot(&leaf_terms(leaf, b), dim))
    };
    let field = |n: &str| format!("{}[x]", param_for(&args, n));
    let constant = |k: usize| format!("d{k:02}");
    let printer = Printer {
        consts: number_nodes(rhs, |e| matches!(e, Expr::Const(_))),
        sums: SumStyle::Unrolled,
        leaf: &leaf,
        field: &field,
        constant: &constant,
    };
    let dim = checked.lhs_shape().dim;
    let target = format!("TDm00[{}][x]", flat_per_slot(&leaf_terms(checked.lhs(), &Vec::new()), dim));
    line(&mut out, depth, &format!("{target} {} {};", checked.op().symbol(), printer.print(rhs)));
    while depth > 2 {
        depth -= 1;
        line(&mut out, depth, "}");
    }
    out.push_str("}\n\n");

    let (bx, by, bz) = config.blocksize;
    let (gy, gz) = config.nblocks_yz;
    writeln!(out, "int CUDAWrapper_{name}({}){{", cuda_params(&args, false)).unwrap();
    for text in [
        "if (N <= 0) return 0;".to_string(),
        format!("const int blocksize_x = {bx};"),
        format!("if (N > {MAX_BLOCKS_X}*blocksize_x) return 1;"),
        "const int nblocks_x = N/blocksize_x + (N%blocksize_x ? 1 : 0);".to_string(),
        format!("const int blocksize_y = {by};"),
        format!("const int nblocks_y = {gy};"),
        format!("const int blocksize_z = {bz};"),
        format!("const int nblocks_z = {gz};"),
        "const dim3 blocksize(blocksize_x, blocksize_y, blocksize_z);".to_string(),
        "const dim3 nblocks(nblocks_x, nblocks_y, nblocks_z);".to_string(),
        format!("{name}<<<nblocks,blocksize>>>({});", call_args(&args)),
        "return 0;".to_string(),
    ] {
        line(&mut out, 2, &text);
    }
    out.push_str("}\n");

    GeneratedUnit {
        kernel_name: name,
        source: out,
        args,
    }
}

/// Parameter names: `TDm00` for the left-hand side, `TDm01..` for right-hand
/// tensors, `Dm00..` for scalar fields, `d00..` for constants.
pub(crate) fn cuda_param_name(a: &ArgDesc) -> String {
    match a.role {
        ArgRole::Lhs => "TDm00".to_string(),
        ArgRole::Tensor => format!("TDm{:02}", a.index + 1),
        ArgRole::Scalar => format!("Dm{:02}", a.index),
        ArgRole::Const => format!("d{:02}", a.index),
    }
}

fn ordered(args: &[ArgDesc]) -> impl Iterator<Item = &ArgDesc> {
    [ArgRole::Lhs, ArgRole::Tensor, ArgRole::Scalar, ArgRole::Const]
        .into_iter()
        .flat_map(move |role| args.iter().filter(move |a| a.role == role))
}

/// Kernel (`restrict`) or wrapper parameter list.
pub(crate) fn cuda_params(args: &[ArgDesc], restrict: bool) -> String {
    let r = if restrict { " __restrict__" } else { "" };
    let mut params = vec!["const int N".to_string()];
    for a in ordered(args) {
        let n = cuda_param_name(a);
        params.push(match a.role {
            ArgRole::Lhs => format!("double**{r} {n}"),
            ArgRole::Tensor => format!("const double* const*{r} {n}"),
            ArgRole::Scalar => format!("const double*{r} {n}"),
            ArgRole::Const => format!("const double {n}"),
        });
    }
    params.join(", ")
}

fn call_args(args: &[ArgDesc]) -> String {
    let mut names = vec!["N".to_string()];
    names.extend(ordered(args).map(cuda_param_name));
    names.join(", ")
}

fn param_for(args: &[ArgDesc], name: &str) -> String {
    cuda_param_name(args.iter().find(|a| a.name == name).expect("every field has an argument"))
}

/// Support unit caching device copies of component-pointer arrays.
///
/// `tl_device_pointers(owner, host, len)` returns the device array for
/// `owner`, allocating it on first use and uploading `host` only when it
/// differs member-wise from the last uploaded copy. Defining `TL_DEVICE_STUBS`
/// before inclusion replaces the CUDA runtime calls, so the logic can be
/// compiled and tested as plain C.
pub fn emit_pointer_cache() -> String {
    POINTER_CACHE.to_string()
}

const POINTER_CACHE: &str = r#"/* Device copies of component-pointer arrays, re-uploaded only when the host array changes. */
#include <stdlib.h>

#ifndef TL_DEVICE_STUBS
#include <cuda_runtime.h>
#define TL_DEVICE_ALLOC(ptr, bytes) (cudaMalloc((void**)(ptr), (bytes)) == cudaSuccess)
#define TL_DEVICE_UPLOAD(dst, src, bytes) (cudaMemcpy((dst), (src), (bytes), cudaMemcpyHostToDevice) == cudaSuccess)
#define TL_DEVICE_FREE(ptr) cudaFree(ptr)
#endif

typedef struct tl_ptrcache {
  const void* owner;
  double** host;
  double** device;
  int len;
} tl_ptrcache;

static tl_ptrcache* tl_caches = NULL;
static int tl_ncaches = 0;

static tl_ptrcache* tl_cache_for(const void* owner, int len)
{
  int i;
  tl_ptrcache* grown;
  for(i=0; i<tl_ncaches; ++i){
    if (tl_caches[i].owner == owner && tl_caches[i].len == len) return &tl_caches[i];
  }
  grown = (tl_ptrcache*)realloc(tl_caches, (tl_ncaches + 1)*sizeof(tl_ptrcache));
  if (grown == NULL) return NULL;
  tl_caches = grown;
  tl_caches[tl_ncaches].owner = owner;
  tl_caches[tl_ncaches].host = NULL;
  tl_caches[tl_ncaches].device = NULL;
  tl_caches[tl_ncaches].len = len;
  return &tl_caches[tl_ncaches++];
}

double** tl_device_pointers(const void* owner, double* const* host, int len)
{
  int i;
  int same;
  tl_ptrcache* c = tl_cache_for(owner, len);
  if (c == NULL) return NULL;
  if (c->device == NULL) {
    /* Created lazily: arrays that are never retrieved never reach the device. */
    c->host = (double**)calloc(len, sizeof(double*));
    if (c->host == NULL) return NULL;
    if (!TL_DEVICE_ALLOC(&c->device, len*sizeof(double*))) {
      c->device = NULL;
      return NULL;
    }
    same = 0;
  } else {
    same = 1;
    for(i=0; i<len; ++i){
      if (c->host[i] != host[i]) {
        same = 0;
        break;
      }
    }
  }
  if (!same) {
    for(i=0; i<len; ++i) c->host[i] = host[i];
    if (!TL_DEVICE_UPLOAD(c->device, c->host, len*sizeof(double*))) return NULL;
  }
  return c->device;
}

void tl_device_pointers_release(void)
{
  int i;
  for(i=0; i<tl_ncaches; ++i){
    if (tl_caches[i].device != NULL) TL_DEVICE_FREE(tl_caches[i].device);
    free(tl_caches[i].host);
  }
  free(tl_caches);
  tl_caches = NULL;
  tl_ncaches = 0;
}
"#;
