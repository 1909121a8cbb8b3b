//! Effective-bandwidth benchmarking over a built-in statement suite.
//!
//! Each run executes a statement `reps` times, discards the first timing and
//! reports the median of the rest. Effective bandwidth counts the bytes a
//! statement nominally moves: `8 * (N_e * N + N_d) / t`.

use std::io;
use std::time::Instant;

use rand::distributions::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::eval::{eval_with, Env, EvalError, Mode};
use crate::ir::{count_data, CheckedStatement, DataCount, Declarations, Declared};
use crate::parse::{parse_program, Diagnostic, Program};
use crate::tensor::{ScalarField, TensorField};

/// Seed for reproducible suite data.
pub const DEFAULT_SEED: u64 = 0xC0FFEE;

pub const DEFAULT_REPS: usize = 21;

pub const DEFAULT_GRIDS: [usize; 12] = [32, 64, 128, 256, 512, 1024, 2048, 4096, 8192, 16384, 32768, 65536];

/// A named single-statement program.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuiteEntry {
    pub name: &'static str,
    pub source: &'static str,
}

impl SuiteEntry {
    /// Parses and checks the entry's statement and declarations.
    pub fn load(&self) -> (CheckedStatement, Declarations) {
        let program = parse_program(self.source).unwrap_or_else(|d| panic!("suite entry {}: {d:?}", self.name));
        let mut checked = program
            .check()
            .unwrap_or_else(|d| panic!("suite entry {}: {d:?}", self.name));
        assert_eq!(checked.len(), 1, "suite entries hold one statement");
        (checked.remove(0), program.declarations())
    }

    pub fn case(&self) -> BenchCase {
        let (checked, decls) = self.load();
        BenchCase {
            name: self.name.to_string(),
            checked,
            decls,
        }
    }
}

/// A statement to time, with the declarations its random data is drawn from.
#[derive(Debug, Clone)]
pub struct BenchCase {
    pub name: String,
    pub checked: CheckedStatement,
    pub decls: Declarations,
}

/// One case per statement of a program, named `{stem}.{k}` from 1.
pub fn program_cases(stem: &str, program: &Program) -> Result<Vec<BenchCase>, Vec<Diagnostic>> {
    let decls = program.declarations();
    Ok(program
        .check()?
        .into_iter()
        .enumerate()
        .map(|(k, checked)| BenchCase {
            name: format!("{stem}.{}", k + 1),
            checked,
            decls: decls.clone(),
        })
        .collect())
}

const SUITE: [SuiteEntry; 14] = [
    SuiteEntry {
        name: "assign1",
        source: "tensor A dim 3 rank 1;\ntensor B dim 3 rank 1;\nA(i) = B(i);\n",
    },
    SuiteEntry {
        name: "assign2",
        source: "tensor A dim 3 rank 2;\ntensor B dim 3 rank 2;\nA(i,j) = B(i,j);\n",
    },
    SuiteEntry {
        name: "assign3",
        source: "tensor A dim 3 rank 3;\ntensor B dim 3 rank 3;\nA(i,j,k) = B(i,j,k);\n",
    },
    SuiteEntry {
        name: "add1",
        source: "tensor A dim 3 rank 1;\ntensor B dim 3 rank 1;\ntensor C dim 3 rank 1;\nA(i) = B(i) + C(i);\n",
    },
    SuiteEntry {
        name: "add2",
        source: "tensor A dim 3 rank 1;\ntensor B dim 3 rank 1;\ntensor C dim 3 rank 1;\ntensor D dim 3 rank 1;\n\
                 A(i) = B(i) + C(i) + D(i);\n",
    },
    SuiteEntry {
        name: "add3",
        source: "tensor A dim 3 rank 1;\ntensor B dim 3 rank 1;\ntensor C dim 3 rank 1;\ntensor D dim 3 rank 1;\n\
                 tensor E dim 3 rank 1;\nA(i) = B(i) + C(i) + D(i) + E(i);\n",
    },
    SuiteEntry {
        name: "mult1",
        source: "tensor A dim 3 rank 2;\ntensor B dim 3 rank 1;\ntensor C dim 3 rank 1;\nA(i,j) = B(i)*C(j);\n",
    },
    SuiteEntry {
        name: "mult2",
        source: "tensor A dim 3 rank 3;\ntensor B dim 3 rank 1;\ntensor C dim 3 rank 1;\ntensor D dim 3 rank 1;\n\
                 A(i,j,k) = B(i)*C(j)*D(k);\n",
    },
    SuiteEntry {
        name: "mult3",
        source: "tensor A dim 3 rank 4;\ntensor B dim 3 rank 1;\ntensor C dim 3 rank 1;\ntensor D dim 3 rank 1;\n\
                 tensor E dim 3 rank 1;\nA(i,j,k,l) = B(i)*C(j)*D(k)*E(l);\n",
    },
    SuiteEntry {
        name: "contract1",
        source: "tensor A dim 3 rank 4;\ntensor B dim 3 rank 2;\ntensor E dim 3 rank 4;\n\
                 A(i,j,k,l) = Sum(m, B(i,m)*E(m,j,k,l));\n",
    },
    SuiteEntry {
        name: "contract2",
        source: "tensor A dim 3 rank 4;\ntensor B dim 3 rank 2;\ntensor C dim 3 rank 2;\ntensor E dim 3 rank 4;\n\
                 A(i,j,k,l) = Sum(m, Sum(n, C(j,n)*B(i,m)*E(m,n,k,l)));\n",
    },
    SuiteEntry {
        name: "contract3",
        source: "tensor A dim 3 rank 4;\ntensor B dim 3 rank 2;\ntensor C dim 3 rank 2;\ntensor D dim 3 rank 2;\n\
                 tensor E dim 3 rank 4;\nA(i,j,k,l) = Sum(m, Sum(n, Sum(o, D(k,o)*C(j,n)*B(i,m)*E(m,n,o,l))));\n",
    },
    SuiteEntry {
        name: "kij",
        source: "tensor K dim 3 rank 2 sym(0,1);\ntensor g dim 3 rank 2 sym(0,1);\ntensor beta dim 3 rank 1;\n\
                 field alpha;\nK(sym<0,1>, i, j) = 2*alpha*g(i,j) + beta(i)*beta(j);\n",
    },
    SuiteEntry {
        name: "christoffel",
        source: "tensor Gamma dim 3 rank 3 sym(1,2);\ntensor Invg dim 3 rank 2 sym(0,1);\n\
                 tensor dg dim 3 rank 2 sym(0,1) inner rank 1;\n\
                 Gamma(sym<1,2>, i, j, k) = 0.5*Sum(l, Invg(i,l)*(dg(j,l)(k) + dg(l,k)(j) - dg(j,k)(l)));\n",
    },
];

const EXTRAS: [SuiteEntry; 3] = [
    SuiteEntry {
        name: "sym_contract4",
        source: "tensor C dim 4 rank 2 sym(0,1);\ntensor A dim 4 rank 2;\ntensor B dim 4 rank 2;\n\
                 C(sym<0,1>, a, b) = Sum(c, A(a,c)*B(c,b));\n",
    },
    SuiteEntry {
        name: "fixed_offset4",
        source: "tensor D dim 4 rank 2 sym(0,1);\ntensor E dim 4 rank 2;\ntensor F dim 4 rank 2;\n\
                 D(sym<0,1>, i, 0) = Sum(c, E(i+1,c)*F(c,0));\n",
    },
    SuiteEntry {
        name: "contract4",
        source: "tensor C dim 4 rank 2;\ntensor A dim 4 rank 2;\ntensor B dim 4 rank 2;\n\
                 C(a, b) = Sum(c, A(a,c)*B(c,b));\n",
    },
];

/// The fourteen dimension-3 benchmark statements.
pub fn builtin_suite() -> Vec<SuiteEntry> {
    SUITE.to_vec()
}

/// Dimension-4 contractions: a symmetric one, one with fixed and offset
/// indices, and the unsymmetric variant of the first.
pub fn dim4_extras() -> Vec<SuiteEntry> {
    EXTRAS.to_vec()
}

/// Fills every declared field with uniform values in (0, 1), in declaration
/// name order, component by component.
pub fn random_env(decls: &Declarations, gridsize: usize, seed: u64) -> Env {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut env = Env::new();
    for (name, decl) in decls.iter() {
        match decl {
            Declared::Tensor(shape) => {
                let count = shape.component_count().expect("declared shapes have layouts");
                let data = (0..count)
                    .map(|_| (0..gridsize).map(|_| rng.sample::<f64, _>(Open01)).collect())
                    .collect();
                let field = TensorField::from_components(name.clone(), shape.clone(), data)
                    .expect("component count matches shape");
                env.insert_tensor(field);
            }
            Declared::Scalar => {
                let data = (0..gridsize).map(|_| rng.sample::<f64, _>(Open01)).collect();
                env.insert_scalar(ScalarField::new(name.clone(), data));
            }
            Declared::Const(v) => {
                env.insert_const(name.clone(), *v);
            }
        }
    }
    env
}

/// Source of monotonic timestamps in seconds.
pub trait Clock {
    fn now(&mut self) -> f64;
}

/// Wall clock measured from construction.
#[derive(Debug, Clone, Copy)]
pub struct MonotonicClock {
    origin: Instant,
}

impl Default for MonotonicClock {
    fn default() -> Self {
        Self { origin: Instant::now() }
    }
}

impl Clock for MonotonicClock {
    fn now(&mut self) -> f64 {
        self.origin.elapsed().as_secs_f64()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BenchMode {
    WholeTensor,
    PerComponent,
}

impl BenchMode {
    pub fn as_str(self) -> &'static str {
        match self {
            BenchMode::WholeTensor => "whole-tensor",
            BenchMode::PerComponent => "per-component",
        }
    }

    fn eval_mode(self) -> Mode {
        match self {
            BenchMode::WholeTensor => Mode::WholeTensor,
            BenchMode::PerComponent => Mode::PerComponent,
        }
    }
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchResult {
    pub name: String,
    pub mode: BenchMode,
    #[serde(rename = "N")]
    pub n: usize,
    pub t_median_s: f64,
    pub bw_eff_gbps: f64,
    #[serde(rename = "N_e")]
    pub n_e: usize,
    #[serde(rename = "N_d")]
    pub n_d: usize,
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("gridsize {0} is not a positive multiple of 32")]
    BadGridsize(usize),
    #[error("gridsizes must be strictly ascending ({0} follows {1})")]
    Unordered(usize, usize),
    #[error("at least two repetitions are needed, got {0}")]
    TooFewReps(usize),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Effective bandwidth in GB/s.
pub fn bw_eff_gbps(count: DataCount, gridsize: usize, seconds: f64) -> f64 {
    8.0 * (count.n_e as f64 * gridsize as f64 + count.n_d as f64) / seconds / 1e9
}

/// Median; the mean of the two middle values for even lengths.
pub fn median(samples: &[f64]) -> f64 {
    assert!(!samples.is_empty(), "median of no samples");
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        (sorted[mid - 1] + sorted[mid]) / 2.0
    }
}

/// Median time over all repetitions but the first.
pub fn fold_timings(samples: &[f64]) -> f64 {
    median(&samples[1..])
}

/// Times `reps` evaluations of a statement on `env`, which must already hold
/// data of gridsize `n`.
pub fn run(
    name: &str,
    checked: &CheckedStatement,
    env: &mut Env,
    reps: usize,
    mode: BenchMode,
    clock: &mut dyn Clock,
) -> Result<BenchResult, BenchError> {
    if reps < 2 {
        return Err(BenchError::TooFewReps(reps));
    }
    let mut samples = Vec::with_capacity(reps);
    let mut n = 0;
    for _ in 0..reps {
        let start = clock.now();
        n = eval_with(env, checked, mode.eval_mode(), false)?.gridsize;
        samples.push(clock.now() - start);
    }
    let t = fold_timings(&samples);
    let count = count_data(checked);
    Ok(BenchResult {
        name: name.to_string(),
        mode,
        n,
        t_median_s: t,
        bw_eff_gbps: bw_eff_gbps(count, n, t),
        n_e: count.n_e,
        n_d: count.n_d,
    })
}

/// Checks that gridsizes are ascending positive multiples of 32.
pub fn check_grids(grids: &[usize]) -> Result<(), BenchError> {
    for (k, &g) in grids.iter().enumerate() {
        if g == 0 || g % 32 != 0 {
            return Err(BenchError::BadGridsize(g));
        }
        if k > 0 && grids[k - 1] >= g {
            return Err(BenchError::Unordered(g, grids[k - 1]));
        }
    }
    Ok(())
}

/// Runs every entry at every gridsize in every mode, statement-major.
pub fn sweep(
    cases: &[BenchCase],
    grids: &[usize],
    modes: &[BenchMode],
    reps: usize,
    seed: u64,
    clock: &mut dyn Clock,
) -> Result<Vec<BenchResult>, BenchError> {
    check_grids(grids)?;
    let mut rows = Vec::new();
    for case in cases {
        for &n in grids {
            for &mode in modes {
                let mut env = random_env(&case.decls, n, seed);
                rows.push(run(&case.name, &case.checked, &mut env, reps, mode, clock)?);
            }
        }
    }
    Ok(rows)
}

/// Writes rows as CSV with header `name,mode,N,t_median_s,bw_eff_gbps,N_e,N_d`.
pub fn write_csv<W: io::Write>(rows: &[BenchResult], out: W) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    if rows.is_empty() {
        w.write_record(["name", "mode", "N", "t_median_s", "bw_eff_gbps", "N_e", "N_d"])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Clock returning preset timestamps.
    struct Script(Vec<f64>, usize);

    impl Clock for Script {
        fn now(&mut self) -> f64 {
            self.1 += 1;
            self.0[self.1 - 1]
        }
    }

    #[test]
    fn suite_shape() {
        let suite = builtin_suite();
        assert_eq!(suite.len(), 14);
        for e in &suite {
            let (c, _) = e.load();
            assert_eq!(c.lhs_shape().dim, 3, "{}", e.name);
        }
        let (christoffel, _) = suite[13].load();
        assert_eq!(christoffel.loops().assignments().len(), 18);
    }

    #[test]
    fn bandwidth_example() {
        let bw = bw_eff_gbps(DataCount { n_e: 42, n_d: 0 }, 1000, 1e-3);
        assert!((bw - 0.336).abs() < 1e-15);
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), 2.5);
        assert_eq!(fold_timings(&[100.0, 5.0, 5.0, 5.0]), 5.0);
    }

    #[test]
    fn run_uses_injected_clock() {
        let (checked, decls) = SUITE[0].load();
        let mut env = random_env(&decls, 32, 1);
        // Run k takes k+1 ms; the first is discarded.
        let mut stamps = Vec::new();
        let mut t = 0.0;
        for k in 0..5 {
            stamps.push(t);
            t += (k + 1) as f64 * 1e-3;
            stamps.push(t);
        }
        let r = run("assign1", &checked, &mut env, 5, BenchMode::WholeTensor, &mut Script(stamps, 0)).unwrap();
        assert!((r.t_median_s - 3.5e-3).abs() < 1e-15);
        assert_eq!((r.n, r.n_e, r.n_d), (32, 6, 0));
    }

    #[test]
    fn grid_checks() {
        assert!(check_grids(&[32, 64]).is_ok());
        assert!(matches!(check_grids(&[32, 48]), Err(BenchError::BadGridsize(48))));
        assert!(matches!(check_grids(&[64, 32]), Err(BenchError::Unordered(32, 64))));
        assert!(matches!(check_grids(&[0]), Err(BenchError::BadGridsize(0))));
    }

    #[test]
    fn random_env_is_reproducible_and_open() {
        let (_, decls) = SUITE[12].load();
        let a = random_env(&decls, 64, DEFAULT_SEED);
        assert_eq!(a, random_env(&decls, 64, DEFAULT_SEED));
        assert_ne!(a, random_env(&decls, 64, DEFAULT_SEED + 1));
        for (_, v) in a.iter() {
            if let crate::eval::Value::Tensor(t) = v {
                assert!(t.components().iter().flatten().all(|&x| x > 0.0 && x < 1.0));
            }
        }
    }

    #[test]
    fn csv_header_and_rows() {
        let mut clock = MonotonicClock::default();
        let rows = sweep(&[SUITE[0].case()], &[32, 64], &[BenchMode::WholeTensor, BenchMode::PerComponent], 3, 1, &mut clock)
            .unwrap();
        assert_eq!(rows.len(), 4);
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("name,mode,N,t_median_s,bw_eff_gbps,N_e,N_d"));
        assert!(lines.next().unwrap().starts_with("assign1,whole-tensor,32,"));
        assert_eq!(text.lines().count(), 5);
    }
}
