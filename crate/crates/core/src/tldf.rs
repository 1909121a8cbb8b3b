//! TLDF, the single-file field container read and written by the CLI.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "TLDF0001"  u32 count
//! per entry:  u16 name_len, name (UTF-8), u8 kind (0 const, 1 scalar field, 2 tensor field)
//!   kind 0:   f64 value
//!   kind 1-2: u8 dim (0 for scalars), u8 outer_rank, u8 inner_rank,
//!             u8 n, n x (u8, u8) outer pairs, u8 m, m x (u8, u8) inner pairs,
//!             u64 N, then one N-point f64 array per stored component
//! ```
//!
//! Symmetry pairs are written in normalized chain form, so a file whose pairs
//! are already normalized reads and writes back byte for byte.

use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::eval::{Env, Value};
use crate::tensor::{ScalarField, ShapeError, SymmetrySpec, TensorField, TensorShape};

pub const MAGIC: &[u8; 8] = b"TLDF0001";

/// Largest `dim^rank` accepted on read; layouts are tabulated in full.
const MAX_FULL_LEN: u64 = 1 << 24;

#[derive(Debug, Error)]
pub enum TldfError {
    #[error("not a TLDF file (bad magic)")]
    BadMagic,
    #[error("truncated at byte {offset} while reading {what}")]
    Truncated { offset: usize, what: &'static str },
    #[error("entry name at byte {offset} is not UTF-8")]
    BadName { offset: usize },
    #[error("entry `{name}`: unknown kind {kind}")]
    BadKind { name: String, kind: u8 },
    #[error("entry `{name}`: {source}")]
    Shape { name: String, source: ShapeError },
    #[error("entry `{name}`: scalar field with tensor shape")]
    BadScalar { name: String },
    #[error("duplicate entry `{name}`")]
    Duplicate { name: String },
    #[error("{count} trailing bytes after the last entry")]
    Trailing { count: usize },
    #[error("entry `{name}` does not fit the format: {reason}")]
    Unrepresentable { name: String, reason: &'static str },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8], TldfError> {
        let end = self
            .at
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or(TldfError::Truncated { offset: self.at, what })?;
        let out = &self.bytes[self.at..end];
        self.at = end;
        Ok(out)
    }

    fn u8(&mut self, what: &'static str) -> Result<u8, TldfError> {
        Ok(self.take(1, what)?[0])
    }

    fn u16(&mut self, what: &'static str) -> Result<u16, TldfError> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &'static str) -> Result<u32, TldfError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &'static str) -> Result<u64, TldfError> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize, what: &'static str) -> Result<Vec<f64>, TldfError> {
        let bytes = self.take(n.checked_mul(8).ok_or(TldfError::Truncated { offset: self.at, what })?, what)?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    fn pairs(&mut self) -> Result<Vec<(usize, usize)>, TldfError> {
        let n = self.u8("inequality count")?;
        (0..n)
            .map(|_| Ok((self.u8("inequality")? as usize, self.u8("inequality")? as usize)))
            .collect()
    }
}

/// Parses a TLDF image into an [`Env`] preserving entry order.
pub fn from_bytes(bytes: &[u8]) -> Result<Env, TldfError> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(TldfError::BadMagic);
    }
    let mut r = Reader {
        bytes,
        at: MAGIC.len(),
    };
    let count = r.u32("entry count")?;
    let mut env = Env::new();
    for _ in 0..count {
        let len = r.u16("name length")? as usize;
        let offset = r.at;
        let name = std::str::from_utf8(r.take(len, "name")?)
            .map_err(|_| TldfError::BadName { offset })?
            .to_string();
        let kind = r.u8("kind")?;
        let value = match kind {
            0 => Value::Const(r.f64s(1, "constant")?[0]),
            1 | 2 => {
                let dim = r.u8("dim")? as usize;
                let outer_rank = r.u8("outer rank")? as usize;
                let inner_rank = r.u8("inner rank")? as usize;
                let outer = r.pairs()?;
                let inner = r.pairs()?;
                let n = r.u64("gridsize")?;
                let n = usize::try_from(n).map_err(|_| TldfError::Truncated {
                    offset: r.at,
                    what: "gridsize",
                })?;
                if kind == 1 {
                    if dim != 0 || outer_rank != 0 || inner_rank != 0 || !outer.is_empty() || !inner.is_empty() {
                        return Err(TldfError::BadScalar { name });
                    }
                    Value::Scalar(ScalarField::new(name.clone(), r.f64s(n, "scalar data")?))
                } else {
                    if (dim as u64).checked_pow((outer_rank + inner_rank) as u32).is_none_or(|v| v > MAX_FULL_LEN) {
                        return Err(TldfError::Shape {
                            name,
                            source: ShapeError::TooLarge {
                                dim,
                                rank: outer_rank + inner_rank,
                            },
                        });
                    }
                    let shape_err = |source| TldfError::Shape {
                        name: name.clone(),
                        source,
                    };
                    let shape = TensorShape::new(
                        dim,
                        outer_rank,
                        SymmetrySpec::new(outer).map_err(shape_err)?,
                        inner_rank,
                        SymmetrySpec::new(inner).map_err(shape_err)?,
                    )
                    .map_err(shape_err)?;
                    let comps = shape.component_count().map_err(shape_err)?;
                    // Check the payload length before allocating anything per component.
                    let need = comps.checked_mul(n).and_then(|v| v.checked_mul(8));
                    if need.is_none_or(|need| need > bytes.len() - r.at) {
                        return Err(TldfError::Truncated {
                            offset: r.at,
                            what: "component data",
                        });
                    }
                    let data = (0..comps)
                        .map(|_| r.f64s(n, "component data"))
                        .collect::<Result<Vec<_>, _>>()?;
                    let field = if comps == 0 {
                        TensorField::new(name.clone(), shape, n)
                    } else {
                        TensorField::from_components(name.clone(), shape, data)
                    };
                    Value::Tensor(field.map_err(shape_err)?)
                }
            }
            _ => return Err(TldfError::BadKind { name, kind }),
        };
        if env.get(&name).is_some() {
            return Err(TldfError::Duplicate { name });
        }
        env.insert(name, value);
    }
    if r.at != bytes.len() {
        return Err(TldfError::Trailing {
            count: bytes.len() - r.at,
        });
    }
    Ok(env)
}

/// Serializes an [`Env`] in its iteration order.
pub fn to_bytes(env: &Env) -> Result<Vec<u8>, TldfError> {
    let mut out = MAGIC.to_vec();
    let count = u32::try_from(env.len()).map_err(|_| TldfError::Unrepresentable {
        name: String::new(),
        reason: "too many entries",
    })?;
    out.extend_from_slice(&count.to_le_bytes());
    for (name, value) in env.iter() {
        let bad = |reason| TldfError::Unrepresentable {
            name: name.clone(),
            reason,
        };
        let len = u16::try_from(name.len()).map_err(|_| bad("name longer than 65535 bytes"))?;
        out.extend_from_slice(&len.to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        let small = |v: usize, reason| u8::try_from(v).map_err(|_| bad(reason));
        match value {
            Value::Const(v) => {
                out.push(0);
                out.extend_from_slice(&v.to_le_bytes());
            }
            Value::Scalar(s) => {
                out.extend_from_slice(&[1, 0, 0, 0, 0, 0]);
                out.extend_from_slice(&(s.data.len() as u64).to_le_bytes());
                push_f64s(&mut out, &s.data);
            }
            Value::Tensor(t) => {
                let shape = t.shape();
                out.push(2);
                out.push(small(shape.dim, "dimension above 255")?);
                out.push(small(shape.outer_rank, "rank above 255")?);
                out.push(small(shape.inner_rank, "rank above 255")?);
                for sym in [&shape.outer_sym, &shape.inner_sym] {
                    out.push(small(sym.pairs().len(), "more than 255 inequalities")?);
                    for &(p, q) in sym.pairs() {
                        out.push(p as u8);
                        out.push(q as u8);
                    }
                }
                out.extend_from_slice(&(t.gridsize() as u64).to_le_bytes());
                for c in t.components() {
                    push_f64s(&mut out, c);
                }
            }
        }
    }
    Ok(out)
}

fn push_f64s(out: &mut Vec<u8>, values: &[f64]) {
    out.reserve(values.len() * 8);
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

pub fn read(path: &Path) -> Result<Env, TldfError> {
    let bytes = fs::read(path).map_err(|source| TldfError::Io {
        path: path.display().to_string(),
        source,
    })?;
    from_bytes(&bytes)
}

pub fn write(path: &Path, env: &Env) -> Result<(), TldfError> {
    fs::write(path, to_bytes(env)?).map_err(|source| TldfError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Env {
        let mut env = Env::new();
        let shape = TensorShape::new(
            3,
            2,
            SymmetrySpec::new([(0, 1)]).unwrap(),
            1,
            SymmetrySpec::none(),
        )
        .unwrap();
        let data = (0..18).map(|c| vec![c as f64, -0.5 * c as f64]).collect();
        env.insert_tensor(TensorField::from_components("dg", shape, data).unwrap());
        env.insert_scalar(ScalarField::new("alpha", vec![1.5, f64::NAN]));
        env.insert_const("two", 2.0);
        env
    }

    #[test]
    fn layout_of_a_constant() {
        let mut env = Env::new();
        env.insert_const("c", 1.0);
        let bytes = to_bytes(&env).unwrap();
        let mut expect = b"TLDF0001".to_vec();
        expect.extend([1, 0, 0, 0, 1, 0, b'c', 0]);
        expect.extend(1.0f64.to_le_bytes());
        assert_eq!(bytes, expect);
    }

    #[test]
    fn layout_of_a_tensor_header() {
        let mut env = Env::new();
        let shape = TensorShape::simple(4, 2, SymmetrySpec::new([(0, 1)]).unwrap()).unwrap();
        env.insert_tensor(TensorField::new("g", shape, 1).unwrap());
        let bytes = to_bytes(&env).unwrap();
        assert_eq!(&bytes[12..24], &[1, 0, b'g', 2, 4, 2, 0, 1, 0, 1, 0, 1]);
        assert_eq!(bytes.len(), 23 + 8 + 10 * 8);
    }

    #[test]
    fn round_trip() {
        let env = sample();
        let bytes = to_bytes(&env).unwrap();
        let back = from_bytes(&bytes).unwrap();
        assert_eq!(to_bytes(&back).unwrap(), bytes);
        assert_eq!(back.tensor("dg"), env.tensor("dg"));
        assert!(back.scalar("alpha").unwrap().data[1].is_nan());
        assert_eq!(back.get("two"), Some(&Value::Const(2.0)));
    }

    #[test]
    fn malformed_input_is_an_error() {
        assert!(matches!(from_bytes(b"TLDF0002\0\0\0\0"), Err(TldfError::BadMagic)));
        assert!(matches!(from_bytes(b"TLD"), Err(TldfError::BadMagic)));
        let bytes = to_bytes(&sample()).unwrap();
        for cut in 8..bytes.len() {
            assert!(
                matches!(from_bytes(&bytes[..cut]), Err(TldfError::Truncated { .. })),
                "cut at {cut}"
            );
        }
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(matches!(from_bytes(&extra), Err(TldfError::Trailing { count: 1 })));
        let mut kind = bytes.clone();
        kind[8 + 4 + 2 + 2] = 7;
        assert!(matches!(from_bytes(&kind), Err(TldfError::BadKind { kind: 7, .. })));
    }

    #[test]
    fn huge_gridsize_does_not_allocate() {
        let mut bytes = b"TLDF0001".to_vec();
        bytes.extend([1, 0, 0, 0, 1, 0, b'A', 2, 3, 1, 0, 0, 0]);
        bytes.extend(u64::MAX.to_le_bytes());
        assert!(matches!(from_bytes(&bytes), Err(TldfError::Truncated { .. })));
    }

    #[test]
    fn oversized_shape_rejected() {
        let mut bytes = b"TLDF0001".to_vec();
        bytes.extend([1, 0, 0, 0, 1, 0, b'A', 2, 255, 8, 0, 0, 0]);
        bytes.extend(1u64.to_le_bytes());
        assert!(matches!(from_bytes(&bytes), Err(TldfError::Shape { .. })));
    }

    #[test]
    fn duplicate_names_rejected() {
        let mut bytes = b"TLDF0001".to_vec();
        bytes.extend([2, 0, 0, 0]);
        for _ in 0..2 {
            bytes.extend([1, 0, b'c', 0]);
            bytes.extend(0.0f64.to_le_bytes());
        }
        assert!(matches!(from_bytes(&bytes), Err(TldfError::Duplicate { .. })));
    }
}
