//! Binary on-disk cache for [`FnTable`].
//!
//! Layout (all multi-byte fields in the byte order named by the tag):
//!
//! ```text
//! magic      4 bytes   "RXFT"
//! version    u8        1
//! endianness u8        b'L' or b'B'
//! kind       u8        0 mobius, 1 phi, 2 divisor_k, 3 sigma_s, 4 jordan_s,
//!                      5 mertens, 6 custom
//! repr       u8        0 i64 values, 1 f64 values
//! k          u32       divisor_k parameter (0 otherwise)
//! s          f64       sigma_s / jordan_s parameter (0 otherwise)
//! label_len  u32       followed by label_len bytes of UTF-8 (custom only)
//! limit      u64
//! values     limit × 8 bytes
//! ```
//!
//! The writer always emits little-endian; the reader accepts both.

use std::io::{Read, Write};

use super::table::{FnTable, TableKind, TableValues};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"RXFT";
const VERSION: u8 = 1;

pub fn write_table<W: Write>(table: &FnTable, mut out: W) -> Result<()> {
    let (tag, k, s, label) = match table.kind() {
        TableKind::Mobius => (0u8, 0u32, 0.0, ""),
        TableKind::Phi => (1, 0, 0.0, ""),
        TableKind::DivisorK { k } => (2, *k, 0.0, ""),
        TableKind::SigmaS { s } => (3, 0, *s, ""),
        TableKind::JordanS { s } => (4, 0, *s, ""),
        TableKind::Mertens => (5, 0, 0.0, ""),
        TableKind::Custom { label } => (6, 0, 0.0, label.as_str()),
    };
    let repr = match table.values() {
        TableValues::Int(_) => 0u8,
        TableValues::Real(_) => 1u8,
    };
    out.write_all(MAGIC)?;
    out.write_all(&[VERSION, b'L', tag, repr])?;
    out.write_all(&k.to_le_bytes())?;
    out.write_all(&s.to_le_bytes())?;
    out.write_all(&(label.len() as u32).to_le_bytes())?;
    out.write_all(label.as_bytes())?;
    out.write_all(&(table.limit() as u64).to_le_bytes())?;
    let mut buf = Vec::with_capacity(table.limit() * 8);
    match table.values() {
        TableValues::Int(v) => v
            .iter()
            .for_each(|x| buf.extend_from_slice(&x.to_le_bytes())),
        TableValues::Real(v) => v
            .iter()
            .for_each(|x| buf.extend_from_slice(&x.to_le_bytes())),
    }
    out.write_all(&buf)?;
    Ok(())
}

struct Reader<R> {
    inner: R,
    little: bool,
}

impl<R: Read> Reader<R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut b = [0u8; N];
        self.inner
            .read_exact(&mut b)
            .map_err(|e| Error::Cache(format!("truncated input: {e}")))?;
        if !self.little {
            b.reverse();
        }
        Ok(b)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes()?))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes()?))
    }
}

pub fn read_table<R: Read>(mut input: R) -> Result<FnTable> {
    let mut head = [0u8; 8];
    input
        .read_exact(&mut head)
        .map_err(|e| Error::Cache(format!("missing header: {e}")))?;
    if &head[..4] != MAGIC {
        return Err(Error::Cache("bad magic".into()));
    }
    if head[4] != VERSION {
        return Err(Error::Cache(format!("unsupported version {}", head[4])));
    }
    let little = match head[5] {
        b'L' => true,
        b'B' => false,
        t => return Err(Error::Cache(format!("unknown endianness tag {t:#x}"))),
    };
    let (tag, repr) = (head[6], head[7]);
    let mut r = Reader {
        inner: input,
        little,
    };
    let k = r.u32()?;
    let s = f64::from_bits(r.u64()?);
    let label_len = r.u32()? as usize;
    let mut label = vec![0u8; label_len];
    r.inner
        .read_exact(&mut label)
        .map_err(|e| Error::Cache(format!("truncated label: {e}")))?;
    let label = String::from_utf8(label).map_err(|_| Error::Cache("label is not UTF-8".into()))?;
    let kind = match tag {
        0 => TableKind::Mobius,
        1 => TableKind::Phi,
        2 => TableKind::DivisorK { k },
        3 => TableKind::SigmaS { s },
        4 => TableKind::JordanS { s },
        5 => TableKind::Mertens,
        6 => TableKind::Custom { label },
        t => return Err(Error::Cache(format!("unknown kind tag {t}"))),
    };
    let limit = r.u64()? as usize;
    if limit == 0 || limit > super::sieve::MAX_SIEVE_LIMIT {
        return Err(Error::Cache(format!("implausible limit {limit}")));
    }
    let mut raw = Vec::new();
    raw.try_reserve_exact(limit * 8)
        .map_err(|e| Error::Resource(format!("cannot allocate cached table: {e}")))?;
    raw.resize(limit * 8, 0);
    r.inner
        .read_exact(&mut raw)
        .map_err(|e| Error::Cache(format!("truncated values: {e}")))?;
    let word = |c: &[u8]| {
        let mut b: [u8; 8] = c.try_into().expect("chunk of 8");
        if !little {
            b.reverse();
        }
        b
    };
    let values = match repr {
        0 => TableValues::Int(
            raw.chunks_exact(8)
                .map(|c| i64::from_le_bytes(word(c)))
                .collect(),
        ),
        1 => TableValues::Real(
            raw.chunks_exact(8)
                .map(|c| f64::from_le_bytes(word(c)))
                .collect(),
        ),
        t => return Err(Error::Cache(format!("unknown value representation {t}"))),
    };
    FnTable::from_parts(kind, values)
}
