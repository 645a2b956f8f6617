//! Binary dumps of fields (`CSBF1`) and decompositions (`CSBD1`).
//!
//! All integers are `u64` and all reals `f64`, little-endian. Both formats end
//! with a CRC-32 of everything before it, stored as `u32`.
//!
//! ```text
//! CSBF1  d N S  coeffs[(2N+1)^d] as (re, im)
//! CSBD1  d N M flags S  directions[P×d] weights[P] α[P×L] α'[P×L] D[L]
//! ```
//!
//! Bits 0 and 1 of `flags` are the half-interval and Jacobian options; the
//! radial quadrature order sits in bits 8 and up.

use std::io::{Read, Write};

use num_complex::Complex64;

use crate::decomposition::{Decomposition, DecompositionOptions};
use crate::grid::{DomainConfig, FourierField};
use crate::{Error, Result};

pub const FIELD_MAGIC: &[u8; 5] = b"CSBF1";
pub const DECOMPOSITION_MAGIC: &[u8; 5] = b"CSBD1";

struct Encoder {
    buf: Vec<u8>,
}

impl Encoder {
    fn new(magic: &[u8]) -> Self {
        Encoder { buf: magic.to_vec() }
    }

    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn finish(mut self) -> Vec<u8> {
        let crc = crc32fast::hash(&self.buf);
        self.buf.extend_from_slice(&crc.to_le_bytes());
        self.buf
    }
}

struct Decoder<'a> {
    body: &'a [u8],
    pos: usize,
}

impl<'a> Decoder<'a> {
    fn open(bytes: &'a [u8], magic: &[u8]) -> Result<Self> {
        if bytes.len() < magic.len() + 4 || &bytes[..magic.len()] != magic {
            return Err(Error::Format(format!("missing {} header", String::from_utf8_lossy(magic))));
        }
        let (body, trailer) = bytes.split_at(bytes.len() - 4);
        let stored = u32::from_le_bytes(trailer.try_into().unwrap());
        let actual = crc32fast::hash(body);
        if stored != actual {
            return Err(Error::Format(format!("checksum mismatch: stored {stored:08x}, computed {actual:08x}")));
        }
        Ok(Decoder { body, pos: magic.len() })
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.body.len() - self.pos < n {
            return Err(Error::Format("truncated payload".into()));
        }
        let out = &self.body[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        (0..n).map(|_| self.f64()).collect()
    }

    fn count(&mut self, what: &str, max: u64) -> Result<usize> {
        let v = self.u64()?;
        if v > max {
            return Err(Error::Format(format!("{what} = {v} out of range")));
        }
        Ok(v as usize)
    }

    fn done(&self) -> Result<()> {
        if self.pos != self.body.len() {
            return Err(Error::Format(format!("{} trailing bytes", self.body.len() - self.pos)));
        }
        Ok(())
    }
}

fn read_config(dec: &mut Decoder<'_>) -> Result<(usize, usize)> {
    let dim = dec.count("dimension", 3)?;
    let n = dec.count("N", 1 << 16)?;
    Ok((dim, n))
}

fn make_config(dim: usize, n: usize, support: f64) -> Result<DomainConfig> {
    DomainConfig::new(dim, n, support).map_err(|e| Error::Format(format!("invalid header: {e}")))
}

pub fn encode_field(field: &FourierField) -> Vec<u8> {
    let c = field.config();
    let mut enc = Encoder::new(FIELD_MAGIC);
    enc.u64(c.dim() as u64);
    enc.u64(c.n_modes() as u64);
    enc.f64(c.support());
    for z in field.coeffs() {
        enc.f64(z.re);
        enc.f64(z.im);
    }
    enc.finish()
}

pub fn decode_field(bytes: &[u8]) -> Result<FourierField> {
    let mut dec = Decoder::open(bytes, FIELD_MAGIC)?;
    let (dim, n) = read_config(&mut dec)?;
    let config = make_config(dim, n, dec.f64()?)?;
    let raw = dec.f64s(2 * config.len())?;
    dec.done()?;
    let coeffs = raw.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect();
    FourierField::from_coeffs(config, coeffs)
}

pub fn encode_decomposition(d: &Decomposition) -> Vec<u8> {
    let c = d.config();
    let dim = c.dim();
    let opts = d.options();
    let mut enc = Encoder::new(DECOMPOSITION_MAGIC);
    enc.u64(dim as u64);
    enc.u64(c.n_modes() as u64);
    enc.u64(d.m() as u64);
    enc.u64(opts.flags() | ((opts.order as u64) << 8));
    enc.f64(c.support());
    for e in d.directions() {
        for &x in &e[..dim] {
            enc.f64(x);
        }
    }
    for &v in d.weights().iter().chain(&d.alpha).chain(&d.alpha_prime).chain(d.diag()) {
        enc.f64(v);
    }
    enc.finish()
}

pub fn decode_decomposition(bytes: &[u8]) -> Result<Decomposition> {
    let mut dec = Decoder::open(bytes, DECOMPOSITION_MAGIC)?;
    let (dim, n) = read_config(&mut dec)?;
    let m = dec.count("M", 1 << 16)?;
    let flags = dec.u64()?;
    let config = make_config(dim, n, dec.f64()?)?;
    if m == 0 {
        return Err(Error::Format("M must be positive".into()));
    }
    let terms = m.pow(dim as u32 - 1);
    let len = config.len();
    let mut directions = Vec::with_capacity(terms);
    for _ in 0..terms {
        let mut e = [0.0; 3];
        for x in e.iter_mut().take(dim) {
            *x = dec.f64()?;
        }
        directions.push(e);
    }
    let weights = dec.f64s(terms)?;
    let alpha = dec.f64s(terms * len)?;
    let alpha_prime = dec.f64s(terms * len)?;
    let diag = dec.f64s(len)?;
    dec.done()?;
    Ok(Decomposition {
        config,
        directions_per_axis: m,
        options: DecompositionOptions::from_flags(flags & 0xff, (flags >> 8) as usize),
        weights,
        directions,
        alpha,
        alpha_prime,
        diag,
    })
}

pub fn write_field<W: Write>(mut w: W, field: &FourierField) -> Result<()> {
    w.write_all(&encode_field(field))?;
    Ok(())
}

pub fn read_field<R: Read>(mut r: R) -> Result<FourierField> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    decode_field(&bytes)
}

pub fn write_decomposition<W: Write>(mut w: W, d: &Decomposition) -> Result<()> {
    w.write_all(&encode_decomposition(d))?;
    Ok(())
}

pub fn read_decomposition<R: Read>(mut r: R) -> Result<Decomposition> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    decode_decomposition(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::decompose;
    use crate::kernels::KernelModel;
    use proptest::prelude::*;

    fn small_decomposition() -> Decomposition {
        let c = DomainConfig::new(2, 3, 1.0).unwrap();
        decompose(&c, &KernelModel::maxwell2d(), 4, DecompositionOptions::default()).unwrap()
    }

    #[test]
    fn decomposition_round_trip_is_exact() {
        let d = small_decomposition();
        let back = decode_decomposition(&encode_decomposition(&d)).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn three_dimensional_round_trip() {
        let c = DomainConfig::new(3, 2, 1.0).unwrap();
        let opts = DecompositionOptions { jacobian: true, ..Default::default() };
        let d = decompose(&c, &KernelModel::hard_sphere3d(), 3, opts).unwrap();
        assert_eq!(decode_decomposition(&encode_decomposition(&d)).unwrap(), d);
    }

    #[test]
    fn corrupted_bytes_fail_checksum() {
        let mut bytes = encode_decomposition(&small_decomposition());
        let mid = bytes.len() / 2;
        bytes[mid] ^= 0x10;
        assert!(matches!(decode_decomposition(&bytes), Err(Error::Format(msg)) if msg.contains("checksum")));
    }

    #[test]
    fn truncated_and_foreign_inputs_fail() {
        let bytes = encode_decomposition(&small_decomposition());
        assert!(matches!(decode_decomposition(&bytes[..bytes.len() - 9]), Err(Error::Format(_))));
        assert!(matches!(decode_field(&bytes), Err(Error::Format(_))));
        assert!(matches!(decode_field(b"CSBF"), Err(Error::Format(_))));
    }

    #[test]
    fn shape_mismatch_is_reported() {
        // A valid checksum over a payload that is one value short.
        let c = DomainConfig::new(2, 1, 1.0).unwrap();
        let mut enc = Encoder::new(FIELD_MAGIC);
        enc.u64(2);
        enc.u64(1);
        enc.f64(c.support());
        for _ in 0..2 * c.len() - 1 {
            enc.f64(0.0);
        }
        assert!(matches!(decode_field(&enc.finish()), Err(Error::Format(msg)) if msg.contains("truncated")));
    }

    proptest! {
        #[test]
        fn field_round_trip(n in 1usize..5, dim in 2usize..4, seed in any::<u64>()) {
            let c = DomainConfig::new(dim, n, 1.1).unwrap();
            let mut state = seed;
            let coeffs = (0..c.len())
                .map(|_| {
                    state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    let a = (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
                    Complex64::new(a, -2.0 * a)
                })
                .collect();
            let f = FourierField::from_coeffs(c, coeffs).unwrap();
            let mut bytes = Vec::new();
            write_field(&mut bytes, &f).unwrap();
            prop_assert_eq!(read_field(bytes.as_slice()).unwrap(), f);
        }
    }
}
