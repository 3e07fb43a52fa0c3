//! Binary snapshot files.
//!
//! Layout (all little-endian):
//!
//! | offset | size | field                          |
//! |--------|------|--------------------------------|
//! | 0      | 4    | magic `VSCP`                   |
//! | 4      | 4    | version (u32, currently 1)     |
//! | 8      | 4    | n (u32)                        |
//! | 12     | 8    | box length L (f64)             |
//! | 20     | 8    | viscosity ν (f64)              |
//! | 28     | 8    | time (f64)                     |
//! | 36     | 4    | field count (u32)              |
//! | 40     | 24   | reserved, zero                 |
//!
//! followed by `field_count` arrays of `n^3` f64 values in grid order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{GridSpec, VectorField};
use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"VSCP";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 64;

/// A decoded snapshot: grid, time and one or more real arrays.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub grid: GridSpec,
    pub time: f64,
    pub fields: Vec<Vec<f64>>,
}

impl Snapshot {
    pub fn from_vector(field: &VectorField, time: f64) -> Self {
        Self {
            grid: *field.grid(),
            time,
            fields: field.components().to_vec(),
        }
    }

    pub fn into_vector(self) -> Result<VectorField> {
        if self.fields.len() != 3 {
            return Err(Error::Snapshot(format!(
                "expected 3 components for a vector field, found {}",
                self.fields.len()
            )));
        }
        let mut it = self.fields.into_iter();
        let comps = [it.next().unwrap(), it.next().unwrap(), it.next().unwrap()];
        VectorField::new(self.grid, comps)
    }

    pub fn encode(&self) -> Vec<u8> {
        let n = self.grid.n();
        let mut out = Vec::with_capacity(HEADER_LEN + self.fields.len() * n * n * n * 8);
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(n as u32).to_le_bytes());
        out.extend_from_slice(&self.grid.box_length().to_le_bytes());
        out.extend_from_slice(&self.grid.viscosity().to_le_bytes());
        out.extend_from_slice(&self.time.to_le_bytes());
        out.extend_from_slice(&(self.fields.len() as u32).to_le_bytes());
        out.resize(HEADER_LEN, 0);
        for f in &self.fields {
            for v in f {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::Snapshot(format!(
                "truncated header: expected {HEADER_LEN} bytes, found {}",
                bytes.len()
            )));
        }
        if bytes[0..4] != MAGIC {
            return Err(Error::Snapshot(format!(
                "bad magic {:?}, expected {:?}",
                &bytes[0..4],
                MAGIC
            )));
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
        let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        let version = u32_at(4);
        if version != VERSION {
            return Err(Error::Snapshot(format!(
                "unsupported version {version} (reader supports {VERSION})"
            )));
        }
        let n = u32_at(8) as usize;
        let grid = GridSpec::new(n, f64_at(12), f64_at(20))
            .map_err(|e| Error::Snapshot(format!("invalid header grid: {e}")))?;
        let time = f64_at(28);
        let count = u32_at(36) as usize;
        let per = grid.len();
        let expected = HEADER_LEN + count * per * 8;
        if bytes.len() != expected {
            return Err(Error::Snapshot(format!(
                "size mismatch: expected {expected} bytes, found {}",
                bytes.len()
            )));
        }
        let fields = (0..count)
            .map(|f| {
                let base = HEADER_LEN + f * per * 8;
                bytes[base..base + per * 8]
                    .chunks_exact(8)
                    .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                    .collect()
            })
            .collect();
        Ok(Self { grid, time, fields })
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        w.write_all(&self.encode())?;
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut buf = Vec::new();
        r.read_to_end(&mut buf)?;
        Self::decode(&buf)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(BufReader::new(File::open(path)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field() -> VectorField {
        let g = GridSpec::periodic(8, 0.05).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let comps = [0, 1, 2].map(|_| (0..g.len()).map(|_| rng.gen::<f64>() - 0.5).collect());
        VectorField::new(g, comps).unwrap()
    }

    #[test]
    fn round_trip_is_bitwise() {
        let f = random_field();
        let bytes = Snapshot::from_vector(&f, 0.25).encode();
        assert_eq!(bytes.len(), HEADER_LEN + 3 * 512 * 8);
        let back = Snapshot::decode(&bytes).unwrap();
        assert_eq!(back.time, 0.25);
        let g = back.into_vector().unwrap();
        for c in 0..3 {
            for (a, b) in f.component(c).iter().zip(g.component(c)) {
                assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }

    #[test]
    fn truncated_file_reports_sizes() {
        let bytes = Snapshot::from_vector(&random_field(), 0.0).encode();
        let err = Snapshot::decode(&bytes[..bytes.len() - 5]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains(&format!("expected {}", bytes.len())), "{msg}");
        assert!(msg.contains(&format!("found {}", bytes.len() - 5)), "{msg}");
    }

    #[test]
    fn version_bump_is_unsupported() {
        let mut bytes = Snapshot::from_vector(&random_field(), 0.0).encode();
        bytes[4..8].copy_from_slice(&2u32.to_le_bytes());
        let msg = Snapshot::decode(&bytes).unwrap_err().to_string();
        assert!(msg.contains("unsupported version 2"), "{msg}");
    }

    #[test]
    fn bad_magic_and_bad_n() {
        let mut bytes = Snapshot::from_vector(&random_field(), 0.0).encode();
        bytes[0] = b'X';
        assert!(Snapshot::decode(&bytes).unwrap_err().to_string().contains("magic"));
        let mut bytes = Snapshot::from_vector(&random_field(), 0.0).encode();
        bytes[8..12].copy_from_slice(&12u32.to_le_bytes());
        assert!(Snapshot::decode(&bytes).is_err());
    }
}
