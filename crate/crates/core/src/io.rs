//! The `TTF1` binary format.
//!
//! Layout (all integers u32 little-endian, all values f64 little-endian):
//! magic `TTF1`, order `d`, `d` mode sizes, `d + 1` ranks, then every core's
//! vertical unfolding in column-major order.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{TtError, TtResult};
use crate::tensor::{validate_rank_chain, Core, TTTensor};

pub const MAGIC: &[u8; 4] = b"TTF1";

/// Upper bound on the number of stored values accepted by the reader.
const MAX_VALUES: u64 = 1 << 32;

pub fn write_tt<W: Write>(tt: &TTTensor, mut out: W) -> TtResult<()> {
    let to_u32 = |v: usize| -> TtResult<u32> {
        u32::try_from(v).map_err(|_| TtError::Format(format!("dimension {v} does not fit in u32")))
    };
    out.write_all(MAGIC)?;
    out.write_all(&to_u32(tt.order())?.to_le_bytes())?;
    for n in tt.mode_sizes() {
        out.write_all(&to_u32(n)?.to_le_bytes())?;
    }
    for r in tt.ranks() {
        out.write_all(&to_u32(r)?.to_le_bytes())?;
    }
    for core in tt.cores() {
        for v in core.data() {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

fn read_u32<R: Read>(input: &mut R) -> TtResult<usize> {
    let mut buf = [0u8; 4];
    input
        .read_exact(&mut buf)
        .map_err(|e| TtError::Format(format!("truncated header: {e}")))?;
    Ok(u32::from_le_bytes(buf) as usize)
}

pub fn read_tt<R: Read>(mut input: R) -> TtResult<TTTensor> {
    let mut magic = [0u8; 4];
    input
        .read_exact(&mut magic)
        .map_err(|_| TtError::Format("file too short for magic bytes".into()))?;
    if &magic != MAGIC {
        return Err(TtError::Format(format!(
            "bad magic {magic:?}, expected TTF1"
        )));
    }
    let d = read_u32(&mut input)?;
    if d == 0 {
        return Err(TtError::EmptyCoreList);
    }
    let modes = (0..d)
        .map(|_| read_u32(&mut input))
        .collect::<TtResult<Vec<_>>>()?;
    let ranks = (0..=d)
        .map(|_| read_u32(&mut input))
        .collect::<TtResult<Vec<_>>>()?;
    validate_rank_chain(&modes, &ranks)?;
    let total: u64 = (0..d)
        .map(|k| (ranks[k] * modes[k] * ranks[k + 1]) as u64)
        .sum();
    if total > MAX_VALUES {
        return Err(TtError::Format(format!(
            "{total} values exceeds the reader limit"
        )));
    }
    let mut cores = Vec::with_capacity(d);
    let mut buf = [0u8; 8];
    for k in 0..d {
        let len = ranks[k] * modes[k] * ranks[k + 1];
        let mut data = Vec::with_capacity(len);
        for _ in 0..len {
            input
                .read_exact(&mut buf)
                .map_err(|_| TtError::Format(format!("truncated data in core {}", k + 1)))?;
            data.push(f64::from_le_bytes(buf));
        }
        cores.push(Core::new(ranks[k], modes[k], ranks[k + 1], data)?);
    }
    let mut rest = [0u8; 1];
    if input.read(&mut rest)? != 0 {
        return Err(TtError::Format("trailing bytes after last core".into()));
    }
    TTTensor::new(cores)
}

pub fn save_tt(tt: &TTTensor, path: impl AsRef<Path>) -> TtResult<()> {
    let file = std::fs::File::create(path)?;
    write_tt(tt, std::io::BufWriter::new(file))
}

pub fn load_tt(path: impl AsRef<Path>) -> TtResult<TTTensor> {
    let file = std::fs::File::open(path)?;
    read_tt(std::io::BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::random_gaussian_tt;

    fn encode(tt: &TTTensor) -> Vec<u8> {
        let mut buf = Vec::new();
        write_tt(tt, &mut buf).unwrap();
        buf
    }

    #[test]
    fn round_trip_is_bit_identical() {
        let x = random_gaussian_tt(&[3, 4, 2], &[1, 2, 3, 1], 6).unwrap();
        let bytes = encode(&x);
        assert_eq!(&bytes[..4], b"TTF1");
        assert_eq!(bytes.len(), 4 + 4 + 3 * 4 + 4 * 4 + 8 * (6 + 24 + 6));
        let y = read_tt(bytes.as_slice()).unwrap();
        assert_eq!(x, y);
        assert_eq!(encode(&y), bytes);
    }

    #[test]
    fn rejects_corrupt_input() {
        let x = random_gaussian_tt(&[3, 4], &[1, 2, 1], 6).unwrap();
        let mut bytes = encode(&x);
        assert!(matches!(read_tt(&b"TTF2"[..]), Err(TtError::Format(_))));
        assert!(read_tt(&bytes[..bytes.len() - 3]).is_err());
        // last rank set to 2 violates the boundary condition
        bytes[4 + 4 + 8 + 8..4 + 4 + 8 + 12].copy_from_slice(&2u32.to_le_bytes());
        assert!(matches!(
            read_tt(bytes.as_slice()),
            Err(TtError::InvalidRankChain(_))
        ));
    }
}
