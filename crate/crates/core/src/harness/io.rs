//! Matrix files: `GRMX`, then p, e, d, rows, cols as little-endian u64,
//! then row-major entries of d words each. Total `44 + rows·cols·d·8` bytes.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::ring::{make_ring, GaloisRing};

pub const MATRIX_MAGIC: &[u8; 4] = b"GRMX";
pub const MATRIX_HEADER_BYTES: usize = 4 + 5 * 8;

/// Ring parameters stored in a matrix file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatrixHeader {
    pub p: u64,
    pub e: u32,
    pub d: usize,
    pub rows: usize,
    pub cols: usize,
}

/// The `(p, e, d)` of a ring usable in a matrix file (a single-level ring).
fn file_params(ring: &GaloisRing) -> Result<(u64, u32, usize)> {
    if ring.levels().len() > 1 {
        return Err(Error::InvalidParameter(
            "matrix files hold matrices over GR(p^e, d) only".into(),
        ));
    }
    Ok((ring.p(), ring.e(), ring.width()))
}

pub fn matrix_to_bytes(m: &Matrix) -> Result<Vec<u8>> {
    let (p, e, d) = file_params(m.ring())?;
    let mut out = Vec::with_capacity(MATRIX_HEADER_BYTES + m.words().len() * 8);
    out.extend_from_slice(MATRIX_MAGIC);
    for v in [p, e as u64, d as u64, m.rows() as u64, m.cols() as u64] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for w in m.words() {
        out.extend_from_slice(&w.to_le_bytes());
    }
    Ok(out)
}

pub fn read_header(bytes: &[u8]) -> Result<MatrixHeader> {
    if bytes.len() < MATRIX_HEADER_BYTES || &bytes[..4] != MATRIX_MAGIC {
        return Err(Error::Format("missing GRMX header".into()));
    }
    let f: Vec<u64> = bytes[4..MATRIX_HEADER_BYTES]
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    let e = u32::try_from(f[1]).map_err(|_| Error::Format("exponent out of range".into()))?;
    Ok(MatrixHeader {
        p: f[0],
        e,
        d: f[2] as usize,
        rows: f[3] as usize,
        cols: f[4] as usize,
    })
}

/// Parses a matrix file, building the canonical ring from its header.
pub fn matrix_from_bytes(bytes: &[u8]) -> Result<Matrix> {
    let h = read_header(bytes)?;
    let ring = make_ring(h.p, h.e, h.d)?;
    let words = h
        .rows
        .checked_mul(h.cols)
        .and_then(|x| x.checked_mul(h.d))
        .ok_or_else(|| Error::Format("matrix dimensions overflow".into()))?;
    let expected = MATRIX_HEADER_BYTES + words * 8;
    if bytes.len() != expected {
        return Err(Error::Format(format!(
            "matrix file is {} bytes, header implies {expected}",
            bytes.len()
        )));
    }
    let data = bytes[MATRIX_HEADER_BYTES..]
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Matrix::from_words(&ring, h.rows, h.cols, data).map_err(|e| Error::Format(e.to_string()))
}

pub fn write_matrix_file(path: &Path, m: &Matrix) -> Result<()> {
    fs::write(path, matrix_to_bytes(m)?)?;
    Ok(())
}

pub fn read_matrix_file(path: &Path) -> Result<Matrix> {
    matrix_from_bytes(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn roundtrip_and_length() {
        let ring = make_ring(2, 64, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = Matrix::random(&ring, 3, 5, &mut rng);
        let bytes = matrix_to_bytes(&m).unwrap();
        assert_eq!(bytes.len(), MATRIX_HEADER_BYTES + 3 * 5 * 3 * 8);
        assert_eq!(matrix_from_bytes(&bytes).unwrap(), m);
        assert!(matrix_from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(matrix_from_bytes(&bad), Err(Error::Format(_))));
    }

    #[test]
    fn out_of_range_entries_rejected() {
        let ring = make_ring(2, 2, 1).unwrap();
        let m = Matrix::from_ints(&ring, 1, 1, &[3]).unwrap();
        let mut bytes = matrix_to_bytes(&m).unwrap();
        bytes[MATRIX_HEADER_BYTES] = 7;
        assert!(matrix_from_bytes(&bytes).is_err());
    }

    #[test]
    fn file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.grmx");
        let ring = make_ring(3, 4, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = Matrix::random(&ring, 4, 2, &mut rng);
        write_matrix_file(&path, &m).unwrap();
        assert_eq!(read_matrix_file(&path).unwrap(), m);
    }
}
