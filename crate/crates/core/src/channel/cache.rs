//! Binary covariance cache.
//!
//! Layout (all integers and floats little-endian):
//!
//! | offset | size      | content                                   |
//! |--------|-----------|-------------------------------------------|
//! | 0      | 4         | magic `NFSC`                              |
//! | 4      | 1         | version (1)                               |
//! | 5      | 4         | N as `u32`                                |
//! | 9      | 16·N²     | entries row-major, each `(re: f64, im: f64)` |

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use super::CovarianceMatrix;
use crate::numerics::CMatrix;
use crate::{Error, Result};

pub const MAGIC: &[u8; 4] = b"NFSC";
pub const VERSION: u8 = 1;

pub fn write_covariance<W: Write>(mut out: W, cov: &CovarianceMatrix) -> Result<()> {
    let n = cov.dimension();
    let n32 = u32::try_from(n)
        .map_err(|_| Error::CacheFormat(format!("dimension {n} does not fit in u32")))?;
    out.write_all(MAGIC)?;
    out.write_all(&[VERSION])?;
    out.write_all(&n32.to_le_bytes())?;
    let m = cov.matrix();
    for i in 0..n {
        for j in 0..n {
            let z = m[(i, j)];
            out.write_all(&z.re.to_le_bytes())?;
            out.write_all(&z.im.to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_covariance<R: Read>(mut input: R) -> Result<CovarianceMatrix> {
    let mut header = [0u8; 9];
    input
        .read_exact(&mut header)
        .map_err(|e| Error::CacheFormat(format!("truncated header: {e}")))?;
    if &header[..4] != MAGIC {
        return Err(Error::CacheFormat("bad magic".into()));
    }
    if header[4] != VERSION {
        return Err(Error::CacheFormat(format!("unsupported version {}", header[4])));
    }
    let n = u32::from_le_bytes(header[5..9].try_into().expect("4 bytes")) as usize;
    let mut m = CMatrix::zeros(n, n);
    let mut buf = [0u8; 16];
    for i in 0..n {
        for j in 0..n {
            input
                .read_exact(&mut buf)
                .map_err(|e| Error::CacheFormat(format!("truncated body at ({i}, {j}): {e}")))?;
            let re = f64::from_le_bytes(buf[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(buf[8..].try_into().expect("8 bytes"));
            m[(i, j)] = Complex64::new(re, im);
        }
    }
    let mut rest = [0u8; 1];
    if input.read(&mut rest)? != 0 {
        return Err(Error::CacheFormat("trailing bytes after matrix".into()));
    }
    CovarianceMatrix::from_matrix(m)
}

pub fn save(path: &Path, cov: &CovarianceMatrix) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_covariance(&mut out, cov)?;
    out.flush()?;
    Ok(())
}

pub fn load(path: &Path) -> Result<CovarianceMatrix> {
    read_covariance(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{covariance_zone, ZoneSampling};
    use crate::geometry::{ArrayGeometry, SphericalZone, Vec3};
    use proptest::prelude::*;

    fn sample(n_h: usize, seed: u64) -> CovarianceMatrix {
        let g = ArrayGeometry::new(2, n_h, 0.005, 3.0).unwrap();
        let zone = SphericalZone::new(Vec3::new(1.0, 0.2, 1.5), 0.07).unwrap();
        covariance_zone(&g, &zone, 0.0107, &ZoneSampling::new(30, seed)).unwrap()
    }

    #[test]
    fn header_layout() {
        let mut buf = Vec::new();
        write_covariance(&mut buf, &sample(3, 1)).unwrap();
        assert_eq!(&buf[..4], b"NFSC");
        assert_eq!(buf[4], 1);
        assert_eq!(u32::from_le_bytes(buf[5..9].try_into().unwrap()), 6);
        assert_eq!(buf.len(), 9 + 16 * 36);
    }

    #[test]
    fn rejects_corrupt_input() {
        let mut buf = Vec::new();
        write_covariance(&mut buf, &sample(2, 1)).unwrap();
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(read_covariance(&bad[..]).is_err());
        let mut bad = buf.clone();
        bad[4] = 9;
        assert!(read_covariance(&bad[..]).is_err());
        assert!(read_covariance(&buf[..buf.len() - 3]).is_err());
        let mut bad = buf;
        bad.push(0);
        assert!(read_covariance(&bad[..]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn round_trip_is_bit_exact(n_h in 1usize..6, seed in 0u64..1000) {
            let cov = sample(n_h, seed);
            let mut buf = Vec::new();
            write_covariance(&mut buf, &cov).unwrap();
            let back = read_covariance(&buf[..]).unwrap();
            for (a, b) in cov.matrix().iter().zip(back.matrix().iter()) {
                prop_assert_eq!(a.re.to_bits(), b.re.to_bits());
                prop_assert_eq!(a.im.to_bits(), b.im.to_bits());
            }
        }
    }
}
