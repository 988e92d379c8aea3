//! Binary containers: SPEC1 spectrogram files, QREF1 reference files, and
//! 16-bit PGM explanation images.
//!
//! Both containers are little-endian. SPEC1 layout:
//!
//! ```text
//! magic "SPEC" | u8 version=1 | u32 rows | u32 cols
//! rows*cols f64, row-major | u32 json_len | metadata JSON
//! ```
//!
//! QREF1 inserts `f64 z` and `u32 training_count` between the version and the
//! shape. Round trips are bit-exact on the matrix values.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reference::ReferenceSpectrogram;
use crate::spectrogram::Spectrogram;

pub const SPEC_MAGIC: [u8; 4] = *b"SPEC";
pub const QREF_MAGIC: [u8; 4] = *b"QREF";
pub const FORMAT_VERSION: u8 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct SpecMeta {
    source_id: String,
    fingerprint: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct QrefMeta {
    fingerprint: String,
    quantile_rule: String,
}

pub fn write_spectrogram<W: Write>(w: &mut W, spec: &Spectrogram) -> Result<()> {
    w.write_all(&SPEC_MAGIC)?;
    w.write_all(&[FORMAT_VERSION])?;
    write_matrix(w, &spec.values)?;
    let meta = SpecMeta {
        source_id: spec.source_id.clone(),
        fingerprint: spec.fingerprint.clone(),
    };
    write_json_blob(w, &meta)
}

pub fn read_spectrogram<R: Read>(r: &mut R) -> Result<Spectrogram> {
    expect_magic(r, &SPEC_MAGIC)?;
    expect_version(r)?;
    let values = read_matrix(r)?;
    let meta: SpecMeta = read_json_blob(r)?;
    Ok(Spectrogram::new(values, meta.source_id, meta.fingerprint))
}

pub fn write_reference<W: Write>(w: &mut W, r: &ReferenceSpectrogram) -> Result<()> {
    w.write_all(&QREF_MAGIC)?;
    w.write_all(&[FORMAT_VERSION])?;
    w.write_all(&r.z.to_le_bytes())?;
    w.write_all(&u32_of(r.training_count, "training_count")?.to_le_bytes())?;
    write_matrix(w, &r.values)?;
    let meta = QrefMeta {
        fingerprint: r.fingerprint.clone(),
        quantile_rule: r.quantile_rule.clone(),
    };
    write_json_blob(w, &meta)
}

pub fn read_reference<R: Read>(r: &mut R) -> Result<ReferenceSpectrogram> {
    expect_magic(r, &QREF_MAGIC)?;
    expect_version(r)?;
    let z = f64::from_le_bytes(read_exact::<8, _>(r)?);
    let training_count = u32::from_le_bytes(read_exact::<4, _>(r)?) as usize;
    let values = read_matrix(r)?;
    let meta: QrefMeta = read_json_blob(r)?;
    Ok(ReferenceSpectrogram {
        values,
        z,
        training_count,
        fingerprint: meta.fingerprint,
        quantile_rule: meta.quantile_rule,
    })
}

pub fn save_spectrogram(path: &Path, spec: &Spectrogram) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_spectrogram(&mut w, spec)?;
    w.flush()?;
    Ok(())
}

pub fn load_spectrogram(path: &Path) -> Result<Spectrogram> {
    let mut r = BufReader::new(
        File::open(path).map_err(|e| Error::UnreadablePath(format!("{}: {e}", path.display())))?,
    );
    read_spectrogram(&mut r)
}

pub fn save_reference(path: &Path, r: &ReferenceSpectrogram) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_reference(&mut w, r)?;
    w.flush()?;
    Ok(())
}

pub fn load_reference(path: &Path) -> Result<ReferenceSpectrogram> {
    let mut r = BufReader::new(
        File::open(path).map_err(|e| Error::UnreadablePath(format!("{}: {e}", path.display())))?,
    );
    read_reference(&mut r)
}

/// 16-bit binary PGM (P5) with linear intensity mapping from `[0, max]` to
/// `[0, 65535]` and frequency bin 0 at the bottom row. An all-zero matrix
/// maps to all black. Samples are big-endian as the PGM spec requires.
pub fn write_pgm16<W: Write>(w: &mut W, values: &Array2<f64>) -> Result<()> {
    let (rows, cols) = values.dim();
    let max = values.iter().copied().fold(0.0f64, f64::max);
    write!(w, "P5\n{cols} {rows}\n65535\n")?;
    let mut buf = Vec::with_capacity(rows * cols * 2);
    for image_row in 0..rows {
        let bin = rows - 1 - image_row;
        for c in 0..cols {
            let v = values[[bin, c]];
            let level = if max > 0.0 {
                ((v / max) * 65535.0).round().clamp(0.0, 65535.0) as u16
            } else {
                0
            };
            buf.extend_from_slice(&level.to_be_bytes());
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn save_pgm16(path: &Path, values: &Array2<f64>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_pgm16(&mut w, values)?;
    w.flush()?;
    Ok(())
}

fn write_matrix<W: Write>(w: &mut W, m: &Array2<f64>) -> Result<()> {
    let (rows, cols) = m.dim();
    w.write_all(&u32_of(rows, "rows")?.to_le_bytes())?;
    w.write_all(&u32_of(cols, "cols")?.to_le_bytes())?;
    let standard = m.as_standard_layout();
    let mut buf = Vec::with_capacity(standard.len() * 8);
    for &v in standard.iter() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

fn read_matrix<R: Read>(r: &mut R) -> Result<Array2<f64>> {
    let rows = u32::from_le_bytes(read_exact::<4, _>(r)?) as usize;
    let cols = u32::from_le_bytes(read_exact::<4, _>(r)?) as usize;
    let n = rows
        .checked_mul(cols)
        .ok_or_else(|| Error::FormatError(format!("matrix size overflow: {rows}x{cols}")))?;
    let mut bytes = vec![0u8; n * 8];
    r.read_exact(&mut bytes)
        .map_err(|_| Error::FormatError("truncated file: matrix data ends early".into()))?;
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Array2::from_shape_vec((rows, cols), values)
        .map_err(|e| Error::FormatError(format!("bad matrix shape: {e}")))
}

fn write_json_blob<W: Write, T: Serialize>(w: &mut W, value: &T) -> Result<()> {
    let json = serde_json::to_vec(value)?;
    w.write_all(&u32_of(json.len(), "metadata length")?.to_le_bytes())?;
    w.write_all(&json)?;
    Ok(())
}

fn read_json_blob<R: Read, T: for<'de> Deserialize<'de>>(r: &mut R) -> Result<T> {
    let len = u32::from_le_bytes(read_exact::<4, _>(r)?) as usize;
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)
        .map_err(|_| Error::FormatError("truncated file: metadata ends early".into()))?;
    serde_json::from_slice(&buf)
        .map_err(|e| Error::FormatError(format!("bad metadata JSON: {e}")))
}

fn expect_magic<R: Read>(r: &mut R, want: &[u8; 4]) -> Result<()> {
    let got = read_exact::<4, _>(r)?;
    if &got != want {
        return Err(Error::FormatError(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(&got),
            String::from_utf8_lossy(want)
        )));
    }
    Ok(())
}

fn expect_version<R: Read>(r: &mut R) -> Result<()> {
    let v = read_exact::<1, _>(r)?[0];
    if v != FORMAT_VERSION {
        return Err(Error::FormatError(format!(
            "unsupported version {v}, expected {FORMAT_VERSION}"
        )));
    }
    Ok(())
}

fn read_exact<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)
        .map_err(|_| Error::FormatError("truncated file: header ends early".into()))?;
    Ok(buf)
}

fn u32_of(v: usize, what: &str) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::FormatError(format!("{what} {v} exceeds u32")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr2;

    fn spec(values: Array2<f64>) -> Spectrogram {
        Spectrogram::new(values, "test-src", "fp0123456789abcd")
    }

    #[test]
    fn spec1_roundtrip() {
        let s = spec(arr2(&[[1.5, -2.25, 0.0], [f64::MIN_POSITIVE, 1e300, -0.0]]));
        let mut buf = Vec::new();
        write_spectrogram(&mut buf, &s).unwrap();
        let back = read_spectrogram(&mut buf.as_slice()).unwrap();
        assert_eq!(back.source_id, "test-src");
        assert_eq!(back.fingerprint, s.fingerprint);
        for (a, b) in s.values.iter().zip(back.values.iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn wrong_magic_is_named() {
        let mut buf = Vec::new();
        write_spectrogram(&mut buf, &spec(arr2(&[[1.0]]))).unwrap();
        buf[..4].copy_from_slice(b"NOPE");
        let err = read_spectrogram(&mut buf.as_slice()).unwrap_err();
        assert_eq!(err.name(), "FormatError");
        assert!(err.to_string().contains("NOPE"), "{err}");
    }

    #[test]
    fn truncated_file_is_a_format_error() {
        let mut buf = Vec::new();
        write_spectrogram(&mut buf, &spec(arr2(&[[1.0, 2.0], [3.0, 4.0]]))).unwrap();
        for cut in [3, 9, 15, buf.len() - 1] {
            let err = read_spectrogram(&mut &buf[..cut]).unwrap_err();
            assert_eq!(err.name(), "FormatError", "cut={cut}");
        }
    }

    #[test]
    fn qref1_roundtrip() {
        let r = ReferenceSpectrogram {
            values: arr2(&[[0.25, 5e-324], [-1e308, 42.0]]),
            z: 0.95,
            training_count: 17,
            fingerprint: "fp".into(),
            quantile_rule: "linear".into(),
        };
        let mut buf = Vec::new();
        write_reference(&mut buf, &r).unwrap();
        let back = read_reference(&mut buf.as_slice()).unwrap();
        assert_eq!(back.z, 0.95);
        assert_eq!(back.training_count, 17);
        assert_eq!(back.quantile_rule, "linear");
        for (a, b) in r.values.iter().zip(back.values.iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn pgm_zero_matrix_is_black() {
        let mut buf = Vec::new();
        write_pgm16(&mut buf, &Array2::zeros((3, 4))).unwrap();
        let header = b"P5\n4 3\n65535\n";
        assert_eq!(&buf[..header.len()], header);
        assert!(buf[header.len()..].iter().all(|&b| b == 0));
        assert_eq!(buf.len(), header.len() + 3 * 4 * 2);
    }

    #[test]
    fn pgm_single_hot_pixel_flips_vertically() {
        // Entry at (bin=0, frame=1) must land on the bottom image row.
        let mut m = Array2::zeros((2, 3));
        m[[0, 1]] = 4.0;
        let mut buf = Vec::new();
        write_pgm16(&mut buf, &m).unwrap();
        let header_len = b"P5\n3 2\n65535\n".len();
        let px = &buf[header_len..];
        // Row-major u16 BE: top row (bin 1) all zero, bottom row pixel 1 hot.
        let sample = |row: usize, col: usize| {
            let o = (row * 3 + col) * 2;
            u16::from_be_bytes([px[o], px[o + 1]])
        };
        assert_eq!(sample(0, 0), 0);
        assert_eq!(sample(0, 1), 0);
        assert_eq!(sample(1, 1), 65535);
        assert_eq!(sample(1, 0), 0);
    }
}
