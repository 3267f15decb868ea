//! `TEN4` binary tensor files.
//!
//! Layout: the magic bytes `TEN4`, four little-endian `u32` extents `W H C T`,
//! then `W*H*C*T` little-endian IEEE-754 `f64` values in canonical order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::Tensor4;

pub const TEN4_MAGIC: &[u8; 4] = b"TEN4";

fn format_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Format(msg.into()))
}

fn read_exact_or<R: Read>(r: &mut R, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf).or_else(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => format_err(format!("truncated while reading {what}")),
        _ => Err(e.into()),
    })
}

pub fn read_ten4<S: Scalar, R: Read>(mut r: R) -> Result<Tensor4<S>> {
    let mut magic = [0u8; 4];
    read_exact_or(&mut r, &mut magic, "magic")?;
    if &magic != TEN4_MAGIC {
        return format_err(format!("bad magic {magic:?}"));
    }
    let mut dims = [0usize; 4];
    for d in dims.iter_mut() {
        let mut b = [0u8; 4];
        read_exact_or(&mut r, &mut b, "extents")?;
        *d = u32::from_le_bytes(b) as usize;
    }
    if dims.contains(&0) {
        return format_err(format!("zero extent in {dims:?}"));
    }
    let len = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::Format(format!("extents {dims:?} overflow")))?;
    let mut payload = Vec::new();
    r.take(len as u64 * 8 + 1).read_to_end(&mut payload)?;
    if payload.len() < len * 8 {
        return format_err(format!("payload truncated: {} of {} bytes", payload.len(), len * 8));
    }
    if payload.len() > len * 8 {
        return format_err("trailing bytes after payload");
    }
    let mut data = Vec::with_capacity(len);
    for (k, chunk) in payload.chunks_exact(8).enumerate() {
        let v = f64::from_le_bytes(chunk.try_into().expect("8-byte chunk"));
        if !v.is_finite() {
            return format_err(format!("non-finite value at offset {k}"));
        }
        data.push(S::of(v));
    }
    Tensor4::new(dims, data)
}

pub fn write_ten4<S: Scalar, W: Write>(t: &Tensor4<S>, mut w: W) -> Result<()> {
    w.write_all(TEN4_MAGIC)?;
    for &d in &t.dims() {
        let d = u32::try_from(d).map_err(|_| Error::Format(format!("extent {d} exceeds u32")))?;
        w.write_all(&d.to_le_bytes())?;
    }
    for &v in t.data() {
        w.write_all(&v.as_f64().to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_ten4<S: Scalar>(path: impl AsRef<Path>) -> Result<Tensor4<S>> {
    read_ten4(BufReader::new(File::open(path)?))
}

pub fn save_ten4<S: Scalar>(t: &Tensor4<S>, path: impl AsRef<Path>) -> Result<()> {
    write_ten4(t, BufWriter::new(File::create(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn encode(t: &Tensor4<f64>) -> Vec<u8> {
        let mut buf = Vec::new();
        write_ten4(t, &mut buf).unwrap();
        buf
    }

    #[test]
    fn byte_layout() {
        let t = Tensor4::new([2, 1, 1, 1], vec![1.0, -2.5]).unwrap();
        let buf = encode(&t);
        assert_eq!(&buf[..4], b"TEN4");
        assert_eq!(&buf[4..8], &2u32.to_le_bytes());
        assert_eq!(&buf[8..12], &1u32.to_le_bytes());
        assert_eq!(buf.len(), 4 + 16 + 16);
        assert_eq!(&buf[20..28], &1.0f64.to_le_bytes());
        assert_eq!(&buf[28..36], &(-2.5f64).to_le_bytes());
        let back: Tensor4<f64> = read_ten4(buf.as_slice()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn rejects_bad_magic_truncation_and_nan() {
        let t = Tensor4::new([2, 1, 1, 1], vec![1.0, 2.0]).unwrap();
        let mut buf = encode(&t);
        buf[0] = b'X';
        assert!(matches!(read_ten4::<f64, _>(buf.as_slice()), Err(Error::Format(_))));

        let buf = encode(&t);
        assert!(matches!(read_ten4::<f64, _>(&buf[..buf.len() - 3]), Err(Error::Format(_))));
        assert!(matches!(read_ten4::<f64, _>(&buf[..10]), Err(Error::Format(_))));

        let mut buf = encode(&t);
        buf[28..36].copy_from_slice(&f64::NAN.to_le_bytes());
        assert!(matches!(read_ten4::<f64, _>(buf.as_slice()), Err(Error::Format(_))));
    }
}
