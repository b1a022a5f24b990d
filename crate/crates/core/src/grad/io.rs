//! Binary tensor files.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic      4 bytes  "PRSM"
//! version    u32
//! count      u32
//! per tensor:
//!   name_len u16, name (UTF-8)
//!   ndim     u8,  dims (u32 each)
//!   offset   u64  byte offset into the data section
//!   len      u64  number of f32 values
//! data section: raw f32 values
//! ```

use std::io::{Read, Write};
use std::path::Path;

use super::tensor::Tensor;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"PRSM";
pub const FORMAT_VERSION: u32 = 1;

pub fn write_tensors<W: Write>(mut w: W, tensors: &[(&str, &Tensor<f32>)]) -> Result<()> {
    let mut header = Vec::new();
    header.extend_from_slice(MAGIC);
    header.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    header.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    let mut offset = 0u64;
    for (name, t) in tensors {
        let nb = name.as_bytes();
        if nb.len() > u16::MAX as usize || t.shape().len() > u8::MAX as usize {
            return Err(Error::ModelFormat(format!("tensor '{name}' cannot be encoded")));
        }
        header.extend_from_slice(&(nb.len() as u16).to_le_bytes());
        header.extend_from_slice(nb);
        header.push(t.shape().len() as u8);
        for &d in t.shape() {
            header.extend_from_slice(&(d as u32).to_le_bytes());
        }
        header.extend_from_slice(&offset.to_le_bytes());
        header.extend_from_slice(&(t.numel() as u64).to_le_bytes());
        offset += 4 * t.numel() as u64;
    }
    w.write_all(&header)?;
    for (_, t) in tensors {
        let bytes: Vec<u8> = t.data().iter().flat_map(|v| v.to_le_bytes()).collect();
        w.write_all(&bytes)?;
    }
    w.flush()?;
    Ok(())
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| Error::ModelFormat("unexpected end of file".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("len 2")))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("len 4")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("len 8")))
    }
}

pub fn read_tensors<R: Read>(mut r: R) -> Result<Vec<(String, Tensor<f32>)>> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    let mut c = Cursor { buf: &buf, pos: 0 };
    if c.take(4)? != MAGIC {
        return Err(Error::ModelFormat("bad magic".into()));
    }
    let version = c.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::ModelFormat(format!("unsupported format version {version}")));
    }
    let count = c.u32()? as usize;
    let mut table = Vec::with_capacity(count.min(1 << 16));
    for _ in 0..count {
        let name_len = c.u16()? as usize;
        let name = String::from_utf8(c.take(name_len)?.to_vec()).map_err(|_| Error::ModelFormat("tensor name is not UTF-8".into()))?;
        let ndim = c.u8()? as usize;
        let shape = (0..ndim).map(|_| c.u32().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
        let offset = c.u64()?;
        let len = c.u64()?;
        if shape.iter().product::<usize>() as u64 != len {
            return Err(Error::ModelFormat(format!("tensor '{name}': shape {shape:?} disagrees with length {len}")));
        }
        table.push((name, shape, offset, len));
    }
    let data_start = c.pos;
    let data_len = (buf.len() - data_start) as u64;
    let mut out = Vec::with_capacity(table.len());
    for (name, shape, offset, len) in table {
        let end = offset.checked_add(len * 4).filter(|&e| e <= data_len);
        if end.is_none() {
            return Err(Error::ModelFormat(format!("tensor '{name}' runs past the end of the file")));
        }
        let start = data_start + offset as usize;
        let values = buf[start..start + 4 * len as usize]
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().expect("len 4")))
            .collect();
        out.push((name, Tensor::new(shape, values)?));
    }
    Ok(out)
}

pub fn save_tensors(path: impl AsRef<Path>, tensors: &[(&str, &Tensor<f32>)]) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_tensors(std::io::BufWriter::new(f), tensors)
}

pub fn load_tensors(path: impl AsRef<Path>) -> Result<Vec<(String, Tensor<f32>)>> {
    read_tensors(std::fs::File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(
            bits in proptest::collection::vec(proptest::collection::vec(any::<u32>(), 0..40), 0..5),
        ) {
            // Arbitrary bit patterns, NaNs included, must survive unchanged.
            let tensors: Vec<Tensor<f32>> = bits
                .iter()
                .map(|b| Tensor::new(vec![b.len()], b.iter().map(|&x| f32::from_bits(x)).collect()).unwrap())
                .collect();
            let names: Vec<String> = (0..tensors.len()).map(|i| format!("layer{i}.w")).collect();
            let refs: Vec<(&str, &Tensor<f32>)> = names.iter().map(String::as_str).zip(tensors.iter()).collect();
            let mut buf = Vec::new();
            write_tensors(&mut buf, &refs).unwrap();
            let back = read_tensors(buf.as_slice()).unwrap();
            prop_assert_eq!(back.len(), tensors.len());
            for ((n, t), (bn, bt)) in refs.iter().zip(&back) {
                prop_assert_eq!(*n, bn.as_str());
                prop_assert_eq!(t.shape(), bt.shape());
                let a: Vec<u32> = t.data().iter().map(|x| x.to_bits()).collect();
                let b: Vec<u32> = bt.data().iter().map(|x| x.to_bits()).collect();
                prop_assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn header_layout() {
        let t = Tensor::new(vec![2, 1], vec![1.5f32, -2.0]).unwrap();
        let mut buf = Vec::new();
        write_tensors(&mut buf, &[("w", &t)]).unwrap();
        assert_eq!(&buf[..4], b"PRSM");
        assert_eq!(u32::from_le_bytes(buf[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(buf[8..12].try_into().unwrap()), 1);
        let data = &buf[buf.len() - 8..];
        assert_eq!(f32::from_le_bytes(data[..4].try_into().unwrap()), 1.5);
    }

    #[test]
    fn rejects_corruption() {
        let t = Tensor::new(vec![3], vec![1.0f32, 2.0, 3.0]).unwrap();
        let mut buf = Vec::new();
        write_tensors(&mut buf, &[("w", &t)]).unwrap();
        assert!(read_tensors(&buf[..buf.len() - 1]).is_err());
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(read_tensors(bad.as_slice()).is_err());
        let mut bad = buf;
        bad[4] = 9;
        assert!(read_tensors(bad.as_slice()).is_err());
    }
}
