//! Binary grid files.
//!
//! Layout, all little-endian:
//!
//! ```text
//! magic   b"SDFG"
//! version u32 (= 1)
//! dims    3 x u32
//! origin  3 x f64
//! delta   f64
//! flags   u32   bit0: gradients present, bit1: frame tag present
//! values  N x f32, k fastest
//! [grads  N x 3 x f32]
//! [frame  u32 byte length + UTF-8]
//! ```

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::Vector3;

use super::{GradientGrid, GridSpec, SdfGrid};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"SDFG";
pub const VERSION: u32 = 1;
pub const FLAG_GRADIENTS: u32 = 1;
pub const FLAG_FRAME_TAG: u32 = 1 << 1;

pub fn write_grid<W: Write>(
    mut w: W,
    sdf: &SdfGrid,
    gradients: Option<&GradientGrid>,
) -> std::io::Result<()> {
    let spec = &sdf.spec;
    let mut buf = Vec::with_capacity(64 + spec.len() * 4);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    for n in spec.dims {
        buf.extend_from_slice(&(n as u32).to_le_bytes());
    }
    for c in spec.origin.iter() {
        buf.extend_from_slice(&c.to_le_bytes());
    }
    buf.extend_from_slice(&spec.resolution.to_le_bytes());
    let mut flags = 0;
    if gradients.is_some() {
        flags |= FLAG_GRADIENTS;
    }
    if !sdf.frame.is_empty() {
        flags |= FLAG_FRAME_TAG;
    }
    buf.extend_from_slice(&flags.to_le_bytes());
    for v in &sdf.values {
        buf.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    if let Some(g) = gradients {
        assert_eq!(g.spec, sdf.spec, "gradient grid must share the value grid's lattice");
        for v in &g.vectors {
            for c in v.iter() {
                buf.extend_from_slice(&(*c as f32).to_le_bytes());
            }
        }
    }
    if !sdf.frame.is_empty() {
        buf.extend_from_slice(&(sdf.frame.len() as u32).to_le_bytes());
        buf.extend_from_slice(sdf.frame.as_bytes());
    }
    w.write_all(&buf)
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        let end = self.pos + N;
        let bytes = self
            .data
            .get(self.pos..end)
            .ok_or_else(|| Error::Parse("grid file truncated".into()))?;
        self.pos = end;
        Ok(bytes.try_into().unwrap())
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take()?))
    }
    fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take()?))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take()?))
    }
}

pub fn read_grid<R: Read>(mut r: R) -> Result<(SdfGrid, Option<GradientGrid>)> {
    let mut data = Vec::new();
    r.read_to_end(&mut data)
        .map_err(|e| Error::Parse(format!("reading grid: {e}")))?;
    decode(&data)
}

pub fn decode(data: &[u8]) -> Result<(SdfGrid, Option<GradientGrid>)> {
    let mut c = Cursor { data, pos: 0 };
    if &c.take::<4>()? != MAGIC {
        return Err(Error::Parse("not an SDFG grid file".into()));
    }
    let version = c.u32()?;
    if version != VERSION {
        return Err(Error::Parse(format!("unsupported grid version {version}")));
    }
    let dims = [c.u32()? as usize, c.u32()? as usize, c.u32()? as usize];
    let origin = Vector3::new(c.f64()?, c.f64()?, c.f64()?);
    let resolution = c.f64()?;
    let flags = c.u32()?;
    let spec = GridSpec::new(origin, resolution, dims)?;
    let n = spec.len();
    if data.len() < c.pos + n * 4 {
        return Err(Error::Parse("grid file truncated".into()));
    }
    let values = (0..n)
        .map(|_| c.f32().map(f64::from))
        .collect::<Result<Vec<_>>>()?;
    let gradients = if flags & FLAG_GRADIENTS != 0 {
        let vectors = (0..n)
            .map(|_| {
                Ok(Vector3::new(
                    c.f32()? as f64,
                    c.f32()? as f64,
                    c.f32()? as f64,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        Some(GradientGrid {
            spec: spec.clone(),
            vectors,
        })
    } else {
        None
    };
    let frame = if flags & FLAG_FRAME_TAG != 0 {
        let len = c.u32()? as usize;
        let bytes = data
            .get(c.pos..c.pos + len)
            .ok_or_else(|| Error::Parse("grid frame tag truncated".into()))?;
        String::from_utf8(bytes.to_vec()).map_err(|_| Error::Parse("frame tag not UTF-8".into()))?
    } else {
        String::new()
    };
    Ok((SdfGrid::new(spec, values, frame)?, gradients))
}

pub fn save(path: &Path, sdf: &SdfGrid, gradients: Option<&GradientGrid>) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_grid(std::io::BufWriter::new(file), sdf, gradients).map_err(|e| Error::io(path, e))
}

pub fn load(path: &Path) -> Result<(SdfGrid, Option<GradientGrid>)> {
    let data = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&data)
}
