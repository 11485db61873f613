//! `DCMP` checkpoint format: magic, u32 version, six u32 dimensions
//! (`d_x, d_y, hidden, fusion, code_len, categories`), then every parameter
//! array as little-endian `f32` in declaration order.
//!
//! Parameters are trained in `f64`; saving rounds to `f32`. Loading widens
//! exactly, so save -> load -> save is byte-identical.

use std::fs;
use std::path::Path;

use super::{ModelConfig, ModelParams, ParamSet};
use crate::binio::{to_u32, Reader, Writer};
use crate::Result;

const MAGIC: &[u8; 4] = b"DCMP";
const VERSION: u32 = 1;

pub fn write_checkpoint(params: &ModelParams) -> Result<Vec<u8>> {
    let c = params.config();
    let mut w = Writer::new();
    w.bytes(MAGIC);
    w.u32(VERSION);
    for (v, name) in [
        (c.d_x, "d_x"),
        (c.d_y, "d_y"),
        (c.hidden, "hidden"),
        (c.fusion, "fusion"),
        (c.code_len, "code_len"),
        (c.categories, "categories"),
    ] {
        w.u32(to_u32(v, name)?);
    }
    for (_, s) in params.slices() {
        s.iter().for_each(|&v| w.f32(v as f32));
    }
    Ok(w.finish())
}

pub fn read_checkpoint(bytes: &[u8]) -> Result<ModelParams> {
    let mut r = Reader::new(bytes);
    r.magic(MAGIC)?;
    r.version(VERSION)?;
    let mut dims = [0usize; 6];
    for (d, name) in dims
        .iter_mut()
        .zip(["d_x", "d_y", "hidden", "fusion", "code_len", "categories"])
    {
        *d = r.u32(name)? as usize;
    }
    let cfg = ModelConfig {
        d_x: dims[0],
        d_y: dims[1],
        hidden: dims[2],
        fusion: dims[3],
        code_len: dims[4],
        categories: dims[5],
    };
    let total: u128 = [
        cfg.d_x * cfg.hidden,
        cfg.d_y * cfg.hidden,
        2 * cfg.hidden + 2 * cfg.hidden * cfg.fusion + 2 * cfg.fusion,
        cfg.fusion * cfg.code_len + cfg.code_len,
        cfg.categories * cfg.code_len,
    ]
    .iter()
    .map(|&v| v as u128)
    .sum();
    if total * 4 != (bytes.len() as u128).saturating_sub(r.offset() as u128) {
        return r.fail(format!(
            "payload holds {} bytes, dimensions require {}",
            bytes.len() as u64 - r.offset(),
            total * 4
        ));
    }
    let mut p = ParamSet::zeros(&cfg);
    for (name, s) in p.slices_mut() {
        for v in s.iter_mut() {
            *v = r.f32(name)? as f64;
        }
    }
    r.finish()?;
    Ok(p)
}

pub fn save_checkpoint(params: &ModelParams, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, write_checkpoint(params)?)?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<ModelParams> {
    read_checkpoint(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Error;

    #[test]
    fn round_trip_bytes() {
        let cfg = ModelConfig {
            d_x: 3,
            d_y: 5,
            hidden: 4,
            fusion: 2,
            code_len: 6,
            categories: 3,
        };
        let p = ParamSet::init(&cfg, 12).unwrap();
        let bytes = write_checkpoint(&p).unwrap();
        let back = read_checkpoint(&bytes).unwrap();
        assert_eq!(back.config(), cfg);
        assert_eq!(write_checkpoint(&back).unwrap(), bytes);
        assert_eq!(bytes.len(), 32 + 4 * p.num_params());
        for ((_, a), (_, b)) in p.slices().iter().zip(back.slices()) {
            for (x, y) in a.iter().zip(b) {
                assert_eq!(*x as f32, *y as f32);
            }
        }
        assert!(matches!(
            read_checkpoint(&bytes[..bytes.len() - 4]),
            Err(Error::Format { .. })
        ));
    }
}
