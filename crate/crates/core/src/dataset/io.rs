//! Dataset (`DCMH`) and noise-mask (`DCNM`) binary formats, plus CSV export.
//!
//! Both formats are little-endian with a 4-byte magic and a u32 version.

use std::fs;
use std::path::Path;

use super::{Dataset, Instance, Label, NoiseMask, Split};
use crate::binio::{to_u32, Reader, Writer};
use crate::Result;

const DATASET_MAGIC: &[u8; 4] = b"DCMH";
const MASK_MAGIC: &[u8; 4] = b"DCNM";
const VERSION: u32 = 1;

pub fn write_dataset(ds: &Dataset) -> Result<Vec<u8>> {
    ds.validate_dims()?;
    let mut w = Writer::new();
    w.bytes(DATASET_MAGIC);
    w.u32(VERSION);
    w.u32(to_u32(ds.len(), "n")?);
    w.u32(to_u32(ds.d_x, "d_x")?);
    w.u32(to_u32(ds.d_y, "d_y")?);
    w.u32(to_u32(ds.m, "m")?);
    w.u64(ds.seed);
    for o in &ds.instances {
        o.x.iter().for_each(|&v| w.f32(v));
        o.y.iter().for_each(|&v| w.f32(v));
        w.bytes(o.label.as_bytes());
    }
    Ok(w.finish())
}

pub fn read_dataset(bytes: &[u8]) -> Result<Dataset> {
    let mut r = Reader::new(bytes);
    r.magic(DATASET_MAGIC)?;
    r.version(VERSION)?;
    let n = r.u32("n")? as usize;
    let d_x = r.u32("d_x")? as usize;
    let d_y = r.u32("d_y")? as usize;
    let m = r.u32("m")? as usize;
    let seed = r.u64("seed")?;
    let mut instances = Vec::with_capacity(n.min(1 << 20));
    for _ in 0..n {
        let x = (0..d_x).map(|_| r.f32("x feature")).collect::<Result<Vec<_>>>()?;
        let y = (0..d_y).map(|_| r.f32("y feature")).collect::<Result<Vec<_>>>()?;
        let at = r.offset();
        let bits = r.take(m, "label")?;
        if let Some(bad) = bits.iter().position(|&b| b > 1) {
            return Err(crate::Error::Format {
                offset: at + bad as u64,
                message: format!("label byte {} is not 0/1", bits[bad]),
            });
        }
        instances.push(Instance {
            x,
            y,
            label: Label::new(bits.to_vec()),
        });
    }
    r.finish()?;
    Ok(Dataset {
        instances,
        d_x,
        d_y,
        m,
        split: Split::Unspecified,
        seed,
    })
}

pub fn save_dataset(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, write_dataset(ds)?)?;
    Ok(())
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    read_dataset(&fs::read(path)?)
}

pub fn write_noise_mask(mask: &NoiseMask) -> Result<Vec<u8>> {
    let mut w = Writer::new();
    w.bytes(MASK_MAGIC);
    w.u32(VERSION);
    w.u32(to_u32(mask.len(), "n")?);
    for (t, orig) in mask.noise_type.iter().zip(&mask.original_labels) {
        w.u8(*t);
        if *t == 0 {
            w.bytes(&vec![0u8; mask.m]);
        } else {
            w.bytes(orig.as_bytes());
        }
    }
    Ok(w.finish())
}

/// Decodes a noise mask. The format does not carry `m`, so the caller
/// supplies the label width (taken from the companion dataset).
pub fn read_noise_mask(bytes: &[u8], m: usize) -> Result<NoiseMask> {
    let mut r = Reader::new(bytes);
    r.magic(MASK_MAGIC)?;
    r.version(VERSION)?;
    let n = r.u32("n")? as usize;
    let mut mask = NoiseMask {
        noise_type: Vec::with_capacity(n.min(1 << 20)),
        original_labels: Vec::with_capacity(n.min(1 << 20)),
        m,
    };
    for _ in 0..n {
        let t = r.u8("noise type")?;
        if t > 4 {
            return r.fail(format!("noise type {t} outside 0..=4"));
        }
        let bits = r.take(m, "original label")?;
        mask.noise_type.push(t);
        mask.original_labels.push(Label::new(bits.to_vec()));
    }
    r.finish()?;
    Ok(mask)
}

pub fn save_noise_mask(mask: &NoiseMask, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, write_noise_mask(mask)?)?;
    Ok(())
}

pub fn load_noise_mask(path: impl AsRef<Path>, m: usize) -> Result<NoiseMask> {
    read_noise_mask(&fs::read(path)?, m)
}

/// One row per instance: `x0..`, `y0..`, `l0..`. Inspection only.
pub fn export_csv(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let header: Vec<String> = (0..ds.d_x)
        .map(|i| format!("x{i}"))
        .chain((0..ds.d_y).map(|i| format!("y{i}")))
        .chain((0..ds.m).map(|i| format!("l{i}")))
        .collect();
    w.write_record(&header)?;
    for o in &ds.instances {
        let row: Vec<String> =
            o.x.iter()
                .chain(&o.y)
                .map(|v| v.to_string())
                .chain(o.label.as_bytes().iter().map(|b| b.to_string()))
                .collect();
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

impl Dataset {
    fn validate_dims(&self) -> Result<()> {
        for (i, o) in self.instances.iter().enumerate() {
            if o.x.len() != self.d_x || o.y.len() != self.d_y || o.label.len() != self.m {
                return Err(crate::Error::arg(format!("instance {i} does not match dataset dims")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_synthetic, inject_noise, SynthConfig};
    use crate::Error;

    fn sample() -> Dataset {
        let cfg = SynthConfig {
            n: 20,
            m: 5,
            d_x: 4,
            d_y: 6,
            labels_min: 1,
            labels_max: 2,
            cluster_spread: 0.3,
        };
        generate_synthetic(&cfg, 11, Split::Train).unwrap()
    }

    #[test]
    fn dataset_round_trip() {
        let ds = sample();
        let bytes = write_dataset(&ds).unwrap();
        let back = read_dataset(&bytes).unwrap();
        assert_eq!(back.instances, ds.instances);
        assert_eq!((back.d_x, back.d_y, back.m, back.seed), (4, 6, 5, 11));
        assert_eq!(write_dataset(&back).unwrap(), bytes);
        assert_eq!(bytes.len(), 32 + 20 * (4 * 4 + 6 * 4 + 5));
    }

    #[test]
    fn truncated_is_format_error() {
        let bytes = write_dataset(&sample()).unwrap();
        let err = read_dataset(&bytes[..bytes.len() - 3]).unwrap_err();
        assert!(matches!(err, Error::Format { .. }), "{err}");
        let err = read_dataset(&bytes[..10]).unwrap_err();
        assert!(matches!(err, Error::Format { offset: 8, .. }), "{err}");
    }

    #[test]
    fn bad_magic_and_version() {
        let mut bytes = write_dataset(&sample()).unwrap();
        bytes[0] = b'X';
        assert!(matches!(read_dataset(&bytes), Err(Error::Format { offset: 0, .. })));
        let mut bytes = write_dataset(&sample()).unwrap();
        bytes[4] = 2;
        assert!(matches!(read_dataset(&bytes), Err(Error::Format { offset: 4, .. })));
    }

    #[test]
    fn empty_header_is_valid() {
        let ds = Dataset::empty(4, 4, 3, 0);
        let back = read_dataset(&write_dataset(&ds).unwrap()).unwrap();
        assert!(back.is_empty());
        assert_eq!(back.m, 3);
    }

    #[test]
    fn mask_round_trip() {
        let ds = sample();
        let (_, mask) = inject_noise(&ds, 0.4, 1).unwrap();
        let bytes = write_noise_mask(&mask).unwrap();
        let back = read_noise_mask(&bytes, ds.m).unwrap();
        assert_eq!(back, mask);
        assert!(read_noise_mask(&bytes[..bytes.len() - 1], ds.m).is_err());
    }

    #[test]
    fn csv_export_has_one_row_per_instance() {
        let ds = sample();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ds.csv");
        export_csv(&ds, &path).unwrap();
        let text = std::fs::read_to_string(path).unwrap();
        assert_eq!(text.lines().count(), 21);
        assert!(text.starts_with("x0,x1,x2,x3,y0"));
    }
}
