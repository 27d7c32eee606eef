//! Grid cache files.
//!
//! Little-endian layout, 64-byte header followed by the payload:
//!
//! | offset | size | field                          |
//! |--------|------|--------------------------------|
//! | 0      | 4    | magic `SDFG`                   |
//! | 4      | 4    | version `u32` = 1              |
//! | 8      | 6    | nx, ny, nz as `u16`            |
//! | 14     | 2    | reserved `u16` = 0             |
//! | 16     | 24   | bounds_min, 3 × `f64`          |
//! | 40     | 24   | bounds_max, 3 × `f64`          |
//! | 64     | 4·n  | values, `f32`, x-fastest       |
//!
//! Distances are in meters.

use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use nalgebra::Point3;

use super::grid::{GridError, GridSpec, SdfGrid};

pub const GRID_MAGIC: [u8; 4] = *b"SDFG";
pub const GRID_VERSION: u32 = 1;
pub const GRID_HEADER_LEN: usize = 64;

impl SdfGrid {
    pub fn write_to<W: Write>(&self, mut writer: W) -> Result<(), GridError> {
        let spec = self.spec();
        let mut header = Vec::with_capacity(GRID_HEADER_LEN);
        header.extend_from_slice(&GRID_MAGIC);
        header.extend_from_slice(&GRID_VERSION.to_le_bytes());
        for &n in &spec.dims {
            let n = u16::try_from(n).map_err(|_| GridError::InvalidDims(spec.dims))?;
            header.extend_from_slice(&n.to_le_bytes());
        }
        header.extend_from_slice(&0u16.to_le_bytes());
        for c in spec.bounds_min.iter().chain(spec.bounds_max.iter()) {
            header.extend_from_slice(&c.to_le_bytes());
        }
        debug_assert_eq!(header.len(), GRID_HEADER_LEN);
        writer.write_all(&header)?;

        let mut payload = Vec::with_capacity(4 * self.values().len());
        for v in self.values() {
            payload.extend_from_slice(&v.to_le_bytes());
        }
        writer.write_all(&payload)?;
        writer.flush()?;
        Ok(())
    }

    /// Reads a complete grid; nothing is returned unless the header and the
    /// full payload validate.
    pub fn read_from<R: Read>(mut reader: R) -> Result<Self, GridError> {
        let mut bytes = Vec::new();
        reader.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, GridError> {
        if bytes.len() < 4 || bytes[..4] != GRID_MAGIC {
            let mut magic = [0u8; 4];
            let n = bytes.len().min(4);
            magic[..n].copy_from_slice(&bytes[..n]);
            return Err(GridError::BadMagic(magic));
        }
        if bytes.len() < GRID_HEADER_LEN {
            return Err(GridError::Truncated {
                expected: GRID_HEADER_LEN,
                actual: bytes.len(),
            });
        }
        let u16_at = |o: usize| u16::from_le_bytes([bytes[o], bytes[o + 1]]) as usize;
        let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());

        let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        if version != GRID_VERSION {
            return Err(GridError::UnsupportedVersion(version));
        }
        let spec = GridSpec {
            dims: [u16_at(8), u16_at(10), u16_at(12)],
            bounds_min: Point3::new(f64_at(16), f64_at(24), f64_at(32)),
            bounds_max: Point3::new(f64_at(40), f64_at(48), f64_at(56)),
        };
        spec.validate()?;

        let expected = GRID_HEADER_LEN + 4 * spec.len();
        match bytes.len() {
            n if n < expected => {
                return Err(GridError::Truncated {
                    expected,
                    actual: n,
                })
            }
            n if n > expected => return Err(GridError::TrailingBytes(n - expected)),
            _ => {}
        }
        let values = bytes[GRID_HEADER_LEN..]
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
            .collect();
        SdfGrid::from_values(spec, values)
    }

    /// Writes to a sibling temporary file and renames it into place, so an
    /// interrupted save never leaves a partial cache behind.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), GridError> {
        let path = path.as_ref();
        let mut tmp = path.as_os_str().to_owned();
        tmp.push(".partial");
        let file = fs::File::create(&tmp)?;
        let result = self.write_to(BufWriter::new(file));
        if let Err(e) = result {
            let _ = fs::remove_file(&tmp);
            return Err(e);
        }
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, GridError> {
        Self::from_bytes(&fs::read(path)?)
    }
}

pub fn save_grid(grid: &SdfGrid, path: impl AsRef<Path>) -> Result<(), GridError> {
    grid.save(path)
}

pub fn load_grid(path: impl AsRef<Path>) -> Result<SdfGrid, GridError> {
    SdfGrid::load(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;

    fn sample_grid() -> SdfGrid {
        let spec = GridSpec::centered(
            [3, 4, 5],
            Vector3::new(0.1, 0.2, 0.3),
            Point3::new(0.01, -0.02, 0.03),
        );
        let values = (0..60).map(|i| (i as f32 * 0.37).sin() * 0.1).collect();
        SdfGrid::from_values(spec, values).unwrap()
    }

    fn encode(grid: &SdfGrid) -> Vec<u8> {
        let mut bytes = Vec::new();
        grid.write_to(&mut bytes).unwrap();
        bytes
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let grid = sample_grid();
        let bytes = encode(&grid);
        assert_eq!(bytes.len(), GRID_HEADER_LEN + 4 * 60);
        let back = SdfGrid::from_bytes(&bytes).unwrap();
        assert_eq!(back, grid);
        assert_eq!(encode(&back), bytes);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.sdf");
        let grid = sample_grid();
        save_grid(&grid, &path).unwrap();
        assert_eq!(load_grid(&path).unwrap(), grid);
        assert!(!dir.path().join("g.sdf.partial").exists());
    }

    #[test]
    fn wrong_magic() {
        let mut bytes = encode(&sample_grid());
        bytes[0] = b'X';
        assert!(matches!(
            SdfGrid::from_bytes(&bytes),
            Err(GridError::BadMagic(_))
        ));
        assert!(matches!(
            SdfGrid::from_bytes(&[]),
            Err(GridError::BadMagic(_))
        ));
    }

    #[test]
    fn wrong_version() {
        let mut bytes = encode(&sample_grid());
        bytes[4] = 2;
        assert!(matches!(
            SdfGrid::from_bytes(&bytes),
            Err(GridError::UnsupportedVersion(2))
        ));
    }

    #[test]
    fn truncated_payload() {
        let bytes = encode(&sample_grid());
        let cut = &bytes[..bytes.len() - 6];
        assert!(matches!(
            SdfGrid::from_bytes(cut),
            Err(GridError::Truncated {
                expected: 304,
                actual: 298
            })
        ));
        assert!(matches!(
            SdfGrid::from_bytes(&bytes[..20]),
            Err(GridError::Truncated { .. })
        ));
    }

    #[test]
    fn trailing_bytes() {
        let mut bytes = encode(&sample_grid());
        bytes.push(0);
        assert!(matches!(
            SdfGrid::from_bytes(&bytes),
            Err(GridError::TrailingBytes(1))
        ));
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            load_grid("/nonexistent/grid.sdf"),
            Err(GridError::Io(_))
        ));
    }
}
