//! Self-describing dumps for spectral fields and append-only trajectory
//! logs.
//!
//! Field dump layout (all integers little-endian):
//!
//! ```text
//! offset  size  content
//! 0       4     magic b"SFD1"
//! 4       1     layout tag: 0 = real-space row-major, 1 = coeffs centered
//! 5       4     u32 n1
//! 9       4     u32 n2
//! 13      4     u32 component count c
//! 17      ...   c·n1·n2 complex samples as (re: f64 LE, im: f64 LE),
//!               component-major, then row-major over (t1, t2) for
//!               layout 0, or over modes m1, m2 ascending from
//!               -n/2+1 to n/2 for layout 1
//! ```

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array3;
use num_complex::Complex64;

use crate::error::{CoreError, Result};
use crate::field::SpectralField;
use crate::grid::TorusGrid;

const MAGIC: &[u8; 4] = b"SFD1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DumpLayout {
    RealSpace,
    CoeffsCentered,
}

impl DumpLayout {
    fn tag(self) -> u8 {
        match self {
            Self::RealSpace => 0,
            Self::CoeffsCentered => 1,
        }
    }

    fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(Self::RealSpace),
            1 => Ok(Self::CoeffsCentered),
            other => Err(CoreError::DumpFormat(format!("unknown layout tag {other}"))),
        }
    }
}

/// Centered mode order: m from -n/2+1 to n/2 maps to storage index
/// k = m mod n.
fn centered_modes(n: usize) -> impl Iterator<Item = usize> {
    let half = n as i64 / 2;
    (-half + 1..=half).map(move |m| m.rem_euclid(n as i64) as usize)
}

pub fn write_spectral_dump(
    path: impl AsRef<Path>,
    field: &SpectralField,
    layout: DumpLayout,
) -> Result<()> {
    let grid = field.grid;
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&[layout.tag()])?;
    for v in [grid.n1 as u32, grid.n2 as u32, field.channels() as u32] {
        w.write_all(&v.to_le_bytes())?;
    }
    let mut put = |z: Complex64| -> Result<()> {
        w.write_all(&z.re.to_le_bytes())?;
        w.write_all(&z.im.to_le_bytes())?;
        Ok(())
    };
    for c in 0..field.channels() {
        match layout {
            DumpLayout::RealSpace => {
                for i1 in 0..grid.n1 {
                    for i2 in 0..grid.n2 {
                        put(field.values()[(c, i1, i2)])?;
                    }
                }
            }
            DumpLayout::CoeffsCentered => {
                for k1 in centered_modes(grid.n1) {
                    for k2 in centered_modes(grid.n2) {
                        put(field.coeffs()[(c, k1, k2)])?;
                    }
                }
            }
        }
    }
    Ok(())
}

pub fn read_spectral_dump(path: impl AsRef<Path>, d: usize) -> Result<SpectralField> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(CoreError::DumpFormat("bad magic".into()));
    }
    let mut tag = [0u8; 1];
    r.read_exact(&mut tag)?;
    let layout = DumpLayout::from_tag(tag[0])?;
    let mut u32buf = [0u8; 4];
    let mut next_u32 = |r: &mut BufReader<File>| -> Result<u32> {
        r.read_exact(&mut u32buf)?;
        Ok(u32::from_le_bytes(u32buf))
    };
    let n1 = next_u32(&mut r)? as usize;
    let n2 = next_u32(&mut r)? as usize;
    let c = next_u32(&mut r)? as usize;
    let grid = TorusGrid::new(n1, n2, d)?;
    let mut data = Array3::default((c, n1, n2));
    let mut f64buf = [0u8; 8];
    let mut next = |r: &mut BufReader<File>| -> Result<Complex64> {
        r.read_exact(&mut f64buf)?;
        let re = f64::from_le_bytes(f64buf);
        r.read_exact(&mut f64buf)?;
        let im = f64::from_le_bytes(f64buf);
        Ok(Complex64::new(re, im))
    };
    for ch in 0..c {
        match layout {
            DumpLayout::RealSpace => {
                for i1 in 0..n1 {
                    for i2 in 0..n2 {
                        data[(ch, i1, i2)] = next(&mut r)?;
                    }
                }
            }
            DumpLayout::CoeffsCentered => {
                for k1 in centered_modes(n1) {
                    for k2 in centered_modes(n2) {
                        data[(ch, k1, k2)] = next(&mut r)?;
                    }
                }
            }
        }
    }
    match layout {
        DumpLayout::RealSpace => SpectralField::from_values(grid, data),
        DumpLayout::CoeffsCentered => SpectralField::from_coeffs(grid, data),
    }
}

/// Append-only structured-text log: one line per flow sample plus
/// optional snapshot references.
pub struct TrajectoryLogger {
    out: BufWriter<File>,
}

impl TrajectoryLogger {
    pub fn create(path: impl AsRef<Path>) -> Result<Self> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "# s action grad_norm max_p_sq energy_inc")?;
        Ok(Self { out })
    }

    pub fn log_sample(
        &mut self,
        s: f64,
        action: f64,
        grad_norm: f64,
        max_p_sq: f64,
        energy_inc: f64,
    ) -> Result<()> {
        writeln!(
            self.out,
            "s={s:.6} action={action:.12e} grad_norm={grad_norm:.6e} max_p_sq={max_p_sq:.6e} energy_inc={energy_inc:.6e}"
        )?;
        Ok(())
    }

    pub fn log_snapshot(&mut self, s: f64, path: &str) -> Result<()> {
        writeln!(self.out, "snapshot s={s:.6} file={path}")?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

/// Parse a trajectory log back into (s, action, grad_norm, max_p_sq,
/// energy_inc) rows; snapshot lines are skipped.
pub fn read_trajectory_log(path: impl AsRef<Path>) -> Result<Vec<[f64; 5]>> {
    let r = BufReader::new(File::open(path)?);
    let mut rows = Vec::new();
    for line in r.lines() {
        let line = line?;
        if line.starts_with('#') || line.starts_with("snapshot") || line.trim().is_empty() {
            continue;
        }
        let mut row = [0.0; 5];
        for (slot, part) in line.split_whitespace().enumerate() {
            let (_, value) = part.split_once('=').ok_or_else(|| {
                CoreError::DumpFormat(format!("malformed log field: {part}"))
            })?;
            row[slot] = value
                .parse()
                .map_err(|e| CoreError::DumpFormat(format!("bad number {value}: {e}")))?;
        }
        rows.push(row);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn dump_roundtrip_both_layouts() {
        let grid = TorusGrid::new(16, 24, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let f = SpectralField::random_band_limited(grid, 2, 5, 1.0, &mut rng);
        let dir = std::env::temp_dir();
        for layout in [DumpLayout::RealSpace, DumpLayout::CoeffsCentered] {
            let path = dir.join(format!("sfd_test_{}.sfd", layout.tag()));
            write_spectral_dump(&path, &f, layout).unwrap();
            let g = read_spectral_dump(&path, 1).unwrap();
            assert_eq!(g.channels(), 2);
            let diff: f64 = f
                .values()
                .iter()
                .zip(g.values().iter())
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            assert!(diff < 1e-13, "layout {layout:?}: {diff}");
            std::fs::remove_file(&path).ok();
        }
    }

    #[test]
    fn rejects_bad_magic() {
        let dir = std::env::temp_dir().join("sfd_bad_magic.sfd");
        std::fs::write(&dir, b"NOPE rest of file").unwrap();
        assert!(matches!(
            read_spectral_dump(&dir, 1),
            Err(CoreError::DumpFormat(_))
        ));
        std::fs::remove_file(&dir).ok();
    }

    #[test]
    fn trajectory_log_roundtrip() {
        let path = std::env::temp_dir().join("traj_test.log");
        let mut log = TrajectoryLogger::create(&path).unwrap();
        log.log_sample(0.0, -1.5, 1e-3, 0.2, 0.0).unwrap();
        log.log_snapshot(0.0, "z0.sfd").unwrap();
        log.log_sample(0.01, -1.6, 9e-4, 0.19, 1e-5).unwrap();
        log.finish().unwrap();
        let rows = read_trajectory_log(&path).unwrap();
        assert_eq!(rows.len(), 2);
        assert!((rows[1][0] - 0.01).abs() < 1e-12);
        assert!((rows[1][1] + 1.6).abs() < 1e-12);
        std::fs::remove_file(&path).ok();
    }
}
