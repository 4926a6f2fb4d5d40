//! Binary trajectory serialization.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//!   magic     8 bytes  "EP2DTRAJ"
//!   version   u32      currently 1
//!   nx, ny    u32 each grid points per axis
//!   box_len   f64      box side length
//!   dt        f64      base step
//!   stride    u64      steps between snapshots
//!   nonlinear u8       1 if the nonlinearity was active
//!   count     u64      number of snapshots
//!   then per snapshot:
//!     t       f64
//!     coeffs  nx*ny pairs (re f64, im f64), row-major in the grid's
//!             native frequency storage order
//! ```
//!
//! Loading re-validates the profile invariants (vanishing zero mode,
//! uniform timestamps), so a corrupted file fails loudly.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::spectral::{GridSpec, SpectralField};

use super::{IntegratorError, Profile, Trajectory};

const MAGIC: &[u8; 8] = b"EP2DTRAJ";
const VERSION: u32 = 1;
/// Refuse to allocate for absurd snapshot counts (corrupt headers).
const MAX_SNAPSHOTS: u64 = 10_000_000;

/// Write a trajectory to `path`.
pub fn save_trajectory(path: &Path, traj: &Trajectory) -> Result<(), IntegratorError> {
    let grid = traj.profiles()[0].f().grid();
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(grid.nx() as u32).to_le_bytes())?;
    w.write_all(&(grid.ny() as u32).to_le_bytes())?;
    w.write_all(&grid.box_length().to_le_bytes())?;
    w.write_all(&traj.dt().to_le_bytes())?;
    w.write_all(&(traj.record_stride() as u64).to_le_bytes())?;
    w.write_all(&[traj.nonlinear() as u8])?;
    w.write_all(&(traj.profiles().len() as u64).to_le_bytes())?;
    for p in traj.profiles() {
        w.write_all(&p.t().to_le_bytes())?;
        for c in p.f().coeffs() {
            w.write_all(&c.re.to_le_bytes())?;
            w.write_all(&c.im.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_u32(r: &mut impl Read) -> Result<u32, IntegratorError> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> Result<u64, IntegratorError> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64, IntegratorError> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

/// Read a trajectory written by [`save_trajectory`].
pub fn load_trajectory(path: &Path) -> Result<Trajectory, IntegratorError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(IntegratorError::MalformedTrajectory(
            "bad magic; not a trajectory file".into(),
        ));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(IntegratorError::MalformedTrajectory(format!(
            "unsupported version {version}"
        )));
    }
    let nx = read_u32(&mut r)? as usize;
    let ny = read_u32(&mut r)? as usize;
    let box_length = read_f64(&mut r)?;
    let grid = GridSpec::new(nx, ny, box_length)?;
    let dt = read_f64(&mut r)?;
    let stride = read_u64(&mut r)? as usize;
    let mut flag = [0u8; 1];
    r.read_exact(&mut flag)?;
    let nonlinear = flag[0] != 0;
    let count = read_u64(&mut r)?;
    if count == 0 || count > MAX_SNAPSHOTS {
        return Err(IntegratorError::MalformedTrajectory(format!(
            "implausible snapshot count {count}"
        )));
    }
    let mut profiles = Vec::with_capacity(count as usize);
    let mut buf = vec![0u8; grid.len() * 16];
    for _ in 0..count {
        let t = read_f64(&mut r)?;
        r.read_exact(&mut buf)?;
        let coeffs: Vec<Complex64> = buf
            .chunks_exact(16)
            .map(|c| {
                Complex64::new(
                    f64::from_le_bytes(c[0..8].try_into().expect("8-byte chunk")),
                    f64::from_le_bytes(c[8..16].try_into().expect("8-byte chunk")),
                )
            })
            .collect();
        let f = SpectralField::from_coeffs(grid, coeffs, false)?;
        profiles.push(Profile::new(f, t)?);
    }
    // Trailing data means the header lied about the count.
    let mut one = [0u8; 1];
    if r.read(&mut one)? != 0 {
        return Err(IntegratorError::MalformedTrajectory(
            "trailing bytes after the last snapshot".into(),
        ));
    }
    Trajectory::from_parts(profiles, dt, stride, nonlinear)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::tests::gaussian_state;
    use crate::integrator::{run, RunSpec};

    fn sample_trajectory() -> Trajectory {
        run(
            &gaussian_state(0.01),
            &RunSpec {
                t_end: 0.6,
                dt: 0.05,
                record_stride: 3,
                nonlinear: true,
            },
        )
        .unwrap()
    }

    #[test]
    fn roundtrip_is_bit_exact() {
        let traj = sample_trajectory();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.traj");
        save_trajectory(&path, &traj).unwrap();
        let back = load_trajectory(&path).unwrap();
        assert_eq!(back.dt(), traj.dt());
        assert_eq!(back.record_stride(), traj.record_stride());
        assert_eq!(back.nonlinear(), traj.nonlinear());
        assert_eq!(back.profiles().len(), traj.profiles().len());
        for (a, b) in back.profiles().iter().zip(traj.profiles()) {
            assert_eq!(a.t().to_bits(), b.t().to_bits());
            for (x, y) in a.f().coeffs().iter().zip(b.f().coeffs()) {
                assert_eq!(x.re.to_bits(), y.re.to_bits());
                assert_eq!(x.im.to_bits(), y.im.to_bits());
            }
        }
    }

    #[test]
    fn corrupted_files_fail_loudly() {
        let traj = sample_trajectory();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.traj");
        save_trajectory(&path, &traj).unwrap();

        // Truncation.
        let bytes = std::fs::read(&path).unwrap();
        let cut = dir.path().join("cut.traj");
        std::fs::write(&cut, &bytes[..bytes.len() - 7]).unwrap();
        assert!(load_trajectory(&cut).is_err());

        // Wrong magic.
        let mut wrong = bytes.clone();
        wrong[0] ^= 0xff;
        let bad = dir.path().join("bad.traj");
        std::fs::write(&bad, &wrong).unwrap();
        assert!(matches!(
            load_trajectory(&bad),
            Err(IntegratorError::MalformedTrajectory(_))
        ));

        // Trailing garbage.
        let mut long = bytes;
        long.push(0);
        let fat = dir.path().join("fat.traj");
        std::fs::write(&fat, &long).unwrap();
        assert!(matches!(
            load_trajectory(&fat),
            Err(IntegratorError::MalformedTrajectory(_))
        ));
    }
}
