//! Binary spectral snapshots.
//!
//! ```text
//! "FSNS"  u32 version = 1
//! u32 K   u8 kind   f64 time   f64 alpha   f64 nu   u64 count
//! count × (i32 k1, i32 k2, f64 re, f64 im)
//! ```
//!
//! All integers and floats little-endian. Only the half spectrum
//! (`k1 > 0` or `k1 = 0, k2 > 0`) is stored. A control file is a plain
//! concatenation of snapshots, one per constant piece.

use std::io::{self, Read, Write};
use std::path::Path;

use fsns_core::spectral::{FieldKind, Mode, SpectralField, WaveGrid};
use fsns_core::Complex64;

pub const MAGIC: &[u8; 4] = b"FSNS";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub field: SpectralField,
    pub time: f64,
    pub alpha: f64,
    pub nu: f64,
}

fn bad(msg: impl Into<String>) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg.into())
}

pub fn encode(field: &SpectralField, time: f64, alpha: f64, nu: f64) -> Vec<u8> {
    let modes: Vec<(Mode, Complex64)> = field.half_spectrum().collect();
    let mut b = Vec::with_capacity(45 + 24 * modes.len());
    b.extend_from_slice(MAGIC);
    b.extend_from_slice(&VERSION.to_le_bytes());
    b.extend_from_slice(&field.grid().k_max().to_le_bytes());
    b.push(field.kind().code());
    for x in [time, alpha, nu] {
        b.extend_from_slice(&x.to_le_bytes());
    }
    b.extend_from_slice(&(modes.len() as u64).to_le_bytes());
    for (k, c) in modes {
        b.extend_from_slice(&k.0.to_le_bytes());
        b.extend_from_slice(&k.1.to_le_bytes());
        b.extend_from_slice(&c.re.to_le_bytes());
        b.extend_from_slice(&c.im.to_le_bytes());
    }
    b
}

fn take<const N: usize>(r: &mut impl Read) -> io::Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

/// Reads one snapshot; `Ok(None)` at a clean end of input.
pub fn decode(r: &mut impl Read, dealias_fraction: f64) -> io::Result<Option<Snapshot>> {
    let mut magic = [0u8; 4];
    let mut got = 0;
    while got < 4 {
        let n = r.read(&mut magic[got..])?;
        if n == 0 {
            return if got == 0 { Ok(None) } else { Err(bad("truncated snapshot header")) };
        }
        got += n;
    }
    if &magic != MAGIC {
        return Err(bad("not an FSNS snapshot"));
    }
    let version = u32::from_le_bytes(take(r)?);
    if version != VERSION {
        return Err(bad(format!("unsupported snapshot version {version}")));
    }
    let k_max = u32::from_le_bytes(take(r)?);
    let kind = FieldKind::from_code(take::<1>(r)?[0]).ok_or_else(|| bad("unknown field kind"))?;
    let time = f64::from_le_bytes(take(r)?);
    let alpha = f64::from_le_bytes(take(r)?);
    let nu = f64::from_le_bytes(take(r)?);
    let count = u64::from_le_bytes(take(r)?);
    let grid = WaveGrid::new(k_max, dealias_fraction).map_err(|e| bad(e.to_string()))?;
    if count > grid.half_count() as u64 {
        return Err(bad(format!("{count} modes exceed the half spectrum of K = {k_max}")));
    }
    let mut entries = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let k = Mode(i32::from_le_bytes(take(r)?), i32::from_le_bytes(take(r)?));
        if !k.is_half() {
            return Err(bad(format!("mode {k} is not in the stored half spectrum")));
        }
        let c = Complex64::new(f64::from_le_bytes(take(r)?), f64::from_le_bytes(take(r)?));
        entries.push((k, c));
    }
    let field = SpectralField::from_modes(grid, kind, &entries).map_err(|e| bad(e.to_string()))?;
    Ok(Some(Snapshot { field, time, alpha, nu }))
}

pub fn decode_all(bytes: &[u8], dealias_fraction: f64) -> io::Result<Vec<Snapshot>> {
    let mut r = bytes;
    let mut out = Vec::new();
    while let Some(s) = decode(&mut r, dealias_fraction)? {
        out.push(s);
    }
    Ok(out)
}

pub fn read_file(path: &Path, dealias_fraction: f64) -> io::Result<Snapshot> {
    let bytes = std::fs::read(path)?;
    let mut all = decode_all(&bytes, dealias_fraction)?;
    if all.len() != 1 {
        return Err(bad(format!("{}: expected one snapshot, found {}", path.display(), all.len())));
    }
    Ok(all.remove(0))
}

pub fn write_all(w: &mut impl Write, snaps: &[Snapshot]) -> io::Result<()> {
    for s in snaps {
        w.write_all(&encode(&s.field, s.time, s.alpha, s.nu))?;
    }
    Ok(())
}
