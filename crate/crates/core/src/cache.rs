//! Binary corrector cache with bit-exact round trip.
//!
//! Layout: magic "H2MC"; version, d, m, n, N as little-endian u32; then
//! row-major little-endian f64 arrays in canonical multi-index order:
//! chi, chi_star, A_bar, B, dual B. The cell problem is eps-independent,
//! so one cache entry serves a whole eps sweep; entries are keyed by
//! FNV-1a of (preset key, d, m, n, N, tol).

use crate::cellproblem::{solve_all_with, ConstTensor, CorrectorSet, DualField, TensorField};
use crate::coeffs::CoefficientField;
use crate::error::Error;
use crate::grid::{Grid, GridFunction};
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

pub const MAGIC: [u8; 4] = *b"H2MC";
pub const VERSION: u32 = 1;

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Stable cache key for a corrector solve.
pub fn cache_key(a: &CoefficientField, tol: f64) -> u64 {
    let mut bytes = Vec::new();
    bytes.extend_from_slice(a.preset.key().as_bytes());
    for v in [a.d as u64, a.m as u64, a.n as u64, a.ngrid as u64] {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    bytes.extend_from_slice(&tol.to_bits().to_le_bytes());
    fnv1a(&bytes)
}

/// File name for a cache entry inside a cache directory.
pub fn cache_file_name(a: &CoefficientField, tol: f64) -> String {
    format!("{:016x}.h2mc", cache_key(a, tol))
}

fn push_f64s(buf: &mut Vec<u8>, vals: &[f64]) {
    for v in vals {
        buf.extend_from_slice(&v.to_le_bytes());
    }
}

/// Atomic write: temp file in the target directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Error> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(
        ".{}.tmp-{}",
        path.file_name().and_then(|s| s.to_str()).unwrap_or("out"),
        std::process::id()
    ));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Serialize a corrector set to the cache format.
pub fn serialize(set: &CorrectorSet) -> Vec<u8> {
    let a = &set.field;
    let mut buf = Vec::new();
    buf.extend_from_slice(&MAGIC);
    for v in [
        VERSION,
        a.d as u32,
        a.m as u32,
        a.n as u32,
        a.ngrid as u32,
    ] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for g in set.chi.iter().chain(&set.chi_star) {
        push_f64s(&mut buf, &g.values);
    }
    push_f64s(&mut buf, &set.a_bar.data);
    push_f64s(&mut buf, &set.b_flux.values);
    push_f64s(&mut buf, &set.dual_b.values);
    buf
}

pub fn save(set: &CorrectorSet, path: &Path) -> Result<(), Error> {
    write_atomic(path, &serialize(set))
}

fn read_u32(bytes: &[u8], off: &mut usize) -> Result<u32, Error> {
    let end = *off + 4;
    if bytes.len() < end {
        return Err(Error::Cache("truncated header".into()));
    }
    let v = u32::from_le_bytes(bytes[*off..end].try_into().unwrap());
    *off = end;
    Ok(v)
}

fn read_f64s(bytes: &[u8], off: &mut usize, count: usize, what: &str) -> Result<Vec<f64>, Error> {
    let end = *off + 8 * count;
    if bytes.len() < end {
        return Err(Error::Cache(format!("truncated {what} block")));
    }
    let vals = bytes[*off..end]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    *off = end;
    Ok(vals)
}

/// Reload a corrector set for the given coefficient field. Header fields
/// must match the field exactly; derived metadata (grids, multi-index
/// tables, the flux reference scale) is rebuilt from the field. Solve
/// records are not cached; a reloaded set carries none.
pub fn load(path: &Path, a: &CoefficientField) -> Result<CorrectorSet, Error> {
    let bytes = fs::read(path)?;
    let mut off = 0usize;
    if bytes.len() < 4 || bytes[..4] != MAGIC {
        return Err(Error::Cache("bad magic".into()));
    }
    off += 4;
    let version = read_u32(&bytes, &mut off)?;
    if version != VERSION {
        return Err(Error::Cache(format!(
            "version {version} not supported (expected {VERSION})"
        )));
    }
    let header: Vec<u32> = (0..4)
        .map(|_| read_u32(&bytes, &mut off))
        .collect::<Result<_, _>>()?;
    let expect = [a.d as u32, a.m as u32, a.n as u32, a.ngrid as u32];
    if header != expect {
        return Err(Error::Cache(format!(
            "header (d,m,n,N) = {header:?} does not match the requested field {expect:?}"
        )));
    }
    let na = a.alphas.len();
    let n = a.n;
    let len = a.ngrid.pow(a.d as u32);
    let grid = Grid::torus(a.d, a.ngrid);
    let read_set = |what: &str, off: &mut usize| -> Result<Vec<GridFunction>, Error> {
        let mut out = Vec::with_capacity(na * n);
        for _ in 0..na * n {
            let vals = read_f64s(&bytes, off, n * len, what)?;
            let mut g = GridFunction::from_values(grid.clone(), n, vals);
            g.zero_mean = true;
            out.push(g);
        }
        Ok(out)
    };
    let chi = read_set("chi", &mut off)?;
    let chi_star = read_set("chi_star", &mut off)?;
    let a_bar = ConstTensor {
        nalpha: na,
        n,
        data: read_f64s(&bytes, &mut off, na * na * n * n, "A_bar")?,
    };
    let b_flux = TensorField {
        d: a.d,
        m: a.m,
        n,
        ngrid: a.ngrid,
        alphas: a.alphas.clone(),
        values: read_f64s(&bytes, &mut off, na * na * n * n * len, "B")?,
        ref_scale: a.max_abs(),
    };
    let dual_b = DualField {
        d: a.d,
        m: a.m,
        n,
        ngrid: a.ngrid,
        alphas: a.alphas.clone(),
        values: read_f64s(&bytes, &mut off, na * na * na * n * n * len, "dual B")?,
    };
    if off != bytes.len() {
        return Err(Error::Cache(format!(
            "{} trailing bytes after the dual corrector block",
            bytes.len() - off
        )));
    }
    Ok(CorrectorSet {
        field: a.clone(),
        chi,
        chi_star,
        a_bar,
        b_flux,
        dual_b,
        records: Vec::new(),
    })
}

/// Load the corrector set from `dir` if a matching entry exists, solve and
/// populate the cache otherwise. Returns the set and whether it was a
/// cache hit.
pub fn load_or_solve(
    dir: &Path,
    a: &CoefficientField,
    tol: f64,
    max_iter: usize,
    dealias: bool,
) -> Result<(CorrectorSet, PathBuf, bool), Error> {
    let path = dir.join(cache_file_name(a, tol));
    if path.exists() {
        return Ok((load(&path, a)?, path, true));
    }
    let set = solve_all_with(a, tol, max_iter, dealias)?;
    save(&set, &path)?;
    Ok((set, path, false))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cellproblem::{default_max_iter, solve_all};
    use crate::coeffs::{sample, Preset};

    fn tmpdir(tag: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!(
            "h2mc-cache-test-{tag}-{}",
            std::process::id()
        ));
        fs::create_dir_all(&dir).unwrap();
        dir
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let a = sample(&Preset::Cosine1d { a0: 2.0, a1: 1.0 }, 1, 32).unwrap();
        let set = solve_all(&a, 1e-9, default_max_iter(1, 32)).unwrap();
        let dir = tmpdir("roundtrip");
        let path = dir.join(cache_file_name(&a, 1e-9));
        save(&set, &path).unwrap();
        let back = load(&path, &a).unwrap();
        for (g, h) in set.chi.iter().zip(&back.chi) {
            assert_eq!(g.values, h.values);
        }
        for (g, h) in set.chi_star.iter().zip(&back.chi_star) {
            assert_eq!(g.values, h.values);
        }
        assert_eq!(set.a_bar.data, back.a_bar.data);
        assert_eq!(set.b_flux.values, back.b_flux.values);
        assert_eq!(set.b_flux.ref_scale, back.b_flux.ref_scale);
        assert_eq!(set.dual_b.values, back.dual_b.values);
        assert!(back.records.is_empty());
        fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn header_mismatch_and_corruption_are_rejected() {
        let a = sample(&Preset::Cosine1d { a0: 2.0, a1: 1.0 }, 1, 32).unwrap();
        let set = solve_all(&a, 1e-9, default_max_iter(1, 32)).unwrap();
        let dir = tmpdir("reject");
        let path = dir.join("entry.h2mc");
        save(&set, &path).unwrap();
        let other = sample(&Preset::Cosine1d { a0: 2.0, a1: 1.0 }, 1, 64).unwrap();
        match load(&path, &other) {
            Err(Error::Cache(msg)) => assert!(msg.contains("does not match")),
            other => panic!("expected header rejection, got {other:?}"),
        }
        let bytes = serialize(&set);
        fs::write(&path, &bytes[..bytes.len() - 8]).unwrap();
        match load(&path, &a) {
            Err(Error::Cache(msg)) => assert!(msg.contains("truncated")),
            other => panic!("expected truncation error, got {other:?}"),
        }
        let mut garbled = bytes.clone();
        garbled[0] = b'X';
        fs::write(&path, &garbled).unwrap();
        match load(&path, &a) {
            Err(Error::Cache(msg)) => assert!(msg.contains("magic")),
            other => panic!("expected magic error, got {other:?}"),
        }
        fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn load_or_solve_hits_on_the_second_call() {
        let a = sample(&Preset::Cosine1d { a0: 2.0, a1: 1.0 }, 1, 32).unwrap();
        let dir = tmpdir("hit");
        let (first, path1, hit1) =
            load_or_solve(&dir, &a, 1e-9, default_max_iter(1, 32), false).unwrap();
        assert!(!hit1);
        let (second, path2, hit2) =
            load_or_solve(&dir, &a, 1e-9, default_max_iter(1, 32), false).unwrap();
        assert!(hit2);
        assert_eq!(path1, path2);
        assert_eq!(first.a_bar.data, second.a_bar.data);
        for (g, h) in first.chi.iter().zip(&second.chi) {
            assert_eq!(g.values, h.values);
        }
        fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn keys_separate_presets_and_grids() {
        let a = sample(&Preset::Cosine1d { a0: 2.0, a1: 1.0 }, 1, 32).unwrap();
        let b = sample(&Preset::Cosine1d { a0: 2.0, a1: 1.0 }, 1, 64).unwrap();
        let c = sample(&Preset::Cosine1d { a0: 3.0, a1: 1.0 }, 1, 32).unwrap();
        let ka = cache_key(&a, 1e-9);
        assert_eq!(ka, cache_key(&a, 1e-9));
        assert_ne!(ka, cache_key(&b, 1e-9));
        assert_ne!(ka, cache_key(&c, 1e-9));
        assert_ne!(ka, cache_key(&a, 1e-10));
    }
}
