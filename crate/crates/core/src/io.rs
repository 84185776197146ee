//! Compact binary timestamp files.
//!
//! Layout, all little-endian: the 4-byte magic `FBT1`, a `u64` count, then
//! `count` `f64` timestamps in seconds. One file holds one channel.

use std::io::{Read, Write};

use crate::{Error, Result};

pub const MAGIC: &[u8; 4] = b"FBT1";

pub fn write_timestamps<W: Write>(mut w: W, times: &[f64]) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&(times.len() as u64).to_le_bytes())?;
    for t in times {
        w.write_all(&t.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_timestamps<R: Read>(mut r: R) -> Result<Vec<f64>> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("missing FBT1 magic".into()));
    }
    let mut n = [0u8; 8];
    r.read_exact(&mut n)?;
    let n = u64::from_le_bytes(n);
    let mut times = Vec::with_capacity(n.min(1 << 24) as usize);
    let mut buf = [0u8; 8];
    for _ in 0..n {
        r.read_exact(&mut buf)?;
        times.push(f64::from_le_bytes(buf));
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Format("trailing bytes after timestamps".into()));
    }
    Ok(times)
}

/// Index of the first element that is not strictly greater than its predecessor.
pub(crate) fn first_unsorted(times: &[f64]) -> Option<usize> {
    (1..times.len()).find(|&i| !(times[i] > times[i - 1]))
}

/// Same as [`first_unsorted`] but allowing ties.
pub(crate) fn first_decreasing(times: &[f64]) -> Option<usize> {
    (1..times.len()).find(|&i| times[i] < times[i - 1])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_layout() {
        let t = vec![0.0, 1.5e-9, 2.0];
        let mut buf = Vec::new();
        write_timestamps(&mut buf, &t).unwrap();
        assert_eq!(&buf[..4], b"FBT1");
        assert_eq!(u64::from_le_bytes(buf[4..12].try_into().unwrap()), 3);
        assert_eq!(buf.len(), 12 + 24);
        assert_eq!(read_timestamps(&buf[..]).unwrap(), t);
    }

    #[test]
    fn rejects_bad_magic_and_trailing_bytes() {
        assert!(read_timestamps(&b"FBT2\0\0\0\0\0\0\0\0"[..]).is_err());
        let mut buf = Vec::new();
        write_timestamps(&mut buf, &[1.0]).unwrap();
        buf.push(0);
        assert!(read_timestamps(&buf[..]).is_err());
    }
}
