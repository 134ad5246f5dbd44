use super::grid::Grid;
use super::WaveState;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

/// Writes `dims: u32, counts: u32 × dims, dt: f64, t: f64`, then `u_prev` and `u_curr`
/// as row-major little-endian doubles.
pub fn write_checkpoint(path: &Path, grid: &Grid, state: &WaveState) -> io::Result<()> {
    if state.u_prev.len() != grid.len() || state.u_curr.len() != grid.len() {
        return Err(io::Error::new(io::ErrorKind::InvalidInput, "state does not match the grid"));
    }
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&(grid.dim() as u32).to_le_bytes())?;
    for c in grid.counts() {
        w.write_all(&(c as u32).to_le_bytes())?;
    }
    w.write_all(&state.dt.to_le_bytes())?;
    w.write_all(&state.t.to_le_bytes())?;
    for v in state.u_prev.iter().chain(&state.u_curr) {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()
}

/// Reads a checkpoint back as `(counts, state)`.
pub fn read_checkpoint(path: &Path) -> io::Result<(Vec<usize>, WaveState)> {
    let mut r = BufReader::new(File::open(path)?);
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b4)?;
    let dims = u32::from_le_bytes(b4) as usize;
    if !(2..=3).contains(&dims) {
        return Err(io::Error::new(io::ErrorKind::InvalidData, format!("bad dimension {dims}")));
    }
    let mut counts = Vec::with_capacity(dims);
    for _ in 0..dims {
        r.read_exact(&mut b4)?;
        counts.push(u32::from_le_bytes(b4) as usize);
    }
    let mut f64s = |r: &mut BufReader<File>, n: usize| -> io::Result<Vec<f64>> {
        (0..n)
            .map(|_| {
                r.read_exact(&mut b8)?;
                Ok(f64::from_le_bytes(b8))
            })
            .collect()
    };
    let head = f64s(&mut r, 2)?;
    let len: usize = counts.iter().product();
    let u_prev = f64s(&mut r, len)?;
    let u_curr = f64s(&mut r, len)?;
    if r.read(&mut b4)? != 0 {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "trailing bytes after the state"));
    }
    Ok((counts, WaveState { u_prev, u_curr, t: head[1], dt: head[0] }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::builtin_frame;

    #[test]
    fn round_trip() {
        let g = Grid::for_frame(&builtin_frame("heisenberg").unwrap(), &[8, 9, 10]).unwrap();
        let u = g.sample(|x| x[0] - 2.0 * x[1] * x[2]);
        let s = WaveState { u_prev: u.iter().map(|v| v * 0.5).collect(), u_curr: u, t: 0.25, dt: 1e-3 };
        let dir = std::env::temp_dir().join(format!("ckpt-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("state.bin");
        write_checkpoint(&p, &g, &s).unwrap();
        assert_eq!(std::fs::metadata(&p).unwrap().len() as usize, 4 + 12 + 16 + 16 * g.len());
        let (counts, back) = read_checkpoint(&p).unwrap();
        assert_eq!(counts, vec![8, 9, 10]);
        assert_eq!(back, s);
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
