use std::fmt::Write as _;
use std::path::Path;

use super::BandSystem;
use crate::error::{Error, Result};

/// Writes the interior matrix in MatrixMarket coordinate format (1-based,
/// nonzeros only).
pub fn write_matrix_market(sys: &BandSystem, path: &Path) -> Result<()> {
    let mut entries = Vec::new();
    for r in 0..sys.dim {
        for c in sys.row_range(r) {
            let v = sys.get(r, c);
            if v != 0.0 {
                entries.push((r + 1, c + 1, v));
            }
        }
    }
    let mut s = String::new();
    s.push_str("%%MatrixMarket matrix coordinate real general\n");
    let _ = writeln!(
        s,
        "% method={} n_cells={} m={} lower_bw={} upper_bw={}",
        sys.method, sys.grid.n_cells, sys.grid.m, sys.lower_bw, sys.upper_bw
    );
    let _ = writeln!(s, "{} {} {}", sys.dim, sys.dim, entries.len());
    for (r, c, v) in entries {
        let _ = writeln!(s, "{r} {c} {v:.17e}");
    }
    std::fs::write(path, s).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Reads a coordinate MatrixMarket file into `(rows, cols, triplets)` with
/// 0-based indices.
pub fn read_matrix_market(path: &Path) -> Result<(usize, usize, Vec<(usize, usize, f64)>)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut lines = text.lines().filter(|l| !l.starts_with('%') && !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::Parse("missing size line".into()))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse().map_err(|e| Error::Parse(format!("size line: {e}"))))
        .collect::<Result<_>>()?;
    if dims.len() != 3 {
        return Err(Error::Parse("size line needs rows, cols, nnz".into()));
    }
    let mut out = Vec::with_capacity(dims[2]);
    for l in lines {
        let t: Vec<&str> = l.split_whitespace().collect();
        if t.len() != 3 {
            return Err(Error::Parse(format!("bad entry line `{l}`")));
        }
        let p = |s: &str| s.parse::<usize>().map_err(|e| Error::Parse(e.to_string()));
        let v = t[2].parse::<f64>().map_err(|e| Error::Parse(e.to_string()))?;
        out.push((p(t[0])? - 1, p(t[1])? - 1, v));
    }
    if out.len() != dims[2] {
        return Err(Error::Parse(format!("expected {} entries, found {}", dims[2], out.len())));
    }
    Ok((dims[0], dims[1], out))
}
