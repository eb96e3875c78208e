//! Plain-text dumps of Wigner grids and state vectors.
//!
//! Each file starts with `#` header lines (`# kind`, `# dim`, `# grid`)
//! followed by whitespace-separated values.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ndarray::Array2;

use cvq_core::C64;

use crate::output::fmt_float;
use crate::CliError;

/// A file to be written next to the table.
#[derive(Debug, Clone, PartialEq)]
pub struct Dump {
    pub name: String,
    pub contents: String,
}

/// `W(q_i, p_j)`, one row per `q`.
pub fn wigner_dump(name: &str, dim: usize, qgrid: &[f64], pgrid: &[f64], w: &Array2<f64>) -> Dump {
    let mut s = String::new();
    let _ = writeln!(s, "# kind wigner");
    let _ = writeln!(s, "# dim {dim}");
    for (axis, g) in [("q", qgrid), ("p", pgrid)] {
        let _ = writeln!(
            s,
            "# grid {axis} {} {} {}",
            fmt_float(g[0]),
            fmt_float(g[g.len() - 1]),
            g.len()
        );
    }
    for row in w.rows() {
        let line: Vec<String> = row.iter().map(|&x| fmt_float(x)).collect();
        s.push_str(&line.join(" "));
        s.push('\n');
    }
    Dump {
        name: name.to_string(),
        contents: s,
    }
}

/// Fock amplitudes as `re im` pairs, one per line.
pub fn state_dump(name: &str, amps: &[C64]) -> Dump {
    let mut s = String::new();
    let _ = writeln!(s, "# kind state");
    let _ = writeln!(s, "# dim {}", amps.len());
    for z in amps {
        let _ = writeln!(s, "{} {}", fmt_float(z.re), fmt_float(z.im));
    }
    Dump {
        name: name.to_string(),
        contents: s,
    }
}

pub fn write_dumps(dir: &Path, dumps: &[Dump]) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    dumps
        .iter()
        .map(|d| {
            let path = dir.join(&d.name);
            std::fs::write(&path, &d.contents).map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            })?;
            Ok(path)
        })
        .collect()
}

/// Header fields and values of a dump, for reading files back.
pub fn parse_dump(text: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut header = Vec::new();
    let mut rows = Vec::new();
    for line in text.lines() {
        if let Some(h) = line.strip_prefix('#') {
            header.push(h.trim().to_string());
        } else if !line.trim().is_empty() {
            rows.push(line.split_whitespace().filter_map(|t| t.parse().ok()).collect());
        }
    }
    (header, rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wigner_layout() {
        let w = Array2::from_shape_fn((3, 2), |(i, j)| i as f64 - j as f64 * 0.5);
        let d = wigner_dump("w.txt", 10, &[-1.0, 0.0, 1.0], &[0.0, 2.0], &w);
        let (hdr, rows) = parse_dump(&d.contents);
        assert_eq!(hdr[0], "kind wigner");
        assert_eq!(hdr[1], "dim 10");
        assert!(hdr[2].starts_with("grid q") && hdr[2].ends_with(" 3"));
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[2], vec![2.0, 1.5]);
    }

    #[test]
    fn state_layout() {
        let d = state_dump("s.txt", &[C64::new(0.6, 0.0), C64::new(0.0, -0.8)]);
        let (hdr, rows) = parse_dump(&d.contents);
        assert_eq!(hdr, vec!["kind state", "dim 2"]);
        assert_eq!(rows, vec![vec![0.6, 0.0], vec![0.0, -0.8]]);
    }

    #[test]
    fn writes_files() {
        let dir = tempfile::tempdir().unwrap();
        let d = state_dump("s.txt", &[C64::new(1.0, 0.0)]);
        let paths = write_dumps(&dir.path().join("sub"), &[d.clone()]).unwrap();
        assert_eq!(std::fs::read_to_string(&paths[0]).unwrap(), d.contents);
    }
}
