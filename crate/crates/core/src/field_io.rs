//! On-disk field format and the state manifest.
//!
//! A field file is a single JSON header line
//!
//! ```text
//! {"grid":{"x_min":-1.0,"x_max":1.0,"y_min":-1.0,"y_max":1.0,"nx":8,"ny":8},"kind":"scalar"}
//! ```
//!
//! followed by one CSV line per node in row-major order (x fastest), one
//! column for scalar fields and two for vector fields. Values are written
//! with 17 significant digits so that reading a file back reproduces every
//! f64 bit-exactly.
//!
//! A state manifest is a small JSON document naming the order-parameter file
//! (a two-column vector file holding re and im parts), the gauge-potential
//! file, and the physical parameters.

use crate::energy::{Params, State};
use crate::grid::{Grid, GridError, ScalarField, VectorField};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("bad header: {0}")]
    Header(#[from] serde_json::Error),
    #[error("line {line}: expected {want} columns")]
    Columns { line: usize, want: usize },
    #[error("line {line}: bad float {text:?}")]
    Float { line: usize, text: String },
    #[error("grid: {0}")]
    Grid(#[from] GridError),
    #[error("expected kind {want:?}, file has {got:?}")]
    Kind { want: String, got: String },
    #[error("manifest field files live on different grids")]
    ManifestGrids,
}

#[derive(Serialize, Deserialize)]
struct Header {
    grid: Grid,
    kind: String,
}

fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_scalar(path: &Path, f: &ScalarField) -> Result<(), IoError> {
    let header = Header {
        grid: f.grid(),
        kind: "scalar".into(),
    };
    let mut text = serde_json::to_string(&header)?;
    text.push('\n');
    for v in f.values() {
        let _ = writeln!(text, "{}", fmt17(*v));
    }
    std::fs::write(path, text)?;
    Ok(())
}

pub fn write_vector(path: &Path, v: &VectorField) -> Result<(), IoError> {
    let header = Header {
        grid: v.grid(),
        kind: "vector".into(),
    };
    let mut text = serde_json::to_string(&header)?;
    text.push('\n');
    for (a, b) in v.x.values().iter().zip(v.y.values()) {
        let _ = writeln!(text, "{},{}", fmt17(*a), fmt17(*b));
    }
    std::fs::write(path, text)?;
    Ok(())
}

fn read_table(path: &Path, want_kind: &str, cols: usize) -> Result<(Grid, Vec<Vec<f64>>), IoError> {
    let file = std::fs::File::open(path)?;
    let mut reader = BufReader::new(file);
    let mut first = String::new();
    reader.read_line(&mut first)?;
    let header: Header = serde_json::from_str(first.trim())?;
    if header.kind != want_kind {
        return Err(IoError::Kind {
            want: want_kind.into(),
            got: header.kind,
        });
    }
    let mut columns = vec![Vec::new(); cols];
    let mut body = String::new();
    reader.read_to_string(&mut body)?;
    for (i, line) in body.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        for col in columns.iter_mut() {
            let text = parts.next().ok_or(IoError::Columns {
                line: i + 2,
                want: cols,
            })?;
            let v: f64 = text.trim().parse().map_err(|_| IoError::Float {
                line: i + 2,
                text: text.into(),
            })?;
            col.push(v);
        }
        if parts.next().is_some() {
            return Err(IoError::Columns {
                line: i + 2,
                want: cols,
            });
        }
    }
    Ok((header.grid, columns))
}

pub fn read_scalar(path: &Path) -> Result<ScalarField, IoError> {
    let (grid, mut cols) = read_table(path, "scalar", 1)?;
    Ok(ScalarField::from_values(grid, cols.pop().unwrap())?)
}

pub fn read_vector(path: &Path) -> Result<VectorField, IoError> {
    let (grid, mut cols) = read_table(path, "vector", 2)?;
    let y = ScalarField::from_values(grid, cols.pop().unwrap())?;
    let x = ScalarField::from_values(grid, cols.pop().unwrap())?;
    Ok(VectorField::new(x, y)?)
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    u: String,
    a: String,
    epsilon: f64,
    h_ex: f64,
}

/// Writes `<stem>_u.field` and `<stem>_a.field` next to the manifest and a
/// manifest JSON referencing them by file name.
pub fn write_state(manifest_path: &Path, s: &State, p: &Params) -> Result<(), IoError> {
    let stem = manifest_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "state".into());
    let dir = manifest_path.parent().map(PathBuf::from).unwrap_or_default();
    let u_name = format!("{stem}_u.field");
    let a_name = format!("{stem}_a.field");
    let u = VectorField::new(s.u_re.clone(), s.u_im.clone())?;
    write_vector(&dir.join(&u_name), &u)?;
    write_vector(&dir.join(&a_name), &s.a)?;
    let manifest = Manifest {
        u: u_name,
        a: a_name,
        epsilon: p.epsilon,
        h_ex: p.h_ex,
    };
    let mut file = std::fs::File::create(manifest_path)?;
    writeln!(file, "{}", serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}

pub fn read_state(manifest_path: &Path) -> Result<(State, Params), IoError> {
    let text = std::fs::read_to_string(manifest_path)?;
    let manifest: Manifest = serde_json::from_str(&text)?;
    let dir = manifest_path.parent().map(PathBuf::from).unwrap_or_default();
    let u = read_vector(&dir.join(&manifest.u))?;
    let a = read_vector(&dir.join(&manifest.a))?;
    if u.grid() != a.grid() {
        return Err(IoError::ManifestGrids);
    }
    let state = State::new(u.x, u.y, a)?;
    Ok((
        state,
        Params {
            epsilon: manifest.epsilon,
            h_ex: manifest.h_ex,
            lambda: 1.0,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;

    #[test]
    fn scalar_roundtrip_is_bit_exact() {
        let g = Grid::new(-1.5, 2.25, 0.0, 1.0, 8, 12).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let vals: Vec<f64> = (0..g.num_nodes())
            .map(|_| rng.gen::<f64>() * 2e3 - 1e3)
            .collect();
        let f = ScalarField::from_values(g, vals.clone()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.field");
        write_scalar(&path, &f).unwrap();
        let back = read_scalar(&path).unwrap();
        assert_eq!(back.grid(), g);
        for (a, b) in back.values().iter().zip(&vals) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn vector_roundtrip_is_bit_exact() {
        let g = Grid::square(1.0, 8);
        let v = VectorField::from_fns(g, |x, _| (x * 7.1).sin() * 1e-7, |x, y| x * y + 1e9);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.field");
        write_vector(&path, &v).unwrap();
        let back = read_vector(&path).unwrap();
        for (a, b) in back.x.values().iter().zip(v.x.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        for (a, b) in back.y.values().iter().zip(v.y.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn kind_mismatch_is_reported() {
        let g = Grid::square(1.0, 8);
        let f = ScalarField::zeros(g);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.field");
        write_scalar(&path, &f).unwrap();
        assert!(read_vector(&path).is_err());
    }

    #[test]
    fn state_manifest_roundtrip() {
        let g = Grid::square(1.0, 8);
        let s = State::new(
            ScalarField::from_fn(g, |x, _| x),
            ScalarField::from_fn(g, |_, y| y),
            VectorField::from_fns(g, |x, y| x + y, |x, y| x - y),
        )
        .unwrap();
        let p = Params {
            epsilon: 0.5,
            h_ex: 1.25,
            lambda: 1.0,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.state.json");
        write_state(&path, &s, &p).unwrap();
        let (s2, p2) = read_state(&path).unwrap();
        assert_eq!(s2.u_re.values(), s.u_re.values());
        assert_eq!(s2.a.y.values(), s.a.y.values());
        assert_eq!(p2.epsilon, 0.5);
        assert_eq!(p2.h_ex, 1.25);
    }
}
