//! Field files: CSV matrices over the grid lattice, 8-bit PGM previews and
//! run manifests.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{DomainKind, SpatialGrid};

/// A nodal field rendered on the lattice, `NaN` off the physical domain.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldFile {
    pub nx: usize,
    pub ny: usize,
    pub domain: DomainKind,
    pub channel: String,
    /// Row-major with `y` increasing by row.
    pub values: Vec<f64>,
}

impl FieldFile {
    pub fn from_nodal(grid: &SpatialGrid, channel: &str, field: &[f64]) -> Result<Self> {
        if field.len() != grid.num_nodes() {
            return Err(Error::ShapeMismatch(format!(
                "field '{channel}' has {} values for {} nodes",
                field.len(),
                grid.num_nodes()
            )));
        }
        let (nx, ny) = grid.lattice_dims();
        Ok(Self { nx, ny, domain: grid.kind(), channel: channel.to_string(), values: grid.to_lattice(field) })
    }

    pub fn to_csv(&self) -> String {
        let mut out =
            format!("# nx={} ny={} domain={} channel={}\n", self.nx, self.ny, self.domain.as_str(), self.channel);
        for row in self.values.chunks(self.nx) {
            for (j, v) in row.iter().enumerate() {
                if j > 0 {
                    out.push(',');
                }
                // Shortest representation that parses back to the same bits.
                write!(out, "{v:?}").expect("writing to a String cannot fail");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty field file".into()))?;
        let body = header.strip_prefix('#').ok_or_else(|| Error::Parse("missing '#' header line".into()))?;
        let (mut nx, mut ny, mut domain, mut channel) = (None, None, None, None);
        for tok in body.split_whitespace() {
            let (k, v) = tok.split_once('=').ok_or_else(|| Error::Parse(format!("bad header token '{tok}'")))?;
            match k {
                "nx" => nx = Some(v.parse::<usize>().map_err(|e| Error::Parse(format!("nx: {e}")))?),
                "ny" => ny = Some(v.parse::<usize>().map_err(|e| Error::Parse(format!("ny: {e}")))?),
                "domain" => domain = Some(v.parse::<DomainKind>()?),
                "channel" => channel = Some(v.to_string()),
                _ => return Err(Error::Parse(format!("unknown header key '{k}'"))),
            }
        }
        let missing = |what: &str| Error::Parse(format!("header lacks {what}"));
        let (nx, ny) = (nx.ok_or_else(|| missing("nx"))?, ny.ok_or_else(|| missing("ny"))?);
        let mut values = Vec::with_capacity(nx * ny);
        for (r, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let row: Vec<f64> = line
                .split(',')
                .map(|t| t.trim().parse::<f64>().map_err(|e| Error::Parse(format!("row {r}: '{t}': {e}"))))
                .collect::<Result<_>>()?;
            if row.len() != nx {
                return Err(Error::Parse(format!("row {r} has {} values, expected {nx}", row.len())));
            }
            values.extend(row);
        }
        if values.len() != nx * ny {
            return Err(Error::Parse(format!("expected {ny} rows, got {}", values.len() / nx.max(1))));
        }
        Ok(Self {
            nx,
            ny,
            domain: domain.ok_or_else(|| missing("domain"))?,
            channel: channel.ok_or_else(|| missing("channel"))?,
            values,
        })
    }

    /// Finite minimum and maximum.
    pub fn range(&self) -> (f64, f64) {
        self.values
            .iter()
            .filter(|v| v.is_finite())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)))
    }

    /// Binary 8-bit PGM scaled linearly from min to max, top row = largest `y`.
    /// Off-domain pixels are black.
    pub fn to_pgm(&self) -> Vec<u8> {
        let (lo, hi) = self.range();
        let span = if hi > lo { hi - lo } else { 1.0 };
        let mut out = format!("P5\n# channel={} min={lo:e} max={hi:e}\n{} {}\n255\n", self.channel, self.nx, self.ny)
            .into_bytes();
        for row in self.values.chunks(self.nx).rev() {
            out.extend(row.iter().map(|&v| {
                if v.is_finite() {
                    (((v - lo) / span) * 255.0).round().clamp(0.0, 255.0) as u8
                } else {
                    0
                }
            }));
        }
        out
    }
}

/// Writes `<dir>/<channel>.csv` and `<dir>/<channel>.pgm`; returns both paths.
pub fn write_field(dir: &Path, grid: &SpatialGrid, channel: &str, field: &[f64]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let f = FieldFile::from_nodal(grid, channel, field)?;
    let csv = dir.join(format!("{channel}.csv"));
    let pgm = dir.join(format!("{channel}.pgm"));
    fs::write(&csv, f.to_csv())?;
    fs::write(&pgm, f.to_pgm())?;
    Ok(vec![csv, pgm])
}

pub fn read_field(path: &Path) -> Result<FieldFile> {
    FieldFile::from_csv(&fs::read_to_string(path)?)
}

/// Serializes `value` as pretty JSON to `path`.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Parse(e.to_string()))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

/// Everything needed to rerun an experiment.
#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub threads: usize,
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    pub files: Vec<String>,
}

impl Manifest {
    pub fn new<C: Serialize>(command: &str, config: &C, seeds: Vec<u64>) -> Result<Self> {
        Ok(Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            threads: rayon::current_num_threads(),
            config: serde_json::to_value(config).map_err(|e| Error::Parse(e.to_string()))?,
            seeds,
            files: Vec::new(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_roundtrip_is_exact() {
        let grid = SpatialGrid::unit_disk(9).unwrap();
        let f: Vec<f64> = (0..grid.num_nodes()).map(|i| (i as f64).sqrt() / 3.0 + 1e-17).collect();
        let a = FieldFile::from_nodal(&grid, "h", &f).unwrap();
        let b = FieldFile::from_csv(&a.to_csv()).unwrap();
        assert_eq!(a.nx, b.nx);
        assert_eq!(a.channel, b.channel);
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!(x.to_bits() == y.to_bits() || (x.is_nan() && y.is_nan()));
        }
    }

    #[test]
    fn pgm_header_and_size() {
        let grid = SpatialGrid::unit_square(4, 3).unwrap();
        let f = FieldFile::from_nodal(&grid, "x", &grid.sample(|p| p[0])).unwrap();
        let bytes = f.to_pgm();
        let header = b"P5\n# channel=x min=0e0 max=1e0\n4 3\n255\n";
        assert!(bytes.starts_with(header));
        assert_eq!(bytes.len(), header.len() + 12);
        assert_eq!(bytes[header.len() + 11], 255);
    }

    #[test]
    fn rejects_malformed_header() {
        assert!(FieldFile::from_csv("nx=2\n1,2\n").is_err());
        assert!(FieldFile::from_csv("# nx=2 ny=1 domain=unit-square channel=a\n1\n").is_err());
    }
}
