//! Field serialization: CSV (one row per node: per-axis index, re, im) and
//! raw little-endian complex binary with a JSON sidecar carrying the grid
//! metadata.

use crate::error::{Error, Result};
use crate::field::{AxisDomain, SampledField};
use crate::grid::Grid;
use ndarray::{ArrayD, Dimension, IxDyn};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RepTag {
    Space,
    Frequency,
}

impl From<AxisDomain> for RepTag {
    fn from(d: AxisDomain) -> Self {
        match d {
            AxisDomain::Space => RepTag::Space,
            AxisDomain::Frequency => RepTag::Frequency,
        }
    }
}

impl From<RepTag> for AxisDomain {
    fn from(t: RepTag) -> Self {
        match t {
            RepTag::Space => AxisDomain::Space,
            RepTag::Frequency => AxisDomain::Frequency,
        }
    }
}

/// Uniform or per-axis representation tag.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RepField {
    Uniform(RepTag),
    PerAxis(Vec<RepTag>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    Complex64,
    Complex128,
}

/// JSON sidecar of a raw binary field file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Sidecar {
    pub m: usize,
    #[serde(rename = "L")]
    pub extent: f64,
    #[serde(rename = "N")]
    pub points: usize,
    pub rep: RepField,
    pub dtype: Dtype,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub smoothness: Option<f64>,
}

impl Sidecar {
    pub fn for_field(field: &SampledField, dtype: Dtype) -> Self {
        let domains = field.domains();
        let rep = if domains.iter().all(|d| *d == domains[0]) {
            RepField::Uniform(domains[0].into())
        } else {
            RepField::PerAxis(domains.iter().map(|&d| d.into()).collect())
        };
        Sidecar {
            m: field.grid().dim(),
            extent: field.grid().extent(),
            points: field.grid().points(),
            rep,
            dtype,
            smoothness: field.smoothness(),
        }
    }

    pub fn domains(&self) -> Result<Vec<AxisDomain>> {
        match &self.rep {
            RepField::Uniform(t) => Ok(vec![(*t).into(); self.m]),
            RepField::PerAxis(ts) => {
                if ts.len() != self.m {
                    return Err(Error::Format(format!(
                        "sidecar rep lists {} axes for m = {}",
                        ts.len(),
                        self.m
                    )));
                }
                Ok(ts.iter().map(|&t| t.into()).collect())
            }
        }
    }
}

fn sidecar_path(bin_path: &Path) -> std::path::PathBuf {
    let mut p = bin_path.as_os_str().to_owned();
    p.push(".json");
    p.into()
}

/// Write `<path>` (raw little-endian complex values, row-major) and
/// `<path>.json` (grid metadata).
pub fn write_binary(field: &SampledField, path: &Path, dtype: Dtype) -> Result<()> {
    let sidecar = Sidecar::for_field(field, dtype);
    let json = serde_json::to_string_pretty(&sidecar)
        .map_err(|e| Error::Format(format!("sidecar encode: {e}")))?;
    std::fs::write(sidecar_path(path), json)?;
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    for v in field.values().iter() {
        match dtype {
            Dtype::Complex128 => {
                w.write_all(&v.re.to_le_bytes())?;
                w.write_all(&v.im.to_le_bytes())?;
            }
            Dtype::Complex64 => {
                w.write_all(&(v.re as f32).to_le_bytes())?;
                w.write_all(&(v.im as f32).to_le_bytes())?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Decode a sidecar + raw binary pair produced by [`write_binary`].
pub fn read_binary(path: &Path) -> Result<SampledField> {
    let json = std::fs::read_to_string(sidecar_path(path))?;
    let sidecar: Sidecar =
        serde_json::from_str(&json).map_err(|e| Error::Format(format!("sidecar decode: {e}")))?;
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode_binary(&sidecar, &bytes)
}

/// Pure decoding step (separated for fuzzing): interpret `bytes` under the
/// sidecar metadata.
pub fn decode_binary(sidecar: &Sidecar, bytes: &[u8]) -> Result<SampledField> {
    let grid = Grid::new(sidecar.m, sidecar.extent, sidecar.points)?;
    let count = grid.node_count();
    let stride = match sidecar.dtype {
        Dtype::Complex128 => 16,
        Dtype::Complex64 => 8,
    };
    let expected = count
        .checked_mul(stride)
        .ok_or_else(|| Error::Format("node count overflow".into()))?;
    if bytes.len() != expected {
        return Err(Error::Format(format!(
            "binary payload is {} bytes, expected {expected}",
            bytes.len()
        )));
    }
    let mut values = ArrayD::zeros(IxDyn(&grid.shape()));
    for (i, v) in values.iter_mut().enumerate() {
        let off = i * stride;
        *v = match sidecar.dtype {
            Dtype::Complex128 => Complex64::new(
                f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap()),
                f64::from_le_bytes(bytes[off + 8..off + 16].try_into().unwrap()),
            ),
            Dtype::Complex64 => Complex64::new(
                f32::from_le_bytes(bytes[off..off + 4].try_into().unwrap()) as f64,
                f32::from_le_bytes(bytes[off + 4..off + 8].try_into().unwrap()) as f64,
            ),
        };
    }
    let mut field = SampledField::new(grid, values, sidecar.domains()?)?;
    if let Some(s) = sidecar.smoothness {
        field = field.with_smoothness(s);
    }
    Ok(field)
}

/// CSV with header `i0,...,i{m-1},re,im`, one row per node in row-major order.
pub fn write_csv(field: &SampledField, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    let m = field.grid().dim();
    let mut header: Vec<String> = (0..m).map(|ax| format!("i{ax}")).collect();
    header.push("re".into());
    header.push("im".into());
    w.write_record(&header).map_err(csv_err)?;
    for (idx, v) in field.values().indexed_iter() {
        let mut rec: Vec<String> = idx.slice().iter().map(|j| j.to_string()).collect();
        rec.push(format!("{:.17e}", v.re));
        rec.push(format!("{:.17e}", v.im));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Parse CSV produced by [`write_csv`] onto the given grid layout.
pub fn read_csv(path: &Path, grid: Grid, domains: Vec<AxisDomain>) -> Result<SampledField> {
    let text = std::fs::read_to_string(path)?;
    decode_csv(&text, grid, domains)
}

/// Pure CSV decoding step (separated for fuzzing).
pub fn decode_csv(text: &str, grid: Grid, domains: Vec<AxisDomain>) -> Result<SampledField> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let m = grid.dim();
    let mut values = ArrayD::zeros(IxDyn(&grid.shape()));
    let mut seen = 0usize;
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        if record.len() != m + 2 {
            return Err(Error::Format(format!(
                "csv row has {} fields, expected {}",
                record.len(),
                m + 2
            )));
        }
        let mut idx = Vec::with_capacity(m);
        for ax in 0..m {
            let j: usize = record[ax]
                .trim()
                .parse()
                .map_err(|e| Error::Format(format!("bad index field: {e}")))?;
            if j >= grid.points() {
                return Err(Error::Format(format!("index {j} out of range")));
            }
            idx.push(j);
        }
        let re: f64 = record[m]
            .trim()
            .parse()
            .map_err(|e| Error::Format(format!("bad re field: {e}")))?;
        let im: f64 = record[m + 1]
            .trim()
            .parse()
            .map_err(|e| Error::Format(format!("bad im field: {e}")))?;
        values[IxDyn(&idx)] = Complex64::new(re, im);
        seen += 1;
    }
    if seen != grid.node_count() {
        return Err(Error::Format(format!(
            "csv carries {seen} rows, expected {}",
            grid.node_count()
        )));
    }
    SampledField::new(grid, values, domains)
}

fn csv_err(e: csv::Error) -> Error {
    Error::Format(format!("csv: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sample_field() -> SampledField {
        let grid = Grid::new(2, 10.0, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut f = SampledField::zeros(grid, AxisDomain::Space);
        for v in f.values_mut().iter_mut() {
            *v = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
        f.with_smoothness(0.5)
    }

    #[test]
    fn binary_round_trip_c128() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.bin");
        let f = sample_field();
        write_binary(&f, &path, Dtype::Complex128).unwrap();
        let g = read_binary(&path).unwrap();
        assert!(f.rel_l2_distance(&g).unwrap() == 0.0);
        assert_eq!(g.smoothness(), Some(0.5));
    }

    #[test]
    fn binary_round_trip_c64_loses_only_precision() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f32.bin");
        let f = sample_field();
        write_binary(&f, &path, Dtype::Complex64).unwrap();
        let g = read_binary(&path).unwrap();
        assert!(f.rel_l2_distance(&g).unwrap() < 1e-6);
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.csv");
        let f = sample_field();
        write_csv(&f, &path).unwrap();
        let g = read_csv(&path, *f.grid(), f.domains().to_vec()).unwrap();
        assert!(f.rel_l2_distance(&g).unwrap() < 1e-15);
    }

    #[test]
    fn truncated_binary_rejected() {
        let sc = Sidecar {
            m: 2,
            extent: 10.0,
            points: 8,
            rep: RepField::Uniform(RepTag::Space),
            dtype: Dtype::Complex128,
            smoothness: None,
        };
        assert!(matches!(decode_binary(&sc, &[0u8; 24]), Err(Error::Format(_))));
    }

    #[test]
    fn malformed_csv_rejected() {
        let grid = Grid::new(2, 10.0, 8).unwrap();
        let bad = "i0,i1,re,im\n0,0,notanumber,0\n";
        assert!(decode_csv(bad, grid, vec![AxisDomain::Space; 2]).is_err());
    }
}
