//! File formats: `DMAT` dense matrices, factorization files and observation
//! sets (CSV or `OBS1` binary, each with a JSON sidecar).

use crate::error::{McError, Result};
use crate::linalg::Factorization;
use crate::observe::ObservationSet;
use crate::scalar::Real;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

const DMAT_MAGIC: &[u8; 4] = b"DMAT";
const OBS_MAGIC: &[u8; 4] = b"OBS1";

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

fn dim(x: usize) -> Result<u32> {
    u32::try_from(x).map_err(|_| McError::Format(format!("dimension {x} does not fit in u32")))
}

/// Writes `DMAT`, u32 rows, u32 cols, then row-major little-endian `f64`.
pub fn write_dmat<T: Real, W: Write>(w: &mut W, m: &DMatrix<T>) -> Result<()> {
    w.write_all(DMAT_MAGIC)?;
    w.write_all(&dim(m.nrows())?.to_le_bytes())?;
    w.write_all(&dim(m.ncols())?.to_le_bytes())?;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            w.write_all(&m[(i, j)].f().to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_dmat<T: Real, R: Read>(r: &mut R) -> Result<DMatrix<T>> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != DMAT_MAGIC {
        return Err(McError::Format("missing DMAT magic".into()));
    }
    let rows = read_u32(r)? as usize;
    let cols = read_u32(r)? as usize;
    let mut m = DMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            let x = read_f64(r)?;
            if !x.is_finite() {
                return Err(McError::NonFinite { row: i, col: j });
            }
            m[(i, j)] = T::c(x);
        }
    }
    Ok(m)
}

pub fn save_matrix<T: Real>(path: &Path, m: &DMatrix<T>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_dmat(&mut w, m)?;
    w.flush()?;
    Ok(())
}

pub fn load_matrix<T: Real>(path: &Path) -> Result<DMatrix<T>> {
    read_dmat(&mut BufReader::new(File::open(path)?))
}

/// Two consecutive `DMAT` blocks, `U` then `V`.
pub fn save_factorization<T: Real>(path: &Path, f: &Factorization<T>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_dmat(&mut w, &f.u)?;
    write_dmat(&mut w, &f.v)?;
    w.flush()?;
    Ok(())
}

pub fn load_factorization<T: Real>(path: &Path) -> Result<Factorization<T>> {
    let mut r = BufReader::new(File::open(path)?);
    let u = read_dmat(&mut r)?;
    let v = read_dmat(&mut r)?;
    Factorization::new(u, v)
}

/// Sidecar metadata of an observation file.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObsMeta {
    pub m: usize,
    pub n: usize,
    pub p: f64,
    pub seed: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObsFormat {
    Csv,
    Binary,
}

/// `obs.csv` has its sidecar at `obs.meta.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("meta.json")
}

#[derive(Serialize, Deserialize)]
struct Record {
    row: usize,
    col: usize,
    value: f64,
}

/// Writes the triples in the chosen format plus the JSON sidecar.
pub fn save_observations<T: Real>(path: &Path, obs: &ObservationSet<T>, seed: Option<u64>, format: ObsFormat) -> Result<()> {
    let (m, n) = obs.shape();
    match format {
        ObsFormat::Csv => {
            let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
            for &(row, col, v) in obs.triples() {
                w.serialize(Record { row, col, value: v.f() }).map_err(csv_err)?;
            }
            w.flush()?;
        }
        ObsFormat::Binary => {
            let mut w = BufWriter::new(File::create(path)?);
            w.write_all(OBS_MAGIC)?;
            w.write_all(&dim(obs.len())?.to_le_bytes())?;
            for &(i, j, v) in obs.triples() {
                w.write_all(&dim(i)?.to_le_bytes())?;
                w.write_all(&dim(j)?.to_le_bytes())?;
                w.write_all(&v.f().to_le_bytes())?;
            }
            w.flush()?;
        }
    }
    let meta = ObsMeta { m, n, p: obs.p(), seed };
    std::fs::write(sidecar_path(path), serde_json::to_string_pretty(&meta).map_err(json_err)? + "\n")?;
    Ok(())
}

/// Reads an observation file, detecting the binary format by its magic.
pub fn load_observations<T: Real>(path: &Path) -> Result<(ObservationSet<T>, ObsMeta)> {
    let meta: ObsMeta = serde_json::from_slice(&std::fs::read(sidecar_path(path))?).map_err(json_err)?;
    let bytes = std::fs::read(path)?;
    let triples = if bytes.starts_with(OBS_MAGIC) {
        let mut r = &bytes[4..];
        let count = read_u32(&mut r)? as usize;
        if r.len() != count * 16 {
            return Err(McError::Format(format!("OBS1 header declares {count} records, payload holds {} bytes", r.len())));
        }
        (0..count)
            .map(|_| Ok((read_u32(&mut r)? as usize, read_u32(&mut r)? as usize, T::c(read_f64(&mut r)?))))
            .collect::<Result<Vec<_>>>()?
    } else {
        let mut rdr = csv::Reader::from_reader(bytes.as_slice());
        let header = rdr.headers().map_err(csv_err)?;
        if header != vec!["row", "col", "value"] {
            return Err(McError::Format(format!("expected header row,col,value, found {}", header.iter().collect::<Vec<_>>().join(","))));
        }
        rdr.deserialize::<Record>()
            .map(|rec| rec.map(|r| (r.row, r.col, T::c(r.value))).map_err(csv_err))
            .collect::<Result<Vec<_>>>()?
    };
    Ok((ObservationSet::new((meta.m, meta.n), meta.p, triples)?, meta))
}

fn csv_err(e: csv::Error) -> McError {
    McError::Format(e.to_string())
}

fn json_err(e: serde_json::Error) -> McError {
    McError::Format(e.to_string())
}
