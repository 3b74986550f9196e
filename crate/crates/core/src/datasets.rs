//! Swiss-roll generation and CSV input/output for points and embeddings.

use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::kernel::DataMatrix;

/// Range of the roll angle `u`.
pub const SWISS_ROLL_U: (f64, f64) = (1.5 * PI, 4.5 * PI);
/// Range of the height `h`.
pub const SWISS_ROLL_H: (f64, f64) = (0.0, 21.0);

/// Points on the roll together with their intrinsic coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct SwissRoll {
    pub data: DataMatrix,
    pub u: Vec<f64>,
    pub h: Vec<f64>,
}

/// `(u cos u, h, u sin u)` plus isotropic Gaussian noise of scale `noise`.
pub fn generate_swiss_roll(n: usize, noise: f64, seed: u64) -> Result<SwissRoll> {
    if n == 0 {
        return Err(Error::param("n", "must be at least 1"));
    }
    if !(noise >= 0.0) || !noise.is_finite() {
        return Err(Error::param(
            "noise",
            format!("must be finite and non-negative, got {noise}"),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Array2::zeros((n, 3));
    let mut u = Vec::with_capacity(n);
    let mut h = Vec::with_capacity(n);
    for i in 0..n {
        let ui = rng.random_range(SWISS_ROLL_U.0..SWISS_ROLL_U.1);
        let hi = rng.random_range(SWISS_ROLL_H.0..SWISS_ROLL_H.1);
        let mut p = [ui * ui.cos(), hi, ui * ui.sin()];
        if noise > 0.0 {
            for c in &mut p {
                let z: f64 = rng.sample(StandardNormal);
                *c += noise * z;
            }
        }
        for (j, c) in p.iter().enumerate() {
            values[[i, j]] = *c;
        }
        u.push(ui);
        h.push(hi);
    }
    Ok(SwissRoll {
        data: DataMatrix::new(values)?,
        u,
        h,
    })
}

/// Parses a numeric CSV. A first row containing any non-numeric cell is
/// taken as a header. Row numbers in errors are 1-based file lines.
pub fn read_matrix_csv<R: Read>(reader: R) -> Result<Array2<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut flat = Vec::new();
    let mut width: Option<usize> = None;
    let mut rows = 0;
    for (line, record) in rdr.records().enumerate() {
        let record = record?;
        let row = line + 1;
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        let parsed: Vec<std::result::Result<f64, _>> = record.iter().map(str::parse::<f64>).collect();
        if line == 0 && parsed.iter().any(|p| p.is_err()) {
            width = Some(record.len());
            continue;
        }
        match width {
            Some(w) if w != record.len() => {
                return Err(Error::Parse {
                    row,
                    column: record.len().min(w) + 1,
                    reason: format!("ragged row: {} fields, expected {w}", record.len()),
                })
            }
            _ => width = Some(record.len()),
        }
        for (c, p) in parsed.into_iter().enumerate() {
            let v = p.map_err(|e| Error::Parse {
                row,
                column: c + 1,
                reason: format!("`{}` is not a number ({e})", &record[c]),
            })?;
            flat.push(v);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::Input("dataset has no data rows".into()));
    }
    let m = width.unwrap_or(0);
    Array2::from_shape_vec((rows, m), flat).map_err(|e| Error::Input(e.to_string()))
}

/// Loads a point cloud from a CSV file, one point per row.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<DataMatrix> {
    let file = std::fs::File::open(path.as_ref())?;
    DataMatrix::new(read_matrix_csv(std::io::BufReader::new(file))?)
}

/// Writes one row per point; values use the shortest round-trip format.
pub fn write_matrix_csv<W: Write>(writer: W, values: &Array2<f64>, header: Option<&[String]>) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    if let Some(h) = header {
        w.write_record(h)?;
    }
    for row in values.outer_iter() {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_matrix(path: impl AsRef<Path>, values: &Array2<f64>, header: Option<&[String]>) -> Result<()> {
    let file = std::fs::File::create(path.as_ref())?;
    write_matrix_csv(std::io::BufWriter::new(file), values, header)
}

/// Header `phi_1, ..., phi_k` for embedding files.
pub fn embedding_header(k: usize) -> Vec<String> {
    (1..=k).map(|j| format!("phi_{j}")).collect()
}
