//! Loading signals from WAV and CSV files.

use std::path::{Path, PathBuf};

use cardiosep::Matrix;
use cardiosep::io::{load_matrix_csv, read_wav_channels};

use crate::exit::{CliError, CliResult};

pub fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

/// Signal rows sharing one sample rate.
pub struct Loaded {
    pub rows: Matrix<f64>,
    pub sample_rate: u32,
}

/// A CSV matrix (needs `sample_rate`) or every channel of a WAV file.
pub fn load_file(path: &Path, sample_rate: Option<u32>) -> CliResult<Loaded> {
    if is_csv(path) {
        let rate = sample_rate
            .ok_or_else(|| CliError::usage(format!("{}: CSV input needs --sample-rate", path.display())))?;
        if rate == 0 {
            return Err(CliError::usage("--sample-rate must be positive"));
        }
        Ok(Loaded {
            rows: load_matrix_csv(path)?,
            sample_rate: rate,
        })
    } else {
        let (rows, rate) = read_wav_channels(path)?;
        if let Some(r) = sample_rate.filter(|&r| r != rate) {
            return Err(CliError::usage(format!(
                "{}: file rate {rate} Hz differs from --sample-rate {r}",
                path.display()
            )));
        }
        Ok(Loaded { rows, sample_rate: rate })
    }
}

/// Stacks the rows of every file; all files must agree on rate and length.
pub fn load_stacked(paths: &[PathBuf], sample_rate: Option<u32>) -> CliResult<Loaded> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut rate = None;
    for p in paths {
        let l = load_file(p, sample_rate)?;
        if let Some(r) = rate.filter(|&r| r != l.sample_rate) {
            return Err(CliError::usage(format!(
                "{}: sample rate {} Hz differs from {r} Hz",
                p.display(),
                l.sample_rate
            )));
        }
        rate = Some(l.sample_rate);
        if let Some(first) = rows.first().map(Vec::len).filter(|&n| n != l.rows.cols()) {
            return Err(CliError::usage(format!(
                "{}: {} samples per row but earlier input has {first}",
                p.display(),
                l.rows.cols()
            )));
        }
        rows.extend(l.rows.row_iter().map(<[f64]>::to_vec));
    }
    let rate = rate.ok_or_else(|| CliError::usage("no input files"))?;
    Ok(Loaded {
        rows: Matrix::from_rows(&rows)?,
        sample_rate: rate,
    })
}
