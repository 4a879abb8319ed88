//! WAV and CSV readers/writers.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;
use crate::signal::Signal;

fn hound_err(path: &Path, e: hound::Error) -> Error {
    match e {
        hound::Error::IoError(io) => Error::io(path, io),
        other => Error::format(path, other.to_string()),
    }
}

/// Reads every channel of a PCM WAV file as one row, scaling integer
/// samples to `[-1, 1)`. Returns the rows and the sample rate.
pub fn read_wav_channels<T: Scalar>(path: impl AsRef<Path>) -> Result<(Matrix<T>, u32)> {
    let path = path.as_ref();
    let reader = WavReader::open(path).map_err(|e| hound_err(path, e))?;
    let spec = reader.spec();
    let channels = usize::from(spec.channels.max(1));

    let interleaved: Vec<f64> = match spec.sample_format {
        SampleFormat::Int => {
            if spec.bits_per_sample == 0 || spec.bits_per_sample > 32 {
                return Err(Error::format(
                    path,
                    format!("unsupported bit depth {}", spec.bits_per_sample),
                ));
            }
            let scale = f64::from(1u32 << (spec.bits_per_sample - 1));
            reader
                .into_samples::<i32>()
                .map(|s| s.map(|v| f64::from(v) / scale))
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| hound_err(path, e))?
        }
        SampleFormat::Float => {
            if spec.bits_per_sample != 32 {
                return Err(Error::format(
                    path,
                    format!("unsupported float bit depth {}", spec.bits_per_sample),
                ));
            }
            reader
                .into_samples::<f32>()
                .map(|s| s.map(f64::from))
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| hound_err(path, e))?
        }
    };
    let frames = interleaved.len() / channels;
    if frames == 0 {
        return Err(Error::format(path, "zero-length audio"));
    }
    let rows = Matrix::from_fn(channels, frames, |c, t| T::lit(interleaved[t * channels + c]));
    Ok((rows, spec.sample_rate))
}

/// Reads channel 0 of a PCM WAV file, scaling integer samples to `[-1, 1)`.
pub fn read_wav<T: Scalar>(path: impl AsRef<Path>) -> Result<Signal<T>> {
    let (rows, rate) = read_wav_channels::<T>(path)?;
    Signal::new(rows.row(0).to_vec(), rate)
}

/// Writes a mono 16-bit PCM WAV. Signals whose peak exceeds 1 are scaled
/// down to unit peak first; the applied gain is returned.
pub fn write_wav<T: Scalar>(signal: &Signal<T>, path: impl AsRef<Path>) -> Result<f64> {
    let rows = Matrix::new(1, signal.len(), signal.samples().to_vec())?;
    write_wav_channels(&rows, signal.sample_rate(), path)
}

/// Writes each row of `rows` as one channel of a 16-bit PCM WAV. A single
/// gain brings the overall peak to at most 1, keeping channel ratios; the
/// gain is returned.
pub fn write_wav_channels<T: Scalar>(rows: &Matrix<T>, sample_rate: u32, path: impl AsRef<Path>) -> Result<f64> {
    let path = path.as_ref();
    if rows.is_empty() {
        return Err(Error::invalid("cannot write an empty signal"));
    }
    let channels = u16::try_from(rows.rows())
        .map_err(|_| Error::invalid(format!("{} channels exceed the WAV limit", rows.rows())))?;
    if sample_rate == 0 {
        return Err(Error::invalid("sample rate must be positive"));
    }
    let peak = rows
        .as_slice()
        .iter()
        .fold(0.0f64, |m, v| m.max(v.as_f64().abs()));
    let gain = if peak > 1.0 { 1.0 / peak } else { 1.0 };

    let spec = WavSpec {
        channels,
        sample_rate,
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    let mut writer = WavWriter::create(path, spec).map_err(|e| hound_err(path, e))?;
    for t in 0..rows.cols() {
        for c in 0..rows.rows() {
            let q = (rows[(c, t)].as_f64() * gain * 32768.0)
                .round()
                .clamp(-32768.0, 32767.0) as i16;
            writer.write_sample(q).map_err(|e| hound_err(path, e))?;
        }
    }
    writer.finalize().map_err(|e| hound_err(path, e))?;
    Ok(gain)
}

/// Reads a headerless comma-separated matrix.
pub fn load_matrix_csv<T: Scalar>(path: impl AsRef<Path>) -> Result<Matrix<T>> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;

    let mut rows: Vec<Vec<T>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_err(path, e))?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let row = record
            .iter()
            .enumerate()
            .map(|(j, field)| {
                field.parse::<T>().map_err(|_| {
                    Error::format(path, format!("row {}, column {}: not a number: {field:?}", i + 1, j + 1))
                })
            })
            .collect::<Result<Vec<T>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::format(path, "empty matrix file"));
    }
    Matrix::from_rows(&rows).map_err(|e| Error::format(path, e.to_string()))
}

/// Writes a headerless comma-separated matrix using shortest round-trip
/// formatting, so reloading reproduces every entry bit for bit.
pub fn save_matrix_csv<T: Scalar>(matrix: &Matrix<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for row in matrix.row_iter() {
        let mut first = true;
        for v in row {
            if !first {
                out.write_all(b",").map_err(|e| Error::io(path, e))?;
            }
            first = false;
            write!(out, "{v}").map_err(|e| Error::io(path, e))?;
        }
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::format(path, format!("{other:?}")),
        }
    } else {
        Error::format(path, e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn silence_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("silence.wav");
        write_wav(&Signal::new(vec![0.0f64; 8000], 8000).unwrap(), &p).unwrap();
        let s: Signal<f64> = read_wav(&p).unwrap();
        assert_eq!(s.len(), 8000);
        assert_eq!(s.sample_rate(), 8000);
        assert!(s.samples().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn full_scale_positive_sample() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("fs.wav");
        let spec = WavSpec {
            channels: 1,
            sample_rate: 1000,
            bits_per_sample: 16,
            sample_format: SampleFormat::Int,
        };
        let mut w = WavWriter::create(&p, spec).unwrap();
        w.write_sample(32767i16).unwrap();
        w.finalize().unwrap();
        let s: Signal<f64> = read_wav(&p).unwrap();
        assert_eq!(s.samples()[0], 32767.0 / 32768.0);
    }

    #[test]
    fn multichannel_round_trip_shares_gain() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("multi.wav");
        let rows = Matrix::from_rows(&[[0.5, -2.0, 1.0], [0.25, 0.0, -0.5], [1.0, 1.0, 1.0]]).unwrap();
        let gain = write_wav_channels(&rows, 500, &p).unwrap();
        assert_eq!(gain, 0.5);
        let (back, rate) = read_wav_channels::<f64>(&p).unwrap();
        assert_eq!((back.shape(), rate), ((3, 3), 500));
        for (a, b) in back.as_slice().iter().zip(rows.as_slice()) {
            assert!((a - b * gain).abs() <= 1.0 / 32768.0);
        }
    }

    #[test]
    fn stereo_takes_channel_zero() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("stereo.wav");
        let spec = WavSpec {
            channels: 2,
            sample_rate: 4000,
            bits_per_sample: 16,
            sample_format: SampleFormat::Int,
        };
        let mut w = WavWriter::create(&p, spec).unwrap();
        for i in 0..10i16 {
            w.write_sample(i * 100).unwrap();
            w.write_sample(-1000).unwrap();
        }
        w.finalize().unwrap();
        let s: Signal<f64> = read_wav(&p).unwrap();
        assert_eq!(s.len(), 10);
        assert_eq!(s.samples()[3], 300.0 / 32768.0);
    }

    #[test]
    fn ramp_round_trip_within_one_step() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("ramp.wav");
        let ramp: Vec<f64> = (0..100).map(|i| -1.0 + 2.0 * i as f64 / 99.0).collect();
        write_wav(&Signal::new(ramp.clone(), 1000).unwrap(), &p).unwrap();
        let back: Signal<f64> = read_wav(&p).unwrap();
        let err = ramp
            .iter()
            .zip(back.samples())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err <= 2f64.powi(-15), "err {err}");
    }

    #[test]
    fn noise_round_trip_correlation() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("noise.wav");
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x: Vec<f64> = (0..1000)
            .map(|_| {
                let v: f64 = StandardNormal.sample(&mut rng);
                0.25 * v
            })
            .collect();
        let gain = write_wav(&Signal::new(x.clone(), 8000).unwrap(), &p).unwrap();
        let y: Signal<f64> = read_wav(&p).unwrap();
        let dot: f64 = x.iter().zip(y.samples()).map(|(a, b)| a * b).sum();
        let nx: f64 = x.iter().map(|a| a * a).sum::<f64>().sqrt();
        let ny: f64 = y.samples().iter().map(|a| a * a).sum::<f64>().sqrt();
        assert!(dot / (nx * ny) >= 0.9999);
        assert!(gain <= 1.0);
    }

    #[test]
    fn write_rejects_empty_and_bad_path() {
        let empty = Signal::<f64>::new(vec![], 1000).unwrap();
        assert!(write_wav(&empty, "/tmp/never.wav").is_err());
        let one = Signal::new(vec![0.1f64], 1000).unwrap();
        assert!(write_wav(&one, "/nonexistent-dir/x.wav").unwrap_err().is_io());
    }

    #[test]
    fn read_errors() {
        let dir = tempfile::tempdir().unwrap();
        assert!(read_wav::<f64>(dir.path().join("missing.wav")).unwrap_err().is_io());
        let junk = dir.path().join("junk.wav");
        std::fs::write(&junk, b"not a riff file").unwrap();
        assert!(read_wav::<f64>(&junk).is_err());
        let empty = dir.path().join("empty.wav");
        let spec = WavSpec {
            channels: 1,
            sample_rate: 1000,
            bits_per_sample: 16,
            sample_format: SampleFormat::Int,
        };
        WavWriter::create(&empty, spec).unwrap().finalize().unwrap();
        assert!(read_wav::<f64>(&empty).is_err());
    }

    #[test]
    fn csv_round_trip_small() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        let m = Matrix::from_rows(&[[8.0, 1.0, 6.0], [3.0, 5.0, 7.0], [4.0, 9.0, 2.0]]).unwrap();
        save_matrix_csv(&m, &p).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "8,1,6\n3,5,7\n4,9,2\n");
        assert_eq!(load_matrix_csv::<f64>(&p).unwrap(), m);
    }

    #[test]
    fn csv_large_random_bit_equal() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("big.csv");
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let m = Matrix::from_fn(2, 100_000, |_, _| rng.r#gen::<f64>() * 1e3 - 500.0);
        save_matrix_csv(&m, &p).unwrap();
        let back: Matrix<f64> = load_matrix_csv(&p).unwrap();
        assert!(
            m.as_slice()
                .iter()
                .zip(back.as_slice())
                .all(|(a, b)| a.to_bits() == b.to_bits())
        );
    }

    #[test]
    fn csv_errors() {
        let dir = tempfile::tempdir().unwrap();
        let empty = dir.path().join("empty.csv");
        std::fs::write(&empty, "").unwrap();
        assert!(load_matrix_csv::<f64>(&empty).is_err());
        let ragged = dir.path().join("ragged.csv");
        std::fs::write(&ragged, "1,2\n3\n").unwrap();
        assert!(load_matrix_csv::<f64>(&ragged).is_err());
        let text = dir.path().join("text.csv");
        std::fs::write(&text, "1,abc\n").unwrap();
        assert!(load_matrix_csv::<f64>(&text).is_err());
    }
}
