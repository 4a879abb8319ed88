//! Hyperparameter sweeps over synthetic cases with ground truth, and the
//! metric table they produce.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::advisor::HeuristicAdvisor;
use crate::error::{Error, Result};
use crate::metrics::evaluate_source;
use crate::orchestrator::{SOURCE_NAMES, SeparationConfig, SeparationResult, run_method};
use crate::scalar::Scalar;
use crate::signal::MixtureSet;
use crate::synth::{SynthSpec, synth_case};

/// One row of the metric table. Column names form the CSV header
/// `method,alpha,layers,lambda_f,M,source,sdr_db,sir_db,sar_db,snr_db`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub method: String,
    pub alpha: f64,
    pub layers: usize,
    pub lambda_f: f64,
    #[serde(rename = "M")]
    pub m: usize,
    pub source: String,
    pub sdr_db: f64,
    pub sir_db: f64,
    pub sar_db: f64,
    pub snr_db: f64,
}

pub const CSV_HEADER: &str = "method,alpha,layers,lambda_f,M,source,sdr_db,sir_db,sar_db,snr_db";

impl MetricRow {
    fn cell_key(&self) -> (String, u64, usize, u64, usize, String) {
        (
            self.method.clone(),
            self.alpha.to_bits(),
            self.layers,
            self.lambda_f.to_bits(),
            self.m,
            self.source.clone(),
        )
    }
}

pub fn write_metrics_csv(rows: &[MetricRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_metrics(rows, file).map_err(|e| match e {
        Error::Format { msg, .. } => Error::format(path, msg),
        other => other,
    })
}

pub fn write_metrics<W: std::io::Write>(rows: &[MetricRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    let fail = |e: csv::Error| Error::format("<csv>", e.to_string());
    w.write_record(CSV_HEADER.split(',')).map_err(fail)?;
    for r in rows {
        w.serialize(r).map_err(fail)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))
}

pub fn metrics_to_string(rows: &[MetricRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_metrics(rows, &mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::format("<csv>", e.to_string()))
}

/// Metric rows (heart, lung) of one separation against ground truth.
pub fn score<T: Scalar>(
    result: &SeparationResult<T>,
    case: &MixtureSet<T>,
    cfg: &SeparationConfig,
    scale_invariant: bool,
) -> Result<Vec<MetricRow>> {
    let refs = case
        .sources
        .as_ref()
        .ok_or_else(|| Error::invalid("scoring requires ground-truth sources"))?;
    let refs: Vec<&[T]> = refs.row_iter().collect();
    result
        .signals()
        .iter()
        .enumerate()
        .map(|(k, est)| {
            let m = evaluate_source(est.samples(), &refs, k, scale_invariant)?;
            let p = cfg.pass_params(k);
            Ok(MetricRow {
                method: result.method.to_string(),
                alpha: p.alpha,
                layers: p.layers,
                lambda_f: cfg.lambda_f,
                m: case.mixtures.rows(),
                source: SOURCE_NAMES[k].into(),
                sdr_db: m.sdr_db,
                sir_db: m.sir_db,
                sar_db: m.sar_db,
                snr_db: m.snr_db,
            })
        })
        .collect()
}

/// Runs `cfg.method` on one case and scores it. The advisor-in-the-loop
/// method uses the heuristic backend so sweeps never leave the machine.
pub fn run_case<T: Scalar>(case: &MixtureSet<T>, cfg: &SeparationConfig) -> Result<Vec<MetricRow>> {
    let mut advisor = HeuristicAdvisor;
    let result = run_method(&case.mixtures, case.sample_rate, cfg, Some(&mut advisor))?;
    score(&result, case, cfg, true)
}

/// Evaluates `jobs` in order on up to `workers` threads; output order
/// matches input order regardless of scheduling.
pub fn run_parallel<J, R, F>(jobs: Vec<J>, workers: usize, f: F) -> Result<Vec<R>>
where
    J: Send,
    R: Send,
    F: Fn(J) -> Result<R> + Sync,
{
    let workers = workers.max(1);
    if workers == 1 || jobs.len() <= 1 {
        return jobs.into_iter().map(f).collect();
    }
    let mut slots: Vec<Option<Result<R>>> = (0..jobs.len()).map(|_| None).collect();
    let queue = std::sync::Mutex::new(jobs.into_iter().enumerate().collect::<Vec<_>>().into_iter());
    let results = std::sync::Mutex::new(&mut slots);
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| {
                loop {
                    let next = queue.lock().expect("queue lock").next();
                    let Some((i, job)) = next else { break };
                    let r = f(job);
                    results.lock().expect("result lock")[i] = Some(r);
                }
            });
        }
    });
    slots
        .into_iter()
        .map(|r| r.expect("every job ran"))
        .collect()
}

/// How per-case rows are reduced to one row per cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregate {
    Mean,
    Median,
}

fn reduce(mut v: Vec<f64>, how: Aggregate) -> f64 {
    match how {
        Aggregate::Mean => v.iter().sum::<f64>() / v.len() as f64,
        Aggregate::Median => {
            v.sort_by(f64::total_cmp);
            let n = v.len();
            if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) }
        }
    }
}

/// Collapses rows sharing `(method, alpha, layers, lambda_f, M, source)`;
/// cells keep their order of first appearance.
pub fn summarize(rows: &[MetricRow], how: Aggregate) -> Vec<MetricRow> {
    let mut keys = Vec::new();
    for r in rows {
        let k = r.cell_key();
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|k| {
            let cell: Vec<&MetricRow> = rows.iter().filter(|r| r.cell_key() == k).collect();
            let col = |f: fn(&MetricRow) -> f64| reduce(cell.iter().map(|r| f(r)).collect(), how);
            MetricRow {
                sdr_db: col(|r| r.sdr_db),
                sir_db: col(|r| r.sir_db),
                sar_db: col(|r| r.sar_db),
                snr_db: col(|r| r.snr_db),
                ..cell[0].clone()
            }
        })
        .collect()
}

/// Seeded synthetic suite: case `i` uses seed `base_seed + i`.
pub fn synthetic_suite<T: Scalar>(spec: &SynthSpec, cases: usize, base_seed: u64) -> Result<Vec<MixtureSet<T>>> {
    (0..cases)
        .map(|i| synth_case(spec, base_seed + i as u64))
        .collect()
}

/// Grid over α × layer count (both passes share the cell's values).
pub fn sweep_alpha_layers<T: Scalar>(
    cases: &[MixtureSet<T>],
    alphas: &[f64],
    layers: &[usize],
    cfg: &SeparationConfig,
    workers: usize,
) -> Result<Vec<MetricRow>> {
    let mut jobs = Vec::new();
    for &a in alphas {
        for &l in layers {
            for case in cases {
                jobs.push((cfg.clone().with_alpha_layers(a, l), case));
            }
        }
    }
    let rows = run_parallel(jobs, workers, |(c, case)| run_case(case, &c))?;
    Ok(rows.into_iter().flatten().collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaSweep {
    pub rows: Vec<MetricRow>,
    /// Mean-over-cases rows, one per λ_f and source.
    pub summary: Vec<MetricRow>,
    /// λ_f with the highest SNR averaged over sources; ties keep the smaller λ_f.
    pub best_lambda_f: f64,
}

/// λ_f sweep with the configured method; `0` is always included.
pub fn sweep_lambda_f<T: Scalar>(
    cases: &[MixtureSet<T>],
    lambdas: &[f64],
    cfg: &SeparationConfig,
    workers: usize,
) -> Result<LambdaSweep> {
    let mut values: Vec<f64> = lambdas.to_vec();
    if !values.contains(&0.0) {
        values.insert(0, 0.0);
    }
    if let Some(bad) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::invalid(format!("lambda_f values must be >= 0, got {bad}")));
    }
    let mut jobs = Vec::new();
    for &lf in &values {
        for case in cases {
            jobs.push((
                SeparationConfig {
                    lambda_f: lf,
                    ..cfg.clone()
                },
                case,
            ));
        }
    }
    let rows: Vec<MetricRow> = run_parallel(jobs, workers, |(c, case)| run_case(case, &c))?
        .into_iter()
        .flatten()
        .collect();
    let summary = summarize(&rows, Aggregate::Mean);
    let best_lambda_f = argmax_lambda(&summary, &values)?;
    Ok(LambdaSweep {
        rows,
        summary,
        best_lambda_f,
    })
}

/// `λ_f` maximizing the source-averaged SNR of `summary`.
pub fn argmax_lambda(summary: &[MetricRow], values: &[f64]) -> Result<f64> {
    let mut best: Option<(f64, f64)> = None;
    for &lf in values {
        let cell: Vec<f64> = summary
            .iter()
            .filter(|r| r.lambda_f == lf)
            .map(|r| r.snr_db)
            .collect();
        if cell.is_empty() {
            continue;
        }
        let score = cell.iter().sum::<f64>() / cell.len() as f64;
        if best.is_none_or(|(_, s)| score > s) {
            best = Some((lf, score));
        }
    }
    best.map(|b| b.0)
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::Degenerate("lambda sweep produced no finite cell".into()))
}

/// Mixture-count sweep: for every `M` and seed, a case with `M` sensors is
/// drawn (sources depend on the seed only) and separated.
pub fn sweep_num_mixtures<T: Scalar>(
    spec: &SynthSpec,
    m_values: &[usize],
    seeds: &[u64],
    cfg: &SeparationConfig,
    workers: usize,
) -> Result<Vec<MetricRow>> {
    let mut jobs = Vec::new();
    for &m in m_values {
        for &seed in seeds {
            jobs.push((m, seed));
        }
    }
    let rows = run_parallel(jobs, workers, |(m, seed)| {
        let case = synth_case::<T>(&SynthSpec { mixtures: m, ..*spec }, seed)?;
        run_case(&case, cfg)
    })?;
    Ok(rows.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(lf: f64, source: &str, snr: f64) -> MetricRow {
        MetricRow {
            method: "plnmf".into(),
            alpha: 0.5,
            layers: 1,
            lambda_f: lf,
            m: 2,
            source: source.into(),
            sdr_db: snr,
            sir_db: snr,
            sar_db: snr,
            snr_db: snr,
        }
    }

    #[test]
    fn header_and_rows() {
        let text = metrics_to_string(&[row(0.01, "heart", 3.5)]).unwrap();
        assert_eq!(text, format!("{CSV_HEADER}\nplnmf,0.5,1,0.01,2,heart,3.5,3.5,3.5,3.5\n"));
    }

    #[test]
    fn summarize_mean_and_median() {
        let rows = vec![row(0.0, "heart", 1.0), row(0.0, "heart", 2.0), row(0.0, "heart", 9.0), row(0.0, "lung", 4.0)];
        let mean = summarize(&rows, Aggregate::Mean);
        assert_eq!(mean.len(), 2);
        assert_eq!(mean[0].snr_db, 4.0);
        assert_eq!(summarize(&rows, Aggregate::Median)[0].snr_db, 2.0);
    }

    #[test]
    fn argmax_scans_table() {
        let summary = vec![row(0.0, "heart", 1.0), row(0.0, "lung", 1.0), row(0.1, "heart", 3.0), row(0.1, "lung", 0.0), row(1.0, "heart", 1.5), row(1.0, "lung", 1.5)];
        assert_eq!(argmax_lambda(&summary, &[0.0, 0.1, 1.0]).unwrap(), 0.1);
        assert!(argmax_lambda(&[], &[0.0]).is_err());
    }

    #[test]
    fn parallel_preserves_order() {
        let out = run_parallel((0..20).collect(), 4, |i: i32| Ok(i * i)).unwrap();
        assert_eq!(out, (0..20).map(|i| i * i).collect::<Vec<_>>());
        assert!(run_parallel(vec![1, 2], 2, |i: i32| if i == 2 { Err(Error::invalid("x")) } else { Ok(i) }).is_err());
    }
}
