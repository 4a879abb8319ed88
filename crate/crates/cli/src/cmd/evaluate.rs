use cardiosep::metrics::evaluate_source;
use cardiosep::orchestrator::SOURCE_NAMES;
use cardiosep::sweep::{MetricRow, metrics_to_string, write_metrics_csv};

use crate::args::EvaluateArgs;
use crate::exit::{CliError, CliResult};
use crate::input::load_stacked;

/// Estimate `k` is scored against reference `k` with all references as
/// the interference span.
pub fn run(args: EvaluateArgs) -> CliResult<()> {
    let est = load_stacked(&args.estimates, args.sample_rate)?;
    let refs = load_stacked(&args.references, args.sample_rate)?;
    if est.sample_rate != refs.sample_rate {
        return Err(CliError::usage(format!(
            "estimates are at {} Hz but references at {} Hz",
            est.sample_rate, refs.sample_rate
        )));
    }
    if est.rows.rows() > refs.rows.rows() {
        return Err(CliError::usage(format!(
            "{} estimates but only {} references",
            est.rows.rows(),
            refs.rows.rows()
        )));
    }
    if est.rows.cols() != refs.rows.cols() {
        return Err(CliError::usage(format!(
            "estimates have {} samples but references have {}",
            est.rows.cols(),
            refs.rows.cols()
        )));
    }
    let references: Vec<&[f64]> = refs.rows.row_iter().collect();
    let mut rows = Vec::new();
    for (k, e) in est.rows.row_iter().enumerate() {
        let m = evaluate_source(e, &references, k, !args.raw_snr)?;
        rows.push(MetricRow {
            method: args.label.clone(),
            alpha: args.alpha,
            layers: args.layers,
            lambda_f: args.lambda_f,
            m: args.mixtures.unwrap_or(references.len()),
            source: SOURCE_NAMES.get(k).map_or_else(|| format!("source{k}"), |s| s.to_string()),
            sdr_db: m.sdr_db,
            sir_db: m.sir_db,
            sar_db: m.sar_db,
            snr_db: m.snr_db,
        });
    }
    match &args.output {
        Some(p) => write_metrics_csv(&rows, p)?,
        None => print!("{}", metrics_to_string(&rows)?),
    }
    Ok(())
}
