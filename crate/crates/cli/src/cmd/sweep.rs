use cardiosep::sweep::{
    Aggregate, MetricRow, metrics_to_string, summarize, sweep_alpha_layers, sweep_lambda_f, sweep_num_mixtures,
    synthetic_suite, write_metrics_csv,
};
use cardiosep::synth::{MixingStyle, SynthSpec};

use crate::args::SweepArgs;
use crate::config::{parse_list, resolve_config};
use crate::exit::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    AlphaLayers,
    LambdaF,
    NumMixtures,
}

fn parse_kind(s: &str) -> CliResult<Kind> {
    match s {
        "alpha-layers" => Ok(Kind::AlphaLayers),
        "lambda-f" => Ok(Kind::LambdaF),
        "num-mixtures" => Ok(Kind::NumMixtures),
        other => Err(CliError::usage(format!(
            "unknown sweep kind {other:?}; expected alpha-layers, lambda-f or num-mixtures"
        ))),
    }
}

pub fn run(args: SweepArgs) -> CliResult<()> {
    let kind = parse_kind(&args.kind)?;
    let cfg = resolve_config(&args.sep)?;
    let aggregate = match args.aggregate.as_str() {
        "mean" => Aggregate::Mean,
        "median" => Aggregate::Median,
        other => return Err(CliError::usage(format!("--aggregate must be mean or median, got {other:?}"))),
    };
    let mixing = match args.mixing.as_str() {
        "placement" => MixingStyle::Placement,
        "uniform" => MixingStyle::Uniform { lo: 0.1, hi: 1.0 },
        other => return Err(CliError::usage(format!("--mixing must be placement or uniform, got {other:?}"))),
    };
    if args.cases == 0 {
        return Err(CliError::usage("--cases must be at least 1"));
    }
    let spec = SynthSpec {
        sample_rate: args.sample_rate,
        duration_s: args.duration,
        mixing,
        ..SynthSpec::default()
    };

    let rows: Vec<MetricRow> = match kind {
        Kind::AlphaLayers => {
            let alphas = parse_list::<f64>("alphas", &args.alphas)?;
            let layers = parse_list::<usize>("layer-grid", &args.layer_grid)?;
            let cases = synthetic_suite::<f64>(&spec, args.cases, cfg.seed)?;
            sweep_alpha_layers(&cases, &alphas, &layers, &cfg, args.jobs)?
        }
        Kind::LambdaF => {
            let lambdas = parse_list::<f64>("lambdas", &args.lambdas)?;
            let cases = synthetic_suite::<f64>(&spec, args.cases, cfg.seed)?;
            let sweep = sweep_lambda_f(&cases, &lambdas, &cfg, args.jobs)?;
            eprintln!("best lambda_f: {}", sweep.best_lambda_f);
            sweep.rows
        }
        Kind::NumMixtures => {
            let m_values = parse_list::<usize>("m-values", &args.m_values)?;
            let seeds: Vec<u64> = (0..args.cases as u64).map(|i| cfg.seed + i).collect();
            sweep_num_mixtures::<f64>(&spec, &m_values, &seeds, &cfg, args.jobs)?
        }
    };
    let table = if args.raw { rows } else { summarize(&rows, aggregate) };
    match &args.output {
        Some(p) => write_metrics_csv(&table, p)?,
        None => print!("{}", metrics_to_string(&table)?),
    }
    Ok(())
}
