use cardiosep::advisor::{Advisor, AdvisorMode, HeuristicAdvisor, HttpAdvisor, HttpConfig};
use cardiosep::io::write_wav;
use cardiosep::orchestrator::run_method;
use cardiosep::{Method, SeparationConfig};
use serde_json::json;

use crate::args::SeparateArgs;
use crate::config::resolve_config;
use crate::exit::{CliError, CliResult};
use crate::input::load_stacked;
use crate::manifest::{RunManifest, default_output_dir, now, prepare_dir};

/// Backend for the configured mode. A missing HTTP configuration falls
/// back to the heuristic when fallback is allowed.
fn make_advisor(cfg: &SeparationConfig) -> CliResult<Option<Box<dyn Advisor>>> {
    if cfg.method != Method::Lingonmf {
        return Ok(None);
    }
    match cfg.advisor {
        AdvisorMode::Off => Ok(None),
        AdvisorMode::Heuristic => Ok(Some(Box::new(HeuristicAdvisor))),
        AdvisorMode::Http => match HttpConfig::from_env().and_then(HttpAdvisor::new) {
            Ok(a) => Ok(Some(Box::new(a))),
            Err(e) if cfg.fallback_to_heuristic => {
                eprintln!("warning: http advisor unavailable ({e}); using heuristic");
                Ok(Some(Box::new(HeuristicAdvisor)))
            }
            Err(e) => Err(CliError::from(e)),
        },
    }
}

pub fn run(args: SeparateArgs) -> CliResult<()> {
    let started = now();
    let cfg = resolve_config(&args.sep)?;
    let input = load_stacked(&args.inputs, args.sample_rate)?;
    cfg.validate(input.rows.rows(), input.sample_rate)?;
    let mut advisor = make_advisor(&cfg)?;

    let result = run_method(
        &input.rows,
        input.sample_rate,
        &cfg,
        advisor.as_mut().map(|a| a.as_mut() as &mut dyn Advisor),
    )?;

    let dir = args.output.unwrap_or_else(default_output_dir);
    prepare_dir(&dir)?;
    let heart = dir.join("heart.wav");
    let lung = dir.join("lung.wav");
    let trace = dir.join("cost_trace.csv");
    let transcript = dir.join("transcript.log");
    let heart_gain = write_wav(&result.heart, &heart)?;
    let lung_gain = write_wav(&result.lung, &lung)?;
    result.write_cost_trace(&trace)?;
    result.transcript.write(&transcript)?;

    let mut manifest = RunManifest::new("separate", cfg.seed, &cfg, started);
    manifest.hash_inputs(&args.inputs)?;
    manifest.details = json!({
        "sample_rate": input.sample_rate,
        "mixtures": input.rows.rows(),
        "samples": input.rows.cols(),
        "csv_sample_rate": args.sample_rate,
        "wav_gain": { "heart": heart_gain, "lung": lung_gain },
        "final_f_f": result.final_f_f,
        "labels": result.passes.iter().map(|p| json!({
            "pass": p.name,
            "heart_row": p.labels.heart,
            "lung_row": p.labels.lung,
            "rule": p.labels.rule,
            "selected_row": p.selected_row,
            "iterations": p.trace.iterations(),
            "stop": p.trace.stop.to_string(),
        })).collect::<Vec<_>>(),
        "feedback": result.feedback,
    });
    manifest.finish(&dir, &[heart, lung, trace, transcript])?;
    println!("{}", dir.display());
    Ok(())
}
