use std::path::PathBuf;

use cardiosep::io::{load_matrix_csv, save_matrix_csv, write_wav, write_wav_channels};
use cardiosep::signal::synth_mixtures;
use cardiosep::synth::{MixingStyle, SynthSpec, draw_mixing, synth_sources};
use cardiosep::{Matrix, Signal};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::args::SynthArgs;
use crate::exit::{CliError, CliResult};
use crate::manifest::{RunManifest, default_output_dir, now, prepare_dir};

enum MixingChoice {
    Style(MixingStyle),
    Identity,
    File(PathBuf),
}

fn parse_mixing(s: &str) -> MixingChoice {
    match s.to_ascii_lowercase().as_str() {
        "placement" => MixingChoice::Style(MixingStyle::Placement),
        "uniform" => MixingChoice::Style(MixingStyle::Uniform { lo: 0.1, hi: 1.0 }),
        "identity" => MixingChoice::Identity,
        _ => MixingChoice::File(PathBuf::from(s)),
    }
}

pub fn run(args: SynthArgs) -> CliResult<()> {
    let started = now();
    if args.sample_rate == 0 || !(args.duration > 0.0) {
        return Err(CliError::usage("--sample-rate and --duration must be positive"));
    }
    let choice = parse_mixing(&args.mixing);
    if matches!(choice, MixingChoice::File(_)) && args.sources.is_none() {
        return Err(CliError::usage("a mixing matrix file needs --sources"));
    }

    // Sources, then mixing, drawn from one stream seeded by --seed.
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let spec = SynthSpec {
        sample_rate: args.sample_rate,
        duration_s: args.duration,
        mixtures: args.mixtures,
        noise_db: args.noise_db,
        ..SynthSpec::default()
    };
    let mut inputs = Vec::new();
    let sources: Matrix<f64> = match &args.sources {
        Some(p) => {
            inputs.push(p.clone());
            load_matrix_csv(p)?
        }
        None => synth_sources(&spec, &mut rng)?,
    };
    if sources.rows() == 0 || sources.cols() < 2 {
        return Err(CliError::usage("sources must have at least one row of two samples"));
    }
    let mixing: Matrix<f64> = match choice {
        MixingChoice::Style(style) => {
            if sources.rows() != 2 {
                return Err(CliError::usage("generated mixing expects exactly two sources"));
            }
            draw_mixing(style, args.mixtures, &mut rng)?
        }
        MixingChoice::Identity => Matrix::identity(sources.rows()),
        MixingChoice::File(p) => {
            inputs.push(p.clone());
            load_matrix_csv(&p)?
        }
    };
    let set = synth_mixtures(&sources, &mixing, args.noise_db, args.seed ^ 0x5eed, args.sample_rate)?;

    let dir = args.output.unwrap_or_else(default_output_dir);
    prepare_dir(&dir)?;
    let mut outputs = Vec::new();
    let mix_csv = dir.join("mixtures.csv");
    save_matrix_csv(&set.mixtures, &mix_csv)?;
    let mix_wav = dir.join("mixtures.wav");
    let mix_gain = write_wav_channels(&set.mixtures, args.sample_rate, &mix_wav)?;
    let src_csv = dir.join("sources.csv");
    save_matrix_csv(&sources, &src_csv)?;
    let mixing_csv = dir.join("mixing.csv");
    save_matrix_csv(&mixing, &mixing_csv)?;
    outputs.extend([mix_csv, mix_wav, src_csv, mixing_csv]);
    for (k, row) in sources.row_iter().enumerate() {
        let name = match k {
            0 => "heart_ref.wav".to_string(),
            1 => "lung_ref.wav".to_string(),
            k => format!("source{k}_ref.wav"),
        };
        let p = dir.join(name);
        write_wav(&Signal::new(row.to_vec(), args.sample_rate)?, &p)?;
        outputs.push(p);
    }

    let mut manifest = RunManifest::new("synth", args.seed, json!({
        "sample_rate": args.sample_rate,
        "duration_s": args.duration,
        "mixtures": set.mixtures.rows(),
        "noise_db": args.noise_db,
        "mixing": args.mixing,
    }), started);
    manifest.hash_inputs(&inputs)?;
    manifest.details = json!({ "mixtures_wav_gain": mix_gain, "samples": set.mixtures.cols() });
    manifest.finish(&dir, &outputs)?;
    println!("{}", dir.display());
    Ok(())
}
