use cardiosep::advisor::render_feature_block;
use cardiosep::spectral::extract_features;
use cardiosep::{Band, FeatureVector, Signal};
use serde::Serialize;

use crate::args::FeaturesArgs;
use crate::exit::{CliError, CliResult, io_err};
use crate::input::{is_csv, load_file};

#[derive(Debug, Serialize)]
struct FeatureRecord {
    name: String,
    path: String,
    sample_rate: u32,
    band: Band,
    features: FeatureVector<f64>,
}

pub fn run(args: FeaturesArgs) -> CliResult<()> {
    let band: Band = args.band.parse()?;
    let mut records = Vec::new();
    for path in &args.inputs {
        let loaded = load_file(path, args.sample_rate)?;
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "signal".into());
        // WAV inputs use channel 0; CSV inputs contribute every row.
        let rows = if is_csv(path) { loaded.rows.rows() } else { 1 };
        for r in 0..rows {
            let name = if rows == 1 { stem.clone() } else { format!("{stem}[{r}]") };
            let signal = Signal::new(loaded.rows.row(r).to_vec(), loaded.sample_rate)?;
            let features = extract_features(&signal, band)?;
            records.push(FeatureRecord {
                name,
                path: path.display().to_string(),
                sample_rate: loaded.sample_rate,
                band,
                features,
            });
        }
    }
    for (i, r) in records.iter().enumerate() {
        if i > 0 {
            println!();
        }
        print!("{}", render_feature_block(&r.name, &r.features));
    }
    if let Some(p) = &args.json {
        let text = serde_json::to_string_pretty(&records).map_err(|e| CliError::io(e.to_string()))?;
        std::fs::write(p, text + "\n").map_err(|e| io_err(p, e))?;
    }
    Ok(())
}
