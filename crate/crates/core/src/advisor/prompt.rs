use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::AdvisorError;
use crate::spectral::FeatureVector;

pub const INSTRUCTION: &str = "Analyze the given sound features and provide a possible diagnosis or observation. \
Based on the given features, what are better values for separation parameters?";

pub const FORMAT_INSTRUCTION: &str = "Reply with the suggested fundamental frequency of each source on its own line, \
exactly in the form:\nheart_f0: <number> Hz\nlung_f0: <number> Hz";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceFeatures {
    /// Source label, e.g. `heart`.
    pub name: String,
    pub features: FeatureVector<f64>,
    pub target_hz: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdvisorPrompt {
    pub text: String,
    pub sources: Vec<SourceFeatures>,
}

fn title_case(name: &str) -> String {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// Feature listing of one source with values at two decimals.
pub fn render_feature_block(name: &str, f: &FeatureVector<f64>) -> String {
    let mut text = String::new();
    let _ = writeln!(text, "{} sound features:", title_case(name));
    let _ = writeln!(text, "Spectral centroid: {:.2} Hz", f.spectral_centroid);
    let _ = writeln!(text, "Root mean square energy: {:.2}", f.rms_energy);
    let _ = writeln!(text, "Zero-crossing rate: {:.2}", f.zero_crossing_rate);
    let _ = writeln!(text, "Variance: {:.2}", f.variance);
    let _ = writeln!(text, "Mean frequency: {:.2} Hz", f.mean_frequency);
    let _ = writeln!(text, "Maximum amplitude: {:.2}", f.max_amplitude);
    let _ = writeln!(text, "Fundamental frequency: {:.2} Hz", f.fundamental_frequency);
    text
}

/// Deterministic prompt: the instruction, one feature block per source with
/// values at two decimals, then the reply format.
pub fn build_prompt(sources: &[SourceFeatures]) -> Result<AdvisorPrompt, AdvisorError> {
    if sources.is_empty() {
        return Err(AdvisorError::NoSources);
    }
    let mut text = String::new();
    text.push_str(INSTRUCTION);
    text.push_str("\n\n");
    for s in sources {
        text.push_str(&render_feature_block(&s.name, &s.features));
        let _ = writeln!(text, "Current fundamental frequency target: {:.2} Hz", s.target_hz);
        text.push('\n');
    }
    text.push_str(FORMAT_INSTRUCTION);
    text.push('\n');
    Ok(AdvisorPrompt {
        text,
        sources: sources.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn sample() -> Vec<SourceFeatures> {
        let f = FeatureVector {
            spectral_centroid: 61.234,
            rms_energy: 0.5,
            zero_crossing_rate: 0.1234,
            variance: 0.25,
            mean_frequency: 4.49,
            max_amplitude: 0.88,
            fundamental_frequency: 55.0,
        };
        vec![
            SourceFeatures {
                name: "heart".into(),
                features: f,
                target_hz: 50.0,
            },
            SourceFeatures {
                name: "lung".into(),
                features: FeatureVector {
                    mean_frequency: 240.0,
                    ..f
                },
                target_hz: 50.0,
            },
        ]
    }

    #[test]
    fn golden_prompt() {
        let golden = "\
Analyze the given sound features and provide a possible diagnosis or observation. Based on the given features, what are better values for separation parameters?

Heart sound features:
Spectral centroid: 61.23 Hz
Root mean square energy: 0.50
Zero-crossing rate: 0.12
Variance: 0.25
Mean frequency: 4.49 Hz
Maximum amplitude: 0.88
Fundamental frequency: 55.00 Hz
Current fundamental frequency target: 50.00 Hz

Lung sound features:
Spectral centroid: 61.23 Hz
Root mean square energy: 0.50
Zero-crossing rate: 0.12
Variance: 0.25
Mean frequency: 240.00 Hz
Maximum amplitude: 0.88
Fundamental frequency: 55.00 Hz
Current fundamental frequency target: 50.00 Hz

Reply with the suggested fundamental frequency of each source on its own line, exactly in the form:
heart_f0: <number> Hz
lung_f0: <number> Hz
";
        let p = build_prompt(&sample()).unwrap();
        assert_eq!(p.text, golden);
        assert_eq!(build_prompt(&sample()).unwrap().text, p.text);
    }

    #[test]
    fn empty_sources_rejected() {
        assert!(matches!(build_prompt(&[]), Err(AdvisorError::NoSources)));
    }
}
