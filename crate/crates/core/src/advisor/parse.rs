use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

static MARKER: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)\b(heart|lung)_f0\s*:\s*([+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:e[+-]?\d+)?)\s*hz\b")
        .expect("valid pattern")
});

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AdvisorSuggestion {
    pub heart_f0: Option<f64>,
    pub lung_f0: Option<f64>,
    /// Response text outside the frequency lines, verbatim.
    pub diagnosis_note: String,
    pub backend_id: String,
}

impl AdvisorSuggestion {
    /// Targets in source order (heart, lung).
    pub fn targets(&self) -> [Option<f64>; 2] {
        [self.heart_f0, self.lung_f0]
    }
}

/// Extracts `heart_f0: <n> Hz` and `lung_f0: <n> Hz`. Matching is
/// case-insensitive and the first occurrence of each key decides; a value
/// outside `(0, nyquist)` leaves that field empty. Never fails.
pub fn parse_response(text: &str, nyquist: Option<f64>) -> AdvisorSuggestion {
    let upper = nyquist.unwrap_or(f64::INFINITY);
    let mut heart: Option<Option<f64>> = None;
    let mut lung: Option<Option<f64>> = None;
    let mut marker_lines = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        for cap in MARKER.captures_iter(line) {
            let slot = if cap[1].eq_ignore_ascii_case("heart") {
                &mut heart
            } else {
                &mut lung
            };
            marker_lines.push(line_no);
            if slot.is_some() {
                continue;
            }
            let value = cap[2]
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite() && *v > 0.0 && *v < upper);
            *slot = Some(value);
        }
    }
    let diagnosis_note = if marker_lines.is_empty() {
        text.to_string()
    } else {
        text.lines()
            .enumerate()
            .filter(|(i, _)| !marker_lines.contains(i))
            .map(|(_, l)| l)
            .collect::<Vec<_>>()
            .join("\n")
            .trim()
            .to_string()
    };
    AdvisorSuggestion {
        heart_f0: heart.flatten(),
        lung_f0: lung.flatten(),
        diagnosis_note,
        backend_id: String::new(),
    }
}

/// Contract-format lines for the present fields.
pub fn render_suggestion(s: &AdvisorSuggestion) -> String {
    let mut out = String::new();
    if let Some(h) = s.heart_f0 {
        out.push_str(&format!("heart_f0: {h} Hz\n"));
    }
    if let Some(l) = s.lung_f0 {
        out.push_str(&format!("lung_f0: {l} Hz\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn direct_match() {
        let s = parse_response("heart_f0: 72 Hz\nlung_f0: 310 Hz", None);
        assert_eq!((s.heart_f0, s.lung_f0), (Some(72.0), Some(310.0)));
        assert_eq!(s.diagnosis_note, "");
    }

    #[test]
    fn prose_only() {
        let text = "The heart sounds look normal; consider auscultating again.";
        let s = parse_response(text, Some(500.0));
        assert_eq!((s.heart_f0, s.lung_f0), (None, None));
        assert_eq!(s.diagnosis_note, text);
    }

    #[test]
    fn range_violation() {
        let s = parse_response("heart_f0: -5 Hz", None);
        assert_eq!((s.heart_f0, s.lung_f0), (None, None));
        let s = parse_response("lung_f0: 900 Hz", Some(500.0));
        assert_eq!(s.lung_f0, None);
    }

    #[test]
    fn first_match_wins_case_insensitive() {
        let s = parse_response(
            "Observation: murmur.\nHEART_F0: 61.5 hz\nheart_f0: 99 Hz\n**Lung_f0: 2.5e2 Hz**",
            Some(500.0),
        );
        assert_eq!((s.heart_f0, s.lung_f0), (Some(61.5), Some(250.0)));
        assert_eq!(s.diagnosis_note, "Observation: murmur.");
    }

    #[test]
    fn render_round_trip() {
        let s = AdvisorSuggestion {
            heart_f0: Some(72.125),
            lung_f0: None,
            ..Default::default()
        };
        let back = parse_response(&render_suggestion(&s), None);
        assert_eq!(back.targets(), s.targets());
    }
}
