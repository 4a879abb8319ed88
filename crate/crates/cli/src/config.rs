//! Configuration layering: defaults, then the JSON file, then flags.

use std::path::Path;
use std::str::FromStr;

use cardiosep::advisor::AdvisorMode;
use cardiosep::{Band, Lambda2, Method, SeparationConfig};

use crate::args::SepFlags;
use crate::exit::{CliError, CliResult, io_err};

/// Reads a configuration file. A manifest from an earlier run is accepted
/// and its `config` snapshot used, so runs can be replayed.
pub fn load_config_file(path: &Path) -> CliResult<SeparationConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    let body = match value.get("config") {
        Some(inner) if value.get("tool").is_some() => inner.clone(),
        _ => value,
    };
    serde_json::from_value(body).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

fn parse_one<T: FromStr>(flag: &str, s: &str) -> CliResult<T>
where
    T::Err: std::fmt::Display,
{
    s.trim()
        .parse()
        .map_err(|e| CliError::usage(format!("--{flag}: cannot parse {s:?}: {e}")))
}

/// One value for both passes or `HEART,LUNG`.
pub fn parse_pair<T: FromStr + Clone>(flag: &str, s: &str) -> CliResult<[T; 2]>
where
    T::Err: std::fmt::Display,
{
    let parts: Vec<&str> = s.split(',').collect();
    match parts.as_slice() {
        [one] => {
            let v: T = parse_one(flag, one)?;
            Ok([v.clone(), v])
        }
        [h, l] => Ok([parse_one(flag, h)?, parse_one(flag, l)?]),
        _ => Err(CliError::usage(format!("--{flag} takes one value or HEART,LUNG"))),
    }
}

/// Comma-separated list of at least one value.
pub fn parse_list<T: FromStr>(flag: &str, s: &str) -> CliResult<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    let out = s
        .split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| parse_one(flag, p))
        .collect::<CliResult<Vec<T>>>()?;
    if out.is_empty() {
        return Err(CliError::usage(format!("--{flag} needs at least one value")));
    }
    Ok(out)
}

pub fn resolve_config(flags: &SepFlags) -> CliResult<SeparationConfig> {
    let mut cfg = match &flags.config {
        Some(path) => load_config_file(path)?,
        None => SeparationConfig::default(),
    };
    if let Some(m) = &flags.method {
        cfg.method = parse_one::<Method>("method", m)?;
    }
    if let Some(s) = &flags.alpha {
        let [h, l] = parse_pair::<f64>("alpha", s)?;
        cfg.heart_params.alpha = h;
        cfg.lung_params.alpha = l;
    }
    if let Some(s) = &flags.layers {
        let [h, l] = parse_pair::<usize>("layers", s)?;
        cfg.heart_params.layers = h;
        cfg.lung_params.layers = l;
    }
    if let Some(s) = &flags.lambda1 {
        let [h, l] = parse_pair::<f64>("lambda1", s)?;
        cfg.heart_params.lambda1 = h;
        cfg.lung_params.lambda1 = l;
    }
    if let Some(s) = &flags.lambda2 {
        let [h, l] = parse_pair::<Lambda2<f64>>("lambda2", s)?;
        cfg.heart_params.lambda2 = h;
        cfg.lung_params.lambda2 = l;
    }
    if let Some(v) = flags.lambda_f {
        cfg.lambda_f = v;
    }
    if let Some(s) = &flags.f_init {
        let parts = parse_list::<f64>("f-init", s)?;
        cfg.f_init = <[f64; 2]>::try_from(parts)
            .map_err(|_| CliError::usage("--f-init takes exactly HEART_HZ,LUNG_HZ"))?;
    }
    if let Some(s) = &flags.bands {
        let parts = parse_list::<Band>("bands", s)?;
        cfg.bands = <[Band; 2]>::try_from(parts)
            .map_err(|_| CliError::usage("--bands takes exactly LO-HI,LO-HI"))?;
    }
    if let Some(s) = &flags.advisor {
        cfg.advisor = parse_one::<AdvisorMode>("advisor", s)?;
    }
    if let Some(v) = flags.seed {
        cfg.seed = v;
    }
    if let Some(v) = flags.max_iter {
        cfg.max_iter = v;
    }
    if let Some(v) = flags.tol {
        cfg.rel_tol = v;
    }
    if let Some(v) = flags.feedback_every {
        cfg.feedback_every = v;
    }
    if let Some(v) = flags.feedback_rounds {
        cfg.max_feedback_rounds = v;
    }
    if flags.no_fallback {
        cfg.fallback_to_heuristic = false;
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_defaults() {
        let flags = SepFlags {
            method: Some("plnmf".into()),
            alpha: Some("0.5,2".into()),
            lambda2: Some("auto,3".into()),
            f_init: Some("60,250".into()),
            bands: Some("20-150,100-400".into()),
            seed: Some(7),
            no_fallback: true,
            ..SepFlags::default()
        };
        let cfg = resolve_config(&flags).unwrap();
        assert_eq!(cfg.method, Method::Plnmf);
        assert_eq!((cfg.heart_params.alpha, cfg.lung_params.alpha), (0.5, 2.0));
        assert_eq!(cfg.heart_params.lambda2, Lambda2::Auto);
        assert_eq!(cfg.lung_params.lambda2, Lambda2::Value(3.0));
        assert_eq!(cfg.f_init, [60.0, 250.0]);
        assert_eq!(cfg.bands[1], Band::new(100.0, 400.0).unwrap());
        assert_eq!(cfg.seed, 7);
        assert!(!cfg.fallback_to_heuristic);
    }

    #[test]
    fn malformed_flags_are_usage_errors() {
        for flags in [
            SepFlags {
                method: Some("nmf2".into()),
                ..SepFlags::default()
            },
            SepFlags {
                f_init: Some("50".into()),
                ..SepFlags::default()
            },
            SepFlags {
                layers: Some("1,2,3".into()),
                ..SepFlags::default()
            },
        ] {
            assert_eq!(resolve_config(&flags).unwrap_err().code, crate::exit::USAGE);
        }
    }
}
