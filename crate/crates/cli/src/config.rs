//! Config resolution: defaults, then an optional file (flat key=value or
//! a JSON object), then command-line overrides. Unknown keys and type
//! mismatches are rejected naming the offending key.

use std::fs;
use std::path::Path;

use serde::Deserialize;
use tgp_core::experiments::ExperimentConfig;
use tgp_core::Error;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PartialConfig {
    alpha: Option<f64>,
    b: Option<f64>,
    sigma2: Option<f64>,
    n_grid: Option<Vec<usize>>,
    reps: Option<usize>,
    m_const: Option<f64>,
    seed: Option<u64>,
    j_tail: Option<usize>,
    mc_posterior_draws: Option<usize>,
}

fn merge(cfg: &mut ExperimentConfig, partial: PartialConfig) {
    if let Some(v) = partial.alpha {
        cfg.alpha = v;
    }
    if let Some(v) = partial.b {
        cfg.b = v;
    }
    if let Some(v) = partial.sigma2 {
        cfg.sigma2 = v;
    }
    if let Some(v) = partial.n_grid {
        cfg.n_grid = v;
    }
    if let Some(v) = partial.reps {
        cfg.reps = v;
    }
    if let Some(v) = partial.m_const {
        cfg.m_const = v;
    }
    if let Some(v) = partial.seed {
        cfg.seed = v;
    }
    if let Some(v) = partial.j_tail {
        cfg.j_tail = v;
    }
    if let Some(v) = partial.mc_posterior_draws {
        cfg.mc_posterior_draws = v;
    }
}

fn parse_scalar<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, Error> {
    value.trim().parse().map_err(|_| {
        Error::Config(format!(
            "key '{key}': cannot parse '{value}' as {}",
            std::any::type_name::<T>()
        ))
    })
}

fn apply_kv(cfg: &mut ExperimentConfig, key: &str, value: &str) -> Result<(), Error> {
    match key {
        "alpha" => cfg.alpha = parse_scalar(key, value)?,
        "b" => cfg.b = parse_scalar(key, value)?,
        "sigma2" => cfg.sigma2 = parse_scalar(key, value)?,
        "n_grid" => {
            cfg.n_grid = value
                .split(',')
                .map(|tok| parse_scalar::<usize>("n_grid", tok))
                .collect::<Result<Vec<_>, _>>()?;
        }
        "reps" => cfg.reps = parse_scalar(key, value)?,
        "m_const" => cfg.m_const = parse_scalar(key, value)?,
        "seed" => cfg.seed = parse_scalar(key, value)?,
        "j_tail" => cfg.j_tail = parse_scalar(key, value)?,
        "mc_posterior_draws" => cfg.mc_posterior_draws = parse_scalar(key, value)?,
        other => {
            return Err(Error::Config(format!(
                "unknown config key '{other}' (known keys: alpha, b, sigma2, n_grid, reps, \
                 m_const, seed, j_tail, mc_posterior_draws)"
            )));
        }
    }
    Ok(())
}

/// Resolve defaults <- file <- overrides, then validate.
pub fn load_config(path: Option<&Path>, overrides: &[String]) -> Result<ExperimentConfig, Error> {
    let mut cfg = ExperimentConfig::default();
    if let Some(path) = path {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        if text.trim_start().starts_with('{') {
            let partial: PartialConfig = serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("bad JSON config: {e}")))?;
            merge(&mut cfg, partial);
        } else {
            for (lineno, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (key, value) = line.split_once('=').ok_or_else(|| {
                    Error::Config(format!("line {}: expected key=value, got '{line}'", lineno + 1))
                })?;
                apply_kv(&mut cfg, key.trim(), value)?;
            }
        }
    }
    for entry in overrides {
        let (key, value) = entry.split_once('=').ok_or_else(|| {
            Error::Config(format!("override '{entry}' is not of the form key=value"))
        })?;
        apply_kv(&mut cfg, key.trim(), value)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn tmp_file(contents: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join("tgp-cli-config-tests");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join(format!("cfg-{}.txt", rand::random::<u64>()));
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        path
    }

    #[test]
    fn empty_file_gives_defaults() {
        let path = tmp_file("");
        let cfg = load_config(Some(&path), &[]).unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!(cfg.alpha, 1.0);
        assert_eq!(cfg.b, 0.25);
        assert_eq!(cfg.sigma2, 1.0);
        assert_eq!(cfg.m_const, 4.0);
    }

    #[test]
    fn key_value_and_json_files() {
        let path = tmp_file("alpha = 2.0\n# comment\nn_grid=64,128,256\nreps=5\n");
        let cfg = load_config(Some(&path), &[]).unwrap();
        assert_eq!(cfg.alpha, 2.0);
        assert_eq!(cfg.n_grid, vec![64, 128, 256]);
        assert_eq!(cfg.reps, 5);

        let path = tmp_file("{\"alpha\": 1.5, \"seed\": 99}");
        let cfg = load_config(Some(&path), &[]).unwrap();
        assert_eq!(cfg.alpha, 1.5);
        assert_eq!(cfg.seed, 99);
    }

    #[test]
    fn overrides_win_over_file() {
        let path = tmp_file("alpha=2.0");
        let cfg = load_config(Some(&path), &["alpha=3.0".into()]).unwrap();
        assert_eq!(cfg.alpha, 3.0);
    }

    #[test]
    fn rejections_name_the_key() {
        let err = load_config(None, &["bogus=1".into()]).unwrap_err();
        assert!(err.to_string().contains("bogus"));
        let err = load_config(None, &["reps=abc".into()]).unwrap_err();
        assert!(err.to_string().contains("reps"));
        // Theorem hypothesis violations.
        assert!(load_config(None, &["alpha=0.4".into()]).is_err());
        assert!(load_config(None, &["b=0.5".into()]).is_err());
        let err = load_config(Some(&tmp_file("{\"nope\": 1}")), &[]).unwrap_err();
        assert!(err.to_string().contains("nope") || err.to_string().contains("unknown"));
    }
}
