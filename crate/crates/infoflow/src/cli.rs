//! Run configuration, config-file parsing, and experiment dispatch for the
//! command-line binary.
//!
//! Config files are `key = value` lines with `#` comments. Every run writes
//! a manifest recording the canonical configuration, the seed, and the input
//! digest, which is enough to reproduce the output byte for byte.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::experiments::{
    dfr_csv, grid_avg_csv, grid_csv, rolling_csv, rolling_jb_csv, run_defactor, run_grid,
    run_rolling, ExperimentError, GridConfig, RollingConfig, DEFAULT_QUANTILE,
};
use crate::granger::UniverseKind;
use crate::panel::{
    gen_factor_panel, load_price_panel, price_panel_from_returns, write_price_csv,
    write_return_csv, FactorPanelSpec, PanelError, PricePanel,
};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: bad value for {key:?}: {reason}")]
    BadValue {
        line: usize,
        key: String,
        reason: String,
    },
    #[error("line {line}: expected `key = value`")]
    MalformedLine { line: usize },
    #[error("both an input path and a synthetic spec are configured; pick one")]
    ConflictingSource,
    #[error("no data source: set `input` or the synth_* keys")]
    MissingSource,
    #[error("the synth command needs the synth_* keys")]
    MissingSynthSpec,
    #[error("cannot read config {path}: {reason}")]
    Io { path: PathBuf, reason: String },
}

/// Compact synthetic-panel description used by config files; expanded to a
/// full `FactorPanelSpec` at dispatch time.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub assets: usize,
    pub obs: usize,
    /// Loadings ramp linearly from beta.0 to beta.1 across assets.
    pub beta: (f64, f64),
    /// Response lags cycle through this pattern.
    pub lags: Vec<usize>,
    pub idio: f64,
    pub ar: f64,
    pub regime: Option<(usize, usize, f64)>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            assets: 20,
            obs: 1000,
            beta: (1.0, 1.0),
            lags: vec![0],
            idio: 0.5,
            ar: 0.0,
            regime: None,
        }
    }
}

impl SynthConfig {
    pub fn to_spec(&self, seed: u64) -> FactorPanelSpec {
        let mut spec = FactorPanelSpec::new(self.assets, self.obs, seed)
            .with_loading_ramp(self.beta.0, self.beta.1)
            .with_lag_cycle(&self.lags)
            .with_idio(self.idio)
            .with_factor_ar(self.ar);
        if let Some((start, end, mult)) = self.regime {
            spec = spec.with_regime(start, end, mult);
        }
        spec
    }
}

/// Fully resolved run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub synth: Option<SynthConfig>,
    pub out_dir: PathBuf,
    pub alpha: f64,
    pub k_values: Vec<usize>,
    pub l_max: usize,
    pub universes: Vec<UniverseKind>,
    pub window_len: usize,
    pub step: usize,
    pub seed: u64,
    pub workers: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            input: None,
            synth: None,
            out_dir: PathBuf::from("out"),
            alpha: 0.05,
            k_values: (1..=5).collect(),
            l_max: 5,
            universes: vec![
                UniverseKind::AllLinks,
                UniverseKind::MstLinks,
                UniverseKind::UpperQuantile,
                UniverseKind::LowerQuantile,
            ],
            window_len: 48,
            step: 1,
            seed: 1,
            workers: None,
        }
    }
}

fn universe_from_str(s: &str) -> Option<UniverseKind> {
    match s {
        "all" => Some(UniverseKind::AllLinks),
        "mst" => Some(UniverseKind::MstLinks),
        "upper" => Some(UniverseKind::UpperQuantile),
        "lower" => Some(UniverseKind::LowerQuantile),
        _ => None,
    }
}

fn parse_list<T: std::str::FromStr>(value: &str) -> Result<Vec<T>, String> {
    value
        .split(',')
        .map(|f| {
            f.trim()
                .parse::<T>()
                .map_err(|_| format!("cannot parse {:?}", f.trim()))
        })
        .collect()
}

/// Parse `key = value` text into a config, starting from the defaults.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    let mut synth = SynthConfig::default();
    let mut synth_touched = false;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or(ConfigError::MalformedLine { line })?;
        let key = key.trim();
        let value = value.trim();
        let bad = |reason: String| ConfigError::BadValue {
            line,
            key: key.to_string(),
            reason,
        };

        match key {
            "input" => cfg.input = Some(PathBuf::from(value)),
            "out" => cfg.out_dir = PathBuf::from(value),
            "alpha" => {
                let v: f64 = value.parse().map_err(|_| bad("not a number".into()))?;
                if !(v > 0.0 && v < 1.0) {
                    return Err(bad(format!("{v} outside (0, 1)")));
                }
                cfg.alpha = v;
            }
            "k" => {
                let mut ks: Vec<usize> = parse_list(value).map_err(bad)?;
                ks.sort_unstable();
                ks.dedup();
                if ks.is_empty() || ks.iter().any(|&k| k == 0 || k > 5) {
                    return Err(bad("k values must lie in 1..=5".into()));
                }
                cfg.k_values = ks;
            }
            "l_max" => {
                let v: usize = value.parse().map_err(|_| bad("not an integer".into()))?;
                if v == 0 || v > 5 {
                    return Err(bad("l_max must lie in 1..=5".into()));
                }
                cfg.l_max = v;
            }
            "universes" => {
                let mut us = Vec::new();
                for f in value.split(',') {
                    let f = f.trim();
                    us.push(universe_from_str(f).ok_or_else(|| {
                        bad(format!("unknown universe {f:?} (all, mst, upper, lower)"))
                    })?);
                }
                us.sort_unstable();
                us.dedup();
                if us.is_empty() {
                    return Err(bad("universes must not be empty".into()));
                }
                cfg.universes = us;
            }
            "window" => {
                let v: usize = value.parse().map_err(|_| bad("not an integer".into()))?;
                if v == 0 {
                    return Err(bad("window must be positive".into()));
                }
                cfg.window_len = v;
            }
            "step" => {
                let v: usize = value.parse().map_err(|_| bad("not an integer".into()))?;
                if v == 0 {
                    return Err(bad("step must be positive".into()));
                }
                cfg.step = v;
            }
            "seed" => cfg.seed = value.parse().map_err(|_| bad("not an integer".into()))?,
            "workers" => {
                let v: usize = value.parse().map_err(|_| bad("not an integer".into()))?;
                if v == 0 {
                    return Err(bad("workers must be positive".into()));
                }
                cfg.workers = Some(v);
            }
            "synth_assets" => {
                synth.assets = value.parse().map_err(|_| bad("not an integer".into()))?;
                synth_touched = true;
            }
            "synth_obs" => {
                synth.obs = value.parse().map_err(|_| bad("not an integer".into()))?;
                synth_touched = true;
            }
            "synth_beta" => {
                let parts: Vec<&str> = value.split(':').collect();
                synth.beta = match parts.as_slice() {
                    [one] => {
                        let b: f64 = one.trim().parse().map_err(|_| bad("not a number".into()))?;
                        (b, b)
                    }
                    [lo, hi] => (
                        lo.trim().parse().map_err(|_| bad("not a number".into()))?,
                        hi.trim().parse().map_err(|_| bad("not a number".into()))?,
                    ),
                    _ => return Err(bad("expected `beta` or `lo:hi`".into())),
                };
                synth_touched = true;
            }
            "synth_lags" => {
                let lags: Vec<usize> = parse_list(value).map_err(bad)?;
                if lags.is_empty() || lags.iter().any(|&l| l > 1) {
                    return Err(bad("lag pattern entries must be 0 or 1".into()));
                }
                synth.lags = lags;
                synth_touched = true;
            }
            "synth_idio" => {
                let v: f64 = value.parse().map_err(|_| bad("not a number".into()))?;
                if !(v >= 0.0) {
                    return Err(bad("idio must be nonnegative".into()));
                }
                synth.idio = v;
                synth_touched = true;
            }
            "synth_ar" => {
                let v: f64 = value.parse().map_err(|_| bad("not a number".into()))?;
                if !(v.abs() < 1.0) {
                    return Err(bad("ar must lie in (-1, 1)".into()));
                }
                synth.ar = v;
                synth_touched = true;
            }
            "synth_regime" => {
                let parts: Vec<&str> = value.split(':').collect();
                if parts.len() != 3 {
                    return Err(bad("expected `start:end:multiplier`".into()));
                }
                let start: usize = parts[0].trim().parse().map_err(|_| bad("bad start".into()))?;
                let end: usize = parts[1].trim().parse().map_err(|_| bad("bad end".into()))?;
                let mult: f64 = parts[2].trim().parse().map_err(|_| bad("bad multiplier".into()))?;
                if start >= end || !(mult > 0.0) {
                    return Err(bad("need start < end and multiplier > 0".into()));
                }
                synth.regime = Some((start, end, mult));
                synth_touched = true;
            }
            _ => {
                return Err(ConfigError::UnknownKey {
                    line,
                    key: key.to_string(),
                })
            }
        }
    }

    if synth_touched {
        cfg.synth = Some(synth);
    }
    if cfg.input.is_some() && cfg.synth.is_some() {
        return Err(ConfigError::ConflictingSource);
    }
    Ok(cfg)
}

fn join_usize(values: &[usize]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

impl RunConfig {
    /// Canonical `key = value` rendering; parsing it back yields an equal
    /// config.
    pub fn canonical(&self) -> String {
        let mut out = String::new();
        if let Some(input) = &self.input {
            let _ = writeln!(out, "input = {}", input.display());
        }
        let _ = writeln!(out, "out = {}", self.out_dir.display());
        let _ = writeln!(out, "alpha = {}", self.alpha);
        let _ = writeln!(out, "k = {}", join_usize(&self.k_values));
        let _ = writeln!(out, "l_max = {}", self.l_max);
        let _ = writeln!(
            out,
            "universes = {}",
            self.universes
                .iter()
                .map(|u| u.label())
                .collect::<Vec<_>>()
                .join(",")
        );
        let _ = writeln!(out, "window = {}", self.window_len);
        let _ = writeln!(out, "step = {}", self.step);
        let _ = writeln!(out, "seed = {}", self.seed);
        if let Some(w) = self.workers {
            let _ = writeln!(out, "workers = {w}");
        }
        if let Some(s) = &self.synth {
            let _ = writeln!(out, "synth_assets = {}", s.assets);
            let _ = writeln!(out, "synth_obs = {}", s.obs);
            let _ = writeln!(out, "synth_beta = {}:{}", s.beta.0, s.beta.1);
            let _ = writeln!(out, "synth_lags = {}", join_usize(&s.lags));
            let _ = writeln!(out, "synth_idio = {}", s.idio);
            let _ = writeln!(out, "synth_ar = {}", s.ar);
            if let Some((start, end, mult)) = s.regime {
                let _ = writeln!(out, "synth_regime = {start}:{end}:{mult}");
            }
        }
        out
    }

    fn grid_config(&self) -> GridConfig<f64> {
        GridConfig {
            k_values: self.k_values.clone(),
            l_max: self.l_max,
            alpha: self.alpha,
            universes: self.universes.clone(),
            quantile: DEFAULT_QUANTILE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CliCommand {
    Grid,
    Defactor,
    Rolling,
    Synth,
}

impl CliCommand {
    pub fn label(self) -> &'static str {
        match self {
            CliCommand::Grid => "grid",
            CliCommand::Defactor => "defactor",
            CliCommand::Rolling => "rolling",
            CliCommand::Synth => "synth",
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Panel(#[from] PanelError),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error("cannot write {path}: {reason}")]
    Io { path: PathBuf, reason: String },
}

/// Exit status for a failed run: 2 for numerical failures, 1 for input,
/// configuration, or I/O problems.
pub fn exit_code(err: &CliError) -> i32 {
    match err {
        CliError::Experiment(e) if e.is_numerical() => 2,
        _ => 1,
    }
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

struct ResolvedInput {
    prices: PricePanel<f64>,
    digest: String,
}

fn resolve_input(cfg: &RunConfig) -> Result<ResolvedInput, CliError> {
    if let Some(path) = &cfg.input {
        let bytes = fs::read(path).map_err(|e| CliError::Io {
            path: path.clone(),
            reason: e.to_string(),
        })?;
        let digest = hex_digest(&bytes);
        let prices = load_price_panel::<f64, _>(bytes.as_slice())?;
        return Ok(ResolvedInput { prices, digest });
    }
    if let Some(synth) = &cfg.synth {
        let spec = synth.to_spec(cfg.seed);
        let returns = gen_factor_panel::<f64>(&spec)?;
        let prices = price_panel_from_returns(&returns, 100.0)?;
        return Ok(ResolvedInput {
            prices,
            digest: format!("synthetic(seed={})", cfg.seed),
        });
    }
    Err(ConfigError::MissingSource.into())
}

fn hex_digest(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn manifest(cmd: CliCommand, cfg: &RunConfig, input_digest: &str, outputs: &[PathBuf]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "tool = infoflow {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(out, "command = {}", cmd.label());
    let _ = writeln!(out, "input_digest = {input_digest}");
    let _ = writeln!(
        out,
        "outputs = {}",
        outputs
            .iter()
            .filter_map(|p| p.file_name())
            .map(|n| n.to_string_lossy().into_owned())
            .collect::<Vec<_>>()
            .join(",")
    );
    out.push_str("# configuration\n");
    out.push_str(&cfg.canonical());
    out
}

/// Run one subcommand end to end and return the files written.
///
/// All result tables are rendered in memory before anything is written, so a
/// successful exit never leaves partial output behind.
pub fn dispatch(cmd: CliCommand, cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    if cfg.input.is_some() && cfg.synth.is_some() {
        return Err(ConfigError::ConflictingSource.into());
    }

    let run = || -> Result<(Vec<(String, String)>, String), CliError> {
        match cmd {
            CliCommand::Grid => {
                let input = resolve_input(cfg)?;
                let grid = run_grid(&input.prices, &cfg.grid_config())?;
                Ok((
                    vec![
                        ("grid.csv".into(), grid_csv(&grid)),
                        ("grid_avg.csv".into(), grid_avg_csv(&grid)),
                    ],
                    input.digest,
                ))
            }
            CliCommand::Defactor => {
                let input = resolve_input(cfg)?;
                let table = run_defactor(&input.prices, &cfg.grid_config())?;
                Ok((vec![("dfr.csv".into(), dfr_csv(&table))], input.digest))
            }
            CliCommand::Rolling => {
                let input = resolve_input(cfg)?;
                let rolling = run_rolling(
                    &input.prices,
                    &RollingConfig {
                        window_len: cfg.window_len,
                        step: cfg.step,
                        grid: cfg.grid_config(),
                    },
                )?;
                Ok((
                    vec![
                        ("rolling.csv".into(), rolling_csv(&rolling)),
                        ("rolling_jb.csv".into(), rolling_jb_csv(&rolling)),
                    ],
                    input.digest,
                ))
            }
            CliCommand::Synth => {
                let synth = cfg.synth.as_ref().ok_or(ConfigError::MissingSynthSpec)?;
                let spec = synth.to_spec(cfg.seed);
                let returns = gen_factor_panel::<f64>(&spec)?;
                let prices = price_panel_from_returns(&returns, 100.0)?;
                let mut price_buf = Vec::new();
                write_price_csv(&prices, &mut price_buf).expect("in-memory write");
                let mut return_buf = Vec::new();
                write_return_csv(&returns, &mut return_buf).expect("in-memory write");
                Ok((
                    vec![
                        ("prices.csv".into(), String::from_utf8(price_buf).unwrap()),
                        ("returns.csv".into(), String::from_utf8(return_buf).unwrap()),
                    ],
                    format!("synthetic(seed={})", cfg.seed),
                ))
            }
        }
    };

    // Experiment parallelism lives behind a deterministic merge; the worker
    // count changes scheduling only, never results.
    let (tables, digest) = match cfg.workers {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Io {
                    path: PathBuf::from("<thread pool>"),
                    reason: e.to_string(),
                })?;
            pool.install(run)?
        }
        None => run()?,
    };

    fs::create_dir_all(&cfg.out_dir).map_err(|e| CliError::Io {
        path: cfg.out_dir.clone(),
        reason: e.to_string(),
    })?;

    let mut written = Vec::new();
    for (name, contents) in &tables {
        let path = cfg.out_dir.join(name);
        write_file(&path, contents.as_bytes())?;
        written.push(path);
    }
    let manifest_path = cfg.out_dir.join("manifest.txt");
    write_file(
        &manifest_path,
        manifest(cmd, cfg, &digest, &written).as_bytes(),
    )?;
    written.push(manifest_path);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_keeps_defaults() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.alpha, 0.05);
        assert_eq!(cfg.k_values, vec![1, 2, 3, 4, 5]);
        assert_eq!(cfg.l_max, 5);
    }

    #[test]
    fn comments_and_blanks_are_skipped() {
        let cfg = parse_config("# a comment\n\nalpha = 0.01  # trailing\n").unwrap();
        assert_eq!(cfg.alpha, 0.01);
    }

    #[test]
    fn bad_alpha_is_rejected_with_line() {
        match parse_config("seed = 3\nalpha = 1.5\n") {
            Err(ConfigError::BadValue { line, key, .. }) => {
                assert_eq!(line, 2);
                assert_eq!(key, "alpha");
            }
            other => panic!("expected BadValue, got {other:?}"),
        }
    }

    #[test]
    fn unknown_key_is_rejected() {
        assert!(matches!(
            parse_config("frobnicate = 1\n"),
            Err(ConfigError::UnknownKey { line: 1, .. })
        ));
    }

    #[test]
    fn conflicting_source_is_rejected() {
        let text = "input = prices.csv\nsynth_assets = 10\n";
        assert!(matches!(
            parse_config(text),
            Err(ConfigError::ConflictingSource)
        ));
    }

    #[test]
    fn canonical_round_trip() {
        let mut cfg = RunConfig::default();
        cfg.synth = Some(SynthConfig {
            assets: 12,
            obs: 500,
            beta: (0.5, 1.5),
            lags: vec![0, 1],
            idio: 0.4,
            ar: 0.3,
            regime: Some((100, 200, 3.0)),
        });
        cfg.alpha = 0.01;
        cfg.k_values = vec![1, 5];
        cfg.workers = Some(4);
        let parsed = parse_config(&cfg.canonical()).unwrap();
        assert_eq!(parsed, cfg);

        let with_input = RunConfig {
            input: Some(PathBuf::from("panel.csv")),
            ..RunConfig::default()
        };
        assert_eq!(parse_config(&with_input.canonical()).unwrap(), with_input);
    }

    #[test]
    fn k_list_parses_and_dedups() {
        let cfg = parse_config("k = 5, 1, 1, 3\n").unwrap();
        assert_eq!(cfg.k_values, vec![1, 3, 5]);
        assert!(parse_config("k = 0\n").is_err());
        assert!(parse_config("k = 6\n").is_err());
    }

    #[test]
    fn universes_parse() {
        let cfg = parse_config("universes = mst, all\n").unwrap();
        assert_eq!(
            cfg.universes,
            vec![UniverseKind::AllLinks, UniverseKind::MstLinks]
        );
        assert!(parse_config("universes = galaxy\n").is_err());
    }

    #[test]
    fn missing_source_surfaces_at_dispatch() {
        let cfg = RunConfig::default();
        match dispatch(CliCommand::Grid, &cfg) {
            Err(e @ CliError::Config(ConfigError::MissingSource)) => {
                assert_eq!(exit_code(&e), 1);
            }
            other => panic!("expected MissingSource, got {other:?}"),
        }
    }
}
