//! Run configuration: defaults, the line-oriented config file format, and
//! command-line `key=value` overrides.
//!
//! The file format is `key = value` lines grouped under `[section]`
//! headers; `#` starts a comment. Every parameter records where its value
//! came from (default, config file line, or command line) so the run
//! manifest can reproduce the full configuration.

use std::collections::HashMap;
use std::fmt;
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Profile,
    Simulate,
    Converge,
    Sweep,
}

impl Command {
    pub fn as_str(&self) -> &'static str {
        match self {
            Command::Profile => "profile",
            Command::Simulate => "simulate",
            Command::Converge => "converge",
            Command::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Oracle {
    Barenblatt,
    Static,
    ULambda,
}

impl Oracle {
    pub fn as_str(&self) -> &'static str {
        match self {
            Oracle::Barenblatt => "barenblatt",
            Oracle::Static => "static",
            Oracle::ULambda => "ulambda",
        }
    }
}

/// Configuration error with the offending line when it comes from a file.
#[derive(Debug, Clone)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    fn new(message: impl Into<String>) -> Self {
        Self {
            line: None,
            message: message.into(),
        }
    }

    fn at(line: usize, message: impl Into<String>) -> Self {
        Self {
            line: Some(line),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "config error (line {line}): {}", self.message),
            None => write!(f, "config error: {}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Fully resolved run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Option<Command>,

    // [exponents]
    pub n: u32,
    pub m: f64,
    pub gamma: f64,

    // [profile]
    pub a_target: f64,
    pub eta: f64,
    pub eps: Option<f64>,
    pub plateau_tol: f64,
    pub profile_points_per_decade: usize,
    pub r_max: Option<f64>,
    pub rtol: f64,

    // [pde]
    pub domain_r: f64,
    pub pde_points_per_decade: usize,
    pub dt_factor: f64,
    pub newton_iters: usize,

    // [simulate]
    pub oracle: Oracle,
    pub bb_k: f64,
    pub bb_t_extinction: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub refinements: usize,
    pub error_threshold: f64,
    pub order_threshold: f64,

    // [converge]
    pub bump: f64,
    pub tau_end: f64,
    pub snapshot_dtau: f64,
    pub compact_lo: f64,
    pub compact_hi: f64,
    pub ratio_threshold: f64,

    // [sweep]
    pub sweep_gammas: Vec<f64>,

    // [run]
    pub out_dir: PathBuf,
    pub seed: u64,
    pub workers: usize,
    pub strict: bool,

    /// key -> origin ("default", "config:<line>", "cli")
    pub provenance: Vec<(String, String)>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let mut cfg = Self {
            command: None,
            n: 3,
            m: 0.2,
            gamma: 2.75,
            a_target: 1.0,
            eta: 1.0,
            eps: None,
            plateau_tol: 1e-3,
            profile_points_per_decade: 256,
            r_max: None,
            rtol: 1e-10,
            domain_r: 1e2,
            pde_points_per_decade: 512,
            dt_factor: 1.25,
            newton_iters: 1,
            oracle: Oracle::Barenblatt,
            bb_k: 1.0,
            bb_t_extinction: 2.0,
            t_start: 0.5,
            t_end: 1.5,
            refinements: 3,
            error_threshold: 1e-3,
            order_threshold: 1.9,
            bump: 0.2,
            tau_end: 3.0,
            snapshot_dtau: 0.25,
            compact_lo: 0.1,
            compact_hi: 10.0,
            ratio_threshold: 0.1,
            sweep_gammas: vec![2.7, 2.75, 2.8],
            out_dir: PathBuf::from("out"),
            seed: 0,
            workers: 1,
            strict: false,
            provenance: Vec::new(),
        };
        for (key, _) in KEYS {
            cfg.provenance.push((key.to_string(), "default".to_string()));
        }
        cfg
    }
}

/// (canonical "section.key", accepted aliases)
const KEYS: &[(&str, &[&str])] = &[
    ("run.command", &["command"]),
    ("run.out", &["out"]),
    ("run.seed", &["seed"]),
    ("run.workers", &["workers"]),
    ("run.strict", &["strict"]),
    ("exponents.n", &["n"]),
    ("exponents.m", &["m"]),
    ("exponents.gamma", &["gamma"]),
    ("profile.a_target", &["A", "a", "a_target"]),
    ("profile.eta", &["eta"]),
    ("profile.eps", &["eps"]),
    ("profile.plateau_tol", &["plateau_tol"]),
    ("profile.points_per_decade", &["profile_ppd"]),
    ("profile.r_max", &["r_max"]),
    ("profile.rtol", &["rtol"]),
    ("pde.domain_r", &["R", "domain_r"]),
    ("pde.points_per_decade", &["ppd", "points_per_decade"]),
    ("pde.dt_factor", &["dt_factor"]),
    ("pde.newton_iters", &["newton_iters"]),
    ("simulate.oracle", &["oracle"]),
    ("simulate.k", &["k"]),
    ("simulate.t_extinction", &["T", "t_extinction"]),
    ("simulate.t_start", &["t_start"]),
    ("simulate.t_end", &["t_end"]),
    ("simulate.refinements", &["refinements"]),
    ("simulate.error_threshold", &["error_threshold"]),
    ("simulate.order_threshold", &["order_threshold"]),
    ("converge.bump", &["bump"]),
    ("converge.tau_end", &["tau_end"]),
    ("converge.snapshot_dtau", &["snapshot_dtau"]),
    ("converge.compact_lo", &["compact_lo"]),
    ("converge.compact_hi", &["compact_hi"]),
    ("converge.ratio_threshold", &["ratio_threshold"]),
    ("sweep.gammas", &["gammas"]),
];

fn canonical_key(section: &str, key: &str) -> Option<&'static str> {
    let dotted = format!("{section}.{key}");
    KEYS.iter()
        .find(|(canon, _)| *canon == dotted)
        .map(|(canon, _)| *canon)
}

fn canonical_from_alias(key: &str) -> Option<&'static str> {
    KEYS.iter()
        .find(|(canon, aliases)| aliases.contains(&key) || *canon == key)
        .map(|(canon, _)| *canon)
}

impl RunConfig {
    fn set_provenance(&mut self, canon: &str, origin: String) {
        if let Some(slot) = self.provenance.iter_mut().find(|(k, _)| k == canon) {
            slot.1 = origin;
        }
    }

    /// Applies one canonical key; `origin` feeds the manifest provenance.
    fn apply(&mut self, canon: &str, value: &str, origin: String) -> Result<(), String> {
        fn num<T: std::str::FromStr>(v: &str, what: &str) -> Result<T, String>
        where
            T::Err: fmt::Display,
        {
            v.parse::<T>().map_err(|e| format!("{what}: {e}"))
        }
        match canon {
            "run.command" => {
                self.command = Some(match value {
                    "profile" => Command::Profile,
                    "simulate" => Command::Simulate,
                    "converge" => Command::Converge,
                    "sweep" => Command::Sweep,
                    other => return Err(format!("unknown command `{other}`")),
                })
            }
            "run.out" => self.out_dir = PathBuf::from(value),
            "run.seed" => self.seed = num(value, "seed")?,
            "run.workers" => self.workers = num(value, "workers")?,
            "run.strict" => self.strict = num(value, "strict")?,
            "exponents.n" => self.n = num(value, "n")?,
            "exponents.m" => self.m = num(value, "m")?,
            "exponents.gamma" => self.gamma = num(value, "gamma")?,
            "profile.a_target" => self.a_target = num(value, "A")?,
            "profile.eta" => self.eta = num(value, "eta")?,
            "profile.eps" => self.eps = Some(num(value, "eps")?),
            "profile.plateau_tol" => self.plateau_tol = num(value, "plateau_tol")?,
            "profile.points_per_decade" => {
                self.profile_points_per_decade = num(value, "points_per_decade")?
            }
            "profile.r_max" => self.r_max = Some(num(value, "r_max")?),
            "profile.rtol" => self.rtol = num(value, "rtol")?,
            "pde.domain_r" => self.domain_r = num(value, "R")?,
            "pde.points_per_decade" => self.pde_points_per_decade = num(value, "points_per_decade")?,
            "pde.dt_factor" => self.dt_factor = num(value, "dt_factor")?,
            "pde.newton_iters" => self.newton_iters = num(value, "newton_iters")?,
            "simulate.oracle" => {
                self.oracle = match value {
                    "barenblatt" => Oracle::Barenblatt,
                    "static" => Oracle::Static,
                    "ulambda" => Oracle::ULambda,
                    other => return Err(format!("unknown oracle `{other}`")),
                }
            }
            "simulate.k" => self.bb_k = num(value, "k")?,
            "simulate.t_extinction" => self.bb_t_extinction = num(value, "T")?,
            "simulate.t_start" => self.t_start = num(value, "t_start")?,
            "simulate.t_end" => self.t_end = num(value, "t_end")?,
            "simulate.refinements" => self.refinements = num(value, "refinements")?,
            "simulate.error_threshold" => self.error_threshold = num(value, "error_threshold")?,
            "simulate.order_threshold" => self.order_threshold = num(value, "order_threshold")?,
            "converge.bump" => self.bump = num(value, "bump")?,
            "converge.tau_end" => self.tau_end = num(value, "tau_end")?,
            "converge.snapshot_dtau" => self.snapshot_dtau = num(value, "snapshot_dtau")?,
            "converge.compact_lo" => self.compact_lo = num(value, "compact_lo")?,
            "converge.compact_hi" => self.compact_hi = num(value, "compact_hi")?,
            "converge.ratio_threshold" => self.ratio_threshold = num(value, "ratio_threshold")?,
            "sweep.gammas" => {
                let gammas: Result<Vec<f64>, _> =
                    value.split(',').map(|g| g.trim().parse::<f64>()).collect();
                self.sweep_gammas = gammas.map_err(|e| format!("gammas: {e}"))?;
            }
            other => return Err(format!("unknown key `{other}`")),
        }
        self.set_provenance(canon, origin);
        Ok(())
    }

    /// Applies a flat command-line `key=value` pair.
    pub fn apply_cli_pair(&mut self, pair: &str) -> Result<(), ConfigError> {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| ConfigError::new(format!("expected key=value, got `{pair}`")))?;
        let canon = canonical_from_alias(key.trim())
            .ok_or_else(|| ConfigError::new(format!("unknown key `{}`", key.trim())))?;
        self.apply(canon, value.trim(), "cli".to_string())
            .map_err(ConfigError::new)
    }

    /// Range checks beyond what the library enforces itself.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.command.is_none() {
            return Err(ConfigError::new("command required (profile | simulate | converge | sweep)"));
        }
        let checks: &[(bool, &str)] = &[
            (self.plateau_tol > 0.0, "plateau_tol must be positive"),
            (self.profile_points_per_decade >= 32, "profile points_per_decade must be >= 32"),
            (self.pde_points_per_decade >= 32, "pde points_per_decade must be >= 32"),
            (self.domain_r > 1.0, "R must exceed 1"),
            (self.dt_factor > 0.0, "dt_factor must be positive"),
            (self.newton_iters >= 1, "newton_iters must be >= 1"),
            ((0.0..1.0).contains(&self.bump), "bump must lie in [0, 1)"),
            (self.tau_end > 0.0, "tau_end must be positive"),
            (self.snapshot_dtau > 0.0, "snapshot_dtau must be positive"),
            (
                self.compact_lo > 0.0 && self.compact_lo < self.compact_hi,
                "compact annulus must satisfy 0 < lo < hi",
            ),
            (self.ratio_threshold > 0.0, "ratio_threshold must be positive"),
            (self.workers >= 1, "workers must be >= 1"),
            (self.refinements >= 2 && self.refinements <= 4, "refinements must be 2..=4"),
            (!self.sweep_gammas.is_empty(), "sweep needs at least one gamma"),
            (self.t_end > self.t_start, "t_end must exceed t_start"),
        ];
        for (ok, msg) in checks {
            if !ok {
                return Err(ConfigError::new(*msg));
            }
        }
        Ok(())
    }

    /// Manifest entries: every parameter with its value and provenance.
    pub fn manifest_entries(&self) -> Vec<(String, String)> {
        let value_of = |canon: &str| -> String {
            match canon {
                "run.command" => self.command.map(|c| c.as_str().to_string()).unwrap_or_default(),
                "run.out" => self.out_dir.display().to_string(),
                "run.seed" => self.seed.to_string(),
                "run.workers" => self.workers.to_string(),
                "run.strict" => self.strict.to_string(),
                "exponents.n" => self.n.to_string(),
                "exponents.m" => self.m.to_string(),
                "exponents.gamma" => self.gamma.to_string(),
                "profile.a_target" => self.a_target.to_string(),
                "profile.eta" => self.eta.to_string(),
                "profile.eps" => self.eps.map(|v| v.to_string()).unwrap_or_else(|| "auto".into()),
                "profile.plateau_tol" => self.plateau_tol.to_string(),
                "profile.points_per_decade" => self.profile_points_per_decade.to_string(),
                "profile.r_max" => self.r_max.map(|v| v.to_string()).unwrap_or_else(|| "auto".into()),
                "profile.rtol" => self.rtol.to_string(),
                "pde.domain_r" => self.domain_r.to_string(),
                "pde.points_per_decade" => self.pde_points_per_decade.to_string(),
                "pde.dt_factor" => self.dt_factor.to_string(),
                "pde.newton_iters" => self.newton_iters.to_string(),
                "simulate.oracle" => self.oracle.as_str().to_string(),
                "simulate.k" => self.bb_k.to_string(),
                "simulate.t_extinction" => self.bb_t_extinction.to_string(),
                "simulate.t_start" => self.t_start.to_string(),
                "simulate.t_end" => self.t_end.to_string(),
                "simulate.refinements" => self.refinements.to_string(),
                "simulate.error_threshold" => self.error_threshold.to_string(),
                "simulate.order_threshold" => self.order_threshold.to_string(),
                "converge.bump" => self.bump.to_string(),
                "converge.tau_end" => self.tau_end.to_string(),
                "converge.snapshot_dtau" => self.snapshot_dtau.to_string(),
                "converge.compact_lo" => self.compact_lo.to_string(),
                "converge.compact_hi" => self.compact_hi.to_string(),
                "converge.ratio_threshold" => self.ratio_threshold.to_string(),
                "sweep.gammas" => self
                    .sweep_gammas
                    .iter()
                    .map(|g| g.to_string())
                    .collect::<Vec<_>>()
                    .join(","),
                _ => String::new(),
            }
        };
        self.provenance
            .iter()
            .map(|(canon, origin)| (canon.clone(), format!("{} ({origin})", value_of(canon))))
            .collect()
    }
}

/// Parses the line-oriented config text. Keys must not repeat within a
/// section; the error names both offending lines.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    let mut section = String::from("run");
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| ConfigError::at(lineno, format!("malformed section header `{line}`")))?
                .trim();
            section = name.to_string();
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| ConfigError::at(lineno, format!("expected key = value, got `{line}`")))?;
        let key = key.trim();
        let value = value.trim();
        let canon = canonical_key(&section, key)
            .ok_or_else(|| ConfigError::at(lineno, format!("unknown key `{key}` in section [{section}]")))?;
        if let Some(first) = seen.insert(canon.to_string(), lineno) {
            return Err(ConfigError::at(
                lineno,
                format!("duplicate key `{key}` in section [{section}] (first set on line {first})"),
            ));
        }
        cfg.apply(canon, value, format!("config:{lineno}"))
            .map_err(|msg| ConfigError::at(lineno, msg))?;
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_requires_command() {
        let cfg = parse_config("").unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn section_override_is_parsed() {
        let cfg = parse_config("[exponents]\ngamma = 2.9\n").unwrap();
        assert_eq!(cfg.gamma, 2.9);
        let entries = cfg.manifest_entries();
        let gamma = entries.iter().find(|(k, _)| k == "exponents.gamma").unwrap();
        assert!(gamma.1.contains("config:2"), "{}", gamma.1);
        let m = entries.iter().find(|(k, _)| k == "exponents.m").unwrap();
        assert!(m.1.contains("default"));
    }

    #[test]
    fn duplicate_key_names_both_lines() {
        let err = parse_config("[exponents]\ngamma = 2.9\ngamma = 2.8\n").unwrap_err();
        assert_eq!(err.line, Some(3));
        assert!(err.message.contains("line 2"), "{}", err.message);
    }

    #[test]
    fn unknown_key_is_rejected_with_line() {
        let err = parse_config("[exponents]\nfoo = 1\n").unwrap_err();
        assert_eq!(err.line, Some(2));
    }

    #[test]
    fn cli_pairs_apply_with_aliases() {
        let mut cfg = RunConfig::default();
        cfg.apply_cli_pair("n=4").unwrap();
        cfg.apply_cli_pair("A=2.5").unwrap();
        cfg.apply_cli_pair("T=3.0").unwrap();
        cfg.apply_cli_pair("oracle=static").unwrap();
        assert_eq!(cfg.n, 4);
        assert_eq!(cfg.a_target, 2.5);
        assert_eq!(cfg.bb_t_extinction, 3.0);
        assert_eq!(cfg.oracle, Oracle::Static);
        assert!(cfg.apply_cli_pair("nonsense=1").is_err());
        assert!(cfg.apply_cli_pair("plainword").is_err());
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let cfg = parse_config("# header\n\n[run]\ncommand = profile # trailing\n").unwrap();
        assert_eq!(cfg.command, Some(Command::Profile));
        assert!(cfg.validate().is_ok());
    }
}
