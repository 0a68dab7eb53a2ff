//! Flat `key = value` run configuration.
//!
//! [`KEYS`] is the only place defaults live; `--help` is generated from it and
//! resolution layers a config file and then command-line flags on top of it.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    Experiment,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Experiment => "experiment",
        }
    }
}

/// A configuration key. `None` for a command means the key does not exist
/// there; an empty default means "unset".
#[derive(Debug, Clone, Copy)]
pub struct Key {
    pub name: &'static str,
    pub help: &'static str,
    pub solve: Option<&'static str>,
    pub experiment: Option<&'static str>,
}

impl Key {
    pub fn default_for(&self, cmd: Command) -> Option<&'static str> {
        match cmd {
            Command::Solve => self.solve,
            Command::Experiment => self.experiment,
        }
    }
}

const fn both(name: &'static str, default: &'static str, help: &'static str) -> Key {
    Key { name, help, solve: Some(default), experiment: Some(default) }
}

const fn solve_only(name: &'static str, default: &'static str, help: &'static str) -> Key {
    Key { name, help, solve: Some(default), experiment: None }
}

const fn experiment_only(name: &'static str, default: &'static str, help: &'static str) -> Key {
    Key { name, help, solve: None, experiment: Some(default) }
}

pub const KEYS: &[Key] = &[
    both("model", "gaussian-real", "measurement model: gaussian-real, gaussian-complex, cdp-1d, cdp-2d"),
    both("n", "64", "signal length, or ROWSxCOLS for cdp-2d"),
    solve_only("m", "auto", "number of Gaussian measurements; auto means 8n"),
    solve_only("masks", "8", "number of CDP masks L (m = L n)"),
    Key {
        name: "algorithm",
        help: "rgrad or trgrad; experiments accept a comma-separated list",
        solve: Some("trgrad"),
        experiment: Some("trgrad"),
    },
    Key {
        name: "stepsize",
        help: "sd (steepest descent) or constant; experiments accept a comma-separated list",
        solve: Some("sd"),
        experiment: Some("sd"),
    },
    both("alpha", "0.2", "stepsize used by the constant rule"),
    Key {
        name: "seed",
        help: "instance seed (solve) or base seed of the per-trial streams (experiment)",
        solve: Some("0"),
        experiment: Some("0"),
    },
    solve_only("truth-seed", "", "seed for the signal; when set, dist_rel is reported"),
    solve_only("noise-sigma", "0", "relative noise level: ||e|| = sigma ||y||"),
    Key {
        name: "max-iters",
        help: "iteration cap",
        solve: Some("1000"),
        experiment: Some("2500"),
    },
    both("tol", "1e-6", "stop when the relative residual drops below this"),
    both("tau-x", "5", "truncation threshold tau_x (inf disables)"),
    both("tau-z", "5", "truncation threshold tau_z (inf disables)"),
    both("tau-h", "5", "truncation threshold tau_h (inf disables)"),
    both("alpha-y", "3", "spectral-init trimming level"),
    both("power-iters", "100", "spectral-init power iteration cap"),
    both("power-tol", "1e-8", "spectral-init power iteration tolerance"),
    solve_only("trace-out", "", "write a per-iteration CSV trace to this path"),
    experiment_only("experiment", "phase-transition", "phase-transition, trace or noise"),
    experiment_only(
        "grid",
        "auto",
        "comma list, a..b and a..b:step ranges allowed; m/n ratios or mask counts L (phase-transition), SNRs in dB with inf for noiseless (noise); auto is 1..10 or 20,25,...,60",
    ),
    experiment_only("oversampling", "8", "m/n (or L for CDP) for trace and noise experiments"),
    experiment_only("trials", "100", "trials per grid point"),
    experiment_only("workers", "0", "worker threads; 0 uses every available core"),
    experiment_only("out", "-", "output CSV path; - writes to standard output"),
];

pub fn keys_for(cmd: Command) -> impl Iterator<Item = &'static Key> {
    KEYS.iter().filter(move |k| k.default_for(cmd).is_some())
}

fn lookup(cmd: Command, name: &str) -> Option<&'static Key> {
    keys_for(cmd).find(|k| k.name == name)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Default,
    File,
    Flag,
}

/// Resolved values for one command.
#[derive(Debug, Clone)]
pub struct RunConfig {
    command: Command,
    values: BTreeMap<&'static str, (String, Source)>,
}

impl RunConfig {
    pub fn defaults(command: Command) -> Self {
        let values = keys_for(command)
            .map(|k| (k.name, (k.default_for(command).unwrap_or_default().to_string(), Source::Default)))
            .collect();
        RunConfig { command, values }
    }

    pub fn command(&self) -> Command {
        self.command
    }

    pub fn set(&mut self, name: &str, value: &str, source: Source) -> Result<(), CliError> {
        let key = lookup(self.command, name)
            .ok_or_else(|| CliError::usage(format!("unknown key `{name}` for {}", self.command.name())))?;
        self.values.insert(key.name, (value.trim().to_string(), source));
        Ok(())
    }

    /// Applies a `key = value` file; `#` starts a comment line.
    pub fn apply_file_text(&mut self, text: &str) -> Result<(), CliError> {
        let mut seen = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::usage(format!("config line {}: expected `key = value`", lineno + 1)))?;
            let key = key.trim().replace('_', "-");
            if seen.contains(&key) {
                return Err(CliError::usage(format!("config line {}: duplicate key `{key}`", lineno + 1)));
            }
            self.set(&key, value, Source::File)
                .map_err(|e| CliError::usage(format!("config line {}: {e}", lineno + 1)))?;
            seen.push(key);
        }
        Ok(())
    }

    pub fn raw(&self, name: &str) -> &str {
        match self.values.get(name) {
            Some((v, _)) => v,
            None => panic!("key `{name}` is not defined for {}", self.command.name()),
        }
    }

    pub fn source(&self, name: &str) -> Source {
        self.values.get(name).map_or(Source::Default, |(_, s)| *s)
    }

    /// `None` for an empty (unset) value.
    pub fn optional<T: FromStr>(&self, name: &str) -> Result<Option<T>, CliError>
    where
        T::Err: fmt::Display,
    {
        let raw = self.raw(name);
        if raw.is_empty() {
            return Ok(None);
        }
        raw.parse()
            .map(Some)
            .map_err(|e| CliError::usage(format!("invalid value `{raw}` for --{name}: {e}")))
    }

    pub fn get<T: FromStr>(&self, name: &str) -> Result<T, CliError>
    where
        T::Err: fmt::Display,
    {
        self.optional(name)?
            .ok_or_else(|| CliError::usage(format!("--{name} needs a value")))
    }

    /// Comma-separated list of strings, empty items dropped.
    pub fn list(&self, name: &str) -> Vec<String> {
        self.raw(name)
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(String::from)
            .collect()
    }
}

/// Parses `1,2,5..8,20..60:5,inf` into numbers; `a..b` expands in unit
/// steps, `a..b:h` in steps of `h`.
pub fn parse_grid(text: &str) -> Result<Vec<f64>, CliError> {
    let bad = |item: &str| CliError::usage(format!("invalid grid item `{item}`"));
    let mut out = Vec::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if let Some((a, rest)) = item.split_once("..") {
            let (b, h) = rest.split_once(':').unwrap_or((rest, "1"));
            let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad(item));
            let (a, b, h) = (num(a)?, num(b)?, num(h)?);
            if !(a.is_finite() && b.is_finite() && a <= b && h > 0.0 && h.is_finite()) {
                return Err(bad(item));
            }
            // tolerate rounding in (b − a)/h
            let count = ((b - a) / h + 1e-9).floor() as usize;
            out.extend((0..=count).map(|k| a + k as f64 * h));
        } else {
            out.push(item.parse().map_err(|_| bad(item))?);
        }
    }
    if out.is_empty() {
        return Err(CliError::usage("grid must be nonempty"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_names_are_unique() {
        let mut names: Vec<_> = KEYS.iter().map(|k| k.name).collect();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), KEYS.len());
    }

    #[test]
    fn file_then_lookup() {
        let mut cfg = RunConfig::defaults(Command::Experiment);
        cfg.apply_file_text("# sweep\ntrials = 7\nmax_iters=30\n\n").unwrap();
        assert_eq!(cfg.get::<usize>("trials").unwrap(), 7);
        assert_eq!(cfg.get::<usize>("max-iters").unwrap(), 30);
        assert_eq!(cfg.source("trials"), Source::File);
        assert_eq!(cfg.get::<u64>("seed").unwrap(), 0);
    }

    #[test]
    fn unknown_and_foreign_keys_are_rejected() {
        let mut cfg = RunConfig::defaults(Command::Experiment);
        assert!(cfg.apply_file_text("bogus = 1").is_err());
        assert!(cfg.apply_file_text("trace-out = x.csv").is_err());
        assert!(cfg.apply_file_text("trials 3").is_err());
        assert!(cfg.apply_file_text("trials = 3\ntrials = 4").is_err());
    }

    #[test]
    fn unset_values() {
        let cfg = RunConfig::defaults(Command::Solve);
        assert_eq!(cfg.optional::<u64>("truth-seed").unwrap(), None);
        assert!(cfg.get::<u64>("truth-seed").is_err());
    }

    #[test]
    fn grids() {
        assert_eq!(parse_grid("3, 1..2,inf").unwrap(), vec![3.0, 1.0, 2.0, f64::INFINITY]);
        assert_eq!(parse_grid("2..10").unwrap().len(), 9);
        assert_eq!(parse_grid("20..60:5").unwrap(), (0..9).map(|k| 20.0 + 5.0 * k as f64).collect::<Vec<_>>());
        assert_eq!(parse_grid("0..1:0.1").unwrap().len(), 11);
        assert!(parse_grid("1..3:0").is_err());
        assert!(parse_grid("").is_err());
        assert!(parse_grid("5..1").is_err());
        assert!(parse_grid("x").is_err());
    }
}
