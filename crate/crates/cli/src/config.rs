//! Run configuration: flags, an optional `key = value` file, and defaults.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use bfree_core::bset::SievingSet;
use clap::{Args, Parser, Subcommand};

use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "bfree-lab", version, about = "Moments, variances and fBm limits of B-free integers in short intervals")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub options: Options,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Density, variance constants and the sinc moment.
    Constants,
    /// Count B-free integers up to X, optionally writing a bitmap.
    Sieve,
    /// Centred window-count moments M_k(X, H).
    Moments,
    /// Empirical M_2 against C_2(H) and A_alpha N(H).
    VarianceCompare,
    /// Normalised window counts against the standard normal.
    Clt,
    /// Covariance of the normalised walk against fractional Brownian motion.
    Fbm,
    /// Run the invariant suites.
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Constants => "constants",
            Command::Sieve => "sieve",
            Command::Moments => "moments",
            Command::VarianceCompare => "variance-compare",
            Command::Clt => "clt",
            Command::Fbm => "fbm",
            Command::Verify => "verify",
        }
    }
}

/// Raw flag values. Every flag may also come from the config file under
/// the same key; flags win.
#[derive(Debug, Default, Clone, Args)]
pub struct Options {
    /// squarefree | cubefree | m=K | custom:FILE
    #[arg(long, global = true)]
    pub set: Option<String>,
    /// Upper end of the starting points n <= X (accepts 1e8).
    #[arg(long = "X", global = true)]
    pub x: Option<String>,
    /// Window length, or a comma-separated list.
    #[arg(long = "H", global = true)]
    pub h: Option<String>,
    /// Moment orders, comma-separated.
    #[arg(long = "k", alias = "k-list", global = true)]
    pub k: Option<String>,
    /// Step-function weight file with lines "a b theta".
    #[arg(long, global = true)]
    pub phi: Option<String>,
    /// Index alpha of the semigroup; defaults to 1/m for m-free sets.
    #[arg(long, global = true)]
    pub alpha: Option<String>,
    /// Seed for sampled paths and randomised checks
    #[arg(long, global = true)]
    pub seed: Option<String>,
    /// csv | json
    #[arg(long, global = true)]
    pub out: Option<String>,
    /// Worker threads; never changes results.
    #[arg(long, env = "BFREE_LAB_THREADS", global = true)]
    pub threads: Option<String>,
    /// Output file; extra tables go next to it.
    #[arg(long, global = true)]
    pub output: Option<String>,
    /// Key-value configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Euler-product cutoff on b.
    #[arg(long, global = true)]
    pub cutoff: Option<String>,
    /// fBm grid of t values in [0, 1], comma-separated.
    #[arg(long, global = true)]
    pub grid: Option<String>,
    /// fBm sample count; all n when omitted or at least X.
    #[arg(long, global = true)]
    pub samples: Option<String>,
    /// Verification suite to run; all when omitted.
    #[arg(long, global = true)]
    pub suite: Option<String>,
    /// Random trials per randomised verification suite
    #[arg(long, global = true)]
    pub trials: Option<String>,
    /// Flip one inequality check in `verify` to exercise the failure path.
    #[arg(long, global = true)]
    pub self_test_negate: bool,
    /// Write the window-count histogram as "j,count" lines.
    #[arg(long, global = true)]
    pub histogram: Option<String>,
    /// Write the B-free bitmap of [start, start + len) for `sieve`.
    #[arg(long, global = true)]
    pub bitmap: Option<String>,
    /// First integer of the bitmap range
    #[arg(long, global = true)]
    pub start: Option<String>,
    /// Length of the bitmap range
    #[arg(long, global = true)]
    pub len: Option<String>,
}

const KEYS: &[&str] = &[
    "set", "X", "H", "k", "phi", "alpha", "seed", "out", "threads", "output", "cutoff", "grid",
    "samples", "suite", "trials", "self-test-negate", "histogram", "bitmap", "start", "len",
];

impl Options {
    fn flag(&self, key: &str) -> Option<String> {
        let v = match key {
            "set" => &self.set,
            "X" => &self.x,
            "H" => &self.h,
            "k" => &self.k,
            "phi" => &self.phi,
            "alpha" => &self.alpha,
            "seed" => &self.seed,
            "out" => &self.out,
            "threads" => &self.threads,
            "output" => &self.output,
            "cutoff" => &self.cutoff,
            "grid" => &self.grid,
            "samples" => &self.samples,
            "suite" => &self.suite,
            "trials" => &self.trials,
            "histogram" => &self.histogram,
            "bitmap" => &self.bitmap,
            "start" => &self.start,
            "len" => &self.len,
            "self-test-negate" => return self.self_test_negate.then(|| "true".into()),
            _ => return None,
        };
        v.clone()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SetSpec {
    PowerFree(u32),
    Custom(PathBuf),
}

impl SetSpec {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        let s = s.trim();
        match s {
            "squarefree" => return Ok(SetSpec::PowerFree(2)),
            "cubefree" => return Ok(SetSpec::PowerFree(3)),
            _ => {}
        }
        if let Some(m) = s.strip_prefix("m=") {
            let m = m
                .parse::<u32>()
                .map_err(|e| CliError::Config(format!("set {s:?}: {e}")))?;
            return Ok(SetSpec::PowerFree(m));
        }
        if let Some(path) = s.strip_prefix("custom:") {
            return Ok(SetSpec::Custom(PathBuf::from(path)));
        }
        Err(CliError::Config(format!(
            "unknown set {s:?}; expected squarefree, cubefree, m=K or custom:FILE"
        )))
    }

    pub fn load(&self) -> Result<SievingSet, CliError> {
        Ok(match self {
            SetSpec::PowerFree(m) => SievingSet::power_free(*m)?,
            SetSpec::Custom(path) => SievingSet::load_custom(path)?,
        })
    }
}

impl fmt::Display for SetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SetSpec::PowerFree(2) => write!(f, "squarefree"),
            SetSpec::PowerFree(3) => write!(f, "cubefree"),
            SetSpec::PowerFree(m) => write!(f, "m={m}"),
            SetSpec::Custom(p) => write!(f, "custom:{}", p.display()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// Fully resolved settings of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub set: SetSpec,
    pub x: u64,
    pub h: Vec<u64>,
    pub k: Vec<u32>,
    pub phi: Option<PathBuf>,
    pub alpha: Option<f64>,
    pub seed: u64,
    pub format: Format,
    pub threads: usize,
    pub output: Option<PathBuf>,
    pub cutoff: u64,
    pub grid: Vec<f64>,
    pub samples: Option<u64>,
    pub suite: Option<String>,
    pub trials: u64,
    pub self_test_negate: bool,
    pub histogram: Option<PathBuf>,
    pub bitmap: Option<PathBuf>,
    pub start: u64,
    pub len: Option<u64>,
}

/// Integers written plainly or in float notation such as `1e8`.
pub fn parse_count(key: &str, s: &str) -> Result<u64, CliError> {
    let s = s.trim().replace('_', "");
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.fract() == 0.0 && v < 1.8e19 => Ok(v as u64),
        _ => Err(CliError::Config(format!("{key}: {s:?} is not a nonnegative integer"))),
    }
}

fn parse_list<T>(key: &str, s: &str, item: impl Fn(&str) -> Result<T, CliError>) -> Result<Vec<T>, CliError> {
    let items = s
        .split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(item)
        .collect::<Result<Vec<_>, _>>()?;
    if items.is_empty() {
        return Err(CliError::Config(format!("{key}: empty list")));
    }
    Ok(items)
}

fn parse_real(key: &str, s: &str) -> Result<f64, CliError> {
    let s = s.trim();
    let v = match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|_| CliError::Config(format!("{key}: bad number {s:?}")))?;
            let b: f64 = b.trim().parse().map_err(|_| CliError::Config(format!("{key}: bad number {s:?}")))?;
            a / b
        }
        None => s.parse().map_err(|_| CliError::Config(format!("{key}: bad number {s:?}")))?,
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Config(format!("{key}: {s:?} is not finite")))
    }
}

fn parse_bool(key: &str, s: &str) -> Result<bool, CliError> {
    match s.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(CliError::Config(format!("{key}: expected a boolean, got {other:?}"))),
    }
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("config line {}: expected key = value", i + 1)))?;
        let key = key.trim().trim_start_matches("--");
        let key = if key == "k-list" { "k" } else { key };
        if !KEYS.contains(&key) {
            return Err(CliError::Config(format!("config line {}: unknown key {key:?}", i + 1)));
        }
        map.insert(key.to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn default_threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

impl RunConfig {
    pub fn resolve(command: Command, options: &Options) -> Result<Self, CliError> {
        let file = match &options.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
                parse_config_file(&text)?
            }
            None => BTreeMap::new(),
        };
        let get = |key: &str| options.flag(key).or_else(|| file.get(key).cloned());
        let path = |key: &str| get(key).map(PathBuf::from);

        let threads = match get("threads") {
            Some(s) => parse_count("threads", &s)? as usize,
            None => default_threads(),
        };
        let grid = match get("grid") {
            Some(s) => parse_list("grid", &s, |p| parse_real("grid", p))?,
            None => vec![0.25, 0.5, 0.75, 1.0],
        };
        if grid.iter().any(|t| !(0.0..=1.0).contains(t)) {
            return Err(CliError::Config("grid values must lie in [0, 1]".into()));
        }
        let format = match get("out").as_deref().map(str::trim) {
            None | Some("csv") => Format::Csv,
            Some("json") => Format::Json,
            Some(other) => return Err(CliError::Config(format!("out: expected csv or json, got {other:?}"))),
        };
        let cfg = RunConfig {
            command,
            set: SetSpec::parse(get("set").as_deref().unwrap_or("squarefree"))?,
            x: parse_count("X", get("X").as_deref().unwrap_or("1000000"))?,
            h: parse_list("H", get("H").as_deref().unwrap_or("100"), |p| parse_count("H", p))?,
            k: parse_list("k", get("k").as_deref().unwrap_or("2,3,4"), |p| {
                let v = parse_count("k", p)?;
                u32::try_from(v).map_err(|_| CliError::Config(format!("k = {v} too large")))
            })?,
            phi: path("phi"),
            alpha: get("alpha").map(|s| parse_real("alpha", &s)).transpose()?,
            seed: parse_count("seed", get("seed").as_deref().unwrap_or("0"))?,
            format,
            threads: threads.max(1),
            output: path("output"),
            cutoff: parse_count("cutoff", get("cutoff").as_deref().unwrap_or("1000000"))?,
            grid,
            samples: get("samples").map(|s| parse_count("samples", &s)).transpose()?,
            suite: get("suite"),
            trials: parse_count("trials", get("trials").as_deref().unwrap_or("1000"))?,
            self_test_negate: get("self-test-negate").map(|s| parse_bool("self-test-negate", &s)).transpose()?.unwrap_or(false),
            histogram: path("histogram"),
            bitmap: path("bitmap"),
            start: parse_count("start", get("start").as_deref().unwrap_or("1"))?,
            len: get("len").map(|s| parse_count("len", &s)).transpose()?,
        };
        if cfg.x == 0 {
            return Err(CliError::Config("X must be at least 1".into()));
        }
        if cfg.h.contains(&0) {
            return Err(CliError::Config("H must be at least 1".into()));
        }
        Ok(cfg)
    }

    /// The settings echoed into every output header. The thread count is
    /// left out: it never changes results, and leaving it out keeps output
    /// files byte-identical across machines.
    pub fn echo(&self) -> Vec<(&'static str, String)> {
        let join = |v: &[String]| v.join(",");
        let opt_path = |p: &Option<PathBuf>| p.as_deref().map_or("none".to_string(), |p: &Path| p.display().to_string());
        let mut out = vec![
            ("command", self.command.name().to_string()),
            ("set", self.set.to_string()),
            ("X", self.x.to_string()),
            ("H", join(&self.h.iter().map(u64::to_string).collect::<Vec<_>>())),
            ("k", join(&self.k.iter().map(u32::to_string).collect::<Vec<_>>())),
            ("phi", opt_path(&self.phi)),
            ("alpha", self.alpha.map_or("default".into(), |a| format!("{a:.16e}"))),
            ("seed", self.seed.to_string()),
            ("cutoff", self.cutoff.to_string()),
        ];
        match self.command {
            Command::Fbm => {
                out.push(("grid", join(&self.grid.iter().map(|t| format!("{t:.16e}")).collect::<Vec<_>>())));
                out.push(("samples", self.samples.map_or("all".into(), |s| s.to_string())));
            }
            Command::Verify => {
                out.push(("suite", self.suite.clone().unwrap_or_else(|| "all".into())));
                out.push(("trials", self.trials.to_string()));
                out.push(("self-test-negate", self.self_test_negate.to_string()));
            }
            Command::Sieve => {
                out.push(("start", self.start.to_string()));
                out.push(("len", self.len.map_or("none".into(), |l| l.to_string())));
            }
            _ => {}
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(args: &[&str]) -> (Command, Options) {
        let cli = Cli::try_parse_from(std::iter::once("bfree-lab").chain(args.iter().copied())).unwrap();
        (cli.command, cli.options)
    }

    #[test]
    fn counts_accept_float_notation() {
        assert_eq!(parse_count("X", "1e8").unwrap(), 100_000_000);
        assert_eq!(parse_count("X", "1_000").unwrap(), 1000);
        assert!(parse_count("X", "1.5").is_err());
        assert!(parse_count("X", "-3").is_err());
    }

    #[test]
    fn set_descriptors() {
        assert_eq!(SetSpec::parse("squarefree").unwrap(), SetSpec::PowerFree(2));
        assert_eq!(SetSpec::parse("m=5").unwrap(), SetSpec::PowerFree(5));
        assert_eq!(SetSpec::parse("custom:b.txt").unwrap(), SetSpec::Custom("b.txt".into()));
        assert!(SetSpec::parse("primes").is_err());
    }

    #[test]
    fn flags_override_file() {
        let dir = std::env::temp_dir().join(format!("bfree-lab-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.conf");
        std::fs::write(&path, "# run\nX = 1e5\nH = 8,16\nseed = 3\nset = cubefree\n").unwrap();
        let p = path.to_str().unwrap();
        let (cmd, o) = opts(&["moments", "--config", p, "--seed", "9"]);
        let cfg = RunConfig::resolve(cmd, &o).unwrap();
        assert_eq!(cfg.x, 100_000);
        assert_eq!(cfg.h, vec![8, 16]);
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.set, SetSpec::PowerFree(3));
        std::fs::write(&path, "bogus = 1\n").unwrap();
        let (cmd, o) = opts(&["moments", "--config", p]);
        assert!(RunConfig::resolve(cmd, &o).is_err());
    }

    #[test]
    fn echo_omits_threads() {
        let (cmd, a) = opts(&["clt", "--threads", "1"]);
        let (_, b) = opts(&["clt", "--threads", "4"]);
        let a = RunConfig::resolve(cmd, &a).unwrap();
        let b = RunConfig::resolve(cmd, &b).unwrap();
        assert_ne!(a.threads, b.threads);
        assert_eq!(a.echo(), b.echo());
    }
}
