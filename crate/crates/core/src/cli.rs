//! The `qquench` command line: `prepare`, `scan`, `reconstruct`, `sweep`.
//!
//! Every subcommand accepts the same flag set, optionally preloaded from a
//! JSON `--config` file; flags win over the file. The seed resolves as
//! `--seed`, then the config file, then `QQUENCH_SEED`, then
//! [`DEFAULT_SEED`].

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::fidelity::{
    depth_sweep, fidelity_overall, score_reconstruction, ScoringOptions, DEFAULT_PHASE_FLOOR,
    DEFAULT_SEEDS,
};
use crate::io::{self, Format, WaveformFile};
use crate::quench::{scan, NoiseModel, DEFAULT_RELATIVE_SIGMA, DEFAULT_SEED};
use crate::reconstruct::reconstruct_wavefunction;
use crate::state::{
    post_selector, BasisGrid, PostSelector, SelectorKind, WavefunctionState,
    DEFAULT_BIN_WIDTH,
};
use crate::waveforms::builtin_waveform;

pub const SEED_ENV: &str = "QQUENCH_SEED";
pub const DEFAULT_BINS: usize = 20;

#[derive(Debug, Parser)]
#[command(name = "qquench", version, about = "Delta-quench wavefunction measurement simulator")]
pub struct Cli {
    /// JSON file with default values for any of the flags below
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a normalized waveform file from a builtin envelope or an input file
    Prepare(RunConfig),
    /// Quench every bin at each depth and record the response factors
    Scan(RunConfig),
    /// Invert a +theta/-theta response map into the wavefunction
    Reconstruct(RunConfig),
    /// Score reconstructions against the prepared state over a grid of depths
    Sweep(RunConfig),
}

/// Parameters shared by every subcommand. Unset fields fall back to the
/// config file and then to the documented defaults.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "snake_case")]
pub struct RunConfig {
    /// Number of time bins
    #[arg(long)]
    pub bins: Option<usize>,
    /// Bin width in seconds
    #[arg(long)]
    pub bin_width: Option<f64>,
    /// Start of the first bin in seconds
    #[arg(long, allow_hyphen_values = true)]
    pub origin: Option<f64>,
    /// Builtin waveform name
    #[arg(long)]
    pub waveform: Option<String>,
    /// Input file (waveform for prepare/scan/sweep, response map for reconstruct)
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Reference waveform to score a reconstruction against
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Post-selector: `uniform` or `dft:K`
    #[arg(long)]
    pub selector: Option<String>,
    /// Quench depth in radians; repeatable. Accepts forms like `pi/2`, `-3pi/8`
    #[arg(long, allow_hyphen_values = true, value_parser = parse_angle)]
    #[serde(deserialize_with = "angles")]
    pub theta: Vec<f64>,
    /// Relative noise floor (standard deviation of P0 over P0)
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Repeated measurements averaged per probability estimate
    #[arg(long)]
    pub trials: Option<usize>,
    /// Random seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of seeds per sweep depth
    #[arg(long)]
    pub seeds: Option<usize>,
    /// Relative amplitude below which phases are excluded from F_P
    #[arg(long)]
    pub phase_floor: Option<f64>,
    /// Output format (defaults to the output extension, else csv)
    #[arg(long, value_parser = parse_format)]
    pub format: Option<Format>,
    /// Output file; stdout when absent
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Output file for the sweep's response-magnitude map
    #[arg(long)]
    pub map_out: Option<PathBuf>,
}

impl RunConfig {
    /// Fills every unset field of `self` from `base`.
    pub fn or(self, base: RunConfig) -> RunConfig {
        RunConfig {
            bins: self.bins.or(base.bins),
            bin_width: self.bin_width.or(base.bin_width),
            origin: self.origin.or(base.origin),
            waveform: self.waveform.or(base.waveform),
            input: self.input.or(base.input),
            reference: self.reference.or(base.reference),
            selector: self.selector.or(base.selector),
            theta: if self.theta.is_empty() {
                base.theta
            } else {
                self.theta
            },
            sigma: self.sigma.or(base.sigma),
            trials: self.trials.or(base.trials),
            seed: self.seed.or(base.seed),
            seeds: self.seeds.or(base.seeds),
            phase_floor: self.phase_floor.or(base.phase_floor),
            format: self.format.or(base.format),
            out: self.out.or(base.out),
            map_out: self.map_out.or(base.map_out),
        }
    }

    fn grid(&self) -> Result<BasisGrid> {
        BasisGrid::with_origin(
            self.bins.unwrap_or(DEFAULT_BINS),
            self.bin_width.unwrap_or(DEFAULT_BIN_WIDTH),
            self.origin.unwrap_or(0.0),
        )
    }

    fn seed(&self) -> Result<u64> {
        if let Some(seed) = self.seed {
            return Ok(seed);
        }
        match std::env::var(SEED_ENV) {
            Ok(v) => v.trim().parse().map_err(|_| {
                Error::InvalidParameter(format!("{SEED_ENV}=`{v}` is not an unsigned integer"))
            }),
            Err(_) => Ok(DEFAULT_SEED),
        }
    }

    fn noise(&self) -> Result<NoiseModel> {
        NoiseModel::new(
            self.sigma.unwrap_or(DEFAULT_RELATIVE_SIGMA),
            self.seed()?,
            self.trials.unwrap_or(1),
        )
    }

    fn selector_kind(&self) -> Result<SelectorKind> {
        match self.selector.as_deref().unwrap_or("uniform") {
            "uniform" => Ok(SelectorKind::Uniform),
            s => match s.strip_prefix("dft:").map(str::parse::<usize>) {
                Some(Ok(0)) => Ok(SelectorKind::Uniform),
                Some(Ok(k)) => Ok(SelectorKind::DftBin(k)),
                _ => Err(Error::InvalidParameter(format!(
                    "selector must be `uniform` or `dft:K`, got `{s}`"
                ))),
            },
        }
    }

    fn selector(&self, grid: BasisGrid) -> Result<PostSelector> {
        post_selector(grid, self.selector_kind()?)
    }

    fn output_format(&self, out: Option<&Path>) -> Format {
        self.format
            .or_else(|| out.map(Format::from_path))
            .unwrap_or(Format::Csv)
    }

    /// The state named by `--input`, else by `--waveform` on the flag grid.
    fn load_state(&self) -> Result<WavefunctionState> {
        match (&self.input, &self.waveform) {
            (Some(path), _) => io::read_waveform(path),
            (None, Some(name)) => builtin_waveform(name, self.grid()?),
            (None, None) => Err(Error::InvalidParameter(
                "one of --input or --waveform is required".into(),
            )),
        }
    }
}

fn parse_format(s: &str) -> std::result::Result<Format, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Parses a real number or a multiple of pi such as `pi/2`, `-3pi/8`, `0.5pi`.
pub fn parse_angle(s: &str) -> std::result::Result<f64, String> {
    let bad = || format!("`{s}` is not an angle");
    let t = s.trim().to_ascii_lowercase();
    let Some(idx) = t.find("pi") else {
        return t.parse::<f64>().map_err(|_| bad());
    };
    let (coef, rest) = (t[..idx].trim_end_matches('*'), &t[idx + 2..]);
    let coef = match coef {
        "" | "+" => 1.0,
        "-" => -1.0,
        c => c.parse::<f64>().map_err(|_| bad())?,
    };
    let den = match rest {
        "" => 1.0,
        r => r
            .strip_prefix('/')
            .and_then(|d| d.parse::<f64>().ok())
            .ok_or_else(bad)?,
    };
    Ok(coef * PI / den)
}

fn angles<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Angle {
        Number(f64),
        Text(String),
    }
    Vec::<Angle>::deserialize(d)?
        .into_iter()
        .map(|a| match a {
            Angle::Number(x) => Ok(x),
            Angle::Text(s) => parse_angle(&s).map_err(serde::de::Error::custom),
        })
        .collect()
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => Ok(serde_json::from_str(&fs::read_to_string(p)?)?),
        None => Ok(RunConfig::default()),
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => io::write_atomic(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Parses nothing; runs an already parsed command line.
pub fn run(cli: Cli) -> Result<()> {
    let base = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::Prepare(c) => cmd_prepare(&c.or(base)),
        Command::Scan(c) => cmd_scan(&c.or(base)),
        Command::Reconstruct(c) => cmd_reconstruct(&c.or(base)),
        Command::Sweep(c) => cmd_sweep(&c.or(base)),
    }
}

pub fn cmd_prepare(cfg: &RunConfig) -> Result<()> {
    let state = cfg.load_state()?;
    let out = cfg.out.as_deref();
    let text = WaveformFile::from_state(&state).encode(cfg.output_format(out))?;
    emit(out, &text)?;
    let grid = state.grid();
    eprintln!(
        "prepared {} bins over {:e} s, |psi|^2 - 1 = {:e}",
        grid.size(),
        grid.span(),
        state.norm().powi(2) - 1.0
    );
    Ok(())
}

pub fn cmd_scan(cfg: &RunConfig) -> Result<()> {
    let state = cfg.load_state()?;
    let selector = cfg.selector(*state.grid())?;
    let depths = if cfg.theta.is_empty() {
        vec![PI / 2.0, -PI / 2.0]
    } else {
        cfg.theta.clone()
    };
    let map = scan(&state, &selector, &depths, &cfg.noise()?)?;
    let out = cfg.out.as_deref();
    emit(out, &io::encode_response_map(&map, cfg.output_format(out))?)?;
    eprintln!(
        "scanned {} bins x {} depths, P0 = {}",
        map.records().len(),
        depths.len(),
        map.records()[0].baseline_p0
    );
    Ok(())
}

pub fn cmd_reconstruct(cfg: &RunConfig) -> Result<()> {
    let input = cfg.input.as_deref().ok_or_else(|| {
        Error::InvalidParameter("reconstruct needs --input <response map>".into())
    })?;
    let map = io::decode_response_map(
        &fs::read_to_string(input)?,
        cfg.bin_width.unwrap_or(DEFAULT_BIN_WIDTH),
        cfg.origin.unwrap_or(0.0),
        cfg.selector_kind()?,
    )?;
    let rec = reconstruct_wavefunction(&map)?;
    let out = cfg.out.as_deref();
    emit(out, &io::encode_reconstruction(&rec, cfg.output_format(out))?)?;

    let flagged = rec.branch_ok.iter().filter(|ok| !**ok).count();
    if flagged > 0 {
        eprintln!("warning: {flagged} bin(s) flagged outside the inversion branch");
    }
    if let Some(path) = &cfg.reference {
        let reference = io::read_waveform(path)?;
        let f_w = fidelity_overall(&rec.psi, reference.amplitudes())?;
        let opts = ScoringOptions {
            phase_floor: cfg.phase_floor.unwrap_or(DEFAULT_PHASE_FLOOR),
        };
        let s = score_reconstruction(&rec, &reference, &opts)?;
        eprintln!("f_w = {f_w}");
        eprintln!("f_a = {}", s.f_a);
        eprintln!("f_p = {}", s.f_p);
    }
    Ok(())
}

pub fn cmd_sweep(cfg: &RunConfig) -> Result<()> {
    let state = cfg.load_state()?;
    let selector = cfg.selector(*state.grid())?;
    let depths = if cfg.theta.is_empty() {
        [16.0, 8.0, 4.0, 8.0 / 3.0, 2.0].map(|d| PI / d).to_vec()
    } else {
        cfg.theta.clone()
    };
    let opts = ScoringOptions {
        phase_floor: cfg.phase_floor.unwrap_or(DEFAULT_PHASE_FLOOR),
    };
    let sweep = depth_sweep(
        &state,
        &selector,
        &depths,
        &cfg.noise()?,
        cfg.seeds.unwrap_or(DEFAULT_SEEDS),
        &opts,
    )?;

    let out = cfg.out.as_deref();
    let format = cfg.output_format(out);
    let text = match format {
        Format::Csv => io::sweep_to_csv(&sweep)?,
        Format::Json => io::sweep_to_json(&sweep)?,
    };
    emit(out, &text)?;

    let map_out = cfg.map_out.clone().or_else(|| {
        out.map(|p| {
            let stem = p.file_stem().and_then(|s| s.to_str()).unwrap_or("sweep");
            p.with_file_name(format!("{stem}_map.csv"))
        })
    });
    if let Some(path) = map_out {
        io::write_atomic(&path, &io::magnitude_map_to_csv(&sweep)?)?;
    }

    for p in &sweep.points {
        eprintln!(
            "theta = {:.4}: F_W = {:.5} +/- {:.5}, F_A = {:.5}, F_P = {:.5}",
            p.theta, p.fw_mean, p.fw_std, p.fa_mean, p.fp_mean
        );
    }
    Ok(())
}
