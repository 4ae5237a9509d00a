//! On-disk formats: waveform envelopes, response maps, reconstructions and
//! sweep tables, each as CSV and as JSON.
//!
//! Floats are written in shortest round-trip form, so every file reads back
//! to bit-identical values.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fidelity::{SweepPoint, SweepResult};
use crate::quench::{ResponseEntry, ResponseMap, ResponseRecord};
use crate::reconstruct::ReconstructionResult;
use crate::state::{BasisGrid, SelectorKind, WavefunctionState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    /// `.json` means JSON, anything else CSV.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => Format::Json,
            _ => Format::Csv,
        }
    }

    /// Guesses from the first non-blank character of a document.
    pub fn sniff(text: &str) -> Format {
        match text.trim_start().chars().next() {
            Some('{') | Some('[') => Format::Json,
            _ => Format::Csv,
        }
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::InvalidParameter(format!("unknown format `{other}`"))),
        }
    }
}

/// Writes `contents` to a temporary file next to `path`, then renames it
/// into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn to_csv<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Io(e.into_error()))?;
    String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
}

fn from_csv<T: DeserializeOwned>(text: &str, header: &[&str]) -> Result<Vec<T>> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let found: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if found != header {
        return Err(Error::Format(format!(
            "expected CSV header `{}`, found `{}`",
            header.join(","),
            found.join(",")
        )));
    }
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

// ---------------------------------------------------------------- waveform

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveformSample {
    pub t: f64,
    pub amp: f64,
    pub phase: f64,
}

#[derive(Serialize, Deserialize)]
struct WaveformCsvRow {
    t: f64,
    amplitude: f64,
    phase: f64,
}

const WAVEFORM_HEADER: [&str; 3] = ["t", "amplitude", "phase"];

/// Polar samples of an envelope at the bin centers, as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveformFile {
    pub bin_width: f64,
    pub origin: f64,
    pub samples: Vec<WaveformSample>,
}

impl WaveformFile {
    pub fn from_state(state: &WavefunctionState) -> Self {
        let grid = state.grid();
        let samples = state
            .amplitudes()
            .iter()
            .zip(grid.centers())
            .map(|(z, t)| WaveformSample {
                t,
                amp: z.norm(),
                phase: if z.norm() == 0.0 { 0.0 } else { z.arg() },
            })
            .collect();
        Self {
            bin_width: grid.bin_width(),
            origin: grid.origin(),
            samples,
        }
    }

    pub fn grid(&self) -> Result<BasisGrid> {
        BasisGrid::with_origin(self.samples.len(), self.bin_width, self.origin)
    }

    /// Builds the normalized state `amp * exp(i phase)`.
    pub fn to_state(&self) -> Result<WavefunctionState> {
        let grid = self.grid()?;
        let mut raw = Vec::with_capacity(self.samples.len());
        for (u, s) in self.samples.iter().enumerate() {
            if !(s.amp.is_finite() && s.phase.is_finite()) {
                return Err(Error::NonFiniteInput { index: u });
            }
            if s.amp < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "negative amplitude {} at row {u}",
                    s.amp
                )));
            }
            raw.push(Complex64::from_polar(s.amp, s.phase));
        }
        WavefunctionState::new(grid, raw)
    }

    pub fn to_csv(&self) -> Result<String> {
        to_csv(self.samples.iter().map(|s| WaveformCsvRow {
            t: s.t,
            amplitude: s.amp,
            phase: s.phase,
        }))
    }

    /// Parses the CSV form. The grid is inferred from the sample instants,
    /// which must be increasing and evenly spaced bin centers.
    pub fn from_csv(text: &str) -> Result<Self> {
        let rows: Vec<WaveformCsvRow> = from_csv(text, &WAVEFORM_HEADER)?;
        if rows.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "waveform needs at least 2 rows, got {}",
                rows.len()
            )));
        }
        let bin_width = rows[1].t - rows[0].t;
        if !(bin_width > 0.0) {
            return Err(Error::Format("waveform rows must be ordered by t".into()));
        }
        for (u, w) in rows.windows(2).enumerate() {
            let step = w[1].t - w[0].t;
            if !(step > 0.0) {
                return Err(Error::Format("waveform rows must be ordered by t".into()));
            }
            if (step - bin_width).abs() > 1e-6 * bin_width {
                return Err(Error::Format(format!(
                    "uneven time step between rows {u} and {}",
                    u + 1
                )));
            }
        }
        let span = rows[rows.len() - 1].t - rows[0].t;
        let bin_width = span / (rows.len() - 1) as f64;
        Ok(Self {
            bin_width,
            origin: rows[0].t - 0.5 * bin_width,
            samples: rows
                .into_iter()
                .map(|r| WaveformSample {
                    t: r.t,
                    amp: r.amplitude,
                    phase: r.phase,
                })
                .collect(),
        })
    }

    pub fn to_json(&self) -> Result<String> {
        to_json(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn encode(&self, format: Format) -> Result<String> {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }

    pub fn decode(text: &str) -> Result<Self> {
        match Format::sniff(text) {
            Format::Csv => Self::from_csv(text),
            Format::Json => Self::from_json(text),
        }
    }
}

pub fn read_waveform(path: &Path) -> Result<WavefunctionState> {
    WaveformFile::decode(&fs::read_to_string(path)?)?.to_state()
}

// ------------------------------------------------------------ response map

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResponseRow {
    pub bin: usize,
    pub theta: f64,
    #[serde(rename = "P0")]
    pub p0: f64,
    #[serde(rename = "Pr")]
    pub pr: f64,
    pub p: f64,
}

const RESPONSE_HEADER: [&str; 5] = ["bin", "theta", "P0", "Pr", "p"];

pub fn response_map_to_csv(map: &ResponseMap) -> Result<String> {
    to_csv(map.records().iter().flat_map(|r| {
        r.entries.iter().map(move |e| ResponseRow {
            bin: r.bin,
            theta: e.theta,
            p0: r.baseline_p0,
            pr: e.measured_pr,
            p: e.response,
        })
    }))
}

/// Parses the CSV form. The CSV carries neither a time axis nor the
/// post-selector, so those are supplied by the caller; the bin count is
/// inferred.
pub fn response_map_from_csv(
    text: &str,
    bin_width: f64,
    origin: f64,
    selector: SelectorKind,
) -> Result<ResponseMap> {
    let rows: Vec<ResponseRow> = from_csv(text, &RESPONSE_HEADER)?;
    let n_bins = rows.iter().map(|r| r.bin + 1).max().unwrap_or(0);
    let grid = BasisGrid::with_origin(n_bins, bin_width, origin)?;
    let mut records: Vec<ResponseRecord> = (0..n_bins)
        .map(|bin| ResponseRecord {
            bin,
            baseline_p0: f64::NAN,
            entries: Vec::new(),
        })
        .collect();
    for row in &rows {
        let rec = &mut records[row.bin];
        if rec.entries.is_empty() {
            rec.baseline_p0 = row.p0;
        } else if rec.baseline_p0.to_bits() != row.p0.to_bits() {
            return Err(Error::Format(format!("bin {} has inconsistent P0", row.bin)));
        }
        rec.entries.push(ResponseEntry {
            theta: row.theta,
            measured_pr: row.pr,
            response: row.p,
        });
    }
    let depths = records
        .first()
        .map(|r| r.entries.iter().map(|e| e.theta).collect())
        .unwrap_or_default();
    ResponseMap::new(grid, selector, depths, records)
}

pub fn response_map_to_json(map: &ResponseMap) -> Result<String> {
    to_json(map)
}

pub fn response_map_from_json(text: &str) -> Result<ResponseMap> {
    Ok(serde_json::from_str(text)?)
}

pub fn encode_response_map(map: &ResponseMap, format: Format) -> Result<String> {
    match format {
        Format::Csv => response_map_to_csv(map),
        Format::Json => response_map_to_json(map),
    }
}

/// Decodes either form; the fallbacks only apply to CSV input.
pub fn decode_response_map(
    text: &str,
    bin_width: f64,
    origin: f64,
    selector: SelectorKind,
) -> Result<ResponseMap> {
    match Format::sniff(text) {
        Format::Csv => response_map_from_csv(text, bin_width, origin, selector),
        Format::Json => response_map_from_json(text),
    }
}

// ---------------------------------------------------------- reconstruction

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionRow {
    pub bin: usize,
    pub t: f64,
    pub re: f64,
    pub im: f64,
    pub abs2: f64,
    pub phase: f64,
    pub branch_ok: bool,
}

const RECONSTRUCTION_HEADER: [&str; 7] = ["bin", "t", "re", "im", "abs2", "phase", "branch_ok"];

/// One row per bin with the normalized wavefunction.
pub fn reconstruction_rows(rec: &ReconstructionResult) -> Vec<ReconstructionRow> {
    (0..rec.len())
        .map(|u| ReconstructionRow {
            bin: u,
            t: rec.grid.center(u),
            re: rec.psi[u].re,
            im: rec.psi[u].im,
            abs2: rec.psi[u].norm_sqr(),
            phase: rec.phase_env[u],
            branch_ok: rec.branch_ok[u],
        })
        .collect()
}

pub fn reconstruction_to_csv(rec: &ReconstructionResult) -> Result<String> {
    to_csv(reconstruction_rows(rec))
}

pub fn reconstruction_rows_from_csv(text: &str) -> Result<Vec<ReconstructionRow>> {
    from_csv(text, &RECONSTRUCTION_HEADER)
}

pub fn reconstruction_to_json(rec: &ReconstructionResult) -> Result<String> {
    to_json(rec)
}

pub fn reconstruction_from_json(text: &str) -> Result<ReconstructionResult> {
    Ok(serde_json::from_str(text)?)
}

pub fn encode_reconstruction(rec: &ReconstructionResult, format: Format) -> Result<String> {
    match format {
        Format::Csv => reconstruction_to_csv(rec),
        Format::Json => reconstruction_to_json(rec),
    }
}

// ------------------------------------------------------------------- sweep

const SWEEP_HEADER: [&str; 8] = [
    "theta", "seed_count", "fw_mean", "fw_std", "fp_mean", "fp_std", "fa_mean", "fa_std",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MagnitudeRow {
    pub bin: usize,
    pub theta: f64,
    pub abs_p: f64,
}

const MAGNITUDE_HEADER: [&str; 3] = ["bin", "theta", "abs_p"];

pub fn sweep_to_csv(sweep: &SweepResult) -> Result<String> {
    to_csv(sweep.points.iter())
}

pub fn sweep_points_from_csv(text: &str) -> Result<Vec<SweepPoint>> {
    from_csv(text, &SWEEP_HEADER)
}

pub fn magnitude_rows(sweep: &SweepResult) -> Vec<MagnitudeRow> {
    sweep
        .response_magnitudes
        .iter()
        .enumerate()
        .flat_map(|(bin, row)| {
            row.iter().zip(&sweep.depths).map(move |(&abs_p, &theta)| MagnitudeRow {
                bin,
                theta,
                abs_p,
            })
        })
        .collect()
}

pub fn magnitude_map_to_csv(sweep: &SweepResult) -> Result<String> {
    to_csv(magnitude_rows(sweep))
}

pub fn magnitude_rows_from_csv(text: &str) -> Result<Vec<MagnitudeRow>> {
    from_csv(text, &MAGNITUDE_HEADER)
}

pub fn sweep_to_json(sweep: &SweepResult) -> Result<String> {
    to_json(sweep)
}

pub fn sweep_from_json(text: &str) -> Result<SweepResult> {
    Ok(serde_json::from_str(text)?)
}
