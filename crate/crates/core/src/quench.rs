//! Phase quench of a single bin, post-selected projection, and the noisy
//! (bin x depth) scan that produces response factors.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{inner_product, BasisGrid, PostSelector, SelectorKind, WavefunctionState};

/// Baselines below this are treated as a post-selector orthogonal to the
/// state.
pub const BASELINE_FLOOR: f64 = 1e-6;

/// Measured noise floor of the reference experiment, as a fraction of `P0`.
pub const DEFAULT_RELATIVE_SIGMA: f64 = 0.002;

/// Seed used whenever none is supplied.
pub const DEFAULT_SEED: u64 = 20_191_105;

/// Multiply bin `bin` by `exp(i depth)`, leave every other bin untouched.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuenchConfig {
    pub bin: usize,
    pub depth: f64,
}

impl QuenchConfig {
    pub fn new(bin: usize, depth: f64) -> Self {
        Self { bin, depth }
    }
}

pub fn apply_quench(state: &WavefunctionState, q: QuenchConfig) -> Result<WavefunctionState> {
    let n = state.len();
    if q.bin >= n {
        return Err(Error::IndexOutOfRange { index: q.bin, size: n });
    }
    if !q.depth.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "quench depth must be finite, got {}",
            q.depth
        )));
    }
    let mut amplitudes = state.amplitudes().to_vec();
    if q.depth != 0.0 {
        amplitudes[q.bin] *= Complex64::cis(q.depth);
    }
    Ok(WavefunctionState::from_unitary_image(*state.grid(), amplitudes))
}

/// `|<b0|psi>|^2`.
pub fn projection_probability(state: &WavefunctionState, selector: &PostSelector) -> Result<f64> {
    Ok(inner_product(selector, state)?.norm_sqr())
}

/// `p = 1 - Pr / P0`.
pub fn response_factor(measured_pr: f64, baseline_p0: f64) -> Result<f64> {
    if !(baseline_p0 >= BASELINE_FLOOR) {
        return Err(Error::DegenerateBaseline {
            p0: baseline_p0,
            selector: None,
        });
    }
    Ok(1.0 - measured_pr / baseline_p0)
}

/// Aggregate Gaussian fluctuation of every probability estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    relative_sigma: f64,
    seed: u64,
    trials: usize,
}

impl NoiseModel {
    pub fn new(relative_sigma: f64, seed: u64, trials: usize) -> Result<Self> {
        if !(relative_sigma.is_finite() && relative_sigma >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "relative sigma must be finite and >= 0, got {relative_sigma}"
            )));
        }
        if trials == 0 {
            return Err(Error::InvalidParameter("trials must be positive".into()));
        }
        Ok(Self {
            relative_sigma,
            seed,
            trials,
        })
    }

    pub fn noiseless() -> Self {
        Self {
            relative_sigma: 0.0,
            seed: DEFAULT_SEED,
            trials: 1,
        }
    }

    pub fn relative_sigma(&self) -> f64 {
        self.relative_sigma
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn trials(&self) -> usize {
        self.trials
    }

    pub fn is_noiseless(&self) -> bool {
        self.relative_sigma == 0.0
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            relative_sigma: DEFAULT_RELATIVE_SIGMA,
            seed: DEFAULT_SEED,
            trials: 1,
        }
    }
}

/// Identifies one probability estimate inside a scan. Together with the noise
/// seed it fully determines the random draws, independent of the order in
/// which measurements are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MeasurementKey {
    Baseline,
    Quench { bin: usize, depth_index: usize },
}

impl MeasurementKey {
    fn stream(self) -> u64 {
        match self {
            MeasurementKey::Baseline => 0,
            MeasurementKey::Quench { bin, depth_index } => {
                ((bin as u64 + 1) << 32) | (depth_index as u64 & 0xffff_ffff)
            }
        }
    }
}

/// Mean of `noise.trials` draws of `true_pr + eps`, with
/// `eps ~ Normal(0, relative_sigma * baseline_p0)` and each draw clamped at 0.
///
/// Trial `k` of measurement `key` is word position `k` of ChaCha stream
/// `key`, keyed by the noise seed.
pub fn measure_with_noise(
    true_pr: f64,
    baseline_p0: f64,
    noise: &NoiseModel,
    key: MeasurementKey,
) -> f64 {
    if noise.is_noiseless() {
        return true_pr;
    }
    let sigma = noise.relative_sigma * baseline_p0;
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    rng.set_stream(key.stream());
    let total: f64 = (0..noise.trials)
        .map(|_| {
            let eps: f64 = StandardNormal.sample(&mut rng);
            (true_pr + sigma * eps).max(0.0)
        })
        .sum();
    total / noise.trials as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResponseEntry {
    pub theta: f64,
    pub measured_pr: f64,
    pub response: f64,
}

/// Everything measured while quenching one bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseRecord {
    pub bin: usize,
    pub baseline_p0: f64,
    pub entries: Vec<ResponseEntry>,
}

impl ResponseRecord {
    pub fn response_at(&self, theta: f64) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.theta == theta)
            .map(|e| e.response)
    }
}

/// Response factors for every bin at a common set of quench depths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawResponseMap")]
pub struct ResponseMap {
    grid: BasisGrid,
    selector: SelectorKind,
    depths: Vec<f64>,
    records: Vec<ResponseRecord>,
}

#[derive(Deserialize)]
struct RawResponseMap {
    grid: BasisGrid,
    #[serde(default = "uniform_kind")]
    selector: SelectorKind,
    depths: Vec<f64>,
    records: Vec<ResponseRecord>,
}

impl TryFrom<RawResponseMap> for ResponseMap {
    type Error = Error;

    fn try_from(raw: RawResponseMap) -> Result<Self> {
        ResponseMap::new(raw.grid, raw.selector, raw.depths, raw.records)
    }
}

fn uniform_kind() -> SelectorKind {
    SelectorKind::Uniform
}

impl ResponseMap {
    /// Checks that there is exactly one record per bin, in bin order, and
    /// that every record carries the shared depth list.
    pub fn new(
        grid: BasisGrid,
        selector: SelectorKind,
        depths: Vec<f64>,
        records: Vec<ResponseRecord>,
    ) -> Result<Self> {
        if records.len() != grid.size() {
            return Err(Error::DimensionMismatch {
                expected: grid.size(),
                actual: records.len(),
            });
        }
        for (u, r) in records.iter().enumerate() {
            if r.bin != u {
                return Err(Error::Format(format!(
                    "record {u} belongs to bin {}; records must cover every bin in order",
                    r.bin
                )));
            }
            let same = r.entries.len() == depths.len()
                && r.entries.iter().zip(&depths).all(|(e, &d)| e.theta == d);
            if !same {
                return Err(Error::Format(format!(
                    "record for bin {u} does not carry the shared depth list"
                )));
            }
        }
        Ok(Self {
            grid,
            selector,
            depths,
            records,
        })
    }

    pub fn grid(&self) -> &BasisGrid {
        &self.grid
    }

    /// The post-selector the responses were measured against.
    pub fn selector(&self) -> SelectorKind {
        self.selector
    }

    pub fn depths(&self) -> &[f64] {
        &self.depths
    }

    pub fn records(&self) -> &[ResponseRecord] {
        &self.records
    }

    /// Response factors of every bin at depth slot `depth_index`.
    pub fn responses(&self, depth_index: usize) -> Vec<f64> {
        self.records
            .iter()
            .map(|r| r.entries[depth_index].response)
            .collect()
    }
}

/// Measures `P0` once, then `Pr_n(theta)` for every bin `n` and every depth,
/// and converts each into a response factor against the shared baseline.
pub fn scan(
    state: &WavefunctionState,
    selector: &PostSelector,
    depths: &[f64],
    noise: &NoiseModel,
) -> Result<ResponseMap> {
    if depths.is_empty() {
        return Err(Error::InvalidParameter("no quench depths given".into()));
    }
    if let Some(&d) = depths.iter().find(|d| !d.is_finite() || **d == 0.0) {
        return Err(Error::InvalidParameter(format!(
            "quench depths must be finite and nonzero, got {d}"
        )));
    }
    let degenerate = |p0: f64| Error::DegenerateBaseline {
        p0,
        selector: Some(selector.kind()),
    };

    let true_p0 = projection_probability(state, selector)?;
    if true_p0 < BASELINE_FLOOR {
        return Err(degenerate(true_p0));
    }
    let p0 = measure_with_noise(true_p0, true_p0, noise, MeasurementKey::Baseline);
    if p0 < BASELINE_FLOOR {
        return Err(degenerate(p0));
    }

    let records = (0..state.len())
        .into_par_iter()
        .map(|bin| {
            let entries = depths
                .iter()
                .enumerate()
                .map(|(depth_index, &theta)| {
                    let quenched = apply_quench(state, QuenchConfig::new(bin, theta))?;
                    let true_pr = projection_probability(&quenched, selector)?;
                    let key = MeasurementKey::Quench { bin, depth_index };
                    let measured_pr = measure_with_noise(true_pr, true_p0, noise, key);
                    let response = response_factor(measured_pr, p0).map_err(|_| degenerate(p0))?;
                    Ok(ResponseEntry {
                        theta,
                        measured_pr,
                        response,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(ResponseRecord {
                bin,
                baseline_p0: p0,
                entries,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    ResponseMap::new(*state.grid(), selector.kind(), depths.to_vec(), records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{dft_post_selector, make_state, uniform_post_selector};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn flat(n: usize) -> WavefunctionState {
        make_state(BasisGrid::new(n).unwrap(), vec![c(1.0, 0.0); n]).unwrap()
    }

    #[test]
    fn zero_depth_is_identity() {
        let s = flat(4);
        assert_eq!(apply_quench(&s, QuenchConfig::new(2, 0.0)).unwrap(), s);
    }

    #[test]
    fn pi_quench_flips_sign() {
        let s = flat(2);
        let q = apply_quench(&s, QuenchConfig::new(0, PI)).unwrap();
        assert_abs_diff_eq!(q.amplitudes()[0].re, -FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(q.amplitudes()[0].im, 0.0, epsilon = 1e-15);
        assert_eq!(q.amplitudes()[1], s.amplitudes()[1]);
    }

    #[test]
    fn half_pi_quench_multiplies_by_i() {
        let s = make_state(BasisGrid::new(2).unwrap(), vec![c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        let q = apply_quench(&s, QuenchConfig::new(0, FRAC_PI_2)).unwrap();
        assert_abs_diff_eq!(q.amplitudes()[0].re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(q.amplitudes()[0].im, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn quench_rejects_bad_bin() {
        assert!(matches!(
            apply_quench(&flat(4), QuenchConfig::new(4, 1.0)),
            Err(Error::IndexOutOfRange { index: 4, size: 4 })
        ));
    }

    #[test]
    fn projection_examples() {
        let s = flat(4);
        let sel = uniform_post_selector(*s.grid());
        assert_abs_diff_eq!(projection_probability(&s, &sel).unwrap(), 1.0, epsilon = 1e-15);

        // <b0|M psi> = (1/2)(-1/2 + 3/2) = 1/2
        let q = apply_quench(&s, QuenchConfig::new(0, PI)).unwrap();
        assert_abs_diff_eq!(projection_probability(&q, &sel).unwrap(), 0.25, epsilon = 1e-15);

        let q0 = apply_quench(&s, QuenchConfig::new(3, 0.0)).unwrap();
        assert_eq!(
            projection_probability(&q0, &sel).unwrap(),
            projection_probability(&s, &sel).unwrap()
        );
    }

    #[test]
    fn response_factor_examples() {
        assert_eq!(response_factor(0.3, 0.3).unwrap(), 0.0);
        // |1 + (i-1)/4|^2 = (3/4)^2 + (1/4)^2 = 10/16
        assert_abs_diff_eq!(response_factor(10.0 / 16.0, 1.0).unwrap(), 0.375, epsilon = 1e-15);
        assert_abs_diff_eq!(response_factor(0.25, 1.0).unwrap(), 0.75, epsilon = 1e-15);
        assert!(matches!(
            response_factor(0.1, 0.0),
            Err(Error::DegenerateBaseline { .. })
        ));
        assert!(response_factor(0.1, 1e-7).is_err());
    }

    #[test]
    fn uniform_state_responses() {
        let s = flat(4);
        let sel = uniform_post_selector(*s.grid());
        for bin in 0..4 {
            let pr = |theta| {
                let q = apply_quench(&s, QuenchConfig::new(bin, theta)).unwrap();
                projection_probability(&q, &sel).unwrap()
            };
            assert_abs_diff_eq!(response_factor(pr(FRAC_PI_2), 1.0).unwrap(), 0.375, epsilon = 1e-15);
            assert_abs_diff_eq!(response_factor(pr(PI), 1.0).unwrap(), 0.75, epsilon = 1e-15);
        }
    }

    #[test]
    fn noiseless_measurement_is_exact() {
        let m = measure_with_noise(0.123, 0.5, &NoiseModel::noiseless(), MeasurementKey::Baseline);
        assert_eq!(m, 0.123);
    }

    #[test]
    fn noisy_measurement_is_keyed() {
        let noise = NoiseModel::new(0.01, 42, 3).unwrap();
        let key = MeasurementKey::Quench { bin: 3, depth_index: 1 };
        let a = measure_with_noise(0.5, 0.5, &noise, key);
        let b = measure_with_noise(0.5, 0.5, &noise, key);
        assert_eq!(a.to_bits(), b.to_bits());
        assert_ne!(a, measure_with_noise(0.5, 0.5, &noise, MeasurementKey::Baseline));
        assert_ne!(a, measure_with_noise(0.5, 0.5, &noise.with_seed(43), key));
    }

    #[test]
    fn noisy_mean_within_standard_error() {
        // sigma * P0 = 0.002 * 0.5 = 0.001; standard error over 1e4 draws is 1e-5
        let noise = NoiseModel::new(0.002, 7, 10_000).unwrap();
        let m = measure_with_noise(0.5, 0.5, &noise, MeasurementKey::Baseline);
        assert!((m - 0.5).abs() < 5.0 * 0.001 / 100.0, "mean {m}");
    }

    #[test]
    fn negative_draws_are_clamped() {
        let noise = NoiseModel::new(1.0, 1, 1000).unwrap();
        for bin in 0..20 {
            let key = MeasurementKey::Quench { bin, depth_index: 0 };
            assert!(measure_with_noise(0.0, 1.0, &noise, key) >= 0.0);
        }
    }

    #[test]
    fn noise_model_validation() {
        assert!(NoiseModel::new(-0.1, 0, 1).is_err());
        assert!(NoiseModel::new(f64::NAN, 0, 1).is_err());
        assert!(NoiseModel::new(0.1, 0, 0).is_err());
        assert_eq!(NoiseModel::default().relative_sigma(), 0.002);
    }

    #[test]
    fn noiseless_scan_of_uniform_state() {
        let s = flat(4);
        let sel = uniform_post_selector(*s.grid());
        let map = scan(&s, &sel, &[FRAC_PI_2, -FRAC_PI_2], &NoiseModel::noiseless()).unwrap();
        assert_eq!(map.records().len(), 4);
        for (u, r) in map.records().iter().enumerate() {
            assert_eq!(r.bin, u);
            for e in &r.entries {
                assert_abs_diff_eq!(e.response, 0.375, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn scan_baseline_is_shared() {
        let s = crate::waveforms::builtin_waveform("gaussian_linear_chirp", BasisGrid::new(20).unwrap()).unwrap();
        let sel = uniform_post_selector(*s.grid());
        let map = scan(&s, &sel, &[1.0, -1.0], &NoiseModel::default()).unwrap();
        let p0 = map.records()[0].baseline_p0;
        assert!(map.records().iter().all(|r| r.baseline_p0 == p0));
    }

    #[test]
    fn scan_rejects_orthogonal_selector() {
        let s = flat(4);
        let sel = dft_post_selector(*s.grid(), 1).unwrap();
        let err = scan(&s, &sel, &[FRAC_PI_2, -FRAC_PI_2], &NoiseModel::noiseless()).unwrap_err();
        assert!(matches!(err, Error::DegenerateBaseline { .. }));
        assert!(err.to_string().contains("dft:1"));
    }

    #[test]
    fn scan_rejects_bad_depths() {
        let s = flat(4);
        let sel = uniform_post_selector(*s.grid());
        let noise = NoiseModel::noiseless();
        assert!(scan(&s, &sel, &[], &noise).is_err());
        assert!(scan(&s, &sel, &[0.0, 1.0], &noise).is_err());
        assert!(scan(&s, &sel, &[f64::NAN], &noise).is_err());
    }

    #[test]
    fn response_map_validates_records() {
        let grid = BasisGrid::new(2).unwrap();
        let rec = |bin, theta| ResponseRecord {
            bin,
            baseline_p0: 0.5,
            entries: vec![ResponseEntry { theta, measured_pr: 0.4, response: 0.2 }],
        };
        assert!(ResponseMap::new(grid, SelectorKind::Uniform, vec![1.0], vec![rec(0, 1.0), rec(1, 1.0)]).is_ok());
        assert!(ResponseMap::new(grid, SelectorKind::Uniform, vec![1.0], vec![rec(0, 1.0)]).is_err());
        assert!(ResponseMap::new(grid, SelectorKind::Uniform, vec![1.0], vec![rec(1, 1.0), rec(0, 1.0)]).is_err());
        assert!(ResponseMap::new(grid, SelectorKind::Uniform, vec![1.0], vec![rec(0, 1.0), rec(1, 2.0)]).is_err());
    }
}
