//! Overall, amplitude and phase fidelities, and the quench-depth sweep that
//! scores noisy reconstructions against the prepared state.
//!
//! All integrals are Riemann sums on the uniform grid; the bin width cancels
//! in every ratio and is omitted.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quench::{scan, NoiseModel};
use crate::reconstruct::{phase_envelope, reconstruct_wavefunction, ReconstructionResult};
use crate::state::{l2_norm, PostSelector, WavefunctionState};

/// Seeds per sweep point when none is given.
pub const DEFAULT_SEEDS: usize = 32;

/// Relative amplitude below which a reconstructed bin's phase is left out of
/// `F_P`.
pub const DEFAULT_PHASE_FLOOR: f64 = 0.1;

/// `|sum psi conj(psi_in)| / (|psi| |psi_in|)`.
pub fn fidelity_overall(psi: &[Complex64], psi_in: &[Complex64]) -> Result<f64> {
    check_lengths(psi.len(), psi_in.len())?;
    let (n, n_in) = (l2_norm(psi), l2_norm(psi_in));
    if n == 0.0 || n_in == 0.0 {
        return Err(Error::ZeroVector);
    }
    let overlap: Complex64 = psi.iter().zip(psi_in).map(|(a, b)| a * b.conj()).sum();
    Ok(overlap.norm() / (n * n_in))
}

/// Normalized cross-correlation of two phase envelopes.
///
/// Two identically zero envelopes score 1 (the flat phase was recovered
/// exactly); a zero envelope against a nonzero one scores 0.
pub fn fidelity_phase(phi: &[f64], phi_in: &[f64]) -> Result<f64> {
    check_lengths(phi.len(), phi_in.len())?;
    let (e, e_in) = (energy(phi), energy(phi_in));
    if e == 0.0 && e_in == 0.0 {
        return Ok(1.0);
    }
    if e == 0.0 || e_in == 0.0 {
        return Ok(0.0);
    }
    Ok(dot(phi, phi_in) / (e * e_in).sqrt())
}

/// Normalized cross-correlation of two nonnegative amplitude envelopes.
pub fn fidelity_amplitude(a: &[f64], a_in: &[f64]) -> Result<f64> {
    check_lengths(a.len(), a_in.len())?;
    let (e, e_in) = (energy(a), energy(a_in));
    if e == 0.0 || e_in == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok(dot(a, a_in) / (e * e_in).sqrt())
}

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch {
            expected: b,
            actual: a,
        });
    }
    Ok(())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn energy(a: &[f64]) -> f64 {
    dot(a, a)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelityScores {
    pub f_w: f64,
    pub f_p: f64,
    pub f_a: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoringOptions {
    /// Bins whose reconstructed amplitude is below this fraction of the peak
    /// are excluded from `F_P`.
    pub phase_floor: f64,
}

impl Default for ScoringOptions {
    fn default() -> Self {
        Self {
            phase_floor: DEFAULT_PHASE_FLOOR,
        }
    }
}

/// Scores a reconstruction against the prepared state.
///
/// `F_W` uses every bin. The reconstruction carries an arbitrary global phase,
/// so it is first rotated onto the reference (phase of the overlap) before
/// any phase comparison. `F_A` uses the branch-valid bins and is 0 when none
/// are left; `F_P` additionally drops phase nodes of either envelope and
/// reconstructed bins under `phase_floor` of the peak amplitude.
pub fn score_reconstruction(
    rec: &ReconstructionResult,
    reference: &WavefunctionState,
    opts: &ScoringOptions,
) -> Result<FidelityScores> {
    let psi_in = reference.amplitudes();
    let f_w = fidelity_overall(&rec.psi, psi_in)?;

    let overlap: Complex64 = rec.psi.iter().zip(psi_in).map(|(a, b)| a.conj() * b).sum();
    let rotation = if overlap.norm() > 0.0 {
        overlap / overlap.norm()
    } else {
        Complex64::new(1.0, 0.0)
    };
    let aligned: Vec<Complex64> = rec.psi.iter().map(|z| z * rotation).collect();

    let peak = aligned.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let rec_phase = phase_envelope(&aligned);
    let ref_phase = phase_envelope(psi_in);

    let (mut a, mut a_in, mut phi, mut phi_in) = (vec![], vec![], vec![], vec![]);
    for u in 0..aligned.len() {
        if !rec.branch_ok[u] {
            continue;
        }
        a.push(aligned[u].norm());
        a_in.push(psi_in[u].norm());
        let resolvable = aligned[u].norm() >= opts.phase_floor * peak;
        if resolvable && !rec_phase.nodes[u] && !ref_phase.nodes[u] {
            phi.push(rec_phase.phases[u]);
            phi_in.push(ref_phase.phases[u]);
        }
    }
    Ok(FidelityScores {
        f_w,
        f_p: fidelity_phase(&phi, &phi_in)?,
        f_a: masked_amplitude_fidelity(&a, &a_in)?,
    })
}

/// `F_A` over a branch mask, which may leave nothing to compare: no bins
/// scores 0, otherwise zero envelopes follow the `F_P` convention.
fn masked_amplitude_fidelity(a: &[f64], a_in: &[f64]) -> Result<f64> {
    match (energy(a) == 0.0, energy(a_in) == 0.0) {
        (false, false) => fidelity_amplitude(a, a_in),
        (true, true) if !a.is_empty() => Ok(1.0),
        _ => Ok(0.0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub theta: f64,
    pub seed_count: usize,
    pub fw_mean: f64,
    pub fw_std: f64,
    pub fp_mean: f64,
    pub fp_std: f64,
    pub fa_mean: f64,
    pub fa_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub depths: Vec<f64>,
    pub points: Vec<SweepPoint>,
    /// Noiseless `|p(t0, theta)|`, indexed `[bin][depth]`.
    pub response_magnitudes: Vec<Vec<f64>>,
}

/// Sample mean and (n-1) standard deviation; the deviation is 0 for a single
/// sample.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Scans at `{+theta, -theta}` for every depth and every seed, reconstructs,
/// and aggregates the three fidelities.
///
/// Seed `i` of a point uses noise seed `noise.seed() + i`; the same seeds are
/// reused across depths.
pub fn depth_sweep(
    state: &WavefunctionState,
    selector: &PostSelector,
    depths: &[f64],
    noise: &NoiseModel,
    n_seeds: usize,
    opts: &ScoringOptions,
) -> Result<SweepResult> {
    if depths.is_empty() {
        return Err(Error::InvalidParameter("no sweep depths given".into()));
    }
    if let Some(&d) = depths
        .iter()
        .find(|&&d| !(d > 0.0 && d <= std::f64::consts::PI))
    {
        return Err(Error::InvalidParameter(format!(
            "sweep depths must lie in (0, pi], got {d}"
        )));
    }
    if n_seeds == 0 || (!noise.is_noiseless() && n_seeds < 2) {
        return Err(Error::InvalidParameter(format!(
            "noisy sweeps need at least 2 seeds, got {n_seeds}"
        )));
    }

    let jobs: Vec<(usize, usize)> = (0..depths.len())
        .flat_map(|d| (0..n_seeds).map(move |s| (d, s)))
        .collect();
    let scores = jobs
        .par_iter()
        .map(|&(d, s)| {
            let theta = depths[d];
            let run_noise = noise.with_seed(noise.seed().wrapping_add(s as u64));
            let map = scan(state, selector, &[theta, -theta], &run_noise)?;
            let rec = reconstruct_wavefunction(&map)?;
            score_reconstruction(&rec, state, opts)
        })
        .collect::<Result<Vec<_>>>()?;

    let points = depths
        .iter()
        .zip(scores.chunks(n_seeds))
        .map(|(&theta, chunk)| {
            let pick = |f: fn(&FidelityScores) -> f64| mean_std(&chunk.iter().map(f).collect::<Vec<_>>());
            let (fw_mean, fw_std) = pick(|s| s.f_w);
            let (fp_mean, fp_std) = pick(|s| s.f_p);
            let (fa_mean, fa_std) = pick(|s| s.f_a);
            SweepPoint {
                theta,
                seed_count: n_seeds,
                fw_mean,
                fw_std,
                fp_mean,
                fp_std,
                fa_mean,
                fa_std,
            }
        })
        .collect();

    Ok(SweepResult {
        depths: depths.to_vec(),
        points,
        response_magnitudes: response_magnitudes(state, selector, depths)?,
    })
}

/// Noiseless `|p(t0, theta)|` over every bin and depth.
pub fn response_magnitudes(
    state: &WavefunctionState,
    selector: &PostSelector,
    depths: &[f64],
) -> Result<Vec<Vec<f64>>> {
    let map = scan(state, selector, depths, &NoiseModel::noiseless())?;
    Ok(map
        .records()
        .iter()
        .map(|r| r.entries.iter().map(|e| e.response.abs()).collect())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{uniform_post_selector, BasisGrid};
    use crate::waveforms::Waveform;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn overall_examples() {
        let v = [c(0.6, 0.0), c(0.0, 0.8)];
        assert_abs_diff_eq!(fidelity_overall(&v, &v).unwrap(), 1.0, epsilon = 1e-15);
        let w = [c(0.0, 0.8), c(0.0, 0.0)];
        assert_eq!(fidelity_overall(&[c(0.0, 0.0), c(1.0, 0.0)], &w).unwrap(), 0.0);
        let rot: Vec<_> = v.iter().map(|z| z * Complex64::cis(1.234) * 3.0).collect();
        assert_abs_diff_eq!(fidelity_overall(&rot, &v).unwrap(), 1.0, epsilon = 1e-15);
        assert!(matches!(
            fidelity_overall(&[c(0.0, 0.0); 2], &v),
            Err(Error::ZeroVector)
        ));
        assert!(fidelity_overall(&v[..1], &v).is_err());
    }

    #[test]
    fn phase_examples() {
        let phi = [0.3, -1.2, 2.0];
        assert_abs_diff_eq!(fidelity_phase(&phi, &phi).unwrap(), 1.0, epsilon = 1e-15);
        let neg: Vec<f64> = phi.iter().map(|x| -x).collect();
        assert_abs_diff_eq!(fidelity_phase(&neg, &phi).unwrap(), -1.0, epsilon = 1e-15);
        assert_eq!(fidelity_phase(&[0.0; 3], &[0.0; 3]).unwrap(), 1.0);
        assert_eq!(fidelity_phase(&[0.0; 3], &phi).unwrap(), 0.0);
        assert_eq!(fidelity_phase(&[], &[]).unwrap(), 1.0);
    }

    #[test]
    fn amplitude_examples() {
        let a = [0.1, 0.5, 0.2];
        assert_abs_diff_eq!(fidelity_amplitude(&a, &a).unwrap(), 1.0, epsilon = 1e-15);
        assert_eq!(fidelity_amplitude(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        let twice: Vec<f64> = a.iter().map(|x| 2.0 * x).collect();
        assert_abs_diff_eq!(fidelity_amplitude(&twice, &a).unwrap(), 1.0, epsilon = 1e-15);
        assert!(fidelity_amplitude(&[0.0, 0.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn mean_std_values() {
        assert_eq!(mean_std(&[2.0]), (2.0, 0.0));
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert_abs_diff_eq!(s, (5.0f64 / 3.0).sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn noiseless_sweep_is_exact() {
        let grid = BasisGrid::new(20).unwrap();
        let state = Waveform::GaussianLinearChirp.state(grid).unwrap();
        let sel = uniform_post_selector(grid);
        let depths = [PI / 16.0, PI / 4.0, FRAC_PI_2, 2.5];
        let r = depth_sweep(&state, &sel, &depths, &NoiseModel::noiseless(), 2, &ScoringOptions::default())
            .unwrap();
        for p in &r.points {
            assert!(p.fw_mean >= 1.0 - 1e-9, "{p:?}");
            assert!(p.fa_mean >= 1.0 - 1e-9, "{p:?}");
            assert!(p.fp_mean >= 1.0 - 1e-9, "{p:?}");
            assert_eq!((p.fw_std, p.fp_std, p.fa_std), (0.0, 0.0, 0.0));
        }
        assert_eq!(r.response_magnitudes.len(), 20);
        assert!(r.response_magnitudes.iter().all(|row| row.len() == depths.len()));
    }

    #[test]
    fn sweep_validates_inputs() {
        let grid = BasisGrid::new(8).unwrap();
        let state = Waveform::GaussianFlatPhase.state(grid).unwrap();
        let sel = uniform_post_selector(grid);
        let opts = ScoringOptions::default();
        let noisy = NoiseModel::default();
        assert!(depth_sweep(&state, &sel, &[], &noisy, 4, &opts).is_err());
        assert!(depth_sweep(&state, &sel, &[0.0], &noisy, 4, &opts).is_err());
        assert!(depth_sweep(&state, &sel, &[4.0], &noisy, 4, &opts).is_err());
        assert!(depth_sweep(&state, &sel, &[1.0], &noisy, 1, &opts).is_err());
        assert!(depth_sweep(&state, &sel, &[1.0], &NoiseModel::noiseless(), 1, &opts).is_ok());
    }
}
