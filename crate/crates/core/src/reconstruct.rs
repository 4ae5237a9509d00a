//! Direct inversion of response factors into the complex wavefunction.
//!
//! Writing `w_n = psi_n <b0|a_n> / <b0|psi>`, the response to a quench of depth
//! `theta` at bin `n` is
//!
//! ```text
//! p_n(theta) = -2 Re[(e^{i theta} - 1) w_n] - |e^{i theta} - 1|^2 |w_n|^2
//! ```
//!
//! so a `+theta / -theta` pair fixes `Im w_n` through the difference and
//! `Re w_n - |w_n|^2` through the sum. The quadratic in `Re w_n` is solved on
//! the `Re w_n <= 1/2` branch. Outputs are scaled by 4 so that the `pi/2` case
//! reproduces the familiar closed form `Re = 2 - sqrt(4(1-p1-p2) - (p1-p2)^2)`,
//! `Im = p1 - p2`.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quench::ResponseMap;
use crate::state::{l2_norm, post_selector, BasisGrid};

/// Slack on a negative square-root argument before it counts as clamped.
pub const RADICAND_TOL: f64 = 1e-12;

/// Amplitudes below this have no defined phase.
pub const NODE_THRESHOLD: f64 = 1e-9;

/// Below this `sin(theta)` or `1 - cos(theta)` is treated as zero.
pub const SINGULAR_DEPTH_TOL: f64 = 1e-9;

/// Slack on the sum rule `sum_n w_n = 1` used by the fold detector.
pub const FOLD_TOL: f64 = 1e-9;

/// Per-bin output of an inverter, on the `4 w` scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inversion {
    pub re: f64,
    pub im: f64,
    pub branch_ok: bool,
}

/// Closed form for the `theta = +pi/2, -pi/2` pair.
pub fn invert_pm_halfpi(p1: f64, p2: f64) -> Inversion {
    let im = p1 - p2;
    let radicand = 4.0 * (1.0 - p1 - p2) - im * im;
    let re = 2.0 - radicand.max(0.0).sqrt();
    Inversion {
        re,
        im,
        branch_ok: radicand >= -RADICAND_TOL && re <= 2.0 + RADICAND_TOL,
    }
}

/// Inversion for an arbitrary `+theta / -theta` pair.
///
/// At `theta = pi/2` this agrees with [`invert_pm_halfpi`]. Near `theta = pi`
/// the two quenches coincide and `Im w` is unobservable: `im` is reported as
/// 0 and the bin is flagged.
pub fn invert_general(p_plus: f64, p_minus: f64, theta: f64) -> Result<Inversion> {
    let (sin, one_minus_cos) = (theta.sin(), 1.0 - theta.cos());
    if !theta.is_finite() || one_minus_cos < SINGULAR_DEPTH_TOL {
        return Err(Error::SingularDepth { theta });
    }
    let im_observable = sin.abs() >= SINGULAR_DEPTH_TOL;
    let im_w = if im_observable {
        (p_plus - p_minus) / (4.0 * sin)
    } else {
        0.0
    };
    let s = (p_plus + p_minus) / (4.0 * one_minus_cos);
    let radicand = 1.0 - 4.0 * (s + im_w * im_w);
    let re_w = 0.5 * (1.0 - radicand.max(0.0).sqrt());
    let re = 4.0 * re_w;
    Ok(Inversion {
        re,
        im: 4.0 * im_w,
        branch_ok: im_observable && radicand >= -RADICAND_TOL && re <= 2.0 + RADICAND_TOL,
    })
}

/// Per-bin phases plus the bins where the phase is undefined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseEnvelope {
    pub phases: Vec<f64>,
    pub nodes: Vec<bool>,
}

/// Quadrant-aware phase in `(-pi, pi]`. Bins with `|psi_u| < 1e-9` get phase
/// 0 and are marked as nodes.
pub fn phase_envelope(psi: &[Complex64]) -> PhaseEnvelope {
    envelope_with(psi, |z| {
        let phi = z.im.atan2(z.re);
        if phi == -std::f64::consts::PI {
            std::f64::consts::PI
        } else {
            phi
        }
    })
}

/// Single-argument `arctan(Im/Re)` phase in `[-pi/2, pi/2]`, matching the
/// literal formula. Loses the quadrant whenever `Re < 0`.
pub fn principal_phase_envelope(psi: &[Complex64]) -> PhaseEnvelope {
    envelope_with(psi, |z| (z.im / z.re).atan())
}

fn envelope_with(psi: &[Complex64], phase: impl Fn(Complex64) -> f64) -> PhaseEnvelope {
    let (phases, nodes) = psi
        .iter()
        .map(|&z| {
            if z.norm() < NODE_THRESHOLD {
                (0.0, true)
            } else {
                (phase(z), false)
            }
        })
        .unzip();
    PhaseEnvelope { phases, nodes }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionResult {
    pub grid: BasisGrid,
    /// Positive member of the quench pair that produced the data.
    pub depth: f64,
    /// Unnormalized components, `4 Re w` and `4 Im w`.
    pub raw_re: Vec<f64>,
    pub raw_im: Vec<f64>,
    /// Unit-norm wavefunction, rotated so its largest bin is real-positive.
    /// All zeros only when no bin responded at all.
    pub psi: Vec<Complex64>,
    pub amplitude_env: Vec<f64>,
    pub phase_env: Vec<f64>,
    pub phase_node: Vec<bool>,
    pub branch_ok: Vec<bool>,
}

impl ReconstructionResult {
    pub fn len(&self) -> usize {
        self.psi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.psi.is_empty()
    }
}

/// Positive depth of a `{+theta, -theta}` pair together with the slot
/// indices of the positive and negative members.
fn pm_pair(depths: &[f64]) -> Result<(f64, usize, usize)> {
    let incomplete = || Error::IncompleteDepths {
        depths: depths.to_vec(),
    };
    let [a, b] = depths else {
        return Err(incomplete());
    };
    let scale = a.abs().max(b.abs()).max(1.0);
    if (a + b).abs() > 1e-12 * scale || *a == 0.0 {
        return Err(incomplete());
    }
    if *a > 0.0 {
        Ok((*a, 0, 1))
    } else {
        Ok((*b, 1, 0))
    }
}

/// Inverts every bin of a `+theta / -theta` response map and assembles the
/// normalized wavefunction.
///
/// The wavefunction follows from `psi_n ∝ w_n / <b0|a_n>`, using the
/// selector recorded in the map; for the uniform selector this is just `w`.
///
/// Besides clamped radicands, a bin is flagged when the sum rule
/// `sum_n w_n = 1` reveals that it was folded back from `Re w > 1/2`.
/// Folding bin `k` maps `Re w_k` to `1 - Re w_k` and lowers the sum by
/// `2 Re w_k - 1`, so a single folded bin sits exactly at
/// `(1 - deficit) / 2`. Only bins matching that value within [`FOLD_TOL`] are
/// flagged, which keeps measurement noise in the sum from flagging anything.
pub fn reconstruct_wavefunction(map: &ResponseMap) -> Result<ReconstructionResult> {
    let (theta, plus, minus) = pm_pair(map.depths())?;
    let inversions = map
        .records()
        .iter()
        .map(|r| {
            let (p_plus, p_minus) = (r.entries[plus].response, r.entries[minus].response);
            if theta == FRAC_PI_2 {
                Ok(invert_pm_halfpi(p_plus, p_minus))
            } else {
                invert_general(p_plus, p_minus, theta)
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let raw_re: Vec<f64> = inversions.iter().map(|v| v.re).collect();
    let raw_im: Vec<f64> = inversions.iter().map(|v| v.im).collect();
    let mut branch_ok: Vec<bool> = inversions.iter().map(|v| v.branch_ok).collect();

    let deficit = 1.0 - raw_re.iter().sum::<f64>() / 4.0;
    if deficit > FOLD_TOL {
        let folded = 0.5 * (1.0 - deficit);
        for (ok, re) in branch_ok.iter_mut().zip(&raw_re) {
            if (re / 4.0 - folded).abs() <= FOLD_TOL {
                *ok = false;
            }
        }
    }

    let selector = post_selector(*map.grid(), map.selector())?;
    let raw: Vec<Complex64> = raw_re
        .iter()
        .zip(&raw_im)
        .zip(selector.overlaps())
        .map(|((&re, &im), b)| Complex64::new(re, im) / b)
        .collect();
    let psi = normalize_and_fix_phase(&raw);
    let amplitude_env = psi.iter().map(|z| z.norm()).collect();
    let PhaseEnvelope { phases, nodes } = phase_envelope(&psi);

    Ok(ReconstructionResult {
        grid: *map.grid(),
        depth: theta,
        raw_re,
        raw_im,
        psi,
        amplitude_env,
        phase_env: phases,
        phase_node: nodes,
        branch_ok,
    })
}

fn normalize_and_fix_phase(raw: &[Complex64]) -> Vec<Complex64> {
    let norm = l2_norm(raw);
    if norm == 0.0 {
        return raw.to_vec();
    }
    // first bin of maximal modulus becomes real-positive
    let peak = raw
        .iter()
        .copied()
        .fold(Complex64::new(0.0, 0.0), |best, z| {
            if z.norm() > best.norm() {
                z
            } else {
                best
            }
        });
    let rotation = peak.conj() / peak.norm();
    raw.iter().map(|z| z * rotation / norm).collect()
}
