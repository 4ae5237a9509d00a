//! Test-only helpers: an independent direct-expansion oracle for the quench
//! probabilities and seeded random state generators.
#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64;
use qquench::{make_state, BasisGrid, WavefunctionState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Ket amplitudes `<a_u|b0>` of the Fourier post-selection state of index `k`,
/// written out from the definition rather than taken from the library.
pub fn dft_ket(n: usize, k: usize) -> Vec<Complex64> {
    (0..n)
        .map(|u| {
            let angle = 2.0 * PI * (k * u) as f64 / n as f64;
            Complex64::new(angle.cos(), angle.sin()) / (n as f64).sqrt()
        })
        .collect()
}

/// Full `N x N` matrix of `I + (e^{i theta} - 1)|a_n><a_n|`.
pub fn quench_matrix(size: usize, bin: usize, theta: f64) -> Vec<Vec<Complex64>> {
    let phase = Complex64::new(theta.cos(), theta.sin());
    (0..size)
        .map(|r| {
            (0..size)
                .map(|c| {
                    let identity = if r == c { 1.0 } else { 0.0 };
                    let proj = if r == bin && c == bin { 1.0 } else { 0.0 };
                    Complex64::new(identity, 0.0) + (phase - 1.0) * proj
                })
                .collect()
        })
        .collect()
}

/// `|<b0| M_n(theta) |psi>|^2` by explicit matrix-vector expansion.
pub fn oracle_probability(ket_b0: &[Complex64], psi: &[Complex64], bin: usize, theta: f64) -> f64 {
    let m = quench_matrix(psi.len(), bin, theta);
    let quenched: Vec<Complex64> = m
        .iter()
        .map(|row| row.iter().zip(psi).map(|(a, b)| a * b).sum())
        .collect();
    let amp: Complex64 = ket_b0
        .iter()
        .zip(&quenched)
        .map(|(b, q)| b.conj() * q)
        .sum();
    amp.re * amp.re + amp.im * amp.im
}

/// Oracle response factor `1 - Pr / P0`.
pub fn oracle_response(ket_b0: &[Complex64], psi: &[Complex64], bin: usize, theta: f64) -> f64 {
    let p0 = oracle_probability(ket_b0, psi, bin, 0.0);
    1.0 - oracle_probability(ket_b0, psi, bin, theta) / p0
}

/// `w_n = psi_n <b0|a_n> / <b0|psi>`.
pub fn oracle_w(ket_b0: &[Complex64], psi: &[Complex64]) -> Vec<Complex64> {
    let total: Complex64 = ket_b0.iter().zip(psi).map(|(b, p)| b.conj() * p).sum();
    ket_b0
        .iter()
        .zip(psi)
        .map(|(b, p)| p * b.conj() / total)
        .collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn complex_normal(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-like random state.
pub fn random_state(rng: &mut ChaCha8Rng, n: usize) -> WavefunctionState {
    let raw = (0..n).map(|_| complex_normal(rng)).collect();
    make_state(BasisGrid::new(n).unwrap(), raw).unwrap()
}

/// Random state whose `Re w_u` stays at or below `max_re_w` for the uniform
/// selector: a random positive offset plus complex Gaussian scatter, redrawn
/// until the condition holds.
pub fn random_branch_valid_state(rng: &mut ChaCha8Rng, n: usize, max_re_w: f64) -> WavefunctionState {
    let ket = dft_ket(n, 0);
    loop {
        let offset: f64 = rng.random_range(0.5..2.0);
        let raw: Vec<Complex64> = (0..n).map(|_| offset + complex_normal(rng)).collect();
        let state = make_state(BasisGrid::new(n).unwrap(), raw).unwrap();
        let w = oracle_w(&ket, state.amplitudes());
        if w.iter().all(|z| z.re <= max_re_w) {
            return state;
        }
    }
}
