//! Named test envelopes.
//!
//! Every shape is defined on the normalized position `x = (t - origin) / span`
//! so it scales with the grid; `x` runs over `(0, 1)` at the bin centers.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::state::{sample_envelope, BasisGrid, WavefunctionState};

/// Width (in units of the span) of the single Gaussian envelopes.
const GAUSSIAN_WIDTH: f64 = 0.15;
/// Width of each lobe of the double hump.
const HUMP_WIDTH: f64 = 0.08;
/// Constant phase of the flat-phase Gaussian, radians.
const FLAT_PHASE: f64 = PI / 4.0;
/// Linear chirp rate, radians per span.
const CHIRP_RATE: f64 = 4.0;
/// Quadratic phase curvature, radians per span squared.
const QUADRATIC_CURVATURE: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Waveform {
    /// Gaussian amplitude, constant phase.
    GaussianFlatPhase,
    /// Gaussian amplitude, phase linear in time.
    GaussianLinearChirp,
    /// Rectangular amplitude over the middle 60% of the span with a
    /// pi/2 phase step at the center; exactly zero outside.
    SquareStepPhase,
    /// Two Gaussian lobes with a near-node between them, quadratic phase.
    DoubleHumpQuadraticPhase,
}

impl Waveform {
    pub const ALL: [Waveform; 4] = [
        Waveform::GaussianFlatPhase,
        Waveform::GaussianLinearChirp,
        Waveform::SquareStepPhase,
        Waveform::DoubleHumpQuadraticPhase,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Waveform::GaussianFlatPhase => "gaussian_flat_phase",
            Waveform::GaussianLinearChirp => "gaussian_linear_chirp",
            Waveform::SquareStepPhase => "square_step_phase",
            Waveform::DoubleHumpQuadraticPhase => "double_hump_quadratic_phase",
        }
    }

    /// Unnormalized amplitude at normalized position `x`.
    pub fn amplitude(self, x: f64) -> f64 {
        let gauss = |c: f64, w: f64| (-(x - c).powi(2) / (2.0 * w * w)).exp();
        match self {
            Waveform::GaussianFlatPhase | Waveform::GaussianLinearChirp => {
                gauss(0.5, GAUSSIAN_WIDTH)
            }
            Waveform::SquareStepPhase => {
                if (0.2..0.8).contains(&x) {
                    1.0
                } else {
                    0.0
                }
            }
            Waveform::DoubleHumpQuadraticPhase => gauss(0.3, HUMP_WIDTH) + gauss(0.7, HUMP_WIDTH),
        }
    }

    /// Phase at normalized position `x`, radians.
    pub fn phase(self, x: f64) -> f64 {
        match self {
            Waveform::GaussianFlatPhase => FLAT_PHASE,
            Waveform::GaussianLinearChirp => CHIRP_RATE * (x - 0.5),
            Waveform::SquareStepPhase => {
                if x < 0.5 {
                    0.0
                } else {
                    PI / 2.0
                }
            }
            Waveform::DoubleHumpQuadraticPhase => QUADRATIC_CURVATURE * (x - 0.5).powi(2),
        }
    }

    pub fn state(self, grid: BasisGrid) -> Result<WavefunctionState> {
        let (origin, span) = (grid.origin(), grid.span());
        sample_envelope(
            grid,
            |t| self.amplitude((t - origin) / span),
            |t| self.phase((t - origin) / span),
        )
    }
}

impl fmt::Display for Waveform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Waveform {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Waveform::ALL
            .into_iter()
            .find(|w| w.name() == s)
            .ok_or_else(|| Error::UnknownWaveform(s.to_string()))
    }
}

/// Looks up a builtin envelope by name and samples it on `grid`.
pub fn builtin_waveform(name: &str, grid: BasisGrid) -> Result<WavefunctionState> {
    name.parse::<Waveform>()?.state(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn grid20() -> BasisGrid {
        BasisGrid::new(20).unwrap()
    }

    #[test]
    fn names_round_trip() {
        for w in Waveform::ALL {
            assert_eq!(w.name().parse::<Waveform>().unwrap(), w);
        }
        assert!(matches!(
            builtin_waveform("nope", grid20()),
            Err(Error::UnknownWaveform(_))
        ));
    }

    #[test]
    fn flat_phase_is_real_after_removing_global_phase() {
        let s = builtin_waveform("gaussian_flat_phase", grid20()).unwrap();
        let ref_phase = s.amplitudes()[10].arg();
        for z in s.amplitudes() {
            let rotated = z * num_complex::Complex64::from_polar(1.0, -ref_phase);
            assert_abs_diff_eq!(rotated.im, 0.0, epsilon = 1e-15);
            assert!(rotated.re > 0.0);
        }
    }

    #[test]
    fn square_step_has_one_phase_discontinuity() {
        let s = builtin_waveform("square_step_phase", grid20()).unwrap();
        // support is bins 4..=15 (centers 0.225 .. 0.775 of the span)
        let amps = s.amplitudes();
        for (u, z) in amps.iter().enumerate() {
            if (4..=15).contains(&u) {
                assert_abs_diff_eq!(z.norm(), 1.0 / 12f64.sqrt(), epsilon = 1e-15);
            } else {
                assert_eq!(z.norm(), 0.0);
            }
        }
        let phases: Vec<f64> = amps[4..=15].iter().map(|z| z.arg()).collect();
        let jumps: Vec<usize> = phases
            .windows(2)
            .enumerate()
            .filter(|(_, w)| (w[1] - w[0]).abs() > 1e-12)
            .map(|(i, _)| i + 4)
            .collect();
        assert_eq!(jumps, vec![9]);
        assert_abs_diff_eq!(phases[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(phases[11], PI / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn every_builtin_is_normalized() {
        for w in Waveform::ALL {
            let s = w.state(grid20()).unwrap();
            assert!((s.norm() - 1.0).abs() < 1e-12, "{w}");
        }
    }
}
