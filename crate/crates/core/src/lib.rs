//! Simulation and direct reconstruction of delta-quench wavefunction
//! measurements.
//!
//! A pure state on a finite time-bin grid is phase-quenched one bin at a
//! time, projected onto a single fixed post-selection state, and the relative
//! change of the projection probability (the response factor) is inverted
//! bin by bin into the complex wavefunction. No fitting is involved.
//!
//! ```
//! use std::f64::consts::FRAC_PI_2;
//! use qquench::{
//!     fidelity_overall, reconstruct_wavefunction, scan, uniform_post_selector, BasisGrid,
//!     NoiseModel, Waveform,
//! };
//!
//! let grid = BasisGrid::new(20).unwrap();
//! let state = Waveform::GaussianLinearChirp.state(grid).unwrap();
//! let selector = uniform_post_selector(grid);
//! let map = scan(&state, &selector, &[FRAC_PI_2, -FRAC_PI_2], &NoiseModel::noiseless()).unwrap();
//! let rec = reconstruct_wavefunction(&map).unwrap();
//! assert!(fidelity_overall(&rec.psi, state.amplitudes()).unwrap() > 1.0 - 1e-9);
//! ```

pub mod cli;
pub mod error;
pub mod fidelity;
pub mod io;
pub mod quench;
pub mod reconstruct;
pub mod state;
pub mod waveforms;

pub use error::{Error, Result};
pub use fidelity::{
    depth_sweep, fidelity_amplitude, fidelity_overall, fidelity_phase, score_reconstruction,
    FidelityScores, ScoringOptions, SweepPoint, SweepResult,
};
pub use quench::{
    apply_quench, measure_with_noise, projection_probability, response_factor, scan,
    MeasurementKey, NoiseModel, QuenchConfig, ResponseEntry, ResponseMap, ResponseRecord,
};
pub use reconstruct::{
    invert_general, invert_pm_halfpi, phase_envelope, principal_phase_envelope,
    reconstruct_wavefunction, Inversion, PhaseEnvelope, ReconstructionResult,
};
pub use state::{
    dft_post_selector, inner_product, make_state, post_selector, sample_envelope,
    uniform_post_selector,
    BasisGrid, Bra, PostSelector, SelectorKind, WavefunctionState,
};
pub use waveforms::{builtin_waveform, Waveform};
