//! Finite-dimensional pure states over a uniform time-bin basis, and the
//! fixed post-selection states they are projected onto.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default bin width, seconds.
pub const DEFAULT_BIN_WIDTH: f64 = 0.1e-6;

/// Tolerance for the unit-norm invariants.
pub const NORM_TOL: f64 = 1e-12;

/// Uniform discretization of the measurement basis into `size` bins.
///
/// Bin `u` is sampled at its center, `origin + (u + 1/2) * bin_width`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid")]
pub struct BasisGrid {
    size: usize,
    bin_width: f64,
    origin: f64,
}

#[derive(Deserialize)]
struct RawGrid {
    size: usize,
    bin_width: f64,
    origin: f64,
}

impl TryFrom<RawGrid> for BasisGrid {
    type Error = Error;

    fn try_from(raw: RawGrid) -> Result<Self> {
        BasisGrid::with_origin(raw.size, raw.bin_width, raw.origin)
    }
}

impl BasisGrid {
    /// Grid with the default bin width and zero origin.
    pub fn new(size: usize) -> Result<Self> {
        Self::with_origin(size, DEFAULT_BIN_WIDTH, 0.0)
    }

    pub fn with_origin(size: usize, bin_width: f64, origin: f64) -> Result<Self> {
        if size < 2 {
            return Err(Error::InvalidParameter(format!(
                "grid needs at least 2 bins, got {size}"
            )));
        }
        if !(bin_width.is_finite() && bin_width > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "bin width must be positive and finite, got {bin_width}"
            )));
        }
        if !origin.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "grid origin must be finite, got {origin}"
            )));
        }
        Ok(Self {
            size,
            bin_width,
            origin,
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn bin_width(&self) -> f64 {
        self.bin_width
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    /// Sampling instant of bin `u`.
    pub fn center(&self, u: usize) -> f64 {
        self.origin + (u as f64 + 0.5) * self.bin_width
    }

    pub fn centers(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.size).map(move |u| self.center(u))
    }

    /// Total temporal span covered by the grid.
    pub fn span(&self) -> f64 {
        self.size as f64 * self.bin_width
    }

    pub(crate) fn check_same_size(&self, other: &BasisGrid) -> Result<()> {
        if self.size != other.size {
            return Err(Error::DimensionMismatch {
                expected: self.size,
                actual: other.size,
            });
        }
        Ok(())
    }
}

/// A normalized pure state `|psi> = sum_u psi_u |a_u>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WavefunctionState {
    grid: BasisGrid,
    amplitudes: Vec<Complex64>,
}

impl WavefunctionState {
    /// Normalizes `raw` onto `grid`.
    pub fn new(grid: BasisGrid, raw: Vec<Complex64>) -> Result<Self> {
        if raw.len() != grid.size() {
            return Err(Error::DimensionMismatch {
                expected: grid.size(),
                actual: raw.len(),
            });
        }
        check_finite(&raw)?;
        let norm = l2_norm(&raw);
        if norm == 0.0 {
            return Err(Error::ZeroVector);
        }
        let amplitudes = raw.into_iter().map(|z| z / norm).collect();
        Ok(Self { grid, amplitudes })
    }

    /// Wraps amplitudes that are already unit-norm up to rounding, e.g. the
    /// output of a unitary map applied to a normalized state.
    pub(crate) fn from_unitary_image(grid: BasisGrid, amplitudes: Vec<Complex64>) -> Self {
        debug_assert_eq!(grid.size(), amplitudes.len());
        Self { grid, amplitudes }
    }

    pub fn grid(&self) -> &BasisGrid {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn norm(&self) -> f64 {
        l2_norm(&self.amplitudes)
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }
}

/// `make_state`: normalize a raw amplitude vector.
pub fn make_state(grid: BasisGrid, raw: Vec<Complex64>) -> Result<WavefunctionState> {
    WavefunctionState::new(grid, raw)
}

/// Which post-selection state a [`PostSelector`] realizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SelectorKind {
    /// Equal-weight superposition of every bin (zero-frequency Fourier vector).
    Uniform,
    /// Discrete Fourier vector of frequency index `k`.
    DftBin(usize),
}

impl fmt::Display for SelectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SelectorKind::Uniform => write!(f, "uniform"),
            SelectorKind::DftBin(k) => write!(f, "dft:{k}"),
        }
    }
}

/// The fixed post-selection state `|b0>`, stored through its overlaps
/// `<b0|a_u>` with the measurement basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostSelector {
    grid: BasisGrid,
    overlaps: Vec<Complex64>,
    kind: SelectorKind,
}

impl PostSelector {
    /// Builds a selector from explicit overlaps `<b0|a_u>`. Every overlap must
    /// be nonzero and the overlaps must be unit-norm.
    #[cfg(test)]
    pub(crate) fn from_overlaps(
        grid: BasisGrid,
        overlaps: Vec<Complex64>,
        kind: SelectorKind,
    ) -> Result<Self> {
        if overlaps.len() != grid.size() {
            return Err(Error::DimensionMismatch {
                expected: grid.size(),
                actual: overlaps.len(),
            });
        }
        check_finite(&overlaps)?;
        if let Some(u) = overlaps.iter().position(|z| z.norm() == 0.0) {
            return Err(Error::InvalidParameter(format!(
                "post-selector is orthogonal to basis element {u}"
            )));
        }
        let norm = l2_norm(&overlaps);
        if (norm * norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidParameter(format!(
                "post-selector is not normalized (norm^2 = {})",
                norm * norm
            )));
        }
        Ok(Self {
            grid,
            overlaps,
            kind,
        })
    }

    pub fn grid(&self) -> &BasisGrid {
        &self.grid
    }

    /// The values `<b0|a_u>`.
    pub fn overlaps(&self) -> &[Complex64] {
        &self.overlaps
    }

    pub fn kind(&self) -> SelectorKind {
        self.kind
    }
}

/// Equal superposition `B0 * sum_u |a_u>` with `B0 = 1/sqrt(N)`.
pub fn uniform_post_selector(grid: BasisGrid) -> PostSelector {
    let b0 = 1.0 / (grid.size() as f64).sqrt();
    PostSelector {
        grid,
        overlaps: vec![Complex64::new(b0, 0.0); grid.size()],
        kind: SelectorKind::Uniform,
    }
}

/// Fourier vector with `<b0|a_u> = exp(-2 pi i k u / N) / sqrt(N)`.
///
/// `k = 0` is identical to [`uniform_post_selector`].
pub fn dft_post_selector(grid: BasisGrid, k: usize) -> Result<PostSelector> {
    let n = grid.size();
    if k >= n {
        return Err(Error::IndexOutOfRange { index: k, size: n });
    }
    if k == 0 {
        return Ok(uniform_post_selector(grid));
    }
    let scale = 1.0 / (n as f64).sqrt();
    let overlaps = (0..n)
        .map(|u| {
            // reduce k*u mod n first so the angle stays exact for the
            // quarter-turn cases
            let r = (k * u) % n;
            Complex64::from_polar(scale, -2.0 * PI * r as f64 / n as f64)
        })
        .collect();
    Ok(PostSelector {
        grid,
        overlaps,
        kind: SelectorKind::DftBin(k),
    })
}

/// Rebuilds the selector a [`SelectorKind`] names.
pub fn post_selector(grid: BasisGrid, kind: SelectorKind) -> Result<PostSelector> {
    match kind {
        SelectorKind::Uniform => Ok(uniform_post_selector(grid)),
        SelectorKind::DftBin(k) => dft_post_selector(grid, k),
    }
}

/// Anything that can stand on the left of a bracket `<x|y>`.
pub trait Bra {
    fn grid(&self) -> &BasisGrid;

    /// Component `u` of the bra, i.e. `<x|a_u>`.
    fn bra_component(&self, u: usize) -> Complex64;
}

impl Bra for WavefunctionState {
    fn grid(&self) -> &BasisGrid {
        &self.grid
    }

    fn bra_component(&self, u: usize) -> Complex64 {
        self.amplitudes[u].conj()
    }
}

impl Bra for PostSelector {
    fn grid(&self) -> &BasisGrid {
        &self.grid
    }

    fn bra_component(&self, u: usize) -> Complex64 {
        self.overlaps[u]
    }
}

/// `<x|y> = sum_u conj(x_u) y_u`.
pub fn inner_product<B: Bra + ?Sized>(x: &B, y: &WavefunctionState) -> Result<Complex64> {
    x.grid().check_same_size(y.grid())?;
    Ok(y
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(u, &yu)| x.bra_component(u) * yu)
        .sum())
}

/// Samples `amplitude(t) * exp(i phase(t))` at the bin centers and
/// normalizes.
pub fn sample_envelope<A, P>(grid: BasisGrid, amplitude: A, phase: P) -> Result<WavefunctionState>
where
    A: Fn(f64) -> f64,
    P: Fn(f64) -> f64,
{
    let mut raw = Vec::with_capacity(grid.size());
    for (u, t) in grid.centers().enumerate() {
        let (a, phi) = (amplitude(t), phase(t));
        if !a.is_finite() || !phi.is_finite() {
            return Err(Error::NonFiniteInput { index: u });
        }
        if a < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "negative amplitude {a} at bin {u}"
            )));
        }
        raw.push(Complex64::from_polar(a, phi));
    }
    WavefunctionState::new(grid, raw)
}

pub(crate) fn l2_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn check_finite(v: &[Complex64]) -> Result<()> {
    match v.iter().position(|z| !z.is_finite()) {
        Some(index) => Err(Error::NonFiniteInput { index }),
        None => Ok(()),
    }
}
