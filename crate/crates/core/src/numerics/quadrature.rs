use std::num::NonZeroUsize;

use gauss_quad::{GaussHermite, GaussLegendre};
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureScheme {
    GaussLegendre,
    /// Gauss–Legendre with the node count doubled until the entropy settles.
    Adaptive,
}

/// Output-space integration grid. The window on each axis is
/// `mean ± half_width·σ` with `σ` the standard deviation of the density.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuadratureGrid {
    pub half_width: f64,
    pub nodes_per_axis: usize,
    pub scheme: QuadratureScheme,
    /// Characteristic-function magnitude below which the spectral integral is cut.
    pub spectral_cutoff: f64,
}

impl Default for QuadratureGrid {
    fn default() -> Self {
        QuadratureGrid {
            half_width: 8.0,
            nodes_per_axis: 200,
            scheme: QuadratureScheme::GaussLegendre,
            spectral_cutoff: 1e-17,
        }
    }
}

impl QuadratureGrid {
    /// Cheap grid for inner optimization loops (entropy accurate to ~1e-5).
    pub fn coarse() -> Self {
        QuadratureGrid {
            half_width: 6.5,
            nodes_per_axis: 40,
            scheme: QuadratureScheme::GaussLegendre,
            spectral_cutoff: 1e-10,
        }
    }

    pub fn with_nodes(mut self, nodes: usize) -> Self {
        self.nodes_per_axis = nodes;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.half_width.is_finite() && self.half_width > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "grid half-width must be positive, got {}",
                self.half_width
            )));
        }
        if self.nodes_per_axis < 2 {
            return Err(Error::InvalidArgument("grid needs at least 2 nodes per axis".into()));
        }
        if !(self.spectral_cutoff > 0.0 && self.spectral_cutoff < 1.0) {
            return Err(Error::InvalidArgument("spectral cutoff must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Gauss–Legendre nodes and weights mapped to `[a, b]`.
pub fn legendre_nodes(a: f64, b: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let rule = GaussLegendre::new(NonZeroUsize::new(n.max(1)).expect("nonzero"));
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    rule.iter().map(|&(x, w)| (mid + half * x, half * w)).unzip()
}

/// Gauss–Hermite nodes and weights for the weight `e^{−u²}`.
pub fn hermite_nodes(n: usize) -> (Vec<f64>, Vec<f64>) {
    let rule = GaussHermite::new(NonZeroUsize::new(n.max(1)).expect("nonzero"));
    rule.iter().map(|&(x, w)| (x, w)).unzip()
}
