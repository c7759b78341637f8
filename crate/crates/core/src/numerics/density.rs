//! Output densities of the Gaussian measurements and their differential entropies.
//!
//! Densities on a grid are obtained from the characteristic function of the
//! outcome: for type 1 noise, `E e^{i(sX + tY)} = φ_ρ(−t, s)·e^{−(β_q s² + β_p t²)/2}`
//! with `φ_ρ(x, y) = Tr[ρ D(x, y)]`. The inverse transform is a trapezoid sum
//! in frequency, evaluated on a Gauss–Legendre window around the density.
//! [`povm_density`] evaluates the same density pointwise from the POVM
//! definition and serves as an independent check.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use super::fock::{
    displacement_elements, gaussian_state_fock_auto, FockOperator, Moments, C64, DEFAULT_TRUNCATION,
};
use super::quadrature::{hermite_nodes, legendre_nodes, QuadratureGrid, QuadratureScheme};
use crate::error::{Error, Result};
use crate::gaussian::{make_covariance, MeasurementNoise, NoiseKind, Variance};

const NEGATIVITY_TOLERANCE: f64 = -1e-10;
const NORMALIZATION_TOLERANCE: f64 = 1e-6;
// aliasing period in output standard deviations beyond the window half-width
const ALIAS_MARGIN: f64 = 12.0;

/// Outcome space of a measurement: 2-D for joint noise, 1-D for position.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum Axes {
    Joint { bq: f64, bp: f64 },
    Position { bq: f64 },
}

impl Axes {
    pub(crate) fn of(beta: &MeasurementNoise) -> Result<Axes> {
        match (beta.kind(), beta.p()) {
            (NoiseKind::SharpPosition, _) => Err(Error::UnsupportedNoise(
                "sharp position measurement has no bounded density; use the analytic formulas",
            )),
            (NoiseKind::Joint, Variance::Finite(bp)) => Ok(Axes::Joint { bq: beta.q(), bp }),
            _ => Ok(Axes::Position { bq: beta.q() }),
        }
    }

    /// Output standard deviations `(σ_q, σ_p)` for a state with the given moments.
    fn sigmas(&self, m: &Moments) -> (f64, f64) {
        match *self {
            Axes::Joint { bq, bp } => ((m.var_q() + bq).sqrt(), (m.var_p() + bp).sqrt()),
            Axes::Position { bq } => ((m.var_q() + bq).sqrt(), 0.0),
        }
    }
}

/// Output-space window: tensor Gauss–Legendre nodes. For 1-D outcomes the
/// second axis is a single node of weight 1.
#[derive(Clone, Debug)]
pub struct Window {
    pub xs: Vec<f64>,
    pub wx: Vec<f64>,
    pub ys: Vec<f64>,
    pub wy: Vec<f64>,
}

impl Window {
    pub(crate) fn around(axes: &Axes, m: &Moments, half_width: f64, nodes: usize) -> Window {
        let (sq, sp) = axes.sigmas(m);
        let (xs, wx) = legendre_nodes(m.mean_q - half_width * sq, m.mean_q + half_width * sq, nodes);
        let (ys, wy) = match axes {
            Axes::Joint { .. } => {
                legendre_nodes(m.mean_p - half_width * sp, m.mean_p + half_width * sp, nodes)
            }
            Axes::Position { .. } => (vec![0.0], vec![1.0]),
        };
        Window { xs, wx, ys, wy }
    }
}

/// Density values on a window.
#[derive(Clone, Debug)]
pub struct DensityGrid {
    pub window: Window,
    /// `values[(a, b)] = p(xs[a], ys[b])`.
    pub values: DMatrix<f64>,
}

impl DensityGrid {
    pub fn mass(&self) -> f64 {
        let w = &self.window;
        let mut acc = 0.0;
        for (a, wa) in w.wx.iter().enumerate() {
            for (b, wb) in w.wy.iter().enumerate() {
                acc += wa * wb * self.values[(a, b)];
            }
        }
        acc
    }

    /// Differential entropy (Lebesgue reference measure) in nats.
    pub fn entropy(&self) -> Result<f64> {
        let w = &self.window;
        let mut h = 0.0;
        let mut worst = (0.0, 0.0, 0.0);
        for (a, wa) in w.wx.iter().enumerate() {
            for (b, wb) in w.wy.iter().enumerate() {
                let p = self.values[(a, b)];
                if p < worst.0 {
                    worst = (p, w.xs[a], w.ys[b]);
                }
                if p > 0.0 {
                    h -= wa * wb * p * p.ln();
                }
            }
        }
        if worst.0 < NEGATIVITY_TOLERANCE {
            return Err(Error::NegativeDensity {
                value: worst.0,
                x: worst.1,
                y: worst.2,
            });
        }
        let mass = self.mass();
        if (mass - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::NormalizationFailure { mass });
        }
        Ok(h)
    }
}

/// Uniform frequency lattice shared by every density in one computation.
pub(crate) struct Spectral {
    axes: Axes,
    s: Vec<f64>,
    t: Vec<f64>,
    scale: f64,
    // e^{−(β_q s² + β_p t²)/2}, zero where below the cutoff
    damping: DMatrix<f64>,
}

impl Spectral {
    /// `sigma` bounds the output standard deviations of all densities to be
    /// transformed; `half_width` is the window half-width in those units.
    pub(crate) fn new(axes: Axes, sigma: (f64, f64), grid: &QuadratureGrid) -> Spectral {
        let log_cut = -grid.spectral_cutoff.ln();
        let lattice = |beta: f64, sig: f64| -> (Vec<f64>, f64) {
            let k = (2.0 * log_cut / beta).sqrt();
            let period = (grid.half_width + ALIAS_MARGIN) * sig;
            let dk = 2.0 * PI / period;
            let half = (k / dk).ceil() as i64;
            ((-half..=half).map(|j| j as f64 * dk).collect(), dk)
        };
        let (s, ds, t, dt) = match axes {
            Axes::Joint { bq, bp } => {
                let (s, ds) = lattice(bq, sigma.0);
                let (t, dt) = lattice(bp, sigma.1);
                (s, ds, t, dt / (2.0 * PI))
            }
            Axes::Position { bq } => {
                let (s, ds) = lattice(bq, sigma.0);
                (s, ds, vec![0.0], 1.0)
            }
        };
        let scale = ds / (2.0 * PI) * dt;
        let (bq, bp) = match axes {
            Axes::Joint { bq, bp } => (bq, bp),
            Axes::Position { bq } => (bq, 0.0),
        };
        let damping = DMatrix::from_fn(s.len(), t.len(), |j, l| {
            let e = 0.5 * (bq * s[j] * s[j] + bp * t[l] * t[l]);
            if e > log_cut + 2.0 {
                0.0
            } else {
                (-e).exp()
            }
        });
        Spectral {
            axes,
            s,
            t,
            scale,
            damping,
        }
    }

    pub(crate) fn axes(&self) -> Axes {
        self.axes
    }

    pub(crate) fn shape(&self) -> (usize, usize) {
        (self.s.len(), self.t.len())
    }

    pub(crate) fn s(&self) -> &[f64] {
        &self.s
    }

    pub(crate) fn t(&self) -> &[f64] {
        &self.t
    }

    /// Outcome characteristic function from `φ(x, y)`; only half of the lattice
    /// is evaluated, the rest follows from `χ(−s, −t) = conj χ(s, t)`.
    pub(crate) fn sample(&self, phi: impl Fn(f64, f64) -> C64) -> DMatrix<C64> {
        let (ns, nt) = self.shape();
        let mut chi = DMatrix::from_element(ns, nt, C64::new(0.0, 0.0));
        let mid = ns / 2;
        for j in mid..ns {
            for l in 0..nt {
                let d = self.damping[(j, l)];
                if d != 0.0 {
                    chi[(j, l)] = phi(-self.t[l], self.s[j]) * d;
                }
            }
        }
        for j in 0..mid {
            for l in 0..nt {
                chi[(j, l)] = chi[(ns - 1 - j, nt - 1 - l)].conj();
            }
        }
        chi
    }

    /// Inverse transform of `chi` onto the nodes of `window`.
    pub(crate) fn density(&self, chi: &DMatrix<C64>, window: &Window) -> DMatrix<f64> {
        let ex = DMatrix::from_fn(window.xs.len(), self.s.len(), |a, j| {
            C64::from_polar(1.0, -self.s[j] * window.xs[a])
        });
        let ey = DMatrix::from_fn(self.t.len(), window.ys.len(), |l, b| {
            C64::from_polar(1.0, -self.t[l] * window.ys[b])
        });
        let p = ex * chi * ey;
        p.map(|z| z.re * self.scale)
    }
}

pub(crate) fn fock_phi(rho: &FockOperator) -> impl Fn(f64, f64) -> C64 + '_ {
    let m = rho.effective_truncation(1e-20) + 1;
    move |x, y| super::fock::charfn_block(rho.matrix(), m, x, y)
}

/// Output density of `rho` on its own window.
pub fn output_density_grid(
    rho: &FockOperator,
    beta: &MeasurementNoise,
    grid: &QuadratureGrid,
) -> Result<DensityGrid> {
    grid.validate()?;
    let axes = Axes::of(beta)?;
    let m = rho.moments();
    let spectral = Spectral::new(axes, axes.sigmas(&m), grid);
    let chi = spectral.sample(fock_phi(rho));
    let window = Window::around(&axes, &m, grid.half_width, grid.nodes_per_axis);
    let values = spectral.density(&chi, &window);
    Ok(DensityGrid { window, values })
}

/// Differential entropy of the outcome density of `rho` (Lebesgue reference
/// measure, nats). For a Gaussian state this equals
/// `½ ln det(α + β) + 1 + ln 2π` (type 1) or `½ ln(α_q + β_q) + ½(1 + ln 2π)`
/// (type 2).
pub fn numeric_output_entropy(
    rho: &FockOperator,
    beta: &MeasurementNoise,
    grid: &QuadratureGrid,
) -> Result<f64> {
    grid.validate()?;
    let axes = Axes::of(beta)?;
    let m = rho.moments();
    let spectral = Spectral::new(axes, axes.sigmas(&m), grid);
    let chi = spectral.sample(fock_phi(rho));
    entropy_of_chi(&spectral, &chi, &m, grid)
}

/// Entropy of the density with outcome characteristic function `chi`; the
/// window is placed by the state moments `m`.
pub(crate) fn entropy_of_chi(
    spectral: &Spectral,
    chi: &DMatrix<C64>,
    m: &Moments,
    grid: &QuadratureGrid,
) -> Result<f64> {
    let axes = spectral.axes();
    let at = |nodes: usize| -> Result<f64> {
        let window = Window::around(&axes, m, grid.half_width, nodes);
        let values = spectral.density(chi, &window);
        DensityGrid { window, values }.entropy()
    };
    match grid.scheme {
        QuadratureScheme::GaussLegendre => at(grid.nodes_per_axis),
        QuadratureScheme::Adaptive => {
            // coarse levels may fail the normalization check; only the last must pass
            let mut nodes = grid.nodes_per_axis;
            let mut prev = at(nodes);
            for _ in 0..4 {
                nodes *= 2;
                let next = at(nodes);
                if let (Ok(a), Ok(b)) = (&prev, &next) {
                    if (a - b).abs() < 1e-9 {
                        return next;
                    }
                }
                prev = next;
            }
            prev
        }
    }
}

/// Closed-form Lebesgue entropy of the outcome of a centered Gaussian state.
pub fn gaussian_output_entropy(var_q: f64, var_p: f64, beta: &MeasurementNoise) -> f64 {
    let ln2pi = (2.0 * PI).ln();
    match beta.p() {
        Variance::Finite(bp) => 0.5 * ((var_q + beta.q()) * (var_p + bp)).ln() + 1.0 + ln2pi,
        Variance::Infinite => 0.5 * (var_q + beta.q()).ln() + 0.5 * (1.0 + ln2pi),
    }
}

/// Pointwise evaluator of the POVM density, built once per noise.
pub struct PovmDensity {
    kind: PovmKind,
}

enum PovmKind {
    Joint { rho_beta: FockOperator },
    Position { bq: f64 },
}

impl PovmDensity {
    pub fn new(beta: &MeasurementNoise) -> Result<Self> {
        let kind = match Axes::of(beta)? {
            Axes::Joint { bq, bp } => {
                let noise_state = make_covariance(bq, bp)?;
                PovmKind::Joint {
                    rho_beta: gaussian_state_fock_auto(&noise_state, DEFAULT_TRUNCATION)?,
                }
            }
            Axes::Position { bq } => PovmKind::Position { bq },
        };
        Ok(PovmDensity { kind })
    }

    /// Density at `(x, y)`; `y` is ignored for position measurements.
    pub fn at(&self, rho: &FockOperator, x: f64, y: f64) -> Result<f64> {
        let v = match &self.kind {
            PovmKind::Joint { rho_beta } => {
                // (1/2π) Tr[ρ D ρ_β D*] with the exact rectangular block of D
                let b = displacement_elements(x, y, rho.dim(), rho_beta.dim());
                let m = &b * rho_beta.matrix() * b.adjoint();
                rho.expectation(&m).re / (2.0 * PI)
            }
            PovmKind::Position { bq } => {
                rho.expectation(&position_kernel(*bq, x, rho.dim())).re / (2.0 * PI * bq).sqrt()
            }
        };
        if v < NEGATIVITY_TOLERANCE {
            return Err(Error::NegativeDensity { value: v, x, y });
        }
        Ok(v)
    }
}

/// Pointwise POVM density `p_ρ(x, y)`. Builds the noise state on every call;
/// use [`PovmDensity`] for many points.
pub fn povm_density(rho: &FockOperator, beta: &MeasurementNoise, x: f64, y: f64) -> Result<f64> {
    PovmDensity::new(beta)?.at(rho, x, y)
}

/// Matrix of `exp(−(q − x)²/2β)` on the first `dim` number states, exact by
/// Gauss–Hermite quadrature after completing the square.
fn position_kernel(beta: f64, x: f64, dim: usize) -> DMatrix<C64> {
    let a = 1.0 + 0.5 / beta;
    let c = x / (2.0 * beta * a);
    let prefactor = (-x * x / (2.0 * beta + 1.0)).exp() / (PI * a).sqrt();
    let (u, w) = hermite_nodes(dim + 2);
    let mut k = DMatrix::<f64>::zeros(dim, dim);
    let mut h = vec![0.0; dim];
    for (uk, wk) in u.iter().zip(&w) {
        let xi = c + uk / a.sqrt();
        // normalized Hermite polynomials without the Gaussian factor
        h[0] = 1.0;
        if dim > 1 {
            h[1] = std::f64::consts::SQRT_2 * xi;
        }
        for n in 1..dim.saturating_sub(1) {
            let nf = n as f64;
            h[n + 1] = (2.0 / (nf + 1.0)).sqrt() * xi * h[n] - (nf / (nf + 1.0)).sqrt() * h[n - 1];
        }
        for m in 0..dim {
            let hm = wk * h[m];
            for n in m..dim {
                k[(m, n)] += hm * h[n];
            }
        }
    }
    DMatrix::from_fn(dim, dim, |m, n| {
        let v = if m <= n { k[(m, n)] } else { k[(n, m)] };
        C64::new(prefactor * v, 0.0)
    })
}
