//! Quantum central limit demo: symmetrized `n`-fold products converge to the
//! Gaussian state with the same covariance.
//!
//! Mixing `n = 2^m` copies of a centered state with the orthogonal matrix
//! `H^{⊗m}` (`H` the 2×2 Hadamard) and tracing out all but one output mode
//! gives, for every row but the first, the characteristic function
//! `φ(z/√n)^{n/2} φ(−z/√n)^{n/2}`.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use super::fock::{FockOperator, C64};
use super::quadrature::QuadratureGrid;
use crate::error::{Error, Result};
use crate::gaussian::OneModeCovariance;

/// A quantum characteristic function `φ(x, y) = Tr[ρ D(x, y)]`.
#[derive(Clone)]
pub enum CharFn {
    Gaussian(OneModeCovariance),
    Fock(Arc<FockOperator>),
    /// Arbitrary callable with its covariance `(var_q, var_p, cov_qp)`.
    Custom {
        phi: Arc<dyn Fn(f64, f64) -> C64 + Send + Sync>,
        covariance: (f64, f64, f64),
    },
}

impl fmt::Debug for CharFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CharFn::Gaussian(a) => write!(f, "Gaussian({a:?})"),
            CharFn::Fock(rho) => write!(f, "Fock(dim {})", rho.dim()),
            CharFn::Custom { covariance, .. } => write!(f, "Custom({covariance:?})"),
        }
    }
}

impl CharFn {
    pub fn fock(rho: FockOperator) -> Self {
        CharFn::Fock(Arc::new(rho))
    }

    pub fn eval(&self, x: f64, y: f64) -> C64 {
        match self {
            CharFn::Gaussian(_) => gaussian_log(self.covariance(), x, y).exp(),
            CharFn::Fock(rho) => rho.charfn(x, y),
            CharFn::Custom { phi, .. } => phi(x, y),
        }
    }

    /// `(var_q, var_p, cov_qp)`.
    pub fn covariance(&self) -> (f64, f64, f64) {
        match self {
            CharFn::Gaussian(a) => (a.q(), a.p(), 0.0),
            CharFn::Fock(rho) => {
                let m = rho.moments();
                (m.var_q(), m.var_p(), m.cov_qp())
            }
            CharFn::Custom { covariance, .. } => *covariance,
        }
    }

    /// Charfn of the centered Gaussian state with this covariance.
    pub fn gaussian_limit(&self, x: f64, y: f64) -> C64 {
        gaussian_log(self.covariance(), x, y).exp()
    }
}

// D(x, y) = exp i(yq − xp), so ln φ = −½ Var(yq − xp)
fn gaussian_log((vq, vp, c): (f64, f64, f64), x: f64, y: f64) -> C64 {
    C64::new(-0.5 * (y * y * vq + x * x * vp - 2.0 * x * y * c), 0.0)
}

fn check_power_of_two(n: usize) -> Result<u32> {
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::InvalidArgument(format!("n must be a power of two at least 2, got {n}")));
    }
    Ok(n.trailing_zeros())
}

/// `φ(z/√n)^{n/2} φ(−z/√n)^{n/2}` for `n = 2^m`, `m ≥ 1`.
pub fn clt_marginal_charfn(phi: &CharFn, n: usize, z: (f64, f64)) -> Result<C64> {
    check_power_of_two(n)?;
    let s = (n as f64).sqrt();
    let (x, y) = (z.0 / s, z.1 / s);
    let half = (n / 2) as f64;
    Ok(match phi {
        CharFn::Gaussian(_) => {
            let cov = phi.covariance();
            (half * (gaussian_log(cov, x, y) + gaussian_log(cov, -x, -y))).exp()
        }
        // φ(−z) = conj φ(z) for a Hermitian state
        CharFn::Fock(_) => C64::new(phi.eval(x, y).norm_sqr().powi((n / 2) as i32), 0.0),
        CharFn::Custom { .. } => (phi.eval(x, y) * phi.eval(-x, -y)).powu((n / 2) as u32),
    })
}

/// Charfn of output mode `row` of `H^{⊗m}` applied to `n` copies, by the
/// direct product over the row entries `(−1)^{popcount(row & j)}/√n`.
pub fn hadamard_row_charfn(phi: &CharFn, n: usize, row: usize, z: (f64, f64)) -> Result<C64> {
    check_power_of_two(n)?;
    if row >= n {
        return Err(Error::InvalidArgument(format!("row {row} out of range for n = {n}")));
    }
    let s = (n as f64).sqrt();
    let plus = phi.eval(z.0 / s, z.1 / s);
    let minus = phi.eval(-z.0 / s, -z.1 / s);
    Ok((0..n).fold(C64::new(1.0, 0.0), |acc, j| {
        if (row & j).count_ones() % 2 == 0 {
            acc * plus
        } else {
            acc * minus
        }
    }))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CltRow {
    pub n: usize,
    pub sup_deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CltReport {
    pub radius: f64,
    pub points: usize,
    pub rows: Vec<CltRow>,
    pub non_increasing: bool,
}

/// Grid points of the disk `|z| ≤ grid.half_width` on a uniform square lattice
/// of `grid.nodes_per_axis` points per axis.
pub fn disk_points(grid: &QuadratureGrid) -> Vec<(f64, f64)> {
    let r = grid.half_width;
    let k = grid.nodes_per_axis;
    let step = 2.0 * r / (k - 1) as f64;
    let mut out = Vec::new();
    for i in 0..k {
        for j in 0..k {
            let (x, y) = (-r + step * i as f64, -r + step * j as f64);
            if x * x + y * y <= r * r * (1.0 + 1e-12) {
                out.push((x, y));
            }
        }
    }
    out
}

/// Sup over the disk of `|clt_marginal_charfn − Gaussian charfn|` for each `n`.
pub fn clt_convergence_report(state: &CharFn, n_list: &[usize], grid: &QuadratureGrid) -> Result<CltReport> {
    grid.validate()?;
    if n_list.is_empty() {
        return Err(Error::InvalidArgument("n list is empty".into()));
    }
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("n list must be strictly ascending".into()));
    }
    let points = disk_points(grid);
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let mut sup: f64 = 0.0;
        for &z in &points {
            let d = (clt_marginal_charfn(state, n, z)? - state.gaussian_limit(z.0, z.1)).norm();
            sup = sup.max(d);
        }
        rows.push(CltRow { n, sup_deviation: sup });
    }
    let non_increasing = rows.windows(2).all(|w| w[1].sup_deviation <= w[0].sup_deviation);
    Ok(CltReport {
        radius: grid.half_width,
        points: points.len(),
        rows,
        non_increasing,
    })
}
