//! Operator-level check of the dual ensemble on truncated matrices.
//!
//! For outcome `(x, y)` the dual state is `ρ̄^{1/2} m ρ̄^{1/2} / Tr[ρ̄ m]` with
//! `m = D(x, y) ρ_β D(x, y)*`; it should equal the displaced Gaussian state
//! `ρ_{α′}` at `(x′, y′)`.

use nalgebra::DMatrix;

use super::fock::{displace_state, displacement_elements, gaussian_state_fock, gaussian_state_fock_auto, FockOperator, C64, DEFAULT_TRUNCATION};
use crate::duality::dual_ensemble;
use crate::error::{Error, Result};
use crate::gaussian::{make_covariance, MeasurementNoise, NoiseKind, OneModeCovariance, Variance};

/// `|A|₁` for Hermitian `A`.
pub fn trace_norm(a: &DMatrix<C64>) -> f64 {
    let h = (a + a.adjoint()) * C64::new(0.5, 0.0);
    h.symmetric_eigenvalues().iter().map(|v| v.abs()).sum()
}

fn hermitian_sqrt(a: &DMatrix<C64>) -> DMatrix<C64> {
    let h = (a + a.adjoint()) * C64::new(0.5, 0.0);
    let eig = h.symmetric_eigen();
    let roots = eig.eigenvalues.map(|v| C64::new(v.max(0.0).sqrt(), 0.0));
    let v = &eig.eigenvectors;
    v * DMatrix::from_diagonal(&roots) * v.adjoint()
}

/// Default outcome samples: a 5×5 grid on `[−2, 2]²`.
pub fn default_samples() -> Vec<(f64, f64)> {
    let axis = [-2.0, -1.0, 0.0, 1.0, 2.0];
    axis.iter().flat_map(|&x| axis.iter().map(move |&y| (x, y))).collect()
}

/// Largest trace-norm distance between the operator-level dual states and
/// their Gaussian closed form over [`default_samples`].
pub fn dual_operator_check(alpha: &OneModeCovariance, beta: &MeasurementNoise, truncation: usize) -> Result<f64> {
    dual_operator_check_at(alpha, beta, truncation, &default_samples())
}

pub fn dual_operator_check_at(
    alpha: &OneModeCovariance,
    beta: &MeasurementNoise,
    truncation: usize,
    samples: &[(f64, f64)],
) -> Result<f64> {
    let bp = match (beta.kind(), beta.p()) {
        (NoiseKind::Joint, Variance::Finite(bp)) => bp,
        (NoiseKind::SharpPosition, _) => return Err(Error::InvalidForSharp),
        _ => {
            return Err(Error::UnsupportedNoise(
                "operator duality check needs a finite noise state (type 1)",
            ))
        }
    };
    let dual = dual_ensemble(alpha, beta)?;
    let rho_bar = gaussian_state_fock(alpha, truncation)?;
    let rho_beta = gaussian_state_fock_auto(&make_covariance(beta.q(), bp)?, DEFAULT_TRUNCATION.max(truncation))?;
    let member = gaussian_state_fock(&make_covariance(dual.alpha_prime.q, dual.alpha_prime.p)?, truncation)?;
    let root = hermitian_sqrt(rho_bar.matrix());

    let mut worst: f64 = 0.0;
    for &(x, y) in samples {
        let d = displacement_elements(x, y, truncation + 1, rho_beta.dim());
        let m = &d * rho_beta.matrix() * d.adjoint();
        let num = &root * &m * &root;
        let norm = rho_bar.expectation(&m);
        let dual_state = num / norm;
        let (xp, yp) = dual.dual_displacement(x, y);
        let want = displace_state(&member, xp, yp, truncation)?;
        worst = worst.max(trace_norm(&(dual_state - want.matrix())));
    }
    Ok(worst)
}

/// The dual state at a single outcome, for inspection.
pub fn operator_dual_state(
    alpha: &OneModeCovariance,
    beta: &MeasurementNoise,
    truncation: usize,
    x: f64,
    y: f64,
) -> Result<FockOperator> {
    let bp = match beta.p() {
        Variance::Finite(bp) if beta.kind() == NoiseKind::Joint => bp,
        _ => return Err(Error::UnsupportedNoise("operator dual state needs type 1 noise")),
    };
    let rho_bar = gaussian_state_fock(alpha, truncation)?;
    let rho_beta = gaussian_state_fock_auto(&make_covariance(beta.q(), bp)?, DEFAULT_TRUNCATION.max(truncation))?;
    let root = hermitian_sqrt(rho_bar.matrix());
    let d = displacement_elements(x, y, truncation + 1, rho_beta.dim());
    let m = &d * rho_beta.matrix() * d.adjoint();
    let norm = rho_bar.expectation(&m);
    Ok(FockOperator::from_matrix(&root * &m * &root / norm))
}
