//! Ensemble–observable duality for the one-mode Gaussian measurement.
//!
//! For an average state `ρ_α` and measurement noise `β`, the dual ensemble
//! consists of displaced Gaussian states `ρ_{α′}(x′, y′)` with displacement
//! covariance `γ′`, where `α = α′ + γ′`.

use nalgebra::Matrix2;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gaussian::{MeasurementNoise, NoiseKind, OneModeCovariance, Variance, SYMPLECTIC_FORM};

/// A diagonal pair of quadrature values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuadPair {
    pub q: f64,
    pub p: f64,
}

/// The diagonal matrix `κ = √(I + (2αΔ⁻¹)⁻²) α`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KappaMatrix {
    pub kappa_q: f64,
    pub kappa_p: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DualEnsemble {
    pub alpha_prime: QuadPair,
    pub gamma_prime: QuadPair,
    pub parent_alpha: OneModeCovariance,
    pub kappa: KappaMatrix,
    /// Linear map `(x, y) ↦ (x′, y′) = κ(α + β)⁻¹(x, y)`, diagonal.
    pub shift: QuadPair,
}

impl DualEnsemble {
    /// Displacement `(x′, y′)` of the dual state attached to outcome `(x, y)`.
    pub fn dual_displacement(&self, x: f64, y: f64) -> (f64, f64) {
        (self.shift.q * x, self.shift.p * y)
    }
}

pub fn kappa_matrix(alpha: &OneModeCovariance) -> KappaMatrix {
    let d = Matrix2::new(
        SYMPLECTIC_FORM[0][0],
        SYMPLECTIC_FORM[0][1],
        SYMPLECTIC_FORM[1][0],
        SYMPLECTIC_FORM[1][1],
    );
    let a = Matrix2::new(alpha.q(), 0.0, 0.0, alpha.p());
    let d_inv = d.try_inverse().expect("symplectic form is invertible");
    let m = 2.0 * a * d_inv;
    let m_inv = m.try_inverse().expect("2αΔ⁻¹ is invertible for positive α");
    // (2αΔ⁻¹)⁻² = −I/(4α_qα_p), so the square root acts on a multiple of I.
    let inner = Matrix2::identity() + m_inv * m_inv;
    debug_assert!(inner[(0, 1)].abs() < 1e-14 && inner[(1, 0)].abs() < 1e-14);
    let root = Matrix2::new(
        inner[(0, 0)].max(0.0).sqrt(),
        0.0,
        0.0,
        inner[(1, 1)].max(0.0).sqrt(),
    );
    let k = root * a;
    KappaMatrix {
        kappa_q: k[(0, 0)],
        kappa_p: k[(1, 1)],
    }
}

/// Closed form of `α′`. With infinite momentum noise `α′_p = α_p`.
pub fn alpha_prime_closed_form(alpha: &OneModeCovariance, beta: &MeasurementNoise) -> QuadPair {
    let q = alpha.q() * (beta.q() + 0.25 / alpha.p()) / (alpha.q() + beta.q());
    let p = match beta.p() {
        Variance::Finite(bp) => alpha.p() * (bp + 0.25 / alpha.q()) / (alpha.p() + bp),
        Variance::Infinite => alpha.p(),
    };
    QuadPair { q, p }
}

pub fn dual_ensemble(alpha: &OneModeCovariance, beta: &MeasurementNoise) -> Result<DualEnsemble> {
    if beta.kind() == NoiseKind::SharpPosition {
        return Err(Error::InvalidForSharp);
    }
    let kappa = kappa_matrix(alpha);
    let inv_q = 1.0 / (alpha.q() + beta.q());
    let inv_p = beta.p().plus(alpha.p()).recip();
    let gamma_prime = QuadPair {
        q: kappa.kappa_q * inv_q * kappa.kappa_q,
        p: kappa.kappa_p * inv_p * kappa.kappa_p,
    };
    let alpha_prime = QuadPair {
        q: alpha.q() - gamma_prime.q,
        p: alpha.p() - gamma_prime.p,
    };

    let closed = alpha_prime_closed_form(alpha, beta);
    let deviation = ((alpha_prime.q - closed.q) / alpha.q())
        .abs()
        .max(((alpha_prime.p - closed.p) / alpha.p()).abs());
    if deviation > 1e-12 {
        return Err(Error::Inconsistent {
            what: "dual covariance via κ vs closed form",
            deviation,
        });
    }

    Ok(DualEnsemble {
        alpha_prime,
        gamma_prime,
        parent_alpha: *alpha,
        kappa,
        shift: QuadPair {
            q: kappa.kappa_q * inv_q,
            p: kappa.kappa_p * inv_p,
        },
    })
}

/// Mutual information of the dual ensemble under the sharp position measurement.
pub fn accessible_info_sharp_position(dual: &DualEnsemble) -> f64 {
    let a = dual.alpha_prime.q;
    0.5 * ((a + dual.gamma_prime.q) / a).ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capacity::{capacity_alpha, classify_regime, Regime};
    use crate::gaussian::{make_covariance, make_noise};

    const INF: f64 = f64::INFINITY;

    fn cov(q: f64, p: f64) -> OneModeCovariance {
        make_covariance(q, p).unwrap()
    }

    fn noise(q: f64, p: f64) -> MeasurementNoise {
        make_noise(q, p).unwrap()
    }

    #[test]
    fn kappa_examples() {
        let k = kappa_matrix(&cov(0.5, 0.5));
        assert_eq!((k.kappa_q, k.kappa_p), (0.0, 0.0));
        let k = kappa_matrix(&cov(1.0, 1.0));
        assert!((k.kappa_q - 0.75f64.sqrt()).abs() < 1e-15);
        assert!((k.kappa_p - 0.866_025_403_784_438_6).abs() < 1e-12);
        let k = kappa_matrix(&cov(1.0, 2.0));
        let f = 0.875f64.sqrt();
        assert!((k.kappa_q - f).abs() < 1e-15 && (k.kappa_p - 2.0 * f).abs() < 1e-15);
    }

    #[test]
    fn dual_examples() {
        let d = dual_ensemble(&cov(1.0, 1.0), &noise(0.2, 5.0)).unwrap();
        assert!((d.gamma_prime.q - 0.625).abs() < 1e-15);
        assert!((d.gamma_prime.p - 0.125).abs() < 1e-15);
        assert!((d.alpha_prime.q - 0.375).abs() < 1e-15);
        assert!((d.alpha_prime.p - 0.875).abs() < 1e-15);

        let d = dual_ensemble(&cov(0.5, 0.5), &noise(0.7, 3.0)).unwrap();
        assert_eq!((d.gamma_prime.q, d.gamma_prime.p), (0.0, 0.0));
        assert_eq!((d.alpha_prime.q, d.alpha_prime.p), (0.5, 0.5));

        let d = dual_ensemble(&cov(1.0, 1.0), &noise(0.2, INF)).unwrap();
        assert_eq!(d.alpha_prime.p, 1.0);
        assert!((d.alpha_prime.q - 0.375).abs() < 1e-15);

        assert_eq!(
            dual_ensemble(&cov(1.0, 1.0), &noise(0.0, INF)),
            Err(Error::InvalidForSharp)
        );
    }

    #[test]
    fn accessible_info_examples() {
        let d = dual_ensemble(&cov(1.0, 1.0), &noise(0.2, 5.0)).unwrap();
        let v = accessible_info_sharp_position(&d);
        assert!((v - 0.490_414_626_505_863_1).abs() < 1e-12);
        assert!((v - 0.5 * (1.2f64 / 0.45).ln()).abs() < 1e-14);

        let d = dual_ensemble(&cov(0.5, 0.5), &noise(0.2, 5.0)).unwrap();
        assert_eq!(accessible_info_sharp_position(&d), 0.0);

        let a = cov(1.0, 2.0);
        let b = noise(0.2, INF);
        let v = accessible_info_sharp_position(&dual_ensemble(&a, &b).unwrap());
        assert!((v - 0.653_125_826_723_177_1).abs() < 1e-12);
        assert!((v - capacity_alpha(&a, &b)).abs() < 1e-12);
    }

    #[test]
    fn dual_displacement_has_gamma_prime_covariance() {
        // (x, y) ~ N(0, α + β) maps to N(0, γ′)
        let a = cov(1.3, 0.9);
        let b = noise(0.4, 1.1);
        let d = dual_ensemble(&a, &b).unwrap();
        let vq = d.shift.q * d.shift.q * (a.q() + b.q());
        let vp = d.shift.p * d.shift.p * (a.p() + 1.1);
        assert!((vq - d.gamma_prime.q).abs() < 1e-14);
        assert!((vp - d.gamma_prime.p).abs() < 1e-14);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn pair() -> impl Strategy<Value = (f64, f64)> {
            (0.26f64..4.0, 0.26f64..4.0).prop_filter("product below 1/4", |(a, b)| a * b >= 0.25)
        }

        proptest! {
            #[test]
            fn average_state_conserved((aq, ap) in pair(), (bq, bp) in pair()) {
                let a = cov(aq, ap);
                let d = dual_ensemble(&a, &noise(bq, bp)).unwrap();
                prop_assert!((d.alpha_prime.q + d.gamma_prime.q - a.q()).abs() <= 1e-14 * a.q().max(1.0));
                prop_assert!((d.alpha_prime.p + d.gamma_prime.p - a.p()).abs() <= 1e-14 * a.p().max(1.0));
            }

            #[test]
            fn two_routes_agree((aq, ap) in pair(), (bq, bp) in pair()) {
                let a = cov(aq, ap);
                let b = noise(bq, bp);
                let d = dual_ensemble(&a, &b).unwrap();
                let c = alpha_prime_closed_form(&a, &b);
                prop_assert!((d.alpha_prime.q - c.q).abs() < 1e-12);
                prop_assert!((d.alpha_prime.p - c.p).abs() < 1e-12);
            }

            #[test]
            fn duality_capacity_identity_in_l((bq, bp) in pair(), t in 0.0f64..1.0, s in 0.0f64..1.0) {
                // α_p below 1/(4c) puts the critical squeezing left of the interval
                let c = 0.5 * (bq / bp).sqrt();
                let ap_max = (0.999 / (4.0 * c)).min(4.0);
                prop_assume!(ap_max > 0.26);
                let ap = 0.26 + t * (ap_max - 0.26);
                let aq = 0.25 / ap + s * (4.0 - 0.25 / ap);
                let a = cov(aq, ap);
                let b = noise(bq, bp);
                prop_assert_eq!(classify_regime(&a, &b), Regime::L);
                let d = dual_ensemble(&a, &b).unwrap();
                prop_assert!((accessible_info_sharp_position(&d) - capacity_alpha(&a, &b)).abs() < 1e-12);
            }

            #[test]
            fn dual_states_are_physical((aq, ap) in pair(), (bq, bp) in pair(), pos in any::<bool>()) {
                let a = cov(aq, ap);
                let b = if pos { noise(bq, INF) } else { noise(bq, bp) };
                let d = dual_ensemble(&a, &b).unwrap();
                prop_assert!(d.alpha_prime.q * d.alpha_prime.p >= 0.25 * (1.0 - 1e-12));
            }
        }
    }
}
