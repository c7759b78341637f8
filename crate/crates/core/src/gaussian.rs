//! Validated one-mode Gaussian quantities.
//!
//! Units are ħ = 1 with vacuum quadrature variance 1/2. Entropies are in nats
//! and never include the additive constant fixed by the normalization of the
//! outcome measure; every information quantity is a difference of two such
//! terms, so the constant drops out.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Quadrature variance of the vacuum state.
pub const VACUUM_VARIANCE: f64 = 0.5;

/// Symplectic form fixing the commutator `[q, p] = i`.
pub const SYMPLECTIC_FORM: [[f64; 2]; 2] = [[0.0, 1.0], [-1.0, 0.0]];

/// Relative slack accepted on Heisenberg-type boundaries such as `α_q α_p = 1/4`.
pub const BOUNDARY_SLACK: f64 = 1e-12;

const MIN_PRODUCT: f64 = 0.25;

fn check_finite(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite { name, value })
    }
}

fn check_uncertainty(name: &'static str, product: f64) -> Result<()> {
    if product < MIN_PRODUCT * (1.0 - BOUNDARY_SLACK) {
        Err(Error::HeisenbergViolation { name, product })
    } else {
        Ok(())
    }
}

/// A variance on the extended half-line `(0, +∞]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Variance {
    Finite(f64),
    Infinite,
}

impl Variance {
    pub fn is_finite(self) -> bool {
        matches!(self, Variance::Finite(_))
    }

    /// Value as an IEEE float, `+∞` for the infinite case.
    pub fn as_f64(self) -> f64 {
        match self {
            Variance::Finite(v) => v,
            Variance::Infinite => f64::INFINITY,
        }
    }

    /// `self + v` with `∞ + v = ∞`.
    pub fn plus(self, v: f64) -> Variance {
        match self {
            Variance::Finite(x) => Variance::Finite(x + v),
            Variance::Infinite => Variance::Infinite,
        }
    }

    /// Reciprocal with `1/∞ = 0`.
    pub fn recip(self) -> f64 {
        match self {
            Variance::Finite(x) => 1.0 / x,
            Variance::Infinite => 0.0,
        }
    }
}

impl From<f64> for Variance {
    fn from(v: f64) -> Self {
        if v == f64::INFINITY {
            Variance::Infinite
        } else {
            Variance::Finite(v)
        }
    }
}

impl fmt::Display for Variance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Variance::Finite(v) => write!(f, "{v}"),
            Variance::Infinite => write!(f, "inf"),
        }
    }
}

// JSON has no infinity; the infinite variance travels as the string "inf".
impl Serialize for Variance {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Variance::Finite(v) => s.serialize_f64(*v),
            Variance::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Variance {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Variance::Finite(v)),
            Raw::Text(t) if matches!(t.as_str(), "inf" | "+inf" | "infinity" | "Infinity") => {
                Ok(Variance::Infinite)
            }
            Raw::Text(t) => Err(serde::de::Error::custom(format!("not a variance: {t}"))),
        }
    }
}

/// Diagonal covariance `diag(α_q, α_p)` of a centered Gaussian state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPair")]
pub struct OneModeCovariance {
    alpha_q: f64,
    alpha_p: f64,
}

#[derive(Deserialize)]
struct RawPair {
    alpha_q: f64,
    alpha_p: f64,
}

impl TryFrom<RawPair> for OneModeCovariance {
    type Error = Error;
    fn try_from(raw: RawPair) -> Result<Self> {
        make_covariance(raw.alpha_q, raw.alpha_p)
    }
}

impl OneModeCovariance {
    pub fn q(&self) -> f64 {
        self.alpha_q
    }

    pub fn p(&self) -> f64 {
        self.alpha_p
    }

    pub fn vacuum() -> Self {
        OneModeCovariance {
            alpha_q: VACUUM_VARIANCE,
            alpha_p: VACUUM_VARIANCE,
        }
    }

    /// Mean energy `(α_q + α_p)/2` for the oscillator Hamiltonian.
    pub fn energy(&self) -> f64 {
        0.5 * (self.alpha_q + self.alpha_p)
    }

    /// True when `α_q α_p = 1/4` up to the boundary slack (pure state).
    pub fn is_minimum_uncertainty(&self) -> bool {
        (self.alpha_q * self.alpha_p - MIN_PRODUCT).abs() <= MIN_PRODUCT * 1e-10
    }

    /// Swap the roles of position and momentum.
    pub fn swapped(&self) -> Self {
        OneModeCovariance {
            alpha_q: self.alpha_p,
            alpha_p: self.alpha_q,
        }
    }
}

/// Validate a covariance matrix `diag(α_q, α_p)`.
pub fn make_covariance(alpha_q: f64, alpha_p: f64) -> Result<OneModeCovariance> {
    check_finite("alpha_q", alpha_q)?;
    check_finite("alpha_p", alpha_p)?;
    if alpha_q <= 0.0 {
        return Err(Error::NonPositive {
            name: "alpha_q",
            value: alpha_q,
        });
    }
    if alpha_p <= 0.0 {
        return Err(Error::NonPositive {
            name: "alpha_p",
            value: alpha_p,
        });
    }
    check_uncertainty("alpha_q * alpha_p", alpha_q * alpha_p)?;
    Ok(OneModeCovariance { alpha_q, alpha_p })
}

/// Classification of a one-mode Gaussian measurement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    /// Joint noisy measurement of position and momentum (type 1).
    Joint,
    /// Position measured with Gaussian noise, momentum discarded (type 2).
    NoisyPosition,
    /// Sharp position measurement (type 3).
    SharpPosition,
}

impl NoiseKind {
    pub fn type_number(self) -> u8 {
        match self {
            NoiseKind::Joint => 1,
            NoiseKind::NoisyPosition => 2,
            NoiseKind::SharpPosition => 3,
        }
    }
}

/// Noise covariance `β = diag(β_q, β_p)` of the measurement, with `β_p` allowed
/// to be infinite.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawNoise")]
pub struct MeasurementNoise {
    beta_q: f64,
    beta_p: Variance,
}

#[derive(Deserialize)]
struct RawNoise {
    beta_q: f64,
    beta_p: Variance,
}

impl TryFrom<RawNoise> for MeasurementNoise {
    type Error = Error;
    fn try_from(raw: RawNoise) -> Result<Self> {
        make_noise(raw.beta_q, raw.beta_p)
    }
}

impl MeasurementNoise {
    pub fn q(&self) -> f64 {
        self.beta_q
    }

    pub fn p(&self) -> Variance {
        self.beta_p
    }

    pub fn kind(&self) -> NoiseKind {
        match (self.beta_q == 0.0, self.beta_p) {
            (true, _) => NoiseKind::SharpPosition,
            (false, Variance::Infinite) => NoiseKind::NoisyPosition,
            (false, Variance::Finite(_)) => NoiseKind::Joint,
        }
    }

    /// Minimal-noise heterodyne measurement, `β = diag(1/2, 1/2)`.
    pub fn heterodyne() -> Self {
        MeasurementNoise {
            beta_q: VACUUM_VARIANCE,
            beta_p: Variance::Finite(VACUUM_VARIANCE),
        }
    }

    /// The momentum-position mirror `(β_p, β_q)`; only defined for finite noise.
    pub fn swapped(&self) -> Option<Self> {
        match self.beta_p {
            Variance::Finite(bp) => Some(MeasurementNoise {
                beta_q: bp,
                beta_p: Variance::Finite(self.beta_q),
            }),
            Variance::Infinite => None,
        }
    }
}

/// Validate a measurement noise. `β_q = 0` is legal only together with `β_p = ∞`.
pub fn make_noise(beta_q: f64, beta_p: impl Into<Variance>) -> Result<MeasurementNoise> {
    let beta_p = beta_p.into();
    check_finite("beta_q", beta_q)?;
    if beta_q < 0.0 {
        return Err(Error::NonPositive {
            name: "beta_q",
            value: beta_q,
        });
    }
    match beta_p {
        Variance::Infinite => {}
        Variance::Finite(bp) => {
            check_finite("beta_p", bp)?;
            if bp <= 0.0 {
                return Err(Error::NonPositive {
                    name: "beta_p",
                    value: bp,
                });
            }
            if beta_q == 0.0 {
                return Err(Error::InvalidSharp);
            }
            check_uncertainty("beta_q * beta_p", beta_q * bp)?;
        }
    }
    Ok(MeasurementNoise { beta_q, beta_p })
}

/// Energy bound `E` on the mean of `H = (q² + p²)/2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnergyConstraint {
    energy: f64,
}

impl EnergyConstraint {
    pub fn new(energy: f64) -> Result<Self> {
        check_finite("energy", energy)?;
        if energy < VACUUM_VARIANCE {
            return Err(Error::EnergyBelowVacuum { energy });
        }
        Ok(EnergyConstraint { energy })
    }

    pub fn value(&self) -> f64 {
        self.energy
    }

    /// Largest admissible `α_q + α_p`.
    pub fn trace_bound(&self) -> f64 {
        2.0 * self.energy
    }
}

/// Outcome distribution of a Gaussian measurement on a centered Gaussian state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OutputGaussian {
    pub var_q: f64,
    pub var_p: Variance,
}

/// Output Gaussian: the measurement noise adds to the state covariance.
pub fn output_density(alpha: &OneModeCovariance, beta: &MeasurementNoise) -> OutputGaussian {
    OutputGaussian {
        var_q: alpha.q() + beta.q(),
        var_p: beta.p().plus(alpha.p()),
    }
}

/// Output differential entropy of `ρ_α` without the normalization constant.
pub fn output_entropy_term(alpha: &OneModeCovariance, beta: &MeasurementNoise) -> f64 {
    let out = output_density(alpha, beta);
    match out.var_p {
        Variance::Finite(vp) => 0.5 * (out.var_q * vp).ln(),
        Variance::Infinite => 0.5 * out.var_q.ln(),
    }
}

/// Convert nats to bits.
pub fn nats_to_bits(nats: f64) -> f64 {
    nats / std::f64::consts::LN_2
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn covariance_validation() {
        assert!(make_covariance(0.5, 0.5).unwrap().is_minimum_uncertainty());
        assert!(make_covariance(1.0, 1.0).is_ok());
        assert!(matches!(
            make_covariance(0.1, 0.1),
            Err(Error::HeisenbergViolation { .. })
        ));
        assert!(matches!(
            make_covariance(-1.0, 2.0),
            Err(Error::NonPositive { .. })
        ));
        assert!(matches!(
            make_covariance(f64::NAN, 2.0),
            Err(Error::NonFinite { .. })
        ));
        // exact minimum uncertainty with rounding noise is accepted
        assert!(make_covariance(2.0, 0.125 * (1.0 - 1e-14)).is_ok());
    }

    #[test]
    fn noise_kinds() {
        assert_eq!(make_noise(0.5, 0.5).unwrap().kind(), NoiseKind::Joint);
        assert_eq!(
            make_noise(0.2, Variance::Infinite).unwrap().kind(),
            NoiseKind::NoisyPosition
        );
        assert_eq!(
            make_noise(0.0, f64::INFINITY).unwrap().kind(),
            NoiseKind::SharpPosition
        );
        assert_eq!(make_noise(0.0, f64::INFINITY).unwrap().kind().type_number(), 3);
        assert_eq!(make_noise(0.0, 1.0), Err(Error::InvalidSharp));
        assert!(matches!(
            make_noise(0.1, 1.0),
            Err(Error::HeisenbergViolation { .. })
        ));
        assert!(matches!(make_noise(0.5, -1.0), Err(Error::NonPositive { .. })));
    }

    #[test]
    fn energy_floor() {
        assert!(EnergyConstraint::new(0.5).is_ok());
        assert!(matches!(
            EnergyConstraint::new(0.4),
            Err(Error::EnergyBelowVacuum { .. })
        ));
    }

    #[test]
    fn entropy_terms() {
        let a = make_covariance(1.0, 1.0).unwrap();
        let b = make_noise(0.5, 0.5).unwrap();
        assert!((output_entropy_term(&a, &b) - 0.5 * 2.25f64.ln()).abs() < 1e-15);
        assert!((output_entropy_term(&a, &b) - 0.405_465_108_108_164_4).abs() < 1e-12);

        let vac = OneModeCovariance::vacuum();
        let sharp = make_noise(0.0, Variance::Infinite).unwrap();
        assert!((output_entropy_term(&vac, &sharp) - (-0.346_573_590_279_972_6)).abs() < 1e-12);

        let noisy = make_noise(0.2, Variance::Infinite).unwrap();
        assert!((output_entropy_term(&a, &noisy) - 0.5 * 1.2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn output_variances() {
        let out = output_density(&OneModeCovariance::vacuum(), &MeasurementNoise::heterodyne());
        assert_eq!(out.var_q, 1.0);
        assert_eq!(out.var_p, Variance::Finite(1.0));

        let a = make_covariance(1.0, 2.0).unwrap();
        let out = output_density(&a, &make_noise(0.2, Variance::Infinite).unwrap());
        assert!((out.var_q - 1.2).abs() < 1e-15);
        assert_eq!(out.var_p, Variance::Infinite);

        let out = output_density(
            &OneModeCovariance::vacuum(),
            &make_noise(0.0, Variance::Infinite).unwrap(),
        );
        assert_eq!(out.var_q, 0.5);
    }

    #[test]
    fn variance_json() {
        let beta = make_noise(0.2, Variance::Infinite).unwrap();
        let text = serde_json::to_string(&beta).unwrap();
        assert_eq!(text, r#"{"beta_q":0.2,"beta_p":"inf"}"#);
        let back: MeasurementNoise = serde_json::from_str(&text).unwrap();
        assert_eq!(back, beta);
        assert!(serde_json::from_str::<MeasurementNoise>(r#"{"beta_q":0.0,"beta_p":1.0}"#).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn valid_pair() -> impl Strategy<Value = (f64, f64)> {
            (0.05f64..5.0, 0.05f64..5.0).prop_filter("heisenberg", |(a, b)| a * b >= 0.25)
        }

        proptest! {
            #[test]
            fn entropy_increases_with_each_variance((aq, ap) in valid_pair(), (bq, bp) in valid_pair(), bump in 1e-3f64..1.0) {
                let beta = make_noise(bq, bp).unwrap();
                let base = output_entropy_term(&make_covariance(aq, ap).unwrap(), &beta);
                let up_q = output_entropy_term(&make_covariance(aq + bump, ap).unwrap(), &beta);
                let up_p = output_entropy_term(&make_covariance(aq, ap + bump).unwrap(), &beta);
                prop_assert!(up_q > base);
                prop_assert!(up_p > base);
            }

            #[test]
            fn noise_adds_to_covariance((aq, ap) in valid_pair(), (bq, bp) in valid_pair()) {
                let a = make_covariance(aq, ap).unwrap();
                let out = output_density(&a, &make_noise(bq, bp).unwrap());
                prop_assert!(out.var_q >= a.q());
                prop_assert!(out.var_p.as_f64() >= a.p());
            }

            #[test]
            fn covariance_round_trip((aq, ap) in valid_pair()) {
                let a = make_covariance(aq, ap).unwrap();
                prop_assert_eq!(make_covariance(a.q(), a.p()).unwrap(), a);
            }
        }
    }
}
