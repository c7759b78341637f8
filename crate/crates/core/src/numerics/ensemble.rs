//! Discrete ensembles of displaced states and their mutual information.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::density::{entropy_of_chi, fock_phi, Axes, Spectral};
use super::fock::{FockOperator, Moments, C64};
use super::quadrature::{hermite_nodes, QuadratureGrid};
use crate::capacity::{optimal_squeezing, GaussianEnsembleSpec};
use crate::error::{Error, Result};
use crate::gaussian::{MeasurementNoise, OneModeCovariance};

const WEIGHT_TOLERANCE: f64 = 1e-10;
const INFORMATION_TOLERANCE: f64 = -1e-8;

/// A state that members of an ensemble displace.
#[derive(Clone, Debug)]
pub enum BaseState {
    Fock(FockOperator),
    /// `S(r)(cos θ|0⟩ + sin θ|1⟩)` with `S(r)` scaling `q` by `e^r`.
    SqueezedSuperposition { r: f64, theta: f64 },
}

impl BaseState {
    /// Squeezed vacuum with position variance `delta`.
    pub fn squeezed_vacuum(delta: f64) -> Self {
        BaseState::SqueezedSuperposition {
            r: 0.5 * (2.0 * delta).ln(),
            theta: 0.0,
        }
    }

    pub fn moments(&self) -> Moments {
        match self {
            BaseState::Fock(rho) => rho.moments(),
            &BaseState::SqueezedSuperposition { r, theta } => {
                let (s, c) = theta.sin_cos();
                let n = 0.5 + s * s;
                Moments {
                    mean_q: r.exp() * std::f64::consts::SQRT_2 * c * s,
                    mean_p: 0.0,
                    qq: (2.0 * r).exp() * n,
                    pp: (-2.0 * r).exp() * n,
                    qp: 0.0,
                }
            }
        }
    }

    /// Characteristic function `Tr[ρ D(x, y)]`.
    pub fn charfn(&self) -> Box<dyn Fn(f64, f64) -> C64 + '_> {
        match self {
            BaseState::Fock(rho) => Box::new(fock_phi(rho)),
            &BaseState::SqueezedSuperposition { r, theta } => {
                let (s, c) = theta.sin_cos();
                Box::new(move |x, y| {
                    let (x, y) = ((-r).exp() * x, r.exp() * y);
                    let m = 0.5 * (x * x + y * y);
                    let poly = C64::new(c * c + s * s * (1.0 - m), c * s * std::f64::consts::SQRT_2 * y);
                    poly * (-0.5 * m).exp()
                })
            }
        }
    }

    /// Fock matrix of the base state (for cross-checks).
    pub fn to_fock(&self, truncation: usize) -> Result<FockOperator> {
        match self {
            BaseState::Fock(rho) => Ok(rho.clone()),
            &BaseState::SqueezedSuperposition { r, theta } => {
                let dim = truncation + 1;
                let pad = dim + 80;
                let a = super::fock::annihilation(pad);
                let ad = a.transpose();
                let u = ((&ad * &ad - &a * &a) * (0.5 * r)).exp();
                let mut psi0 = DVector::<f64>::zeros(pad);
                psi0[0] = theta.cos();
                psi0[1] = theta.sin();
                let psi = (u * psi0).rows(0, dim).map(|v| C64::new(v, 0.0));
                let rho = FockOperator::pure(&psi);
                let deficit = rho.trace_deficit();
                if deficit > super::fock::TRUNCATION_TOLERANCE {
                    return Err(Error::TruncationInsufficient {
                        truncation,
                        deficit,
                        tolerance: super::fock::TRUNCATION_TOLERANCE,
                    });
                }
                Ok(rho)
            }
        }
    }
}

/// Member `D(a, b) ρ_base D(a, b)*` with probability `weight`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnsembleMember {
    pub weight: f64,
    pub base: usize,
    pub shift: (f64, f64),
}

#[derive(Clone, Debug)]
pub struct DiscreteEnsemble {
    bases: Vec<BaseState>,
    members: Vec<EnsembleMember>,
}

impl DiscreteEnsemble {
    pub fn new(bases: Vec<BaseState>, members: Vec<EnsembleMember>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::InvalidArgument("ensemble has no members".into()));
        }
        let mut total = 0.0;
        for m in &members {
            if !(m.weight > 0.0 && m.weight.is_finite()) {
                return Err(Error::NonPositive {
                    name: "ensemble weight",
                    value: m.weight,
                });
            }
            if m.base >= bases.len() {
                return Err(Error::InvalidArgument(format!("member refers to missing base {}", m.base)));
            }
            if !(m.shift.0.is_finite() && m.shift.1.is_finite()) {
                return Err(Error::InvalidArgument("member displacement must be finite".into()));
            }
            total += m.weight;
        }
        if (total - 1.0).abs() > WEIGHT_TOLERANCE {
            return Err(Error::InvalidArgument(format!("ensemble weights sum to {total}, not 1")));
        }
        Ok(DiscreteEnsemble { bases, members })
    }

    /// Ensemble of undisplaced Fock-basis states.
    pub fn from_states(points: Vec<(f64, FockOperator)>) -> Result<Self> {
        let members = (0..points.len())
            .map(|i| EnsembleMember {
                weight: points[i].0,
                base: i,
                shift: (0.0, 0.0),
            })
            .collect();
        let bases = points.into_iter().map(|(_, rho)| BaseState::Fock(rho)).collect();
        Self::new(bases, members)
    }

    pub fn bases(&self) -> &[BaseState] {
        &self.bases
    }

    pub fn members(&self) -> &[EnsembleMember] {
        &self.members
    }

    pub fn average_moments(&self) -> Moments {
        let base: Vec<Moments> = self.bases.iter().map(BaseState::moments).collect();
        let shifted: Vec<(f64, Moments)> = self
            .members
            .iter()
            .map(|m| (m.weight, base[m.base].displaced(m.shift.0, m.shift.1)))
            .collect();
        Moments::mix(shifted.iter().map(|(w, m)| (*w, m)))
    }

    /// Average state in the Fock basis.
    pub fn average_state(&self, truncation: usize) -> Result<FockOperator> {
        let dim = truncation + 1;
        let mut acc = DMatrix::from_element(dim, dim, C64::new(0.0, 0.0));
        let bases = self
            .bases
            .iter()
            .map(|b| b.to_fock(truncation))
            .collect::<Result<Vec<_>>>()?;
        for m in &self.members {
            let shifted = super::fock::displace_state(&bases[m.base], m.shift.0, m.shift.1, truncation)?;
            acc += shifted.into_matrix() * C64::new(m.weight, 0.0);
        }
        Ok(FockOperator::from_matrix(acc))
    }
}

/// `I = h(ρ̄) − Σ wᵢ h(ρᵢ)` for the outcome densities of `beta`, in nats.
///
/// Entropy is displacement invariant, so member entropies are evaluated once per base.
pub fn mutual_information(ens: &DiscreteEnsemble, beta: &MeasurementNoise, grid: &QuadratureGrid) -> Result<f64> {
    grid.validate()?;
    let axes = Axes::of(beta)?;
    let base_moments: Vec<Moments> = ens.bases.iter().map(BaseState::moments).collect();
    let avg = ens.average_moments();

    let sigma_of = |m: &Moments| -> (f64, f64) {
        match axes {
            Axes::Joint { bq, bp } => ((m.var_q() + bq).sqrt(), (m.var_p() + bp).sqrt()),
            Axes::Position { bq } => ((m.var_q() + bq).sqrt(), 0.0),
        }
    };
    let mut sigma = sigma_of(&avg);
    for m in &base_moments {
        let s = sigma_of(m);
        sigma = (sigma.0.max(s.0), sigma.1.max(s.1));
    }
    let spectral = Spectral::new(axes, sigma, grid);
    let (ns, nt) = spectral.shape();

    let mut chi_avg = DMatrix::from_element(ns, nt, C64::new(0.0, 0.0));
    let mut member_term = 0.0;
    for (b, base) in ens.bases.iter().enumerate() {
        let mine: Vec<&EnsembleMember> = ens.members.iter().filter(|m| m.base == b).collect();
        if mine.is_empty() {
            continue;
        }
        let chi = spectral.sample(base.charfn());
        let weight: f64 = mine.iter().map(|m| m.weight).sum();
        member_term += weight * entropy_of_chi(&spectral, &chi, &base_moments[b], grid)?;

        // Σ w e^{i(s a + t b)} as a rank-limited product
        let es = DMatrix::from_fn(ns, mine.len(), |j, i| {
            C64::from_polar(mine[i].weight, spectral.s()[j] * mine[i].shift.0)
        });
        let et = DMatrix::from_fn(mine.len(), nt, |i, l| C64::from_polar(1.0, spectral.t()[l] * mine[i].shift.1));
        let phases = es * et;
        chi_avg += chi.component_mul(&phases);
    }
    let info = entropy_of_chi(&spectral, &chi_avg, &avg, grid)? - member_term;
    if info < INFORMATION_TOLERANCE {
        return Err(Error::NegativeInformation { value: info });
    }
    Ok(info)
}

/// The optimal Gaussian ensemble for `alpha` with its displacement law replaced
/// by a tensor Gauss–Hermite rule of `nodes` points per axis.
pub fn gaussian_ensemble_discretized(
    alpha: &OneModeCovariance,
    beta: &MeasurementNoise,
    nodes: usize,
) -> Result<(DiscreteEnsemble, GaussianEnsembleSpec)> {
    if nodes == 0 {
        return Err(Error::InvalidArgument("need at least one displacement node".into()));
    }
    let spec = GaussianEnsembleSpec::for_alpha(alpha, optimal_squeezing(alpha, beta))?;
    let rule = |gamma: f64| -> Vec<(f64, f64)> {
        if gamma < 1e-14 {
            return vec![(0.0, 1.0)];
        }
        let (u, w) = hermite_nodes(nodes);
        let norm = std::f64::consts::PI.sqrt();
        u.iter().zip(&w).map(|(u, w)| ((2.0 * gamma).sqrt() * u, w / norm)).collect()
    };
    let mut members = Vec::new();
    for &(a, wa) in &rule(spec.gamma_q) {
        for &(b, wb) in &rule(spec.gamma_p) {
            members.push(EnsembleMember {
                weight: wa * wb,
                base: 0,
                shift: (a, b),
            });
        }
    }
    // the Hermite weights sum to 1 only to rounding
    let total: f64 = members.iter().map(|m| m.weight).sum();
    for m in &mut members {
        m.weight /= total;
    }
    let ens = DiscreteEnsemble::new(vec![BaseState::squeezed_vacuum(spec.delta)], members)?;
    Ok((ens, spec))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capacity::capacity_alpha;
    use crate::gaussian::{make_covariance, make_noise};
    use crate::numerics::fock::{displace_state, gaussian_state_fock};

    fn cov(q: f64, p: f64) -> OneModeCovariance {
        make_covariance(q, p).unwrap()
    }

    fn noise(q: f64, p: f64) -> MeasurementNoise {
        make_noise(q, p).unwrap()
    }

    #[test]
    fn superposition_charfn_matches_fock() {
        let base = BaseState::SqueezedSuperposition { r: 0.3, theta: 0.7 };
        let rho = base.to_fock(60).unwrap();
        let phi = base.charfn();
        for (x, y) in [(0.0, 0.0), (0.4, -1.1), (1.7, 0.9), (-2.0, 2.5)] {
            assert!((phi(x, y) - rho.charfn(x, y)).norm() < 1e-10);
        }
        let m = base.moments();
        let n = rho.moments();
        assert!((m.mean_q - n.mean_q).abs() < 1e-10);
        assert!((m.qq - n.qq).abs() < 1e-10 && (m.pp - n.pp).abs() < 1e-10);
        assert!(n.qp.abs() < 1e-10 && n.mean_p.abs() < 1e-10);
    }

    #[test]
    fn squeezed_vacuum_is_gaussian() {
        let base = BaseState::squeezed_vacuum(1.6);
        let rho = gaussian_state_fock(&cov(1.6, 0.25 / 1.6), 60).unwrap();
        for (x, y) in [(0.5, 0.5), (-1.0, 2.0)] {
            assert!((base.charfn()(x, y) - rho.charfn(x, y)).norm() < 1e-10);
        }
    }

    #[test]
    fn single_member_carries_no_information() {
        let ens = DiscreteEnsemble::from_states(vec![(1.0, FockOperator::number_state(1, 10))]).unwrap();
        let i = mutual_information(&ens, &noise(0.5, 0.5), &QuadratureGrid::coarse()).unwrap();
        assert!(i.abs() < 1e-12);
    }

    #[test]
    fn coincident_coherent_states_carry_no_information() {
        let members = |x0: f64| {
            vec![
                EnsembleMember { weight: 0.5, base: 0, shift: (x0, 0.0) },
                EnsembleMember { weight: 0.5, base: 0, shift: (-x0, 0.0) },
            ]
        };
        let b = noise(0.5, 0.5);
        let g = QuadratureGrid::default().with_nodes(80);
        let mut last = f64::INFINITY;
        for x0 in [1.0, 0.3, 0.05, 0.0] {
            let ens = DiscreteEnsemble::new(vec![BaseState::squeezed_vacuum(0.5)], members(x0)).unwrap();
            let i = mutual_information(&ens, &b, &g).unwrap();
            assert!(i < last);
            last = i;
        }
        assert!(last.abs() < 1e-12);
    }

    #[test]
    fn two_point_ensemble_matches_fock_route() {
        let b = noise(0.5, 0.5);
        let g = QuadratureGrid::default().with_nodes(120);
        let members = vec![
            EnsembleMember { weight: 0.3, base: 0, shift: (1.2, 0.0) },
            EnsembleMember { weight: 0.7, base: 0, shift: (-0.4, 0.5) },
        ];
        let ens = DiscreteEnsemble::new(vec![BaseState::squeezed_vacuum(0.5)], members).unwrap();
        let i = mutual_information(&ens, &b, &g).unwrap();

        let vac = FockOperator::vacuum(60);
        let one = displace_state(&vac, 1.2, 0.0, 60).unwrap();
        let two = displace_state(&vac, -0.4, 0.5, 60).unwrap();
        let avg = FockOperator::from_matrix(one.matrix() * C64::new(0.3, 0.0) + two.matrix() * C64::new(0.7, 0.0));
        let h = super::super::density::numeric_output_entropy(&avg, &b, &g).unwrap();
        let direct = h - (2.0 * std::f64::consts::PI * std::f64::consts::E).ln();
        assert!((i - direct).abs() < 1e-9);
        assert!(i > 0.0);
    }

    #[test]
    fn average_state_matches_moments() {
        let (ens, _) = gaussian_ensemble_discretized(&cov(1.0, 2.0), &noise(0.2, f64::INFINITY), 7).unwrap();
        let m = ens.average_moments();
        assert!((m.var_q() - 1.0).abs() < 1e-12 && (m.var_p() - 2.0).abs() < 1e-12);
        let n = ens.average_state(80).unwrap().moments();
        assert!((n.var_q() - 1.0).abs() < 1e-6 && (n.var_p() - 2.0).abs() < 1e-6);
    }

    #[test]
    fn discretized_gaussian_ensemble_approaches_capacity() {
        let a = cov(1.0, 1.0);
        let b = noise(0.5, 0.5);
        let (ens, spec) = gaussian_ensemble_discretized(&a, &b, 15).unwrap();
        assert!((spec.delta - 0.5).abs() < 1e-15);
        let i = mutual_information(&ens, &b, &QuadratureGrid::default()).unwrap();
        assert!((i - capacity_alpha(&a, &b)).abs() < 2e-2, "{i}");
    }

    #[test]
    fn sharp_noise_unsupported() {
        let ens = DiscreteEnsemble::from_states(vec![(1.0, FockOperator::vacuum(4))]).unwrap();
        let r = mutual_information(&ens, &noise(0.0, f64::INFINITY), &QuadratureGrid::coarse());
        assert!(matches!(r, Err(Error::UnsupportedNoise(_))));
    }

    #[test]
    fn weights_validated() {
        let r = DiscreteEnsemble::from_states(vec![(0.4, FockOperator::vacuum(4))]);
        assert!(matches!(r, Err(Error::InvalidArgument(_))));
        let r = DiscreteEnsemble::from_states(vec![(-0.5, FockOperator::vacuum(4)), (1.5, FockOperator::vacuum(4))]);
        assert!(matches!(r, Err(Error::NonPositive { .. })));
    }
}
