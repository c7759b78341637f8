use gausscap::capacity::{capacity_alpha, capacity_energy, classify_regime, Regime};
use gausscap::duality::dual_ensemble;
use gausscap::gaussian::{make_covariance, make_noise, EnergyConstraint, MeasurementNoise, OneModeCovariance};
use gausscap::numerics::density::output_density_grid;
use gausscap::numerics::dual_check::dual_operator_check;
use gausscap::numerics::ensemble::{
    gaussian_ensemble_discretized, mutual_information, BaseState, DiscreteEnsemble, EnsembleMember,
};
use gausscap::numerics::fock::{gaussian_state_fock, FockOperator};
use gausscap::numerics::quadrature::QuadratureGrid;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cov(q: f64, p: f64) -> OneModeCovariance {
    make_covariance(q, p).unwrap()
}

fn noise(q: f64, p: f64) -> MeasurementNoise {
    make_noise(q, p).unwrap()
}

#[test]
fn optimal_ensemble_attains_energy_capacity() {
    for (b, e) in [(noise(0.5, 0.6), 1.5), (noise(0.3, f64::INFINITY), 1.2), (noise(2.0, 0.3), 0.9)] {
        let r = capacity_energy(&b, &EnergyConstraint::new(e).unwrap()).unwrap();
        let (ens, spec) = gaussian_ensemble_discretized(&r.optimal_alpha, &b, 15).unwrap();
        assert!((spec.delta - r.ensemble.delta).abs() < 1e-12);
        let i = mutual_information(&ens, &b, &QuadratureGrid::default()).unwrap();
        assert!((i - r.capacity_nats).abs() < 1e-4, "{b:?} E={e}: {i} vs {}", r.capacity_nats);
    }
}

#[test]
fn dual_pipeline_on_the_fock_basis() {
    let a = cov(1.4, 0.8);
    let b = noise(0.6, 0.9);
    let d = dual_ensemble(&a, &b).unwrap();
    assert!(d.alpha_prime.q * d.alpha_prime.p >= 0.25);
    assert!(dual_operator_check(&a, &b, 60).unwrap() < 1e-6);
}

/// Centered ensemble with no q–p correlation: every shift `(a, b)` appears with
/// all four sign patterns.
fn reflected(base: BaseState, points: &[(f64, f64, f64)]) -> DiscreteEnsemble {
    let total: f64 = points.iter().map(|p| p.2).sum();
    let mut members = Vec::new();
    for &(a, b, w) in points {
        for (sa, sb) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
            members.push(EnsembleMember {
                weight: 0.25 * w / total,
                base: 0,
                shift: (sa * a, sb * b),
            });
        }
    }
    DiscreteEnsemble::new(vec![base], members).unwrap()
}

#[test]
fn random_ensembles_stay_below_capacity_in_the_threshold_regime() {
    let b = noise(0.5, 0.5);
    let grid = QuadratureGrid::default().with_nodes(120);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut checked = 0;
    for _ in 0..12 {
        let base = if rng.random_range(0.0..1.0) < 0.5 {
            BaseState::squeezed_vacuum(rng.random_range(0.35..0.7))
        } else {
            BaseState::Fock(FockOperator::number_state(rng.random_range(0..3), 12))
        };
        let points: Vec<(f64, f64, f64)> = (0..3)
            .map(|_| (rng.random_range(0.0..1.2), rng.random_range(0.0..1.2), rng.random_range(0.2..1.0)))
            .collect();
        let ens = reflected(base, &points);
        let m = ens.average_moments();
        assert!(m.cov_qp().abs() < 1e-12 && m.mean_q.abs() < 1e-12);
        let a = cov(m.var_q(), m.var_p());
        let i = mutual_information(&ens, &b, &grid).unwrap();
        let c = capacity_alpha(&a, &b);
        if classify_regime(&a, &b) == Regime::C {
            checked += 1;
            assert!(i <= c + 1e-5, "I = {i} exceeds {c} at {a:?}");
        }
    }
    assert!(checked >= 6, "only {checked} draws landed in regime C");
}

#[test]
fn densities_normalize_on_their_grids() {
    let grid = QuadratureGrid::default();
    let states = [
        FockOperator::vacuum(20),
        FockOperator::number_state(1, 20),
        gaussian_state_fock(&cov(1.8, 0.3), 60).unwrap(),
    ];
    for rho in &states {
        for b in [noise(0.5, 0.5), noise(0.3, 1.7), noise(0.4, f64::INFINITY)] {
            let mass = output_density_grid(rho, &b, &grid).unwrap().mass();
            assert!((mass - 1.0).abs() < 1e-6, "{mass}");
        }
    }
}
