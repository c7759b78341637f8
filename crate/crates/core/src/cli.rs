//! Command-line front end.
//!
//! Every subcommand produces one or more flat records, printed as JSON (an
//! object, or an array for multi-row commands) or as CSV with a header row.
//! Information and entropy columns carry the unit in their name
//! (`capacity_nats`, `capacity_bits`).

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::ser::{SerializeMap, Serializer};
use serde::Serialize;
use serde_json::Value;

use crate::capacity::{
    capacity_alpha, capacity_energy, classify_regime, critical_squeezing, e_closure, optimal_squeezing,
    squeezing_interval, upper_bound, GaussianEnsembleSpec,
};
use crate::duality::{accessible_info_sharp_position, dual_ensemble};
use crate::error::{Error, Result};
use crate::gaussian::{
    make_covariance, make_noise, nats_to_bits, output_entropy_term, EnergyConstraint, MeasurementNoise,
    OneModeCovariance, Variance,
};
use crate::numerics::clt::{clt_convergence_report, CharFn};
use crate::numerics::dual_check::dual_operator_check;
use crate::numerics::fock::{gaussian_state_fock, FockOperator};
use crate::numerics::quadrature::QuadratureGrid;
use crate::numerics::search::{hgm_search, SearchConfig};

/// Environment variable that overrides `--seed`.
pub const SEED_ENV: &str = "GAUSSCAP_SEED";

#[derive(Parser, Debug)]
#[command(name = "gausscap", version, about = "Capacity of one-mode Gaussian measurement channels")]
struct Cli {
    /// Output format; `sweep` and `clt-demo` default to csv, everything else to json.
    #[arg(long, value_enum, global = true)]
    format: Option<Format>,
    /// Log base of information and entropy values.
    #[arg(long, value_enum, global = true, default_value = "nats")]
    units: Units,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Units {
    Nats,
    Bits,
}

impl Units {
    fn suffix(self) -> &'static str {
        match self {
            Units::Nats => "nats",
            Units::Bits => "bits",
        }
    }

    fn convert(self, nats: f64) -> f64 {
        match self {
            Units::Nats => nats,
            Units::Bits => nats_to_bits(nats),
        }
    }
}

#[derive(Args, Debug, Clone)]
struct NoiseArgs {
    #[arg(long)]
    beta_q: f64,
    /// `inf` for a position-only measurement; defaults to `inf` when beta-q is 0.
    #[arg(long)]
    beta_p: Option<f64>,
}

impl NoiseArgs {
    fn noise(&self) -> Result<MeasurementNoise> {
        noise_from(self.beta_q, self.beta_p)
    }
}

fn noise_from(beta_q: f64, beta_p: Option<f64>) -> Result<MeasurementNoise> {
    match beta_p {
        Some(bp) => make_noise(beta_q, bp),
        None if beta_q == 0.0 => make_noise(0.0, f64::INFINITY),
        None => Err(Error::InvalidArgument("--beta-p is required unless --beta-q is 0".into())),
    }
}

#[derive(Args, Debug, Clone)]
struct StateArgs {
    #[arg(long)]
    alpha_q: f64,
    #[arg(long)]
    alpha_p: f64,
}

impl StateArgs {
    fn covariance(&self) -> Result<OneModeCovariance> {
        make_covariance(self.alpha_q, self.alpha_p)
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Energy-constrained capacity with the optimizer cross-check.
    Capacity {
        #[command(flatten)]
        noise: NoiseArgs,
        #[arg(long)]
        energy: f64,
    },
    /// Regime of (alpha, beta) with the optimal squeezing, convex closure and capacity.
    Regime {
        #[command(flatten)]
        state: StateArgs,
        #[command(flatten)]
        noise: NoiseArgs,
    },
    /// Dual ensemble of (alpha, beta) and its accessible information.
    Dual {
        #[command(flatten)]
        state: StateArgs,
        #[command(flatten)]
        noise: NoiseArgs,
        /// Also compare the operator-level dual states on the Fock basis.
        #[arg(long)]
        operator_check: bool,
        #[arg(long, default_value_t = 60)]
        truncation: usize,
    },
    /// Capacity against energy on a grid.
    ///
    /// CSV columns: beta_q, beta_p, energy, capacity_<units>, regime,
    /// hypothetical, alpha_q, alpha_p, delta, upper_bound_<units> (empty for
    /// joint measurements).
    Sweep {
        /// Comma-separated list.
        #[arg(long, value_delimiter = ',', required = true)]
        beta_q: Vec<f64>,
        /// Comma-separated list, paired with beta-q (a single value is broadcast).
        #[arg(long, value_delimiter = ',')]
        beta_p: Vec<f64>,
        #[arg(long, default_value_t = 0.5)]
        energy_min: f64,
        #[arg(long, default_value_t = 5.0)]
        energy_max: f64,
        #[arg(long, default_value_t = 46)]
        points: usize,
        /// Worker threads (default: available parallelism).
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Multi-start search for non-Gaussian ensembles above the Gaussian value.
    HgmSearch {
        #[command(flatten)]
        state: StateArgs,
        #[command(flatten)]
        noise: NoiseArgs,
        #[arg(long, default_value_t = 16)]
        starts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Objective evaluations per start.
        #[arg(long, default_value_t = 300)]
        budget: usize,
        #[arg(long, default_value_t = 2)]
        bases: usize,
        /// Also score the discretized optimal Gaussian ensemble.
        #[arg(long)]
        gaussian_seed: bool,
        /// Write the JSON report here as well.
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Convergence of the symmetrized characteristic function to its Gaussian limit.
    ///
    /// CSV columns: n, sup_deviation.
    CltDemo {
        #[arg(long, value_enum, default_value = "one")]
        state: CltState,
        #[arg(long, value_delimiter = ',', default_value = "4,64,1024")]
        n: Vec<usize>,
        #[arg(long, default_value_t = 4.0)]
        radius: f64,
        /// Lattice points per axis.
        #[arg(long, default_value_t = 41)]
        points: usize,
    },
    /// Upper bound on the capacity of position-type measurements.
    Bound {
        #[arg(long)]
        beta_q: f64,
        #[arg(long)]
        energy: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum CltState {
    /// Number state |1⟩.
    One,
    /// Number state |2⟩.
    Two,
    /// Equal mixture of |0⟩ and |1⟩.
    Mixture,
    /// Thermal state with covariance (1, 1); a fixed point.
    Thermal,
}

/// Flat output row; field order is the column order.
#[derive(Clone, Debug, Default, PartialEq)]
struct Record(Vec<(String, Value)>);

impl Record {
    fn num(mut self, key: &str, v: f64) -> Self {
        self.0.push((key.to_string(), number(v)));
        self
    }

    fn variance(mut self, key: &str, v: Variance) -> Self {
        let value = match v {
            Variance::Finite(x) => number(x),
            Variance::Infinite => Value::from("inf"),
        };
        self.0.push((key.to_string(), value));
        self
    }

    fn info(mut self, key: &str, nats: f64, units: Units) -> Self {
        self.0.push((format!("{key}_{}", units.suffix()), number(units.convert(nats))));
        self
    }

    fn put(mut self, key: &str, v: impl Into<Value>) -> Self {
        self.0.push((key.to_string(), v.into()));
        self
    }

    fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("records serialize")
    }
}

impl Serialize for Record {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

fn number(v: f64) -> Value {
    serde_json::Number::from_f64(v).map(Value::Number).unwrap_or(Value::Null)
}

struct Output {
    json: Value,
    rows: Vec<Record>,
    default_format: Format,
}

impl Output {
    fn single(rec: Record) -> Self {
        Output {
            json: rec.to_json(),
            rows: vec![rec],
            default_format: Format::Json,
        }
    }
}

/// Entry point of the binary. Returns the process exit code: 0 on success,
/// 2 on usage or validation errors, 3 on numerical failures.
pub fn run(argv: Vec<String>) -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

/// [`run`] with explicit output streams.
pub fn run_with(argv: Vec<String>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    0
                }
                _ => {
                    let _ = write!(err, "{text}");
                    2
                }
            };
        }
    };
    let result = dispatch(&cli, err).and_then(|o| emit(&o, cli.format, out));
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_validation() {
                2
            } else {
                3
            }
        }
    }
}

fn emit(o: &Output, format: Option<Format>, out: &mut dyn Write) -> Result<()> {
    let io = |e: std::io::Error| Error::InvalidArgument(format!("cannot write output: {e}"));
    match format.unwrap_or(o.default_format) {
        Format::Json => {
            let text = serde_json::to_string_pretty(&o.json).expect("json output");
            writeln!(out, "{text}").map_err(io)?;
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            if let Some(first) = o.rows.first() {
                w.write_record(first.0.iter().map(|(k, _)| k.as_str()))
                    .map_err(|e| Error::InvalidArgument(e.to_string()))?;
            }
            for row in &o.rows {
                w.write_record(row.0.iter().map(|(_, v)| csv_cell(v)))
                    .map_err(|e| Error::InvalidArgument(e.to_string()))?;
            }
            let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(e.to_string()))?;
            out.write_all(&bytes).map_err(io)?;
        }
    }
    Ok(())
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn seed_override(seed: u64) -> Result<u64> {
    match std::env::var(SEED_ENV) {
        Ok(text) => text
            .trim()
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("{SEED_ENV} must be an unsigned integer, got {text:?}"))),
        Err(_) => Ok(seed),
    }
}

fn pool(workers: Option<usize>) -> Result<rayon::ThreadPool> {
    if workers == Some(0) {
        return Err(Error::InvalidArgument("--workers must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))
}

fn dispatch(cli: &Cli, err: &mut dyn Write) -> Result<Output> {
    let u = cli.units;
    match &cli.command {
        Command::Capacity { noise, energy } => {
            let beta = noise.noise()?;
            let energy = EnergyConstraint::new(*energy)?;
            Ok(Output::single(capacity_record(&beta, &energy, u)?))
        }
        Command::Regime { state, noise } => {
            let alpha = state.covariance()?;
            let beta = noise.noise()?;
            Ok(Output::single(regime_record(&alpha, &beta, u)?))
        }
        Command::Dual {
            state,
            noise,
            operator_check,
            truncation,
        } => {
            let alpha = state.covariance()?;
            let beta = noise.noise()?;
            let d = dual_ensemble(&alpha, &beta)?;
            let mut rec = Record::default()
                .num("alpha_q", alpha.q())
                .num("alpha_p", alpha.p())
                .num("beta_q", beta.q())
                .variance("beta_p", beta.p())
                .put("regime", classify_regime(&alpha, &beta).to_string())
                .num("kappa_q", d.kappa.kappa_q)
                .num("kappa_p", d.kappa.kappa_p)
                .num("alpha_prime_q", d.alpha_prime.q)
                .num("alpha_prime_p", d.alpha_prime.p)
                .num("gamma_prime_q", d.gamma_prime.q)
                .num("gamma_prime_p", d.gamma_prime.p)
                .num("shift_q", d.shift.q)
                .num("shift_p", d.shift.p)
                .info("accessible_info", accessible_info_sharp_position(&d), u)
                .info("capacity", capacity_alpha(&alpha, &beta), u);
            if *operator_check {
                rec = rec.num("operator_deviation", dual_operator_check(&alpha, &beta, *truncation)?);
            }
            Ok(Output::single(rec))
        }
        Command::Sweep {
            beta_q,
            beta_p,
            energy_min,
            energy_max,
            points,
            workers,
        } => {
            let pairs = sweep_pairs(beta_q, beta_p)?;
            let emin = EnergyConstraint::new(*energy_min)?.value();
            if !(energy_max.is_finite() && *energy_max >= emin) {
                return Err(Error::InvalidArgument("--energy-max must be finite and at least --energy-min".into()));
            }
            if *points == 0 {
                return Err(Error::InvalidArgument("--points must be at least 1".into()));
            }
            let energies: Vec<f64> = (0..*points)
                .map(|i| {
                    if *points == 1 {
                        emin
                    } else {
                        emin + (energy_max - emin) * i as f64 / (*points - 1) as f64
                    }
                })
                .collect();
            let jobs: Vec<(MeasurementNoise, f64)> = pairs
                .iter()
                .flat_map(|b| energies.iter().map(move |&e| (*b, e)))
                .collect();
            let rows: Vec<Result<Record>> = pool(*workers)?.install(|| {
                jobs.par_iter()
                    .map(|(b, e)| sweep_record(b, *e, u))
                    .collect()
            });
            let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
            Ok(Output {
                json: Value::Array(rows.iter().map(Record::to_json).collect()),
                rows,
                default_format: Format::Csv,
            })
        }
        Command::HgmSearch {
            state,
            noise,
            starts,
            seed,
            budget,
            bases,
            gaussian_seed,
            output,
            workers,
        } => {
            let alpha = state.covariance()?;
            let beta = noise.noise()?;
            let config = SearchConfig {
                starts: *starts,
                seed: seed_override(*seed)?,
                budget: *budget,
                bases: *bases,
                gaussian_seed: *gaussian_seed,
                ..SearchConfig::default()
            };
            let report = pool(*workers)?.install(|| hgm_search(&alpha, &beta, &config))?;
            let mut json = serde_json::to_value(&report).expect("report serializes");
            if u == Units::Bits {
                json["best_value_bits"] = number(nats_to_bits(report.best_value_nats));
                json["ceiling_bits"] = number(nats_to_bits(report.ceiling_nats));
                json["gap_bits"] = number(nats_to_bits(report.gap));
            }
            if report.candidate_violation {
                let _ = writeln!(
                    err,
                    "finding: best value exceeds the Gaussian value by {:.3e} nats (candidate, regime {})",
                    report.gap, report.regime
                );
            }
            if let Some(path) = output {
                let text = serde_json::to_string_pretty(&json).expect("json output");
                std::fs::write(path, text)
                    .map_err(|e| Error::InvalidArgument(format!("cannot write {}: {e}", path.display())))?;
            }
            let rec = Record::default()
                .num("alpha_q", alpha.q())
                .num("alpha_p", alpha.p())
                .num("beta_q", beta.q())
                .variance("beta_p", beta.p())
                .put("regime", report.regime.to_string())
                .put("hypothetical", report.hypothetical)
                .put("seed", report.seed)
                .info("best_value", report.best_value_nats, u)
                .info("ceiling", report.ceiling_nats, u)
                .info("gap", report.gap, u)
                .num("covariance_error", report.covariance_error)
                .put("evaluations", report.evaluations)
                .put("candidate_violation", report.candidate_violation)
                .put("budget_exhausted", report.budget_exhausted);
            Ok(Output {
                json,
                rows: vec![rec],
                default_format: Format::Json,
            })
        }
        Command::CltDemo { state, n, radius, points } => {
            let phi = clt_state(*state)?;
            let grid = QuadratureGrid {
                half_width: *radius,
                nodes_per_axis: *points,
                ..QuadratureGrid::default()
            };
            let report = clt_convergence_report(&phi, n, &grid)?;
            let rows = report
                .rows
                .iter()
                .map(|r| Record::default().put("n", r.n).num("sup_deviation", r.sup_deviation))
                .collect();
            Ok(Output {
                json: serde_json::to_value(&report).expect("report serializes"),
                rows,
                default_format: Format::Csv,
            })
        }
        Command::Bound { beta_q, energy } => {
            let beta = make_noise(*beta_q, f64::INFINITY)?;
            let energy = EnergyConstraint::new(*energy)?;
            let bound = upper_bound(beta.q(), &energy);
            let cap = capacity_energy(&beta, &energy)?.capacity_nats;
            Ok(Output::single(
                Record::default()
                    .num("beta_q", beta.q())
                    .num("energy", energy.value())
                    .info("upper_bound", bound, u)
                    .info("capacity", cap, u)
                    .info("slack", bound - cap, u),
            ))
        }
    }
}

fn capacity_record(beta: &MeasurementNoise, energy: &EnergyConstraint, u: Units) -> Result<Record> {
    let r = capacity_energy(beta, energy)?;
    Ok(Record::default()
        .num("beta_q", beta.q())
        .variance("beta_p", beta.p())
        .put("measurement_type", beta.kind().type_number())
        .num("energy", energy.value())
        .info("capacity", r.capacity_nats, u)
        .put("regime", r.regime.to_string())
        .put("hypothetical", r.hypothetical)
        .num("alpha_q", r.optimal_alpha.q())
        .num("alpha_p", r.optimal_alpha.p())
        .num("delta", r.ensemble.delta)
        .num("gamma_q", r.ensemble.gamma_q)
        .num("gamma_p", r.ensemble.gamma_p)
        .info("optimizer_capacity", r.optimizer.capacity_nats, u)
        .num("optimizer_alpha_p", r.optimizer.alpha_p)
        .info("optimizer_deviation", r.optimizer.deviation, u))
}

fn regime_record(alpha: &OneModeCovariance, beta: &MeasurementNoise, u: Units) -> Result<Record> {
    let (lo, hi) = squeezing_interval(alpha);
    let regime = classify_regime(alpha, beta);
    let delta = optimal_squeezing(alpha, beta);
    let ens = GaussianEnsembleSpec::for_alpha(alpha, delta)?;
    Ok(Record::default()
        .num("alpha_q", alpha.q())
        .num("alpha_p", alpha.p())
        .num("beta_q", beta.q())
        .variance("beta_p", beta.p())
        .put("regime", regime.to_string())
        .put("hypothetical", regime.is_hypothetical())
        .num("critical_squeezing", critical_squeezing(beta))
        .num("interval_lo", lo)
        .num("interval_hi", hi)
        .num("delta", delta)
        .num("gamma_q", ens.gamma_q)
        .num("gamma_p", ens.gamma_p)
        .info("output_entropy", output_entropy_term(alpha, beta), u)
        .info("e_closure", e_closure(alpha, beta), u)
        .info("capacity", capacity_alpha(alpha, beta), u))
}

fn sweep_pairs(beta_q: &[f64], beta_p: &[f64]) -> Result<Vec<MeasurementNoise>> {
    match beta_p.len() {
        0 => beta_q.iter().map(|&q| noise_from(q, None)).collect(),
        1 => beta_q.iter().map(|&q| make_noise(q, beta_p[0])).collect(),
        n if n == beta_q.len() => beta_q.iter().zip(beta_p).map(|(&q, &p)| make_noise(q, p)).collect(),
        n => Err(Error::InvalidArgument(format!(
            "--beta-p has {n} values; expected 1 or {} to pair with --beta-q",
            beta_q.len()
        ))),
    }
}

fn sweep_record(beta: &MeasurementNoise, energy: f64, u: Units) -> Result<Record> {
    let e = EnergyConstraint::new(energy)?;
    let r = capacity_energy(beta, &e)?;
    let rec = Record::default()
        .num("beta_q", beta.q())
        .variance("beta_p", beta.p())
        .num("energy", energy)
        .info("capacity", r.capacity_nats, u)
        .put("regime", r.regime.to_string())
        .put("hypothetical", r.hypothetical)
        .num("alpha_q", r.optimal_alpha.q())
        .num("alpha_p", r.optimal_alpha.p())
        .num("delta", r.ensemble.delta);
    Ok(if beta.p().is_finite() {
        rec.put(&format!("upper_bound_{}", u.suffix()), Value::Null)
    } else {
        rec.info("upper_bound", upper_bound(beta.q(), &e), u)
    })
}

fn clt_state(state: CltState) -> Result<CharFn> {
    Ok(match state {
        CltState::One => CharFn::fock(FockOperator::number_state(1, 12)),
        CltState::Two => CharFn::fock(FockOperator::number_state(2, 12)),
        CltState::Mixture => {
            let mut m = nalgebra::DMatrix::<f64>::zeros(13, 13);
            m[(0, 0)] = 0.5;
            m[(1, 1)] = 0.5;
            CharFn::fock(FockOperator::from_real(&m))
        }
        CltState::Thermal => CharFn::fock(gaussian_state_fock(&make_covariance(1.0, 1.0)?, 60)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut argv = vec!["gausscap".to_string()];
        argv.extend(args.iter().map(|s| s.to_string()));
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run_with(argv, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    fn json(args: &[&str]) -> Value {
        let (code, out, err) = call(args);
        assert_eq!(code, 0, "{err}");
        serde_json::from_str(&out).unwrap()
    }

    #[test]
    fn sharp_position_capacity() {
        let v = json(&["capacity", "--beta-q", "0", "--beta-p", "inf", "--energy", "1"]);
        assert!((v["capacity_nats"].as_f64().unwrap() - 2f64.ln()).abs() < 1e-15);
        assert_eq!(v["regime"], "L");
        assert_eq!(v["beta_p"], "inf");
        assert_eq!(v["measurement_type"], 3);
    }

    #[test]
    fn beta_p_defaults_to_inf_only_for_sharp() {
        let v = json(&["capacity", "--beta-q", "0", "--energy", "2"]);
        assert_eq!(v["capacity_nats"].as_f64().unwrap(), 4f64.ln());
        let (code, _, err) = call(&["capacity", "--beta-q", "0.3", "--energy", "2"]);
        assert_eq!(code, 2);
        assert!(err.contains("--beta-p"));
        let (code, _, err) = call(&["capacity", "--beta-q", "0", "--beta-p", "2", "--energy", "2"]);
        assert_eq!(code, 2);
        assert!(err.contains("beta_q = 0"));
    }

    #[test]
    fn regime_c_example() {
        let v = json(&["regime", "--alpha-q", "1", "--alpha-p", "1", "--beta-q", "0.5", "--beta-p", "0.5"]);
        assert_eq!(v["regime"], "C");
        assert!((v["capacity_nats"].as_f64().unwrap() - 0.5 * 2.25f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn validation_and_usage_exit_codes() {
        let (code, _, err) = call(&["capacity", "--beta-q", "0.5", "--beta-p", "0.5", "--energy", "0.4"]);
        assert_eq!(code, 2);
        assert!(err.contains("below the vacuum energy"));
        let (code, _, _) = call(&["regime", "--alpha-q", "0.2", "--alpha-p", "0.2", "--beta-q", "1", "--beta-p", "1"]);
        assert_eq!(code, 2);
        let (code, _, _) = call(&["nonsense"]);
        assert_eq!(code, 2);
        let (code, out, _) = call(&["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("hgm-search"));
    }

    #[test]
    fn numeric_failure_exit_code() {
        // a thermal average state does not fit in 11 number states
        let (code, _, err) = call(&[
            "dual", "--alpha-q", "1", "--alpha-p", "1", "--beta-q", "0.5", "--beta-p", "0.5", "--operator-check",
            "--truncation", "10",
        ]);
        assert!(err.contains("truncation"));
        assert_eq!(code, 3, "{err}");
    }

    #[test]
    fn bits_are_nats_over_ln2() {
        let args = ["regime", "--alpha-q", "1.3", "--alpha-p", "2", "--beta-q", "0.2", "--beta-p", "4"];
        let n = json(&args);
        let mut with_bits = args.to_vec();
        with_bits.extend(["--units", "bits"]);
        let b = json(&with_bits);
        for key in ["capacity", "e_closure", "output_entropy"] {
            let nats = n[format!("{key}_nats")].as_f64().unwrap();
            assert_eq!(b[format!("{key}_bits")].as_f64().unwrap(), nats / std::f64::consts::LN_2);
        }
    }

    #[test]
    fn capacity_round_trips() {
        let a = json(&["capacity", "--beta-q", "0.3", "--beta-p", "2", "--energy", "1.7"]);
        let b = json(&[
            "capacity",
            "--beta-q",
            &a["beta_q"].to_string(),
            "--beta-p",
            &a["beta_p"].to_string(),
            "--energy",
            &a["energy"].to_string(),
        ]);
        assert_eq!(a, b);
        // re-feeding the optimal α gives the same capacity
        let r = json(&[
            "regime",
            "--alpha-q",
            &a["alpha_q"].to_string(),
            "--alpha-p",
            &a["alpha_p"].to_string(),
            "--beta-q",
            "0.3",
            "--beta-p",
            "2",
        ]);
        let d = (r["capacity_nats"].as_f64().unwrap() - a["capacity_nats"].as_f64().unwrap()).abs();
        assert!(d < 1e-12);
    }

    #[test]
    fn sweep_csv_is_ordered() {
        let args = [
            "sweep", "--beta-q", "0.2,0", "--beta-p", "5,inf", "--energy-min", "0.5", "--energy-max", "3", "--points",
            "6",
        ];
        let (code, out, err) = call(&args);
        assert_eq!(code, 0, "{err}");
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines.len(), 13);
        assert!(lines[0].starts_with("beta_q,beta_p,energy,capacity_nats,regime"));
        assert!(lines[7].starts_with("0.0,inf,0.5,"), "{}", lines[7]);
        let mut serial = args.to_vec();
        serial.extend(["--workers", "1"]);
        assert_eq!(call(&serial).1, out);
    }

    #[test]
    fn dual_report() {
        let v = json(&["dual", "--alpha-q", "1", "--alpha-p", "1", "--beta-q", "0.2", "--beta-p", "5"]);
        assert!((v["gamma_prime_q"].as_f64().unwrap() - 0.625).abs() < 1e-15);
        assert!((v["alpha_prime_p"].as_f64().unwrap() - 0.875).abs() < 1e-15);
        let (code, _, _) = call(&["dual", "--alpha-q", "1", "--alpha-p", "1", "--beta-q", "0"]);
        assert_eq!(code, 2);
    }

    #[test]
    fn bound_is_tight_for_sharp_position() {
        let v = json(&["bound", "--beta-q", "0", "--energy", "3"]);
        assert!(v["slack_nats"].as_f64().unwrap().abs() < 1e-15);
        let v = json(&["bound", "--beta-q", "0.4", "--energy", "3"]);
        assert!(v["slack_nats"].as_f64().unwrap() > 0.0);
    }

    #[test]
    fn clt_demo_table() {
        let (code, out, _) = call(&["clt-demo", "--n", "4,64"]);
        assert_eq!(code, 0);
        assert!(out.starts_with("n,sup_deviation\n4,"));
        let v = json(&["clt-demo", "--state", "thermal", "--n", "2", "--format", "json"]);
        assert!(v["rows"][0]["sup_deviation"].as_f64().unwrap() < 1e-8);
    }

    #[test]
    fn hgm_search_gaussian_seed() {
        let v = json(&[
            "hgm-search", "--alpha-q", "1", "--alpha-p", "1", "--beta-q", "0.5", "--beta-p", "0.5", "--starts", "0",
            "--gaussian-seed",
        ]);
        assert!(v["gap"].as_f64().unwrap().abs() < 1e-6);
        assert_eq!(v["candidate_violation"], false);
    }
}
