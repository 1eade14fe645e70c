use std::f64::consts::TAU;

use hb_core::bounds::full_report_with;
use hb_core::evolution::{evolve_midpoint, evolve_schedule, uniform_grid, Trajectory};
use hb_core::geometry::{fs_length_quadrature, trajectory_phase};
use hb_core::scenarios::{
    build_counterexample, build_qubit, build_qutrit, random_periodic, BuiltScenario, CounterexampleScenario,
    QubitScenario, QutritScenario,
};
use hb_core::Error;
use rayon::prelude::*;

use crate::config::{PropagationMode, RunConfig, ScenarioSpec};
use crate::output::{BoundsRecord, SimulateRecord};
use crate::CliError;

/// One point of a sweep.
#[derive(Debug, Clone)]
pub enum Case {
    Qubit(QubitScenario),
    Qutrit(QutritScenario),
    Counterexample(CounterexampleScenario),
    Random { dim: usize, seed: u64, base_omega: f64 },
}

impl Case {
    pub fn name(&self) -> &'static str {
        match self {
            Case::Qubit(_) => "qubit",
            Case::Qutrit(_) => "qutrit",
            Case::Counterexample(_) => "counterexample",
            Case::Random { .. } => "random",
        }
    }

    /// `(param1, param2)`: (phi, omega), (p0, p1), (chi, E) or (dim, seed).
    pub fn params(&self) -> (f64, f64) {
        match self {
            Case::Qubit(s) => (s.phi, s.omega),
            Case::Qutrit(s) => {
                let total: f64 = s.occupations.iter().sum();
                (s.occupations[0] / total, s.occupations[1] / total)
            }
            Case::Counterexample(s) => (s.chi, s.energy),
            Case::Random { dim, seed, .. } => (*dim as f64, *seed as f64),
        }
    }

    pub fn build(&self) -> Result<BuiltScenario, Error> {
        match self {
            Case::Qubit(s) => build_qubit(s),
            Case::Qutrit(s) => build_qutrit(s),
            Case::Counterexample(s) => build_counterexample(s),
            Case::Random { dim, seed, base_omega } => random_periodic(*dim, *seed, *base_omega),
        }
    }

    fn describe(&self) -> String {
        let (a, b) = self.params();
        let names = match self {
            Case::Qubit(_) => ("phi", "omega"),
            Case::Qutrit(_) => ("p0", "p1"),
            Case::Counterexample(_) => ("chi", "energy"),
            Case::Random { .. } => ("dim", "seed"),
        };
        format!("{} {}={a} {}={b}", self.name(), names.0, names.1)
    }
}

pub fn cases(spec: &ScenarioSpec) -> Vec<Case> {
    match spec {
        ScenarioSpec::Qubit { phi, omega, trace_h } => phi
            .iter()
            .flat_map(|&p| {
                omega.iter().map(move |&o| {
                    Case::Qubit(QubitScenario {
                        phi: p,
                        omega: o,
                        trace_h: *trace_h,
                    })
                })
            })
            .collect(),
        ScenarioSpec::Qutrit {
            levels,
            omega,
            occupations,
            phases,
        } => {
            let mut s = QutritScenario::from_levels(*levels, *omega, *occupations);
            s.phases = *phases;
            vec![Case::Qutrit(s)]
        }
        ScenarioSpec::Counterexample { chi, energy } => chi
            .iter()
            .flat_map(|&c| {
                energy
                    .iter()
                    .map(move |&e| Case::Counterexample(CounterexampleScenario { energy: e, chi: c }))
            })
            .collect(),
        ScenarioSpec::Random { dim, seed, base_omega } => dim
            .iter()
            .flat_map(|&d| {
                seed.iter().map(move |&s| Case::Random {
                    dim: d,
                    seed: s,
                    base_omega: *base_omega,
                })
            })
            .collect(),
    }
}

/// Maps library errors onto the two failure classes of the command line.
pub fn classify(case: &Case, e: Error) -> CliError {
    let msg = format!("{}: {e}", case.describe());
    match e {
        Error::InvalidParameter(_) | Error::InvalidDimension(_) => CliError::Config(msg),
        _ => CliError::Physics(msg),
    }
}

fn trajectory(built: &BuiltScenario, cfg: &RunConfig) -> Result<Trajectory, Error> {
    let duration = cfg.duration.unwrap_or(built.tau);
    let steps = ((cfg.steps as f64) * duration / built.tau).ceil().max(cfg.steps as f64) as usize;
    let grid = uniform_grid(duration, steps);
    match cfg.propagation {
        PropagationMode::Exact => evolve_schedule(built.schedule.clone(), &built.initial, &grid),
        PropagationMode::Integrated => evolve_midpoint(built.schedule.clone(), &built.initial, &grid),
    }
}

fn simulate_one(case: &Case, cfg: &RunConfig) -> Result<SimulateRecord, Error> {
    let built = case.build()?;
    let traj = trajectory(&built, cfg)?;
    let phase = trajectory_phase(&traj, &cfg.tolerances)?;
    let fs_length = fs_length_quadrature(&traj)?;
    let tau = traj.tau();
    let avg = fs_length / tau;
    let (param1, param2) = case.params();
    Ok(SimulateRecord {
        scenario: case.name().into(),
        param1,
        param2,
        tau,
        theta: if avg == 0.0 { 0.0 } else { phase.theta },
        fs_length,
        avg_dh: avg,
        closure_defect: phase.closure_defect,
    })
}

fn bounds_one(case: &Case, cfg: &RunConfig) -> Result<BoundsRecord, Error> {
    let (param1, param2) = case.params();
    let built = match case.build() {
        Ok(b) => b,
        // A stationary state never moves: it has no phase and every bound
        // vanishes.
        Err(Error::Stationary(_)) => {
            let tau = match case {
                Case::Qubit(s) => TAU / s.omega,
                _ => 0.0,
            };
            return Ok(BoundsRecord {
                scenario: case.name().into(),
                param1,
                param2,
                tau,
                theta: 0.0,
                fs_length: 0.0,
                avg_dh: 0.0,
                ml_bound: 0.0,
                mt_bound: 0.0,
                bd_bound: 0.0,
                ml_ratio: 0.0,
                mt_ratio: 0.0,
                bd_ratio: 0.0,
                closure_defect: 0.0,
                ml_time_averaged: None,
                not_a_bound: false,
            });
        }
        Err(e) => return Err(e),
    };
    let r = full_report_with(&trajectory(&built, cfg)?, &cfg.tolerances)?;
    let ratio = |k: &str| r.saturation_ratios.get(k).copied().unwrap_or(0.0);
    Ok(BoundsRecord {
        scenario: case.name().into(),
        param1,
        param2,
        tau: r.tau,
        theta: r.theta,
        fs_length: r.fs_length,
        avg_dh: r.avg_uncertainty,
        ml_bound: r.ml_bound,
        mt_bound: r.mt_bound,
        bd_bound: r.bd_bound,
        ml_ratio: ratio("ml"),
        mt_ratio: ratio("mt"),
        bd_ratio: ratio("bd"),
        closure_defect: r.closure_defect,
        ml_time_averaged: r.ml_time_averaged(),
        not_a_bound: r.ml_not_a_bound,
    })
}

/// Evaluates every case concurrently and returns the rows in input order,
/// or the first failure in input order.
fn sweep<T: Send>(
    cfg: &RunConfig,
    f: impl Fn(&Case, &RunConfig) -> Result<T, Error> + Sync,
) -> Result<Vec<T>, CliError> {
    let cases = cases(&cfg.scenario);
    let results: Vec<Result<T, Error>> = cases.par_iter().map(|c| f(c, cfg)).collect();
    cases
        .iter()
        .zip(results)
        .map(|(c, r)| r.map_err(|e| classify(c, e)))
        .collect()
}

pub fn simulate(cfg: &RunConfig) -> Result<Vec<SimulateRecord>, CliError> {
    sweep(cfg, simulate_one)
}

pub fn bounds(cfg: &RunConfig) -> Result<Vec<BoundsRecord>, CliError> {
    sweep(cfg, bounds_one)
}
