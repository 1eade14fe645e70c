//! Self-checks behind `hb verify`.

use std::f64::consts::{PI, TAU};
use std::fmt;

use hb_core::bounds::{full_report, length_lower_bound, BoundReport};
use hb_core::evolution::{evolve_constant, evolve_schedule, uniform_grid, HamiltonianSchedule, Trajectory};
use hb_core::geometry::{aa_phase, fs_length, fs_speeds, phase_distance, uncertainty_profile};
use hb_core::quantum::{expectation, occupation_profile, pauli_z, spectral_decompose, C64};
use hb_core::scenarios::{
    analyze_qutrit, build_counterexample, build_qubit, build_qutrit, random_periodic, search_qutrit_witnesses,
    BuiltScenario, CounterexampleScenario, QubitScenario,
};
use hb_core::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::output::fmt_g12;
use crate::CliError;

pub const SUITES: [&str; 5] = [
    "qubit-tightness",
    "qutrit-identities",
    "counterexample",
    "random-periodic",
    "invariance",
];

const CHI_GRID: [f64; 6] = [0.2, 0.5, 0.8, 1.0, 1.2, 1.5];

#[derive(Debug, Clone, Copy)]
pub enum Requirement {
    AtMost(f64),
    AtLeast(f64),
    Above(f64),
}

impl fmt::Display for Requirement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Requirement::AtMost(x) => write!(f, "<= {}", fmt_g12(*x)),
            Requirement::AtLeast(x) => write!(f, ">= {}", fmt_g12(*x)),
            Requirement::Above(x) => write!(f, "> {}", fmt_g12(*x)),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    /// Worst value over the suite, or the error that stopped the check.
    pub value: Result<f64, String>,
    pub requirement: Requirement,
}

impl Check {
    fn new(name: &str, value: Result<f64, Error>, requirement: Requirement) -> Self {
        Check {
            name: name.into(),
            value: value.map_err(|e| e.to_string()),
            requirement,
        }
    }

    pub fn passed(&self) -> bool {
        match (&self.value, self.requirement) {
            (Ok(v), Requirement::AtMost(t)) => *v <= t,
            (Ok(v), Requirement::AtLeast(t)) => *v >= t,
            (Ok(v), Requirement::Above(t)) => *v > t,
            (Err(_), _) => false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub suite: String,
    pub steps: usize,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "suite {} ({} steps per period)", self.suite, self.steps)?;
        let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(5).max(5);
        writeln!(f, "{:<width$}  status  {:>14}  requirement", "check", "worst")?;
        for c in &self.checks {
            let status = if c.passed() { "PASS" } else { "FAIL" };
            let value = match &c.value {
                Ok(v) => format!("{v:>14.6e}"),
                Err(e) => format!("error: {e}"),
            };
            writeln!(f, "{:<width$}  {status:<6}  {value}  {}", c.name, c.requirement)?;
        }
        let passed = self.checks.iter().filter(|c| c.passed()).count();
        write!(
            f,
            "result: {} ({passed}/{} checks passed)",
            if self.passed() { "PASS" } else { "FAIL" },
            self.checks.len()
        )
    }
}

/// Largest value of `f` over `items`, stopping at the first error.
fn worst<T: Sync>(items: &[T], f: impl Fn(&T) -> Result<f64, Error> + Sync) -> Result<f64, Error> {
    let values: Vec<Result<f64, Error>> = items.par_iter().map(&f).collect();
    values.into_iter().try_fold(f64::NEG_INFINITY, |acc, v| Ok(acc.max(v?)))
}

fn least<T: Sync>(items: &[T], f: impl Fn(&T) -> Result<f64, Error> + Sync) -> Result<f64, Error> {
    worst(items, |x| f(x).map(|v| -v)).map(|v| -v)
}

pub fn default_steps(suite: &str) -> usize {
    match suite {
        // The averaged-ML family saturates MT exactly; its O(dt^2)
        // integration error must stay under the 1e-6 bound tolerance.
        "counterexample" => 40_000,
        _ => 4000,
    }
}

pub fn run(suite: &str, steps: usize, seed: u64) -> Result<SuiteReport, CliError> {
    let checks = match suite {
        "qubit-tightness" => qubit_tightness(steps),
        "qutrit-identities" => qutrit_identities(steps),
        "counterexample" => counterexample(steps),
        "random-periodic" => random_suite(steps, seed),
        "invariance" => invariance(steps, seed),
        other => {
            return Err(CliError::Config(format!(
                "unknown suite '{other}' (expected one of: {})",
                SUITES.join(", ")
            )))
        }
    };
    Ok(SuiteReport {
        suite: suite.into(),
        steps,
        checks,
    })
}

fn qubit_tightness(steps: usize) -> Vec<Check> {
    let grid: Vec<(f64, f64)> = (1..=60)
        .flat_map(|k| [0.5, 1.0, 2.0].map(|omega| (PI * k as f64 / 61.0, omega)))
        .collect();
    let built = |&(phi, omega): &(f64, f64)| build_qubit(&QubitScenario::new(phi, omega));
    let report = |p: &(f64, f64)| full_report(&built(p)?.trajectory(steps)?);
    let ratio = |key: &'static str| {
        worst(&grid, move |p| {
            let r = report(p)?;
            Ok((r.saturation_ratios[key] - 1.0).abs())
        })
    };
    vec![
        Check::new(
            "theta = pi(1 + cos phi), discrete connection",
            worst(&grid, |p| {
                let theta = aa_phase(&built(p)?.trajectory(steps)?)?.theta;
                Ok(phase_distance(theta, PI * (1.0 + p.0.cos())))
            }),
            Requirement::AtMost(1e-6),
        ),
        Check::new(
            "fs_length = pi sin phi",
            worst(&grid, |p| {
                Ok((fs_length(&built(p)?.trajectory(steps)?)? - PI * p.0.sin()).abs())
            }),
            Requirement::AtMost(1e-5),
        ),
        Check::new("|ml_bound/tau - 1|", ratio("ml"), Requirement::AtMost(1e-6)),
        Check::new("|mt_bound/tau - 1|", ratio("mt"), Requirement::AtMost(1e-6)),
        Check::new("|bd_bound/tau - 1|", ratio("bd"), Requirement::AtMost(1e-6)),
        Check::new(
            "|mt_bound - bd_bound|",
            worst(&grid, |p| {
                let r = report(p)?;
                Ok((r.mt_bound - r.bd_bound).abs())
            }),
            Requirement::AtMost(1e-8),
        ),
    ]
}

fn qutrit_identities(steps: usize) -> Vec<Check> {
    let found = match search_qutrit_witnesses(6, 20, 1.0) {
        Ok(f) => f,
        Err(e) => return vec![Check::new("witness search", Err(e), Requirement::AtMost(0.0))],
    };
    let witnesses: Vec<_> = found
        .cases
        .values()
        .chain(found.middle_adjacent.iter())
        .chain(found.middle_spread.iter())
        .cloned()
        .collect();
    let reanalyze =
        |w: &hb_core::scenarios::QutritWitness| analyze_qutrit(&build_qutrit(&w.scenario)?.trajectory(steps)?);
    vec![
        Check::new(
            "missing saturation classes (2 branches x 4)",
            Ok(8.0 - found.cases.len() as f64),
            Requirement::AtMost(0.0),
        ),
        Check::new(
            "missing <H> = e1 realizations (n1 = n2 + 1, n1 > n2 + 1)",
            Ok((found.middle_adjacent.is_none() as u8 + found.middle_spread.is_none() as u8) as f64),
            Requirement::AtMost(0.0),
        ),
        Check::new(
            "quotient identity residual / tau",
            worst(&witnesses, |w| Ok(reanalyze(w)?.identity_residual)),
            Requirement::AtMost(1e-8),
        ),
        Check::new(
            "witnesses with n0 > n1 > n2 violated",
            worst(&witnesses, |w| {
                Ok(if reanalyze(w)?.windings_ordered { 0.0 } else { 1.0 })
            }),
            Requirement::AtMost(0.0),
        ),
    ]
}

fn counterexample_cases() -> Vec<CounterexampleScenario> {
    CHI_GRID
        .iter()
        .map(|&chi| CounterexampleScenario { energy: 1.0, chi })
        .collect()
}

struct CounterexampleRun {
    scenario: CounterexampleScenario,
    report: BoundReport,
    frame_residual: f64,
}

fn counterexample(steps: usize) -> Vec<Check> {
    // One integrated trajectory per case feeds every check.
    let runs: Vec<Result<CounterexampleRun, Error>> = counterexample_cases()
        .into_par_iter()
        .map(|scenario| {
            let b = build_counterexample(&scenario)?;
            let traj = b.integrated_trajectory(steps)?;
            Ok(CounterexampleRun {
                scenario,
                report: full_report(&traj)?,
                frame_residual: rotating_frame_residual(&scenario, &b, &traj)?,
            })
        })
        .collect();
    let over = |f: fn(&CounterexampleRun) -> f64| worst(&runs, move |r| r.as_ref().map(f).map_err(Clone::clone));
    let under = |f: fn(&CounterexampleRun) -> f64| least(&runs, move |r| r.as_ref().map(f).map_err(Clone::clone));
    vec![
        Check::new(
            "|theta - pi|",
            over(|r| phase_distance(r.report.theta, PI)),
            Requirement::AtMost(1e-5),
        ),
        Check::new(
            "|tau - pi tan(chi/2)/E|",
            over(|r| (r.report.tau - PI / (r.scenario.energy / (r.scenario.chi / 2.0).tan())).abs()),
            Requirement::AtMost(1e-8),
        ),
        Check::new(
            "|ml_time_averaged - pi/E|",
            over(|r| (r.report.ml_time_averaged().unwrap_or(f64::NAN) - PI / r.scenario.energy).abs()),
            Requirement::AtMost(1e-5),
        ),
        Check::new(
            "min ml_time_averaged / tau (not a bound)",
            under(|r| r.report.ml_time_averaged().unwrap_or(f64::NAN) / r.report.tau),
            Requirement::Above(1.0),
        ),
        Check::new(
            "max mt_bound/tau - 1",
            over(|r| r.report.mt_bound / r.report.tau - 1.0),
            Requirement::AtMost(1e-6),
        ),
        Check::new(
            "max bd_bound/tau - 1",
            over(|r| r.report.bd_bound / r.report.tau - 1.0),
            Requirement::AtMost(1e-6),
        ),
        Check::new(
            "rho_t = e^{-iAt} rho e^{iAt}",
            over(|r| r.frame_residual),
            Requirement::AtMost(1e-5),
        ),
    ]
}

/// Largest entry of `P(psi_t) - e^{-iAt} P(psi_0) e^{iAt}` along the curve.
fn rotating_frame_residual(s: &CounterexampleScenario, b: &BuiltScenario, traj: &Trajectory) -> Result<f64, Error> {
    let a = spectral_decompose(pauli_z() * C64::new(s.mu() * s.chi.sin(), 0.0))?;
    let rho = b.initial.projector();
    Ok(traj
        .times()
        .iter()
        .zip(traj.states())
        .map(|(&t, psi)| {
            let u = a.propagator(t);
            (psi.projector().matrix() - &u * rho.matrix() * u.adjoint()).camax()
        })
        .fold(0.0, f64::max))
}

fn random_suite(steps: usize, seed: u64) -> Vec<Check> {
    let systems: Vec<Result<BuiltScenario, Error>> = (0..200u64)
        .map(|k| random_periodic(2 + (k % 5) as usize, seed.wrapping_add(k), 1.0))
        .collect();
    let report = |b: &Result<BuiltScenario, Error>| full_report(&b.clone()?.trajectory(steps)?);
    vec![
        Check::new(
            "closure defect at tau",
            worst(&systems, |b| Ok(report(b)?.closure_defect)),
            Requirement::AtMost(1e-8),
        ),
        Check::new(
            "max (bound - tau)/tau over ml, mt, bd",
            worst(&systems, |b| {
                let r = report(b)?;
                Ok([r.ml_bound, r.mt_bound, r.bd_bound]
                    .iter()
                    .map(|x| x / r.tau - 1.0)
                    .fold(f64::NEG_INFINITY, f64::max))
            }),
            Requirement::AtMost(1e-6),
        ),
        Check::new(
            "min fs_length - sqrt(theta(2pi - theta))",
            least(&systems, |b| {
                let r = report(b)?;
                Ok(r.fs_length - length_lower_bound(r.theta)?)
            }),
            Requirement::AtLeast(-1e-6),
        ),
        Check::new(
            "max bd_bound - mt_bound",
            worst(&systems, |b| {
                let r = report(b)?;
                Ok(r.bd_bound - r.mt_bound)
            }),
            Requirement::AtMost(1e-12),
        ),
        Check::new(
            "theta = tau <H - e> mod 2pi, discrete connection",
            worst(&systems, |b| {
                let b = b.clone()?;
                phase_identity_residual(&b, steps.max(b.steps_for_phase_resolution(2e-4)?))
            }),
            Requirement::AtMost(1e-6),
        ),
    ]
}

fn phase_identity_residual(b: &BuiltScenario, steps: usize) -> Result<f64, Error> {
    let traj = b.trajectory(steps)?;
    let theta = aa_phase(&traj)?.theta;
    let HamiltonianSchedule::Constant(h) = b.schedule.as_ref() else {
        return Err(Error::InvalidParameter("expected a constant Hamiltonian".into()));
    };
    let mean = expectation(h, &b.initial)?;
    Ok(occupation_profile(h, &b.initial, 1e-10)?
        .occupied_energies()
        .map(|eps| phase_distance((traj.tau() * (mean - eps)).rem_euclid(TAU), theta))
        .fold(0.0, f64::max))
}

fn invariance(steps: usize, seed: u64) -> Vec<Check> {
    let mut checks = Vec::new();
    let base = random_periodic(3, seed, 1.0).and_then(|b| {
        let t = b.trajectory(steps)?;
        Ok((b, t))
    });
    let (b, traj) = match base {
        Ok(x) => x,
        Err(e) => return vec![Check::new("base trajectory", Err(e), Requirement::AtMost(0.0))],
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tau = traj.tau();
    let reference = aa_phase(&traj).map(|p| p.theta);
    let length = fs_length(&traj);

    let gauge = (|| {
        let (theta, length) = (reference.clone()?, length.clone()?);
        let mut w: f64 = 0.0;
        for _ in 0..50 {
            let coeffs: Vec<(f64, f64)> = (0..3)
                .map(|_| (rng.random_range(-5.0..5.0), rng.random_range(0.0..TAU)))
                .collect();
            let drift = rng.random_range(-3.0..3.0);
            let states = traj
                .times()
                .iter()
                .zip(traj.states())
                .map(|(&t, s)| {
                    let f: f64 = coeffs
                        .iter()
                        .enumerate()
                        .map(|(j, (a, p))| a * (TAU * (j + 1) as f64 * t / tau + p).sin())
                        .sum();
                    s.with_phase(f + drift * t)
                })
                .collect();
            let g = traj.with_states(states)?;
            w = w
                .max(phase_distance(aa_phase(&g)?.theta, theta))
                .max((fs_length(&g)? - length).abs());
        }
        Ok(w)
    })();
    checks.push(Check::new(
        "gauge invariance (50 transforms)",
        gauge,
        Requirement::AtMost(1e-6),
    ));

    let reparam = (|| {
        let (theta, length) = (reference.clone()?, length.clone()?);
        let mut w: f64 = 0.0;
        for _ in 0..20 {
            let a = rng.random_range(0.0..0.5);
            let k = rng.random_range(1..=4) as f64;
            let grid: Vec<f64> = uniform_grid(1.0, steps)
                .iter()
                .map(|&u| tau * (u + a * (TAU * k * u).sin() / (TAU * k)))
                .collect();
            let r = evolve_schedule(b.schedule.clone(), &b.initial, &grid)?;
            w = w
                .max(phase_distance(aa_phase(&r)?.theta, theta))
                .max((fs_length(&r)? - length).abs());
        }
        Ok(w)
    })();
    checks.push(Check::new(
        "reparameterization invariance (20 grids)",
        reparam,
        Requirement::AtMost(1e-6),
    ));

    checks.push(Check::new(
        "theta = tau <H - e> mod 2pi",
        phase_identity_residual(&b, steps),
        Requirement::AtMost(1e-6),
    ));

    checks.push(Check::new(
        "unitarity |norm - 1|",
        Ok(traj
            .states()
            .iter()
            .map(|s| (s.amplitudes().norm() - 1.0).abs())
            .fold(0.0, f64::max)),
        Requirement::AtMost(1e-10),
    ));

    let consistency = (|| {
        let HamiltonianSchedule::Constant(h) = b.schedule.as_ref() else {
            return Err(Error::InvalidParameter("expected a constant Hamiltonian".into()));
        };
        let mut w: f64 = 0.0;
        for (&t, s) in traj.times().iter().zip(traj.states()) {
            let direct = evolve_constant(h, &b.initial, t)?;
            w = w.max((direct.amplitudes() - s.amplitudes()).camax());
        }
        Ok(w)
    })();
    checks.push(Check::new(
        "constant schedule vs pointwise evolution",
        consistency,
        Requirement::AtMost(1e-12),
    ));

    let rotating = counterexample_cases();
    checks.push(Check::new(
        "rho_t = e^{-iAt} rho e^{iAt}",
        worst(&rotating, |s| {
            let b = build_counterexample(s)?;
            rotating_frame_residual(s, &b, &b.integrated_trajectory(steps)?)
        }),
        Requirement::AtMost(1e-5),
    ));

    checks.push(Check::new(
        "FS speed = energy uncertainty (relative)",
        worst(&rotating, |s| {
            let t = build_counterexample(s)?.integrated_trajectory(steps)?;
            let dh = uncertainty_profile(&t)?;
            Ok(fs_speeds(&t)?
                .iter()
                .enumerate()
                .map(|(k, v)| {
                    let mid = 0.5 * (dh[k] + dh[k + 1]);
                    (v - mid).abs() / mid
                })
                .fold(0.0, f64::max))
        }),
        Requirement::AtMost(1e-5),
    ));

    checks.push(Check::new(
        "error reduction on doubling the grid",
        least(&rotating, |s| {
            let b = build_counterexample(s)?;
            let reference = b.integrated_trajectory(20 * steps)?;
            let err = |n: usize| -> Result<f64, Error> {
                Ok((b.integrated_trajectory(n)?.last().amplitudes() - reference.last().amplitudes()).norm())
            };
            Ok(err(steps)? / err(2 * steps)?)
        }),
        Requirement::AtLeast(3.0),
    ));
    checks
}
