//! Lower bounds on the time needed to generate a geometric phase, and the
//! report that evaluates all of them on one closed trajectory.
//!
//! * ML type (time-independent Hamiltonians only):
//!   `tau >= max{theta/<H - eps_bar>, (2pi - theta)/<eps_underbar - H>}`.
//! * Length bound: `L >= sqrt(theta (2pi - theta))`.
//! * MT type: `tau >= sqrt(theta (2pi - theta)) / <<dH_t>>`.
//! * BD type: the MT bound with `dH_t` replaced by its Bhatia-Davies
//!   majorant `sqrt(<H_t - eps_min;t><eps_max;t - H_t>)`.
//!
//! `<<.>>` denotes a trapezoid time average over the trajectory grid.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::evolution::{HamiltonianSchedule, Trajectory};
use crate::geometry::{fs_length_quadrature, time_average, trajectory_phase};
use crate::quantum::{occupation_profile_with, OccupationProfile};
use crate::tolerances::Tolerances;

fn check_theta(theta: f64) -> Result<()> {
    if !(0.0..TAU).contains(&theta) {
        return Err(Error::ThetaOutOfRange(theta));
    }
    Ok(())
}

/// Value of the ML-type bound and its two quotients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlBound {
    pub bound: f64,
    /// `theta / <H - eps_bar>`.
    pub below: f64,
    /// `(2pi - theta) / <eps_underbar - H>`.
    pub above: f64,
}

/// ML-type bound for a time-independent Hamiltonian. A stationary profile
/// (missing `eps_bar` or `eps_underbar`) gives 0.
pub fn ml_bound(profile: &OccupationProfile, theta: f64) -> Result<MlBound> {
    check_theta(theta)?;
    let (Some(eps_bar), Some(eps_underbar)) = (profile.eps_bar, profile.eps_underbar) else {
        return Ok(MlBound {
            bound: 0.0,
            below: 0.0,
            above: 0.0,
        });
    };
    let below = if theta == 0.0 {
        0.0
    } else {
        theta / (profile.expected_energy - eps_bar)
    };
    let above = (TAU - theta) / (eps_underbar - profile.expected_energy);
    Ok(MlBound {
        bound: below.max(above),
        below,
        above,
    })
}

/// Instantaneous occupation profiles of a trajectory with a schedule.
fn instantaneous_profiles(traj: &Trajectory, tol: &Tolerances) -> Result<Vec<OccupationProfile>> {
    let sched = traj.schedule().ok_or(Error::MissingSchedule)?;
    match sched {
        HamiltonianSchedule::Constant(h) => traj
            .states()
            .iter()
            .map(|s| occupation_profile_with(h, s, tol))
            .collect(),
        _ => traj
            .times()
            .iter()
            .zip(traj.states())
            .map(|(&t, s)| occupation_profile_with(&sched.hamiltonian_at(t)?, s, tol))
            .collect(),
    }
}

fn require_closed(traj: &Trajectory, tol: &Tolerances) -> Result<()> {
    let defect = crate::evolution::closure_defect(traj);
    let tolerance = traj.closure_tolerance(tol);
    if !(defect < tolerance) {
        return Err(Error::OpenCurve { defect, tolerance });
    }
    Ok(())
}

/// `max{theta/<<<H_t - eps_bar;t>>>, (2pi - theta)/<<<eps_underbar;t - H_t>>>}`.
///
/// This is a diagnostic, not a bound: for time-dependent Hamiltonians it can
/// exceed the evolution time.
pub fn ml_time_averaged(traj: &Trajectory, theta: f64) -> Result<MlBound> {
    ml_time_averaged_with(traj, theta, &Tolerances::default())
}

pub fn ml_time_averaged_with(traj: &Trajectory, theta: f64, tol: &Tolerances) -> Result<MlBound> {
    check_theta(theta)?;
    require_closed(traj, tol)?;
    let profiles = instantaneous_profiles(traj, tol)?;
    let mut gaps_below = Vec::with_capacity(profiles.len());
    let mut gaps_above = Vec::with_capacity(profiles.len());
    for (k, p) in profiles.iter().enumerate() {
        match (p.eps_bar, p.eps_underbar) {
            (Some(lo), Some(hi)) => {
                gaps_below.push(p.expected_energy - lo);
                gaps_above.push(hi - p.expected_energy);
            }
            _ => {
                return Err(Error::Stationary(format!(
                    "instantaneous state at t = {} occupies a single level",
                    traj.times()[k]
                )))
            }
        }
    }
    let times = traj.times();
    let below = if theta == 0.0 {
        0.0
    } else {
        theta / time_average(times, &gaps_below)
    };
    let above = (TAU - theta) / time_average(times, &gaps_above);
    Ok(MlBound {
        bound: below.max(above),
        below,
        above,
    })
}

/// Minimal Fubini-Study length of a closed curve with geometric phase
/// `theta`: `sqrt(theta (2pi - theta))`.
pub fn length_lower_bound(theta: f64) -> Result<f64> {
    check_theta(theta)?;
    Ok((theta * (TAU - theta)).sqrt())
}

/// MT-type bound `sqrt(theta (2pi - theta)) / avg_uncertainty`.
pub fn mt_bound(theta: f64, avg_uncertainty: f64) -> Result<f64> {
    let length = length_lower_bound(theta)?;
    if theta == 0.0 {
        return Ok(0.0);
    }
    if !(avg_uncertainty > 0.0) {
        return Err(Error::InconsistentUncertainty { theta });
    }
    Ok(length / avg_uncertainty)
}

/// BD-type bound, always at most [`mt_bound`] on the same trajectory.
pub fn bd_bound(traj: &Trajectory, theta: f64) -> Result<f64> {
    bd_bound_with(traj, theta, &Tolerances::default())
}

pub fn bd_bound_with(traj: &Trajectory, theta: f64, tol: &Tolerances) -> Result<f64> {
    let length = length_lower_bound(theta)?;
    if theta == 0.0 {
        return Ok(0.0);
    }
    require_closed(traj, tol)?;
    let profiles = instantaneous_profiles(traj, tol)?;
    let mut majorants = Vec::with_capacity(profiles.len());
    for (k, p) in profiles.iter().enumerate() {
        if p.levels.len() < 2 {
            return Err(Error::Stationary(format!(
                "instantaneous state at t = {} occupies a single level",
                traj.times()[k]
            )));
        }
        majorants.push(p.bhatia_davies_product().sqrt());
    }
    Ok(length / time_average(traj.times(), &majorants))
}

/// Everything the bounds say about one closed trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub theta: f64,
    pub tau: f64,
    pub fs_length: f64,
    pub avg_uncertainty: f64,
    /// For time-dependent schedules this holds the time-averaged ML
    /// expression, which is not a bound (see `ml_not_a_bound`).
    pub ml_bound: f64,
    pub ml_quotients: (f64, f64),
    pub ml_not_a_bound: bool,
    pub mt_bound: f64,
    pub bd_bound: f64,
    pub closure_defect: f64,
    /// Bound divided by tau, keyed by `ml`, `mt` and `bd`.
    pub saturation_ratios: BTreeMap<String, f64>,
}

impl BoundReport {
    /// Time-averaged ML expression, reported only for time-dependent
    /// schedules.
    pub fn ml_time_averaged(&self) -> Option<f64> {
        self.ml_not_a_bound.then_some(self.ml_bound)
    }

    /// Descriptions of every violated report invariant.
    pub fn violations(&self, tol_bound: f64) -> Vec<String> {
        let mut out = Vec::new();
        if (self.ml_bound - self.ml_quotients.0.max(self.ml_quotients.1)).abs() > 0.0 {
            out.push(format!(
                "ml_bound {} != max of quotients {:?}",
                self.ml_bound, self.ml_quotients
            ));
        }
        if self.bd_bound > self.mt_bound + 1e-9 {
            out.push(format!("bd_bound {} exceeds mt_bound {}", self.bd_bound, self.mt_bound));
        }
        let mut bounds = vec![("mt", self.mt_bound), ("bd", self.bd_bound)];
        if !self.ml_not_a_bound {
            bounds.push(("ml", self.ml_bound));
        }
        for (name, value) in bounds {
            if value > self.tau + tol_bound {
                out.push(format!("{name} bound {value} exceeds tau {}", self.tau));
            }
        }
        if !(0.0..TAU).contains(&self.theta) {
            out.push(format!("theta {} outside [0, 2pi)", self.theta));
        }
        out
    }
}

pub fn full_report(traj: &Trajectory) -> Result<BoundReport> {
    full_report_with(traj, &Tolerances::default())
}

/// Evaluates the geometric phase, FS length and all bounds on a closed
/// trajectory. Exactly propagated constant-Hamiltonian trajectories take
/// their phase from the spectral closed-lift identity; all others from the
/// discrete connection.
pub fn full_report_with(traj: &Trajectory, tol: &Tolerances) -> Result<BoundReport> {
    let sched = traj.schedule().ok_or(Error::MissingSchedule)?;
    require_closed(traj, tol)?;
    let tau = traj.tau();
    if !(tau > 0.0) {
        return Err(Error::InvalidGrid("evolution time must be positive".into()));
    }

    let fs_length = fs_length_quadrature(traj)?;
    let avg_uncertainty = fs_length / tau;

    let phase = trajectory_phase(traj, tol)?;
    // A curve that never moves carries no phase; snap rounding noise near
    // 0 or 2pi.
    let theta = if avg_uncertainty == 0.0 { 0.0 } else { phase.theta };

    let ml = match sched {
        HamiltonianSchedule::Constant(h) => ml_bound(&occupation_profile_with(h, traj.initial(), tol)?, theta)?,
        _ if theta == 0.0 && avg_uncertainty == 0.0 => MlBound {
            bound: 0.0,
            below: 0.0,
            above: 0.0,
        },
        _ => ml_time_averaged_with(traj, theta, tol)?,
    };
    let ml_not_a_bound = !sched.is_time_independent();
    let mt = mt_bound(theta, avg_uncertainty)?;
    let bd = bd_bound_with(traj, theta, tol)?;

    let saturation_ratios = [("ml", ml.bound), ("mt", mt), ("bd", bd)]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v / tau))
        .collect();

    Ok(BoundReport {
        theta,
        tau,
        fs_length,
        avg_uncertainty,
        ml_bound: ml.bound,
        ml_quotients: (ml.below, ml.above),
        ml_not_a_bound,
        mt_bound: mt,
        bd_bound: bd,
        closure_defect: phase.closure_defect,
        saturation_ratios,
    })
}
