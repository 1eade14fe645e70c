//! Trajectory generation under constant and time-dependent Hamiltonians,
//! closure checks, and period search.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quantum::{occupation_profile_with, spectral_decompose, CMatrix, HermitianObservable, StateVector, C64};
use crate::tolerances::Tolerances;

/// Hamiltonian as a function of time.
#[derive(Debug, Clone, PartialEq)]
pub enum HamiltonianSchedule {
    Constant(HermitianObservable),
    /// `H_t = e^{-iAt} H e^{iAt}` with generator `A` and base Hamiltonian `H`.
    RotatingFrame {
        generator: HermitianObservable,
        base: HermitianObservable,
    },
    /// Piecewise-linear interpolation between Hermitian samples, held
    /// constant outside the sampled window.
    Sampled {
        times: Vec<f64>,
        samples: Vec<HermitianObservable>,
    },
}

impl HamiltonianSchedule {
    pub fn constant(h: HermitianObservable) -> Self {
        HamiltonianSchedule::Constant(h)
    }

    pub fn rotating_frame(generator: HermitianObservable, base: HermitianObservable) -> Result<Self> {
        if generator.dim() != base.dim() {
            return Err(Error::DimensionMismatch {
                expected: generator.dim(),
                found: base.dim(),
            });
        }
        Ok(HamiltonianSchedule::RotatingFrame { generator, base })
    }

    pub fn sampled(times: Vec<f64>, matrices: Vec<CMatrix>) -> Result<Self> {
        if times.is_empty() || times.len() != matrices.len() {
            return Err(Error::InvalidParameter(format!(
                "sampled schedule needs matching non-empty times ({}) and matrices ({})",
                times.len(),
                matrices.len()
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidGrid(
                "sample times must be finite and strictly increasing".into(),
            ));
        }
        let samples = matrices
            .into_iter()
            .map(spectral_decompose)
            .collect::<Result<Vec<_>>>()?;
        let dim = samples[0].dim();
        if let Some(bad) = samples.iter().find(|s| s.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.dim(),
            });
        }
        Ok(HamiltonianSchedule::Sampled { times, samples })
    }

    pub fn dim(&self) -> usize {
        match self {
            HamiltonianSchedule::Constant(h) => h.dim(),
            HamiltonianSchedule::RotatingFrame { base, .. } => base.dim(),
            HamiltonianSchedule::Sampled { samples, .. } => samples[0].dim(),
        }
    }

    pub fn is_time_independent(&self) -> bool {
        matches!(self, HamiltonianSchedule::Constant(_))
    }

    /// Instantaneous Hamiltonian with its spectral decomposition.
    pub fn hamiltonian_at(&self, t: f64) -> Result<HermitianObservable> {
        match self {
            HamiltonianSchedule::Constant(h) => Ok(h.clone()),
            HamiltonianSchedule::RotatingFrame { generator, base } => Ok(base.conjugated(&generator.propagator(t))),
            HamiltonianSchedule::Sampled { .. } => spectral_decompose(self.matrix_at(t)),
        }
    }

    /// Instantaneous Hamiltonian matrix without diagonalizing it.
    pub fn matrix_at(&self, t: f64) -> CMatrix {
        match self {
            HamiltonianSchedule::Constant(h) => h.matrix().clone(),
            HamiltonianSchedule::RotatingFrame { generator, base } => {
                let u = generator.propagator(t);
                &u * base.matrix() * u.adjoint()
            }
            HamiltonianSchedule::Sampled { times, samples } => {
                let last = times.len() - 1;
                if t <= times[0] {
                    return samples[0].matrix().clone();
                }
                if t >= times[last] {
                    return samples[last].matrix().clone();
                }
                let k = times.partition_point(|&s| s <= t) - 1;
                let w = (t - times[k]) / (times[k + 1] - times[k]);
                samples[k].matrix() * C64::new(1.0 - w, 0.0) + samples[k + 1].matrix() * C64::new(w, 0.0)
            }
        }
    }
}

/// How the states of a trajectory were produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Propagation {
    /// Exact spectral propagation of a time-independent Hamiltonian.
    Exact,
    /// Step-by-step numerical integration.
    Integrated,
    /// States supplied directly, without a generating Hamiltonian.
    Supplied,
}

/// Sampled curve of unit vectors over a time grid starting at 0.
#[derive(Debug, Clone)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<StateVector>,
    schedule: Option<Arc<HamiltonianSchedule>>,
    propagation: Propagation,
}

impl Trajectory {
    /// Builds a trajectory from explicit samples, checking the grid and the
    /// consecutive-fidelity invariant.
    pub fn new(times: Vec<f64>, states: Vec<StateVector>, schedule: Option<Arc<HamiltonianSchedule>>) -> Result<Self> {
        let traj = Trajectory {
            times,
            states,
            schedule,
            propagation: Propagation::Supplied,
        };
        traj.validate()?;
        Ok(traj)
    }

    fn validate(&self) -> Result<()> {
        validate_grid(&self.times)?;
        if self.times.len() != self.states.len() {
            return Err(Error::InvalidParameter(format!(
                "{} times but {} states",
                self.times.len(),
                self.states.len()
            )));
        }
        let dim = self.states[0].dim();
        for s in &self.states {
            s.check_dim(dim)?;
        }
        if let Some(sched) = &self.schedule {
            if sched.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: sched.dim(),
                    found: dim,
                });
            }
        }
        check_fidelities(&self.states)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[StateVector] {
        &self.states
    }

    pub fn schedule(&self) -> Option<&HamiltonianSchedule> {
        self.schedule.as_deref()
    }

    pub fn propagation(&self) -> Propagation {
        self.propagation
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }

    /// Evolution time, the last grid point.
    pub fn tau(&self) -> f64 {
        *self.times.last().expect("trajectory is non-empty")
    }

    pub fn initial(&self) -> &StateVector {
        &self.states[0]
    }

    pub fn last(&self) -> &StateVector {
        self.states.last().expect("trajectory is non-empty")
    }

    /// Closure threshold appropriate to how the states were produced.
    pub fn closure_tolerance(&self, tol: &Tolerances) -> f64 {
        match self.propagation {
            Propagation::Exact => tol.closure_analytic,
            Propagation::Integrated | Propagation::Supplied => tol.closure_integrated,
        }
    }

    /// Same times, schedule and provenance with replacement states, e.g. a
    /// different lift of the same curve.
    pub fn with_states(&self, states: Vec<StateVector>) -> Result<Trajectory> {
        let traj = Trajectory {
            times: self.times.clone(),
            states,
            schedule: self.schedule.clone(),
            propagation: self.propagation,
        };
        traj.validate()?;
        Ok(traj)
    }
}

fn validate_grid(grid: &[f64]) -> Result<()> {
    match grid.first() {
        None => return Err(Error::InvalidGrid("grid is empty".into())),
        Some(&t0) if t0 != 0.0 => return Err(Error::InvalidGrid(format!("grid starts at {t0}, expected 0"))),
        _ => {}
    }
    if grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidGrid("grid contains non-finite times".into()));
    }
    if let Some(k) = grid.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidGrid(format!(
            "grid not strictly increasing at index {}",
            k + 1
        )));
    }
    Ok(())
}

fn check_fidelities(states: &[StateVector]) -> Result<()> {
    for (k, w) in states.windows(2).enumerate() {
        let fidelity = w[0].fidelity(&w[1]);
        if !(fidelity > 0.5) {
            return Err(Error::GridTooCoarse { step: k, fidelity });
        }
    }
    Ok(())
}

/// `steps + 1` equally spaced times on `[0, t_end]`, with the last point
/// exactly `t_end`.
pub fn uniform_grid(t_end: f64, steps: usize) -> Vec<f64> {
    let steps = steps.max(1);
    let mut grid: Vec<f64> = (0..=steps).map(|k| t_end * k as f64 / steps as f64).collect();
    grid[steps] = t_end;
    grid
}

/// `e^{-iHt} psi0` by spectral decomposition.
pub fn evolve_constant(h: &HermitianObservable, psi0: &StateVector, t: f64) -> Result<StateVector> {
    if !t.is_finite() {
        return Err(Error::InvalidParameter(format!("evolution time {t} is not finite")));
    }
    let coeffs = h.eigen_coefficients(psi0)?;
    Ok(spectral_state(h, &coeffs, t))
}

fn spectral_state(h: &HermitianObservable, coeffs: &nalgebra::DVector<C64>, t: f64) -> StateVector {
    let rotated = coeffs.zip_map(h.eigenvalues(), |c, e| c * C64::from_polar(1.0, -e * t));
    StateVector::new(h.eigenvectors() * rotated).expect("unitary image of a unit vector")
}

/// Propagates `psi0` over `grid`. Constant schedules are propagated exactly
/// at every grid point; time-dependent ones with the exponential-midpoint
/// rule `U_k = exp(-i H(t_mid) dt)`, renormalizing after each step.
pub fn evolve_schedule(
    sched: impl Into<Arc<HamiltonianSchedule>>,
    psi0: &StateVector,
    grid: &[f64],
) -> Result<Trajectory> {
    let sched = sched.into();
    match sched.as_ref() {
        HamiltonianSchedule::Constant(h) => {
            validate_grid(grid)?;
            let coeffs = h.eigen_coefficients(psi0)?;
            let states: Vec<StateVector> = grid.iter().map(|&t| spectral_state(h, &coeffs, t)).collect();
            check_fidelities(&states)?;
            Ok(Trajectory {
                times: grid.to_vec(),
                states,
                schedule: Some(sched),
                propagation: Propagation::Exact,
            })
        }
        _ => evolve_midpoint(sched, psi0, grid),
    }
}

/// Exponential-midpoint propagation for any schedule, including constant
/// ones.
pub fn evolve_midpoint(
    sched: impl Into<Arc<HamiltonianSchedule>>,
    psi0: &StateVector,
    grid: &[f64],
) -> Result<Trajectory> {
    let sched = sched.into();
    validate_grid(grid)?;
    psi0.check_dim(sched.dim())?;
    let mut states = Vec::with_capacity(grid.len());
    states.push(psi0.clone());
    for (k, w) in grid.windows(2).enumerate() {
        let dt = w[1] - w[0];
        let h_mid = sched.hamiltonian_at(0.5 * (w[0] + w[1]))?;
        let prev = &states[k];
        let next = StateVector::new(h_mid.propagator(dt) * prev.amplitudes())?;
        let fidelity = prev.fidelity(&next);
        if !(fidelity > 0.5) {
            return Err(Error::GridTooCoarse { step: k, fidelity });
        }
        states.push(next);
    }
    Ok(Trajectory {
        times: grid.to_vec(),
        states,
        schedule: Some(sched),
        propagation: Propagation::Integrated,
    })
}

/// `1 - |<psi_0|psi_tau>|^2`.
pub fn closure_defect(traj: &Trajectory) -> f64 {
    (1.0 - traj.initial().fidelity(traj.last())).clamp(0.0, 1.0)
}

pub fn is_closed(traj: &Trajectory, tol: &Tolerances) -> bool {
    closure_defect(traj) < traj.closure_tolerance(tol)
}

/// Outcome of [`find_period`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PeriodSearch {
    /// The state occupies a single level and never moves.
    Stationary,
    Period(f64),
    NotFound,
}

impl PeriodSearch {
    pub fn period(&self) -> Option<f64> {
        match self {
            PeriodSearch::Period(t) => Some(*t),
            _ => None,
        }
    }
}

/// Smallest `t` in `(0, t_max]` at which the evolved state returns to its
/// initial ray within `tol` (closure defect). The return amplitude is
/// scanned with at least 20 samples per cycle of the fastest occupied Bohr
/// frequency, and each local minimum of the defect is refined by bisection
/// on its derivative.
pub fn find_period(h: &HermitianObservable, psi0: &StateVector, t_max: f64, tol: f64) -> Result<PeriodSearch> {
    if !(t_max > 0.0) || !t_max.is_finite() {
        return Err(Error::InvalidParameter(format!("t_max must be positive, got {t_max}")));
    }
    let profile = occupation_profile_with(h, psi0, &Tolerances::default())?;
    if profile.levels.len() < 2 {
        return Ok(PeriodSearch::Stationary);
    }
    let levels: Vec<(f64, f64)> = profile
        .levels
        .iter()
        .map(|l| (l.energy - profile.eps_min, l.occupation))
        .collect();
    let bohr_max = profile.eps_max - profile.eps_min;

    // defect(t) = 1 - |f|^2 with f(t) = sum_j p_j e^{-i e_j t}.
    let defect = |t: f64| {
        let f: C64 = levels.iter().map(|&(e, p)| C64::from_polar(p, -e * t)).sum();
        (1.0 - f.norm_sqr()).max(0.0)
    };
    let slope = |t: f64| {
        let (f, df) = levels
            .iter()
            .fold((C64::new(0.0, 0.0), C64::new(0.0, 0.0)), |(f, df), &(e, p)| {
                let z = C64::from_polar(p, -e * t);
                (f + z, df + z * C64::new(0.0, -e))
            });
        -2.0 * (f.conj() * df).re
    };

    let dt = 2.0 * PI / (20.0 * bohr_max);
    let t_stop = t_max * (1.0 + 1e-10);
    let mut a = 0.0;
    let mut slope_a = slope(a);
    loop {
        if a >= t_stop {
            return Ok(PeriodSearch::NotFound);
        }
        let b = a + dt;
        let slope_b = slope(b);
        if slope_a < 0.0 && slope_b >= 0.0 {
            let (mut lo, mut hi) = (a, b);
            while hi - lo > 1e-10 * hi {
                let mid = 0.5 * (lo + hi);
                if slope(mid) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let t = 0.5 * (lo + hi);
            if t > t_stop {
                return Ok(PeriodSearch::NotFound);
            }
            if defect(t) < tol {
                return Ok(PeriodSearch::Period(t));
            }
        }
        a = b;
        slope_a = slope_b;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{pauli_x, pauli_z, CMatrix};
    use std::f64::consts::SQRT_2;

    fn h_of(m: CMatrix) -> HermitianObservable {
        spectral_decompose(m).unwrap()
    }

    fn plus() -> StateVector {
        StateVector::from_real(&[1.0, 1.0]).unwrap()
    }

    /// Matrix exponential by truncated power series, used as an independent
    /// reference for the spectral propagator.
    fn expm_series(m: &CMatrix) -> CMatrix {
        let n = m.nrows();
        let mut term = CMatrix::identity(n, n);
        let mut sum = term.clone();
        for k in 1..60 {
            term = &term * m / C64::new(k as f64, 0.0);
            sum += &term;
        }
        sum
    }

    #[test]
    fn zero_time_is_identity() {
        let h = h_of(pauli_x() + pauli_z() * C64::new(0.3, 0.0));
        let psi = StateVector::from_real(&[0.6, 0.8]).unwrap();
        let out = evolve_constant(&h, &psi, 0.0).unwrap();
        assert!((out.amplitudes() - psi.amplitudes()).camax() < 1e-15);
    }

    #[test]
    fn sigma_x_quarter_turn_matches_series() {
        let h = h_of(pauli_x());
        let psi = StateVector::basis(2, 0).unwrap();
        let t = PI / 2.0;
        let out = evolve_constant(&h, &psi, t).unwrap();
        let reference = expm_series(&(pauli_x() * C64::new(0.0, -t))) * psi.amplitudes();
        assert!((out.amplitudes() - &reference).camax() < 1e-12);
        // -i|1>
        assert!((out.amplitudes()[1] - C64::new(0.0, -1.0)).norm() < 1e-12);
        assert!(out.amplitudes()[0].norm() < 1e-12);
    }

    #[test]
    fn eigenstates_are_stationary() {
        let h = h_of(pauli_z());
        let psi = StateVector::basis(2, 1).unwrap();
        let out = evolve_constant(&h, &psi, 3.7).unwrap();
        assert!(psi.projector().distance_max(&out.projector()) < 1e-14);
    }

    #[test]
    fn constant_schedule_closes_after_period() {
        let sched = HamiltonianSchedule::constant(h_of(pauli_z()));
        let traj = evolve_schedule(sched, &plus(), &uniform_grid(PI, 2000)).unwrap();
        assert_eq!(traj.propagation(), Propagation::Exact);
        assert!(traj.initial().projector().distance_max(&traj.last().projector()) < 1e-6);
        assert!(closure_defect(&traj) < 1e-12);
    }

    #[test]
    fn constant_schedule_agrees_with_pointwise_evolution() {
        let h = h_of(pauli_x() * C64::new(0.4, 0.0) + pauli_z());
        let psi = StateVector::from_real(&[0.3, 0.9]).unwrap();
        let grid = uniform_grid(2.0, 50);
        let traj = evolve_schedule(HamiltonianSchedule::constant(h.clone()), &psi, &grid).unwrap();
        for (t, s) in traj.times().iter().zip(traj.states()) {
            let direct = evolve_constant(&h, &psi, *t).unwrap();
            assert!((direct.amplitudes() - s.amplitudes()).camax() < 1e-12);
        }
    }

    #[test]
    fn midpoint_is_exact_for_constant_hamiltonian() {
        let h = h_of(pauli_x() * C64::new(0.4, 0.0) + pauli_z());
        let psi = StateVector::from_real(&[0.3, 0.9]).unwrap();
        let grid = uniform_grid(2.0, 100);
        let traj = evolve_midpoint(HamiltonianSchedule::constant(h.clone()), &psi, &grid).unwrap();
        let direct = evolve_constant(&h, &psi, 2.0).unwrap();
        assert!((direct.amplitudes() - traj.last().amplitudes()).camax() < 1e-12);
        assert_eq!(traj.propagation(), Propagation::Integrated);
    }

    #[test]
    fn single_point_grid() {
        let sched = HamiltonianSchedule::constant(h_of(pauli_z()));
        let traj = evolve_schedule(sched, &plus(), &[0.0]).unwrap();
        assert_eq!(traj.len(), 1);
        assert!(traj.initial().fidelity(&plus()) > 1.0 - 1e-15);
        assert_eq!(closure_defect(&traj), 0.0);
    }

    #[test]
    fn grid_violations_are_rejected() {
        let sched = Arc::new(HamiltonianSchedule::constant(h_of(pauli_z())));
        assert!(matches!(
            evolve_schedule(sched.clone(), &plus(), &[0.1, 0.2]),
            Err(Error::InvalidGrid(_))
        ));
        assert!(matches!(
            evolve_schedule(sched.clone(), &plus(), &[0.0, 0.2, 0.2]),
            Err(Error::InvalidGrid(_))
        ));
        assert!(matches!(
            evolve_schedule(sched.clone(), &plus(), &[]),
            Err(Error::InvalidGrid(_))
        ));
        // Half a period in one step maps |+> to |->.
        assert!(matches!(
            evolve_schedule(sched, &plus(), &[0.0, PI / 2.0]),
            Err(Error::GridTooCoarse { .. })
        ));
    }

    #[test]
    fn sampled_schedule_interpolates() {
        let sched = HamiltonianSchedule::sampled(vec![0.0, 1.0], vec![pauli_z(), pauli_x()]).unwrap();
        let mid = sched.hamiltonian_at(0.5).unwrap();
        let expected = (pauli_z() + pauli_x()) * C64::new(0.5, 0.0);
        assert!((mid.matrix() - expected).camax() < 1e-15);
        assert!((sched.hamiltonian_at(5.0).unwrap().matrix() - pauli_x()).camax() < 1e-15);
        assert!(HamiltonianSchedule::sampled(vec![0.0, 0.0], vec![pauli_z(), pauli_x()]).is_err());
        let bad = CMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(0.0, 0.0),
                C64::new(1.0, 0.0),
                C64::new(0.0, 0.0),
                C64::new(0.0, 0.0),
            ],
        );
        assert!(matches!(
            HamiltonianSchedule::sampled(vec![0.0], vec![bad]),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn rotating_frame_spectrum_is_constant() {
        let a = h_of(pauli_z() * C64::new(0.7, 0.0));
        let h = h_of(pauli_z() * C64::new(0.5, 0.0) - pauli_x() * C64::new(0.2, 0.0));
        let sched = HamiltonianSchedule::rotating_frame(a, h.clone()).unwrap();
        for t in [0.0, 0.3, 2.1] {
            let ht = sched.hamiltonian_at(t).unwrap();
            assert!((ht.eigenvalues() - h.eigenvalues()).camax() < 1e-12);
        }
        assert!((sched.hamiltonian_at(0.0).unwrap().matrix() - h.matrix()).camax() < 1e-14);
    }

    #[test]
    fn closure_defect_over_half_period_is_one() {
        // Equatorial state, Rabi length 1: antipodal after half a period.
        let h = h_of(pauli_z() * C64::new(0.5, 0.0));
        let sched = HamiltonianSchedule::constant(h);
        let half = evolve_schedule(sched.clone(), &plus(), &uniform_grid(PI, 400)).unwrap();
        assert!((closure_defect(&half) - 1.0).abs() < 1e-12);
        let full = evolve_schedule(sched, &plus(), &uniform_grid(2.0 * PI, 800)).unwrap();
        assert!(closure_defect(&full) < 1e-10);
    }

    #[test]
    fn qubit_period_search() {
        // Rabi length 2 along +z, polar angle pi/4.
        let h = h_of(pauli_z());
        let phi = PI / 4.0;
        let psi = StateVector::from_real(&[(phi / 2.0).sin(), (phi / 2.0).cos()]).unwrap();
        let found = find_period(&h, &psi, 10.0, 1e-8).unwrap();
        let t = found.period().expect("period");
        assert!((t - PI).abs() < 1e-9 * PI, "{t}");
    }

    #[test]
    fn period_search_edge_cases() {
        let h = h_of(pauli_z());
        assert_eq!(
            find_period(&h, &StateVector::basis(2, 0).unwrap(), 5.0, 1e-8).unwrap(),
            PeriodSearch::Stationary
        );
        assert!(find_period(&h, &plus(), 0.0, 1e-8).is_err());
        // Period pi lies beyond t_max.
        assert_eq!(find_period(&h, &plus(), 3.0, 1e-8).unwrap(), PeriodSearch::NotFound);
        // Period exactly at t_max is still found.
        assert!(find_period(&h, &plus(), PI, 1e-8).unwrap().period().is_some());
    }

    #[test]
    fn incommensurate_gaps_have_no_period() {
        let h = HermitianObservable::diagonal(&[0.0, 1.0, SQRT_2]).unwrap();
        let psi = StateVector::from_real(&[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(find_period(&h, &psi, 60.0, 1e-8).unwrap(), PeriodSearch::NotFound);
        // Defect scan oracle: stays bounded away from zero on (1, 60].
        let min_defect = (1..=60_000)
            .map(|k| {
                let t = k as f64 * 1e-3;
                1.0 - psi.fidelity(&evolve_constant(&h, &psi, t).unwrap())
            })
            .skip(1000)
            .fold(f64::INFINITY, f64::min);
        assert!(min_defect > 1e-4, "{min_defect}");
    }
}
