//! Aharonov-Anandan phases, horizontal lifts and Fubini-Study lengths of
//! sampled state curves.
//!
//! The Berry-Simon connection is integrated with the discrete (Pancharatnam)
//! rule `-sum_k arg<psi_k|psi_{k+1}>`, which is exactly invariant under
//! pointwise rephasing of the samples. Every segment argument lies in
//! `(-pi, pi)` because trajectories guarantee consecutive fidelities above
//! one half.

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::evolution::{closure_defect, HamiltonianSchedule, Propagation, Trajectory};
use crate::quantum::{
    bloch_vector, occupation_profile, occupation_profile_with, uncertainty, variance_matrix, BlochVector,
    HermitianObservable, StateVector, C64,
};
use crate::tolerances::{Tolerances, PHASE_SNAP, TOL_OCCUPATION};

/// Geometric phase of a closed curve together with the pieces it was
/// assembled from. `theta` is the representative in `[0, 2pi)` of
/// `endpoint_arg + connection_integral`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseResult {
    pub theta: f64,
    pub connection_integral: f64,
    pub endpoint_arg: f64,
    pub closure_defect: f64,
}

/// Representative in `[0, 2pi)`, with values just below `2pi` (rounding
/// noise around a trivial phase) mapped to 0.
fn phase_representative(x: f64) -> f64 {
    let r = reduce_phase(x);
    if r > TAU - PHASE_SNAP {
        0.0
    } else {
        r
    }
}

/// Representative of `x` modulo `2pi` in `[0, 2pi)`.
pub fn reduce_phase(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    // rem_euclid can round up to exactly 2pi for tiny negative inputs.
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Distance between two angles on the circle, in `[0, pi]`.
pub fn phase_distance(a: f64, b: f64) -> f64 {
    let d = reduce_phase(a - b);
    d.min(TAU - d)
}

fn require_points(traj: &Trajectory, needed: usize) -> Result<()> {
    if traj.len() < needed {
        return Err(Error::TooFewPoints {
            needed,
            found: traj.len(),
        });
    }
    Ok(())
}

fn segment_overlaps(states: &[StateVector]) -> impl Iterator<Item = C64> + '_ {
    states.windows(2).map(|w| w[0].inner(&w[1]))
}

/// `integral i<psi_t|psi_t'> dt`, discretized as `-sum_k arg<psi_k|psi_{k+1}>`.
pub fn connection_integral(traj: &Trajectory) -> Result<f64> {
    require_points(traj, 2)?;
    Ok(-segment_overlaps(traj.states()).map(|z| z.arg()).sum::<f64>())
}

/// Aharonov-Anandan phase of a closed trajectory, using default tolerances.
pub fn aa_phase(traj: &Trajectory) -> Result<PhaseResult> {
    aa_phase_with(traj, &Tolerances::default())
}

pub fn aa_phase_with(traj: &Trajectory, tol: &Tolerances) -> Result<PhaseResult> {
    require_points(traj, 2)?;
    let defect = closure_defect(traj);
    let tolerance = traj.closure_tolerance(tol);
    if !(defect < tolerance) {
        return Err(Error::OpenCurve { defect, tolerance });
    }
    let connection = connection_integral(traj)?;
    let endpoint_arg = traj.initial().inner(traj.last()).arg();
    Ok(PhaseResult {
        theta: phase_representative(endpoint_arg + connection),
        connection_integral: connection,
        endpoint_arg,
        closure_defect: defect,
    })
}

/// Geometric phase of the cyclic evolution `e^{-iHt} psi0` over `[0, tau]`,
/// read off from the closed lift `e^{-i(H - eps)t} psi0` with `eps` the
/// lowest occupied eigenvalue. Along that lift the connection integrates to
/// `tau <H - eps>` exactly, so no time grid is involved.
pub fn spectral_phase(h: &HermitianObservable, psi0: &StateVector, tau: f64, tol: &Tolerances) -> Result<PhaseResult> {
    let profile = occupation_profile_with(h, psi0, tol)?;
    let eps = profile.eps_min;
    let overlap: C64 = profile
        .levels
        .iter()
        .map(|l| C64::from_polar(l.occupation, -(l.energy - eps) * tau))
        .sum();
    let defect = (1.0 - overlap.norm_sqr()).clamp(0.0, 1.0);
    if !(defect < tol.closure_analytic) {
        return Err(Error::OpenCurve {
            defect,
            tolerance: tol.closure_analytic,
        });
    }
    let connection = tau * (profile.expected_energy - eps);
    let endpoint_arg = overlap.arg();
    Ok(PhaseResult {
        theta: phase_representative(endpoint_arg + connection),
        connection_integral: connection,
        endpoint_arg,
        closure_defect: defect,
    })
}

/// Geometric phase of a closed trajectory by the most accurate available
/// route: the spectral identity for exactly propagated constant
/// Hamiltonians, the discrete connection otherwise.
pub fn trajectory_phase(traj: &Trajectory, tol: &Tolerances) -> Result<PhaseResult> {
    match (traj.schedule(), traj.propagation()) {
        (Some(HamiltonianSchedule::Constant(h)), Propagation::Exact) => {
            let defect = closure_defect(traj);
            let tolerance = traj.closure_tolerance(tol);
            if !(defect < tolerance) {
                return Err(Error::OpenCurve { defect, tolerance });
            }
            spectral_phase(h, traj.initial(), traj.tau(), tol)
        }
        _ => aa_phase_with(traj, tol),
    }
}

/// Rephases every sample so that the lift becomes horizontal:
/// `psi'_k = psi_k exp(i * connection accumulated up to k)`. Each corrected
/// segment overlap is then real and positive, and `arg<psi'_0|psi'_tau>` is
/// the geometric phase.
pub fn horizontalize(traj: &Trajectory) -> Result<Trajectory> {
    require_points(traj, 2)?;
    let mut accumulated = 0.0;
    let mut states = Vec::with_capacity(traj.len());
    states.push(traj.initial().clone());
    for (k, z) in segment_overlaps(traj.states()).enumerate() {
        accumulated -= z.arg();
        states.push(traj.states()[k + 1].with_phase(accumulated));
    }
    traj.with_states(states)
}

/// Fubini-Study angle `arccos|<a|b>|`, evaluated through the chord
/// `|b - e^{i arg<a|b>} a|`, which stays accurate near zero.
fn segment_angle(a: &StateVector, b: &StateVector) -> f64 {
    let z = a.inner(b);
    let align = if z.norm() > 0.0 {
        z / z.norm()
    } else {
        C64::new(1.0, 0.0)
    };
    let chord = (b.amplitudes() - a.amplitudes() * align).norm();
    2.0 * (chord / 2.0).min(1.0).asin()
}

/// Fubini-Study length as the sum of geodesic distances
/// `arccos|<psi_k|psi_{k+1}>|` between consecutive samples.
pub fn fs_length(traj: &Trajectory) -> Result<f64> {
    require_points(traj, 2)?;
    Ok(traj.states().windows(2).map(|w| segment_angle(&w[0], &w[1])).sum())
}

/// Instantaneous energy uncertainty at every grid point of a trajectory with
/// an attached schedule.
pub fn uncertainty_profile(traj: &Trajectory) -> Result<Vec<f64>> {
    let sched = traj.schedule().ok_or(Error::MissingSchedule)?;
    if let HamiltonianSchedule::Constant(h) = sched {
        // Eigenstates stay eigenstates; report exact zeros instead of noise.
        if occupation_profile(h, traj.initial(), TOL_OCCUPATION)?.is_stationary() {
            return Ok(vec![0.0; traj.len()]);
        }
        return traj.states().iter().map(|s| uncertainty(h, s)).collect();
    }
    traj.times()
        .iter()
        .zip(traj.states())
        .map(|(&t, s)| variance_matrix(&sched.matrix_at(t), s).map(f64::sqrt))
        .collect()
}

/// Fubini-Study length as the trapezoid-rule time integral of the energy
/// uncertainty.
pub fn fs_length_quadrature(traj: &Trajectory) -> Result<f64> {
    require_points(traj, 2)?;
    Ok(trapezoid(traj.times(), &uncertainty_profile(traj)?))
}

/// Segment-wise Fubini-Study speeds `arccos|<psi_k|psi_{k+1}>| / dt_k`.
pub fn fs_speeds(traj: &Trajectory) -> Result<Vec<f64>> {
    require_points(traj, 2)?;
    Ok(traj
        .states()
        .windows(2)
        .zip(traj.times().windows(2))
        .map(|(s, t)| segment_angle(&s[0], &s[1]) / (t[1] - t[0]))
        .collect())
}

/// Trapezoid rule on a (possibly non-uniform) grid.
pub fn trapezoid(times: &[f64], values: &[f64]) -> f64 {
    debug_assert_eq!(times.len(), values.len());
    times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum()
}

/// Trapezoid time average over the full grid.
pub fn time_average(times: &[f64], values: &[f64]) -> f64 {
    let span = times[times.len() - 1] - times[0];
    trapezoid(times, values) / span
}

/// Signed solid angle of the spherical triangle `(a, b, c)`.
fn triangle_solid_angle(a: &BlochVector, b: &BlochVector, c: &BlochVector) -> f64 {
    let numerator = a.dot(&b.cross(c));
    let denominator = 1.0 + a.dot(b) + b.dot(c) + c.dot(a);
    2.0 * numerator.atan2(denominator)
}

/// Solid angle enclosed by the Bloch curve of a closed qubit trajectory,
/// counted positive for the region on the left of the direction of
/// traversal. The result is determined modulo `4pi`.
pub fn bloch_solid_angle(traj: &Trajectory) -> Result<f64> {
    require_points(traj, 3)?;
    let mut points = traj.states().iter().map(bloch_vector).collect::<Result<Vec<_>>>()?;
    points.push(points[0]);

    // Apex for the triangle fan: along the oriented area vector, so the
    // loop winds counter-clockwise around it.
    let area = points
        .windows(2)
        .fold(BlochVector { x: 0.0, y: 0.0, z: 0.0 }, |acc, w| {
            let c = w[0].cross(&w[1]);
            BlochVector {
                x: acc.x + c.x,
                y: acc.y + c.y,
                z: acc.z + c.z,
            }
        });
    let norm = area.norm();
    let apex = if norm > 1e-12 {
        BlochVector {
            x: area.x / norm,
            y: area.y / norm,
            z: area.z / norm,
        }
    } else {
        BlochVector { x: 0.0, y: 0.0, z: 1.0 }
    };
    Ok(points
        .windows(2)
        .map(|w| triangle_solid_angle(&apex, &w[0], &w[1]))
        .sum())
}

/// Qubit geometric phase from the enclosed solid angle, `2pi - Omega/2`
/// reduced to `[0, 2pi)`.
pub fn solid_angle_phase(traj: &Trajectory) -> Result<f64> {
    Ok(reduce_phase(TAU - 0.5 * bloch_solid_angle(traj)?))
}

/// Shortest signed representative of an angle, in `(-pi, pi]`.
pub fn wrap_to_pi(x: f64) -> f64 {
    let r = reduce_phase(x + PI) - PI;
    if r == -PI {
        PI
    } else {
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::{evolve_schedule, uniform_grid};
    use crate::quantum::{pauli_x, pauli_y, pauli_z, spectral_decompose, CMatrix};
    use std::sync::Arc;

    fn polar_state(phi: f64) -> StateVector {
        StateVector::from_real(&[(phi / 2.0).sin(), (phi / 2.0).cos()]).unwrap()
    }

    fn precession(phi: f64, omega: f64, steps: usize) -> Trajectory {
        let h = spectral_decompose(pauli_z() * C64::new(omega / 2.0, 0.0)).unwrap();
        evolve_schedule(
            HamiltonianSchedule::constant(h),
            &polar_state(phi),
            &uniform_grid(TAU / omega, steps),
        )
        .unwrap()
    }

    #[test]
    fn reduce_and_wrap() {
        assert_eq!(reduce_phase(0.0), 0.0);
        assert!((reduce_phase(-0.5) - (TAU - 0.5)).abs() < 1e-15);
        assert_eq!(reduce_phase(-1e-300), 0.0);
        assert!((reduce_phase(7.0) - (7.0 - TAU)).abs() < 1e-15);
        assert!((wrap_to_pi(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
        assert!(phase_distance(0.01, TAU - 0.01) < 0.0201);
    }

    #[test]
    fn qubit_phase_follows_cap_formula() {
        for (phi, expected) in [(PI / 2.0, PI), (PI / 3.0, 1.5 * PI)] {
            let traj = precession(phi, 1.0, 4000);
            let r = aa_phase(&traj).unwrap();
            assert!((r.theta - expected).abs() < 1e-6, "phi={phi}: {}", r.theta);
            assert!((reduce_phase(r.endpoint_arg + r.connection_integral) - r.theta).abs() < 1e-9);
        }
    }

    #[test]
    fn stationary_curve_has_zero_phase_and_length() {
        let h = spectral_decompose(pauli_z()).unwrap();
        let traj = evolve_schedule(
            HamiltonianSchedule::constant(h),
            &StateVector::basis(2, 1).unwrap(),
            &uniform_grid(2.3, 100),
        )
        .unwrap();
        let r = aa_phase(&traj).unwrap();
        assert!(phase_distance(r.theta, 0.0) < 1e-12);
        assert!(fs_length(&traj).unwrap() < 1e-7);
        assert!(fs_length_quadrature(&traj).unwrap() == 0.0);
    }

    #[test]
    fn constant_sequence_has_zero_connection() {
        let s = polar_state(0.7);
        let traj = Trajectory::new(vec![0.0, 1.0, 2.0], vec![s.clone(), s.clone(), s], None).unwrap();
        assert_eq!(connection_integral(&traj).unwrap(), 0.0);
    }

    #[test]
    fn closed_lift_connection_matches_energy_offset() {
        // Lift e^{-i(H - eps)t} psi0 of a closed qubit evolution: the
        // integral equals tau <H - eps>.
        let (phi, omega) = (1.1, 1.0);
        let eps = -omega / 2.0;
        let shifted =
            spectral_decompose(pauli_z() * C64::new(omega / 2.0, 0.0) - CMatrix::identity(2, 2) * C64::new(eps, 0.0))
                .unwrap();
        let tau = TAU / omega;
        let traj = evolve_schedule(
            HamiltonianSchedule::constant(shifted),
            &polar_state(phi),
            &uniform_grid(tau, 4000),
        )
        .unwrap();
        let expected = tau * (omega / 2.0) * (1.0 + phi.cos());
        assert!((connection_integral(&traj).unwrap() - expected).abs() < 1e-6);
    }

    #[test]
    fn gauge_shift_vanishing_at_endpoints_leaves_integral() {
        let traj = precession(1.0, 1.0, 2000);
        let tau = traj.tau();
        let states = traj
            .times()
            .iter()
            .zip(traj.states())
            .map(|(&t, s)| s.with_phase(0.8 * (PI * t / tau).sin().powi(2)))
            .collect();
        let shifted = traj.with_states(states).unwrap();
        let a = connection_integral(&traj).unwrap();
        let b = connection_integral(&shifted).unwrap();
        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }

    #[test]
    fn open_curves_are_rejected() {
        let traj = precession(PI / 2.0, 1.0, 4000);
        let half = Trajectory::new(traj.times()[..=2000].to_vec(), traj.states()[..=2000].to_vec(), None).unwrap();
        match aa_phase(&half) {
            Err(Error::OpenCurve { defect, .. }) => assert!((defect - 1.0).abs() < 1e-9),
            other => panic!("expected OpenCurve, got {other:?}"),
        }
        let single = Trajectory::new(vec![0.0], vec![polar_state(0.4)], None).unwrap();
        assert!(matches!(connection_integral(&single), Err(Error::TooFewPoints { .. })));
    }

    #[test]
    fn spectral_route_matches_discrete_route() {
        let traj = precession(PI / 3.0, 2.0, 8000);
        let h = spectral_decompose(pauli_z()).unwrap();
        let exact = spectral_phase(&h, &polar_state(PI / 3.0), PI, &Tolerances::default()).unwrap();
        assert!((exact.theta - 1.5 * PI).abs() < 1e-12);
        assert!(phase_distance(exact.theta, aa_phase(&traj).unwrap().theta) < 1e-6);
        assert!(matches!(
            spectral_phase(&h, &polar_state(PI / 3.0), 1.0, &Tolerances::default()),
            Err(Error::OpenCurve { .. })
        ));
    }

    #[test]
    fn horizontal_lift_reads_off_holonomy() {
        let traj = precession(PI / 2.0, 1.0, 4000);
        let lift = horizontalize(&traj).unwrap();
        assert!(connection_integral(&lift).unwrap().abs() < 1e-8);
        let holonomy = lift.initial().inner(lift.last()).arg();
        assert!(phase_distance(holonomy, PI) < 1e-6);
        // Idempotent.
        let again = horizontalize(&lift).unwrap();
        for (a, b) in lift.states().iter().zip(again.states()) {
            assert!((a.amplitudes() - b.amplitudes()).camax() < 1e-10);
        }
    }

    #[test]
    fn horizontal_lift_of_random_qubit_is_discretely_horizontal() {
        let h = spectral_decompose(
            pauli_x() * C64::new(0.37, 0.0) + pauli_y() * C64::new(-0.81, 0.0) + pauli_z() * C64::new(0.22, 0.0),
        )
        .unwrap();
        let psi = StateVector::from_slice(&[C64::new(0.3, 0.2), C64::new(-0.5, 0.7)]).unwrap();
        let traj = evolve_schedule(
            Arc::new(HamiltonianSchedule::constant(h)),
            &psi,
            &uniform_grid(3.0, 500),
        )
        .unwrap();
        let lift = horizontalize(&traj).unwrap();
        for w in lift.states().windows(2) {
            assert!(w[0].inner(&w[1]).arg().abs() < 1e-8);
        }
    }

    #[test]
    fn fs_length_two_routes_agree_on_cap() {
        for phi in [0.3, PI / 2.0, 2.5] {
            let traj = precession(phi, 1.0, 4000);
            let geodesic = fs_length(&traj).unwrap();
            let quad = fs_length_quadrature(&traj).unwrap();
            assert!((quad - PI * phi.sin()).abs() < 1e-10);
            assert!((geodesic - quad).abs() < 1e-5);
        }
    }

    #[test]
    fn solid_angle_law_on_caps() {
        for phi in [0.4, PI / 2.0, 2.2] {
            let traj = precession(phi, 1.0, 2000);
            let cap = TAU * (1.0 - phi.cos());
            assert!(phase_distance(0.5 * bloch_solid_angle(&traj).unwrap(), 0.5 * cap) < 1e-5);
            assert!(phase_distance(solid_angle_phase(&traj).unwrap(), aa_phase(&traj).unwrap().theta) < 1e-6);
        }
    }

    #[test]
    fn trapezoid_of_linear_function_is_exact() {
        let t = [0.0, 0.5, 2.0, 3.0];
        let v: Vec<f64> = t.iter().map(|x| 2.0 * x + 1.0).collect();
        assert!((trapezoid(&t, &v) - 12.0).abs() < 1e-14);
        assert!((time_average(&t, &v) - 4.0).abs() < 1e-14);
    }
}
