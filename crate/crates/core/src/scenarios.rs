//! Constructors for the worked example families (precessing qubit,
//! commensurate qutrit, rotating-frame counterexample) and a seeded
//! generator of random periodic systems.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use nalgebra::DVector;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::bounds::ml_bound;
use crate::error::{Error, Result};
use crate::evolution::{evolve_midpoint, evolve_schedule, uniform_grid, HamiltonianSchedule, Trajectory};
use crate::geometry::{reduce_phase, trajectory_phase};
use crate::quantum::{
    occupation_profile_with, pauli_x, pauli_z, spectral_decompose, CMatrix, CVector, HermitianObservable, StateVector,
    C64,
};
use crate::tolerances::Tolerances;

/// A ready-to-run cyclic system: schedule, initial state and period.
#[derive(Debug, Clone)]
pub struct BuiltScenario {
    pub schedule: Arc<HamiltonianSchedule>,
    pub initial: StateVector,
    pub tau: f64,
    /// Closed-form geometric phase, where the family has one.
    pub theta_predicted: Option<f64>,
}

impl BuiltScenario {
    /// Trajectory over one period with `steps` equal steps, propagated
    /// exactly for constant schedules and by exponential midpoint otherwise.
    pub fn trajectory(&self, steps: usize) -> Result<Trajectory> {
        evolve_schedule(self.schedule.clone(), &self.initial, &uniform_grid(self.tau, steps))
    }

    /// Trajectory over one period integrated with the exponential-midpoint
    /// rule regardless of the schedule kind.
    pub fn integrated_trajectory(&self, steps: usize) -> Result<Trajectory> {
        evolve_midpoint(self.schedule.clone(), &self.initial, &uniform_grid(self.tau, steps))
    }

    /// Number of steps over one period so that the widest spectral gap of
    /// the initial Hamiltonian advances by at most `max_phase_per_step`.
    pub fn steps_for_phase_resolution(&self, max_phase_per_step: f64) -> Result<usize> {
        let h = self.schedule.hamiltonian_at(0.0)?;
        let ev = h.eigenvalues();
        let spread = ev[ev.len() - 1] - ev[0];
        Ok(((spread * self.tau / max_phase_per_step).ceil() as usize).max(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitScenario {
    /// Polar angle of the initial Bloch vector, in `(0, pi)`.
    pub phi: f64,
    /// Length of the Rabi vector (along +z).
    pub omega: f64,
    pub trace_h: f64,
}

impl QubitScenario {
    pub fn new(phi: f64, omega: f64) -> Self {
        QubitScenario {
            phi,
            omega,
            trace_h: 0.0,
        }
    }
}

/// `H = (tr H * I + Omega sigma_z)/2`, initial Bloch vector at polar angle
/// `phi` and azimuth 0. Period `2pi/Omega`, phase `pi(1 + cos phi)`.
pub fn build_qubit(s: &QubitScenario) -> Result<BuiltScenario> {
    if !(s.omega > 0.0) || !s.omega.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "Rabi length must be positive, got {}",
            s.omega
        )));
    }
    if !s.trace_h.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "trace of H must be finite, got {}",
            s.trace_h
        )));
    }
    if !(0.0..=PI).contains(&s.phi) {
        return Err(Error::InvalidParameter(format!(
            "polar angle {} outside [0, pi]",
            s.phi
        )));
    }
    if s.phi == 0.0 || s.phi == PI {
        return Err(Error::Stationary(format!("polar angle {} is a pole", s.phi)));
    }
    let m = CMatrix::identity(2, 2) * C64::new(s.trace_h / 2.0, 0.0) + pauli_z() * C64::new(s.omega / 2.0, 0.0);
    let h = spectral_decompose(m)?;
    // sigma_z = |1><1| - |0><0| puts |1> at the north pole.
    let initial = StateVector::from_real(&[(s.phi / 2.0).sin(), (s.phi / 2.0).cos()])?;
    Ok(BuiltScenario {
        schedule: Arc::new(HamiltonianSchedule::constant(h)),
        initial,
        tau: TAU / s.omega,
        theta_predicted: Some(reduce_phase(PI * (1.0 + s.phi.cos()))),
    })
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QutritScenario {
    /// Eigenvalues `e0 < e1 < e2`, each an integer multiple of `omega`.
    pub eigenvalues: [f64; 3],
    pub omega: f64,
    /// Level occupations; normalized on construction.
    pub occupations: [f64; 3],
    /// Relative phases of levels 1 and 2 against level 0.
    pub phases: [f64; 2],
}

impl QutritScenario {
    /// Integer eigenvalues in units of `omega`, with zero relative phases.
    pub fn from_levels(levels: [i64; 3], omega: f64, occupations: [f64; 3]) -> Self {
        QutritScenario {
            eigenvalues: levels.map(|n| n as f64 * omega),
            omega,
            occupations,
            phases: [0.0, 0.0],
        }
    }
}

/// Diagonal constant Hamiltonian with commensurate eigenvalues and a state
/// occupying all three levels. Period `2pi/(omega g)` with `g` the gcd of
/// the integer level spacings.
pub fn build_qutrit(s: &QutritScenario) -> Result<BuiltScenario> {
    if !(s.omega > 0.0) || !s.omega.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "base frequency must be positive, got {}",
            s.omega
        )));
    }
    let [e0, e1, e2] = s.eigenvalues;
    if !(e0 < e1 && e1 < e2) {
        return Err(Error::InvalidParameter(format!(
            "eigenvalues must be strictly increasing, got {:?}",
            s.eigenvalues
        )));
    }
    let mut levels = [0i64; 3];
    for (n, e) in levels.iter_mut().zip(s.eigenvalues) {
        let ratio = e / s.omega;
        if (ratio - ratio.round()).abs() > 1e-9 * ratio.abs().max(1.0) {
            return Err(Error::InvalidParameter(format!(
                "eigenvalue {e} is not an integer multiple of {}: spectrum is not commensurate",
                s.omega
            )));
        }
        *n = ratio.round() as i64;
    }
    if s.occupations.iter().any(|&p| !(p > 0.0) || !p.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "all three levels must be occupied, got {:?}",
            s.occupations
        )));
    }
    let h = HermitianObservable::diagonal(&s.eigenvalues)?;
    let phases = [0.0, s.phases[0], s.phases[1]];
    let amps: Vec<C64> = s
        .occupations
        .iter()
        .zip(phases)
        .map(|(&p, a)| C64::from_polar(p.sqrt(), a))
        .collect();
    let initial = StateVector::from_slice(&amps)?;
    let g = gcd(levels[1] - levels[0], levels[2] - levels[1]);
    Ok(BuiltScenario {
        schedule: Arc::new(HamiltonianSchedule::constant(h)),
        initial,
        tau: TAU / (s.omega * g as f64),
        theta_predicted: None,
    })
}

/// Position of the expected energy relative to the middle level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum QutritBranch {
    BelowMiddle,
    AtMiddle,
    AboveMiddle,
}

/// Which ML quotients equal the period.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Saturation {
    Neither,
    FirstOnly,
    SecondOnly,
    Both,
}

impl Saturation {
    fn from_flags(first: bool, second: bool) -> Self {
        match (first, second) {
            (false, false) => Saturation::Neither,
            (true, false) => Saturation::FirstOnly,
            (false, true) => Saturation::SecondOnly,
            (true, true) => Saturation::Both,
        }
    }
}

/// Winding integers and ML quotient identities of a closed qutrit
/// evolution.
#[derive(Debug, Clone, PartialEq)]
pub struct QutritAnalysis {
    pub tau: f64,
    pub theta: f64,
    pub eigenvalues: [f64; 3],
    pub expected_energy: f64,
    /// `n_j` with `theta = tau <H - e_j> - 2pi n_j`.
    pub windings: [i64; 3],
    pub windings_ordered: bool,
    pub branch: QutritBranch,
    /// ML quotients evaluated directly from the occupation profile.
    pub quotients: (f64, f64),
    /// The same quotients from the closed-form winding identities.
    pub identity_values: (f64, f64),
    /// Largest `|quotient - identity| / tau`.
    pub identity_residual: f64,
    pub saturation: Saturation,
}

/// Relative agreement required for a quotient to count as equal to tau.
const SATURATION_TOL: f64 = 1e-8;
/// Largest allowed distance of a winding number from an integer.
const WINDING_TOL: f64 = 1e-6;

pub fn analyze_qutrit(traj: &Trajectory) -> Result<QutritAnalysis> {
    analyze_qutrit_with(traj, &Tolerances::default())
}

pub fn analyze_qutrit_with(traj: &Trajectory, tol: &Tolerances) -> Result<QutritAnalysis> {
    let h = match traj.schedule() {
        Some(HamiltonianSchedule::Constant(h)) if h.dim() == 3 => h,
        Some(HamiltonianSchedule::Constant(h)) => return Err(Error::InvalidDimension(h.dim())),
        Some(_) => {
            return Err(Error::InvalidParameter(
                "qutrit analysis needs a time-independent Hamiltonian".into(),
            ))
        }
        None => return Err(Error::MissingSchedule),
    };
    let profile = occupation_profile_with(h, traj.initial(), tol)?;
    if profile.levels.len() != 3 {
        return Err(Error::InvalidParameter(format!(
            "expected three occupied levels, found {}",
            profile.levels.len()
        )));
    }
    let phase = trajectory_phase(traj, tol)?;
    let theta = phase.theta;
    let tau = traj.tau();
    let mean = profile.expected_energy;
    let eps = [
        profile.levels[0].energy,
        profile.levels[1].energy,
        profile.levels[2].energy,
    ];

    let mut windings = [0i64; 3];
    for (j, n) in windings.iter_mut().enumerate() {
        let raw = (tau * (mean - eps[j]) - theta) / TAU;
        let residual = (raw - raw.round()).abs();
        if residual > WINDING_TOL {
            return Err(Error::NonIntegerWinding { level: j, residual });
        }
        *n = raw.round() as i64;
    }
    let windings_ordered = windings[0] > windings[1] && windings[1] > windings[2];

    let branch = if (mean - eps[1]).abs() <= tol.equality {
        QutritBranch::AtMiddle
    } else if mean < eps[1] {
        QutritBranch::BelowMiddle
    } else {
        QutritBranch::AboveMiddle
    };

    let ml = ml_bound(&profile, theta)?;
    let n = windings.map(|v| v as f64);
    let identity_values = match branch {
        QutritBranch::BelowMiddle => (
            tau * ((mean - eps[0] - TAU * n[0] / tau) / (mean - eps[0])),
            tau * ((TAU * (n[1] + 1.0) / tau + eps[1] - mean) / (eps[1] - mean)),
        ),
        QutritBranch::AboveMiddle => (
            tau * ((mean - eps[1] - TAU * n[1] / tau) / (mean - eps[1])),
            tau * ((TAU * (n[2] + 1.0) / tau + eps[2] - mean) / (eps[2] - mean)),
        ),
        QutritBranch::AtMiddle => (0.0, tau / (n[1] - n[2])),
    };
    let identity_residual = ((ml.below - identity_values.0).abs()).max((ml.above - identity_values.1).abs()) / tau;
    let equals_tau = |q: f64| (q - tau).abs() <= SATURATION_TOL * tau;

    Ok(QutritAnalysis {
        tau,
        theta,
        eigenvalues: eps,
        expected_energy: mean,
        windings,
        windings_ordered,
        branch,
        quotients: (ml.below, ml.above),
        identity_values,
        identity_residual,
        saturation: Saturation::from_flags(equals_tau(ml.below), equals_tau(ml.above)),
    })
}

/// A qutrit scenario together with its analysis.
#[derive(Debug, Clone)]
pub struct QutritWitness {
    pub scenario: QutritScenario,
    pub analysis: QutritAnalysis,
}

/// Witnesses found by [`search_qutrit_witnesses`].
#[derive(Debug, Clone, Default)]
pub struct QutritWitnesses {
    /// One witness per (branch, saturation) class, off the middle level.
    pub cases: std::collections::BTreeMap<(QutritBranch, Saturation), QutritWitness>,
    /// `<H> = e1` with `n1 = n2 + 1`.
    pub middle_adjacent: Option<QutritWitness>,
    /// `<H> = e1` with `n1 > n2 + 1`.
    pub middle_spread: Option<QutritWitness>,
}

impl QutritWitnesses {
    pub fn is_complete(&self) -> bool {
        self.cases.len() == 8 && self.middle_adjacent.is_some() && self.middle_spread.is_some()
    }
}

/// Grid search over integer spectra `0 = n0 < n1 < n2 <= max_level` and
/// occupation simplices with spacing `1/divisions`, keeping the first
/// witness of every saturation class in both off-middle branches and of both
/// middle-level realizations.
pub fn search_qutrit_witnesses(max_level: i64, divisions: usize, omega: f64) -> Result<QutritWitnesses> {
    let mut found = QutritWitnesses::default();
    for n1 in 1..max_level {
        for n2 in (n1 + 1)..=max_level {
            for i in 1..divisions {
                for j in 1..(divisions - i) {
                    let k = divisions - i - j;
                    let d = divisions as f64;
                    let scenario =
                        QutritScenario::from_levels([0, n1, n2], omega, [i as f64 / d, j as f64 / d, k as f64 / d]);
                    let built = build_qutrit(&scenario)?;
                    let steps = built.steps_for_phase_resolution(0.2)?.max(16);
                    let analysis = analyze_qutrit(&built.trajectory(steps)?)?;
                    let witness = QutritWitness { scenario, analysis };
                    match witness.analysis.branch {
                        QutritBranch::AtMiddle => {
                            let [_, w1, w2] = witness.analysis.windings;
                            let slot = if w1 == w2 + 1 {
                                &mut found.middle_adjacent
                            } else {
                                &mut found.middle_spread
                            };
                            slot.get_or_insert(witness);
                        }
                        branch => {
                            found
                                .cases
                                .entry((branch, witness.analysis.saturation))
                                .or_insert(witness);
                        }
                    }
                    if found.is_complete() {
                        return Ok(found);
                    }
                }
            }
        }
    }
    Ok(found)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CounterexampleScenario {
    pub energy: f64,
    /// Angle in `(0, pi/2)`.
    pub chi: f64,
}

impl CounterexampleScenario {
    /// `mu(chi) = E / (1 - cos chi)`.
    pub fn mu(&self) -> f64 {
        self.energy / (1.0 - self.chi.cos())
    }

    /// `pi / (E cot(chi/2))`.
    pub fn period(&self) -> f64 {
        PI * (self.chi / 2.0).tan() / self.energy
    }
}

/// Rotating-frame qubit `H_t = e^{-iAt} H e^{iAt}` with
/// `A = mu sin(chi) sigma_z` and `H = mu (sin(chi) sigma_z - cos(chi) sigma_x)`,
/// started in the +1 eigenstate of `sigma_x`.
pub fn build_counterexample(s: &CounterexampleScenario) -> Result<BuiltScenario> {
    if !(s.energy > 0.0) || !s.energy.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "energy must be positive, got {}",
            s.energy
        )));
    }
    if !(s.chi > 0.0 && s.chi < PI / 2.0) {
        return Err(Error::InvalidParameter(format!("chi {} outside (0, pi/2)", s.chi)));
    }
    let mu = s.mu();
    let (sin, cos) = s.chi.sin_cos();
    let generator = spectral_decompose(pauli_z() * C64::new(mu * sin, 0.0))?;
    let base = spectral_decompose(pauli_z() * C64::new(mu * sin, 0.0) - pauli_x() * C64::new(mu * cos, 0.0))?;
    Ok(BuiltScenario {
        schedule: Arc::new(HamiltonianSchedule::rotating_frame(generator, base)?),
        initial: StateVector::from_real(&[1.0, 1.0])?,
        tau: s.period(),
        theta_predicted: Some(PI),
    })
}

/// Haar-random unitary from the QR decomposition of a complex Gaussian
/// matrix, with the phases of R's diagonal absorbed into Q.
fn haar_unitary(dim: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let z = CMatrix::from_fn(dim, dim, |_, _| {
        C64::new(
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
        )
    });
    let qr = z.qr();
    let (q, r) = (qr.q(), qr.r());
    let mut u = q;
    for c in 0..dim {
        let d = r[(c, c)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        for row in 0..dim {
            u[(row, c)] *= phase;
        }
    }
    u
}

/// Seeded random system with integer spectrum (in units of `base_omega`),
/// rotated by a Haar-random unitary, and a random state occupying at least
/// two levels. The period is `2pi / (base_omega g)` with `g` the gcd of the
/// occupied level spacings.
pub fn random_periodic(dim: usize, seed: u64, base_omega: f64) -> Result<BuiltScenario> {
    if !(2..=8).contains(&dim) {
        return Err(Error::InvalidDimension(dim));
    }
    if !(base_omega > 0.0) || !base_omega.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "base frequency must be positive, got {base_omega}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut pool: Vec<i64> = (0..=(dim as i64 + 1)).collect();
    pool.shuffle(&mut rng);
    let mut levels: Vec<i64> = pool[..dim].to_vec();
    levels.sort_unstable();

    let occupied_count = rng.random_range(2..=dim);
    let mut order: Vec<usize> = (0..dim).collect();
    order.shuffle(&mut rng);
    let mut occupied = order[..occupied_count].to_vec();
    occupied.sort_unstable();

    let mut coeffs = CVector::zeros(dim);
    for &k in &occupied {
        coeffs[k] = C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
    }

    let unitary = haar_unitary(dim, &mut rng);
    let values: Vec<f64> = levels.iter().map(|&n| n as f64 * base_omega).collect();
    let h = HermitianObservable::diagonal(&values)?.conjugated(&unitary);
    let initial = StateVector::new(&unitary * DVector::from(coeffs))?;

    let g = occupied.windows(2).map(|w| levels[w[1]] - levels[w[0]]).fold(0, gcd);
    Ok(BuiltScenario {
        schedule: Arc::new(HamiltonianSchedule::constant(h)),
        initial,
        tau: TAU / (base_omega * g as f64),
        theta_predicted: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::closure_defect;
    use crate::geometry::aa_phase;

    #[test]
    fn qubit_family_closed_forms() {
        let b = build_qubit(&QubitScenario::new(PI / 2.0, 1.0)).unwrap();
        assert!((b.tau - TAU).abs() < 1e-15);
        assert!((b.theta_predicted.unwrap() - PI).abs() < 1e-15);

        let b = build_qubit(&QubitScenario::new(PI / 3.0, 2.0)).unwrap();
        assert!((b.tau - PI).abs() < 1e-15);
        assert!((b.theta_predicted.unwrap() - 1.5 * PI).abs() < 1e-12);

        let b = build_qubit(&QubitScenario::new(PI - 1e-3, 1.0)).unwrap();
        let theta = b.theta_predicted.unwrap();
        assert!(theta > 0.0 && theta < 1e-5);
    }

    #[test]
    fn qubit_rejects_poles_and_bad_parameters() {
        assert!(matches!(
            build_qubit(&QubitScenario::new(0.0, 1.0)),
            Err(Error::Stationary(_))
        ));
        assert!(matches!(
            build_qubit(&QubitScenario::new(PI, 1.0)),
            Err(Error::Stationary(_))
        ));
        assert!(matches!(
            build_qubit(&QubitScenario::new(4.0, 1.0)),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            build_qubit(&QubitScenario::new(1.0, 0.0)),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn qubit_rabi_vector_and_bloch_angle() {
        let s = QubitScenario {
            phi: 0.9,
            omega: 1.7,
            trace_h: 0.4,
        };
        let b = build_qubit(&s).unwrap();
        let h = b.schedule.hamiltonian_at(0.0).unwrap();
        let r = crate::quantum::rabi_vector(&h).unwrap();
        assert!(r.x.abs() < 1e-15 && r.y.abs() < 1e-15 && (r.z - 1.7).abs() < 1e-15);
        let bloch = crate::quantum::bloch_vector(&b.initial).unwrap();
        assert!((bloch.polar_angle() - 0.9).abs() < 1e-12);
        assert!(bloch.y.abs() < 1e-15 && bloch.x > 0.0);
    }

    #[test]
    fn qutrit_periods() {
        let b = build_qutrit(&QutritScenario::from_levels([0, 1, 2], 1.0, [0.3, 0.3, 0.4])).unwrap();
        assert!((b.tau - TAU).abs() < 1e-15);
        let b = build_qutrit(&QutritScenario::from_levels([0, 2, 4], 0.5, [0.3, 0.3, 0.4])).unwrap();
        assert!((b.tau - PI / 0.5).abs() < 1e-15);
        let traj = b.trajectory(400).unwrap();
        assert!(closure_defect(&traj) < 1e-12);
    }

    #[test]
    fn qutrit_rejections() {
        assert!(build_qutrit(&QutritScenario::from_levels([0, 1, 2], 1.0, [1.0, 0.0, 0.0])).is_err());
        let s = QutritScenario {
            eigenvalues: [0.0, 1.0, 2f64.sqrt()],
            omega: 1.0,
            occupations: [0.3, 0.3, 0.4],
            phases: [0.0, 0.0],
        };
        assert!(matches!(build_qutrit(&s), Err(Error::InvalidParameter(m)) if m.contains("commensurate")));
        assert!(build_qutrit(&QutritScenario::from_levels([0, 2, 1], 1.0, [0.3, 0.3, 0.4])).is_err());
    }

    fn analyze(levels: [i64; 3], occupations: [f64; 3]) -> QutritAnalysis {
        let b = build_qutrit(&QutritScenario::from_levels(levels, 1.0, occupations)).unwrap();
        analyze_qutrit(&b.trajectory(2000).unwrap()).unwrap()
    }

    #[test]
    fn qutrit_analysis_classes() {
        // Oracle: with <H> < e1, the first quotient equals tau iff n0 = 0 and
        // the second iff n1 = -1 (direct evaluation of the identities).
        let both = analyze([0, 1, 2], [0.5, 0.3, 0.2]);
        assert_eq!(both.branch, QutritBranch::BelowMiddle);
        assert_eq!(both.windings[..2], [0, -1]);
        assert_eq!(both.saturation, Saturation::Both);

        let first = analyze([0, 2, 3], [0.7, 0.2, 0.1]);
        assert_eq!(first.windings[..2], [0, -2]);
        assert_eq!(first.saturation, Saturation::FirstOnly);

        let second = analyze([0, 2, 3], [0.3, 0.55, 0.15]);
        assert!((second.expected_energy - 1.55).abs() < 1e-12);
        assert_eq!(second.windings[..2], [1, -1]);
        assert_eq!(second.saturation, Saturation::SecondOnly);

        let neither = analyze([0, 3, 4], [0.5, 0.5 - 0.05, 0.05]);
        assert!(neither.expected_energy > 1.0 && neither.expected_energy < 2.0);
        assert_eq!(neither.saturation, Saturation::Neither);

        for a in [&both, &first, &second, &neither] {
            assert!(a.windings_ordered);
            assert!(a.identity_residual < 1e-8, "{a:?}");
        }
    }

    #[test]
    fn qutrit_middle_level_case() {
        // p0 (e1 - e0) = p2 (e2 - e1) puts <H> on e1.
        let a = analyze([0, 1, 3], [0.4, 0.4, 0.2]);
        assert_eq!(a.branch, QutritBranch::AtMiddle);
        assert_eq!(a.theta, 0.0);
        assert_eq!(a.quotients.0, 0.0);
        assert!((a.quotients.1 - TAU / 2.0).abs() < 1e-12);
        assert_eq!(a.windings[1] - a.windings[2], 2);
        assert!(a.identity_residual < 1e-8);
    }

    #[test]
    fn counterexample_parameters() {
        let s = CounterexampleScenario {
            energy: 1.0,
            chi: PI / 3.0,
        };
        assert!((s.mu() - 2.0).abs() < 1e-12);
        let b = build_counterexample(&s).unwrap();
        assert!((b.tau - PI / 3f64.sqrt()).abs() < 1e-12);
        for t in [0.0, 0.4, 1.3] {
            let ev = b.schedule.hamiltonian_at(t).unwrap().eigenvalues().clone();
            assert!((ev[0] + 2.0).abs() < 1e-12 && (ev[1] - 2.0).abs() < 1e-12);
        }
        let near = CounterexampleScenario {
            energy: 1.0,
            chi: PI / 2.0 - 1e-6,
        };
        assert!(near.period() < PI && PI - near.period() < 1e-5);
        assert!(build_counterexample(&CounterexampleScenario {
            energy: 1.0,
            chi: PI / 2.0
        })
        .is_err());
        assert!(build_counterexample(&CounterexampleScenario { energy: 1.0, chi: 0.0 }).is_err());
        assert!(build_counterexample(&CounterexampleScenario { energy: -1.0, chi: 0.5 }).is_err());
    }

    #[test]
    fn counterexample_phase_is_pi() {
        for chi in [0.3, 1.0, 1.4] {
            let b = build_counterexample(&CounterexampleScenario { energy: 1.0, chi }).unwrap();
            let traj = b.trajectory(4000).unwrap();
            let theta = aa_phase(&traj).unwrap().theta;
            assert!((theta - PI).abs() < 1e-5, "chi={chi}: {theta}");
        }
    }

    #[test]
    fn random_periodic_is_deterministic_and_closed() {
        let a = random_periodic(4, 7, 1.0).unwrap();
        let b = random_periodic(4, 7, 1.0).unwrap();
        assert_eq!(a.schedule, b.schedule);
        assert_eq!(a.initial, b.initial);
        assert_eq!(a.tau.to_bits(), b.tau.to_bits());
        let traj = a.trajectory(a.steps_for_phase_resolution(0.05).unwrap()).unwrap();
        assert!(closure_defect(&traj) < 1e-8);
        assert!(random_periodic(1, 0, 1.0).is_err());
        assert!(random_periodic(9, 0, 1.0).is_err());
    }

    #[test]
    fn random_periodic_occupies_at_least_two_levels() {
        for seed in 0..30 {
            let b = random_periodic(2 + (seed as usize % 7), seed, 0.7).unwrap();
            let h = b.schedule.hamiltonian_at(0.0).unwrap();
            let p = occupation_profile_with(&h, &b.initial, &Tolerances::default()).unwrap();
            assert!(p.levels.len() >= 2);
            assert!(h.reconstruction_error() < 1e-10);
        }
    }
}
