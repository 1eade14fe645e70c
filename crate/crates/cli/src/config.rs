//! Flat `key = value` run configuration.
//!
//! ```text
//! # qubit sweep
//! scenario = qubit
//! phi = 0.1:3.0:0.1
//! omega = 1, 2
//! ```
//!
//! Numeric values accept `pi` and `tau` in simple products and quotients
//! (`pi/3`, `2*pi/3`). Sweep keys take comma lists or inclusive
//! `start:stop:step` ranges.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::path::{Path, PathBuf};

use hb_core::Tolerances;

use crate::CliError;

pub const DEFAULT_STEPS: usize = 4000;
pub const MIN_STEPS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PropagationMode {
    /// Exact spectral propagation for constant Hamiltonians.
    Exact,
    /// Exponential-midpoint integration for every schedule.
    Integrated,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioSpec {
    Qubit {
        phi: Vec<f64>,
        omega: Vec<f64>,
        trace_h: f64,
    },
    Qutrit {
        levels: [i64; 3],
        omega: f64,
        occupations: [f64; 3],
        phases: [f64; 2],
    },
    Counterexample {
        chi: Vec<f64>,
        energy: Vec<f64>,
    },
    Random {
        dim: Vec<usize>,
        seed: Vec<u64>,
        base_omega: f64,
    },
}

impl ScenarioSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ScenarioSpec::Qubit { .. } => "qubit",
            ScenarioSpec::Qutrit { .. } => "qutrit",
            ScenarioSpec::Counterexample { .. } => "counterexample",
            ScenarioSpec::Random { .. } => "random",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub scenario: ScenarioSpec,
    /// Grid steps per period.
    pub steps: usize,
    pub tolerances: Tolerances,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub propagation: PropagationMode,
    /// Evolution time overriding the scenario period.
    pub duration: Option<f64>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub steps: Option<usize>,
    pub seed: Option<u64>,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
    /// Closure tolerance from the environment.
    pub closure: Option<f64>,
}

fn err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Parses a scalar such as `1.5`, `pi`, `pi/3` or `2*pi/3`.
pub fn parse_number(text: &str) -> Result<f64, CliError> {
    let text = text.trim();
    if text.is_empty() {
        return Err(err("empty number"));
    }
    let mut value = 1.0;
    let mut op = '*';
    let mut rest = text;
    loop {
        let end = rest.find(['*', '/']).unwrap_or(rest.len());
        let token = rest[..end].trim();
        let x = match token.to_ascii_lowercase().as_str() {
            "pi" => PI,
            "tau" => TAU,
            t => t.parse::<f64>().map_err(|_| err(format!("not a number: '{text}'")))?,
        };
        value = if op == '*' { value * x } else { value / x };
        if end == rest.len() {
            break;
        }
        op = rest.as_bytes()[end] as char;
        rest = &rest[end + 1..];
    }
    if !value.is_finite() {
        return Err(err(format!("not a finite number: '{text}'")));
    }
    Ok(value)
}

/// Parses a comma list or an inclusive `start:stop:step` range.
pub fn parse_sweep(text: &str) -> Result<Vec<f64>, CliError> {
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(err(format!("range must be start:stop:step, got '{text}'")));
        }
        let (start, stop, step) = (
            parse_number(parts[0])?,
            parse_number(parts[1])?,
            parse_number(parts[2])?,
        );
        if !(step > 0.0) || stop < start {
            return Err(err(format!("empty or invalid range '{text}'")));
        }
        // Index-based so the points do not accumulate rounding; the stop
        // value is included when it lies on the grid.
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        if count > 1_000_000 {
            return Err(err(format!("range '{text}' has too many points")));
        }
        return Ok((0..count).map(|k| start + k as f64 * step).collect());
    }
    let values: Vec<f64> = text.split(',').map(parse_number).collect::<Result<_, _>>()?;
    Ok(values)
}

fn parse_integers<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>, CliError> {
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').map(str::trim).collect();
        let [a, b, c] = parts[..] else {
            return Err(err(format!("{what}: range must be start:stop:step")));
        };
        let (a, b, c): (i64, i64, i64) = (
            a.parse().map_err(|_| err(format!("{what}: bad integer '{a}'")))?,
            b.parse().map_err(|_| err(format!("{what}: bad integer '{b}'")))?,
            c.parse().map_err(|_| err(format!("{what}: bad integer '{c}'")))?,
        );
        if c <= 0 || b < a {
            return Err(err(format!("{what}: empty or invalid range '{text}'")));
        }
        return (a..=b)
            .step_by(c as usize)
            .map(|v| v.to_string().parse().map_err(|_| err(format!("{what}: bad value {v}"))))
            .collect();
    }
    text.split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| err(format!("{what}: bad integer '{}'", t.trim())))
        })
        .collect()
}

fn triple<T: Copy>(values: Vec<T>, what: &str) -> Result<[T; 3], CliError> {
    values
        .try_into()
        .map_err(|v: Vec<T>| err(format!("{what} needs exactly 3 values, got {}", v.len())))
}

fn parse_lines(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(err(format!("line {}: expected 'key = value'", n + 1)));
        };
        let key = k.trim().to_ascii_lowercase();
        if key.is_empty() {
            return Err(err(format!("line {}: empty key", n + 1)));
        }
        if map.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(err(format!("line {}: duplicate key '{key}'", n + 1)));
        }
    }
    Ok(map)
}

struct Keys(BTreeMap<String, String>);

impl Keys {
    fn take(&mut self, key: &str) -> Option<String> {
        self.0.remove(key)
    }

    fn number(&mut self, key: &str, default: f64) -> Result<f64, CliError> {
        self.take(key)
            .map(|v| parse_number(&v).map_err(|e| err(format!("{key}: {e}"))))
            .unwrap_or(Ok(default))
    }

    fn sweep(&mut self, key: &str, default: Option<f64>) -> Result<Vec<f64>, CliError> {
        match (self.take(key), default) {
            (Some(v), _) => parse_sweep(&v).map_err(|e| err(format!("{key}: {e}"))),
            (None, Some(d)) => Ok(vec![d]),
            (None, None) => Err(err(format!("missing key '{key}'"))),
        }
    }
}

pub fn load(path: &Path, overrides: &Overrides) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| err(format!("cannot read {}: {e}", path.display())))?;
    parse(&text, overrides)
}

pub fn parse(text: &str, overrides: &Overrides) -> Result<RunConfig, CliError> {
    let mut keys = Keys(parse_lines(text)?);
    let kind = keys.take("scenario").ok_or_else(|| err("missing key 'scenario'"))?;

    let scenario = match kind.to_ascii_lowercase().as_str() {
        "qubit" => ScenarioSpec::Qubit {
            phi: keys.sweep("phi", None)?,
            omega: keys.sweep("omega", Some(1.0))?,
            trace_h: keys.number("trace_h", 0.0)?,
        },
        "qutrit" => {
            let levels = triple(
                parse_integers::<i64>(
                    &keys.take("levels").ok_or_else(|| err("missing key 'levels'"))?,
                    "levels",
                )?,
                "levels",
            )?;
            let occ = keys
                .take("occupations")
                .ok_or_else(|| err("missing key 'occupations'"))?;
            let occupations = triple(parse_sweep(&occ)?, "occupations")?;
            let phases = match keys.take("phases") {
                Some(p) => {
                    let v = parse_sweep(&p)?;
                    <[f64; 2]>::try_from(v).map_err(|_| err("phases needs exactly 2 values"))?
                }
                None => [0.0, 0.0],
            };
            ScenarioSpec::Qutrit {
                levels,
                omega: keys.number("omega", 1.0)?,
                occupations,
                phases,
            }
        }
        "counterexample" => ScenarioSpec::Counterexample {
            chi: keys.sweep("chi", None)?,
            energy: keys.sweep("energy", Some(1.0))?,
        },
        "random" => {
            let dim = parse_integers::<usize>(&keys.take("dim").unwrap_or_else(|| "4".into()), "dim")?;
            let seed = match (overrides.seed, keys.take("seed")) {
                (Some(s), _) => vec![s],
                (None, Some(v)) => parse_integers::<u64>(&v, "seed")?,
                (None, None) => vec![0],
            };
            ScenarioSpec::Random {
                dim,
                seed,
                base_omega: keys.number("base_omega", 1.0)?,
            }
        }
        other => {
            return Err(err(format!(
                "unknown scenario '{other}' (expected qubit, qutrit, counterexample or random)"
            )))
        }
    };

    let steps = match (overrides.steps, keys.take("steps")) {
        (Some(s), _) => s,
        (None, Some(v)) => v.trim().parse().map_err(|_| err(format!("steps: bad integer '{v}'")))?,
        (None, None) => DEFAULT_STEPS,
    };
    if steps < MIN_STEPS {
        return Err(err(format!(
            "steps per period must be at least {MIN_STEPS}, got {steps}"
        )));
    }

    let mut tolerances = Tolerances::default();
    for (key, slot) in [
        ("tol_closure_analytic", &mut tolerances.closure_analytic),
        ("tol_closure_integrated", &mut tolerances.closure_integrated),
        ("tol_bound", &mut tolerances.bound),
        ("tol_degenerate", &mut tolerances.degenerate),
        ("tol_occupation", &mut tolerances.occupation),
        ("tol_equality", &mut tolerances.equality),
        ("tol_hermitian", &mut tolerances.hermitian),
    ] {
        *slot = keys.number(key, *slot)?;
    }
    if let Some(v) = keys.take("tol_closure") {
        tolerances = tolerances.with_closure(parse_number(&v)?);
    }
    if let Some(c) = overrides.closure {
        tolerances = tolerances.with_closure(c);
    }
    let all = [
        tolerances.closure_analytic,
        tolerances.closure_integrated,
        tolerances.bound,
        tolerances.degenerate,
        tolerances.occupation,
        tolerances.equality,
        tolerances.hermitian,
    ];
    if all.iter().any(|t| !(*t > 0.0)) {
        return Err(err("tolerances must be positive"));
    }

    let format = match (overrides.format, keys.take("format")) {
        (Some(f), _) => f,
        (None, Some(v)) => match v.to_ascii_lowercase().as_str() {
            "csv" => Format::Csv,
            "json" => Format::Json,
            other => return Err(err(format!("format: expected csv or json, got '{other}'"))),
        },
        (None, None) => Format::Csv,
    };
    let out = overrides.out.clone().or_else(|| keys.take("out").map(PathBuf::from));

    let propagation = match keys
        .take("propagation")
        .as_deref()
        .map(str::to_ascii_lowercase)
        .as_deref()
    {
        None | Some("exact") => PropagationMode::Exact,
        Some("integrated") => PropagationMode::Integrated,
        Some(other) => return Err(err(format!("propagation: expected exact or integrated, got '{other}'"))),
    };
    let duration = match keys.take("tau") {
        Some(v) => {
            let t = parse_number(&v)?;
            if !(t > 0.0) {
                return Err(err("tau must be positive"));
            }
            Some(t)
        }
        None => None,
    };

    if let Some(unknown) = keys.0.keys().next() {
        return Err(err(format!(
            "unknown key '{unknown}' for scenario '{}'",
            scenario.name()
        )));
    }
    Ok(RunConfig {
        scenario,
        steps,
        tolerances,
        format,
        out,
        propagation,
        duration,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_with_pi() {
        assert_eq!(parse_number("1.5").unwrap(), 1.5);
        assert!((parse_number("pi/3").unwrap() - PI / 3.0).abs() < 1e-15);
        assert!((parse_number("2*pi/3").unwrap() - 2.0 * PI / 3.0).abs() < 1e-15);
        assert!(parse_number("pie").is_err());
        assert!(parse_number("1/0").is_err());
    }

    #[test]
    fn sweeps() {
        assert_eq!(parse_sweep("1, 2,3").unwrap(), vec![1.0, 2.0, 3.0]);
        let r = parse_sweep("0.1:3.0:0.1").unwrap();
        assert_eq!(r.len(), 30);
        assert!((r[29] - 3.0).abs() < 1e-12);
        assert!(parse_sweep("1:0:0.1").is_err());
        assert!(parse_sweep("0:1:0").is_err());
    }

    #[test]
    fn qubit_config_with_defaults() {
        let c = parse("scenario = qubit\nphi = pi/2 # equator\n", &Overrides::default()).unwrap();
        assert_eq!(c.steps, DEFAULT_STEPS);
        assert_eq!(c.format, Format::Csv);
        match c.scenario {
            ScenarioSpec::Qubit { phi, omega, .. } => {
                assert_eq!(omega, vec![1.0]);
                assert!((phi[0] - PI / 2.0).abs() < 1e-15);
            }
            _ => panic!(),
        }
    }

    #[test]
    fn overrides_win() {
        let o = Overrides {
            steps: Some(500),
            seed: Some(9),
            closure: Some(1e-3),
            ..Default::default()
        };
        let c = parse("scenario = random\nseed = 1,2\nsteps = 200\ndim = 2:4:1\n", &o).unwrap();
        assert_eq!(c.steps, 500);
        assert_eq!(c.tolerances.closure_integrated, 1e-3);
        assert_eq!(
            c.scenario,
            ScenarioSpec::Random {
                dim: vec![2, 3, 4],
                seed: vec![9],
                base_omega: 1.0
            }
        );
    }

    #[test]
    fn rejections() {
        let o = Overrides::default();
        for text in [
            "phi = 1",
            "scenario = qubit",
            "scenario = spin\nphi = 1",
            "scenario = qubit\nphi = 1\nsteps = 99",
            "scenario = qubit\nphi = 1\ncolour = red",
            "scenario = qubit\nphi = 1\nphi = 2",
            "scenario = qubit\nphi = 1\ntol_bound = -1",
            "scenario = qutrit\nlevels = 0,1\noccupations = 0.5,0.3,0.2",
            "scenario = qubit\nphi",
        ] {
            assert!(matches!(parse(text, &o), Err(CliError::Config(_))), "{text}");
        }
    }
}
