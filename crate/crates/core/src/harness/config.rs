//! Flat `key = value` run configuration. Keys are the long command-line flag
//! names; unknown keys are rejected.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::ensemble::{Algorithm, EnergyMode, SolverKind};
use crate::error::{Error, Result};

pub const KEYS: [&str; 15] = [
    "algo", "mesh", "dt", "seed", "out", "solver", "t-final", "case", "j", "ensemble", "steps",
    "workers", "energy", "nu-base", "repeats",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    Converge,
    Stability,
    Timing,
    Run,
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Experiment::Converge => "converge",
            Experiment::Stability => "stability",
            Experiment::Timing => "timing",
            Experiment::Run => "run",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Case {
    /// Three friction values, unit diffusion.
    Case1,
    /// 3 x 3 friction and sinusoidal diffusion tensor.
    Case2,
    /// `J x J` uniformly drawn inputs.
    Random,
}

impl FromStr for Case {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "case1" | "1" => Ok(Case::Case1),
            "case2" | "2" => Ok(Case::Case2),
            "random" => Ok(Case::Random),
            other => Err(Error::Config(format!("unknown case '{other}'"))),
        }
    }
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Case::Case1 => "case1",
            Case::Case2 => "case2",
            Case::Random => "random",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub algorithms: Vec<Algorithm>,
    pub meshes: Vec<usize>,
    /// Empty means `dt = 1/n^2`.
    pub dts: Vec<f64>,
    pub seed: u64,
    pub out: PathBuf,
    pub solver: SolverKind,
    pub t_final: f64,
    pub case: Case,
    pub j: usize,
    pub ensemble_sizes: Vec<usize>,
    pub steps: usize,
    /// 0 uses the default thread pool.
    pub workers: usize,
    pub energy_mode: EnergyMode,
    pub nu_base: f64,
    pub repeats: usize,
}

/// Reads `key = value` lines; `#` starts a comment.
pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value", k + 1)))?;
        let key = key.trim().to_string();
        if !KEYS.contains(&key.as_str()) {
            return Err(Error::Config(format!(
                "line {}: unknown key '{key}'",
                k + 1
            )));
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

fn list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| Error::Config(format!("{key}: cannot parse '{s}'")))
        })
        .collect()
}

fn one<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse '{v}'")))
}

/// `n` or `1/n`.
fn mesh_size(v: &str) -> Result<usize> {
    let v = v.trim();
    let n = v.strip_prefix("1/").unwrap_or(v);
    match n.parse::<usize>() {
        Ok(n) if n > 0 => Ok(n),
        _ => Err(Error::Config(format!("mesh: cannot parse '{v}'"))),
    }
}

impl RunConfig {
    pub fn defaults(experiment: Experiment) -> Self {
        let base = RunConfig {
            experiment,
            algorithms: vec![Algorithm::A2],
            meshes: vec![32],
            dts: Vec::new(),
            seed: 2024,
            out: PathBuf::from("out"),
            solver: SolverKind::Cholesky,
            t_final: 1.0,
            case: Case::Case2,
            j: 3,
            ensemble_sizes: vec![1, 5, 10],
            steps: 32,
            workers: 0,
            energy_mode: EnergyMode::MeanThenNorm,
            nu_base: 1.0,
            repeats: 3,
        };
        match experiment {
            Experiment::Converge => RunConfig {
                meshes: vec![4, 8, 16, 32],
                ..base
            },
            Experiment::Stability => RunConfig {
                dts: super::STABILITY_DTS.to_vec(),
                t_final: 10.0,
                nu_base: super::LONG_RUN_NU_BASE,
                ..base
            },
            Experiment::Timing => RunConfig {
                case: Case::Random,
                workers: 1,
                ..base
            },
            Experiment::Run => base,
        }
    }

    /// Defaults overridden by `map`. Selecting only A1 switches the default
    /// case to the deterministic-diffusion one.
    pub fn from_map(experiment: Experiment, map: &BTreeMap<String, String>) -> Result<Self> {
        let mut c = RunConfig::defaults(experiment);
        for (key, v) in map {
            match key.as_str() {
                "algo" => c.algorithms = list(key, v)?,
                "mesh" => c.meshes = v.split(',').map(mesh_size).collect::<Result<_>>()?,
                "dt" => c.dts = list(key, v)?,
                "seed" => c.seed = one(key, v)?,
                "out" => c.out = PathBuf::from(v),
                "solver" => c.solver = v.parse()?,
                "t-final" => c.t_final = one(key, v)?,
                "case" => c.case = v.parse()?,
                "j" => c.j = one(key, v)?,
                "ensemble" => c.ensemble_sizes = list(key, v)?,
                "steps" => c.steps = one(key, v)?,
                "workers" => c.workers = one(key, v)?,
                "energy" => {
                    c.energy_mode = match v.trim() {
                        "mean" => EnergyMode::MeanThenNorm,
                        "norm" => EnergyMode::NormThenMean,
                        other => {
                            return Err(Error::Config(format!(
                                "energy: expected mean or norm, got '{other}'"
                            )))
                        }
                    }
                }
                "nu-base" => c.nu_base = one(key, v)?,
                "repeats" => c.repeats = one(key, v)?,
                other => return Err(Error::Config(format!("unknown key '{other}'"))),
            }
        }
        if !map.contains_key("case") && c.algorithms == [Algorithm::A1] {
            c.case = Case::Case1;
        }
        c.validate()?;
        Ok(c)
    }

    fn validate(&self) -> Result<()> {
        if self.algorithms.is_empty() || self.meshes.is_empty() {
            return Err(Error::Config("algo and mesh must not be empty".into()));
        }
        if self.dts.iter().any(|&d| !(d > 0.0)) || !(self.t_final >= 0.0) {
            return Err(Error::Config(
                "dt must be positive and t-final nonnegative".into(),
            ));
        }
        if self.j == 0 || self.ensemble_sizes.contains(&0) || self.repeats == 0 {
            return Err(Error::Config(
                "j, ensemble sizes and repeats must be positive".into(),
            ));
        }
        if self.experiment == Experiment::Converge && self.meshes.len() < 2 {
            return Err(Error::Config(
                "convergence needs at least two meshes".into(),
            ));
        }
        Ok(())
    }

    /// `key = value` lines that reproduce this configuration.
    pub fn to_config_text(&self) -> String {
        let join = |v: Vec<String>| v.join(",");
        let mut s = String::new();
        let mut put = |k: &str, v: String| s.push_str(&format!("{k} = {v}\n"));
        put(
            "algo",
            join(self.algorithms.iter().map(|a| a.to_string()).collect()),
        );
        put(
            "mesh",
            join(self.meshes.iter().map(|n| n.to_string()).collect()),
        );
        if !self.dts.is_empty() {
            put("dt", join(self.dts.iter().map(|d| d.to_string()).collect()));
        }
        put("seed", self.seed.to_string());
        put("out", self.out.display().to_string());
        put("solver", self.solver.to_string());
        put("t-final", self.t_final.to_string());
        put("case", self.case.to_string());
        put("j", self.j.to_string());
        put(
            "ensemble",
            join(self.ensemble_sizes.iter().map(|n| n.to_string()).collect()),
        );
        put("steps", self.steps.to_string());
        put("workers", self.workers.to_string());
        put(
            "energy",
            match self.energy_mode {
                EnergyMode::MeanThenNorm => "mean",
                EnergyMode::NormThenMean => "norm",
            }
            .to_string(),
        );
        put("nu-base", self.nu_base.to_string());
        put("repeats", self.repeats.to_string());
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_rejects_unknown_keys() {
        let map =
            parse_config("# smooth problem\nalgo = a2\nmesh = 1/4, 1/8\n\nseed=7 # trailing\n")
                .unwrap();
        let c = RunConfig::from_map(Experiment::Converge, &map).unwrap();
        assert_eq!(c.meshes, vec![4, 8]);
        assert_eq!(c.seed, 7);
        assert!(parse_config("colour = blue").is_err());
        assert!(parse_config("algo a2").is_err());
    }

    #[test]
    fn a1_defaults_to_case1() {
        let map = parse_config("algo = a1").unwrap();
        assert_eq!(
            RunConfig::from_map(Experiment::Run, &map).unwrap().case,
            Case::Case1
        );
    }

    #[test]
    fn round_trip() {
        let c = RunConfig::defaults(Experiment::Stability);
        let map = parse_config(&c.to_config_text()).unwrap();
        assert_eq!(RunConfig::from_map(Experiment::Stability, &map).unwrap(), c);
    }

    #[test]
    fn invalid_values() {
        for text in [
            "dt = -1",
            "mesh = 1/0",
            "j = 0",
            "algo = a5",
            "energy = both",
        ] {
            let map = parse_config(text).unwrap();
            assert!(
                RunConfig::from_map(Experiment::Run, &map).is_err(),
                "{text}"
            );
        }
        let map = parse_config("mesh = 8").unwrap();
        assert!(RunConfig::from_map(Experiment::Converge, &map).is_err());
    }
}
