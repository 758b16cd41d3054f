use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use super::config::{read_config_file, Case, Experiment, RunConfig};
use super::convergence::{run_convergence_study, ConvergenceConfig, Norm};
use super::stability::{run_stability_study, write_stability_summary, StabilityConfig};
use super::timing::{run_timing_study, write_timing_table, TimingConfig};
use super::{case1_samples, case2_samples, manufactured_problem, random_samples};
use crate::ensemble::{run, Algorithm, Discretization, StepperConfig};
use crate::error::{Error, Result};
use crate::random::SampleSet;

#[derive(Parser, Debug)]
#[command(
    name = "ensemble-heat",
    version,
    about = "Ensemble solvers for random two-domain heat coupling"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Manufactured-solution convergence table
    Converge(Flags),
    /// Energy decay of unforced runs over a sweep of time steps
    Stability(Flags),
    /// Wall time of the baseline against A2 and A3
    Timing(Flags),
    /// One run with per-step diagnostics
    Run(Flags),
}

#[derive(Args, Debug, Default)]
struct Flags {
    /// key = value file; command-line flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
    /// a1, a2, a3 or baseline (comma separated)
    #[arg(long)]
    algo: Option<String>,
    /// Cells per unit length, `n` or `1/n` (comma separated)
    #[arg(long)]
    mesh: Option<String>,
    /// Time step sizes (comma separated); default 1/n^2
    #[arg(long)]
    dt: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    out: Option<String>,
    /// cholesky, cg or cg:<tol>:<max_iter>
    #[arg(long)]
    solver: Option<String>,
    #[arg(long = "t-final")]
    t_final: Option<String>,
    /// case1, case2 or random
    #[arg(long)]
    case: Option<String>,
    /// Draws per random input (random case uses J x J samples)
    #[arg(long)]
    j: Option<String>,
    /// Timing ensemble sizes J (comma separated)
    #[arg(long)]
    ensemble: Option<String>,
    /// Time steps per timing run
    #[arg(long)]
    steps: Option<String>,
    /// Worker threads, 0 for all cores
    #[arg(long)]
    workers: Option<String>,
    /// mean (energy of the mean field) or norm (mean of energies)
    #[arg(long)]
    energy: Option<String>,
    /// Base of the sinusoidal diffusion
    #[arg(long = "nu-base")]
    nu_base: Option<String>,
    #[arg(long)]
    repeats: Option<String>,
}

impl Flags {
    fn overrides(&self) -> Vec<(&'static str, &Option<String>)> {
        vec![
            ("algo", &self.algo),
            ("mesh", &self.mesh),
            ("dt", &self.dt),
            ("seed", &self.seed),
            ("out", &self.out),
            ("solver", &self.solver),
            ("t-final", &self.t_final),
            ("case", &self.case),
            ("j", &self.j),
            ("ensemble", &self.ensemble),
            ("steps", &self.steps),
            ("workers", &self.workers),
            ("energy", &self.energy),
            ("nu-base", &self.nu_base),
            ("repeats", &self.repeats),
        ]
    }

    fn resolve(&self, experiment: Experiment) -> Result<RunConfig> {
        let mut map = match &self.config {
            Some(path) => read_config_file(path)?,
            None => BTreeMap::new(),
        };
        for (key, value) in self.overrides() {
            if let Some(v) = value {
                map.insert(key.to_string(), v.clone());
            }
        }
        RunConfig::from_map(experiment, &map)
    }
}

/// Runs the command line and returns the process exit code: 0 on success,
/// 1 for usage and configuration errors, 2 for numerical failures.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let (experiment, flags) = match &cli.command {
        Command::Converge(f) => (Experiment::Converge, f),
        Command::Stability(f) => (Experiment::Stability, f),
        Command::Timing(f) => (Experiment::Timing, f),
        Command::Run(f) => (Experiment::Run, f),
    };
    let result = flags.resolve(experiment).and_then(|cfg| execute(&cfg));
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                2
            } else {
                1
            }
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn samples_for(cfg: &RunConfig, horizon: f64) -> Result<SampleSet> {
    match cfg.case {
        Case::Case1 => case1_samples(horizon),
        Case::Case2 => case2_samples(cfg.nu_base, horizon),
        Case::Random => random_samples(cfg.j, cfg.seed, cfg.nu_base, horizon),
    }
}

/// Output directory of one algorithm: `out` itself for a single algorithm,
/// `out/<algo>` otherwise.
fn algo_dir(cfg: &RunConfig, alg: Algorithm) -> Result<PathBuf> {
    let dir = if cfg.algorithms.len() == 1 {
        cfg.out.clone()
    } else {
        cfg.out.join(alg.name())
    };
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn write_manifest(
    dir: &Path,
    cfg: &RunConfig,
    samples: Option<&SampleSet>,
    extra: &[String],
) -> Result<()> {
    let mut w = create(&dir.join("manifest.txt"))?;
    writeln!(w, "# experiment {}", cfg.experiment)?;
    writeln!(w, "# version {}", env!("CARGO_PKG_VERSION"))?;
    w.write_all(cfg.to_config_text().as_bytes())?;
    for line in extra {
        writeln!(w, "{line}")?;
    }
    if let Some(s) = samples {
        s.write_manifest(&mut w)?;
    }
    w.flush()?;
    Ok(())
}

fn with_pool<T: Send>(workers: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    if workers == 0 {
        return f();
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?
        .install(f)
}

fn execute(cfg: &RunConfig) -> Result<()> {
    fs::create_dir_all(&cfg.out)?;
    match cfg.experiment {
        Experiment::Converge => with_pool(cfg.workers, || converge(cfg)),
        Experiment::Stability => with_pool(cfg.workers, || stability(cfg)),
        Experiment::Timing => timing(cfg),
        Experiment::Run => with_pool(cfg.workers, || single_run(cfg)),
    }
}

fn converge(cfg: &RunConfig) -> Result<()> {
    let samples = samples_for(cfg, cfg.t_final)?;
    for &alg in &cfg.algorithms {
        let dir = algo_dir(cfg, alg)?;
        let table = run_convergence_study(&ConvergenceConfig {
            algorithm: alg,
            meshes: cfg.meshes.clone(),
            t_final: cfg.t_final,
            samples: samples.clone(),
            amplitude: 1.0,
            solver: cfg.solver,
        })?;
        for norm in Norm::ALL {
            let mut w =
                create(&dir.join(format!("table_{}.csv", norm.name().to_ascii_lowercase())))?;
            table.write_table(norm, &mut w)?;
            w.flush()?;
        }
        let mut w = create(&dir.join("rates.csv"))?;
        table.write_rates(&mut w)?;
        w.flush()?;
        let counts = format!("# factorizations per mesh {:?}", table.factorizations);
        write_manifest(
            &dir,
            cfg,
            Some(&samples),
            &[format!("# algorithm {alg}"), counts],
        )?;
    }
    Ok(())
}

fn stability(cfg: &RunConfig) -> Result<()> {
    let samples = samples_for(cfg, cfg.t_final)?;
    for &alg in &cfg.algorithms {
        let dir = algo_dir(cfg, alg)?;
        let series = run_stability_study(&StabilityConfig {
            algorithm: alg,
            n: cfg.meshes[0],
            dts: if cfg.dts.is_empty() {
                super::STABILITY_DTS.to_vec()
            } else {
                cfg.dts.clone()
            },
            t_final: cfg.t_final,
            samples: samples.clone(),
            u0: 1.0,
            energy_mode: cfg.energy_mode,
            solver: cfg.solver,
        })?;
        for s in &series {
            let mut w = create(&dir.join(format!("energy_dt{}.dat", s.dt)))?;
            s.write_dat(&mut w)?;
            w.flush()?;
        }
        let mut w = create(&dir.join("stability_summary.csv"))?;
        write_stability_summary(&series, &mut w)?;
        w.flush()?;
        write_manifest(&dir, cfg, Some(&samples), &[format!("# algorithm {alg}")])?;
    }
    Ok(())
}

fn timing(cfg: &RunConfig) -> Result<()> {
    let mut tc = TimingConfig::new(cfg.meshes[0], cfg.ensemble_sizes.clone(), cfg.steps);
    if let Some(&dt) = cfg.dts.first() {
        tc.dt = dt;
    }
    tc.seed = cfg.seed;
    tc.repeats = cfg.repeats;
    tc.workers = if cfg.workers == 0 {
        rayon::current_num_threads()
    } else {
        cfg.workers
    };
    tc.solver = cfg.solver;
    let rows = run_timing_study(&tc)?;
    let mut w = create(&cfg.out.join("timing.csv"))?;
    write_timing_table(&rows, &mut w)?;
    w.flush()?;
    write_manifest(&cfg.out, cfg, None, &[format!("# workers {}", tc.workers)])
}

fn single_run(cfg: &RunConfig) -> Result<()> {
    let n = cfg.meshes[0];
    let dt = cfg.dts.first().copied().unwrap_or(1.0 / (n * n) as f64);
    let samples = samples_for(cfg, cfg.t_final)?;
    let (problem, _) = manufactured_problem(&samples, 1.0)?;
    let disc = Discretization::structured(n)?;
    for &alg in &cfg.algorithms {
        let dir = algo_dir(cfg, alg)?;
        let mut config = StepperConfig::new(dt, cfg.t_final, alg)?;
        config.solver = cfg.solver;
        config.energy_mode = cfg.energy_mode;
        let out = run(&disc, &problem, &config)?;
        let mut w = create(&dir.join("diagnostics.csv"))?;
        out.write_diagnostics(&mut w)?;
        w.flush()?;
        let mut extra = vec![
            format!("# algorithm {alg}"),
            format!("# steps {}", config.steps),
            format!("# factorizations {}", out.factorizations),
        ];
        if let Some(th) = out.theta {
            extra.push(format!(
                "# theta {} theta_minus {} theta_plus {} premise {}",
                th.theta,
                th.theta_minus,
                th.theta_plus,
                th.premise_holds()
            ));
        }
        write_manifest(&dir, cfg, Some(&samples), &extra)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_flag_is_a_usage_error() {
        assert_eq!(cli_main(["ensemble-heat", "converge", "--bogus"]), 1);
        assert_eq!(cli_main(["ensemble-heat"]), 1);
    }

    #[test]
    fn bad_config_value_is_a_config_error() {
        assert_eq!(cli_main(["ensemble-heat", "run", "--mesh", "zero"]), 1);
    }
}
