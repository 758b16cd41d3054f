use std::io::Write;
use std::time::Duration;

use crate::ensemble::{run, Algorithm, Discretization, SolverKind, StepperConfig};
use crate::error::{Error, Result};

use super::manufactured::manufactured_problem;
use super::timing_samples;

#[derive(Clone, Debug)]
pub struct TimingConfig {
    pub n: usize,
    /// `J` values; each run uses `J x J` samples.
    pub ensemble_sizes: Vec<usize>,
    pub dt: f64,
    pub steps: usize,
    pub seed: u64,
    /// Timed repetitions per measurement; the median is reported.
    pub repeats: usize,
    pub warmup: bool,
    pub workers: usize,
    pub solver: SolverKind,
}

impl TimingConfig {
    pub fn new(n: usize, ensemble_sizes: Vec<usize>, steps: usize) -> Self {
        let h = 1.0 / n as f64;
        TimingConfig {
            n,
            ensemble_sizes,
            dt: h * h,
            steps,
            seed: 2024,
            repeats: 3,
            warmup: true,
            workers: 1,
            solver: SolverKind::Cholesky,
        }
    }
}

pub const TIMED: [Algorithm; 3] = [Algorithm::Baseline, Algorithm::A2, Algorithm::A3];

#[derive(Clone, Debug)]
pub struct TimingRow {
    pub j: usize,
    pub samples: usize,
    /// Median wall time per algorithm, in [`TIMED`] order.
    pub elapsed: [Duration; 3],
    pub factorizations: [usize; 3],
}

impl TimingRow {
    pub fn baseline(&self) -> Duration {
        self.elapsed[0]
    }

    pub fn a2(&self) -> Duration {
        self.elapsed[1]
    }

    pub fn a3(&self) -> Duration {
        self.elapsed[2]
    }

    /// `1 - t_ensemble / t_baseline` for A2 and A3.
    pub fn savings(&self) -> [f64; 2] {
        let b = self.baseline().as_secs_f64();
        [
            1.0 - self.a2().as_secs_f64() / b,
            1.0 - self.a3().as_secs_f64() / b,
        ]
    }
}

fn median(mut v: Vec<Duration>) -> Duration {
    v.sort();
    v[v.len() / 2]
}

/// Wall time of baseline, A2 and A3 on the manufactured problem for each
/// ensemble size. Runs execute on a dedicated pool of `workers` threads.
pub fn run_timing_study(cfg: &TimingConfig) -> Result<Vec<TimingRow>> {
    if cfg.repeats == 0 || cfg.workers == 0 {
        return Err(Error::Config(
            "timing needs at least one repeat and one worker".into(),
        ));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let disc = Discretization::structured(cfg.n)?;
    let horizon = cfg.steps as f64 * cfg.dt;
    pool.install(|| {
        cfg.ensemble_sizes
            .iter()
            .map(|&j| {
                let (problem, _) =
                    manufactured_problem(&timing_samples(j, cfg.seed, horizon)?, 1.0)?;
                let configs = TIMED
                    .iter()
                    .map(|&alg| {
                        let mut config = StepperConfig::with_steps(cfg.dt, cfg.steps, alg)?;
                        config.solver = cfg.solver;
                        Ok(config)
                    })
                    .collect::<Result<Vec<_>>>()?;
                if cfg.warmup {
                    for config in &configs {
                        run(&disc, &problem, config)?;
                    }
                }
                // repeats interleave the algorithms so drift hits all of them
                let mut times: [Vec<Duration>; 3] = Default::default();
                let mut factorizations = [0; 3];
                for _ in 0..cfg.repeats {
                    for (k, config) in configs.iter().enumerate() {
                        let out = run(&disc, &problem, config)?;
                        times[k].push(out.elapsed);
                        factorizations[k] = out.factorizations;
                    }
                }
                let elapsed = [0, 1, 2].map(|k| median(std::mem::take(&mut times[k])));
                Ok(TimingRow {
                    j,
                    samples: j * j,
                    elapsed,
                    factorizations,
                })
            })
            .collect()
    })
}

/// Rows `JxJ, baseline_ms, a2_ms, a3_ms, savings_a2, savings_a3,
/// factorizations_baseline, factorizations_a2, factorizations_a3`.
pub fn write_timing_table<W: Write>(rows: &[TimingRow], mut w: W) -> std::io::Result<()> {
    writeln!(
        w,
        "JxJ,baseline_ms,a2_ms,a3_ms,savings_a2,savings_a3,factorizations_baseline,factorizations_a2,factorizations_a3"
    )?;
    for r in rows {
        let [s2, s3] = r.savings();
        writeln!(
            w,
            "{}x{},{:.3},{:.3},{:.3},{:.4},{:.4},{},{},{}",
            r.j,
            r.j,
            r.baseline().as_secs_f64() * 1e3,
            r.a2().as_secs_f64() * 1e3,
            r.a3().as_secs_f64() * 1e3,
            s2,
            s3,
            r.factorizations[0],
            r.factorizations[1],
            r.factorizations[2]
        )?;
    }
    Ok(())
}
