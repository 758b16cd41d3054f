use std::io::Write;

use crate::ensemble::{
    run, Algorithm, Discretization, EnergyMode, ProblemSpec, SolverKind, StabilityReport,
    StepperConfig,
};
use crate::error::Result;
use crate::random::SampleSet;

#[derive(Clone, Debug)]
pub struct StabilityConfig {
    pub algorithm: Algorithm,
    pub n: usize,
    pub dts: Vec<f64>,
    pub t_final: f64,
    pub samples: SampleSet,
    pub u0: f64,
    pub energy_mode: EnergyMode,
    pub solver: SolverKind,
}

/// Energy history of one unforced run.
#[derive(Clone, Debug)]
pub struct EnergySeries {
    pub dt: f64,
    pub times: Vec<f64>,
    pub energies: Vec<f64>,
    pub bound: StabilityReport,
}

impl EnergySeries {
    pub fn initial(&self) -> f64 {
        self.energies[0]
    }

    pub fn last(&self) -> f64 {
        *self.energies.last().expect("series includes t = 0")
    }

    pub fn is_nonincreasing(&self) -> bool {
        self.energies.windows(2).all(|w| w[1] <= w[0])
    }

    /// Largest single-step increase `max(E^{n+1} - E^n, 0)`.
    pub fn max_increase(&self) -> f64 {
        self.energies
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }

    /// Gnuplot-friendly two-column text.
    pub fn write_dat<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# dt = {}", self.dt)?;
        writeln!(w, "# t energy")?;
        for (t, e) in self.times.iter().zip(&self.energies) {
            writeln!(w, "{t} {e:.17e}")?;
        }
        Ok(())
    }
}

/// Unforced runs with constant initial data and homogeneous boundary
/// values, one per time step size.
pub fn run_stability_study(cfg: &StabilityConfig) -> Result<Vec<EnergySeries>> {
    let disc = Discretization::structured(cfg.n)?;
    let problem = ProblemSpec::unforced(cfg.samples.clone(), cfg.u0);
    cfg.dts
        .iter()
        .map(|&dt| {
            let mut config = StepperConfig::new(dt, cfg.t_final, cfg.algorithm)?;
            config.energy_mode = cfg.energy_mode;
            config.solver = cfg.solver;
            config.track_stability = true;
            let out = run(&disc, &problem, &config)?;
            Ok(EnergySeries {
                dt,
                times: out.records.iter().map(|r| r.time).collect(),
                energies: out.energies(),
                bound: out.stability.expect("tracking enabled"),
            })
        })
        .collect()
}

/// One row per series: `dt, E(0), E(T), nonincreasing, max_increase,
/// bound_holds, worst_bound_ratio`.
pub fn write_stability_summary<W: Write>(series: &[EnergySeries], mut w: W) -> std::io::Result<()> {
    writeln!(
        w,
        "dt,energy_0,energy_T,nonincreasing,max_increase,bound_holds,worst_bound_ratio"
    )?;
    for s in series {
        writeln!(
            w,
            "{},{:.10e},{:.10e},{},{:.3e},{},{:.6}",
            s.dt,
            s.initial(),
            s.last(),
            s.is_nonincreasing(),
            s.max_increase(),
            s.bound.all_hold(),
            s.bound.worst_ratio()
        )?;
    }
    Ok(())
}
