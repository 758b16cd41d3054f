use std::io::Write;

use crate::ensemble::{run, Algorithm, Discretization, SolverKind, StepperConfig};
use crate::error::{Error, Result};
use crate::mesh::Subdomain;
use crate::random::SampleSet;

use super::manufactured::{check_manufactured, manufactured_problem};

/// Gate tolerance for the forcing and interface checks.
pub const GATE_TOLERANCE: f64 = 1e-8;

/// `log2(e_k / e_{k+1})` for successive halvings; `None` where an error is
/// not positive.
pub fn compute_rates(errors: &[f64]) -> Vec<Option<f64>> {
    errors
        .windows(2)
        .map(|w| (w[0] > 0.0 && w[1] > 0.0).then(|| (w[0] / w[1]).log2()))
        .collect()
}

#[derive(Clone, Debug)]
pub struct ConvergenceConfig {
    pub algorithm: Algorithm,
    /// Cells per unit length; the nominal mesh size is `1/n` and `dt = 1/n^2`.
    pub meshes: Vec<usize>,
    pub t_final: f64,
    pub samples: SampleSet,
    pub amplitude: f64,
    pub solver: SolverKind,
}

/// Final-time errors of one sample on one mesh, with the norms of the exact
/// solution for relative errors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampleErrors {
    pub l2: [f64; 2],
    pub h1: [f64; 2],
    pub exact_l2: [f64; 2],
    pub exact_h1: [f64; 2],
}

impl SampleErrors {
    pub fn get(&self, norm: Norm, sub: Subdomain) -> f64 {
        let i = sub.index();
        match norm {
            Norm::L2 => self.l2[i],
            Norm::H1 => self.h1[i],
            Norm::RelL2 => self.l2[i] / self.exact_l2[i],
            Norm::RelH1 => self.h1[i] / self.exact_h1[i],
        }
    }
}

#[derive(Clone, Debug)]
pub struct ConvergenceTable {
    pub algorithm: Algorithm,
    pub meshes: Vec<usize>,
    /// `errors[level][sample]`
    pub errors: Vec<Vec<SampleErrors>>,
    pub factorizations: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Norm {
    L2,
    /// Gradient seminorm.
    H1,
    /// L2 error over the L2 norm of the exact solution.
    RelL2,
    RelH1,
}

impl Norm {
    pub const ALL: [Norm; 4] = [Norm::L2, Norm::H1, Norm::RelL2, Norm::RelH1];

    pub fn name(self) -> &'static str {
        match self {
            Norm::L2 => "L2",
            Norm::H1 => "H1",
            Norm::RelL2 => "relL2",
            Norm::RelH1 => "relH1",
        }
    }
}

impl ConvergenceTable {
    pub fn num_samples(&self) -> usize {
        self.errors.first().map_or(0, Vec::len)
    }

    /// Errors of one field of one sample across the meshes.
    pub fn series(&self, norm: Norm, sub: Subdomain, j: usize) -> Vec<f64> {
        self.errors
            .iter()
            .map(|level| level[j].get(norm, sub))
            .collect()
    }

    pub fn rates(&self, norm: Norm, sub: Subdomain, j: usize) -> Vec<Option<f64>> {
        compute_rates(&self.series(norm, sub, j))
    }

    /// Rows `h, field, s0, s1, ...`, two rows (u1, u2) per mesh.
    pub fn write_table<W: Write>(&self, norm: Norm, mut w: W) -> std::io::Result<()> {
        write!(w, "h,field")?;
        for j in 0..self.num_samples() {
            write!(w, ",s{j}")?;
        }
        writeln!(w)?;
        for (level, &n) in self.meshes.iter().enumerate() {
            for sub in Subdomain::ALL {
                write!(w, "1/{n},u{sub}")?;
                for j in 0..self.num_samples() {
                    let e = self.series(norm, sub, j)[level];
                    write!(w, ",{e:.6e}")?;
                }
                writeln!(w)?;
            }
        }
        Ok(())
    }

    /// Rows `norm, field, sample, h_coarse, h_fine, rate`.
    pub fn write_rates<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "norm,field,sample,h_coarse,h_fine,rate")?;
        for norm in Norm::ALL {
            for sub in Subdomain::ALL {
                for j in 0..self.num_samples() {
                    for (k, r) in self.rates(norm, sub, j).into_iter().enumerate() {
                        let r = r.map_or("NA".to_string(), |r| format!("{r:.4}"));
                        writeln!(
                            w,
                            "{},u{sub},s{j},1/{},1/{},{r}",
                            norm.name(),
                            self.meshes[k],
                            self.meshes[k + 1]
                        )?;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Runs the manufactured problem to `t_final` on every mesh with
/// `dt = 1/n^2` after checking the closed-form forcing.
pub fn run_convergence_study(cfg: &ConvergenceConfig) -> Result<ConvergenceTable> {
    let (problem, sols) = manufactured_problem(&cfg.samples, cfg.amplitude)?;
    for (j, ms) in sols.iter().enumerate() {
        let gate = check_manufactured(ms, cfg.t_final, 1000, j as u64);
        let worst = gate.pde_residual.max(gate.interface_residual);
        if !(worst <= GATE_TOLERANCE) {
            return Err(Error::ResidualTooLarge {
                residual: worst,
                tolerance: GATE_TOLERANCE,
            });
        }
    }

    let mut errors = Vec::with_capacity(cfg.meshes.len());
    let mut factorizations = Vec::with_capacity(cfg.meshes.len());
    for &n in &cfg.meshes {
        let disc = Discretization::structured(n)?;
        let h = 1.0 / n as f64;
        let mut config = StepperConfig::new(h * h, cfg.t_final, cfg.algorithm)?;
        config.solver = cfg.solver;
        let out = run(&disc, &problem, &config)?;
        let t = out.state.time;
        let level = (0..cfg.samples.len())
            .map(|j| {
                let mut e = SampleErrors {
                    l2: [0.0; 2],
                    h1: [0.0; 2],
                    exact_l2: [0.0; 2],
                    exact_h1: [0.0; 2],
                };
                for sub in Subdomain::ALL {
                    let asm = &disc.ops(sub).assembler;
                    let uh = out.state.sample(sub, j);
                    let zero = vec![0.0; uh.len()];
                    let i = sub.index();
                    e.l2[i] = asm.error_l2(uh, |p| sols[j].u(sub, p, t))?;
                    e.h1[i] = asm.error_h1(uh, |p| sols[j].grad(sub, p, t))?;
                    e.exact_l2[i] = asm.error_l2(&zero, |p| sols[j].u(sub, p, t))?;
                    e.exact_h1[i] = asm.error_h1(&zero, |p| sols[j].grad(sub, p, t))?;
                }
                Ok(e)
            })
            .collect::<Result<Vec<_>>>()?;
        errors.push(level);
        factorizations.push(out.factorizations);
    }
    Ok(ConvergenceTable {
        algorithm: cfg.algorithm,
        meshes: cfg.meshes.clone(),
        errors,
        factorizations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rates_of_table_values() {
        let r = compute_rates(&[0.003791, 0.000947]);
        assert!((r[0].unwrap() - 2.001).abs() < 1e-3);
        assert_eq!(compute_rates(&[0.3, 0.15]), vec![Some(1.0)]);
        let r = compute_rates(&[0.8218800, 0.4629280]);
        assert!((r[0].unwrap() - 0.828).abs() < 1e-3);
        assert_eq!(compute_rates(&[0.1, 0.0, 0.01]), vec![None, None]);
        assert!(compute_rates(&[0.1]).is_empty());
    }
}
