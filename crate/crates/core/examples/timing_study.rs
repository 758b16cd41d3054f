//! Wall time of per-sample solves against the shared-matrix algorithms as
//! the ensemble grows.
//!
//! ```bash
//! cargo run --release --example timing_study -- 32 1,5,10
//! ```

use ensemble_heat::harness::{
    run_timing_study, timing::write_timing_table, TimingConfig, TimingRow,
};

pub fn run_example(
    n: usize,
    sizes: Vec<usize>,
    steps: usize,
) -> ensemble_heat::Result<Vec<TimingRow>> {
    let rows = run_timing_study(&TimingConfig::new(n, sizes, steps))?;
    write_timing_table(&rows, std::io::stdout().lock())?;
    for r in &rows {
        let ratio = r.baseline().as_secs_f64() / r.a2().as_secs_f64();
        println!("J = {:>2}: baseline / A2 = {ratio:.1}", r.j);
    }
    Ok(rows)
}

#[allow(dead_code)]
fn main() -> ensemble_heat::Result<()> {
    let mut args = std::env::args().skip(1);
    let n = args
        .next()
        .map_or(16, |s| s.parse().expect("cells per unit length"));
    let sizes = args
        .next()
        .map(|m| {
            m.split(',')
                .map(|s| s.parse().expect("ensemble size"))
                .collect()
        })
        .unwrap_or_else(|| vec![1, 3, 5]);
    run_example(n, sizes, 16)?;
    Ok(())
}
