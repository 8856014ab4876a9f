//! Replicated sample-then-fit runs over a grid of `(rho, n)` cells.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::estimation::{em_fit, EmConfig, Flag};
use crate::model::ModelSpec;
use crate::sample::{derive_seed, sample};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationConfig {
    pub leaves: usize,
    pub rhos: Vec<f64>,
    pub sizes: Vec<u64>,
    pub replicates: usize,
    /// One EM run per tolerance and replicate; the estimate reported is the
    /// one from the smallest tolerance.
    pub tolerances: Vec<f64>,
    pub max_iterations: usize,
    pub master_seed: u64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            leaves: 4,
            rhos: vec![0.5, 0.6, 0.7, 0.8],
            sizes: vec![300, 1000],
            replicates: 500,
            tolerances: vec![1e-4, 1e-7],
            max_iterations: 500,
            master_seed: 20_240_601,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Replicate {
    pub seed: u64,
    pub rho_hat: f64,
    /// EM updates used at each tolerance, in configuration order.
    pub iterations: Vec<usize>,
    pub monotone: bool,
    pub flags: Vec<Flag>,
}

/// Empirical quantiles at the levels in [`QUANTILE_LEVELS`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Quantiles {
    pub levels: Vec<f64>,
    pub values: Vec<f64>,
}

pub const QUANTILE_LEVELS: [f64; 7] = [0.0, 0.25, 0.5, 0.75, 0.9, 0.95, 1.0];

impl Quantiles {
    fn of(values: &[f64]) -> Self {
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Self {
            levels: QUANTILE_LEVELS.to_vec(),
            values: QUANTILE_LEVELS
                .iter()
                .map(|&p| nearest_rank(&sorted, p))
                .collect(),
        }
    }

    pub fn at(&self, level: f64) -> Option<f64> {
        self.levels
            .iter()
            .position(|&l| l == level)
            .map(|i| self.values[i])
    }
}

/// Nearest-rank quantile of sorted data: the smallest value with at least a
/// fraction `p` of the sample at or below it.
pub fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let rank = (p * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellReport {
    pub rho: f64,
    pub n: u64,
    pub abs_error: Quantiles,
    /// Iteration-count quantiles, one entry per tolerance.
    pub iterations: Vec<Quantiles>,
    pub max_iterations: Vec<usize>,
    pub all_monotone: bool,
    pub flagged: usize,
    pub replicates: Vec<Replicate>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub config: SimulationConfig,
    pub cells: Vec<CellReport>,
}

fn run_replicate(
    spec: &ModelSpec,
    n: u64,
    seed: u64,
    config: &SimulationConfig,
) -> Result<Replicate> {
    let counts = sample(spec, n, seed, false)?;
    let mut iterations = Vec::with_capacity(config.tolerances.len());
    let mut monotone = true;
    let mut last = None;
    for &tolerance in &config.tolerances {
        let trace = em_fit(
            &counts,
            &EmConfig {
                tolerance,
                max_iterations: config.max_iterations,
                init: None,
            },
        )?;
        iterations.push(trace.updates());
        monotone &= trace.is_monotone(1e-10);
        last = Some(trace);
    }
    let trace = last.expect("at least one tolerance");
    Ok(Replicate {
        seed,
        rho_hat: trace.final_rho,
        iterations,
        monotone,
        flags: trace.flags,
    })
}

/// Runs every cell. Each replicate's seed depends only on the master seed and
/// the cell and replicate indices, so the report is independent of `threads`.
pub fn run_simulation(
    config: &SimulationConfig,
    threads: Option<usize>,
) -> Result<SimulationReport> {
    if config.replicates == 0 || config.rhos.is_empty() || config.sizes.is_empty() {
        return domain("simulation grid is empty");
    }
    let mut tolerances = config.tolerances.clone();
    tolerances.sort_by(|a, b| b.total_cmp(a));
    if tolerances.is_empty() || tolerances.iter().any(|t| !(*t > 0.0)) {
        return domain("tolerances must be positive");
    }
    let config = SimulationConfig {
        tolerances,
        ..config.clone()
    };

    let cells: Vec<(usize, f64, u64)> = config
        .rhos
        .iter()
        .flat_map(|&rho| config.sizes.iter().map(move |&n| (rho, n)))
        .enumerate()
        .map(|(i, (rho, n))| (i, rho, n))
        .collect();

    let work = || -> Result<Vec<CellReport>> {
        cells
            .iter()
            .map(|&(index, rho, n)| {
                let spec = ModelSpec::from_rho(config.leaves, rho)?;
                let replicates: Vec<Replicate> = (0..config.replicates)
                    .into_par_iter()
                    .map(|r| {
                        let seed = derive_seed(config.master_seed, index as u64, r as u64);
                        run_replicate(&spec, n, seed, &config)
                    })
                    .collect::<Result<_>>()?;
                Ok(summarize(rho, n, replicates, config.tolerances.len()))
            })
            .collect()
    };

    let cells = match threads {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| Error::Unsupported(format!("thread pool: {e}")))?
            .install(work)?,
        None => work()?,
    };
    Ok(SimulationReport { config, cells })
}

fn summarize(rho: f64, n: u64, replicates: Vec<Replicate>, tolerances: usize) -> CellReport {
    let errors: Vec<f64> = replicates.iter().map(|r| (r.rho_hat - rho).abs()).collect();
    let per_tol: Vec<Vec<f64>> = (0..tolerances)
        .map(|i| replicates.iter().map(|r| r.iterations[i] as f64).collect())
        .collect();
    CellReport {
        rho,
        n,
        abs_error: Quantiles::of(&errors),
        iterations: per_tol.iter().map(|v| Quantiles::of(v)).collect(),
        max_iterations: (0..tolerances)
            .map(|i| {
                replicates
                    .iter()
                    .map(|r| r.iterations[i])
                    .max()
                    .unwrap_or(0)
            })
            .collect(),
        all_monotone: replicates.iter().all(|r| r.monotone),
        flagged: replicates.iter().filter(|r| !r.flags.is_empty()).count(),
        replicates,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_rank_quantiles() {
        let v: Vec<f64> = (1..=20).map(f64::from).collect();
        assert_eq!(nearest_rank(&v, 0.95), 19.0);
        assert_eq!(nearest_rank(&v, 0.0), 1.0);
        assert_eq!(nearest_rank(&v, 1.0), 20.0);
        assert_eq!(nearest_rank(&v, 0.5), 10.0);
        assert!(nearest_rank(&[], 0.5).is_nan());
    }

    fn small() -> SimulationConfig {
        SimulationConfig {
            rhos: vec![0.6],
            sizes: vec![200],
            replicates: 12,
            ..SimulationConfig::default()
        }
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let a = run_simulation(&small(), Some(1)).unwrap();
        let b = run_simulation(&small(), Some(3)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.cells[0].replicates.len(), 12);
        assert!(a.cells[0].all_monotone);
    }

    #[test]
    fn independence_cell_is_flagged() {
        let cfg = SimulationConfig {
            rhos: vec![0.0],
            ..small()
        };
        let r = run_simulation(&cfg, Some(2)).unwrap();
        let cell = &r.cells[0];
        assert!(cell.abs_error.at(0.5).unwrap() < 0.3);
        assert!(cell
            .replicates
            .iter()
            .any(|r| r.flags.contains(&Flag::NonIdentifiable)));
    }

    #[test]
    fn rejects_empty_grid() {
        let cfg = SimulationConfig {
            replicates: 0,
            ..small()
        };
        assert!(run_simulation(&cfg, None).is_err());
    }
}
