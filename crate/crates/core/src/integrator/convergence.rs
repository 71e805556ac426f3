use super::newton::NewtonConfig;
use super::transient::{run_transient, Probe, TimeGrid, TransientResult};
use crate::coupled::CoupledSystem;
use crate::error::{MonaError, Result};

/// Default depth of the reference run below the finest step size.
pub const DEFAULT_REFERENCE_LEVELS: u32 = 3;

/// Setup of a step-halving study.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceConfig {
    /// Coarsest grid.
    pub grid: TimeGrid,
    /// Number of halvings `m`; the study runs `m + 1` step sizes.
    pub halvings: u32,
    /// The reference run uses `tau_base / 2^(m + reference_levels)`.
    pub reference_levels: u32,
    pub probe: Probe,
    pub newton: NewtonConfig,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EocRow {
    pub tau: f64,
    /// Largest deviation of the probe from the reference on this run's grid.
    pub eps_tau: f64,
    /// `log2(eps_{2 tau} / eps_tau)`; absent on the coarsest row.
    pub eoc: Option<f64>,
    pub max_eps_h: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub rows: Vec<EocRow>,
    pub reference_tau: f64,
    pub reference_max_eps_h: f64,
}

impl ConvergenceTable {
    pub fn eocs(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.eoc).collect()
    }
}

/// Runs every step size and the reference concurrently and tabulates the
/// probe error against the reference.
pub fn convergence_study(sys: &CoupledSystem, cfg: &ConvergenceConfig) -> Result<ConvergenceTable> {
    if cfg.halvings < 2 {
        return Err(MonaError::Config(format!(
            "convergence study needs at least 2 halvings, got {}",
            cfg.halvings
        )));
    }
    if cfg.reference_levels == 0 {
        return Err(MonaError::Config("reference must be finer than the finest run".into()));
    }
    let levels: Vec<u32> = (0..=cfg.halvings)
        .chain(std::iter::once(cfg.halvings + cfg.reference_levels))
        .collect();
    let probes = std::slice::from_ref(&cfg.probe);
    let runs: Vec<Result<TransientResult>> = std::thread::scope(|scope| {
        let handles: Vec<_> = levels
            .iter()
            .map(|&k| {
                let grid = cfg.grid.refined(k);
                scope.spawn(move || {
                    run_transient(sys, &grid, probes, &cfg.newton).map_err(|abort| abort.error)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("transient run panicked"))
            .collect()
    });
    let mut runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let reference = runs.pop().expect("reference run");
    let ref_series = &reference.series[0];
    let ref_per_coarse = 1usize << cfg.reference_levels;

    let mut rows: Vec<EocRow> = Vec::with_capacity(runs.len());
    for (k, run) in runs.iter().enumerate() {
        let stride = ref_per_coarse << (cfg.halvings as usize - k);
        let eps_tau = run.series[0]
            .iter()
            .enumerate()
            .map(|(n, v)| (v - ref_series[(n + 1) * stride - 1]).abs())
            .fold(0.0, f64::max);
        let eoc = rows.last().map(|prev| (prev.eps_tau / eps_tau).log2());
        rows.push(EocRow {
            tau: run.grid.tau,
            eps_tau,
            eoc,
            max_eps_h: run.max_abs_eps_h(),
        });
    }
    Ok(ConvergenceTable {
        rows,
        reference_tau: reference.grid.tau,
        reference_max_eps_h: reference.max_abs_eps_h(),
    })
}

/// Defect of the continuous balance `dH/dt + losses + sources` along a
/// computed trajectory, with `dH/dt` and `dy/dt` from fourth-order central
/// differences of `H^n` and `y^n`. Entry `k` belongs to `t^{k+2}`.
pub fn balance_defect_fd(sys: &CoupledSystem, result: &TransientResult) -> Vec<f64> {
    let h = result.energies();
    let y = result.states();
    let tau = result.grid.tau;
    (2..h.len().saturating_sub(2))
        .map(|n| {
            let dh = (h[n - 2] - 8.0 * h[n - 1] + 8.0 * h[n + 1] - h[n + 2]) / (12.0 * tau);
            let rate = (y[n - 2] - y[n - 1] * 8.0 + y[n + 1] * 8.0 - y[n + 2]) / (12.0 * tau);
            sys.power_terms(dh, &rate, result.grid.time(n)).residual
        })
        .collect()
}
