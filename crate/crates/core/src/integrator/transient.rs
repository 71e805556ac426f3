use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;

use super::midpoint::{MidpointStepper, StepRecord};
use super::newton::NewtonConfig;
use crate::circuit::{BranchRef, ElementKind, NodeId};
use crate::coupled::{Block, CoupledSystem};
use crate::error::{MonaError, Result};

/// Largest constraint residual accepted for an initial state.
pub const INITIAL_CONSISTENCY_TOL: f64 = 1e-10;

/// Uniform grid `t_k = t0 + k tau`, `k = 0..=steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t0: f64,
    pub t_end: f64,
    pub tau: f64,
    pub steps: usize,
}

impl TimeGrid {
    /// `(t_end - t0) / tau` must be an integer up to a relative `1e-12`.
    pub fn new(t0: f64, t_end: f64, tau: f64) -> Result<Self> {
        if !(t0.is_finite() && t_end.is_finite() && tau.is_finite()) {
            return Err(MonaError::TimeGrid("non-finite grid parameter".into()));
        }
        if tau <= 0.0 {
            return Err(MonaError::TimeGrid(format!("step size {tau} must be positive")));
        }
        let ratio = (t_end - t0) / tau;
        let steps = ratio.round();
        if steps < 1.0 {
            return Err(MonaError::TimeGrid(format!(
                "interval [{t0}, {t_end}] holds no step of size {tau}"
            )));
        }
        if (ratio - steps).abs() > 1e-12 * steps {
            return Err(MonaError::TimeGrid(format!(
                "(t_end - t0) / tau = {ratio} is not an integer"
            )));
        }
        Ok(TimeGrid {
            t0,
            t_end,
            tau,
            steps: steps as usize,
        })
    }

    pub fn time(&self, k: usize) -> f64 {
        if k == self.steps {
            self.t_end
        } else {
            self.t0 + k as f64 * self.tau
        }
    }

    /// Same interval with step `tau / 2^k`.
    pub fn refined(&self, k: u32) -> Self {
        TimeGrid {
            tau: self.tau / f64::from(1u32 << k),
            steps: self.steps << k,
            ..*self
        }
    }
}

/// Quantity observed by a probe.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeTarget {
    /// Node flux potential `psi`.
    Flux(NodeId),
    /// Node voltage `dpsi/dt`.
    NodeVoltage(NodeId),
    BranchVoltage(BranchRef),
    BranchCurrent(BranchRef),
    /// Charge state of a capacitor, voltage source or device branch.
    Charge(BranchRef),
}

/// Unresolved probe expression: `psi(node)`, `u(node)`, `v(branch)`,
/// `i(branch)` or `q(branch)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProbeSpec {
    pub name: String,
    pub function: String,
    pub argument: String,
}

impl FromStr for ProbeSpec {
    type Err = MonaError;

    /// Parses `name=func(arg)`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || MonaError::Probe(format!("`{s}` is not of the form name=func(arg)"));
        let (name, expr) = s.split_once('=').ok_or_else(bad)?;
        let (func, rest) = expr.trim().split_once('(').ok_or_else(bad)?;
        let arg = rest.strip_suffix(')').ok_or_else(bad)?;
        let (name, func, arg) = (name.trim(), func.trim().to_ascii_lowercase(), arg.trim());
        if name.is_empty() || arg.is_empty() || name.contains(',') {
            return Err(bad());
        }
        if !["psi", "u", "v", "i", "q"].contains(&func.as_str()) {
            return Err(MonaError::Probe(format!("unknown probe function `{func}` in `{s}`")));
        }
        Ok(ProbeSpec {
            name: name.to_string(),
            function: func,
            argument: arg.to_string(),
        })
    }
}

impl fmt::Display for ProbeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}={}({})", self.name, self.function, self.argument)
    }
}

/// Named probe resolved against a circuit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Probe {
    pub name: String,
    pub target: ProbeTarget,
}

impl Probe {
    pub fn resolve(spec: &ProbeSpec, sys: &CoupledSystem) -> Result<Self> {
        let g = &sys.graph;
        let node = || {
            g.node_id(&spec.argument)
                .ok_or_else(|| MonaError::Probe(format!("no node `{}` in probe `{spec}`", spec.argument)))
        };
        let branch = || {
            g.branch(&spec.argument)
                .ok_or_else(|| MonaError::Probe(format!("no branch `{}` in probe `{spec}`", spec.argument)))
        };
        let target = match spec.function.as_str() {
            "psi" => ProbeTarget::Flux(node()?),
            "u" => ProbeTarget::NodeVoltage(node()?),
            "v" => ProbeTarget::BranchVoltage(branch()?),
            "i" => ProbeTarget::BranchCurrent(branch()?),
            "q" => {
                let b = branch()?;
                match b.kind {
                    ElementKind::Capacitor | ElementKind::VoltageSource | ElementKind::Device => {}
                    k => {
                        return Err(MonaError::Probe(format!(
                            "branch `{}` ({k}) has no charge state",
                            spec.argument
                        )))
                    }
                }
                ProbeTarget::Charge(b)
            }
            f => return Err(MonaError::Probe(format!("unknown probe function `{f}`"))),
        };
        Ok(Probe {
            name: spec.name.clone(),
            target,
        })
    }

    /// Resolves a list of `name=func(arg)` strings; names must be unique.
    pub fn parse_list<S: AsRef<str>>(specs: &[S], sys: &CoupledSystem) -> Result<Vec<Probe>> {
        let mut out: Vec<Probe> = Vec::with_capacity(specs.len());
        for s in specs {
            let p = Probe::resolve(&s.as_ref().parse()?, sys)?;
            if out.iter().any(|q| q.name == p.name) {
                return Err(MonaError::Probe(format!("duplicate probe name `{}`", p.name)));
            }
            out.push(p);
        }
        Ok(out)
    }

    /// Value at the end of a step: states from `y`, voltages and currents
    /// from the step rate `w`, current sources at `t`.
    pub fn evaluate(&self, sys: &CoupledSystem, y: &DVector<f64>, w: &DVector<f64>, t: f64) -> f64 {
        let l = &sys.layout;
        let g = &sys.graph;
        let potential = |v: &DVector<f64>, n: NodeId| if n == 0 { 0.0 } else { v[n - 1] };
        let branch_voltage = |v: &DVector<f64>, b: BranchRef| {
            let (p, m) = g.endpoints(b.kind)[b.index];
            potential(v, p) - potential(v, m)
        };
        match self.target {
            ProbeTarget::Flux(n) => potential(y, n),
            ProbeTarget::NodeVoltage(n) => potential(w, n),
            ProbeTarget::BranchVoltage(b) => branch_voltage(w, b),
            ProbeTarget::Charge(b) => {
                let blk = match b.kind {
                    ElementKind::Capacitor => Block::ChargeC,
                    ElementKind::VoltageSource => Block::ChargeV,
                    _ => Block::ChargeM,
                };
                y[l.offset(blk) + b.index]
            }
            ProbeTarget::BranchCurrent(b) => match b.kind {
                ElementKind::Resistor => g.resistive_law(b.index).eval(branch_voltage(w, b)).0,
                ElementKind::Diode => {
                    g.resistive_law(g.n_linear() + b.index).eval(branch_voltage(w, b)).0
                }
                ElementKind::Inductor => branch_voltage(y, b) * g.inv_inductance[b.index],
                ElementKind::CurrentSource => sys.sources.current[b.index].value(t),
                ElementKind::Capacitor => w[l.offset(Block::ChargeC) + b.index],
                ElementKind::VoltageSource => w[l.offset(Block::ChargeV) + b.index],
                ElementKind::Device => w[l.offset(Block::ChargeM) + b.index],
            },
        }
    }
}

/// Outcome of a transient run. `records[k]` holds step `k + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransientResult {
    pub grid: TimeGrid,
    pub y0: DVector<f64>,
    pub energy0: f64,
    pub records: Vec<StepRecord>,
    pub probes: Vec<Probe>,
    /// `series[p][k]` is probe `p` after step `k + 1`.
    pub series: Vec<Vec<f64>>,
}

impl TransientResult {
    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t).collect()
    }

    pub fn probe(&self, name: &str) -> Option<&[f64]> {
        self.probes
            .iter()
            .position(|p| p.name == name)
            .map(|k| self.series[k].as_slice())
    }

    /// `H(y^n)` for `n = 0..=steps`.
    pub fn energies(&self) -> Vec<f64> {
        std::iter::once(self.energy0)
            .chain(self.records.iter().map(|r| r.energy))
            .collect()
    }

    /// States `y^n` for `n = 0..=steps`.
    pub fn states(&self) -> Vec<&DVector<f64>> {
        std::iter::once(&self.y0)
            .chain(self.records.iter().map(|r| &r.y))
            .collect()
    }

    pub fn max_abs_eps_h(&self) -> f64 {
        self.records
            .iter()
            .map(|r| r.audit.residual.abs())
            .fold(0.0, f64::max)
    }

    /// Largest power delivered by the sources over the run.
    pub fn peak_supplied_power(&self) -> f64 {
        self.records
            .iter()
            .map(|r| r.audit.supplied().abs())
            .fold(0.0, f64::max)
    }

    pub fn is_complete(&self) -> bool {
        self.records.len() == self.grid.steps
    }
}

/// A failed step together with everything accepted before it.
#[derive(Clone)]
pub struct TransientAbort {
    pub error: MonaError,
    pub partial: TransientResult,
}

impl fmt::Debug for TransientAbort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TransientAbort")
            .field("error", &self.error)
            .field("accepted_steps", &self.partial.records.len())
            .finish()
    }
}

impl fmt::Display for TransientAbort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} (after {} of {} steps)",
            self.error,
            self.partial.records.len(),
            self.partial.grid.steps
        )
    }
}

impl std::error::Error for TransientAbort {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

/// Runs from the zero state, which must satisfy the constraints at `t0`.
pub fn run_transient(
    sys: &CoupledSystem,
    grid: &TimeGrid,
    probes: &[Probe],
    cfg: &NewtonConfig,
) -> std::result::Result<TransientResult, Box<TransientAbort>> {
    run_transient_from(sys, grid, sys.zero_state(), probes, cfg)
}

/// Runs from `y0`, which must satisfy the constraints at `t0`.
pub fn run_transient_from(
    sys: &CoupledSystem,
    grid: &TimeGrid,
    y0: DVector<f64>,
    probes: &[Probe],
    cfg: &NewtonConfig,
) -> std::result::Result<TransientResult, Box<TransientAbort>> {
    let mut result = TransientResult {
        grid: *grid,
        energy0: if y0.len() == sys.dim() { sys.energy(&y0) } else { 0.0 },
        y0,
        records: Vec::with_capacity(grid.steps),
        probes: probes.to_vec(),
        series: vec![Vec::with_capacity(grid.steps); probes.len()],
    };
    let abort = |error: MonaError, partial: TransientResult| Box::new(TransientAbort { error, partial });

    let start = sys
        .constraint_residual(&result.y0, grid.t0)
        .and_then(|residual| {
            if residual > INITIAL_CONSISTENCY_TOL {
                Err(MonaError::InconsistentInitialState {
                    residual,
                    tolerance: INITIAL_CONSISTENCY_TOL,
                })
            } else {
                MidpointStepper::new(sys, grid.tau, *cfg)
            }
        });
    let stepper = match start {
        Ok(s) => s,
        Err(e) => return Err(abort(e, result)),
    };

    let mut guess = sys.zero_state();
    for n in 1..=grid.steps {
        let t_prev = grid.time(n - 1);
        let y_prev = result.records.last().map_or(&result.y0, |r| &r.y);
        let mut rec = match stepper.step_record(n, y_prev, t_prev, guess.clone()) {
            Ok(r) => r,
            Err(e) => return Err(abort(e, result)),
        };
        rec.t = grid.time(n);
        for (p, s) in probes.iter().zip(result.series.iter_mut()) {
            s.push(p.evaluate(sys, &rec.y, &rec.rate, rec.t));
        }
        log::debug!(
            "step {n}: t = {:.6e}, newton {} ({:.2e}), eps_H = {:.3e}",
            rec.t,
            rec.newton_iters,
            rec.newton_residual,
            rec.audit.residual
        );
        guess.copy_from(&rec.rate);
        result.records.push(rec);
    }
    Ok(result)
}
