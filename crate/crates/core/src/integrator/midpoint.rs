use nalgebra::{DMatrix, DVector};
use nalgebra_sparse::factorization::CscCholesky;
use nalgebra_sparse::CsrMatrix;

use super::audit::power_audit;
use super::newton::{newton_solve, NewtonConfig, NewtonStats, NewtonSystem};
use crate::coupled::{Block, CoupledSystem, PowerBreakdown};
use crate::error::{MonaError, Result};
use crate::field::to_csc_symmetric;

/// One accepted time step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub n: usize,
    pub t: f64,
    pub y: DVector<f64>,
    /// `d_tau y` of the step.
    pub rate: DVector<f64>,
    pub newton_iters: usize,
    pub newton_residual: f64,
    pub damping_events: usize,
    pub audit: PowerBreakdown,
    /// `H(y^n)`
    pub energy: f64,
}

enum FieldSolver {
    Cholesky(CscCholesky<f64>),
    Lu(nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>),
}

impl FieldSolver {
    fn solve(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            FieldSolver::Cholesky(c) => c.solve(b),
            FieldSolver::Lu(lu) => lu.solve(b).expect("checked non-singular"),
        }
    }
}

/// Factorization of the field block `M + tau/2 K` and of its coupling
/// `Z = (M + tau/2 K)^-1 X`. Both are constant over a run with fixed `tau`.
struct FieldFactor {
    solver: FieldSolver,
    /// `X^T Z`, added to the terminal-charge block of the circuit Schur matrix.
    xtz: DMatrix<f64>,
    z: DMatrix<f64>,
    /// Entrywise magnitudes of `M`, `K` and `X` for the roundoff bound of
    /// the field rows.
    abs_mass: CsrMatrix<f64>,
    abs_stiffness: CsrMatrix<f64>,
    abs_coupling: DMatrix<f64>,
}

impl FieldFactor {
    fn new(sys: &CoupledSystem, tau: f64) -> Option<Self> {
        let field = &sys.field;
        let a: CsrMatrix<f64> = &field.mass + &(&field.stiffness * (0.5 * tau));
        let solver = match CscCholesky::factor(&to_csc_symmetric(&a)) {
            Ok(c) if tau > 0.0 => FieldSolver::Cholesky(c),
            _ => {
                let lu = DMatrix::from(&a).lu();
                if !lu.is_invertible() {
                    return None;
                }
                FieldSolver::Lu(lu)
            }
        };
        let z = solver.solve(&sys.coupling);
        let xtz = sys.coupling.tr_mul(&z);
        let abs = |m: &CsrMatrix<f64>| {
            let mut m = m.clone();
            m.values_mut().iter_mut().for_each(|v| *v = v.abs());
            m
        };
        Some(FieldFactor {
            solver,
            xtz,
            z,
            abs_mass: abs(&field.mass),
            abs_stiffness: abs(&field.stiffness),
            abs_coupling: sys.coupling.abs(),
        })
    }

    /// Row sums `|M| |w_a| + |K| |a| + |X| |w_M|`.
    fn term_bound(&self, w_a: &DVector<f64>, a: &DVector<f64>, w_m: &DVector<f64>) -> DVector<f64> {
        &self.abs_mass * w_a.abs() + &self.abs_stiffness * a.abs() + &self.abs_coupling * w_m.abs()
    }
}

/// Implicit midpoint stepper for a fixed step size.
///
/// Newton runs on the step rate `w = d_tau y`, with
/// `y^{n-1/2} = y^{n-1} + tau/2 w` and `y^n = y^{n-1} + tau w`; the
/// iteration matrix `J_dot + tau/2 J_y` is solved by eliminating the
/// field block.
pub struct MidpointStepper<'a> {
    sys: &'a CoupledSystem,
    tau: f64,
    cfg: NewtonConfig,
    field: Option<FieldFactor>,
}

struct StepProblem<'s, 'a> {
    stepper: &'s MidpointStepper<'a>,
    y_prev: &'s DVector<f64>,
    t_mid: f64,
    scale: Vec<f64>,
}

impl MidpointStepper<'_> {
    pub fn new(sys: &CoupledSystem, tau: f64, cfg: NewtonConfig) -> Result<MidpointStepper<'_>> {
        if !(tau.is_finite() && tau != 0.0) {
            return Err(MonaError::TimeGrid(format!("step size {tau} must be non-zero and finite")));
        }
        cfg.validate()?;
        let field = if sys.layout.n_a > 0 {
            Some(FieldFactor::new(sys, tau).ok_or(MonaError::SingularMatrix { t: f64::NAN, tau })?)
        } else {
            None
        };
        Ok(MidpointStepper { sys, tau, cfg, field })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn system(&self) -> &CoupledSystem {
        self.sys
    }

    /// Advances `y_prev` at `t_prev` by one step, starting Newton from the
    /// rate `guess`.
    pub fn step(
        &self,
        y_prev: &DVector<f64>,
        t_prev: f64,
        guess: DVector<f64>,
    ) -> Result<(DVector<f64>, DVector<f64>, NewtonStats)> {
        let t_mid = t_prev + 0.5 * self.tau;
        let mut problem = StepProblem {
            stepper: self,
            y_prev,
            t_mid,
            scale: Vec::new(),
        };
        problem.scale = problem.block_scales(&guess)?;
        let with_step = |e: MonaError| match e {
            MonaError::NewtonDivergence { iterations, residual, .. } => MonaError::NewtonDivergence {
                iterations,
                residual,
                t: t_prev,
                tau: self.tau,
            },
            MonaError::SingularMatrix { .. } => MonaError::SingularMatrix { t: t_prev, tau: self.tau },
            other => other,
        };
        let (w, stats) = newton_solve(&mut problem, guess, &self.cfg).map_err(with_step)?;
        let y_next = y_prev + &w * self.tau;
        Ok((y_next, w, stats))
    }

    /// Step plus power audit, packaged as a record.
    pub fn step_record(
        &self,
        n: usize,
        y_prev: &DVector<f64>,
        t_prev: f64,
        guess: DVector<f64>,
    ) -> Result<StepRecord> {
        let (y, _, stats) = self.step(y_prev, t_prev, guess)?;
        let audit = power_audit(self.sys, y_prev, &y, self.tau, t_prev);
        let rate = (&y - y_prev) / self.tau;
        let energy = self.sys.energy(&y);
        Ok(StepRecord {
            n,
            t: t_prev + self.tau,
            y,
            rate,
            newton_iters: stats.iterations,
            newton_residual: stats.residual_norm,
            damping_events: stats.damping_events,
            audit,
            energy,
        })
    }
}

/// One midpoint step with a fresh stepper.
pub fn midpoint_step(
    sys: &CoupledSystem,
    y_prev: &DVector<f64>,
    t_prev: f64,
    tau: f64,
    cfg: &NewtonConfig,
) -> Result<(DVector<f64>, StepRecord)> {
    let stepper = MidpointStepper::new(sys, tau, *cfg)?;
    let rec = stepper.step_record(1, y_prev, t_prev, sys.zero_state())?;
    Ok((rec.y.clone(), rec))
}

impl StepProblem<'_, '_> {
    fn midpoint_state(&self, w: &DVector<f64>) -> DVector<f64> {
        self.y_prev + w * (0.5 * self.stepper.tau)
    }

    fn raw_residual(&self, w: &DVector<f64>) -> Result<DVector<f64>> {
        self.stepper
            .sys
            .residual(&self.midpoint_state(w), w, self.t_mid)
    }

    /// Per-block scale `max(1, |f_b|, |r_b(0)|, |r_b(guess)|)`.
    fn block_scales(&self, guess: &DVector<f64>) -> Result<Vec<f64>> {
        let sys = self.stepper.sys;
        let f = sys.source_vector(self.t_mid);
        let r0 = self.raw_residual(&sys.zero_state())?;
        let rg = self.raw_residual(guess)?;
        Ok(Block::ALL
            .iter()
            .map(|&b| {
                let r = sys.layout.range(b);
                [&f, &r0, &rg]
                    .iter()
                    .map(|v| v.rows(r.start, r.len()).amax())
                    .fold(1.0, f64::max)
            })
            .collect())
    }
}

impl StepProblem<'_, '_> {
    fn scaled(&self, w: &DVector<f64>, r: &DVector<f64>) -> DVector<f64> {
        let sys = self.stepper.sys;
        let y_mid = self.midpoint_state(w);
        let c = sys.dissipation_operator(w);
        let g = sys.energy_gradient(&y_mid);
        let mut out = r.clone();
        for (&b, &s) in Block::ALL.iter().zip(&self.scale) {
            let rg = sys.layout.range(b);
            let part = |v: &DVector<f64>| v.rows(rg.start, rg.len()).amax();
            let mut s = s.max(part(&c)).max(part(&g));
            if let (Block::Field, Some(ff)) = (b, &self.stepper.field) {
                let qm = sys.layout.range(Block::ChargeM);
                let bound = ff.term_bound(
                    &w.rows(rg.start, rg.len()).into_owned(),
                    &y_mid.rows(rg.start, rg.len()).into_owned(),
                    &w.rows(qm.start, qm.len()).into_owned(),
                );
                s = s.max(bound.amax());
            }
            let mut block = out.rows_mut(rg.start, rg.len());
            block /= s;
        }
        out
    }
}

impl NewtonSystem for StepProblem<'_, '_> {
    fn residual(&mut self, w: &DVector<f64>) -> Result<DVector<f64>> {
        let r = self.raw_residual(w)?;
        Ok(r)
    }

    /// Junction limiting on every diode: the common step fraction keeps
    /// each diode voltage within its limited update.
    fn step_limit(&self, w: &DVector<f64>, d: &DVector<f64>) -> f64 {
        let g = &self.stepper.sys.graph;
        let n = g.n_nodes;
        let u = w.rows(0, n);
        let du = d.rows(0, n);
        let v_old = g.a_d.tr_mul(&u);
        let dv = -g.a_d.tr_mul(&du);
        let mut alpha: f64 = 1.0;
        for (k, p) in g.diodes.iter().enumerate() {
            let v_new = v_old[k] + dv[k];
            let v_lim = p.limit_update(v_old[k], v_new);
            if v_lim != v_new && dv[k] != 0.0 {
                alpha = alpha.min(((v_lim - v_old[k]) / dv[k]).max(0.0));
            }
        }
        alpha
    }

    /// Largest blockwise ratio of `|r_b|` to the block scale, which is raised
    /// to the size of the balanced terms `C_b(w)` and `dH/dy_b` at `w`.
    fn norm(&self, w: &DVector<f64>, r: &DVector<f64>) -> f64 {
        self.scaled(w, r).amax()
    }

    fn merit(&self, w: &DVector<f64>, r: &DVector<f64>) -> f64 {
        self.scaled(w, r).norm()
    }

    fn solve_jacobian(&mut self, w: &DVector<f64>, r: &DVector<f64>) -> Result<DVector<f64>> {
        let st = self.stepper;
        let sys = st.sys;
        let l = &sys.layout;
        let nc = l.n_circuit();
        let om = l.offset(Block::ChargeM);
        let singular = MonaError::SingularMatrix { t: f64::NAN, tau: st.tau };
        let mut schur = sys.circuit_matrix(w, 1.0, 0.5 * st.tau);
        let mut rc = r.rows(0, nc).into_owned();
        let mut out = DVector::zeros(sys.dim());
        let Some(ff) = &st.field else {
            let d = schur.lu().solve(&rc).ok_or(singular)?;
            out.copy_from(&d);
            return Ok(out);
        };
        let ra = DMatrix::from_column_slice(l.n_a, 1, r.rows(nc, l.n_a).as_slice());
        let ainv_ra = ff.solver.solve(&ra).column(0).into_owned();
        let mut qm = rc.rows_mut(om, l.n_m);
        qm -= sys.coupling.tr_mul(&ainv_ra);
        let mut block = schur.view_mut((om, om), (l.n_m, l.n_m));
        block += &ff.xtz;
        let dc = schur.lu().solve(&rc).ok_or(singular)?;
        let da = ainv_ra + &ff.z * dc.rows(om, l.n_m);
        out.rows_mut(0, nc).copy_from(&dc);
        out.rows_mut(nc, l.n_a).copy_from(&da);
        Ok(out)
    }
}
