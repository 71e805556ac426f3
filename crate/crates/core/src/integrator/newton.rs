use nalgebra::{DMatrix, DVector};

use crate::error::{MonaError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonConfig {
    /// Tolerance on the (scaled) residual norm.
    pub tol: f64,
    pub max_iter: usize,
    /// Line-search halvings per iteration.
    pub max_halvings: usize,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig {
            tol: 1e-12,
            max_iter: 100,
            max_halvings: 30,
        }
    }
}

impl NewtonConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(MonaError::Config(format!("Newton tolerance {} must be positive", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(MonaError::Config("Newton needs at least one iteration".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NewtonStats {
    pub iterations: usize,
    pub residual_norm: f64,
    /// Iterations whose step was shortened by the line search.
    pub damping_events: usize,
}

/// Nonlinear system `F(x) = 0` with a linear solver for its Jacobian.
pub trait NewtonSystem {
    fn residual(&mut self, x: &DVector<f64>) -> Result<DVector<f64>>;

    /// Solves `F'(x) d = r`.
    fn solve_jacobian(&mut self, x: &DVector<f64>, r: &DVector<f64>) -> Result<DVector<f64>>;

    /// Largest admissible fraction of the Newton update `x - d`.
    fn step_limit(&self, _x: &DVector<f64>, _d: &DVector<f64>) -> f64 {
        1.0
    }

    /// Merit function of the line search.
    fn merit(&self, x: &DVector<f64>, r: &DVector<f64>) -> f64 {
        self.norm(x, r)
    }

    /// Convergence measure of the residual `r` at iterate `x`.
    fn norm(&self, _x: &DVector<f64>, r: &DVector<f64>) -> f64 {
        r.amax()
    }
}

/// Damped Newton iteration. Returns the first iterate whose residual norm is
/// at most `cfg.tol`.
///
/// The update is first shortened to [`NewtonSystem::step_limit`]; then it
/// is halved while the residual is non-finite or does not
/// decrease. If every halving fails to decrease a finite residual the full
/// step is taken anyway.
pub fn newton_solve<S: NewtonSystem + ?Sized>(
    sys: &mut S,
    x0: DVector<f64>,
    cfg: &NewtonConfig,
) -> Result<(DVector<f64>, NewtonStats)> {
    cfg.validate()?;
    let mut x = x0;
    let mut r = sys.residual(&x)?;
    let mut norm = sys.norm(&x, &r);
    let mut merit = sys.merit(&x, &r);
    if !norm.is_finite() || !merit.is_finite() {
        return Err(MonaError::NonFinite("initial Newton residual"));
    }
    let mut stats = NewtonStats {
        iterations: 0,
        residual_norm: norm,
        damping_events: 0,
    };
    while norm > cfg.tol {
        if stats.iterations == cfg.max_iter {
            return Err(MonaError::NewtonDivergence {
                iterations: stats.iterations,
                residual: norm,
                t: f64::NAN,
                tau: f64::NAN,
            });
        }
        stats.iterations += 1;
        let d = sys.solve_jacobian(&x, &r)?;
        let mut alpha = sys.step_limit(&x, &d).clamp(f64::MIN_POSITIVE, 1.0);
        let limited = alpha < 1.0;
        let mut first = None;
        let mut accepted = None;
        for halving in 0..=cfg.max_halvings {
            let trial = &x - &d * alpha;
            if let Ok(rt) = sys.residual(&trial) {
                let mt = sys.merit(&trial, &rt);
                if mt.is_finite() {
                    if mt < merit {
                        accepted = Some((trial, rt, mt, limited || halving > 0));
                        break;
                    }
                    if first.is_none() {
                        first = Some((trial, rt, mt, limited));
                    }
                }
            }
            alpha *= 0.5;
        }
        let Some((xn, rn, mn, damped)) = accepted.or(first) else {
            return Err(MonaError::NonFinite("Newton residual after damping"));
        };
        if damped {
            stats.damping_events += 1;
        }
        norm = sys.norm(&xn, &rn);
        log::trace!("newton iter {}: |r| = {norm:e}, step {alpha:e}", stats.iterations);
        x = xn;
        r = rn;
        merit = mn;
        stats.residual_norm = norm;
    }
    Ok((x, stats))
}

/// Adapts residual and dense Jacobian closures to [`NewtonSystem`].
pub struct DenseNewton<F, J> {
    pub residual: F,
    pub jacobian: J,
}

impl<F, J> NewtonSystem for DenseNewton<F, J>
where
    F: FnMut(&DVector<f64>) -> DVector<f64>,
    J: FnMut(&DVector<f64>) -> DMatrix<f64>,
{
    fn residual(&mut self, x: &DVector<f64>) -> Result<DVector<f64>> {
        Ok((self.residual)(x))
    }

    fn solve_jacobian(&mut self, x: &DVector<f64>, r: &DVector<f64>) -> Result<DVector<f64>> {
        (self.jacobian)(x)
            .lu()
            .solve(r)
            .ok_or(MonaError::SingularMatrix {
                t: f64::NAN,
                tau: f64::NAN,
            })
    }
}

/// [`newton_solve`] for dense closures.
pub fn newton_solve_dense(
    residual: impl FnMut(&DVector<f64>) -> DVector<f64>,
    jacobian: impl FnMut(&DVector<f64>) -> DMatrix<f64>,
    x0: DVector<f64>,
    cfg: &NewtonConfig,
) -> Result<(DVector<f64>, NewtonStats)> {
    newton_solve(&mut DenseNewton { residual, jacobian }, x0, cfg)
}
