use nalgebra::DVector;

use crate::coupled::{CoupledSystem, PowerBreakdown};

/// Discrete power balance of the step `y_prev -> y_next`:
/// `d_tau H` from the two stored states, losses at the rate
/// `d_tau y = (y_next - y_prev) / tau`, sources at the step midpoint.
/// The `residual` field is the balance defect `eps_H`.
pub fn power_audit(
    sys: &CoupledSystem,
    y_prev: &DVector<f64>,
    y_next: &DVector<f64>,
    tau: f64,
    t_prev: f64,
) -> PowerBreakdown {
    let rate = (y_next - y_prev) / tau;
    let dh_dt = sys.energy_difference(y_prev, y_next) / tau;
    sys.power_terms(dh_dt, &rate, t_prev + 0.5 * tau)
}
