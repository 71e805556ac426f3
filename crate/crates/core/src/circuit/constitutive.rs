//! Branch laws of the resistive partition.

/// Exponential diode with a parallel leakage resistor:
/// `i = Is * (exp(v / Vth) - 1) + v / Rpar`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiodeParams {
    pub saturation_current: f64,
    pub thermal_voltage: f64,
    pub parallel_resistance: f64,
}

/// Exponent beyond which the diode law is continued linearly.
pub const DIODE_EXP_LIMIT: f64 = 500.0;

impl Default for DiodeParams {
    fn default() -> Self {
        DiodeParams {
            saturation_current: 1e-14,
            thermal_voltage: 2.5e-2,
            parallel_resistance: 1e12,
        }
    }
}

impl DiodeParams {
    /// Current and differential conductance at branch voltage `v`.
    pub fn eval(&self, v: f64) -> (f64, f64) {
        let is = self.saturation_current;
        let vt = self.thermal_voltage;
        let gp = 1.0 / self.parallel_resistance;
        let x = v / vt;
        let (e, de) = if x > DIODE_EXP_LIMIT {
            // first-order continuation keeps iterates finite
            let e0 = DIODE_EXP_LIMIT.exp();
            (e0 * (1.0 + (x - DIODE_EXP_LIMIT)), e0)
        } else {
            let e = x.exp();
            (e, e)
        };
        (is * (e - 1.0) + v * gp, is / vt * de + gp)
    }

    /// Voltage above which the exponential dominates the curvature,
    /// `Vth ln(Vth / (sqrt(2) Is))`.
    pub fn critical_voltage(&self) -> f64 {
        let vt = self.thermal_voltage;
        vt * (vt / (std::f64::consts::SQRT_2 * self.saturation_current)).ln()
    }

    /// Junction limiting of a Newton update `v_old -> v_new`: forward jumps
    /// past the critical voltage are compressed logarithmically.
    pub fn limit_update(&self, v_old: f64, v_new: f64) -> f64 {
        let vt = self.thermal_voltage;
        let vcrit = self.critical_voltage();
        if v_new <= vcrit || (v_new - v_old).abs() <= 2.0 * vt {
            return v_new;
        }
        if v_old > 0.0 {
            let arg = 1.0 + (v_new - v_old) / vt;
            if arg > 0.0 {
                v_old + vt * arg.ln()
            } else {
                vcrit
            }
        } else {
            vt * (v_new / vt).ln()
        }
    }

    /// Small-signal conductance at zero bias.
    pub fn zero_bias_conductance(&self) -> f64 {
        self.saturation_current / self.thermal_voltage + 1.0 / self.parallel_resistance
    }
}

/// Evaluates a linear branch `i = g v` or a diode branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ResistiveLaw {
    Linear { conductance: f64 },
    Diode(DiodeParams),
}

impl ResistiveLaw {
    pub fn eval(&self, v: f64) -> (f64, f64) {
        match self {
            ResistiveLaw::Linear { conductance } => (conductance * v, *conductance),
            ResistiveLaw::Diode(d) => d.eval(v),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diode_zero_bias() {
        let d = DiodeParams::default();
        let (i, g) = d.eval(0.0);
        assert_eq!(i, 0.0);
        assert_eq!(g, d.zero_bias_conductance());
        assert!((g - (1e-14 / 2.5e-2 + 1e-12)).abs() < 1e-26);
    }

    #[test]
    fn diode_at_vth_ln2() {
        // exp(ln 2) - 1 = 1, so i = Is + v / Rpar
        let d = DiodeParams::default();
        let v = 2.5e-2 * std::f64::consts::LN_2;
        let expected = 1e-14 + v / 1e12;
        let (i, _) = d.eval(v);
        assert!(((i - expected) / expected).abs() < 1e-12);
        assert!((i - 2.733e-14).abs() < 1e-17);
    }

    #[test]
    fn junction_limiting() {
        let d = DiodeParams::default();
        assert!((d.critical_voltage() - 0.025 * (0.025 / (2f64.sqrt() * 1e-14)).ln()).abs() < 1e-15);
        // small or reverse updates pass through
        assert_eq!(d.limit_update(0.5, 0.52), 0.52);
        assert_eq!(d.limit_update(0.5, -3.0), -3.0);
        // a large forward jump is compressed but still increases
        let v = d.limit_update(0.7, 5.0);
        assert!(v > 0.7 && v < 0.9, "{v}");
        let v = d.limit_update(-1.0, 5.0);
        assert!(v > 0.0 && v < 0.2, "{v}");
    }

    #[test]
    fn linear_ohm() {
        let law = ResistiveLaw::Linear { conductance: 0.1 };
        let (i, g) = law.eval(160.0);
        assert!((i - 16.0).abs() < 1e-12);
        assert_eq!(g, 0.1);
    }

    #[test]
    fn overflow_guard_is_finite_and_continuous() {
        let d = DiodeParams::default();
        let v_lim = DIODE_EXP_LIMIT * d.thermal_voltage;
        let (below, gb) = d.eval(v_lim * (1.0 - 1e-12));
        let (above, ga) = d.eval(v_lim * (1.0 + 1e-12));
        assert!(((above - below) / below).abs() < 1e-8);
        assert!(((ga - gb) / gb).abs() < 1e-8);
        let (i, g) = d.eval(1e6);
        assert!(i.is_finite() && g.is_finite());
    }
}
