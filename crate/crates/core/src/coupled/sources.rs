use nalgebra::DVector;

use crate::circuit::{ElementParams, NetlistElement, Waveform};

/// Independent source waveforms, in branch order of `A_V` and `A_I`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SourceSet {
    pub voltage: Vec<Waveform>,
    pub current: Vec<Waveform>,
}

impl SourceSet {
    pub fn from_elements(elements: &[NetlistElement]) -> Self {
        let mut s = SourceSet::default();
        for el in elements {
            match el.params {
                ElementParams::VoltageSource(w) => s.voltage.push(w),
                ElementParams::CurrentSource(w) => s.current.push(w),
                _ => {}
            }
        }
        s
    }

    pub fn v_src(&self, t: f64) -> DVector<f64> {
        DVector::from_iterator(self.voltage.len(), self.voltage.iter().map(|w| w.value(t)))
    }

    pub fn i_src(&self, t: f64) -> DVector<f64> {
        DVector::from_iterator(self.current.len(), self.current.iter().map(|w| w.value(t)))
    }

    /// Same topology, every source set to zero.
    pub fn switched_off(&self) -> Self {
        SourceSet {
            voltage: vec![Waveform::Dc(0.0); self.voltage.len()],
            current: vec![Waveform::Dc(0.0); self.current.len()],
        }
    }
}
