use std::f64::consts::PI;
use std::fmt;

use super::DiodeParams;

/// Node index; 0 is ground.
pub type NodeId = usize;

pub const GROUND: NodeId = 0;

/// Time-dependent value of an independent source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Waveform {
    Dc(f64),
    /// `amplitude * sin(2*pi*frequency*t + phase)`
    Sine {
        amplitude: f64,
        frequency: f64,
        phase: f64,
    },
}

impl Waveform {
    pub fn sine(amplitude: f64, frequency: f64) -> Self {
        Waveform::Sine {
            amplitude,
            frequency,
            phase: 0.0,
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        match *self {
            Waveform::Dc(v) => v,
            Waveform::Sine {
                amplitude,
                frequency,
                phase,
            } => amplitude * (2.0 * PI * frequency * t + phase).sin(),
        }
    }

    /// Upper bound on `|value(t)|` over all t.
    pub fn peak(&self) -> f64 {
        match *self {
            Waveform::Dc(v) => v.abs(),
            Waveform::Sine { amplitude, .. } => amplitude.abs(),
        }
    }

    pub fn is_finite(&self) -> bool {
        match *self {
            Waveform::Dc(v) => v.is_finite(),
            Waveform::Sine {
                amplitude,
                frequency,
                phase,
            } => amplitude.is_finite() && frequency.is_finite() && phase.is_finite(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ElementKind {
    Resistor,
    Capacitor,
    Inductor,
    VoltageSource,
    CurrentSource,
    Diode,
    Device,
}

impl ElementKind {
    pub fn letter(self) -> char {
        match self {
            ElementKind::Resistor => 'R',
            ElementKind::Capacitor => 'C',
            ElementKind::Inductor => 'L',
            ElementKind::VoltageSource => 'V',
            ElementKind::CurrentSource => 'I',
            ElementKind::Diode => 'D',
            ElementKind::Device => 'M',
        }
    }
}

impl fmt::Display for ElementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ElementParams {
    /// Stored as given by the user; the graph works with `1 / resistance`.
    Resistor { resistance: f64 },
    Capacitor { capacitance: f64 },
    Inductor { inductance: f64 },
    VoltageSource(Waveform),
    CurrentSource(Waveform),
    Diode(DiodeParams),
    /// Field device; `field` names the mesh it is discretized on.
    Device { field: String, windings: usize },
}

/// One line of a netlist.
///
/// Two-terminal elements carry `[node_plus, node_minus]` in `nodes`. A device
/// carries `2 * windings` terminals, one `(plus, minus)` pair per winding.
#[derive(Debug, Clone, PartialEq)]
pub struct NetlistElement {
    pub name: String,
    pub nodes: Vec<NodeId>,
    pub params: ElementParams,
}

impl NetlistElement {
    fn two_terminal(name: &str, plus: NodeId, minus: NodeId, params: ElementParams) -> Self {
        NetlistElement {
            name: name.to_string(),
            nodes: vec![plus, minus],
            params,
        }
    }

    pub fn resistor(name: &str, plus: NodeId, minus: NodeId, resistance: f64) -> Self {
        Self::two_terminal(name, plus, minus, ElementParams::Resistor { resistance })
    }

    pub fn capacitor(name: &str, plus: NodeId, minus: NodeId, capacitance: f64) -> Self {
        Self::two_terminal(name, plus, minus, ElementParams::Capacitor { capacitance })
    }

    pub fn inductor(name: &str, plus: NodeId, minus: NodeId, inductance: f64) -> Self {
        Self::two_terminal(name, plus, minus, ElementParams::Inductor { inductance })
    }

    pub fn voltage_source(name: &str, plus: NodeId, minus: NodeId, wave: Waveform) -> Self {
        Self::two_terminal(name, plus, minus, ElementParams::VoltageSource(wave))
    }

    pub fn current_source(name: &str, plus: NodeId, minus: NodeId, wave: Waveform) -> Self {
        Self::two_terminal(name, plus, minus, ElementParams::CurrentSource(wave))
    }

    pub fn diode(name: &str, anode: NodeId, cathode: NodeId, params: DiodeParams) -> Self {
        Self::two_terminal(name, anode, cathode, ElementParams::Diode(params))
    }

    /// `terminals` lists `(plus, minus)` per winding.
    pub fn device(name: &str, terminals: &[(NodeId, NodeId)], field: &str) -> Self {
        NetlistElement {
            name: name.to_string(),
            nodes: terminals.iter().flat_map(|&(p, m)| [p, m]).collect(),
            params: ElementParams::Device {
                field: field.to_string(),
                windings: terminals.len(),
            },
        }
    }

    pub fn kind(&self) -> ElementKind {
        match self.params {
            ElementParams::Resistor { .. } => ElementKind::Resistor,
            ElementParams::Capacitor { .. } => ElementKind::Capacitor,
            ElementParams::Inductor { .. } => ElementKind::Inductor,
            ElementParams::VoltageSource(_) => ElementKind::VoltageSource,
            ElementParams::CurrentSource(_) => ElementKind::CurrentSource,
            ElementParams::Diode(_) => ElementKind::Diode,
            ElementParams::Device { .. } => ElementKind::Device,
        }
    }

    /// `(plus, minus)` node pairs, one per branch this element contributes.
    pub fn branches(&self) -> Vec<(NodeId, NodeId)> {
        self.nodes.chunks(2).map(|c| (c[0], c[1])).collect()
    }
}
