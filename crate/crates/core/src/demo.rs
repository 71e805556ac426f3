//! Built-in scenarios: the transformer-fed full-wave rectifier and two
//! linear benchmarks.

use crate::circuit::{DiodeParams, NetlistElement, Waveform};
use crate::coupled::CoupledSystem;
use crate::error::{MonaError, Result};
use crate::field::{generate_transformer_mesh, FieldModel, TransformerParams};

/// Field reference that resolves to the generated transformer.
pub const BUILTIN_TRANSFORMER: &str = "builtin:transformer";

pub const SOURCE_AMPLITUDE: f64 = 160.0;
pub const SOURCE_FREQUENCY: f64 = 60.0;
pub const LOAD_RESISTANCE: f64 = 10.0;

/// Node of the rectifier's load; its flux potential is the default
/// convergence probe.
pub const RECTIFIER_LOAD_NODE: usize = 4;

/// Probes written by the rectifier demo.
pub const RECTIFIER_PROBES: [&str; 4] = ["v_src=v(src)", "v_R=v(load)", "i_src=i(src)", "psi4=psi(4)"];

/// Netlist of the demo, in the text format read by the command-line tool.
pub const RECTIFIER_NETLIST: &str = "\
# full-wave bridge rectifier fed by a two-winding field transformer
V src 1 0 SIN(160 60)
M xfmr 1 0 2 3 FIELD=builtin:transformer
D d1 2 4 IS=1e-14 VT=0.025 RP=1e12
D d2 3 4 IS=1e-14 VT=0.025 RP=1e12
D d3 0 2 IS=1e-14 VT=0.025 RP=1e12
D d4 0 3 IS=1e-14 VT=0.025 RP=1e12
R load 4 0 10
";

/// Source across the primary; the secondary feeds a diode bridge with a
/// resistive load between node 4 and ground.
pub fn rectifier_elements() -> Vec<NetlistElement> {
    let d = DiodeParams::default();
    vec![
        NetlistElement::voltage_source("src", 1, 0, Waveform::sine(SOURCE_AMPLITUDE, SOURCE_FREQUENCY)),
        NetlistElement::device("xfmr", &[(1, 0), (2, 3)], BUILTIN_TRANSFORMER),
        NetlistElement::diode("d1", 2, 4, d),
        NetlistElement::diode("d2", 3, 4, d),
        NetlistElement::diode("d3", 0, 2, d),
        NetlistElement::diode("d4", 0, 3, d),
        NetlistElement::resistor("load", 4, 0, LOAD_RESISTANCE),
    ]
}

/// Gauged field model of the generated transformer.
pub fn transformer_field(params: &TransformerParams) -> Result<FieldModel> {
    generate_transformer_mesh(params)?.build_field()
}

/// Resolves `builtin:transformer`; any other reference is an error.
pub fn builtin_field(reference: &str, params: &TransformerParams) -> Result<FieldModel> {
    if reference.eq_ignore_ascii_case(BUILTIN_TRANSFORMER) {
        transformer_field(params)
    } else {
        Err(MonaError::Config(format!("unknown built-in field `{reference}`")))
    }
}

pub fn rectifier(params: &TransformerParams) -> Result<CoupledSystem> {
    let field = transformer_field(params)?;
    CoupledSystem::from_elements(&rectifier_elements(), 4, |_| Ok(field.clone()))
}

/// Linear coupled benchmark: the transformer with a resistive load on the
/// secondary and a series resistor on the primary.
pub fn linear_transformer(params: &TransformerParams) -> Result<CoupledSystem> {
    let elements = vec![
        NetlistElement::voltage_source("src", 1, 0, Waveform::sine(SOURCE_AMPLITUDE, SOURCE_FREQUENCY)),
        NetlistElement::resistor("rs", 1, 2, 1.0),
        NetlistElement::device("xfmr", &[(2, 0), (3, 0)], BUILTIN_TRANSFORMER),
        NetlistElement::resistor("load", 3, 0, LOAD_RESISTANCE),
    ];
    let field = transformer_field(params)?;
    CoupledSystem::from_elements(&elements, 3, |_| Ok(field.clone()))
}

/// Series RLC driven by `sin(2 pi 10 t)`; the capacitor sits between node 3
/// and ground.
pub fn series_rlc() -> Result<CoupledSystem> {
    let elements = vec![
        NetlistElement::voltage_source("src", 1, 0, Waveform::sine(1.0, 10.0)),
        NetlistElement::resistor("r", 1, 2, 1.0),
        NetlistElement::inductor("l", 2, 3, 0.1),
        NetlistElement::capacitor("c", 3, 0, 1e-2),
    ];
    CoupledSystem::from_elements(&elements, 3, |r| {
        Err(MonaError::Config(format!("unexpected field `{r}`")))
    })
}
