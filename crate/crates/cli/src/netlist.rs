//! Line-oriented netlist text format.
//!
//! ```text
//! # comment
//! R name n+ n- <ohm>
//! C name n+ n- <farad>
//! L name n+ n- <henry>
//! V name n+ n- SIN(<amplitude> <frequency> [<phase>]) | DC <value>
//! I name n+ n- SIN(...) | DC <value>
//! D name anode cathode [IS=<A>] [VT=<V>] [RP=<ohm>]
//! M name w1+ w1- [w2+ w2- ...] FIELD=<mesh reference>
//! ```
//!
//! Keywords are case-insensitive. Node names are arbitrary tokens; `0` and
//! `gnd` denote ground and every other name gets the next free id in order
//! of first appearance.

use std::collections::HashSet;
use std::fmt::Write as _;

use mona_core::circuit::{DiodeParams, ElementParams, NetlistElement, NodeId, Waveform, GROUND};

use crate::error::{CliError, CliResult};

/// Parsed netlist: elements in file order plus the node name table.
#[derive(Debug, Clone, PartialEq)]
pub struct Netlist {
    pub elements: Vec<NetlistElement>,
    /// `node_names[id]`; entry 0 is ground.
    pub node_names: Vec<String>,
}

fn syntax(line: usize, msg: impl Into<String>) -> CliError {
    CliError::Syntax {
        line,
        msg: msg.into(),
    }
}

fn is_ground(name: &str) -> bool {
    name == "0" || name.eq_ignore_ascii_case("gnd")
}

fn number(tok: &str, line: usize, what: &str) -> CliResult<f64> {
    match tok.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(syntax(line, format!("cannot read {what} from `{tok}`"))),
    }
}

fn positive(tok: &str, line: usize, what: &str) -> CliResult<f64> {
    let v = number(tok, line, what)?;
    if v <= 0.0 {
        return Err(syntax(line, format!("{what} must be positive, got {v}")));
    }
    Ok(v)
}

/// `SIN(amp freq [phase])`, `DC value` or a bare number.
fn waveform(text: &str, line: usize) -> CliResult<Waveform> {
    let upper = text.trim().to_ascii_uppercase();
    if let Some(rest) = upper.strip_prefix("SIN") {
        let inner = rest
            .trim()
            .strip_prefix('(')
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(|| syntax(line, format!("expected SIN(<amplitude> <frequency> [<phase>]), got `{text}`")))?;
        let args: Vec<&str> = inner.split([' ', '\t', ',']).filter(|s| !s.is_empty()).collect();
        if !(2..=3).contains(&args.len()) {
            return Err(syntax(line, format!("SIN takes 2 or 3 arguments, got {}", args.len())));
        }
        return Ok(Waveform::Sine {
            amplitude: number(args[0], line, "amplitude")?,
            frequency: positive(args[1], line, "frequency")?,
            phase: args.get(2).map_or(Ok(0.0), |p| number(p, line, "phase"))?,
        });
    }
    let value = upper.strip_prefix("DC").unwrap_or(&upper).trim();
    if value.is_empty() || value.contains(char::is_whitespace) {
        return Err(syntax(line, format!("expected a source waveform, got `{text}`")));
    }
    Ok(Waveform::Dc(number(value, line, "source value")?))
}

fn diode_params(tokens: &[&str], line: usize) -> CliResult<DiodeParams> {
    let mut p = DiodeParams::default();
    for tok in tokens {
        let (key, value) = tok
            .split_once('=')
            .ok_or_else(|| syntax(line, format!("expected KEY=value, got `{tok}`")))?;
        match key.to_ascii_uppercase().as_str() {
            "IS" => p.saturation_current = positive(value, line, "IS")?,
            "VT" => p.thermal_voltage = positive(value, line, "VT")?,
            "RP" => p.parallel_resistance = positive(value, line, "RP")?,
            other => return Err(syntax(line, format!("unknown diode parameter `{other}`"))),
        }
    }
    Ok(p)
}

struct NodeTable {
    names: Vec<String>,
}

impl NodeTable {
    fn id(&mut self, name: &str) -> NodeId {
        if is_ground(name) {
            return GROUND;
        }
        if let Some(k) = self.names.iter().position(|n| n == name) {
            return k;
        }
        self.names.push(name.to_string());
        self.names.len() - 1
    }
}

fn two_nodes(tokens: &[&str], nodes: &mut NodeTable, line: usize) -> CliResult<(NodeId, NodeId)> {
    if tokens.len() < 4 {
        return Err(syntax(line, "expected `<type> <name> <node+> <node->` ..."));
    }
    Ok((nodes.id(tokens[2]), nodes.id(tokens[3])))
}

fn exact_len(tokens: &[&str], n: usize, line: usize, form: &str) -> CliResult<()> {
    if tokens.len() != n {
        return Err(syntax(line, format!("expected `{form}`")));
    }
    Ok(())
}

pub fn parse_netlist(text: &str) -> CliResult<Netlist> {
    let mut nodes = NodeTable {
        names: vec!["0".to_string()],
    };
    let mut elements = Vec::new();
    let mut seen = HashSet::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.split('#').next().unwrap_or("");
        let tokens: Vec<&str> = content.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        let kind = tokens[0].to_ascii_uppercase();
        let name = *tokens
            .get(1)
            .ok_or_else(|| syntax(line, format!("element `{}` has no name", tokens[0])))?;
        if !seen.insert(name.to_string()) {
            return Err(syntax(line, format!("duplicate element name `{name}`")));
        }
        let element = match kind.as_str() {
            "R" | "C" | "L" => {
                let (p, m) = two_nodes(&tokens, &mut nodes, line)?;
                exact_len(&tokens, 5, line, &format!("{kind} <name> <node+> <node-> <value>"))?;
                match kind.as_str() {
                    "R" => NetlistElement::resistor(name, p, m, positive(tokens[4], line, "resistance")?),
                    "C" => NetlistElement::capacitor(name, p, m, positive(tokens[4], line, "capacitance")?),
                    _ => NetlistElement::inductor(name, p, m, positive(tokens[4], line, "inductance")?),
                }
            }
            "V" | "I" => {
                let (p, m) = two_nodes(&tokens, &mut nodes, line)?;
                if tokens.len() < 5 {
                    return Err(syntax(line, format!("source `{name}` has no waveform")));
                }
                let wave = waveform(&tokens[4..].join(" "), line)?;
                if kind == "V" {
                    NetlistElement::voltage_source(name, p, m, wave)
                } else {
                    NetlistElement::current_source(name, p, m, wave)
                }
            }
            "D" => {
                let (p, m) = two_nodes(&tokens, &mut nodes, line)?;
                NetlistElement::diode(name, p, m, diode_params(&tokens[4..], line)?)
            }
            "M" => {
                let field_pos = tokens
                    .iter()
                    .position(|t| t.to_ascii_uppercase().starts_with("FIELD="))
                    .ok_or_else(|| syntax(line, format!("device `{name}` has no FIELD= reference")))?;
                if field_pos + 1 != tokens.len() {
                    return Err(syntax(line, "FIELD= must be the last token of a device line"));
                }
                let field = &tokens[field_pos]["FIELD=".len()..];
                if field.is_empty() {
                    return Err(syntax(line, format!("device `{name}` has an empty FIELD= reference")));
                }
                let terminals = &tokens[2..field_pos];
                if terminals.is_empty() || !terminals.len().is_multiple_of(2) {
                    return Err(syntax(
                        line,
                        format!("device `{name}` needs node pairs, got {} nodes", terminals.len()),
                    ));
                }
                let pairs: Vec<(NodeId, NodeId)> = terminals
                    .chunks(2)
                    .map(|c| (nodes.id(c[0]), nodes.id(c[1])))
                    .collect();
                NetlistElement::device(name, &pairs, field)
            }
            _ => return Err(syntax(line, format!("unknown element type `{}`", tokens[0]))),
        };
        elements.push(element);
    }
    Ok(Netlist {
        elements,
        node_names: nodes.names,
    })
}

/// Shortest decimal that reads back to the same `f64`.
fn fmt_num(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-3..1e6).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn fmt_wave(w: &Waveform) -> String {
    match *w {
        Waveform::Dc(v) => format!("DC {}", fmt_num(v)),
        Waveform::Sine {
            amplitude,
            frequency,
            phase: 0.0,
        } => format!("SIN({} {})", fmt_num(amplitude), fmt_num(frequency)),
        Waveform::Sine {
            amplitude,
            frequency,
            phase,
        } => format!("SIN({} {} {})", fmt_num(amplitude), fmt_num(frequency), fmt_num(phase)),
    }
}

impl Netlist {
    /// Number of non-ground nodes.
    pub fn n_nodes(&self) -> usize {
        self.node_names.len() - 1
    }

    /// Canonical text; parsing it gives back an equal netlist.
    pub fn to_text(&self) -> String {
        let node = |n: NodeId| self.node_names[n].as_str();
        let mut out = String::new();
        for el in &self.elements {
            let nodes: Vec<&str> = el.nodes.iter().map(|&n| node(n)).collect();
            let nodes = nodes.join(" ");
            let rest = match &el.params {
                ElementParams::Resistor { resistance } => fmt_num(*resistance),
                ElementParams::Capacitor { capacitance } => fmt_num(*capacitance),
                ElementParams::Inductor { inductance } => fmt_num(*inductance),
                ElementParams::VoltageSource(w) | ElementParams::CurrentSource(w) => fmt_wave(w),
                ElementParams::Diode(p) => format!(
                    "IS={} VT={} RP={}",
                    fmt_num(p.saturation_current),
                    fmt_num(p.thermal_voltage),
                    fmt_num(p.parallel_resistance)
                ),
                ElementParams::Device { field, .. } => format!("FIELD={field}"),
            };
            let _ = writeln!(out, "{} {} {nodes} {rest}", el.kind(), el.name);
        }
        out
    }
}

impl std::str::FromStr for Netlist {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        parse_netlist(s)
    }
}
