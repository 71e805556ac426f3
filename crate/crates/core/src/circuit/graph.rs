use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use super::element::{ElementKind, ElementParams, NetlistElement, NodeId, GROUND};
use super::topology::UnionFind;
use super::{DiodeParams, ResistiveLaw};
use crate::error::{MonaError, Result};

/// Identifies one branch column of the incidence matrix for `kind`.
///
/// Device branches are windings; an `M` element with `k` windings owns `k`
/// consecutive columns of `A_M`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BranchRef {
    pub kind: ElementKind,
    pub index: usize,
}

/// Terminal block of one field device inside `A_M`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceTerminals {
    pub element: String,
    pub field: String,
    pub first_column: usize,
    pub windings: usize,
}

/// Circuit topology as reduced incidence matrices plus diagonal element data.
///
/// Each `a_*` matrix is `n_nodes x n_branches(kind)`; the ground row is
/// dropped. Linear resistors (`a_r`) and diodes (`a_d`) form the resistive
/// partition.
#[derive(Debug, Clone)]
pub struct CircuitGraph {
    pub n_nodes: usize,
    pub node_names: Vec<String>,
    pub a_r: DMatrix<f64>,
    pub a_d: DMatrix<f64>,
    pub a_c: DMatrix<f64>,
    pub a_l: DMatrix<f64>,
    pub a_v: DMatrix<f64>,
    pub a_i: DMatrix<f64>,
    pub a_m: DMatrix<f64>,
    pub conductance: Vec<f64>,
    pub diodes: Vec<DiodeParams>,
    pub capacitance: Vec<f64>,
    pub inv_inductance: Vec<f64>,
    pub devices: Vec<DeviceTerminals>,
    names: HashMap<ElementKind, Vec<String>>,
    lookup: HashMap<String, BranchRef>,
    endpoints: HashMap<ElementKind, Vec<(NodeId, NodeId)>>,
}

const KINDS: [ElementKind; 7] = [
    ElementKind::Resistor,
    ElementKind::Diode,
    ElementKind::Capacitor,
    ElementKind::Inductor,
    ElementKind::VoltageSource,
    ElementKind::CurrentSource,
    ElementKind::Device,
];

fn check_positive(element: &str, param: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(MonaError::NonPositiveParameter {
            element: element.to_string(),
            param,
            value,
        })
    }
}

fn check_params(el: &NetlistElement) -> Result<()> {
    let name = el.name.as_str();
    match &el.params {
        ElementParams::Resistor { resistance } => check_positive(name, "R", *resistance),
        ElementParams::Capacitor { capacitance } => check_positive(name, "C", *capacitance),
        ElementParams::Inductor { inductance } => check_positive(name, "L", *inductance),
        ElementParams::Diode(d) => {
            check_positive(name, "IS", d.saturation_current)?;
            check_positive(name, "VT", d.thermal_voltage)?;
            check_positive(name, "RP", d.parallel_resistance)
        }
        ElementParams::VoltageSource(w) | ElementParams::CurrentSource(w) => {
            if w.is_finite() {
                Ok(())
            } else {
                Err(MonaError::NonFinite("source waveform"))
            }
        }
        ElementParams::Device { windings, .. } => {
            if *windings == 0 {
                Err(MonaError::TerminalCount {
                    element: name.to_string(),
                    got: el.nodes.len(),
                    expected: "at least 2".into(),
                })
            } else {
                Ok(())
            }
        }
    }
}

/// Stamps the reduced incidence matrices for `elements` on nodes `0..=n_nodes`.
pub fn build_incidence(elements: &[NetlistElement], n_nodes: usize) -> Result<CircuitGraph> {
    if elements.is_empty() {
        return Err(MonaError::EmptyCircuit);
    }

    let mut seen = HashMap::new();
    let mut endpoints: HashMap<ElementKind, Vec<(NodeId, NodeId)>> = HashMap::new();
    let mut names: HashMap<ElementKind, Vec<String>> = HashMap::new();
    let mut lookup = HashMap::new();
    let mut conductance = Vec::new();
    let mut diodes = Vec::new();
    let mut capacitance = Vec::new();
    let mut inv_inductance = Vec::new();
    let mut devices = Vec::new();

    for el in elements {
        if seen.insert(el.name.clone(), ()).is_some() {
            return Err(MonaError::DuplicateName(el.name.clone()));
        }
        let expected = match &el.params {
            ElementParams::Device { windings, .. } => 2 * windings,
            _ => 2,
        };
        if el.nodes.len() != expected || expected == 0 {
            return Err(MonaError::TerminalCount {
                element: el.name.clone(),
                got: el.nodes.len(),
                expected: expected.max(2).to_string(),
            });
        }
        if let Some(&node) = el.nodes.iter().find(|&&n| n > n_nodes) {
            return Err(MonaError::UnknownNode {
                element: el.name.clone(),
                node,
                n_nodes,
            });
        }
        check_params(el)?;

        let kind = el.kind();
        let ends = endpoints.entry(kind).or_default();
        let branch_names = names.entry(kind).or_default();
        for (w, (p, m)) in el.branches().into_iter().enumerate() {
            if p == m {
                return Err(MonaError::SelfLoop(el.name.clone()));
            }
            let branch_name = if kind == ElementKind::Device {
                format!("{}.{}", el.name, w + 1)
            } else {
                el.name.clone()
            };
            lookup.insert(
                branch_name.clone(),
                BranchRef {
                    kind,
                    index: ends.len(),
                },
            );
            ends.push((p, m));
            branch_names.push(branch_name);
        }

        match &el.params {
            ElementParams::Resistor { resistance } => conductance.push(1.0 / resistance),
            ElementParams::Capacitor { capacitance: c } => capacitance.push(*c),
            ElementParams::Inductor { inductance } => inv_inductance.push(1.0 / inductance),
            ElementParams::Diode(d) => diodes.push(*d),
            ElementParams::Device { field, windings } => {
                let first_column = ends.len() - windings;
                devices.push(DeviceTerminals {
                    element: el.name.clone(),
                    field: field.clone(),
                    first_column,
                    windings: *windings,
                });
                // the device name itself resolves to its first winding
                lookup.insert(
                    el.name.clone(),
                    BranchRef {
                        kind,
                        index: first_column,
                    },
                );
            }
            ElementParams::VoltageSource(_) | ElementParams::CurrentSource(_) => {}
        }
    }

    // ground reachability over all branches
    let mut uf = UnionFind::new(n_nodes + 1);
    for ends in endpoints.values() {
        for &(p, m) in ends {
            uf.union(p, m);
        }
    }
    let floating: Vec<String> = (1..=n_nodes)
        .filter(|&n| uf.find(n) != uf.find(GROUND))
        .map(|n| n.to_string())
        .collect();
    if !floating.is_empty() {
        return Err(MonaError::Disconnected(floating));
    }

    let stamp = |kind: ElementKind| -> DMatrix<f64> {
        let ends = endpoints.get(&kind).map(Vec::as_slice).unwrap_or(&[]);
        let mut a = DMatrix::zeros(n_nodes, ends.len());
        for (k, &(p, m)) in ends.iter().enumerate() {
            if p != GROUND {
                a[(p - 1, k)] = 1.0;
            }
            if m != GROUND {
                a[(m - 1, k)] = -1.0;
            }
        }
        a
    };

    Ok(CircuitGraph {
        n_nodes,
        node_names: (0..=n_nodes).map(|n| n.to_string()).collect(),
        a_r: stamp(ElementKind::Resistor),
        a_d: stamp(ElementKind::Diode),
        a_c: stamp(ElementKind::Capacitor),
        a_l: stamp(ElementKind::Inductor),
        a_v: stamp(ElementKind::VoltageSource),
        a_i: stamp(ElementKind::CurrentSource),
        a_m: stamp(ElementKind::Device),
        conductance,
        diodes,
        capacitance,
        inv_inductance,
        devices,
        names,
        lookup,
        endpoints,
    })
}

impl CircuitGraph {
    /// A circuit with no nodes whose only content is `windings` device
    /// columns. Used to drive a field device with prescribed currents.
    pub fn device_only(windings: usize) -> Self {
        let mut names = HashMap::new();
        let mut lookup = HashMap::new();
        let wnames: Vec<String> = (0..windings).map(|w| format!("M.{}", w + 1)).collect();
        for (w, n) in wnames.iter().enumerate() {
            lookup.insert(
                n.clone(),
                BranchRef {
                    kind: ElementKind::Device,
                    index: w,
                },
            );
        }
        names.insert(ElementKind::Device, wnames);
        CircuitGraph {
            n_nodes: 0,
            node_names: vec!["0".into()],
            a_r: DMatrix::zeros(0, 0),
            a_d: DMatrix::zeros(0, 0),
            a_c: DMatrix::zeros(0, 0),
            a_l: DMatrix::zeros(0, 0),
            a_v: DMatrix::zeros(0, 0),
            a_i: DMatrix::zeros(0, 0),
            a_m: DMatrix::zeros(0, windings),
            conductance: vec![],
            diodes: vec![],
            capacitance: vec![],
            inv_inductance: vec![],
            devices: vec![DeviceTerminals {
                element: "M".into(),
                field: String::new(),
                first_column: 0,
                windings,
            }],
            names,
            lookup,
            endpoints: HashMap::new(),
        }
    }

    /// Replaces the default numeric node names (index 0 is ground).
    pub fn with_node_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.n_nodes + 1 {
            return Err(MonaError::Dimension(format!(
                "{} node names for {} nodes",
                names.len(),
                self.n_nodes + 1
            )));
        }
        self.node_names = names;
        Ok(self)
    }

    pub fn node_id(&self, name: &str) -> Option<NodeId> {
        self.node_names.iter().position(|n| n == name)
    }

    pub fn branch(&self, name: &str) -> Option<BranchRef> {
        self.lookup.get(name).copied()
    }

    pub fn branch_names(&self, kind: ElementKind) -> &[String] {
        self.names.get(&kind).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn branch_name(&self, b: BranchRef) -> &str {
        &self.branch_names(b.kind)[b.index]
    }

    /// `(plus, minus)` node pairs of all branches of `kind`, in column order.
    pub fn endpoints(&self, kind: ElementKind) -> &[(NodeId, NodeId)] {
        self.endpoints.get(&kind).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn incidence(&self, kind: ElementKind) -> &DMatrix<f64> {
        match kind {
            ElementKind::Resistor => &self.a_r,
            ElementKind::Diode => &self.a_d,
            ElementKind::Capacitor => &self.a_c,
            ElementKind::Inductor => &self.a_l,
            ElementKind::VoltageSource => &self.a_v,
            ElementKind::CurrentSource => &self.a_i,
            ElementKind::Device => &self.a_m,
        }
    }

    pub fn all_kinds() -> &'static [ElementKind] {
        &KINDS
    }

    pub fn n_linear(&self) -> usize {
        self.a_r.ncols()
    }
    pub fn n_diodes(&self) -> usize {
        self.a_d.ncols()
    }
    pub fn n_resistive(&self) -> usize {
        self.n_linear() + self.n_diodes()
    }
    pub fn n_c(&self) -> usize {
        self.a_c.ncols()
    }
    pub fn n_l(&self) -> usize {
        self.a_l.ncols()
    }
    pub fn n_v(&self) -> usize {
        self.a_v.ncols()
    }
    pub fn n_i(&self) -> usize {
        self.a_i.ncols()
    }
    pub fn n_m(&self) -> usize {
        self.a_m.ncols()
    }

    /// Law of resistive branch `k` in the order `[linear..., diodes...]`.
    pub fn resistive_law(&self, k: usize) -> ResistiveLaw {
        if k < self.n_linear() {
            ResistiveLaw::Linear {
                conductance: self.conductance[k],
            }
        } else {
            ResistiveLaw::Diode(self.diodes[k - self.n_linear()])
        }
    }

    /// Branch voltages `[A_R; A_D]^T u` of the resistive partition.
    pub fn resistive_voltages(&self, u: &DVector<f64>) -> DVector<f64> {
        let mut v = DVector::zeros(self.n_resistive());
        v.rows_mut(0, self.n_linear()).copy_from(&self.a_r.tr_mul(u));
        v.rows_mut(self.n_linear(), self.n_diodes())
            .copy_from(&self.a_d.tr_mul(u));
        v
    }

    /// Node current injection `[A_R A_D] i` of the resistive partition.
    pub fn resistive_injection(&self, i: &DVector<f64>) -> DVector<f64> {
        let nl = self.n_linear();
        &self.a_r * i.rows(0, nl) + &self.a_d * i.rows(nl, self.n_diodes())
    }
}

/// Branch currents and differential conductances of the resistive partition
/// (linear branches first, then diodes) at branch voltages `v`.
pub fn resistive_branch_current(
    graph: &CircuitGraph,
    v: &DVector<f64>,
) -> Result<(DVector<f64>, DVector<f64>)> {
    if v.len() != graph.n_resistive() {
        return Err(MonaError::Dimension(format!(
            "{} resistive branch voltages for {} branches",
            v.len(),
            graph.n_resistive()
        )));
    }
    let mut i = DVector::zeros(v.len());
    let mut g = DVector::zeros(v.len());
    for k in 0..v.len() {
        let (ik, gk) = graph.resistive_law(k).eval(v[k]);
        i[k] = ik;
        g[k] = gk;
    }
    Ok((i, g))
}

/// `sum_k i_k(v_k) v_k` over the resistive partition.
pub fn dissipation(graph: &CircuitGraph, v: &DVector<f64>) -> Result<f64> {
    let (i, _) = resistive_branch_current(graph, v)?;
    Ok(i.dot(v))
}

/// Energy stored in inductors and capacitors,
/// `1/2 |A_L^T psi|^2_{L^-1} + 1/2 |q_C|^2_{C^-1}`.
pub fn circuit_energy(graph: &CircuitGraph, psi: &DVector<f64>, q_c: &DVector<f64>) -> Result<f64> {
    if psi.len() != graph.n_nodes || q_c.len() != graph.n_c() {
        return Err(MonaError::Dimension(format!(
            "state ({}, {}) for graph with {} nodes and {} capacitors",
            psi.len(),
            q_c.len(),
            graph.n_nodes,
            graph.n_c()
        )));
    }
    let phi_l = graph.a_l.tr_mul(psi);
    let inductive: f64 = phi_l
        .iter()
        .zip(&graph.inv_inductance)
        .map(|(phi, linv)| linv * phi * phi)
        .sum();
    let capacitive: f64 = q_c
        .iter()
        .zip(&graph.capacitance)
        .map(|(q, c)| q * q / c)
        .sum();
    Ok(0.5 * (inductive + capacitive))
}
