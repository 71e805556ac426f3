use nalgebra::{DMatrix, DVector};

use super::layout::{Block, BlockLayout};
use super::sources::SourceSet;
use crate::circuit::{
    build_incidence, validate_topology, CircuitGraph, ElementParams, NetlistElement,
};
use crate::error::{MonaError, Result};
use crate::field::FieldModel;

/// Power terms of the balance `dH/dt = -losses - source terms`.
///
/// `residual` is `dH_dt + resistive_loss + eddy_loss + source_power_i +
/// source_power_v`; it vanishes on solutions.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PowerBreakdown {
    pub dh_dt: f64,
    pub resistive_loss: f64,
    pub eddy_loss: f64,
    /// `<A_I^T dpsi/dt, i_src>`
    pub source_power_i: f64,
    /// `<v_src, dq_V/dt>`
    pub source_power_v: f64,
    pub residual: f64,
}

impl PowerBreakdown {
    pub(crate) fn new(
        dh_dt: f64,
        resistive_loss: f64,
        eddy_loss: f64,
        source_power_i: f64,
        source_power_v: f64,
    ) -> Self {
        PowerBreakdown {
            dh_dt,
            resistive_loss,
            eddy_loss,
            source_power_i,
            source_power_v,
            residual: dh_dt + resistive_loss + eddy_loss + source_power_i + source_power_v,
        }
    }

    /// Power delivered by the sources into the circuit.
    pub fn supplied(&self) -> f64 {
        -(self.source_power_i + self.source_power_v)
    }
}

/// Field device and lumped circuit coupled through winding terminals:
///
/// ```text
/// A_R i_R(A_R^T psi') + A_C q_C' + A_V q_V' + A_M q_M' + A_L L^-1 A_L^T psi + A_I i_src = 0
/// -A_C^T psi' + C^-1 q_C = 0
/// -A_V^T psi' + v_src = 0
/// -A_M^T psi' + X^T a' = 0
/// M a' + K a - X q_M' = 0
/// ```
#[derive(Debug, Clone)]
pub struct CoupledSystem {
    pub graph: CircuitGraph,
    pub field: FieldModel,
    pub sources: SourceSet,
    pub layout: BlockLayout,
    /// Winding matrix with column `j` bound to `A_M` column `j`.
    pub coupling: DMatrix<f64>,
}

/// Builds the coupled system; `terminal_map[j]` is the winding (column of
/// the field's `X`) driven by device branch `j`.
pub fn assemble_coupled(
    graph: CircuitGraph,
    field: FieldModel,
    sources: SourceSet,
    terminal_map: &[usize],
) -> Result<CoupledSystem> {
    let report = validate_topology(&graph);
    if !report.passed() {
        return Err(MonaError::Topology(report.to_string()));
    }
    if terminal_map.len() != graph.n_m() {
        return Err(MonaError::TerminalMap(format!(
            "{} device branches but {} terminal bindings",
            graph.n_m(),
            terminal_map.len()
        )));
    }
    let nw = field.n_windings();
    let mut used = vec![false; nw];
    for (j, &w) in terminal_map.iter().enumerate() {
        if w >= nw {
            return Err(MonaError::TerminalMap(format!(
                "device branch {j} bound to winding {w}, field has {nw}"
            )));
        }
        if std::mem::replace(&mut used[w], true) {
            return Err(MonaError::TerminalMap(format!("winding {w} bound twice")));
        }
    }
    if let Some(w) = used.iter().position(|u| !u) {
        return Err(MonaError::TerminalMap(format!(
            "winding {w} is not connected to any device terminal"
        )));
    }
    if sources.voltage.len() != graph.n_v() || sources.current.len() != graph.n_i() {
        return Err(MonaError::Dimension(format!(
            "{} / {} source waveforms for {} voltage and {} current sources",
            sources.voltage.len(),
            sources.current.len(),
            graph.n_v(),
            graph.n_i()
        )));
    }
    let mut coupling = DMatrix::zeros(field.n_dofs(), graph.n_m());
    for (j, &w) in terminal_map.iter().enumerate() {
        coupling.set_column(j, &field.coupling.column(w));
    }
    let layout = BlockLayout {
        n_nodes: graph.n_nodes,
        n_c: graph.n_c(),
        n_v: graph.n_v(),
        n_m: graph.n_m(),
        n_a: field.n_dofs(),
    };
    log::debug!("coupled layout {layout:?}");
    Ok(CoupledSystem {
        graph,
        field,
        sources,
        layout,
        coupling,
    })
}

impl CoupledSystem {
    /// Builds graph, sources and field from netlist elements. Each device
    /// element gets the model returned by `resolve(field_ref)`, stacked in
    /// element order, windings bound in terminal order.
    pub fn from_elements(
        elements: &[NetlistElement],
        n_nodes: usize,
        mut resolve: impl FnMut(&str) -> Result<FieldModel>,
    ) -> Result<Self> {
        let graph = build_incidence(elements, n_nodes)?;
        let mut models = Vec::new();
        for el in elements {
            if let ElementParams::Device { field, windings } = &el.params {
                let model = resolve(field)?;
                if model.n_windings() != *windings {
                    return Err(MonaError::TerminalMap(format!(
                        "device `{}` has {windings} terminal pairs but field `{field}` has {} windings",
                        el.name,
                        model.n_windings()
                    )));
                }
                models.push(model);
            }
        }
        let field = match models.len() {
            0 => FieldModel::empty(),
            1 => models.pop().unwrap(),
            _ => FieldModel::stack(models),
        };
        let map: Vec<usize> = (0..graph.n_m()).collect();
        assemble_coupled(graph, field, SourceSet::from_elements(elements), &map)
    }

    /// Lumped circuit without field devices.
    pub fn circuit_only(graph: CircuitGraph, sources: SourceSet) -> Result<Self> {
        assemble_coupled(graph, FieldModel::empty(), sources, &[])
    }

    /// Field device alone; its terminal charges are states with no circuit
    /// equation, so prescribing `dq_M/dt` reproduces the driven field problem.
    pub fn field_only(field: FieldModel) -> Result<Self> {
        let n = field.n_windings();
        let map: Vec<usize> = (0..n).collect();
        assemble_coupled(CircuitGraph::device_only(n), field, SourceSet::default(), &map)
    }

    /// Replaces the default numeric node names; `names[0]` is ground.
    pub fn with_node_names(mut self, names: Vec<String>) -> Result<Self> {
        self.graph = self.graph.with_node_names(names)?;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.layout.total()
    }

    pub fn zero_state(&self) -> DVector<f64> {
        DVector::zeros(self.dim())
    }

    fn check(&self, v: &DVector<f64>, what: &'static str) -> Result<()> {
        if v.len() != self.dim() {
            return Err(MonaError::Dimension(format!(
                "{what} has length {}, system has {}",
                v.len(),
                self.dim()
            )));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(MonaError::NonFinite(what));
        }
        Ok(())
    }

    /// Resistive branch voltages, currents and conductances for node rates `u`.
    fn resistive(&self, w: &DVector<f64>) -> (DVector<f64>, DVector<f64>, DVector<f64>) {
        let u = self.layout.view(w, Block::Psi).into_owned();
        let v = self.graph.resistive_voltages(&u);
        let mut i = DVector::zeros(v.len());
        let mut g = DVector::zeros(v.len());
        for k in 0..v.len() {
            let (ik, gk) = self.graph.resistive_law(k).eval(v[k]);
            i[k] = ik;
            g[k] = gk;
        }
        (v, i, g)
    }

    /// Dissipation and coupling operator `C(w)`; monotone in `w`.
    pub fn dissipation_operator(&self, w: &DVector<f64>) -> DVector<f64> {
        let l = &self.layout;
        let g = &self.graph;
        let w_psi = l.view(w, Block::Psi);
        let w_c = l.view(w, Block::ChargeC);
        let w_v = l.view(w, Block::ChargeV);
        let w_m = l.view(w, Block::ChargeM);
        let w_a = l.view(w, Block::Field);
        let (_, i_res, _) = self.resistive(w);

        let mut out = DVector::zeros(self.dim());
        let kcl = g.resistive_injection(&i_res) + &g.a_c * w_c + &g.a_v * w_v + &g.a_m * w_m;
        out.rows_mut(l.offset(Block::Psi), l.n_nodes).copy_from(&kcl);
        out.rows_mut(l.offset(Block::ChargeC), l.n_c)
            .copy_from(&(-g.a_c.tr_mul(&w_psi)));
        out.rows_mut(l.offset(Block::ChargeV), l.n_v)
            .copy_from(&(-g.a_v.tr_mul(&w_psi)));
        out.rows_mut(l.offset(Block::ChargeM), l.n_m)
            .copy_from(&(self.coupling.tr_mul(&w_a) - g.a_m.tr_mul(&w_psi)));
        if l.n_a > 0 {
            let w_a = w_a.into_owned();
            let field = &self.field.mass * &w_a - &self.coupling * w_m;
            out.rows_mut(l.offset(Block::Field), l.n_a).copy_from(&field);
        }
        out
    }

    /// Gradient of the stored energy.
    pub fn energy_gradient(&self, y: &DVector<f64>) -> DVector<f64> {
        let l = &self.layout;
        let g = &self.graph;
        let mut out = DVector::zeros(self.dim());
        let psi = l.view(y, Block::Psi);
        let mut phi_l = g.a_l.tr_mul(&psi);
        phi_l
            .iter_mut()
            .zip(&g.inv_inductance)
            .for_each(|(p, linv)| *p *= linv);
        out.rows_mut(0, l.n_nodes).copy_from(&(&g.a_l * phi_l));
        let qc = l.view(y, Block::ChargeC);
        for k in 0..l.n_c {
            out[l.offset(Block::ChargeC) + k] = qc[k] / g.capacitance[k];
        }
        if l.n_a > 0 {
            let a = l.view(y, Block::Field).into_owned();
            out.rows_mut(l.offset(Block::Field), l.n_a)
                .copy_from(&(&self.field.stiffness * &a));
        }
        out
    }

    /// Right-hand side `f(t)`: `-A_I i_src` in the KCL rows, `-v_src` in the
    /// voltage-source rows.
    pub fn source_vector(&self, t: f64) -> DVector<f64> {
        let l = &self.layout;
        let mut out = DVector::zeros(self.dim());
        if l.n_nodes > 0 {
            out.rows_mut(0, l.n_nodes)
                .copy_from(&(-(&self.graph.a_i * self.sources.i_src(t))));
        }
        out.rows_mut(l.offset(Block::ChargeV), l.n_v)
            .copy_from(&(-self.sources.v_src(t)));
        out
    }

    /// `C(ydot) + dH/dy(y) - f(t)`.
    pub fn residual(&self, y: &DVector<f64>, ydot: &DVector<f64>, t: f64) -> Result<DVector<f64>> {
        self.check(y, "state")?;
        self.check(ydot, "state rate")?;
        if !t.is_finite() {
            return Err(MonaError::NonFinite("time"));
        }
        Ok(self.dissipation_operator(ydot) + self.energy_gradient(y) - self.source_vector(t))
    }

    /// Stored energy `1/2 (|A_L^T psi|^2_{L^-1} + |q_C|^2_{C^-1} + |a|^2_K)`.
    pub fn energy(&self, y: &DVector<f64>) -> f64 {
        let l = &self.layout;
        let psi = l.view(y, Block::Psi).into_owned();
        let qc = l.view(y, Block::ChargeC).into_owned();
        let circuit = crate::circuit::circuit_energy(&self.graph, &psi, &qc)
            .expect("layout matches graph");
        let a = l.view(y, Block::Field).into_owned();
        circuit + self.field.energy(&a)
    }

    /// `H(y1) - H(y0)`, evaluated as `1/2 <y1 - y0, dH/dy(y1 + y0)>` which is
    /// exact for the quadratic energy and free of cancellation.
    pub fn energy_difference(&self, y0: &DVector<f64>, y1: &DVector<f64>) -> f64 {
        0.5 * self.energy_gradient(&(y1 + y0)).dot(&(y1 - y0))
    }

    /// Instantaneous power terms at `(y, ydot, t)`.
    pub fn power_breakdown(&self, y: &DVector<f64>, ydot: &DVector<f64>, t: f64) -> PowerBreakdown {
        let dh_dt = self.energy_gradient(y).dot(ydot);
        self.power_terms(dh_dt, ydot, t)
    }

    /// Loss and source terms for rates `w`, with a given energy rate.
    pub(crate) fn power_terms(&self, dh_dt: f64, w: &DVector<f64>, t: f64) -> PowerBreakdown {
        let l = &self.layout;
        let (v, i, _) = self.resistive(w);
        let resistive = i.dot(&v);
        let w_a = l.view(w, Block::Field).into_owned();
        let eddy = if l.n_a > 0 {
            w_a.dot(&(&self.field.mass * &w_a))
        } else {
            0.0
        };
        let w_psi = l.view(w, Block::Psi);
        let v_i = self.graph.a_i.tr_mul(&w_psi);
        let src_i = v_i.dot(&self.sources.i_src(t));
        let src_v = self.sources.v_src(t).dot(&l.view(w, Block::ChargeV));
        PowerBreakdown::new(dh_dt, resistive, eddy, src_i, src_v)
    }

    /// Circuit block `(psi, q_C, q_V, q_M)` of `alpha dr/dydot + beta dr/dy`
    /// at rates `w`. Field-related blocks are constant and not included.
    pub fn circuit_matrix(&self, w: &DVector<f64>, alpha: f64, beta: f64) -> DMatrix<f64> {
        let l = &self.layout;
        let g = &self.graph;
        let n = l.n_circuit();
        let mut j = DMatrix::zeros(n, n);
        let (_, _, cond) = self.resistive(w);
        let nl = g.n_linear();
        let mut node = DMatrix::zeros(l.n_nodes, l.n_nodes);
        for (k, a) in [(0usize, &g.a_r), (nl, &g.a_d)] {
            for b in 0..a.ncols() {
                let col = a.column(b);
                node.ger(alpha * cond[k + b], &col, &col, 1.0);
            }
        }
        for b in 0..g.n_l() {
            let col = g.a_l.column(b);
            node.ger(beta * g.inv_inductance[b], &col, &col, 1.0);
        }
        j.view_mut((0, 0), (l.n_nodes, l.n_nodes)).copy_from(&node);
        for (blk, a) in [
            (Block::ChargeC, &g.a_c),
            (Block::ChargeV, &g.a_v),
            (Block::ChargeM, &g.a_m),
        ] {
            let o = l.offset(blk);
            j.view_mut((0, o), a.shape()).copy_from(&(a * alpha));
            j.view_mut((o, 0), (a.ncols(), a.nrows()))
                .copy_from(&(a.transpose() * -alpha));
        }
        let oc = l.offset(Block::ChargeC);
        for k in 0..l.n_c {
            j[(oc + k, oc + k)] = beta / g.capacitance[k];
        }
        j
    }

    /// Dense `dr/dy` and `dr/dydot` at `(y, ydot)`.
    pub fn jacobians(&self, y: &DVector<f64>, ydot: &DVector<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        self.check(y, "state")?;
        self.check(ydot, "state rate")?;
        let l = &self.layout;
        let n = self.dim();
        let nc = l.n_circuit();
        let mut jy = DMatrix::zeros(n, n);
        let mut jd = DMatrix::zeros(n, n);
        jy.view_mut((0, 0), (nc, nc))
            .copy_from(&self.circuit_matrix(ydot, 0.0, 1.0));
        jd.view_mut((0, 0), (nc, nc))
            .copy_from(&self.circuit_matrix(ydot, 1.0, 0.0));
        if l.n_a > 0 {
            let oa = l.offset(Block::Field);
            let om = l.offset(Block::ChargeM);
            jy.view_mut((oa, oa), (l.n_a, l.n_a))
                .copy_from(&self.field.dense_stiffness());
            jd.view_mut((oa, oa), (l.n_a, l.n_a))
                .copy_from(&self.field.dense_mass());
            jd.view_mut((om, oa), (l.n_m, l.n_a))
                .copy_from(&self.coupling.transpose());
            jd.view_mut((oa, om), (l.n_a, l.n_m))
                .copy_from(&(-&self.coupling));
        }
        Ok((jy, jd))
    }

    pub fn compact_form(&self) -> CompactForm<'_> {
        CompactForm { sys: self }
    }

    /// Residual of the algebraic constraints at `(y0, t0)`: the smallest
    /// `|r(y0, ydot, t0)|_inf` over rates, linearized at `ydot = 0`.
    pub fn constraint_residual(&self, y0: &DVector<f64>, t0: f64) -> Result<f64> {
        let zero = self.zero_state();
        let r0 = self.residual(y0, &zero, t0)?;
        let r0_norm = r0.amax();
        if r0_norm == 0.0 || self.dim() == 0 {
            return Ok(r0_norm);
        }
        let (_, jd) = self.jacobians(y0, &zero)?;
        let svd = jd.clone().svd(true, true);
        let eps = 1e-12 * svd.singular_values.max();
        let rate = svd
            .solve(&(-&r0), eps)
            .map_err(|e| MonaError::Config(format!("least squares failed: {e}")))?;
        Ok((r0 + jd * rate).amax())
    }
}

/// The coupled system written as `C(ydot) + dH/dy(y) = f(t)`.
#[derive(Debug, Clone, Copy)]
pub struct CompactForm<'a> {
    sys: &'a CoupledSystem,
}

impl CompactForm<'_> {
    pub fn c_op(&self, w: &DVector<f64>) -> DVector<f64> {
        self.sys.dissipation_operator(w)
    }

    pub fn grad_h(&self, y: &DVector<f64>) -> DVector<f64> {
        self.sys.energy_gradient(y)
    }

    pub fn f(&self, t: f64) -> DVector<f64> {
        self.sys.source_vector(t)
    }
}
