//! Coupled field-circuit system in the form `C(ydot) + dH/dy(y) = f(t)`.

mod layout;
mod sources;
mod system;

pub use layout::{Block, BlockLayout};
pub use sources::SourceSet;
pub use system::{assemble_coupled, CompactForm, CoupledSystem, PowerBreakdown};

#[cfg(test)]
pub(crate) mod tests {
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;

    use super::*;
    use crate::circuit::{build_incidence, DiodeParams, NetlistElement, Waveform};
    use crate::field::{rectangle_mesh, FieldModel, MaterialMap, Winding, WindingSpec};
    use crate::MonaError;

    /// 4x4 unit square, two windings in the middle rows, conducting elsewhere.
    pub(crate) fn small_field() -> FieldModel {
        let mesh = rectangle_mesh(4, 4, 1.0, 1.0, 1.0).unwrap();
        let cell = |ix: usize, iy: usize| [2 * (iy * 4 + ix), 2 * (iy * 4 + ix) + 1];
        let mut materials = MaterialMap::uniform(mesh.n_triangles(), 2.0, 3.0);
        let mut windings = Vec::new();
        for (iy, turns) in [(1, 5.0), (2, 2.0)] {
            let go = cell(1, iy);
            let ret = cell(2, iy);
            for t in go.iter().chain(&ret) {
                materials.sigma[*t] = 0.0;
            }
            windings.push(Winding {
                triangles: go.iter().chain(&ret).copied().collect(),
                orientation: vec![1.0, 1.0, -1.0, -1.0],
                turns,
                area: 2.0 / 16.0,
            });
        }
        FieldModel::build(mesh, materials, WindingSpec { windings }).unwrap()
    }

    /// Source, winding pair, diode and RLC load around a device.
    pub(crate) fn small_coupled() -> CoupledSystem {
        let elements = vec![
            NetlistElement::voltage_source("V1", 1, 0, Waveform::sine(2.0, 3.0)),
            NetlistElement::resistor("Rs", 1, 2, 0.5),
            NetlistElement::device("X1", &[(2, 0), (3, 0)], "small"),
            NetlistElement::diode("D1", 3, 4, DiodeParams::default()),
            NetlistElement::resistor("RL", 4, 0, 4.0),
            NetlistElement::capacitor("C1", 4, 0, 0.1),
            NetlistElement::inductor("L1", 4, 5, 0.2),
            NetlistElement::resistor("R5", 5, 0, 1.0),
            NetlistElement::current_source("I1", 0, 5, Waveform::Dc(0.3)),
        ];
        CoupledSystem::from_elements(&elements, 5, |_| Ok(small_field())).unwrap()
    }

    fn uniform(seed: &mut u64) -> f64 {
        *seed ^= *seed << 13;
        *seed ^= *seed >> 7;
        *seed ^= *seed << 17;
        (*seed >> 11) as f64 / (1u64 << 53) as f64
    }

    fn random_vec(n: usize, scale: f64, seed: &mut u64) -> DVector<f64> {
        DVector::from_fn(n, |_, _| scale * (2.0 * uniform(seed) - 1.0))
    }

    #[test]
    fn layout_matches_graph_and_field() {
        let s = small_coupled();
        assert_eq!(s.layout.n_nodes, 5);
        assert_eq!(s.layout.n_c, 1);
        assert_eq!(s.layout.n_v, 1);
        assert_eq!(s.layout.n_m, 2);
        assert_eq!(s.layout.n_a, 9);
        assert_eq!(s.dim(), 18);
    }

    #[test]
    fn residual_matches_dense_oracle() {
        let s = small_coupled();
        let mut seed = 11;
        let y = random_vec(s.dim(), 1.0, &mut seed);
        // rates small enough to keep the diode in its conducting range
        let w = random_vec(s.dim(), 0.3, &mut seed);
        let t = 0.07;
        let r = s.residual(&y, &w, t).unwrap();
        let (jy, jd) = s.jacobians(&y, &w).unwrap();

        // everything except the resistive currents is linear in (y, w)
        let g = &s.graph;
        let v = g.resistive_voltages(&s.layout.view(&w, Block::Psi).into_owned());
        let (i_res, cond) = crate::circuit::resistive_branch_current(g, &v).unwrap();
        let n = s.layout.n_nodes;
        let nl = g.n_linear();
        let mut node = DMatrix::zeros(n, n);
        for b in 0..g.n_resistive() {
            let col = if b < nl { g.a_r.column(b) } else { g.a_d.column(b - nl) };
            node.ger(cond[b], &col, &col, 1.0);
        }
        let mut jd_linear = jd;
        let mut block = jd_linear.view_mut((0, 0), (n, n));
        block -= &node;
        let mut lin = jy * &y + jd_linear * &w - s.source_vector(t);
        let mut kcl = lin.rows_mut(0, n);
        kcl += g.resistive_injection(&i_res);
        assert!((r - lin).amax() < 1e-12);
    }

    #[test]
    fn jacobians_match_finite_differences() {
        let s = small_coupled();
        let mut seed = 5;
        for _ in 0..5 {
            let y = random_vec(s.dim(), 1.0, &mut seed);
            let w = random_vec(s.dim(), 0.3, &mut seed);
            let (jy, jd) = s.jacobians(&y, &w).unwrap();
            let h = 1e-6;
            for j in 0..s.dim() {
                let mut yp = y.clone();
                let mut ym = y.clone();
                yp[j] += h;
                ym[j] -= h;
                let col = (s.residual(&yp, &w, 0.1).unwrap() - s.residual(&ym, &w, 0.1).unwrap()) / (2.0 * h);
                assert!((col - jy.column(j)).amax() < 1e-6 * (1.0 + jy.column(j).amax()));
                let mut wp = w.clone();
                let mut wm = w.clone();
                wp[j] += h;
                wm[j] -= h;
                let col = (s.residual(&y, &wp, 0.1).unwrap() - s.residual(&y, &wm, 0.1).unwrap()) / (2.0 * h);
                assert!((col - jd.column(j)).amax() < 1e-5 * (1.0 + jd.column(j).amax()));
            }
        }
    }

    #[test]
    fn coupling_blocks_are_negative_transposes() {
        let s = small_coupled();
        let (jy, jd) = s.jacobians(&s.zero_state(), &s.zero_state()).unwrap();
        let l = s.layout;
        let ra = l.range(Block::Field);
        let rm = l.range(Block::ChargeM);
        let up = jd.view((rm.start, ra.start), (rm.len(), ra.len())).into_owned();
        let down = jd.view((ra.start, rm.start), (ra.len(), rm.len())).into_owned();
        assert_eq!(up, -down.transpose());
        // skew part of the node/charge coupling
        for b in [Block::ChargeC, Block::ChargeV, Block::ChargeM] {
            let r = l.range(b);
            let up = jd.view((0, r.start), (l.n_nodes, r.len())).into_owned();
            let down = jd.view((r.start, 0), (r.len(), l.n_nodes)).into_owned();
            assert_eq!(up, -down.transpose());
        }
        assert_eq!(jy.clone(), jy.transpose());
    }

    #[test]
    fn dissipation_power_is_losses() {
        let s = small_coupled();
        let mut seed = 3;
        for _ in 0..20 {
            let w = random_vec(s.dim(), 0.5, &mut seed);
            let p = s.power_terms(0.0, &w, 0.0);
            let cw = s.dissipation_operator(&w).dot(&w);
            assert!((cw - p.resistive_loss - p.eddy_loss).abs() < 1e-12 * (1.0 + cw.abs()));
            assert!(p.resistive_loss >= 0.0 && p.eddy_loss >= 0.0);
        }
    }

    #[test]
    fn power_balance_closes_on_exact_rates() {
        // r(y, w, t) = 0 paired with w gives dH/dt + losses + sources = 0
        let s = small_coupled();
        let mut seed = 9;
        let y = random_vec(s.dim(), 1.0, &mut seed);
        let w = random_vec(s.dim(), 0.3, &mut seed);
        let r = s.residual(&y, &w, 0.2).unwrap();
        let p = s.power_breakdown(&y, &w, 0.2);
        assert!((p.residual - r.dot(&w)).abs() < 1e-11);
    }

    #[test]
    fn energy_gradient_matches_finite_differences() {
        let s = small_coupled();
        let mut seed = 21;
        let y = random_vec(s.dim(), 1.0, &mut seed);
        let g = s.energy_gradient(&y);
        for j in 0..s.dim() {
            let mut yp = y.clone();
            let mut ym = y.clone();
            yp[j] += 1e-5;
            ym[j] -= 1e-5;
            let fd = (s.energy(&yp) - s.energy(&ym)) / 2e-5;
            assert!((fd - g[j]).abs() < 1e-6 * (1.0 + g[j].abs()));
        }
        assert!((s.energy(&(&y * 2.0)) - 4.0 * s.energy(&y)).abs() < 1e-12 * s.energy(&y));
    }

    #[test]
    fn compact_form_agrees_with_residual() {
        let s = small_coupled();
        let mut seed = 2;
        let y = random_vec(s.dim(), 1.0, &mut seed);
        let w = random_vec(s.dim(), 0.3, &mut seed);
        let c = s.compact_form();
        let r = c.c_op(&w) + c.grad_h(&y) - c.f(0.4);
        assert_eq!(r, s.residual(&y, &w, 0.4).unwrap());
    }

    #[test]
    fn terminal_map_errors() {
        let graph = build_incidence(
            &[
                NetlistElement::device("X", &[(1, 0)], "f"),
                NetlistElement::resistor("R", 1, 0, 1.0),
            ],
            1,
        )
        .unwrap();
        let field = small_field();
        let e = assemble_coupled(graph.clone(), field.clone(), SourceSet::default(), &[0]).unwrap_err();
        assert!(matches!(e, MonaError::TerminalMap(_)), "{e}");
        let e = assemble_coupled(graph.clone(), field.clone(), SourceSet::default(), &[0, 1]).unwrap_err();
        assert!(matches!(e, MonaError::TerminalMap(_)));
        let e = assemble_coupled(graph, field, SourceSet::default(), &[5]).unwrap_err();
        assert!(matches!(e, MonaError::TerminalMap(_)));
    }

    #[test]
    fn winding_count_mismatch_is_reported() {
        let elements = vec![
            NetlistElement::device("X", &[(1, 0)], "f"),
            NetlistElement::resistor("R", 1, 0, 1.0),
        ];
        let e = CoupledSystem::from_elements(&elements, 1, |_| Ok(small_field())).unwrap_err();
        assert!(matches!(e, MonaError::TerminalMap(_)));
    }

    #[test]
    fn consistent_initial_state_has_zero_constraint_residual() {
        let s = small_coupled();
        assert!(s.constraint_residual(&s.zero_state(), 0.0).unwrap() < 1e-12);
        // an inductor flux with a capacitor charge is still consistent
        let mut y = s.zero_state();
        y[s.layout.offset(Block::ChargeC)] = 0.1;
        y[4] = 0.2;
        assert!(s.constraint_residual(&y, 0.0).unwrap() < 1e-10);
    }

    #[test]
    fn dimension_and_finiteness_checks() {
        let s = small_coupled();
        let short = DVector::zeros(3);
        assert!(matches!(s.residual(&short, &short, 0.0), Err(MonaError::Dimension(_))));
        let mut bad = s.zero_state();
        bad[0] = f64::NAN;
        assert!(matches!(s.residual(&bad, &s.zero_state(), 0.0), Err(MonaError::NonFinite(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn dissipation_operator_is_monotone(seed in 1u64..u64::MAX) {
            let s = small_coupled();
            let mut seed = seed;
            let w1 = random_vec(s.dim(), 0.5, &mut seed);
            let w2 = random_vec(s.dim(), 0.5, &mut seed);
            let d = (s.dissipation_operator(&w1) - s.dissipation_operator(&w2)).dot(&(&w1 - &w2));
            prop_assert!(d >= -1e-12);
        }
    }
}
