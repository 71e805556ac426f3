//! Circuit topology and constitutive laws in magnetic-oriented variables.
//!
//! States are magnetic node potentials `psi` (time integrals of node
//! voltages) and branch charges `q`. Voltages and currents are their rates.

mod constitutive;
mod element;
mod graph;
mod topology;

pub use constitutive::{DiodeParams, ResistiveLaw, DIODE_EXP_LIMIT};
pub use element::{ElementKind, ElementParams, NetlistElement, NodeId, Waveform, GROUND};
pub use graph::{
    build_incidence, circuit_energy, dissipation, resistive_branch_current, BranchRef,
    CircuitGraph, DeviceTerminals,
};
pub use topology::{validate_topology, TopologyIssue, TopologyReport};

#[cfg(test)]
mod tests {
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;

    use super::*;
    use crate::error::MonaError;

    fn r(name: &str, p: usize, m: usize, ohm: f64) -> NetlistElement {
        NetlistElement::resistor(name, p, m, ohm)
    }

    #[test]
    fn stamps_rc() {
        let g = build_incidence(
            &[r("R1", 1, 2, 10.0), NetlistElement::capacitor("C1", 2, 0, 1e-6)],
            2,
        )
        .unwrap();
        assert_eq!(g.a_r, DMatrix::from_row_slice(2, 1, &[1.0, -1.0]));
        assert_eq!(g.a_c, DMatrix::from_row_slice(2, 1, &[0.0, 1.0]));
        assert_eq!(g.conductance, vec![0.1]);
        assert_eq!(g.capacitance, vec![1e-6]);
        assert_eq!(g.a_v.shape(), (2, 0));
    }

    #[test]
    fn ground_row_eliminated() {
        let g = build_incidence(
            &[
                NetlistElement::voltage_source("V1", 1, 0, Waveform::Dc(1.0)),
                r("R1", 1, 0, 10.0),
            ],
            1,
        )
        .unwrap();
        assert_eq!(g.a_v, DMatrix::from_element(1, 1, 1.0));
        assert_eq!(g.a_r, DMatrix::from_element(1, 1, 1.0));
    }

    #[test]
    fn device_windings_are_columns() {
        let g = build_incidence(
            &[
                NetlistElement::voltage_source("V1", 1, 0, Waveform::Dc(1.0)),
                NetlistElement::device("X", &[(1, 0), (2, 3)], "core"),
                r("R", 2, 3, 1.0),
                r("Rg", 3, 0, 1.0),
            ],
            3,
        )
        .unwrap();
        assert_eq!(g.n_m(), 2);
        assert_eq!(g.branch("X.2").unwrap().index, 1);
        assert_eq!(g.devices[0].first_column, 0);
        assert_eq!(g.a_m.column(1).as_slice(), &[0.0, 1.0, -1.0]);
    }

    #[test]
    fn build_errors() {
        assert_eq!(build_incidence(&[], 1).unwrap_err(), MonaError::EmptyCircuit);
        assert!(matches!(
            build_incidence(&[r("R1", 1, 3, 1.0)], 2),
            Err(MonaError::UnknownNode { node: 3, .. })
        ));
        assert!(matches!(
            build_incidence(&[r("R1", 1, 0, -1.0)], 1),
            Err(MonaError::NonPositiveParameter { .. })
        ));
        assert_eq!(
            build_incidence(&[r("R1", 1, 0, 1.0), r("R1", 1, 0, 2.0)], 1).unwrap_err(),
            MonaError::DuplicateName("R1".into())
        );
        assert!(matches!(
            build_incidence(&[r("R1", 1, 0, 1.0), r("R2", 2, 3, 1.0)], 3),
            Err(MonaError::Disconnected(_))
        ));
        assert!(matches!(
            build_incidence(&[r("R1", 1, 1, 1.0)], 1),
            Err(MonaError::SelfLoop(_))
        ));
        let bad_diode = DiodeParams {
            thermal_voltage: 0.0,
            ..DiodeParams::default()
        };
        assert!(matches!(
            build_incidence(&[NetlistElement::diode("D", 1, 0, bad_diode)], 1),
            Err(MonaError::NonPositiveParameter { param: "VT", .. })
        ));
    }

    #[test]
    fn parallel_sources_form_voltage_loop() {
        let g = build_incidence(
            &[
                NetlistElement::voltage_source("V1", 1, 0, Waveform::Dc(1.0)),
                NetlistElement::voltage_source("V2", 1, 0, Waveform::Dc(1.0)),
            ],
            1,
        )
        .unwrap();
        let rep = validate_topology(&g);
        assert!(!rep.passed());
        assert_eq!(
            rep.issues,
            vec![TopologyIssue::VoltageLoop(vec!["V1".into(), "V2".into()])]
        );
    }

    #[test]
    fn lone_current_source_is_cutset() {
        let g = build_incidence(
            &[NetlistElement::current_source("I1", 1, 0, Waveform::Dc(1.0))],
            1,
        )
        .unwrap();
        let rep = validate_topology(&g);
        assert!(!rep.passed());
        assert_eq!(
            rep.issues,
            vec![TopologyIssue::CurrentCutset(vec!["I1".into()])]
        );
    }

    #[test]
    fn winding_across_source_is_warning_only() {
        let g = build_incidence(
            &[
                NetlistElement::voltage_source("V1", 1, 0, Waveform::Dc(1.0)),
                NetlistElement::device("X", &[(1, 0)], "core"),
            ],
            1,
        )
        .unwrap();
        let rep = validate_topology(&g);
        assert!(rep.passed());
        assert_eq!(
            rep.issues,
            vec![TopologyIssue::DeviceVoltageLoop(vec!["V1".into(), "X.1".into()])]
        );
    }

    #[test]
    fn longer_voltage_loop_names_every_branch() {
        let g = build_incidence(
            &[
                NetlistElement::voltage_source("Va", 1, 2, Waveform::Dc(1.0)),
                NetlistElement::voltage_source("Vb", 2, 0, Waveform::Dc(1.0)),
                r("R", 2, 0, 1.0),
                NetlistElement::voltage_source("Vc", 1, 0, Waveform::Dc(2.0)),
            ],
            2,
        )
        .unwrap();
        let rep = validate_topology(&g);
        assert_eq!(
            rep.issues,
            vec![TopologyIssue::VoltageLoop(vec![
                "Va".into(),
                "Vb".into(),
                "Vc".into()
            ])]
        );
    }

    #[test]
    fn energy_examples() {
        let g = build_incidence(
            &[NetlistElement::capacitor("C", 1, 0, 1.0), r("R", 1, 0, 1.0)],
            1,
        )
        .unwrap();
        let zero = DVector::zeros(1);
        assert_eq!(circuit_energy(&g, &zero, &DVector::zeros(1)).unwrap(), 0.0);
        let e = circuit_energy(&g, &zero, &DVector::from_element(1, 2.0)).unwrap();
        assert!((e - 2.0).abs() < 1e-15);
    }

    /// Five-node RLC ladder with two inductors and two capacitors.
    fn rlc5() -> CircuitGraph {
        build_incidence(
            &[
                r("R1", 1, 2, 2.0),
                NetlistElement::inductor("L1", 2, 3, 0.5),
                NetlistElement::capacitor("C1", 3, 0, 1e-3),
                r("R2", 3, 4, 4.0),
                NetlistElement::inductor("L2", 4, 5, 2.0),
                NetlistElement::capacitor("C2", 5, 0, 2e-3),
                r("R3", 1, 0, 1.0),
            ],
            5,
        )
        .unwrap()
    }

    fn uniform(seed: &mut u64) -> f64 {
        // xorshift; deterministic and independent of the code under test
        *seed ^= *seed << 13;
        *seed ^= *seed >> 7;
        *seed ^= *seed << 17;
        (*seed >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    }

    #[test]
    fn energy_matches_dense_oracle() {
        let g = rlc5();
        let mut seed = 0x9e3779b97f4a7c15;
        for _ in 0..20 {
            let psi = DVector::from_fn(5, |_, _| uniform(&mut seed));
            let qc = DVector::from_fn(2, |_, _| uniform(&mut seed) * 1e-3);
            let linv = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 0.5]));
            let cinv = DMatrix::from_diagonal(&DVector::from_vec(vec![1e3, 5e2]));
            let oracle = 0.5 * (psi.transpose() * &g.a_l * linv * g.a_l.transpose() * &psi)[0]
                + 0.5 * (qc.transpose() * cinv * &qc)[0];
            let e = circuit_energy(&g, &psi, &qc).unwrap();
            assert!((e - oracle).abs() <= 1e-12 * oracle.abs().max(1e-300));
        }
    }

    #[test]
    fn rectifier_bridge_counts() {
        let d = DiodeParams::default();
        let g = build_incidence(
            &[
                NetlistElement::voltage_source("src", 1, 0, Waveform::sine(160.0, 60.0)),
                NetlistElement::device("xfmr", &[(1, 0), (2, 3)], "core"),
                NetlistElement::diode("d1", 2, 4, d),
                NetlistElement::diode("d2", 3, 4, d),
                NetlistElement::diode("d3", 0, 2, d),
                NetlistElement::diode("d4", 0, 3, d),
                r("load", 4, 0, 10.0),
            ],
            4,
        )
        .unwrap();
        assert_eq!(g.n_m(), 2);
        assert_eq!(g.n_diodes(), 4);
        assert_eq!(g.n_linear(), 1);
        assert_eq!(g.n_v(), 1);
        assert!(validate_topology(&g).passed());
    }

    fn random_graph() -> impl Strategy<Value = CircuitGraph> {
        // spanning chain to ground plus random extra resistors/diodes
        (2usize..7)
            .prop_flat_map(|n| {
                let extra = prop::collection::vec((0..=n, 0..=n, any::<bool>(), 0.1f64..10.0), 0..8);
                (Just(n), extra)
            })
            .prop_map(|(n, extra)| {
                let mut els: Vec<NetlistElement> = (1..=n)
                    .map(|k| r(&format!("chain{k}"), k, k - 1, 1.0 + k as f64))
                    .collect();
                for (k, (p, m, diode, val)) in extra.into_iter().enumerate() {
                    if p == m {
                        continue;
                    }
                    let name = format!("x{k}");
                    els.push(if diode {
                        NetlistElement::diode(&name, p, m, DiodeParams::default())
                    } else {
                        r(&name, p, m, val)
                    });
                }
                build_incidence(&els, n).unwrap()
            })
    }

    proptest! {
        #[test]
        fn incidence_columns_sum(g in random_graph()) {
            for &kind in CircuitGraph::all_kinds() {
                let a = g.incidence(kind);
                for (k, &(p, m)) in g.endpoints(kind).iter().enumerate() {
                    let col = a.column(k);
                    let sum: f64 = col.iter().sum();
                    let touches_ground = p == GROUND || m == GROUND;
                    if touches_ground {
                        prop_assert_eq!(sum.abs(), 1.0);
                    } else {
                        prop_assert_eq!(sum, 0.0);
                    }
                    prop_assert!(col.iter().all(|&x| x == 0.0 || x == 1.0 || x == -1.0));
                }
            }
        }

        #[test]
        fn dissipation_non_negative(g in random_graph(), seed in any::<u64>()) {
            let mut s = seed | 1;
            let v = DVector::from_fn(g.n_resistive(), |_, _| 2.0 * uniform(&mut s));
            prop_assert!(dissipation(&g, &v).unwrap() >= 0.0);
        }

        #[test]
        fn energy_is_quadratic(alpha in -5.0f64..5.0, seed in any::<u64>()) {
            let g = rlc5();
            let mut s = seed | 1;
            let psi = DVector::from_fn(5, |_, _| uniform(&mut s));
            let qc = DVector::from_fn(2, |_, _| 1e-3 * uniform(&mut s));
            let h = circuit_energy(&g, &psi, &qc).unwrap();
            let h2 = circuit_energy(&g, &(&psi * alpha), &(&qc * alpha)).unwrap();
            prop_assert!((h2 - alpha * alpha * h).abs() <= 1e-12 * h2.abs().max(1e-300));
        }
    }

    #[test]
    fn resistive_derivative_matches_central_differences() {
        let g = build_incidence(
            &[
                r("R", 1, 0, 10.0),
                NetlistElement::diode("D", 1, 2, DiodeParams::default()),
                r("R2", 2, 0, 1.0),
            ],
            2,
        )
        .unwrap();
        let mut seed = 12345u64;
        for _ in 0..100 {
            let v = DVector::from_fn(g.n_resistive(), |_, _| uniform(&mut seed));
            let (_, dg) = resistive_branch_current(&g, &v).unwrap();
            for k in 0..v.len() {
                let h = 1e-6 * v[k].abs().max(1e-3);
                let mut vp = v.clone();
                let mut vm = v.clone();
                vp[k] += h;
                vm[k] -= h;
                let ip = resistive_branch_current(&g, &vp).unwrap().0[k];
                let im = resistive_branch_current(&g, &vm).unwrap().0[k];
                let fd = (ip - im) / (2.0 * h);
                assert!(
                    ((fd - dg[k]) / dg[k]).abs() <= 1e-6,
                    "branch {k} at v = {}: fd {fd:e} vs {:e}",
                    v[k],
                    dg[k]
                );
            }
        }
    }
}
