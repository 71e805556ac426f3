//! Piecewise-linear finite elements for the 2D eddy-current problem
//! `sigma da/dt - div(nu grad a) = chi . i` with `a` the out-of-plane
//! component of the modified vector potential.

mod assembly;
mod description;
mod mesh;
mod meshfile;
mod model;
mod transformer;

pub use assembly::{assemble_mass, assemble_stiffness, assemble_winding, local_mass, local_stiffness};
pub use description::{MeshDescription, Region};
pub use mesh::{MaterialMap, TriMesh, Winding, WindingSpec};
pub use meshfile::{parse_mesh, write_mesh};
pub use model::{apply_gauge, FieldModel, FieldPart, UngaugedField};
pub(crate) use model::to_csc_symmetric;
pub use transformer::{
    generate_transformer_mesh, TransformerParams, MU_0, REGION_AIR, REGION_CORE,
    REGION_PRIMARY_GO, REGION_PRIMARY_RETURN, REGION_SECONDARY_GO, REGION_SECONDARY_RETURN,
};

/// Structured `nx x ny` grid on `[0, width] x [0, height]`, cells split
/// along the lower-left/upper-right diagonal. Vertices are numbered row by row.
pub fn rectangle_mesh(nx: usize, ny: usize, width: f64, height: f64, depth: f64) -> crate::Result<TriMesh> {
    let vertices = (0..=ny)
        .flat_map(|iy| {
            (0..=nx).map(move |ix| [width * ix as f64 / nx as f64, height * iy as f64 / ny as f64])
        })
        .collect();
    let vid = |ix: usize, iy: usize| iy * (nx + 1) + ix;
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for iy in 0..ny {
        for ix in 0..nx {
            triangles.push([vid(ix, iy), vid(ix + 1, iy), vid(ix + 1, iy + 1)]);
            triangles.push([vid(ix, iy), vid(ix + 1, iy + 1), vid(ix, iy + 1)]);
        }
    }
    TriMesh::new(vertices, triangles, depth)
}

#[cfg(test)]
mod tests {
    use nalgebra::{DMatrix, DVector, SymmetricEigen};

    use super::*;
    use crate::error::MonaError;

    fn unit_triangle() -> TriMesh {
        TriMesh::new(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 1, 2]], 1.0).unwrap()
    }

    fn assert_close(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) {
        assert_eq!(a.shape(), b.shape());
        let d = (a - b).amax();
        assert!(d <= tol, "max deviation {d:e}\n{a}\n{b}");
    }

    #[test]
    fn single_triangle_stiffness() {
        let mesh = unit_triangle();
        let k = assemble_stiffness(&mesh, &MaterialMap::uniform(1, 1.0, 0.0)).unwrap();
        let expected = DMatrix::from_row_slice(
            3,
            3,
            &[1.0, -0.5, -0.5, -0.5, 0.5, 0.0, -0.5, 0.0, 0.5],
        );
        assert_close(&DMatrix::from(&k), &expected, 1e-14);
    }

    #[test]
    fn single_triangle_mass() {
        let mesh = unit_triangle();
        let m = assemble_mass(&mesh, &MaterialMap::uniform(1, 1.0, 1.0)).unwrap();
        let expected =
            DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 1.0, 1.0, 2.0, 1.0, 1.0, 1.0, 2.0]) / 24.0;
        assert_close(&DMatrix::from(&m), &expected, 1e-14);
    }

    #[test]
    fn single_triangle_winding() {
        let mesh = unit_triangle();
        let materials = MaterialMap::uniform(1, 1.0, 0.0);
        let spec = WindingSpec {
            windings: vec![Winding {
                triangles: vec![0],
                orientation: vec![1.0],
                turns: 10.0,
                area: 0.5,
            }],
        };
        let x = assemble_winding(&mesh, &materials, &spec).unwrap();
        for i in 0..3 {
            assert!((x[(i, 0)] - 10.0 / 3.0).abs() < 1e-14);
        }
    }

    #[test]
    fn winding_errors() {
        let mesh = unit_triangle();
        let empty = WindingSpec {
            windings: vec![Winding {
                triangles: vec![],
                orientation: vec![],
                turns: 10.0,
                area: 0.0,
            }],
        };
        assert!(matches!(
            assemble_winding(&mesh, &MaterialMap::uniform(1, 1.0, 0.0), &empty),
            Err(MonaError::InvalidWinding { .. })
        ));
        let conducting = WindingSpec {
            windings: vec![Winding {
                triangles: vec![0],
                orientation: vec![1.0],
                turns: 1.0,
                area: 0.5,
            }],
        };
        assert!(matches!(
            assemble_winding(&mesh, &MaterialMap::uniform(1, 1.0, 5.0), &conducting),
            Err(MonaError::InvalidWinding { .. })
        ));
    }

    #[test]
    fn degenerate_and_clockwise_triangles_rejected() {
        let cw = TriMesh::new(vec![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]], vec![[0, 1, 2]], 1.0);
        assert!(matches!(cw, Err(MonaError::DegenerateTriangle { .. })));
        let flat = TriMesh::new(vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]], vec![[0, 1, 2]], 1.0);
        assert!(matches!(flat, Err(MonaError::DegenerateTriangle { .. })));
    }

    #[test]
    fn two_triangle_square_matches_hand_assembly() {
        let mesh = rectangle_mesh(1, 1, 1.0, 1.0, 1.0).unwrap();
        let k = DMatrix::from(&assemble_stiffness(&mesh, &MaterialMap::uniform(2, 1.0, 0.0)).unwrap());
        // triangles (0,1,3) and (0,3,2); right angles at vertex 1 and vertex 2
        let mut oracle = DMatrix::<f64>::zeros(4, 4);
        let t1 = [[0.5, -0.5, 0.0], [-0.5, 1.0, -0.5], [0.0, -0.5, 0.5]];
        let t2 = [[0.5, 0.0, -0.5], [0.0, 0.5, -0.5], [-0.5, -0.5, 1.0]];
        for (loc, verts) in [(t1, [0, 1, 3]), (t2, [0, 3, 2])] {
            for a in 0..3 {
                for b in 0..3 {
                    oracle[(verts[a], verts[b])] += loc[a][b];
                }
            }
        }
        assert_close(&k, &oracle, 1e-14);
    }

    #[test]
    fn stiffness_kernel_and_symmetry() {
        let desc = generate_transformer_mesh(&TransformerParams {
            mesh_size: 0.02,
            ..TransformerParams::default()
        })
        .unwrap();
        let mats = desc.materials().unwrap();
        let k = assemble_stiffness(&desc.mesh, &mats).unwrap();
        let m = assemble_mass(&desc.mesh, &mats).unwrap();
        let ones = DVector::from_element(desc.mesh.n_vertices(), 1.0);
        let k1 = &k * &ones;
        let scale = DMatrix::from(&k).amax();
        assert!(k1.amax() <= 1e-12 * scale);
        for a in [&k, &m] {
            let d = DMatrix::from(a);
            assert_eq!(d, d.transpose());
        }
    }

    #[test]
    fn mass_total_and_zero_conductivity() {
        let mesh = rectangle_mesh(3, 2, 2.0, 1.0, 0.5).unwrap();
        let sigma: Vec<f64> = (0..mesh.n_triangles()).map(|t| 1.0 + t as f64).collect();
        let mats = MaterialMap {
            nu: vec![1.0; mesh.n_triangles()],
            sigma: sigma.clone(),
        };
        let m = assemble_mass(&mesh, &mats).unwrap();
        let ones = DVector::from_element(mesh.n_vertices(), 1.0);
        let total = ones.dot(&(&m * &ones));
        let oracle: f64 = (0..mesh.n_triangles()).map(|t| sigma[t] * 0.5 * mesh.area(t)).sum();
        assert!((total - oracle).abs() < 1e-13 * oracle);

        let zero = assemble_mass(&mesh, &MaterialMap::uniform(mesh.n_triangles(), 1.0, 0.0)).unwrap();
        assert_eq!(zero.nnz(), 0);
    }

    #[test]
    fn go_return_pair_sums_to_zero() {
        let mesh = rectangle_mesh(2, 1, 2.0, 1.0, 1.0).unwrap();
        // left cell go, right cell return; equal areas
        let spec = WindingSpec {
            windings: vec![Winding {
                triangles: vec![0, 1, 2, 3],
                orientation: vec![1.0, 1.0, -1.0, -1.0],
                turns: 7.0,
                area: 2.0,
            }],
        };
        let x = assemble_winding(&mesh, &MaterialMap::uniform(4, 1.0, 0.0), &spec).unwrap();
        assert!(x.column(0).sum().abs() < 1e-15);
    }

    #[test]
    fn full_elimination_gives_empty_model() {
        let mesh = rectangle_mesh(1, 1, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(mesh.boundary().len(), 4);
        let model = FieldModel::build(mesh, MaterialMap::uniform(2, 1.0, 1.0), WindingSpec::default()).unwrap();
        assert_eq!(model.n_dofs(), 0);
        assert_eq!(model.stiffness.nrows(), 0);
    }

    #[test]
    fn empty_boundary_is_gauge_error() {
        let mesh = rectangle_mesh(2, 2, 1.0, 1.0, 1.0).unwrap();
        let f = UngaugedField::assemble(mesh, MaterialMap::uniform(8, 1.0, 0.0), WindingSpec::default()).unwrap();
        assert!(matches!(apply_gauge(f, &[]), Err(MonaError::Gauge(_))));
    }

    #[test]
    fn gauged_stiffness_is_positive_definite() {
        for n in [2, 3, 5] {
            let mesh = rectangle_mesh(n, n, 1.0, 1.0, 1.0).unwrap();
            let nt = mesh.n_triangles();
            let model = FieldModel::build(mesh, MaterialMap::uniform(nt, 1.0, 0.0), WindingSpec::default()).unwrap();
            assert_eq!(model.n_dofs(), (n - 1) * (n - 1));
            let eig = SymmetricEigen::new(model.dense_stiffness());
            assert!(eig.eigenvalues.min() > 0.0);
        }
    }

    #[test]
    fn static_solve_residual() {
        let desc = generate_transformer_mesh(&TransformerParams {
            mesh_size: 0.02,
            ..TransformerParams::default()
        })
        .unwrap();
        let model = desc.build_field().unwrap();
        let i = DVector::from_vec(vec![0.7, -0.2]);
        let a = model.solve_static(&i).unwrap();
        let rhs = &model.coupling * &i;
        let res = &model.stiffness * &a - &rhs;
        assert!(res.norm() <= 1e-10 * rhs.norm());
    }

    #[test]
    fn transformer_mesh_invariants() {
        let p = TransformerParams::default();
        let desc = generate_transformer_mesh(&p).unwrap();
        for t in 0..desc.mesh.n_triangles() {
            assert!(desc.mesh.signed_area(t) > 0.0);
        }
        let w = desc.windings().unwrap();
        let expected = 2.0 * p.coil_width * p.coil_height;
        for wk in &w.windings {
            assert!(((wk.area - expected) / expected).abs() < 1e-12);
            let go: f64 = wk.triangles.iter().zip(&wk.orientation).map(|(&t, s)| s * desc.mesh.area(t)).sum();
            assert!(go.abs() < 1e-12 * expected);
        }
        let mats = desc.materials().unwrap();
        w.validate(&desc.mesh, &mats).unwrap();
        assert!(mats.sigma.iter().any(|&s| s > 0.0));
        let again = generate_transformer_mesh(&p).unwrap();
        assert_eq!(desc, again);
    }

    #[test]
    fn transformer_refinement_quadruples_triangles() {
        let coarse = generate_transformer_mesh(&TransformerParams::default()).unwrap();
        let fine = generate_transformer_mesh(&TransformerParams {
            mesh_size: 0.005,
            ..TransformerParams::default()
        })
        .unwrap();
        let ratio = fine.mesh.n_triangles() as f64 / coarse.mesh.n_triangles() as f64;
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn transformer_turns_ratio_sets_flux_ratio() {
        let p = TransformerParams {
            turns_primary: 100.0,
            turns_secondary: 10.0,
            ..TransformerParams::default()
        };
        let model = generate_transformer_mesh(&p).unwrap().build_field().unwrap();
        let a = model.solve_static(&DVector::from_vec(vec![1.0, 0.0])).unwrap();
        let lambda = model.flux_linkage(&a);
        let ratio = (lambda[0] / lambda[1]).abs();
        assert!((9.0..=11.0).contains(&ratio), "flux linkage ratio {ratio}");
    }

    #[test]
    fn transformer_geometry_errors() {
        let overlap = TransformerParams {
            coil_width: 0.06,
            ..TransformerParams::default()
        };
        assert!(matches!(generate_transformer_mesh(&overlap), Err(MonaError::Geometry(_))));
        let tall = TransformerParams {
            coil_height: 0.2,
            ..TransformerParams::default()
        };
        assert!(matches!(generate_transformer_mesh(&tall), Err(MonaError::Geometry(_))));
        let bad_h = TransformerParams {
            mesh_size: 0.0,
            ..TransformerParams::default()
        };
        assert!(generate_transformer_mesh(&bad_h).is_err());
    }

    #[test]
    fn mesh_file_round_trip() {
        let desc = generate_transformer_mesh(&TransformerParams {
            mesh_size: 0.03,
            ..TransformerParams::default()
        })
        .unwrap();
        let text = write_mesh(&desc);
        let back = parse_mesh(&text).unwrap();
        assert_eq!(back, desc);
    }

    #[test]
    fn mesh_file_errors_carry_line_numbers() {
        let text = "depth 1\nvertices 3\n0 0\n1 0\n0 x\ntriangles 1\n0 1 2 1\n";
        let err = parse_mesh(text).unwrap_err().to_string();
        assert!(err.contains("line 5"), "{err}");
        let missing_region = "depth 1\nvertices 3\n0 0\n1 0\n0 1\ntriangles 1\n0 1 2 9\n";
        assert!(parse_mesh(missing_region).is_err());
    }

    #[test]
    fn stacking_is_block_diagonal() {
        let p = TransformerParams {
            mesh_size: 0.04,
            ..TransformerParams::default()
        };
        let a = generate_transformer_mesh(&p).unwrap().build_field().unwrap();
        let b = a.clone();
        let s = FieldModel::stack(vec![a.clone(), b]);
        assert_eq!(s.n_dofs(), 2 * a.n_dofs());
        assert_eq!(s.n_windings(), 4);
        assert_eq!(s.parts[1].first_winding, 2);
        let k = s.dense_stiffness();
        let n = a.n_dofs();
        assert_eq!(k.view((0, 0), (n, n)).into_owned(), a.dense_stiffness());
        assert_eq!(k.view((n, n), (n, n)).into_owned(), a.dense_stiffness());
        assert_eq!(k.view((0, n), (n, n)).amax(), 0.0);
    }
}
