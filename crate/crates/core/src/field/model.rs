use nalgebra::{DMatrix, DVector};
use nalgebra_sparse::factorization::CscCholesky;
use nalgebra_sparse::{CscMatrix, CsrMatrix};

use super::assembly::{assemble_mass, assemble_stiffness, assemble_winding, Assembler};
use super::mesh::{MaterialMap, TriMesh, WindingSpec};
use crate::error::{MonaError, Result};

/// Assembled matrices on all mesh vertices, before the Dirichlet gauge.
#[derive(Debug, Clone)]
pub struct UngaugedField {
    pub mesh: TriMesh,
    pub materials: MaterialMap,
    pub windings: WindingSpec,
    pub stiffness: CsrMatrix<f64>,
    pub mass: CsrMatrix<f64>,
    pub coupling: DMatrix<f64>,
}

impl UngaugedField {
    pub fn assemble(mesh: TriMesh, materials: MaterialMap, windings: WindingSpec) -> Result<Self> {
        let stiffness = assemble_stiffness(&mesh, &materials)?;
        let mass = assemble_mass(&mesh, &materials)?;
        let coupling = assemble_winding(&mesh, &materials, &windings)?;
        Ok(UngaugedField {
            mesh,
            materials,
            windings,
            stiffness,
            mass,
            coupling,
        })
    }
}

/// Geometry of one device inside a (possibly stacked) field model.
#[derive(Debug, Clone)]
pub struct FieldPart {
    pub mesh: TriMesh,
    pub materials: MaterialMap,
    pub windings: WindingSpec,
    /// Global dof of each mesh vertex; `None` on the Dirichlet boundary.
    pub dof_of_vertex: Vec<Option<usize>>,
    pub first_winding: usize,
}

/// Gauged semi-discrete eddy-current model `M da/dt + K a = X i`.
///
/// `stiffness` is positive definite and `mass` positive semidefinite on the
/// interior dofs; `coupling` has one column per winding.
#[derive(Debug, Clone)]
pub struct FieldModel {
    pub stiffness: CsrMatrix<f64>,
    pub mass: CsrMatrix<f64>,
    pub coupling: DMatrix<f64>,
    pub parts: Vec<FieldPart>,
}

fn restrict(a: &CsrMatrix<f64>, dof: &[Option<usize>], n: usize) -> CsrMatrix<f64> {
    let mut asm = Assembler::new(n);
    for (i, row) in a.row_iter().enumerate() {
        let Some(di) = dof[i] else { continue };
        for (&j, &v) in row.col_indices().iter().zip(row.values()) {
            if let Some(dj) = dof[j] {
                asm.add(di, dj, v);
            }
        }
    }
    asm.finish()
}

pub(crate) fn to_csc_symmetric(a: &CsrMatrix<f64>) -> CscMatrix<f64> {
    // for a symmetric matrix the CSR arrays are the CSC arrays
    let (offsets, cols, vals) = a.csr_data();
    CscMatrix::try_from_csc_data(
        a.nrows(),
        a.ncols(),
        offsets.to_vec(),
        cols.to_vec(),
        vals.to_vec(),
    )
    .expect("valid CSC data")
}

/// Eliminates `boundary` vertices (a = 0 there) and checks that the
/// remaining stiffness is positive definite.
pub fn apply_gauge(field: UngaugedField, boundary: &[usize]) -> Result<FieldModel> {
    if boundary.is_empty() {
        return Err(MonaError::Gauge(
            "empty boundary set leaves the stiffness singular".into(),
        ));
    }
    let nv = field.mesh.n_vertices();
    let mut on_boundary = vec![false; nv];
    for &b in boundary {
        if b >= nv {
            return Err(MonaError::Gauge(format!("boundary vertex {b} out of range")));
        }
        on_boundary[b] = true;
    }
    let mut dof_of_vertex = vec![None; nv];
    let mut n = 0;
    for v in 0..nv {
        if !on_boundary[v] {
            dof_of_vertex[v] = Some(n);
            n += 1;
        }
    }
    let stiffness = restrict(&field.stiffness, &dof_of_vertex, n);
    let mass = restrict(&field.mass, &dof_of_vertex, n);
    let mut coupling = DMatrix::zeros(n, field.coupling.ncols());
    for (v, dof) in dof_of_vertex.iter().enumerate() {
        if let Some(d) = *dof {
            coupling.row_mut(d).copy_from(&field.coupling.row(v));
        }
    }
    if n > 0 {
        CscCholesky::factor(&to_csc_symmetric(&stiffness)).map_err(|_| {
            MonaError::Gauge("gauged stiffness is not positive definite".into())
        })?;
    }
    Ok(FieldModel {
        stiffness,
        mass,
        coupling,
        parts: vec![FieldPart {
            mesh: field.mesh,
            materials: field.materials,
            windings: field.windings,
            dof_of_vertex,
            first_winding: 0,
        }],
    })
}

impl FieldModel {
    /// Assembles and gauges with the mesh's own boundary.
    pub fn build(mesh: TriMesh, materials: MaterialMap, windings: WindingSpec) -> Result<Self> {
        let boundary = mesh.boundary().to_vec();
        apply_gauge(UngaugedField::assemble(mesh, materials, windings)?, &boundary)
    }

    /// No dofs, no windings.
    pub fn empty() -> Self {
        FieldModel {
            stiffness: CsrMatrix::zeros(0, 0),
            mass: CsrMatrix::zeros(0, 0),
            coupling: DMatrix::zeros(0, 0),
            parts: Vec::new(),
        }
    }

    /// Block-diagonal union of independent devices.
    pub fn stack(models: Vec<FieldModel>) -> Self {
        let n: usize = models.iter().map(FieldModel::n_dofs).sum();
        let w: usize = models.iter().map(FieldModel::n_windings).sum();
        let mut k = Assembler::new(n);
        let mut m = Assembler::new(n);
        let mut coupling = DMatrix::zeros(n, w);
        let mut parts = Vec::new();
        let (mut dof0, mut w0) = (0, 0);
        for model in models {
            for (asm, a) in [(&mut k, &model.stiffness), (&mut m, &model.mass)] {
                for (i, row) in a.row_iter().enumerate() {
                    for (&j, &v) in row.col_indices().iter().zip(row.values()) {
                        asm.add(dof0 + i, dof0 + j, v);
                    }
                }
            }
            coupling
                .view_mut((dof0, w0), model.coupling.shape())
                .copy_from(&model.coupling);
            for mut part in model.parts {
                part.dof_of_vertex.iter_mut().flatten().for_each(|d| *d += dof0);
                part.first_winding += w0;
                parts.push(part);
            }
            dof0 += model.stiffness.nrows();
            w0 += model.coupling.ncols();
        }
        FieldModel {
            stiffness: k.finish(),
            mass: m.finish(),
            coupling,
            parts,
        }
    }

    pub fn n_dofs(&self) -> usize {
        self.stiffness.nrows()
    }

    pub fn n_windings(&self) -> usize {
        self.coupling.ncols()
    }

    /// Magnetostatic solve `K a = X i`.
    pub fn solve_static(&self, currents: &DVector<f64>) -> Result<DVector<f64>> {
        if currents.len() != self.n_windings() {
            return Err(MonaError::Dimension(format!(
                "{} currents for {} windings",
                currents.len(),
                self.n_windings()
            )));
        }
        if self.n_dofs() == 0 {
            return Ok(DVector::zeros(0));
        }
        let chol = CscCholesky::factor(&to_csc_symmetric(&self.stiffness))
            .map_err(|_| MonaError::Gauge("stiffness factorization failed".into()))?;
        let rhs = &self.coupling * currents;
        Ok(chol.solve(&rhs).column(0).into_owned())
    }

    /// Winding flux linkages `X^T a`.
    pub fn flux_linkage(&self, a: &DVector<f64>) -> DVector<f64> {
        self.coupling.tr_mul(a)
    }

    /// Field energy `1/2 a^T K a`.
    pub fn energy(&self, a: &DVector<f64>) -> f64 {
        0.5 * a.dot(&(&self.stiffness * a))
    }

    /// Dense copies, for small models and tests.
    pub fn dense_stiffness(&self) -> DMatrix<f64> {
        DMatrix::from(&self.stiffness)
    }

    pub fn dense_mass(&self) -> DMatrix<f64> {
        DMatrix::from(&self.mass)
    }
}
