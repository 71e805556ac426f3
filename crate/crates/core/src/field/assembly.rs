//! P1 assembly of stiffness, mass and winding coupling.
//!
//! Contributions to each matrix entry are summed in triangle order, so the
//! result is reproducible and `K`/`M` are exactly symmetric.

use nalgebra::DMatrix;
use nalgebra_sparse::CsrMatrix;

use super::mesh::{MaterialMap, TriMesh, WindingSpec};
use crate::error::Result;

/// Row-wise triplet accumulator with deterministic duplicate summation.
pub(crate) struct Assembler {
    n: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl Assembler {
    pub(crate) fn new(n: usize) -> Self {
        Assembler {
            n,
            rows: vec![Vec::new(); n],
        }
    }

    pub(crate) fn add(&mut self, i: usize, j: usize, v: f64) {
        self.rows[i].push((j, v));
    }

    pub(crate) fn finish(self) -> CsrMatrix<f64> {
        let mut offsets = Vec::with_capacity(self.n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        offsets.push(0);
        for mut row in self.rows {
            // stable: equal columns keep insertion order
            row.sort_by_key(|&(j, _)| j);
            let mut it = row.into_iter().peekable();
            while let Some((j, mut v)) = it.next() {
                while let Some(&(j2, v2)) = it.peek() {
                    if j2 != j {
                        break;
                    }
                    v += v2;
                    it.next();
                }
                cols.push(j);
                vals.push(v);
            }
            offsets.push(cols.len());
        }
        CsrMatrix::try_from_csr_data(self.n, self.n, offsets, cols, vals)
            .expect("assembled CSR data is well formed")
    }
}

/// Local stiffness `nu * depth * |T| * grad(l_i) . grad(l_j)`.
pub fn local_stiffness(mesh: &TriMesh, t: usize, nu: f64) -> [[f64; 3]; 3] {
    let g = mesh.hat_gradients(t);
    let c = nu * mesh.depth() * mesh.area(t);
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = c * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
        }
    }
    k
}

/// Consistent P1 mass `sigma * depth * |T| / 12 * [[2,1,1],[1,2,1],[1,1,2]]`.
pub fn local_mass(mesh: &TriMesh, t: usize, sigma: f64) -> [[f64; 3]; 3] {
    let c = sigma * mesh.depth() * mesh.area(t) / 12.0;
    let mut m = [[c; 3]; 3];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 2.0 * c;
    }
    m
}

fn assemble_local(
    mesh: &TriMesh,
    local: impl Fn(usize) -> Option<[[f64; 3]; 3]>,
) -> CsrMatrix<f64> {
    let mut asm = Assembler::new(mesh.n_vertices());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let Some(loc) = local(t) else { continue };
        for a in 0..3 {
            for b in 0..3 {
                asm.add(tri[a], tri[b], loc[a][b]);
            }
        }
    }
    asm.finish()
}

/// Ungauged stiffness matrix; constants lie in its kernel.
pub fn assemble_stiffness(mesh: &TriMesh, materials: &MaterialMap) -> Result<CsrMatrix<f64>> {
    materials.validate(mesh)?;
    Ok(assemble_local(mesh, |t| {
        Some(local_stiffness(mesh, t, materials.nu[t]))
    }))
}

/// Conductivity-weighted mass matrix; non-conducting triangles contribute nothing.
pub fn assemble_mass(mesh: &TriMesh, materials: &MaterialMap) -> Result<CsrMatrix<f64>> {
    materials.validate(mesh)?;
    Ok(assemble_local(mesh, |t| {
        let s = materials.sigma[t];
        (s > 0.0).then(|| local_mass(mesh, t, s))
    }))
}

/// Winding matrix `X` (vertices x windings), `X_ik = sum_T s_T N_k / A_k * depth * |T| / 3`.
pub fn assemble_winding(
    mesh: &TriMesh,
    materials: &MaterialMap,
    windings: &WindingSpec,
) -> Result<DMatrix<f64>> {
    materials.validate(mesh)?;
    windings.validate(mesh, materials)?;
    let mut x = DMatrix::zeros(mesh.n_vertices(), windings.len());
    for (k, w) in windings.windings.iter().enumerate() {
        let density = w.turns / w.area;
        for (&t, &s) in w.triangles.iter().zip(&w.orientation) {
            let share = s * density * mesh.depth() * mesh.area(t) / 3.0;
            for &v in &mesh.triangles()[t] {
                x[(v, k)] += share;
            }
        }
    }
    Ok(x)
}
