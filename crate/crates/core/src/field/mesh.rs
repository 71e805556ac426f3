use std::collections::HashMap;

use crate::error::{MonaError, Result};

/// Planar triangle mesh of a device cross-section with out-of-plane depth.
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    vertices: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    boundary: Vec<usize>,
    depth: f64,
}

impl TriMesh {
    /// Builds a mesh; boundary vertices are those on edges used by one triangle.
    pub fn new(vertices: Vec<[f64; 2]>, triangles: Vec<[usize; 3]>, depth: f64) -> Result<Self> {
        if !(depth > 0.0 && depth.is_finite()) {
            return Err(MonaError::InvalidMesh(format!("depth must be positive, got {depth}")));
        }
        if triangles.is_empty() {
            return Err(MonaError::InvalidMesh("no triangles".into()));
        }
        if vertices.iter().flatten().any(|c| !c.is_finite()) {
            return Err(MonaError::NonFinite("mesh vertices"));
        }
        for (t, tri) in triangles.iter().enumerate() {
            if let Some(&v) = tri.iter().find(|&&v| v >= vertices.len()) {
                return Err(MonaError::InvalidMesh(format!(
                    "triangle {t} references vertex {v}, mesh has {}",
                    vertices.len()
                )));
            }
        }
        let mut mesh = TriMesh {
            vertices,
            triangles,
            boundary: Vec::new(),
            depth,
        };
        for t in 0..mesh.triangles.len() {
            let area = mesh.signed_area(t);
            if area <= 0.0 {
                return Err(MonaError::DegenerateTriangle { triangle: t, area });
            }
        }
        mesh.boundary = mesh.boundary_from_edges();
        if mesh.boundary.is_empty() {
            return Err(MonaError::InvalidMesh("empty boundary".into()));
        }
        Ok(mesh)
    }

    fn boundary_from_edges(&self) -> Vec<usize> {
        let mut count: HashMap<(usize, usize), u32> = HashMap::new();
        for tri in &self.triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                *count.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        let mut on_boundary = vec![false; self.vertices.len()];
        for ((a, b), c) in count {
            if c == 1 {
                on_boundary[a] = true;
                on_boundary[b] = true;
            }
        }
        (0..self.vertices.len()).filter(|&v| on_boundary[v]).collect()
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    /// Sorted boundary vertex indices.
    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    pub fn depth(&self) -> f64 {
        self.depth
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|v| self.vertices[v]);
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    }

    pub fn area(&self, t: usize) -> f64 {
        self.signed_area(t).abs()
    }

    /// Constant gradients of the three P1 hat functions on triangle `t`.
    pub fn hat_gradients(&self, t: usize) -> [[f64; 2]; 3] {
        let p = self.triangles[t].map(|v| self.vertices[v]);
        let twice = 2.0 * self.signed_area(t);
        let mut g = [[0.0; 2]; 3];
        for (i, gi) in g.iter_mut().enumerate() {
            let j = (i + 1) % 3;
            let k = (i + 2) % 3;
            *gi = [(p[j][1] - p[k][1]) / twice, (p[k][0] - p[j][0]) / twice];
        }
        g
    }

    pub fn centroid(&self, t: usize) -> [f64; 2] {
        let p = self.triangles[t].map(|v| self.vertices[v]);
        [
            (p[0][0] + p[1][0] + p[2][0]) / 3.0,
            (p[0][1] + p[1][1] + p[2][1]) / 3.0,
        ]
    }
}

/// Per-triangle reluctivity `nu` [m/H] and conductivity `sigma` [S/m].
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialMap {
    pub nu: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl MaterialMap {
    pub fn uniform(n_triangles: usize, nu: f64, sigma: f64) -> Self {
        MaterialMap {
            nu: vec![nu; n_triangles],
            sigma: vec![sigma; n_triangles],
        }
    }

    pub fn validate(&self, mesh: &TriMesh) -> Result<()> {
        if self.nu.len() != mesh.n_triangles() || self.sigma.len() != mesh.n_triangles() {
            return Err(MonaError::Dimension(format!(
                "materials for {}/{} triangles, mesh has {}",
                self.nu.len(),
                self.sigma.len(),
                mesh.n_triangles()
            )));
        }
        for (t, (&nu, &sigma)) in self.nu.iter().zip(&self.sigma).enumerate() {
            if !(nu > 0.0 && nu.is_finite()) {
                return Err(MonaError::InvalidMaterial {
                    triangle: t,
                    reason: format!("reluctivity {nu} must be positive"),
                });
            }
            if !(sigma >= 0.0 && sigma.is_finite()) {
                return Err(MonaError::InvalidMaterial {
                    triangle: t,
                    reason: format!("conductivity {sigma} must be non-negative"),
                });
            }
        }
        Ok(())
    }
}

/// Stranded coil: `turns` conductors spread over `triangles`.
///
/// `orientation[k]` is +1 on go-side and -1 on return-side triangles. `area`
/// is the total cross-section, the winding function being
/// `orientation * turns / area` on the coil and zero elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct Winding {
    pub triangles: Vec<usize>,
    pub orientation: Vec<f64>,
    pub turns: f64,
    pub area: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct WindingSpec {
    pub windings: Vec<Winding>,
}

impl WindingSpec {
    pub fn len(&self) -> usize {
        self.windings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windings.is_empty()
    }

    pub fn validate(&self, mesh: &TriMesh, materials: &MaterialMap) -> Result<()> {
        for (k, w) in self.windings.iter().enumerate() {
            let err = |reason: String| MonaError::InvalidWinding { winding: k, reason };
            if w.triangles.is_empty() || w.area.is_nan() || w.area <= 0.0 {
                return Err(err("empty winding region".into()));
            }
            if w.orientation.len() != w.triangles.len() {
                return Err(err("one orientation per triangle required".into()));
            }
            if w.orientation.iter().any(|&s| s != 1.0 && s != -1.0) {
                return Err(err("orientation must be +1 or -1".into()));
            }
            if !(w.turns > 0.0 && w.turns.is_finite()) {
                return Err(err(format!("turns {} must be positive", w.turns)));
            }
            let mut total = 0.0;
            for &t in &w.triangles {
                if t >= mesh.n_triangles() {
                    return Err(err(format!("triangle {t} out of range")));
                }
                if materials.sigma[t] > 0.0 {
                    return Err(err(format!("triangle {t} overlaps a conducting region")));
                }
                total += mesh.area(t);
            }
            if ((total - w.area) / w.area).abs() > 1e-12 {
                return Err(err(format!(
                    "area {} differs from triangle area sum {total}",
                    w.area
                )));
            }
        }
        Ok(())
    }
}
