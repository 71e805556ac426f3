use super::mesh::{MaterialMap, TriMesh, Winding, WindingSpec};
use super::model::FieldModel;
use crate::error::{MonaError, Result};

/// Material and winding data attached to a mesh region.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub id: usize,
    pub nu: f64,
    pub sigma: f64,
    /// Zero-based winding index and the side's orientation (+1 / -1).
    pub winding: Option<(usize, f64)>,
}

/// A mesh whose triangles carry region ids, plus the region table.
///
/// This is what mesh files and the built-in transformer generator produce.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshDescription {
    pub mesh: TriMesh,
    pub triangle_region: Vec<usize>,
    pub regions: Vec<Region>,
    /// Turns per winding, indexed by zero-based winding id.
    pub winding_turns: Vec<f64>,
}

impl MeshDescription {
    fn region(&self, id: usize) -> Result<&Region> {
        self.regions
            .iter()
            .find(|r| r.id == id)
            .ok_or_else(|| MonaError::InvalidMesh(format!("region {id} is not in the region table")))
    }

    pub fn materials(&self) -> Result<MaterialMap> {
        if self.triangle_region.len() != self.mesh.n_triangles() {
            return Err(MonaError::Dimension(format!(
                "{} region ids for {} triangles",
                self.triangle_region.len(),
                self.mesh.n_triangles()
            )));
        }
        let mut nu = Vec::with_capacity(self.mesh.n_triangles());
        let mut sigma = Vec::with_capacity(self.mesh.n_triangles());
        for &id in &self.triangle_region {
            let r = self.region(id)?;
            nu.push(r.nu);
            sigma.push(r.sigma);
        }
        let m = MaterialMap { nu, sigma };
        m.validate(&self.mesh)?;
        Ok(m)
    }

    pub fn windings(&self) -> Result<WindingSpec> {
        let mut windings: Vec<Winding> = self
            .winding_turns
            .iter()
            .map(|&turns| Winding {
                triangles: Vec::new(),
                orientation: Vec::new(),
                turns,
                area: 0.0,
            })
            .collect();
        for (t, &id) in self.triangle_region.iter().enumerate() {
            if let Some((k, s)) = self.region(id)?.winding {
                let w = windings.get_mut(k).ok_or_else(|| MonaError::InvalidWinding {
                    winding: k,
                    reason: "region refers to an undeclared winding".into(),
                })?;
                w.triangles.push(t);
                w.orientation.push(s);
                w.area += self.mesh.area(t);
            }
        }
        Ok(WindingSpec { windings })
    }

    pub fn build_field(&self) -> Result<FieldModel> {
        let materials = self.materials()?;
        let windings = self.windings()?;
        FieldModel::build(self.mesh.clone(), materials, windings)
    }
}
