//! Built-in two-winding transformer cross-section.
//!
//! A rectangular core frame with one window sits in an air box. The primary
//! coil is wound around the left limb, the secondary around the right limb;
//! each coil has a go-side inside the window and a return side outside the
//! core. The mesh is a tensor grid aligned to every material interface, each
//! cell split into two triangles.

use std::f64::consts::PI;

use super::description::{MeshDescription, Region};
use super::mesh::TriMesh;
use crate::error::{MonaError, Result};

pub const MU_0: f64 = 4.0e-7 * PI;

pub const REGION_AIR: usize = 1;
pub const REGION_CORE: usize = 2;
pub const REGION_PRIMARY_GO: usize = 3;
pub const REGION_PRIMARY_RETURN: usize = 4;
pub const REGION_SECONDARY_GO: usize = 5;
pub const REGION_SECONDARY_RETURN: usize = 6;

/// Dimensions in metres.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformerParams {
    pub core_width: f64,
    pub core_height: f64,
    pub limb_width: f64,
    pub coil_width: f64,
    pub coil_height: f64,
    /// Gap between coil sides and core.
    pub clearance: f64,
    /// Air between the outermost part and the Dirichlet boundary.
    pub air_margin: f64,
    pub depth: f64,
    pub turns_primary: f64,
    pub turns_secondary: f64,
    pub relative_permeability: f64,
    /// Conductivity of the sheet material.
    pub bulk_conductivity: f64,
    /// Lamination sheet thickness; the core conductivity is reduced by
    /// `(lamination_thickness / limb_width)^2`.
    pub lamination_thickness: f64,
    /// Target cell size.
    pub mesh_size: f64,
}

impl Default for TransformerParams {
    fn default() -> Self {
        TransformerParams {
            core_width: 0.20,
            core_height: 0.20,
            limb_width: 0.04,
            coil_width: 0.02,
            coil_height: 0.08,
            clearance: 0.005,
            air_margin: 0.05,
            depth: 0.1,
            turns_primary: 1600.0,
            turns_secondary: 200.0,
            relative_permeability: 1000.0,
            bulk_conductivity: 2.0e6,
            lamination_thickness: 5.0e-4,
            mesh_size: 0.01,
        }
    }
}

impl TransformerParams {
    pub fn core_conductivity(&self) -> f64 {
        self.bulk_conductivity * (self.lamination_thickness / self.limb_width).powi(2)
    }

    fn validate(&self) -> Result<()> {
        let named = [
            ("core_width", self.core_width),
            ("core_height", self.core_height),
            ("limb_width", self.limb_width),
            ("coil_width", self.coil_width),
            ("coil_height", self.coil_height),
            ("clearance", self.clearance),
            ("air_margin", self.air_margin),
            ("depth", self.depth),
            ("turns_primary", self.turns_primary),
            ("turns_secondary", self.turns_secondary),
            ("relative_permeability", self.relative_permeability),
            ("lamination_thickness", self.lamination_thickness),
            ("mesh_size", self.mesh_size),
        ];
        for (name, v) in named {
            if !(v > 0.0 && v.is_finite()) {
                return Err(MonaError::Geometry(format!("{name} must be positive, got {v}")));
            }
        }
        if self.bulk_conductivity.is_nan() || self.bulk_conductivity < 0.0 {
            return Err(MonaError::Geometry("bulk_conductivity must be non-negative".into()));
        }
        let window_w = self.core_width - 2.0 * self.limb_width;
        let window_h = self.core_height - 2.0 * self.limb_width;
        if window_w <= 0.0 || window_h <= 0.0 {
            return Err(MonaError::Geometry("limbs leave no window".into()));
        }
        // two go-sides plus clearances must fit side by side in the window
        if 2.0 * (self.clearance + self.coil_width) >= window_w {
            return Err(MonaError::Geometry(format!(
                "coil sides ({} m each plus clearance) overlap inside a {window_w} m window",
                self.coil_width
            )));
        }
        if self.coil_height + 2.0 * self.clearance > window_h {
            return Err(MonaError::Geometry(format!(
                "coil height {} does not fit the {window_h} m window",
                self.coil_height
            )));
        }
        Ok(())
    }
}

fn subdivide(breaks: &[f64], h: f64) -> Vec<f64> {
    let mut out = vec![breaks[0]];
    for w in breaks.windows(2) {
        let n = ((w[1] - w[0]) / h - 1e-9).ceil().max(1.0) as usize;
        for k in 1..=n {
            out.push(if k == n {
                w[1]
            } else {
                w[0] + (w[1] - w[0]) * k as f64 / n as f64
            });
        }
    }
    out
}

fn inside(v: f64, lo: f64, hi: f64) -> bool {
    v > lo && v < hi
}

/// Generates mesh, region table and winding data for `params`.
pub fn generate_transformer_mesh(params: &TransformerParams) -> Result<MeshDescription> {
    params.validate()?;
    let p = params;
    let (hw, hh) = (p.core_width / 2.0, p.core_height / 2.0);
    let (t, g, wc, m) = (p.limb_width, p.clearance, p.coil_width, p.air_margin);

    let xb = [
        -hw - g - wc - m,
        -hw - g - wc,
        -hw - g,
        -hw,
        -hw + t,
        -hw + t + g,
        -hw + t + g + wc,
        hw - t - g - wc,
        hw - t - g,
        hw - t,
        hw,
        hw + g,
        hw + g + wc,
        hw + g + wc + m,
    ];
    let yb = [
        -hh - m,
        -hh,
        -hh + t,
        -p.coil_height / 2.0,
        p.coil_height / 2.0,
        hh - t,
        hh,
        hh + m,
    ];
    let xs = subdivide(&xb, p.mesh_size);
    let ys = subdivide(&yb, p.mesh_size);
    let (nx, ny) = (xs.len() - 1, ys.len() - 1);

    let vertices: Vec<[f64; 2]> = ys
        .iter()
        .flat_map(|&y| xs.iter().map(move |&x| [x, y]))
        .collect();
    let vid = |ix: usize, iy: usize| iy * (nx + 1) + ix;

    let classify = |x: f64, y: f64| -> usize {
        let in_coil_rows = inside(y, yb[3], yb[4]);
        if in_coil_rows {
            if inside(x, xb[1], xb[2]) {
                return REGION_PRIMARY_RETURN;
            }
            if inside(x, xb[5], xb[6]) {
                return REGION_PRIMARY_GO;
            }
            if inside(x, xb[7], xb[8]) {
                return REGION_SECONDARY_GO;
            }
            if inside(x, xb[11], xb[12]) {
                return REGION_SECONDARY_RETURN;
            }
        }
        let in_frame = inside(x, xb[3], xb[10]) && inside(y, yb[1], yb[6]);
        let in_window = inside(x, xb[4], xb[9]) && inside(y, yb[2], yb[5]);
        if in_frame && !in_window {
            REGION_CORE
        } else {
            REGION_AIR
        }
    };

    let mut triangles = Vec::with_capacity(2 * nx * ny);
    let mut triangle_region = Vec::with_capacity(2 * nx * ny);
    for iy in 0..ny {
        for ix in 0..nx {
            let cx = 0.5 * (xs[ix] + xs[ix + 1]);
            let cy = 0.5 * (ys[iy] + ys[iy + 1]);
            let region = classify(cx, cy);
            let (v00, v10, v11, v01) = (
                vid(ix, iy),
                vid(ix + 1, iy),
                vid(ix + 1, iy + 1),
                vid(ix, iy + 1),
            );
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
            triangle_region.extend([region, region]);
        }
    }

    let mesh = TriMesh::new(vertices, triangles, p.depth)?;
    let nu_air = 1.0 / MU_0;
    let regions = vec![
        Region {
            id: REGION_AIR,
            nu: nu_air,
            sigma: 0.0,
            winding: None,
        },
        Region {
            id: REGION_CORE,
            nu: nu_air / p.relative_permeability,
            sigma: p.core_conductivity(),
            winding: None,
        },
        Region {
            id: REGION_PRIMARY_GO,
            nu: nu_air,
            sigma: 0.0,
            winding: Some((0, 1.0)),
        },
        Region {
            id: REGION_PRIMARY_RETURN,
            nu: nu_air,
            sigma: 0.0,
            winding: Some((0, -1.0)),
        },
        Region {
            id: REGION_SECONDARY_GO,
            nu: nu_air,
            sigma: 0.0,
            winding: Some((1, -1.0)),
        },
        Region {
            id: REGION_SECONDARY_RETURN,
            nu: nu_air,
            sigma: 0.0,
            winding: Some((1, 1.0)),
        },
    ];
    let desc = MeshDescription {
        mesh,
        triangle_region,
        regions,
        winding_turns: vec![p.turns_primary, p.turns_secondary],
    };

    let windings = desc.windings()?;
    for (k, w) in windings.windings.iter().enumerate() {
        if w.triangles.len() < 2 {
            return Err(MonaError::Geometry(format!(
                "mesh size {} does not resolve winding {k}",
                p.mesh_size
            )));
        }
    }
    Ok(desc)
}
