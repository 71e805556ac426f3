//! Line-oriented mesh file format.
//!
//! ```text
//! # comments start with '#', tokens are whitespace separated
//! depth 0.1                     # out-of-plane depth [m]
//! vertices N
//! x y                           # N lines [m]
//! triangles M
//! i j k region_id               # M lines, zero-based vertex indices, counter-clockwise
//! regions R
//! region_id nu sigma winding orientation
//!                               # R lines; nu [m/H], sigma [S/m];
//!                               # winding 0 = none, k >= 1 = winding k; orientation +1 / -1
//! windings W
//! winding_id turns              # W lines, winding_id in 1..=W
//! ```
//!
//! Sections may appear in any order after `depth`; `regions` and `windings`
//! are optional when no triangle references them.

use std::fmt::Write as _;

use super::description::{MeshDescription, Region};
use super::mesh::TriMesh;
use crate::error::{MonaError, Result};

fn syntax(line: usize, msg: impl Into<String>) -> MonaError {
    MonaError::InvalidMesh(format!("line {line}: {}", msg.into()))
}

fn num<T: std::str::FromStr>(tok: &str, line: usize, what: &str) -> Result<T> {
    tok.parse()
        .map_err(|_| syntax(line, format!("cannot parse {what} from `{tok}`")))
}

pub fn parse_mesh(text: &str) -> Result<MeshDescription> {
    let lines: Vec<(usize, Vec<&str>)> = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.split('#').next().unwrap_or("")))
        .map(|(k, l)| (k, l.split_whitespace().collect::<Vec<_>>()))
        .filter(|(_, toks)| !toks.is_empty())
        .collect();

    let mut depth = None;
    let mut vertices = None;
    let mut triangles: Option<Vec<([usize; 3], usize)>> = None;
    let mut regions = Vec::new();
    let mut turns: Vec<Option<f64>> = Vec::new();

    let mut pos = 0;
    let take_block = |pos: &mut usize, count: usize, header_line: usize| {
        if *pos + count > lines.len() {
            return Err(syntax(header_line, format!("expected {count} data lines")));
        }
        let block = &lines[*pos..*pos + count];
        *pos += count;
        Ok(block)
    };

    while pos < lines.len() {
        let (ln, toks) = &lines[pos];
        let ln = *ln;
        pos += 1;
        let keyword = toks[0].to_ascii_lowercase();
        let arg = |what: &str| -> Result<usize> {
            if toks.len() != 2 {
                return Err(syntax(ln, format!("expected `{what} <count>`")));
            }
            num(toks[1], ln, "count")
        };
        match keyword.as_str() {
            "depth" => {
                if toks.len() != 2 {
                    return Err(syntax(ln, "expected `depth <m>`"));
                }
                depth = Some(num::<f64>(toks[1], ln, "depth")?);
            }
            "vertices" => {
                let n = arg("vertices")?;
                let mut v = Vec::with_capacity(n);
                for (l, t) in take_block(&mut pos, n, ln)? {
                    if t.len() != 2 {
                        return Err(syntax(*l, "vertex line needs `x y`"));
                    }
                    v.push([num(t[0], *l, "x")?, num(t[1], *l, "y")?]);
                }
                vertices = Some(v);
            }
            "triangles" => {
                let n = arg("triangles")?;
                let mut tris = Vec::with_capacity(n);
                for (l, t) in take_block(&mut pos, n, ln)? {
                    if t.len() != 4 {
                        return Err(syntax(*l, "triangle line needs `i j k region`"));
                    }
                    tris.push((
                        [num(t[0], *l, "i")?, num(t[1], *l, "j")?, num(t[2], *l, "k")?],
                        num(t[3], *l, "region")?,
                    ));
                }
                triangles = Some(tris);
            }
            "regions" => {
                let n = arg("regions")?;
                for (l, t) in take_block(&mut pos, n, ln)? {
                    if t.len() != 5 {
                        return Err(syntax(*l, "region line needs `id nu sigma winding orientation`"));
                    }
                    let winding: usize = num(t[3], *l, "winding")?;
                    let orientation: f64 = num(t[4], *l, "orientation")?;
                    if winding > 0 && orientation != 1.0 && orientation != -1.0 {
                        return Err(syntax(*l, "orientation must be 1 or -1"));
                    }
                    regions.push(Region {
                        id: num(t[0], *l, "region id")?,
                        nu: num(t[1], *l, "nu")?,
                        sigma: num(t[2], *l, "sigma")?,
                        winding: (winding > 0).then(|| (winding - 1, orientation)),
                    });
                }
            }
            "windings" => {
                let n = arg("windings")?;
                turns = vec![None; n];
                for (l, t) in take_block(&mut pos, n, ln)? {
                    if t.len() != 2 {
                        return Err(syntax(*l, "winding line needs `id turns`"));
                    }
                    let id: usize = num(t[0], *l, "winding id")?;
                    if id == 0 || id > n {
                        return Err(syntax(*l, format!("winding id {id} outside 1..={n}")));
                    }
                    turns[id - 1] = Some(num(t[1], *l, "turns")?);
                }
            }
            other => return Err(syntax(ln, format!("unknown section `{other}`"))),
        }
    }

    let depth = depth.ok_or_else(|| MonaError::InvalidMesh("missing `depth`".into()))?;
    let vertices = vertices.ok_or_else(|| MonaError::InvalidMesh("missing `vertices`".into()))?;
    let triangles = triangles.ok_or_else(|| MonaError::InvalidMesh("missing `triangles`".into()))?;
    let winding_turns = turns
        .into_iter()
        .enumerate()
        .map(|(k, t)| t.ok_or_else(|| MonaError::InvalidMesh(format!("winding {} has no turns line", k + 1))))
        .collect::<Result<Vec<_>>>()?;
    let (tris, triangle_region): (Vec<_>, Vec<_>) = triangles.into_iter().unzip();
    let mesh = TriMesh::new(vertices, tris, depth)?;
    let desc = MeshDescription {
        mesh,
        triangle_region,
        regions,
        winding_turns,
    };
    // surface region/winding errors at load time
    desc.materials()?;
    desc.windings()?;
    Ok(desc)
}

pub fn write_mesh(desc: &MeshDescription) -> String {
    let mut s = String::new();
    let m = &desc.mesh;
    let _ = writeln!(s, "depth {}", m.depth());
    let _ = writeln!(s, "vertices {}", m.n_vertices());
    for v in m.vertices() {
        let _ = writeln!(s, "{} {}", v[0], v[1]);
    }
    let _ = writeln!(s, "triangles {}", m.n_triangles());
    for (t, r) in m.triangles().iter().zip(&desc.triangle_region) {
        let _ = writeln!(s, "{} {} {} {}", t[0], t[1], t[2], r);
    }
    let _ = writeln!(s, "regions {}", desc.regions.len());
    for r in &desc.regions {
        let (w, o) = r.winding.map_or((0, 1.0), |(k, o)| (k + 1, o));
        let _ = writeln!(s, "{} {} {} {} {}", r.id, r.nu, r.sigma, w, o);
    }
    let _ = writeln!(s, "windings {}", desc.winding_turns.len());
    for (k, n) in desc.winding_turns.iter().enumerate() {
        let _ = writeln!(s, "{} {}", k + 1, n);
    }
    s
}
