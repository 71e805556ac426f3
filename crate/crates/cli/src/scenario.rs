use std::collections::HashMap;
use std::path::{Path, PathBuf};

use mona_core::coupled::CoupledSystem;
use mona_core::demo::{builtin_field, BUILTIN_TRANSFORMER};
use mona_core::field::{parse_mesh, FieldModel, TransformerParams};
use mona_core::integrator::{NewtonConfig, Probe, TimeGrid};

use crate::error::{CliError, CliResult};
use crate::netlist::{parse_netlist, Netlist};

/// Everything a transient run needs, validated.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub netlist: Netlist,
    /// Directory that relative `FIELD=` paths are resolved against.
    pub base_dir: PathBuf,
    /// Replaces every `FIELD=` reference when set.
    pub mesh: Option<PathBuf>,
    pub transformer: TransformerParams,
    pub grid: TimeGrid,
    pub probes: Vec<String>,
    pub newton: NewtonConfig,
    pub out_dir: PathBuf,
}

pub fn read_netlist(path: &Path) -> CliResult<Netlist> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::input(path, e))?;
    parse_netlist(&text).map_err(|e| match e {
        CliError::Syntax { line, msg } => CliError::input(path, format!("line {line}: {msg}")),
        other => other,
    })
}

fn load_mesh(path: &Path) -> CliResult<FieldModel> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::input(path, e))?;
    let field = parse_mesh(&text)
        .and_then(|d| d.build_field())
        .map_err(|e| CliError::input(path, e))?;
    Ok(field)
}

impl Scenario {
    pub fn new(
        netlist: Netlist,
        base_dir: PathBuf,
        grid: TimeGrid,
        probes: Vec<String>,
        out_dir: PathBuf,
    ) -> CliResult<Self> {
        if grid.tau <= 0.0 {
            return Err(CliError::Invalid(format!("step size {} must be positive", grid.tau)));
        }
        Ok(Scenario {
            netlist,
            base_dir,
            mesh: None,
            transformer: TransformerParams::default(),
            grid,
            probes,
            newton: NewtonConfig::default(),
            out_dir,
        })
    }

    fn field(&self, reference: &str) -> CliResult<FieldModel> {
        if let Some(mesh) = &self.mesh {
            return load_mesh(mesh);
        }
        if reference.eq_ignore_ascii_case(BUILTIN_TRANSFORMER) {
            return Ok(builtin_field(reference, &self.transformer)?);
        }
        load_mesh(&self.base_dir.join(reference))
    }

    /// Loads every referenced mesh and assembles the coupled system.
    pub fn build_system(&self) -> CliResult<CoupledSystem> {
        let mut cache: HashMap<String, FieldModel> = HashMap::new();
        let mut failure = None;
        let sys = CoupledSystem::from_elements(&self.netlist.elements, self.netlist.n_nodes(), |r| {
            if !cache.contains_key(r) {
                match self.field(r) {
                    Ok(f) => {
                        cache.insert(r.to_string(), f);
                    }
                    Err(e) => {
                        let msg = e.to_string();
                        failure = Some(e);
                        return Err(mona_core::MonaError::Config(msg));
                    }
                }
            }
            Ok(cache[r].clone())
        });
        match (sys, failure) {
            (_, Some(e)) => Err(e),
            (Err(e), None) => Err(e.into()),
            (Ok(sys), None) => Ok(sys.with_node_names(self.netlist.node_names.clone())?),
        }
    }

    pub fn resolve_probes(&self, sys: &CoupledSystem) -> CliResult<Vec<Probe>> {
        Ok(Probe::parse_list(&self.probes, sys)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use mona_core::field::{generate_transformer_mesh, write_mesh};

    fn grid() -> TimeGrid {
        TimeGrid::new(0.0, 1e-3, 1e-4).unwrap()
    }

    #[test]
    fn relative_mesh_paths_resolve_against_the_netlist() {
        let dir = tempfile::tempdir().unwrap();
        let params = TransformerParams {
            mesh_size: 0.02,
            ..TransformerParams::default()
        };
        let desc = generate_transformer_mesh(&params).unwrap();
        std::fs::create_dir(dir.path().join("meshes")).unwrap();
        std::fs::write(dir.path().join("meshes/x.mesh"), write_mesh(&desc)).unwrap();
        let netlist = parse_netlist("V s 1 0 SIN(1 50)\nR r 1 2 1\nM x 2 0 3 0 FIELD=meshes/x.mesh\nR l 3 0 10").unwrap();
        let sc = Scenario::new(netlist, dir.path().into(), grid(), vec!["u=u(3)".into()], dir.path().into()).unwrap();
        let sys = sc.build_system().unwrap();
        assert_eq!(sys.layout.n_a, desc.build_field().unwrap().n_dofs());
        assert_eq!(sc.resolve_probes(&sys).unwrap().len(), 1);
    }

    #[test]
    fn missing_mesh_is_an_input_error() {
        let netlist = parse_netlist("V s 1 0 DC 1\nM x 1 0 FIELD=nowhere.mesh").unwrap();
        let sc = Scenario::new(netlist, "/nonexistent".into(), grid(), vec![], ".".into()).unwrap();
        let err = sc.build_system().unwrap_err();
        assert!(matches!(err, CliError::Input { .. }), "{err}");
        assert!(err.to_string().contains("nowhere.mesh"));
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn node_names_reach_the_probes() {
        let netlist = parse_netlist("V s in 0 DC 1\nR r in out 1\nC c out gnd 1").unwrap();
        let mut sc = Scenario::new(netlist, ".".into(), grid(), vec!["q=psi(out)".into()], ".".into()).unwrap();
        let sys = sc.build_system().unwrap();
        assert!(sc.resolve_probes(&sys).is_ok());
        sc.probes = vec!["a=psi(out)".into(), "a=u(in)".into()];
        assert!(sc.resolve_probes(&sys).is_err());
    }
}
