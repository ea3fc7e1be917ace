use crate::{BlockArgs, BlocksArg, ExecArg, Global};
use onetwo::blocks::{square_blocks, strip_blocks, whole_block, BlockSet};
use onetwo::hexlattice::{parse_lattice, HexGraph};
use onetwo::model::{
    enumerate_states_guarded, is_admissible, random_admissible_boundary, BoundaryCondition, EnumGuard, StateSpace,
    Weights,
};
use onetwo::par::Exec;
use onetwo::{rng, Error, Result};
use serde::Deserialize;
use std::fs;

pub struct Instance {
    pub g: HexGraph,
    pub w: Weights,
    pub b: BoundaryCondition,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum BoundaryFile {
    States { states: Vec<bool> },
    Present { present: Vec<usize> },
    Bare(Vec<bool>),
}

pub fn exec(gl: &Global) -> Exec {
    match gl.exec {
        ExecArg::Sequential => Exec::Sequential,
        ExecArg::Parallel => Exec::Parallel,
    }
}

pub fn boundary(gl: &Global, g: &HexGraph) -> Result<BoundaryCondition> {
    if gl.boundary == "random" {
        return Ok(random_admissible_boundary(g, &mut rng::stream(gl.seed, 0)));
    }
    let b = {
        let text = fs::read_to_string(&gl.boundary).map_err(|e| Error::Argument(format!("{}: {e}", gl.boundary)))?;
        let parsed: BoundaryFile =
            serde_json::from_str(&text).map_err(|e| Error::Argument(format!("{}: {e}", gl.boundary)))?;
        match parsed {
            BoundaryFile::States { states } | BoundaryFile::Bare(states) => {
                if states.len() != g.boundary.len() {
                    return Err(Error::Mismatch(format!(
                        "{} boundary states for {} boundary edges",
                        states.len(),
                        g.boundary.len()
                    )));
                }
                BoundaryCondition::new(states)
            }
            BoundaryFile::Present { present } => BoundaryCondition::from_present_edges(g, &present)?,
        }
    };
    if !is_admissible(g, &b) {
        return Err(Error::Inadmissible);
    }
    Ok(b)
}

pub fn instance(gl: &Global) -> Result<Instance> {
    let g = parse_lattice(&gl.lattice)?;
    let w = Weights::parse(&gl.weights)?;
    let b = boundary(gl, &g)?;
    Ok(Instance { g, w, b })
}

pub fn space(gl: &Global, inst: &Instance) -> Result<StateSpace> {
    let guard = EnumGuard { max_states: gl.max_states, ..EnumGuard::default() };
    enumerate_states_guarded(&inst.g, &inst.b, guard)
}

/// State space small enough for dense matrices.
pub fn dense_space(gl: &Global, inst: &Instance) -> Result<StateSpace> {
    let sp = space(gl, inst)?;
    if sp.len() > gl.max_dense {
        return Err(Error::Guard(format!("{} states exceed --max-dense {}", sp.len(), gl.max_dense)));
    }
    Ok(sp)
}

pub fn blocks(g: &HexGraph, a: &BlockArgs) -> Result<BlockSet> {
    match a.blocks {
        BlocksArg::Strip => strip_blocks(g, a.l),
        BlocksArg::Square => square_blocks(g, a.l),
        BlocksArg::Whole => Ok(whole_block(g)),
    }
}
