//! Scratch probe of error paths, not part of the crate's examples proper.

use gllab_core::descent::{minimize_gl, vortex_ansatz, SolveConfig};
use gllab_core::gauge::{coulomb_project, seeded_smooth_potential};
use gllab_core::vorticity::{winding_number, LoopRect};
use gllab_core::{field_io, Grid, Params, ScalarField, State, VectorField};

fn main() {
    let g = Grid::square(1.0, 48);

    println!("-- inverted grid bounds");
    match Grid::new(1.0, -1.0, 0.0, 1.0, 8, 8) {
        Ok(_) => println!("UNEXPECTED OK"),
        Err(e) => println!("err: {e}"),
    }

    println!("-- ansatz degree 9");
    match vortex_ansatz(g, (0.0, 0.0), 9, 0.25) {
        Ok(_) => println!("UNEXPECTED OK"),
        Err(e) => println!("err: {e}"),
    }

    println!("-- mismatched grids in State::new");
    let g2 = Grid::square(1.0, 32);
    match State::new(
        ScalarField::constant(g, 1.0),
        ScalarField::constant(g2, 0.0),
        VectorField::zeros(g),
    ) {
        Ok(_) => println!("UNEXPECTED OK"),
        Err(e) => println!("err: {e}"),
    }

    println!("-- negative step0");
    let s = State::uniform(g);
    let bad = SolveConfig {
        step0: -1.0,
        ..SolveConfig::default()
    };
    match minimize_gl(&s, &Params::new(0.5, 0.0), &bad) {
        Ok(_) => println!("UNEXPECTED OK"),
        Err(e) => println!("err: {e}"),
    }

    println!("-- read_state on missing manifest");
    match field_io::read_state(std::path::Path::new("/tmp/definitely_missing_manifest.json")) {
        Ok(_) => println!("UNEXPECTED OK"),
        Err(e) => println!("err: {e}"),
    }

    println!("-- degenerate loop");
    match LoopRect::new(g, 5, 5, 0, 8) {
        Ok(_) => println!("UNEXPECTED OK"),
        Err(e) => println!("err: {e}"),
    }

    println!("-- loop through a vortex core");
    let (ur, ui) = vortex_ansatz(g, (0.0, 0.0), 1, 0.25).unwrap();
    match LoopRect::new(g, 24, 36, 24, 36).and_then(|lp| winding_number(&ur, &ui, lp)) {
        Ok(w) => println!("UNEXPECTED OK: winding {w}"),
        Err(e) => println!("err: {e}"),
    }

    println!("-- unreachable projection tolerance");
    let rough = State::new(
        ScalarField::constant(g, 1.0),
        ScalarField::zeros(g),
        seeded_smooth_potential(g, 3),
    )
    .unwrap();
    match coulomb_project(&rough, 1e-16) {
        Ok((_, rep)) => println!("UNEXPECTED OK: final div {:.3e}", rep.final_div),
        Err(e) => println!("err: {e}"),
    }

    println!("-- projection idempotence on a clean state");
    let clean = State::uniform(g);
    let (_, rep) = coulomb_project(&clean, 1e-6).unwrap();
    println!("passes: {} (expected 0)", rep.passes);
}
