//! Relax a single +1 vortex in an applied field and report what survived.
//!
//! The starting guess is a degree-1 ansatz for the order parameter and the
//! symmetric gauge for the applied field, contaminated with a band-limited
//! random perturbation. The run projects the potential into the Coulomb
//! gauge, descends to a critical point, and then checks the topological
//! and variational bookkeeping (winding, total vorticity, Euler-Lagrange
//! residuals). Finishes with a save/load round trip.
//!
//! Run with `cargo run --example vortex_relaxation`.

use std::error::Error;

use gllab_core::descent::{el_residual, minimize_gl, vortex_ansatz, SolveConfig};
use gllab_core::gauge::{coulomb_project, seeded_smooth_potential};
use gllab_core::vorticity::{vorticity_mu, winding_number, LoopRect};
use gllab_core::{field_io, gl_energy, Grid, Params, ScalarField, State};

fn main() -> Result<(), Box<dyn Error>> {
    let g = Grid::square(1.0, 48);
    let p = Params::new(0.35, 2.0);

    let (u_re, u_im) = vortex_ansatz(g, (0.0, 0.0), 1, p.epsilon)?;
    // Symmetric gauge for the applied field, plus a toned-down random
    // perturbation so the projection step has real work to do.
    let mut a = seeded_smooth_potential(g, 7);
    for v in a.x.values_mut() {
        *v *= 0.2;
    }
    for v in a.y.values_mut() {
        *v *= 0.2;
    }
    a.x.axpy(-0.5 * p.h_ex, &ScalarField::from_fn(g, |_, y| y));
    a.y.axpy(0.5 * p.h_ex, &ScalarField::from_fn(g, |x, _| x));
    let messy = State::new(u_re, u_im, a)?;
    println!(
        "initial:   energy {:>12.6}  max|div A| {:.3e}",
        gl_energy(&messy, &p)?,
        messy.a.div().max_abs()
    );

    let (fixed, rep) = coulomb_project(&messy, 1e-6)?;
    println!(
        "projected: div {:.3e} -> {:.3e} in {} passes (energy {:.6})",
        rep.initial_div,
        rep.final_div,
        rep.passes,
        gl_energy(&fixed, &p)?
    );

    let cfg = SolveConfig {
        max_iters: 4000,
        tol_grad: 5e-3,
        ..SolveConfig::default()
    };
    let out = minimize_gl(&fixed, &p, &cfg)?;
    println!(
        "relaxed:   energy {:>12.6}  grad {:.3e}  iters {}  converged {}  div {:.3e}",
        out.energy, out.grad_norm, out.iters, out.converged, out.final_div
    );

    let w = winding_number(&out.state.u_re, &out.state.u_im, LoopRect::full_boundary(g))?;
    let mass = vorticity_mu(&out.state).integrate()?;
    println!(
        "vortex:    winding {}  total vorticity {:.6} (2*pi = {:.6})",
        w,
        mass,
        std::f64::consts::TAU
    );

    let (ru, riu, ra) = el_residual(&out.state, &p);
    println!("residual:  u ({:.3e}, {:.3e})  A {:.3e}", ru, riu, ra);

    let dir = std::env::temp_dir().join("vortex_relaxation_demo");
    std::fs::create_dir_all(&dir)?;
    let manifest = dir.join("state.json");
    field_io::write_state(&manifest, &out.state, &p)?;
    let (back, p2) = field_io::read_state(&manifest)?;
    let mut diff = 0.0f64;
    for (a, b) in back.u_re.values().iter().zip(out.state.u_re.values()) {
        diff = diff.max((a - b).abs());
    }
    println!(
        "round trip: max|u_re - u_re'| {:.1e}, epsilon {} -> {}",
        diff, p.epsilon, p2.epsilon
    );
    Ok(())
}
