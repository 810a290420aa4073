//! Coulomb gauge projection: rotate a state so that div A = 0 on the grid.
//!
//! The continuous problem is classical: solve a Neumann Poisson problem
//! (data -A.nu on the boundary) for a gauge function f and shift by grad f.
//! The discrete one is harder than it looks, because our first-derivative
//! stencils are wide: the composed Laplacian d_x d_x + d_y d_y skips a node,
//! so it annihilates checkerboard modes in addition to constants, and a
//! direct solve converges to garbage polluted by those spurious null
//! vectors.
//!
//! What works, and what this module does, in two phases:
//!
//! * Phase one is the classical discretization of the Neumann problem,
//!   solved in a few least-squares refinement passes:
//!
//!   ```text
//!   [ Lap (interior) ]       [ -div A (interior) ]
//!   [ beta * d/dnu   ]  f =  [ -beta * A.nu      ]   boundary nodes
//!   [ tau * Lap5     ]       [ 0                 ]   rough-mode regularizer
//!   [ mean row       ]       [ 0                 ]   constant mode
//!   ```
//!
//!   Interior equation plus boundary condition is a well-posed pairing: no
//!   node is claimed by two competing equations, the data are compatible to
//!   stencil truncation, and the flux rows pin the discrete harmonics. That
//!   last point is the load-bearing one. The Laplace equation alone, even
//!   imposed at every node of the closed square, says nothing about which
//!   harmonic the solution carries, and a least-squares solve of divergence
//!   rows alone will happily absorb an O(1) harmonic whose gradient then
//!   pollutes the projected potential. An earlier version of this module
//!   enforced divergence rows at boundary nodes too, instead of the flux
//!   rows; that variant is over-determined at the boundary, inconsistent at
//!   O(h^2) scale, and its compromise solutions were worse by three orders
//!   of magnitude on both measures at once.
//! * Phase two polishes the divergence on the full grid, boundary rows
//!   included, with the all-nodes ladder
//!
//!   ```text
//!   [ Lap (all nodes)]       [ -div A ]
//!   [ tau * Lap5     ]  f =  [ 0      ]
//!   [ mean row       ]       [ 0      ]
//!   ```
//!
//!   seeded with the phase-one solution. Phase one leaves only O(h^2)
//!   truncation divergence; against data that small the harmonic ambiguity
//!   of the all-nodes system is immaterial, because the least-squares
//!   solution excites near-null directions in proportion to the data norm.
//!   The polish runs a small ladder of tau values with stall detection,
//!   keeping the best iterate, until `max |div A| <= tol_div` everywhere.
//!
//! Shared mechanics for both phases: `Lap5` is the ordinary 3-point
//! Laplacian with mirror boundary rows; it has no checkerboard null space,
//! so a tiny `tau` steers the composed wide Laplacian (which annihilates
//! checkerboards) toward the smooth solution without visibly biasing it.
//! The regularizer lives inside the operator, never on the residual side,
//! so refinement `f += lstsq(M_tau, rhs - M_tau f)` converges to a fixed
//! point of the unregularized equations. The mean row fixes the free
//! constant of the gauge function, which conflicts with nothing.
//!
//! The boundary tangency A.nu = 0 of the continuous gauge is enforced by
//! phase one only to truncation accuracy, and phase two's polish adds its
//! own O(h^2) gradient on the boundary; the final defect is *reported*
//! ([`tangency_defect`], [`ProjectionReport`]) rather than asserted against
//! a tolerance, because only the divergence is consumed by the rest of the
//! library.
//!
//! The sparse QR factorizations are the expensive part (seconds at 128^2
//! and up), so they are cached per grid, phase and rung, and shared across
//! calls. The refinement solves themselves are cheap triangular sweeps.
//!
//! Failure is a first-class outcome. A vector field whose divergence has
//! substantial energy at the grid's Nyquist scale is not the gradient of
//! anything resolvable, and the polish ladder will stall far above any
//! reasonable tolerance. That case returns [`GaugeError::Stalled`] with the
//! best residual reached rather than pretending. The same applies to
//! divergence deposited by adjoint-stencil boundary layers: it lies outside
//! the range of the wide Laplacian, no gauge function can cancel it, and
//! the honest outcome is a stall. The descent module avoids creating such
//! divergence in the first place rather than asking this module to remove
//! it.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use faer::prelude::*;
use faer::sparse::SparseColMat;

use crate::energy::{apply_gauge, State};
use crate::grid::{Grid, ScalarField, VectorField};
use crate::stencil::{centered2, compose, lap3_neumann, Rows};

/// Default target for `max |div A|` after projection.
pub const DEFAULT_DIV_TOL: f64 = 1e-6;

const TAU_LADDER: [f64; 2] = [1e-6, 1e-7];
const MAX_PASSES_PER_RUNG: usize = 14;
const MAX_CLASSICAL_PASSES: usize = 4;
const STALL_FACTOR: f64 = 0.97;
const CLASSICAL_TAU: f64 = 1e-6;

#[derive(Debug, thiserror::Error)]
pub enum GaugeError {
    #[error(
        "gauge projection stalled: best max|div A| = {best_div:.3e} after {passes} passes, \
         target {tol:.1e}; the divergence is too rough for this grid to remove"
    )]
    Stalled {
        best_div: f64,
        tol: f64,
        passes: usize,
    },
}

/// What the projection did, for logs and reports.
#[derive(Clone, Copy, Debug)]
pub struct ProjectionReport {
    pub initial_div: f64,
    pub final_div: f64,
    pub initial_tan: f64,
    pub final_tan: f64,
    pub passes: usize,
    pub rungs_used: usize,
}

/// Largest normal component of `a` over the boundary nodes. Zero means the
/// field is tangent to the box.
pub fn tangency_defect(a: &VectorField) -> f64 {
    let g = a.grid();
    let mut t = 0.0f64;
    for iy in 0..g.npy() {
        t = t.max(a.x.at(0, iy).abs()).max(a.x.at(g.nx, iy).abs());
    }
    for ix in 0..g.npx() {
        t = t.max(a.y.at(ix, 0).abs()).max(a.y.at(ix, g.ny).abs());
    }
    t
}

/// Boundary-node layout shared by the classical matrix build and its rhs:
/// (node index, true for an x-normal edge). Corners appear twice, once per
/// incident edge, since both normal components must vanish there.
fn boundary_rows(g: Grid) -> Vec<(usize, bool)> {
    let mut rows = Vec::with_capacity(2 * (g.npx() + g.npy()));
    for iy in 0..g.npy() {
        rows.push((g.idx(0, iy), true));
        rows.push((g.idx(g.nx, iy), true));
    }
    for ix in 0..g.npx() {
        rows.push((g.idx(ix, 0), false));
        rows.push((g.idx(ix, g.ny), false));
    }
    rows
}

fn wide_laplacian(fs: &ScalarField) -> Vec<f64> {
    let xx = fs.dx().dx();
    let yy = fs.dy().dy();
    let mut out = xx.values().to_vec();
    for (o, v) in out.iter_mut().zip(yy.values()) {
        *o += v;
    }
    out
}

/// Gauge-transform `s` so the returned state satisfies
/// `max |div A| <= tol_div`, with the divergence measured by the same grid
/// operators the rest of the library uses. The order parameter is rotated
/// along with the potential shift, so the returned state is
/// gauge-equivalent to the input and every gauge-invariant quantity is
/// preserved up to stencil truncation. The boundary tangency defect is
/// measured before and after and included in the report; see the module
/// docs for why it is not driven to zero.
///
/// If the input already meets the tolerance it is returned unchanged
/// (`passes == 0`), which makes the projection idempotent.
pub fn coulomb_project(
    s: &State,
    tol_div: f64,
) -> Result<(State, ProjectionReport), GaugeError> {
    assert!(tol_div > 0.0);
    let g = s.grid();
    let initial_div = s.a.div().max_abs();
    let initial_tan = tangency_defect(&s.a);
    if initial_div <= tol_div {
        return Ok((
            s.clone(),
            ProjectionReport {
                initial_div,
                final_div: initial_div,
                initial_tan,
                final_tan: initial_tan,
                passes: 0,
                rungs_used: 0,
            },
        ));
    }

    let nn = g.num_nodes();
    let div0 = s.a.div();
    let b: Vec<f64> = div0.values().iter().map(|v| -v).collect();
    let mut passes = 0usize;

    // Phase one: interior equation, boundary condition. This selects the
    // harmonic; see the module docs.
    let brows = boundary_rows(g);
    let nb = brows.len();
    let ni = (g.nx - 1) * (g.ny - 1);
    let beta = 1.0 / g.hx().max(g.hy());
    let flux_target: Vec<f64> = brows
        .iter()
        .map(|&(k, xn)| {
            if xn {
                -s.a.x.values()[k]
            } else {
                -s.a.y.values()[k]
            }
        })
        .collect();

    let mut f = vec![0.0f64; nn];
    {
        let qr = cached_qr(g, CLASSICAL_TAU, SystemKind::Classical);
        let mut best_cl = f.clone();
        let mut best_res = f64::INFINITY;
        let mut prev = f64::INFINITY;
        for _ in 0..MAX_CLASSICAL_PASSES {
            let fs = ScalarField::from_values(g, f.clone()).expect("finite iterate");
            let lap = wide_laplacian(&fs);
            let fdx = fs.dx();
            let fdy = fs.dy();
            let mut rhs = Mat::<f64>::zeros(ni + nb + nn + 1, 1);
            let mut res = 0.0f64;
            let mut row = 0usize;
            for iy in 1..g.ny {
                for ix in 1..g.nx {
                    let k = g.idx(ix, iy);
                    let r = b[k] - lap[k];
                    res = res.max(r.abs());
                    rhs[(row, 0)] = r;
                    row += 1;
                }
            }
            for (j, &(k, xn)) in brows.iter().enumerate() {
                let dn = if xn { fdx.values()[k] } else { fdy.values()[k] };
                let r = flux_target[j] - dn;
                res = res.max(r.abs());
                rhs[(ni + j, 0)] = beta * r;
            }
            passes += 1;
            if res < best_res {
                best_cl.copy_from_slice(&f);
                best_res = res;
            }
            if res > prev * STALL_FACTOR {
                break;
            }
            prev = res;
            let sol = qr.solve_lstsq(&rhs);
            for k in 0..nn {
                f[k] += sol[(k, 0)];
            }
        }
        f = best_cl;
    }

    // Phase two: polish the divergence on all nodes, boundary included.
    let mut best = f.clone();
    let mut best_div = f64::INFINITY;
    let mut rungs_used = 0usize;

    'ladder: for &tau in TAU_LADDER.iter() {
        rungs_used += 1;
        let qr = cached_qr(g, tau, SystemKind::AllNodes);
        let mut stall = 0usize;
        let mut prev = f64::INFINITY;
        for _ in 0..MAX_PASSES_PER_RUNG {
            let fs = ScalarField::from_values(g, f.clone()).expect("finite iterate");
            let lap = wide_laplacian(&fs);

            let mut r = vec![0.0f64; nn];
            let mut res = 0.0f64;
            for k in 0..nn {
                r[k] = b[k] - lap[k];
                res = res.max(r[k].abs());
            }
            passes += 1;
            if res < best_div {
                best.copy_from_slice(&f);
                best_div = res;
            }
            if res <= tol_div {
                break 'ladder;
            }
            if res > prev * STALL_FACTOR {
                stall += 1;
            } else {
                stall = 0;
            }
            if stall >= 2 {
                break;
            }
            prev = res;

            let mut rhs = Mat::<f64>::zeros(2 * nn + 1, 1);
            for k in 0..nn {
                rhs[(k, 0)] = r[k];
            }
            let sol = qr.solve_lstsq(&rhs);
            for k in 0..nn {
                f[k] += sol[(k, 0)];
            }
        }
        // reseed the next rung from the best iterate, not the last one
        f.copy_from_slice(&best);
    }

    if best_div > tol_div {
        return Err(GaugeError::Stalled {
            best_div,
            tol: tol_div,
            passes,
        });
    }

    let fs = ScalarField::from_values(g, best).expect("finite gauge function");
    let out = apply_gauge(s, &fs);
    let final_div = out.a.div().max_abs();
    let final_tan = tangency_defect(&out.a);
    Ok((
        out,
        ProjectionReport {
            initial_div,
            final_div,
            initial_tan,
            final_tan,
            passes,
            rungs_used,
        },
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum SystemKind {
    Classical,
    AllNodes,
}

type QrFactor = faer::sparse::linalg::solvers::Qr<usize, f64>;
type CacheKey = (u64, u64, u64, u64, usize, usize, u64, SystemKind);

static QR_CACHE: OnceLock<Mutex<HashMap<CacheKey, Arc<QrFactor>>>> = OnceLock::new();

fn cached_qr(g: Grid, tau: f64, kind: SystemKind) -> Arc<QrFactor> {
    let key = (
        g.x_min.to_bits(),
        g.x_max.to_bits(),
        g.y_min.to_bits(),
        g.y_max.to_bits(),
        g.nx,
        g.ny,
        tau.to_bits(),
        kind,
    );
    let cache = QR_CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().unwrap();
    if let Some(qr) = map.get(&key) {
        return qr.clone();
    }
    let mat = match kind {
        SystemKind::Classical => build_classical(g, tau),
        SystemKind::AllNodes => build_stacked(g, tau),
    };
    let qr = Arc::new(mat.sp_qr().expect("sparse QR of the stacked gauge system"));
    map.insert(key, qr.clone());
    qr
}

/// Phase-one matrix: interior divergence rows, boundary flux rows, the
/// regularizer on all nodes, and the mean row. Row count is
/// (nx-1)(ny-1) + 2(npx+npy) + nn + 1, matching the rhs assembly in
/// [`coulomb_project`] row for row.
fn build_classical(g: Grid, tau: f64) -> SparseColMat<usize, f64> {
    let (npx, npy) = (g.npx(), g.npy());
    let nn = g.num_nodes();
    let d1x = centered2(g.nx, g.hx());
    let d1y = centered2(g.ny, g.hy());
    let d2x = compose(&d1x, &d1x);
    let d2y = compose(&d1y, &d1y);
    let l5x = lap3_neumann(g.nx, g.hx());
    let l5y = lap3_neumann(g.ny, g.hy());
    let beta = 1.0 / g.hx().max(g.hy());
    let brows = boundary_rows(g);
    let (ni, nb) = ((g.nx - 1) * (g.ny - 1), brows.len());

    let mut tri: Vec<(usize, usize, f64)> = Vec::with_capacity(16 * nn);
    let mut row = 0usize;
    for iy in 1..g.ny {
        for ix in 1..g.nx {
            for &(kx, v) in &d2x[ix] {
                tri.push((row, iy * npx + kx, v));
            }
            for &(ky, v) in &d2y[iy] {
                tri.push((row, ky * npx + ix, v));
            }
            row += 1;
        }
    }
    for (j, &(k, xn)) in brows.iter().enumerate() {
        let r = ni + j;
        let (ix, iy) = (k % npx, k / npx);
        if xn {
            for &(kx, v) in &d1x[ix] {
                tri.push((r, iy * npx + kx, beta * v));
            }
        } else {
            for &(ky, v) in &d1y[iy] {
                tri.push((r, ky * npx + ix, beta * v));
            }
        }
    }
    for iy in 0..npy {
        for ix in 0..npx {
            let r = ni + nb + g.idx(ix, iy);
            for &(kx, v) in &l5x[ix] {
                tri.push((r, iy * npx + kx, tau * v));
            }
            for &(ky, v) in &l5y[iy] {
                tri.push((r, ky * npx + ix, tau * v));
            }
        }
    }
    let inv_nn = 1.0 / nn as f64;
    for k in 0..nn {
        tri.push((ni + nb + nn, k, inv_nn));
    }
    SparseColMat::<usize, f64>::try_new_from_triplets(ni + nb + nn + 1, nn, &tri)
        .expect("valid triplet list")
}

/// The stacked least-squares matrix; see the module docs for the block
/// layout. Row count is 2 nn + 1.
fn build_stacked(g: Grid, tau: f64) -> SparseColMat<usize, f64> {
    let (npx, npy) = (g.npx(), g.npy());
    let nn = g.num_nodes();
    let d1x = centered2(g.nx, g.hx());
    let d1y = centered2(g.ny, g.hy());
    let d2x = compose(&d1x, &d1x);
    let d2y = compose(&d1y, &d1y);
    let l5x = lap3_neumann(g.nx, g.hx());
    let l5y = lap3_neumann(g.ny, g.hy());

    let push_sum = |tri: &mut Vec<(usize, usize, f64)>,
                    row: usize,
                    ix: usize,
                    iy: usize,
                    rx: &Rows,
                    ry: &Rows,
                    scale: f64| {
        for &(kx, v) in &rx[ix] {
            tri.push((row, iy * npx + kx, scale * v));
        }
        for &(ky, v) in &ry[iy] {
            tri.push((row, ky * npx + ix, scale * v));
        }
    };

    let mut tri: Vec<(usize, usize, f64)> = Vec::with_capacity(16 * nn);
    for iy in 0..npy {
        for ix in 0..npx {
            let r = g.idx(ix, iy);
            push_sum(&mut tri, r, ix, iy, &d2x, &d2y, 1.0);
            push_sum(&mut tri, nn + r, ix, iy, &l5x, &l5y, tau);
        }
    }
    let inv_nn = 1.0 / nn as f64;
    for k in 0..nn {
        tri.push((2 * nn, k, inv_nn));
    }
    SparseColMat::<usize, f64>::try_new_from_triplets(2 * nn + 1, nn, &tri)
        .expect("valid triplet list")
}

/// A reproducible smooth test potential: a short band-limited sine series
/// with seeded coefficients. Rough enough to have nonzero divergence
/// everywhere, smooth enough that the projection can actually succeed.
pub fn seeded_smooth_potential(g: Grid, seed: u64) -> VectorField {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let lx = g.x_max - g.x_min;
    let ly = g.y_max - g.y_min;
    let mut modes = Vec::new();
    for _ in 0..6 {
        let kx = rng.gen_range(1..=3) as f64 * std::f64::consts::PI / lx;
        let ky = rng.gen_range(1..=3) as f64 * std::f64::consts::PI / ly;
        let (ax, ay): (f64, f64) = (rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
        let (px, py): (f64, f64) = (rng.gen_range(0.0..6.28), rng.gen_range(0.0..6.28));
        modes.push((kx, ky, ax, ay, px, py));
    }
    let ms = modes.clone();
    VectorField::from_fns(
        g,
        move |x, y| {
            modes
                .iter()
                .map(|&(kx, ky, ax, _, px, _)| ax * (kx * x + px).sin() * (ky * y).cos())
                .sum()
        },
        move |x, y| {
            ms.iter()
                .map(|&(kx, ky, _, ay, _, py)| ay * (kx * x).cos() * (ky * y + py).sin())
                .sum()
        },
    )
}
