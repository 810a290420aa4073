//! Gradient descent to approximate critical points of the full energy.
//!
//! The order parameter moves by plain L2 gradient flow; step sizes come
//! from a Barzilai-Borwein seed with Armijo backtracking on the combined
//! move. No Sobolev smoothing is applied to the u block: at the grid sizes
//! this library targets the extra robustness of the dumb method is worth
//! more than the iteration count it costs.
//!
//! The Coulomb constraint div A = 0 is maintained by construction rather
//! than by periodic re-projection: the magnetic part of every step is routed
//! through a stream function, A <- A - step (dy S, -dx S), and the discrete
//! divergence of such an update is exactly zero because dx and dy act on
//! different tensor indices and therefore commute to rounding. Descending in
//! (u_re, u_im, S) is minimization over the Coulomb slice of the gauge
//! orbit, which every orbit intersects on a simply connected domain. The
//! unconstrained flow was tried first and is unusable here: its magnetic
//! updates carry adjoint-stencil boundary layers whose divergence lies
//! outside the range of the wide discrete Laplacian, so no gauge function,
//! however patiently solved for, can project it back out.
//!
//! The stream-function gradient is preconditioned by the pseudo-inverse of
//! the compact Neumann Laplacian (one cached sparse-QR triangular solve per
//! iteration). The reformulation raises the field term's differential order
//! by two, so the bare slice gradient is O(1/h^4)-conditioned and descent
//! on it crawls; applying the inverse Laplacian restores the conditioning
//! of the plain magnetic flow. Equivalently, the combined move is gradient
//! descent with the magnetic direction passed through a discrete
//! Helmholtz-Leray projector. The Laplacian rows are scaled by the
//! quadrature weights before factoring: the weighted operator is symmetric
//! positive semidefinite with the constants as kernel, so its pseudo-inverse
//! is symmetric too and the preconditioned direction can never point uphill.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use faer::prelude::*;
use faer::sparse::SparseColMat;

use crate::energy::{covariant_gradient, gl_energy, Params, State};
use crate::gauge::{coulomb_project, GaugeError};
use crate::grid::{Grid, ScalarField};
use crate::stencil::{apply_x, apply_x_t, apply_y, apply_y_t, centered2, lap3_neumann};

/// Divergence ceiling required of the initial state (projecting if needed)
/// and guaranteed at output.
pub const GAUGE_DIV_TOL: f64 = 1e-5;
const STEP_UNDERFLOW: f64 = 1e-14;

#[derive(Clone, Copy, Debug)]
pub struct SolveConfig {
    pub max_iters: usize,
    pub step0: f64,
    pub tol_grad: f64,
    pub armijo_c: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            max_iters: 60_000,
            step0: 0.05,
            tol_grad: 1e-5,
            armijo_c: 1e-4,
        }
    }
}

impl SolveConfig {
    fn validate(&self) -> Result<(), DescentError> {
        if self.max_iters == 0 || self.step0 <= 0.0 || self.tol_grad <= 0.0 {
            return Err(DescentError::BadConfig(
                "max_iters, step0 and tol_grad must be positive".into(),
            ));
        }
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            return Err(DescentError::BadConfig("armijo_c must lie in (0,1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DescentError {
    #[error("bad solve configuration: {0}")]
    BadConfig(String),
    #[error(
        "line search underflow at iteration {iter} (energy {energy:.8e}, grad {grad_norm:.3e}); \
         the discrete energy is no longer decreasing along the gradient"
    )]
    StepUnderflow {
        iter: usize,
        energy: f64,
        grad_norm: f64,
    },
    #[error("vortex degree {0} exceeds the resolution guard |d| <= 8")]
    DegreeTooLarge(i32),
    #[error(transparent)]
    Gauge(#[from] GaugeError),
}

/// One line of the iteration log.
#[derive(Clone, Copy, Debug)]
pub struct IterLog {
    pub iter: usize,
    pub energy: f64,
    pub grad_norm: f64,
    pub step: f64,
}

#[derive(Clone, Debug)]
pub struct MinimizeOutcome {
    pub state: State,
    pub energy: f64,
    pub grad_norm: f64,
    pub iters: usize,
    pub converged: bool,
    pub final_div: f64,
    /// (before, after) energies of every accepted step, for the
    /// monotonicity contract.
    pub accepted: Vec<(f64, f64)>,
    pub log: Vec<IterLog>,
}

impl MinimizeOutcome {
    pub fn log_csv(&self) -> String {
        let mut out = String::from("iter,energy,grad_norm,step\n");
        for row in &self.log {
            out.push_str(&format!(
                "{},{:.12e},{:.6e},{:.6e}\n",
                row.iter, row.energy, row.grad_norm, row.step
            ));
        }
        out
    }
}

/// Raw partial derivatives of the discrete energy with respect to the four
/// nodal arrays, in the order (u_re, u_im, a_x, a_y).
struct RawGrad {
    gur: Vec<f64>,
    gui: Vec<f64>,
    gax: Vec<f64>,
    gay: Vec<f64>,
}

struct Work {
    weights: Vec<f64>,
    d1x: crate::stencil::Rows,
    d1y: crate::stencil::Rows,
    poisson: Arc<QrFactor>,
}

impl Work {
    fn new(g: Grid) -> Self {
        let mut weights = vec![0.0; g.num_nodes()];
        for iy in 0..g.npy() {
            for ix in 0..g.npx() {
                weights[g.idx(ix, iy)] = g.quad_weight(ix, iy);
            }
        }
        let poisson = poisson_qr(g, &weights);
        Work {
            weights,
            d1x: centered2(g.nx, g.hx()),
            d1y: centered2(g.ny, g.hy()),
            poisson,
        }
    }
}

type QrFactor = faer::sparse::linalg::solvers::Qr<usize, f64>;
type PoissonKey = (u64, u64, u64, u64, usize, usize);

static POISSON_CACHE: OnceLock<Mutex<HashMap<PoissonKey, Arc<QrFactor>>>> = OnceLock::new();

/// QR factors of the weighted negative Neumann Laplacian stacked over a mean
/// row, (nn+1) x nn and full column rank. The slice gradient g_S sums to
/// zero exactly (it is an adjoint curl, and derivatives kill constants), so
/// the least-squares solve against this stack is consistent and returns the
/// unique mean-free solution of -lap f = g_S. Factored once per grid and
/// reused across minimize_gl calls.
fn poisson_qr(g: Grid, weights: &[f64]) -> Arc<QrFactor> {
    let key = (
        g.x_min.to_bits(),
        g.x_max.to_bits(),
        g.y_min.to_bits(),
        g.y_max.to_bits(),
        g.nx,
        g.ny,
    );
    let cache = POISSON_CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().unwrap();
    if let Some(qr) = map.get(&key) {
        return qr.clone();
    }
    let (npx, npy) = (g.npx(), g.npy());
    let nn = g.num_nodes();
    let l5x = lap3_neumann(g.nx, g.hx());
    let l5y = lap3_neumann(g.ny, g.hy());
    let mut tri: Vec<(usize, usize, f64)> = Vec::with_capacity(6 * nn);
    for iy in 0..npy {
        for ix in 0..npx {
            let r = g.idx(ix, iy);
            let wr = weights[r];
            for &(kx, v) in &l5x[ix] {
                tri.push((r, iy * npx + kx, -wr * v));
            }
            for &(ky, v) in &l5y[iy] {
                tri.push((r, ky * npx + ix, -wr * v));
            }
        }
    }
    let inv_nn = 1.0 / nn as f64;
    for k in 0..nn {
        tri.push((nn, k, inv_nn));
    }
    let mat = SparseColMat::<usize, f64>::try_new_from_triplets(nn + 1, nn, &tri)
        .expect("valid triplet list");
    let qr = Arc::new(mat.sp_qr().expect("sparse QR of the Poisson stack"));
    map.insert(key, qr.clone());
    qr
}

fn raw_gradient(s: &State, p: &Params, w: &Work) -> RawGrad {
    let g = s.grid();
    let (npx, npy) = (g.npx(), g.npy());
    let n = g.num_nodes();
    let cg = covariant_gradient(s);
    let h = s.a.curl();
    let inv_eps2 = 1.0 / (p.epsilon * p.epsilon);

    let wmul = |f: &[f64]| -> Vec<f64> {
        f.iter().zip(&w.weights).map(|(v, ww)| v * ww).collect()
    };
    let wpx = wmul(cg.px.values());
    let wpy = wmul(cg.py.values());
    let wqx = wmul(cg.qx.values());
    let wqy = wmul(cg.qy.values());

    let mut gur = vec![0.0; n];
    let mut gui = vec![0.0; n];
    let mut tmp = vec![0.0; n];

    // kinetic term, derivative-operator part via adjoint stencils
    apply_x_t(&w.d1x, npx, npy, &wpx, &mut gur);
    apply_y_t(&w.d1y, npx, npy, &wpy, &mut tmp);
    for k in 0..n {
        gur[k] += tmp[k];
    }
    apply_x_t(&w.d1x, npx, npy, &wqx, &mut gui);
    apply_y_t(&w.d1y, npx, npy, &wqy, &mut tmp);
    for k in 0..n {
        gui[k] += tmp[k];
    }

    let mut gax = vec![0.0; n];
    let mut gay = vec![0.0; n];
    // field term: curl A = dx a_y - dy a_x
    let wfield: Vec<f64> = h
        .values()
        .iter()
        .zip(&w.weights)
        .map(|(v, ww)| (v - p.h_ex) * ww)
        .collect();
    apply_y_t(&w.d1y, npx, npy, &wfield, &mut tmp);
    for k in 0..n {
        gax[k] -= tmp[k];
    }
    apply_x_t(&w.d1x, npx, npy, &wfield, &mut tmp);
    for k in 0..n {
        gay[k] += tmp[k];
    }

    for k in 0..n {
        let ww = w.weights[k];
        let (ur, ui) = (s.u_re.values()[k], s.u_im.values()[k]);
        let (ax, ay) = (s.a.x.values()[k], s.a.y.values()[k]);
        let (px, py) = (cg.px.values()[k], cg.py.values()[k]);
        let (qx, qy) = (cg.qx.values()[k], cg.qy.values()[k]);
        // kinetic term, multiplicative part
        gur[k] -= ww * (ax * qx + ay * qy);
        gui[k] += ww * (ax * px + ay * py);
        gax[k] += ww * (px * ui - qx * ur);
        gay[k] += ww * (py * ui - qy * ur);
        // potential well
        let m2 = ur * ur + ui * ui;
        gur[k] += ww * inv_eps2 * ur * (m2 - 1.0);
        gui[k] += ww * inv_eps2 * ui * (m2 - 1.0);
    }

    RawGrad { gur, gui, gax, gay }
}

/// Gradient of the energy restricted to the Coulomb slice: the u components
/// verbatim, the magnetic components reduced through the adjoint of the
/// stream-function map S -> (dy S, -dx S), and the preconditioned stream
/// direction kgs = (-lap)^+ gs solved once per evaluation.
struct SliceGrad {
    gur: Vec<f64>,
    gui: Vec<f64>,
    gs: Vec<f64>,
    kgs: Vec<f64>,
}

fn slice_gradient(s: &State, p: &Params, w: &Work) -> SliceGrad {
    let g = s.grid();
    let (npx, npy) = (g.npx(), g.npy());
    let n = g.num_nodes();
    let raw = raw_gradient(s, p, w);
    let mut gs = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    apply_y_t(&w.d1y, npx, npy, &raw.gax, &mut gs);
    apply_x_t(&w.d1x, npx, npy, &raw.gay, &mut tmp);
    for k in 0..n {
        gs[k] -= tmp[k];
    }
    let mut rhs = Mat::<f64>::zeros(n + 1, 1);
    for k in 0..n {
        rhs[(k, 0)] = gs[k];
    }
    let sol = w.poisson.solve_lstsq(&rhs);
    let kgs: Vec<f64> = (0..n).map(|k| sol[(k, 0)]).collect();
    SliceGrad {
        gur: raw.gur,
        gui: raw.gui,
        gs,
        kgs,
    }
}

/// Magnetic direction field (dy dS, -dx dS) for the preconditioned stream
/// increment dS = kgs. Its discrete divergence vanishes identically.
fn stream_direction(g: Grid, d: &SliceGrad, w: &Work) -> (Vec<f64>, Vec<f64>) {
    let (npx, npy) = (g.npx(), g.npy());
    let n = g.num_nodes();
    let mut dax = vec![0.0; n];
    let mut day = vec![0.0; n];
    apply_y(&w.d1y, npx, npy, &d.kgs, &mut dax);
    apply_x(&w.d1x, npx, npy, &d.kgs, &mut day);
    for v in day.iter_mut() {
        *v = -*v;
    }
    (dax, day)
}

fn slice_step(s: &State, d: &SliceGrad, dir_a: &(Vec<f64>, Vec<f64>), w: &Work, step: f64) -> State {
    let mut out = s.clone();
    let n = s.grid().num_nodes();
    for k in 0..n {
        let inv = 1.0 / w.weights[k];
        out.u_re.values_mut()[k] -= step * d.gur[k] * inv;
        out.u_im.values_mut()[k] -= step * d.gui[k] * inv;
        out.a.x.values_mut()[k] -= step * dir_a.0[k];
        out.a.y.values_mut()[k] -= step * dir_a.1[k];
    }
    out
}

/// Squared gradient norm in the descent metric. This equals minus the
/// directional derivative of the energy along the actual move, so Armijo
/// sufficient-decrease tests against it are first-order exact. The stream
/// part <gs, kgs> is nonnegative up to rounding because the preconditioner
/// is a symmetric PSD pseudo-inverse; clamp so the square root stays real.
fn slice_norm2(d: &SliceGrad, w: &Work) -> f64 {
    let mut gn2 = 0.0f64;
    for k in 0..d.gur.len() {
        gn2 += (d.gur[k] * d.gur[k] + d.gui[k] * d.gui[k]) / w.weights[k];
        gn2 += d.gs[k] * d.kgs[k];
    }
    gn2.max(0.0)
}

/// Descend from `s0` until the L2 gradient norm of the slice-restricted
/// energy drops below `cfg.tol_grad` or `cfg.max_iters` is exhausted.
/// Accepted steps strictly decrease the energy; the Armijo condition is
/// checked against the squared gradient norm. The divergence of A never
/// moves from its initial value, so the output satisfies the gauge ceiling
/// whenever the (possibly projected) input does.
pub fn minimize_gl(
    s0: &State,
    p: &Params,
    cfg: &SolveConfig,
) -> Result<MinimizeOutcome, DescentError> {
    cfg.validate()?;
    let g = s0.grid();
    let work = Work::new(g);
    let n = g.num_nodes();

    let mut s = if s0.a.div().max_abs() > GAUGE_DIV_TOL {
        coulomb_project(s0, GAUGE_DIV_TOL)?.0
    } else {
        s0.clone()
    };
    let mut energy = gl_energy(&s, p).expect("finite energy");

    let mut accepted: Vec<(f64, f64)> = Vec::new();
    let mut log: Vec<IterLog> = Vec::new();
    let mut last_step = cfg.step0;
    let mut prev: Option<SliceGrad> = None; // gradient at the last accepted point
    let mut prev_step = 0.0f64;
    let mut converged = false;
    let mut iters = 0;

    for iter in 0..cfg.max_iters {
        iters = iter;
        let grad = slice_gradient(&s, p, &work);
        let gn2 = slice_norm2(&grad, &work);
        let grad_norm = gn2.sqrt();
        log.push(IterLog {
            iter,
            energy,
            grad_norm,
            step: last_step,
        });

        if grad_norm <= cfg.tol_grad {
            converged = true;
            break;
        }

        // Barzilai-Borwein seed from the last accepted move, else step0
        let mut trial = match &prev {
            Some(pg) if prev_step > 0.0 => {
                let mut sty = 0.0f64;
                let mut sts = 0.0f64;
                for k in 0..n {
                    let inv = 1.0 / work.weights[k];
                    let sx = [
                        -prev_step * pg.gur[k] * inv,
                        -prev_step * pg.gui[k] * inv,
                        -prev_step * pg.kgs[k],
                    ];
                    let yx = [
                        (grad.gur[k] - pg.gur[k]) * inv,
                        (grad.gui[k] - pg.gui[k]) * inv,
                        grad.kgs[k] - pg.kgs[k],
                    ];
                    for c in 0..3 {
                        sts += sx[c] * sx[c];
                        sty += sx[c] * yx[c];
                    }
                }
                if sty > 0.0 {
                    sts / sty
                } else {
                    2.0 * last_step
                }
            }
            _ => cfg.step0,
        };
        trial = trial.clamp(1e-6 * cfg.step0, 1e2 * cfg.step0);

        // Armijo backtracking along the fixed slice direction
        let dir_a = stream_direction(g, &grad, &work);
        let mut s_new;
        loop {
            s_new = slice_step(&s, &grad, &dir_a, &work, trial);
            let e_new = gl_energy(&s_new, p).expect("finite trial energy");
            if e_new <= energy - cfg.armijo_c * trial * gn2 {
                accepted.push((energy, e_new));
                energy = e_new;
                break;
            }
            trial *= 0.5;
            if trial < STEP_UNDERFLOW {
                return Err(DescentError::StepUnderflow {
                    iter,
                    energy,
                    grad_norm,
                });
            }
        }
        prev_step = trial;
        last_step = trial;
        prev = Some(grad);
        s = s_new;
    }

    let final_div = s.a.div().max_abs();
    let grad = slice_gradient(&s, p, &work);
    let gn2 = slice_norm2(&grad, &work);

    Ok(MinimizeOutcome {
        state: s,
        energy,
        grad_norm: gn2.sqrt(),
        iters: iters + 1,
        converged,
        final_div,
        accepted,
        log,
    })
}

/// Euler-Lagrange residuals of a state: the field equation for u and the
/// curl equation for A in the interior (two cells in from the boundary,
/// where all stencils are centered), and the boundary mismatch of the
/// induced field against the applied one. Both interior residuals are built
/// from gauge-invariant quantities, so no gauge enforcement is needed here.
pub fn el_residual(s: &State, p: &Params) -> (f64, f64, f64) {
    let g = s.grid();
    let cg = covariant_gradient(s);
    let inv_eps2 = 1.0 / (p.epsilon * p.epsilon);

    // div_A of the covariant gradient: d_j w_j - i A_j w_j summed over j
    let dpx = cg.px.dx();
    let dpy = cg.py.dy();
    let dqx = cg.qx.dx();
    let dqy = cg.qy.dy();

    let h = s.a.curl();
    let dhx = h.dx();
    let dhy = h.dy();
    let j = crate::vorticity::supercurrent(s);

    let mut r1 = 0.0f64;
    let mut r2 = 0.0f64;
    let mut r3 = 0.0f64;
    for iy in 0..g.npy() {
        for ix in 0..g.npx() {
            let k = g.idx(ix, iy);
            if g.in_interior(ix, iy, 2) {
                let (ur, ui) = (s.u_re.values()[k], s.u_im.values()[k]);
                let (ax, ay) = (s.a.x.values()[k], s.a.y.values()[k]);
                let m2 = ur * ur + ui * ui;
                let lap_re = dpx.values()[k] + dpy.values()[k]
                    + ax * cg.qx.values()[k]
                    + ay * cg.qy.values()[k];
                let lap_im = dqx.values()[k] + dqy.values()[k]
                    - ax * cg.px.values()[k]
                    - ay * cg.py.values()[k];
                let res_re = -lap_re - inv_eps2 * ur * (1.0 - m2);
                let res_im = -lap_im - inv_eps2 * ui * (1.0 - m2);
                r1 = r1.max(res_re.hypot(res_im));

                // -perp_grad(h) = (dh/dy, -dh/dx); subtract the current
                let rx = dhy.values()[k] - j.x.values()[k];
                let ry = -dhx.values()[k] - j.y.values()[k];
                r2 = r2.max(rx.hypot(ry));
            }
            if g.is_boundary(ix, iy) {
                r3 = r3.max((h.values()[k] - p.h_ex).abs());
            }
        }
    }
    (r1, r2, r3)
}

/// Vortex profile u = tanh(|x - c| / epsilon) e^{i d theta(x - c)} as a pair
/// of real node arrays. Degrees beyond |d| = 8 are rejected: the phase turns
/// 2 pi d per core circumference and coarse rings stop resolving it.
pub fn vortex_ansatz(
    g: Grid,
    center: (f64, f64),
    degree: i32,
    epsilon: f64,
) -> Result<(ScalarField, ScalarField), DescentError> {
    if degree.abs() > 8 {
        return Err(DescentError::DegreeTooLarge(degree));
    }
    assert!(epsilon > 0.0);
    assert!(
        center.0 > g.x_min && center.0 < g.x_max && center.1 > g.y_min && center.1 < g.y_max,
        "vortex center must be interior"
    );
    let d = degree as f64;
    let (cx, cy) = center;
    let u_re = ScalarField::from_fn(g, move |x, y| {
        let (rx, ry) = (x - cx, y - cy);
        let r = rx.hypot(ry);
        if r == 0.0 {
            0.0
        } else {
            (r / epsilon).tanh() * (d * ry.atan2(rx)).cos()
        }
    });
    let u_im = ScalarField::from_fn(g, move |x, y| {
        let (rx, ry) = (x - cx, y - cy);
        let r = rx.hypot(ry);
        if r == 0.0 {
            0.0
        } else {
            (r / epsilon).tanh() * (d * ry.atan2(rx)).sin()
        }
    });
    Ok((u_re, u_im))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::VectorField;
    use crate::vorticity::{winding_number, LoopRect};

    fn dot(a: &RawGrad, vur: &[f64], vui: &[f64], vax: &[f64], vay: &[f64]) -> f64 {
        let mut s = 0.0;
        for k in 0..vur.len() {
            s += a.gur[k] * vur[k] + a.gui[k] * vui[k] + a.gax[k] * vax[k] + a.gay[k] * vay[k];
        }
        s
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let g = Grid::square(1.0, 32);
        let s = State::new(
            ScalarField::from_fn(g, |x, y| 1.0 - 0.3 * (x * y).cos()),
            ScalarField::from_fn(g, |x, y| 0.2 * (x + 2.0 * y).sin()),
            VectorField::from_fns(g, |x, y| 0.3 * (y + 0.2 * x).sin(), |x, _| 0.2 * x),
        )
        .unwrap();
        let p = Params::new(0.7, 0.6);
        let work = Work::new(g);
        let grad = raw_gradient(&s, &p, &work);

        let vur = ScalarField::from_fn(g, |x, y| (1.3 * x).cos() * (0.7 * y).sin());
        let vui = ScalarField::from_fn(g, |x, y| 0.5 * (x * y).sin());
        let vax = ScalarField::from_fn(g, |x, y| 0.4 * (x + y).cos());
        let vay = ScalarField::from_fn(g, |x, _| 0.3 * (2.0 * x).sin());

        let predicted = dot(&grad, vur.values(), vui.values(), vax.values(), vay.values());

        let t = 1e-6;
        let perturb = |sign: f64| -> State {
            let mut out = s.clone();
            for k in 0..g.num_nodes() {
                out.u_re.values_mut()[k] += sign * t * vur.values()[k];
                out.u_im.values_mut()[k] += sign * t * vui.values()[k];
                out.a.x.values_mut()[k] += sign * t * vax.values()[k];
                out.a.y.values_mut()[k] += sign * t * vay.values()[k];
            }
            out
        };
        let ep = gl_energy(&perturb(1.0), &p).unwrap();
        let em = gl_energy(&perturb(-1.0), &p).unwrap();
        let fd = (ep - em) / (2.0 * t);
        assert!(
            (predicted - fd).abs() <= 1e-6 * (1.0 + fd.abs()),
            "analytic {predicted} vs finite difference {fd}"
        );
    }

    #[test]
    fn uniform_ground_state_is_a_fixed_point() {
        let g = Grid::square(1.0, 16);
        let s0 = State::uniform(g);
        let p = Params::new(0.8, 0.0);
        let out = minimize_gl(&s0, &p, &SolveConfig::default()).unwrap();
        assert!(out.converged);
        assert!(out.accepted.is_empty(), "no steps should be needed");
        assert_eq!(out.state.u_re.values(), s0.u_re.values());
        assert_eq!(out.grad_norm, 0.0);
    }

    #[test]
    fn descent_keeps_vortex_winding() {
        let g = Grid::new(0.0, 1.0, 0.0, 1.0, 48, 48).unwrap();
        let (ur, ui) = vortex_ansatz(g, (0.5, 0.5), 1, 0.5).unwrap();
        let s0 = State::new(ur, ui, VectorField::zeros(g)).unwrap();
        let p = Params::new(0.5, 0.0);
        let cfg = SolveConfig {
            max_iters: 1500,
            tol_grad: 5e-4,
            ..SolveConfig::default()
        };
        let out = minimize_gl(&s0, &p, &cfg).unwrap();
        for (before, after) in &out.accepted {
            assert!(after < before, "energy rose: {before} -> {after}");
        }
        let mid = LoopRect::new(g, 12, 36, 12, 36).unwrap();
        let w = winding_number(&out.state.u_re, &out.state.u_im, mid).unwrap();
        assert_eq!(w, 1, "vortex lost during descent");
        assert!(out.final_div <= GAUGE_DIV_TOL);
    }

    #[test]
    fn residuals_tighten_with_tol_grad() {
        let g = Grid::square(1.0, 48);
        let (ur, ui) = vortex_ansatz(g, (0.0, 0.0), 1, 0.35).unwrap();
        let s0 = State::new(ur, ui, VectorField::zeros(g)).unwrap();
        let p = Params::new(0.35, 1.0);
        let run = |tol: f64| {
            let cfg = SolveConfig {
                max_iters: 20_000,
                tol_grad: tol,
                ..SolveConfig::default()
            };
            let out = minimize_gl(&s0, &p, &cfg).unwrap();
            assert!(out.converged, "tol {tol} did not converge");
            let (r1, r2, _) = el_residual(&out.state, &p);
            r1.max(r2)
        };
        let loose = run(1e-2);
        let tight = run(1e-3);
        assert!(
            tight < loose,
            "residual did not tighten: {loose} -> {tight}"
        );
    }

    #[test]
    fn el_residual_of_exact_states_is_zero() {
        let g = Grid::square(1.0, 16);
        let p0 = Params::new(1.0, 0.0);
        let (r1, r2, r3) = el_residual(&State::uniform(g), &p0);
        assert_eq!((r1, r2, r3), (0.0, 0.0, 0.0));
        let normal = State::new(
            ScalarField::zeros(g),
            ScalarField::zeros(g),
            VectorField::zeros(g),
        )
        .unwrap();
        let (r1, r2, r3) = el_residual(&normal, &p0);
        assert_eq!((r1, r2, r3), (0.0, 0.0, 0.0));
    }

    #[test]
    fn ansatz_degree_guard_and_symmetry() {
        let g = Grid::square(1.0, 32);
        assert!(matches!(
            vortex_ansatz(g, (0.0, 0.0), 9, 0.3),
            Err(DescentError::DegreeTooLarge(9))
        ));

        // d = 0: pure modulus profile
        let (ur, ui) = vortex_ansatz(g, (0.0, 0.0), 0, 0.3).unwrap();
        assert_eq!(ui.max_abs(), 0.0);
        assert!((ur.at(24, 16) - (g.x(24).hypot(0.0) / 0.3).tanh()).abs() < 1e-14);

        // d = 1 at the origin: u(-x, -y) = -u(x, y)
        let (ur, ui) = vortex_ansatz(g, (0.0, 0.0), 1, 0.3).unwrap();
        for (ix, iy) in [(3usize, 7usize), (10, 20), (25, 4), (16, 30)] {
            let (mx, my) = (32 - ix, 32 - iy);
            assert!((ur.at(ix, iy) + ur.at(mx, my)).abs() < 1e-13);
            assert!((ui.at(ix, iy) + ui.at(mx, my)).abs() < 1e-13);
        }
    }

    #[test]
    fn bad_config_is_rejected() {
        let g = Grid::square(1.0, 16);
        let s = State::uniform(g);
        let p = Params::new(1.0, 0.0);
        let bad = SolveConfig {
            armijo_c: 1.5,
            ..SolveConfig::default()
        };
        assert!(matches!(
            minimize_gl(&s, &p, &bad),
            Err(DescentError::BadConfig(_))
        ));
    }
}
