//! Supercurrent, gauge-invariant vorticity, and winding numbers.

use crate::energy::{covariant_gradient, State};
use crate::grid::{Grid, ScalarField, VectorField};

/// Loop nodes with |u| below this are treated as sitting on a vortex core,
/// where the phase is meaningless.
pub const CORE_TOL: f64 = 1e-8;

/// The current j = <iu, grad_A u>, componentwise
/// j_k = u_re q_k - u_im p_k with p + iq the covariant gradient.
pub fn supercurrent(s: &State) -> VectorField {
    let cg = covariant_gradient(s);
    let n = s.grid().num_nodes();
    let mut jx = ScalarField::zeros(s.grid());
    let mut jy = ScalarField::zeros(s.grid());
    for k in 0..n {
        let (ur, ui) = (s.u_re.values()[k], s.u_im.values()[k]);
        jx.values_mut()[k] = ur * cg.qx.values()[k] - ui * cg.px.values()[k];
        jy.values_mut()[k] = ur * cg.qy.values()[k] - ui * cg.py.values()[k];
    }
    VectorField::new(jx, jy).expect("current on the state grid")
}

/// Gauge-invariant vorticity mu = curl j + curl A. Integrates to roughly
/// 2 pi times the total winding once cores are resolved (epsilon at least a
/// few grid cells).
pub fn vorticity_mu(s: &State) -> ScalarField {
    let j = supercurrent(s);
    let mut mu = j.curl();
    let ha = s.a.curl();
    for (m, h) in mu.values_mut().iter_mut().zip(ha.values()) {
        *m += h;
    }
    mu
}

/// True when vortex cores of size `epsilon` span at least four cells, the
/// regime where discrete winding and mu-quantization are trustworthy.
pub fn cores_resolved(epsilon: f64, g: Grid) -> bool {
    epsilon >= 4.0 * g.hx().max(g.hy())
}

/// Axis-aligned rectangle of grid nodes, traversed counterclockwise.
#[derive(Clone, Copy, Debug)]
pub struct LoopRect {
    ix_lo: usize,
    ix_hi: usize,
    iy_lo: usize,
    iy_hi: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum WindingError {
    #[error("loop rectangle is empty or leaves the grid")]
    BadLoop,
    #[error("loop crosses vortex core: |u| = {modulus:.2e} at node ({ix}, {iy})")]
    VortexCore {
        ix: usize,
        iy: usize,
        modulus: f64,
    },
}

impl LoopRect {
    pub fn new(g: Grid, ix_lo: usize, ix_hi: usize, iy_lo: usize, iy_hi: usize) -> Result<Self, WindingError> {
        if ix_lo >= ix_hi || iy_lo >= iy_hi || ix_hi > g.nx || iy_hi > g.ny {
            return Err(WindingError::BadLoop);
        }
        Ok(LoopRect {
            ix_lo,
            ix_hi,
            iy_lo,
            iy_hi,
        })
    }

    /// The outermost loop the grid supports.
    pub fn full_boundary(g: Grid) -> Self {
        LoopRect {
            ix_lo: 0,
            ix_hi: g.nx,
            iy_lo: 0,
            iy_hi: g.ny,
        }
    }

    fn nodes(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for ix in self.ix_lo..=self.ix_hi {
            out.push((ix, self.iy_lo));
        }
        for iy in self.iy_lo + 1..=self.iy_hi {
            out.push((self.ix_hi, iy));
        }
        for ix in (self.ix_lo..self.ix_hi).rev() {
            out.push((ix, self.iy_hi));
        }
        for iy in (self.iy_lo + 1..self.iy_hi).rev() {
            out.push((self.ix_lo, iy));
        }
        out
    }
}

/// Degree of u/|u| around the loop: principal-branch phase increments summed
/// and divided by 2 pi. Exact as long as no single edge jumps by pi or more,
/// which holds whenever the loop stays a few cells away from every zero.
pub fn winding_number(
    u_re: &ScalarField,
    u_im: &ScalarField,
    rect: LoopRect,
) -> Result<i32, WindingError> {
    assert_eq!(u_re.grid(), u_im.grid());
    let nodes = rect.nodes();
    for &(ix, iy) in &nodes {
        let m = u_re.at(ix, iy).hypot(u_im.at(ix, iy));
        if m < CORE_TOL {
            return Err(WindingError::VortexCore { ix, iy, modulus: m });
        }
    }
    let mut total = 0.0f64;
    for w in 0..nodes.len() {
        let (ix0, iy0) = nodes[w];
        let (ix1, iy1) = nodes[(w + 1) % nodes.len()];
        let (a, b) = (u_re.at(ix0, iy0), u_im.at(ix0, iy0));
        let (c, d) = (u_re.at(ix1, iy1), u_im.at(ix1, iy1));
        // increment of arg(u) along the edge, already in (-pi, pi]
        total += (a * d - b * c).atan2(a * c + b * d);
    }
    Ok((total / (2.0 * std::f64::consts::PI)).round() as i32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::descent::vortex_ansatz;
    use crate::energy::apply_gauge;
    use approx::assert_abs_diff_eq;

    fn ansatz_state(g: Grid, degree: i32, epsilon: f64) -> State {
        let (ur, ui) = vortex_ansatz(g, (0.0, 0.0), degree, epsilon).unwrap();
        State::new(ur, ui, VectorField::zeros(g)).unwrap()
    }

    #[test]
    fn uniform_state_has_no_current() {
        let g = Grid::square(1.0, 16);
        let s = State::uniform(g);
        assert_eq!(supercurrent(&s).max_abs(), 0.0);
        assert_eq!(vorticity_mu(&s).max_abs(), 0.0);
    }

    #[test]
    fn constant_potential_gives_minus_a() {
        let g = Grid::square(1.0, 16);
        let mut s = State::uniform(g);
        s.a = VectorField::from_fns(g, |_, _| 0.4, |_, _| -0.9);
        let j = supercurrent(&s);
        for k in 0..g.num_nodes() {
            assert_abs_diff_eq!(j.x.values()[k], -0.4, epsilon = 1e-14);
            assert_abs_diff_eq!(j.y.values()[k], 0.9, epsilon = 1e-14);
        }
    }

    #[test]
    fn plane_wave_carries_unit_current() {
        let g = Grid::square(1.0, 64);
        let s = State::new(
            ScalarField::from_fn(g, |x, _| x.cos()),
            ScalarField::from_fn(g, |x, _| x.sin()),
            VectorField::zeros(g),
        )
        .unwrap();
        let j = supercurrent(&s);
        for k in 0..g.num_nodes() {
            assert_abs_diff_eq!(j.x.values()[k], 1.0, epsilon = 1e-3);
            assert_abs_diff_eq!(j.y.values()[k], 0.0, epsilon = 1e-3);
        }
    }

    #[test]
    fn mu_is_gauge_invariant_at_stencil_order() {
        let mut errs = Vec::new();
        for n in [64usize, 128] {
            let g = Grid::square(1.0, n);
            let s = State::new(
                ScalarField::from_fn(g, |x, y| 1.0 - 0.3 * (x * y).cos()),
                ScalarField::from_fn(g, |x, y| 0.25 * (x + y).sin()),
                VectorField::from_fns(g, |x, y| (1.3 * y).sin() + 0.1 * x, |x, _| (0.7 * x).cos()),
            )
            .unwrap();
            let f = ScalarField::from_fn(g, |x, y| 0.5 * (1.1 * x).sin() * (0.9 * y).cos());
            let m0 = vorticity_mu(&s);
            let m1 = vorticity_mu(&apply_gauge(&s, &f));
            let mut e = 0.0f64;
            for k in 0..g.num_nodes() {
                e = e.max((m0.values()[k] - m1.values()[k]).abs());
            }
            errs.push(e);
        }
        assert!(errs[0] < 1e-2, "gauge defect too large: {}", errs[0]);
        assert!(errs[1] < errs[0] / 3.0, "not second order: {errs:?}");
    }

    #[test]
    fn winding_of_uniform_state_is_zero() {
        let g = Grid::square(1.0, 16);
        let s = State::uniform(g);
        let loop_rect = LoopRect::new(g, 2, 14, 2, 14).unwrap();
        assert_eq!(winding_number(&s.u_re, &s.u_im, loop_rect).unwrap(), 0);
    }

    #[test]
    fn ansatz_windings_match_their_degree() {
        let g = Grid::square(1.0, 128);
        for d in [1i32, -2] {
            let s = ansatz_state(g, d, 0.25);
            let mid = LoopRect::new(g, 32, 96, 32, 96).unwrap();
            assert_eq!(winding_number(&s.u_re, &s.u_im, mid).unwrap(), d);
            // enlarging the loop without crossing the zero keeps the degree
            let big = LoopRect::new(g, 8, 120, 8, 120).unwrap();
            assert_eq!(winding_number(&s.u_re, &s.u_im, big).unwrap(), d);
        }
    }

    #[test]
    fn loop_through_core_is_rejected() {
        let g = Grid::square(1.0, 64);
        let s = ansatz_state(g, 1, 0.25);
        // the center node sits at the origin where u = 0 exactly
        let through = LoopRect::new(g, 16, 32, 16, 48).unwrap();
        let err = winding_number(&s.u_re, &s.u_im, through).unwrap_err();
        assert!(err.to_string().contains("vortex core"));
    }

    #[test]
    fn mu_of_resolved_vortex_integrates_to_flux_quantum() {
        let g = Grid::square(1.0, 128);
        let s = ansatz_state(g, 1, 0.25);
        assert!(cores_resolved(0.25, g));
        let total = vorticity_mu(&s).integrate().unwrap();
        let target = 2.0 * std::f64::consts::PI;
        assert!(
            (total - target).abs() < 0.05 * target,
            "integral {total} vs 2 pi"
        );
    }

    #[test]
    fn bad_loops_are_rejected() {
        let g = Grid::square(1.0, 16);
        assert!(LoopRect::new(g, 4, 4, 2, 6).is_err());
        assert!(LoopRect::new(g, 0, 20, 2, 6).is_err());
    }
}
