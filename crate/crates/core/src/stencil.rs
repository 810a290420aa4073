//! One-dimensional stencil tables and their tensor application to node
//! arrays. Used where an operator has to exist as an explicit matrix (gauge
//! projection) or at higher order than the public grid calculus (variation
//! cross-checks).

/// Sparse rows of a 1D operator on n+1 nodes: `rows[i]` holds `(col, coeff)`.
pub type Rows = Vec<Vec<(usize, f64)>>;

/// Second-order first derivative, centered inside, one-sided at the ends.
/// Matches the public grid `dx`/`dy` stencils.
pub fn centered2(n: usize, h: f64) -> Rows {
    let c = 1.0 / (2.0 * h);
    let mut rows = vec![Vec::new(); n + 1];
    rows[0] = vec![(0, -3.0 * c), (1, 4.0 * c), (2, -c)];
    for i in 1..n {
        rows[i] = vec![(i - 1, -c), (i + 1, c)];
    }
    rows[n] = vec![(n - 2, c), (n - 1, -4.0 * c), (n, 3.0 * c)];
    rows
}

/// Fourth-order first derivative, five-point centered inside with one-sided
/// closures on the outer two rows of each end.
pub fn centered4(n: usize, h: f64) -> Rows {
    assert!(n >= 8, "fourth-order rows need at least 8 cells");
    let c = 1.0 / (12.0 * h);
    let mut rows = vec![Vec::new(); n + 1];
    rows[0] = vec![
        (0, -25.0 * c),
        (1, 48.0 * c),
        (2, -36.0 * c),
        (3, 16.0 * c),
        (4, -3.0 * c),
    ];
    rows[1] = vec![
        (0, -3.0 * c),
        (1, -10.0 * c),
        (2, 18.0 * c),
        (3, -6.0 * c),
        (4, c),
    ];
    for i in 2..(n - 1) {
        rows[i] = vec![
            (i - 2, c),
            (i - 1, -8.0 * c),
            (i + 1, 8.0 * c),
            (i + 2, -c),
        ];
    }
    rows[n - 1] = vec![
        (n - 4, -c),
        (n - 3, 6.0 * c),
        (n - 2, -18.0 * c),
        (n - 1, 10.0 * c),
        (n, 3.0 * c),
    ];
    rows[n] = vec![
        (n - 4, 3.0 * c),
        (n - 3, -16.0 * c),
        (n - 2, 36.0 * c),
        (n - 1, -48.0 * c),
        (n, 25.0 * c),
    ];
    rows
}

/// Compact three-point Laplacian with mirror ghost rows at the ends, the
/// discrete Neumann form. Regularizer for the gauge projection.
pub fn lap3_neumann(n: usize, h: f64) -> Rows {
    let c = 1.0 / (h * h);
    let mut rows = vec![Vec::new(); n + 1];
    rows[0] = vec![(0, -2.0 * c), (1, 2.0 * c)];
    for i in 1..n {
        rows[i] = vec![(i - 1, c), (i, -2.0 * c), (i + 1, c)];
    }
    rows[n] = vec![(n - 1, 2.0 * c), (n, -2.0 * c)];
    rows
}

/// Row table of the product a*b, entries below 1e-14 pruned.
pub fn compose(a: &Rows, b: &Rows) -> Rows {
    let mut out = vec![Vec::new(); a.len()];
    for (i, arow) in a.iter().enumerate() {
        let mut acc: std::collections::BTreeMap<usize, f64> = std::collections::BTreeMap::new();
        for &(k, av) in arow {
            for &(j, bv) in &b[k] {
                *acc.entry(j).or_insert(0.0) += av * bv;
            }
        }
        out[i] = acc.into_iter().filter(|&(_, v)| v.abs() > 1e-14).collect();
    }
    out
}

/// Apply a 1D row table along x: `dst[i,j] = sum_k rows[i][k] src[k,j]`.
pub fn apply_x(rows: &Rows, npx: usize, npy: usize, src: &[f64], dst: &mut [f64]) {
    debug_assert_eq!(src.len(), npx * npy);
    for iy in 0..npy {
        let s = &src[iy * npx..(iy + 1) * npx];
        let d = &mut dst[iy * npx..(iy + 1) * npx];
        for (ix, row) in rows.iter().enumerate() {
            let mut acc = 0.0;
            for &(k, v) in row {
                acc += v * s[k];
            }
            d[ix] = acc;
        }
    }
}

/// Apply a 1D row table along y: `dst[i,j] = sum_k rows[j][k] src[i,k]`.
pub fn apply_y(rows: &Rows, npx: usize, npy: usize, src: &[f64], dst: &mut [f64]) {
    debug_assert_eq!(src.len(), npx * npy);
    for (iy, row) in rows.iter().enumerate() {
        let d = &mut dst[iy * npx..(iy + 1) * npx];
        d.fill(0.0);
        for &(k, v) in row {
            let s = &src[k * npx..(k + 1) * npx];
            for ix in 0..npx {
                d[ix] += v * s[ix];
            }
        }
    }
    let _ = npy;
}

/// Transpose application along x: `dst[k,j] += rows[i][k] src[i,j]` with dst
/// zeroed first. This is the exact adjoint of `apply_x`.
pub fn apply_x_t(rows: &Rows, npx: usize, npy: usize, src: &[f64], dst: &mut [f64]) {
    debug_assert_eq!(src.len(), npx * npy);
    dst.fill(0.0);
    for iy in 0..npy {
        let s = &src[iy * npx..(iy + 1) * npx];
        let d = &mut dst[iy * npx..(iy + 1) * npx];
        for (ix, row) in rows.iter().enumerate() {
            let sv = s[ix];
            for &(k, v) in row {
                d[k] += v * sv;
            }
        }
    }
}

/// Transpose application along y, adjoint of `apply_y`.
pub fn apply_y_t(rows: &Rows, npx: usize, npy: usize, src: &[f64], dst: &mut [f64]) {
    debug_assert_eq!(src.len(), npx * npy);
    dst.fill(0.0);
    for (iy, row) in rows.iter().enumerate() {
        let s = &src[iy * npx..(iy + 1) * npx];
        for &(k, v) in row {
            let d = &mut dst[k * npx..(k + 1) * npx];
            for ix in 0..npx {
                d[ix] += v * s[ix];
            }
        }
    }
}
