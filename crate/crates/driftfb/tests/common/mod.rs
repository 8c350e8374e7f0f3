//! Shared test oracles, independent of the solver they check.

use driftfb::grid::Field;
use driftfb::operator::DiscreteOperator;

/// Dense LU with partial pivoting; returns the solution of `A x = b`.
pub fn lu_solve(a: &mut [Vec<f64>], b: &mut [f64]) -> Vec<f64> {
    let n = b.len();
    let mut perm: Vec<usize> = (0..n).collect();
    for col in 0..n {
        // pivot
        let mut best = col;
        for row in col + 1..n {
            if a[perm[row]][col].abs() > a[perm[best]][col].abs() {
                best = row;
            }
        }
        perm.swap(col, best);
        let p = perm[col];
        let piv = a[p][col];
        assert!(piv.abs() > 1e-300, "singular matrix at column {col}");
        for row in col + 1..n {
            let r = perm[row];
            let f = a[r][col] / piv;
            if f != 0.0 {
                a[r][col] = f;
                for k in col + 1..n {
                    a[r][k] -= f * a[p][k];
                }
                b[r] -= f * b[p];
            } else {
                a[r][col] = 0.0;
            }
        }
    }
    // back substitution
    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let p = perm[col];
        let mut s = b[p];
        for k in col + 1..n {
            s -= a[p][k] * x[k];
        }
        x[col] = s / a[p][col];
    }
    x
}

/// Direct active-set solve of the linear complementarity problem
/// `min(A u, u - phi) = 0` with a dense matrix assembled from the operator's
/// offset coefficients. Independent of the projected-SOR path; intended for
/// coarse grids (cubic cost).
///
/// Returns `(u, active_mask)`.
pub fn dense_lcp_active_set(op: &DiscreteOperator, phi: &Field) -> (Vec<f64>, Vec<bool>) {
    let grid = op.grid;
    assert_eq!(grid.dimension, 1, "oracle implemented for 1-D grids");
    let n = grid.node_count();
    let diag = op.diagonal_value();
    let dense = |i: usize, j: usize| -> f64 {
        if i == j {
            diag
        } else {
            op.offset_coefficient(&[j as isize - i as isize])
        }
    };

    let mut active: Vec<bool> = phi.values.iter().map(|&p| p > 0.0).collect();
    for _iteration in 0..100 {
        // unknowns: u_i for inactive i; u = phi on the active set
        let inactive: Vec<usize> = (0..n).filter(|&i| !active[i]).collect();
        let m = inactive.len();
        let mut a = vec![vec![0.0; m]; m];
        let mut rhs = vec![0.0; m];
        for (r, &i) in inactive.iter().enumerate() {
            for (c, &j) in inactive.iter().enumerate() {
                a[r][c] = dense(i, j);
            }
            let mut s = 0.0;
            for j in 0..n {
                if active[j] {
                    s -= dense(i, j) * phi.values[j];
                }
            }
            rhs[r] = s;
        }
        let sol = lu_solve(&mut a, &mut rhs);

        let mut u = phi.values.clone();
        for (r, &i) in inactive.iter().enumerate() {
            u[i] = sol[r];
        }

        // complementarity violations drive the set update
        let mut changed = false;
        let au: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| dense(i, j) * u[j]).sum())
            .collect();
        let mut next = active.clone();
        for i in 0..n {
            if !active[i] && u[i] < phi.values[i] - 1e-13 {
                next[i] = true;
                changed = true;
            }
            if active[i] && au[i] < -1e-11 {
                next[i] = false;
                changed = true;
            }
        }
        if !changed {
            return (u, active);
        }
        active = next;
    }
    panic!("active-set iteration did not settle in 100 rounds");
}
