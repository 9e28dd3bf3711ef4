//! Complex tridiagonal elimination with partial pivoting.
//!
//! ```text
//! lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i]
//! ```
//!
//! `lower[0]` and `upper[n-1]` are ignored.

use crate::error::{Error, Result};
use crate::grid::C64;

pub const PIVOT_FLOOR: f64 = 1e-14;

/// Solves in place; `rhs` holds the solution on return.
pub fn solve(lower: &[C64], diag: &[C64], upper: &[C64], rhs: &mut [C64]) -> Result<()> {
    let n = diag.len();
    assert!(n >= 2 && lower.len() == n && upper.len() == n && rhs.len() == n);
    let zero = C64::new(0.0, 0.0);

    // Row i after elimination: d[i] x[i] + u[i] x[i+1] + u2[i] x[i+2] = b[i]
    let mut d = diag.to_vec();
    let mut u = upper.to_vec();
    let mut u2 = vec![zero; n];
    let mut l = lower.to_vec();

    for i in 0..n - 1 {
        if l[i + 1].norm() > d[i].norm() {
            // swap rows i and i+1
            let (di, ui, u2i, bi) = (d[i], u[i], u2[i], rhs[i]);
            d[i] = l[i + 1];
            u[i] = d[i + 1];
            u2[i] = if i + 1 < n - 1 { u[i + 1] } else { zero };
            rhs[i] = rhs[i + 1];
            // old row i becomes row i+1, to be eliminated against new row i
            l[i + 1] = di;
            d[i + 1] = ui;
            if i + 1 < n - 1 {
                u[i + 1] = u2i;
            }
            rhs[i + 1] = bi;
        }
        if d[i].norm() < PIVOT_FLOOR {
            return Err(Error::SingularSystem {
                row: i,
                pivot: d[i].norm(),
            });
        }
        let m = l[i + 1] / d[i];
        d[i + 1] -= m * u[i];
        if i + 1 < n - 1 {
            u[i + 1] -= m * u2[i];
        }
        let bi = rhs[i];
        rhs[i + 1] -= m * bi;
    }
    if d[n - 1].norm() < PIVOT_FLOOR {
        return Err(Error::SingularSystem {
            row: n - 1,
            pivot: d[n - 1].norm(),
        });
    }

    rhs[n - 1] /= d[n - 1];
    if n >= 2 {
        let x1 = rhs[n - 1];
        rhs[n - 2] = (rhs[n - 2] - u[n - 2] * x1) / d[n - 2];
    }
    for i in (0..n.saturating_sub(2)).rev() {
        let v = rhs[i] - u[i] * rhs[i + 1] - u2[i] * rhs[i + 2];
        rhs[i] = v / d[i];
    }
    Ok(())
}
