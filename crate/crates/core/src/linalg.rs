//! Dense LU with partial pivoting for the small fixed-size systems the
//! planner builds.

use crate::{Error, Result};

/// Systems with a reciprocal condition estimate below this are singular.
pub const RCOND_SINGULAR: f64 = 1e-12;

struct Lu<const N: usize> {
    lu: [[f64; N]; N],
    perm: [usize; N],
}

impl<const N: usize> Lu<N> {
    #[allow(clippy::needless_range_loop)]
    fn factor(mut a: [[f64; N]; N]) -> Option<Self> {
        let mut perm = [0usize; N];
        for (i, p) in perm.iter_mut().enumerate() {
            *p = i;
        }
        for k in 0..N {
            let pivot = (k..N).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))?;
            if a[pivot][k] == 0.0 || !a[pivot][k].is_finite() {
                return None;
            }
            a.swap(k, pivot);
            perm.swap(k, pivot);
            for i in k + 1..N {
                let m = a[i][k] / a[k][k];
                a[i][k] = m;
                for j in k + 1..N {
                    a[i][j] -= m * a[k][j];
                }
            }
        }
        Some(Self { lu: a, perm })
    }

    fn solve(&self, b: &[f64; N]) -> [f64; N] {
        let mut x = [0.0; N];
        for i in 0..N {
            x[i] = b[self.perm[i]];
        }
        for i in 0..N {
            for j in 0..i {
                x[i] -= self.lu[i][j] * x[j];
            }
        }
        for i in (0..N).rev() {
            for j in i + 1..N {
                x[i] -= self.lu[i][j] * x[j];
            }
            x[i] /= self.lu[i][i];
        }
        x
    }
}

fn norm1<const N: usize>(a: &[[f64; N]; N]) -> f64 {
    (0..N)
        .map(|j| (0..N).map(|i| a[i][j].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn mat_vec<const N: usize>(a: &[[f64; N]; N], x: &[f64; N]) -> [f64; N] {
    let mut y = [0.0; N];
    for i in 0..N {
        y[i] = (0..N).map(|j| a[i][j] * x[j]).sum();
    }
    y
}

/// Solves `a · x = b`.
///
/// Columns are equilibrated before factoring (monomial columns in absolute
/// time differ by orders of magnitude), the reciprocal 1-norm condition of the
/// equilibrated matrix is computed from its explicit inverse, and one step of
/// iterative refinement is applied.
pub fn solve<const N: usize>(a: &[[f64; N]; N], b: &[f64; N]) -> Result<[f64; N]> {
    let mut scale = [1.0; N];
    for (j, s) in scale.iter_mut().enumerate() {
        let m = (0..N).map(|i| a[i][j].abs()).fold(0.0, f64::max);
        if m > 0.0 {
            *s = m;
        }
    }
    let mut scaled = *a;
    for row in scaled.iter_mut() {
        for (v, s) in row.iter_mut().zip(&scale) {
            *v /= s;
        }
    }

    let lu = Lu::factor(scaled).ok_or(Error::SingularSystem { rcond: 0.0 })?;

    let mut inv = [[0.0; N]; N];
    for j in 0..N {
        let mut e = [0.0; N];
        e[j] = 1.0;
        let col = lu.solve(&e);
        for i in 0..N {
            inv[i][j] = col[i];
        }
    }
    let rcond = 1.0 / (norm1(&scaled) * norm1(&inv));
    if !(rcond >= RCOND_SINGULAR) {
        return Err(Error::SingularSystem { rcond });
    }

    let mut y = lu.solve(b);
    let r = mat_vec(&scaled, &y);
    let mut resid = [0.0; N];
    for i in 0..N {
        resid[i] = b[i] - r[i];
    }
    let dy = lu.solve(&resid);
    for i in 0..N {
        y[i] += dy[i];
    }

    let mut x = [0.0; N];
    for j in 0..N {
        x[j] = y[j] / scale[j];
    }
    Ok(x)
}

/// ‖a·x − b‖∞ / ‖b‖∞, or the absolute residual when `b` is zero.
pub fn relative_residual<const N: usize>(a: &[[f64; N]; N], x: &[f64; N], b: &[f64; N]) -> f64 {
    let ax = mat_vec(a, x);
    let r = ax.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
    let nb = b.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if nb > 0.0 {
        r / nb
    } else {
        r
    }
}
