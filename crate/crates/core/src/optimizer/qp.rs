//! Dense strictly convex quadratic programs by the Goldfarb-Idnani dual
//! active-set method.
//!
//! Solves `min 1/2 d'Qd + q'd  subject to  A d >= b` with `Q` positive
//! definite. Problems here have a few dozen variables and rows. The method
//! starts from the unconstrained minimum and adds violated rows one at a time,
//! keeping the iterate dual feasible, so it terminates at an exact vertex
//! instead of approaching it through ill-conditioned barrier systems.

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct QpProblem {
    pub q: DenseMatrix,
    pub c: Vec<f64>,
    pub a: DenseMatrix,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub x: Vec<f64>,
    /// One nonnegative multiplier per row of `A`.
    pub multipliers: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn givens(a: f64, b: f64) -> (f64, f64, f64) {
    let h = a.hypot(b);
    if h == 0.0 {
        (1.0, 0.0, 0.0)
    } else {
        (a / h, b / h, h)
    }
}

/// Rotate columns `i` and `j` of `m`.
fn rotate_cols(m: &mut DenseMatrix, i: usize, j: usize, c: f64, s: f64) {
    for r in 0..m.rows() {
        let (x, y) = (m[(r, i)], m[(r, j)]);
        m[(r, i)] = c * x + s * y;
        m[(r, j)] = -s * x + c * y;
    }
}

/// Active-set factorization: `J' N = [R; 0]` for the active normals `N`,
/// with `J = L^{-T} Q` and `Q` orthogonal.
struct Factors {
    j: DenseMatrix,
    r: DenseMatrix,
    q: usize,
}

impl Factors {
    fn add(&mut self, d: &mut [f64]) {
        let n = d.len();
        for k in (self.q + 1..n).rev() {
            let (c, s, h) = givens(d[k - 1], d[k]);
            if s == 0.0 {
                continue;
            }
            d[k - 1] = h;
            d[k] = 0.0;
            rotate_cols(&mut self.j, k - 1, k, c, s);
        }
        for i in 0..=self.q {
            self.r[(i, self.q)] = d[i];
        }
        self.q += 1;
    }

    fn drop(&mut self, k: usize) {
        let q = self.q;
        for col in k..q - 1 {
            for i in 0..q {
                self.r[(i, col)] = self.r[(i, col + 1)];
            }
        }
        for i in 0..q {
            self.r[(i, q - 1)] = 0.0;
        }
        for i in k..q - 1 {
            let (c, s, h) = givens(self.r[(i, i)], self.r[(i + 1, i)]);
            if s == 0.0 {
                continue;
            }
            self.r[(i, i)] = h;
            self.r[(i + 1, i)] = 0.0;
            for col in i + 1..q - 1 {
                let (x, y) = (self.r[(i, col)], self.r[(i + 1, col)]);
                self.r[(i, col)] = c * x + s * y;
                self.r[(i + 1, col)] = -s * x + c * y;
            }
            rotate_cols(&mut self.j, i, i + 1, c, s);
        }
        self.q -= 1;
    }

    /// `r = R^{-1} d[..q]`.
    fn dual_direction(&self, d: &[f64]) -> Vec<f64> {
        let mut r = d[..self.q].to_vec();
        for i in (0..self.q).rev() {
            for k in i + 1..self.q {
                r[i] -= self.r[(i, k)] * r[k];
            }
            r[i] /= self.r[(i, i)];
        }
        r
    }
}

/// Inverse transpose of a lower-triangular factor.
fn inverse_transpose(l: &DenseMatrix) -> DenseMatrix {
    let n = l.rows();
    let mut inv = DenseMatrix::zeros(n, n);
    for col in 0..n {
        for i in col..n {
            let mut v = if i == col { 1.0 } else { 0.0 };
            for k in col..i {
                v -= l[(i, k)] * inv[(k, col)];
            }
            inv[(i, col)] = v / l[(i, i)];
        }
    }
    inv.transpose()
}

pub fn solve_qp(p: &QpProblem, tol: f64) -> Result<QpSolution> {
    let n = p.q.rows();
    let rows = p.a.rows();
    if p.q.cols() != n || p.c.len() != n || p.a.cols() != n || p.b.len() != rows {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: p.c.len(),
        });
    }
    let l = p
        .q
        .cholesky()
        .ok_or_else(|| Error::InvalidArgument("QP Hessian must be positive definite".into()))?;

    // unit rows, so one tolerance fits every constraint
    let mut normals: Vec<Vec<f64>> = Vec::with_capacity(rows);
    let mut rhs = Vec::with_capacity(rows);
    let mut row_scale = Vec::with_capacity(rows);
    for r in 0..rows {
        let row = p.a.row(r);
        let nrm = dot(row, row).sqrt();
        let s = if nrm > 0.0 { 1.0 / nrm } else { 1.0 };
        normals.push(row.iter().map(|v| v * s).collect());
        rhs.push(p.b[r] * s);
        row_scale.push(s);
    }

    let neg_c: Vec<f64> = p.c.iter().map(|v| -v).collect();
    let mut x = DenseMatrix::cholesky_solve(&l, &neg_c);
    let mut f = Factors {
        j: inverse_transpose(&l),
        r: DenseMatrix::zeros(n, n),
        q: 0,
    };
    let mut active: Vec<usize> = Vec::new();
    let mut u: Vec<f64> = Vec::new();
    let max_iters = 10 * (n + rows) + 50;
    let mut iterations = 0;

    let finish = |x: Vec<f64>, active: &[usize], u: &[f64], iterations: usize, converged: bool| {
        let mut multipliers = vec![0.0; rows];
        for (&k, &uk) in active.iter().zip(u) {
            multipliers[k] = uk * row_scale[k];
        }
        QpSolution {
            x,
            multipliers,
            iterations,
            converged,
        }
    };

    loop {
        // most violated inactive row
        let mut pick = None;
        let mut worst = 0.0;
        for k in 0..rows {
            if active.contains(&k) {
                continue;
            }
            let slack = dot(&normals[k], &x) - rhs[k];
            if slack < -tol * (1.0 + rhs[k].abs()) && slack < worst {
                worst = slack;
                pick = Some(k);
            }
        }
        let Some(pk) = pick else {
            return Ok(finish(x, &active, &u, iterations, true));
        };
        let np = &normals[pk];
        let mut u_plus = 0.0;

        loop {
            iterations += 1;
            if iterations > max_iters {
                return Ok(finish(x, &active, &u, iterations, false));
            }
            let mut d: Vec<f64> = (0..n).map(|c| (0..n).map(|r| f.j[(r, c)] * np[r]).sum()).collect();
            let z: Vec<f64> = (0..n).map(|r| (f.q..n).map(|c| f.j[(r, c)] * d[c]).sum()).collect();
            let rdir = f.dual_direction(&d);

            let mut t1 = f64::INFINITY;
            let mut drop_at = None;
            for (k, (&rk, &uk)) in rdir.iter().zip(&u).enumerate() {
                if rk > 0.0 && uk / rk < t1 {
                    t1 = uk / rk;
                    drop_at = Some(k);
                }
            }
            let zn = dot(&z, np);
            let slack = dot(np, &x) - rhs[pk];
            let t2 = if zn > 1e-14 * dot(&z, &z).sqrt().max(1e-300) && zn > 0.0 {
                -slack / zn
            } else {
                f64::INFINITY
            };

            if t1.is_infinite() && t2.is_infinite() {
                // linearized constraints are inconsistent
                return Ok(finish(x, &active, &u, iterations, false));
            }
            let t = t1.min(t2);
            if t2.is_finite() {
                for (xi, zi) in x.iter_mut().zip(&z) {
                    *xi += t * zi;
                }
            }
            for (uk, rk) in u.iter_mut().zip(&rdir) {
                *uk -= t * rk;
            }
            u_plus += t;

            if t2 <= t1 {
                f.add(&mut d);
                active.push(pk);
                u.push(u_plus);
                break;
            }
            let k = drop_at.expect("finite partial step has an index");
            f.drop(k);
            active.remove(k);
            u.remove(k);
        }
    }
}
