//! Minimax scheme derivation.
//!
//! Decision vector `x = [w_1, ..., w_M, g]`. The problem is
//!
//! ```text
//! minimize g^2   subject to   g^2 - |G_M(z_j; w)|^2 >= 0   for every test point z_j,
//!                             1e-3 <= w_i <= 500,  g >= 0
//! ```
//!
//! and is solved by a trust-region SQP method with an L1 merit function. The
//! quadratic subproblems go to the dense interior-point solver in [`qp`].

pub mod qp;

use num_complex::Complex64;

use crate::amplification::{chebyshev_scheme, Scheme};
use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::ratio::Ratio;
use crate::region::{make_region, EllipseRegion};
use qp::{solve_qp, QpProblem};

pub const OMEGA_LOWER: f64 = 1e-3;
pub const OMEGA_UPPER: f64 = 500.0;

/// Below this modulus a linear factor has no usable polar angle.
const DEGENERATE_MODULUS: f64 = 1e-300;

pub fn objective(x: &[f64]) -> f64 {
    let g = x[x.len() - 1];
    g * g
}

pub fn objective_gradient(x: &[f64]) -> Vec<f64> {
    let mut d = vec![0.0; x.len()];
    d[x.len() - 1] = 2.0 * x[x.len() - 1];
    d
}

/// `g^2 - |G_M(z)|^2`; nonnegative when the constraint holds.
pub fn constraint_value(x: &[f64], z: Complex64) -> f64 {
    let (w, g) = x.split_at(x.len() - 1);
    let amp = w
        .iter()
        .fold(Complex64::new(1.0, 0.0), |acc, &wi| acc * ((1.0 - wi) + wi * z));
    g[0] * g[0] - amp.norm_sqr()
}

/// Gradient of [`constraint_value`] with respect to `x`, assembled through
/// the polar form of each linear factor.
pub fn constraint_jacobian(x: &[f64], z: Complex64) -> Result<Vec<f64>> {
    let m = x.len() - 1;
    let (w, g) = x.split_at(m);
    let (re, im) = (z.re, z.im);

    // 1. real and imaginary parts of each factor
    let a: Vec<f64> = w.iter().map(|&wi| (1.0 - wi) + wi * re).collect();
    let b: Vec<f64> = w.iter().map(|&wi| wi * im).collect();

    // 2. polar form of each factor and of the product
    let c: Vec<f64> = a.iter().zip(&b).map(|(ai, bi)| ai.hypot(*bi)).collect();
    if let Some(j) = c.iter().position(|&cj| cj < DEGENERATE_MODULUS) {
        return Err(Error::DegenerateFactor { index: j });
    }
    let theta: Vec<f64> = a.iter().zip(&b).map(|(ai, bi)| bi.atan2(*ai)).collect();
    let mut prefix = vec![1.0; m + 1];
    for i in 0..m {
        prefix[i + 1] = prefix[i] * c[i];
    }
    let mut suffix = vec![1.0; m + 1];
    for i in (0..m).rev() {
        suffix[i] = suffix[i + 1] * c[i];
    }
    let d_star = prefix[m];
    let theta_star: f64 = theta.iter().sum();

    // 4. real and imaginary parts of G_M
    let (sin_t, cos_t) = theta_star.sin_cos();
    let re_g = d_star * cos_t;
    let im_g = d_star * sin_t;

    let mut jac = Vec::with_capacity(m + 1);
    for j in 0..m {
        // 3. only factor j depends on w_j
        let others = prefix[j] * suffix[j + 1];
        let dc = (a[j] * (re - 1.0) + b[j] * im) / c[j];
        let dd = dc * others;
        let dtheta = (a[j] * im - b[j] * (re - 1.0)) / (c[j] * c[j]);
        let dre = dd * cos_t - d_star * sin_t * dtheta;
        let dim = dd * sin_t + d_star * cos_t * dtheta;
        // 5.
        jac.push(-2.0 * re_g * dre - 2.0 * im_g * dim);
    }
    jac.push(2.0 * g[0]);
    Ok(jac)
}

fn fd_step(v: f64) -> f64 {
    1e-6 * v.abs().max(1.0)
}

/// Symmetrized central-difference Hessian built from Jacobian columns.
pub fn constraint_hessian(x: &[f64], z: Complex64) -> Result<DenseMatrix> {
    let n = x.len();
    let mut h = DenseMatrix::zeros(n, n);
    let mut xp = x.to_vec();
    for k in 0..n {
        let step = fd_step(x[k]);
        xp[k] = x[k] + step;
        let jp = constraint_jacobian(&xp, z)?;
        xp[k] = x[k] - step;
        let jm = constraint_jacobian(&xp, z)?;
        xp[k] = x[k];
        for i in 0..n {
            h[(i, k)] = (jp[i] - jm[i]) / (2.0 * step);
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            let s = 0.5 * (h[(i, j)] + h[(j, i)]);
            h[(i, j)] = s;
            h[(j, i)] = s;
        }
    }
    Ok(h)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Bound on the Lagrangian gradient and complementarity.
    pub kkt_tol: f64,
    /// Bound on constraint violation at termination.
    pub feas_tol: f64,
    /// Steps shorter than this (max norm) end the iteration.
    pub step_tol: f64,
    pub max_iters: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            kkt_tol: 1e-8,
            feas_tol: 1e-8,
            step_tol: 1e-13,
            max_iters: 300,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OptimizationProblem {
    pub m: u32,
    pub c_ratio: Ratio,
    pub region: EllipseRegion,
    pub test_points: Vec<Complex64>,
    pub initial_factors: Vec<f64>,
    pub initial_g_bar: f64,
    pub tolerances: Tolerances,
}

impl OptimizationProblem {
    /// Problem for `(m, c)` started from the given point.
    pub fn new(m: u32, c: Ratio, initial_factors: Vec<f64>, initial_g_bar: f64) -> Result<Self> {
        let region = make_region(m, c.value())?;
        if initial_factors.len() != m as usize {
            return Err(Error::DimensionMismatch {
                expected: m as usize,
                found: initial_factors.len(),
            });
        }
        if initial_factors.iter().any(|w| !(w.is_finite() && *w > 0.0)) || !(initial_g_bar > 0.0) {
            return Err(Error::InvalidArgument("initial point must be strictly positive".into()));
        }
        Ok(OptimizationProblem {
            m,
            c_ratio: c,
            test_points: region.test_points(),
            region,
            initial_factors,
            initial_g_bar,
            tolerances: Tolerances::default(),
        })
    }
}

#[derive(Debug, Clone)]
pub struct OptimizationResult {
    /// Factors sorted descending, tagged with `c` and (when below one) `g`.
    pub scheme: Scheme,
    pub g_bar: f64,
    pub converged: bool,
    pub iterations: usize,
    pub max_constraint_violation: f64,
    pub kkt_residual: f64,
}

struct Evaluation {
    cons: Vec<f64>,
    jac: Vec<Vec<f64>>,
}

fn violation(cons: &[f64]) -> f64 {
    cons.iter().map(|c| (-c).max(0.0)).sum()
}

fn max_violation(cons: &[f64]) -> f64 {
    cons.iter().map(|c| (-c).max(0.0)).fold(0.0, f64::max)
}

/// Constraint values and gradients, nudging a factor off a singular
/// hyperplane if needed.
fn evaluate(x: &mut [f64], pts: &[Complex64]) -> Result<Evaluation> {
    for _ in 0..8 {
        let mut jac = Vec::with_capacity(pts.len());
        let mut bad = None;
        for &z in pts {
            match constraint_jacobian(x, z) {
                Ok(j) => jac.push(j),
                Err(Error::DegenerateFactor { index }) => {
                    bad = Some(index);
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        match bad {
            None => {
                let cons = pts.iter().map(|&z| constraint_value(x, z)).collect();
                return Ok(Evaluation { cons, jac });
            }
            Some(j) => x[j] += 1e-12 * x[j].max(1.0),
        }
    }
    Err(Error::DegenerateFactor { index: 0 })
}

struct Subproblem {
    d: Vec<f64>,
    /// Multipliers of the nonlinear constraints.
    lam: Vec<f64>,
    /// Net multiplier of genuine variable bounds (trust-region rows excluded).
    bound_lam: Vec<f64>,
}

fn solve_subproblem(
    x: &[f64],
    h: &DenseMatrix,
    grad: &[f64],
    cons: &[f64],
    jac: &[Vec<f64>],
    radius: f64,
) -> Result<Option<Subproblem>> {
    let n = x.len();
    let m = n - 1;
    let p = cons.len();
    let mut rows: Vec<Vec<f64>> = jac.to_vec();
    let mut rhs: Vec<f64> = cons.iter().map(|c| -c).collect();
    // (variable index, sign, genuine bound?)
    let mut box_rows: Vec<(usize, f64, bool)> = Vec::new();
    for i in 0..m {
        let tr = radius * x[i].max(1.0);
        let lo_bound = OMEGA_LOWER - x[i];
        let hi_bound = OMEGA_UPPER - x[i];
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        rows.push(e.clone());
        rhs.push(lo_bound.max(-tr));
        box_rows.push((i, 1.0, lo_bound >= -tr));
        e[i] = -1.0;
        rows.push(e);
        rhs.push(-hi_bound.min(tr));
        box_rows.push((i, -1.0, hi_bound <= tr));
    }
    let mut e = vec![0.0; n];
    e[m] = 1.0;
    rows.push(e);
    rhs.push(-x[m]);
    box_rows.push((m, 1.0, true));

    let a = DenseMatrix::from_rows(&rows);
    let sol = solve_qp(
        &QpProblem {
            q: h.clone(),
            c: grad.to_vec(),
            a,
            b: rhs,
        },
        1e-13,
    )?;
    if !sol.converged {
        return Ok(None);
    }
    let mut bound_lam = vec![0.0; n];
    for (k, &(i, sign, genuine)) in box_rows.iter().enumerate() {
        if genuine {
            bound_lam[i] += sign * sol.multipliers[p + k];
        }
    }
    Ok(Some(Subproblem {
        d: sol.x,
        lam: sol.multipliers[..p].to_vec(),
        bound_lam,
    }))
}

/// Convexified Lagrangian Hessian `grad^2 f - sum lam_j grad^2 c_j`.
///
/// Negative curvature is first absorbed by `rho * J_A' J_A` over the
/// constraints active at the last iterate, which leaves curvature along the
/// active manifold alone. A diagonal shift is the fallback.
fn lagrangian_hessian(
    x: &[f64],
    pts: &[Complex64],
    lam: &[f64],
    eval: &Evaluation,
) -> Result<DenseMatrix> {
    let n = x.len();
    let mut h = DenseMatrix::zeros(n, n);
    h[(n - 1, n - 1)] = 2.0;
    for (&z, &l) in pts.iter().zip(lam) {
        if l.abs() < 1e-14 {
            continue;
        }
        let hc = constraint_hessian(x, z)?;
        for i in 0..n {
            for j in 0..n {
                h[(i, j)] -= l * hc[(i, j)];
            }
        }
    }
    if h.cholesky().is_some() {
        return Ok(h);
    }
    let active: Vec<usize> = (0..lam.len()).filter(|&j| lam[j] > 1e-12).collect();
    let scale = (0..n).map(|i| h[(i, i)].abs()).fold(1.0, f64::max);
    if !active.is_empty() {
        let mut k = DenseMatrix::zeros(n, n);
        for &j in &active {
            let g = &eval.jac[j];
            for a in 0..n {
                for b in 0..n {
                    k[(a, b)] += g[a] * g[b];
                }
            }
        }
        let kscale = (0..n).map(|i| k[(i, i)]).fold(0.0, f64::max);
        if kscale > 0.0 {
            let mut rho = scale / kscale;
            for _ in 0..8 {
                let mut hh = h.clone();
                for a in 0..n {
                    for b in 0..n {
                        hh[(a, b)] += rho * k[(a, b)];
                    }
                }
                if hh.cholesky().is_some() {
                    return Ok(hh);
                }
                rho *= 10.0;
            }
        }
    }
    let mut shift = 1e-8 * scale;
    loop {
        let mut hh = h.clone();
        for i in 0..n {
            hh[(i, i)] += shift;
        }
        if hh.cholesky().is_some() {
            return Ok(hh);
        }
        shift *= 10.0;
    }
}

/// Newton's method on the equioscillation system `c_j(x) = 0` over all
/// distinct test points, which is square when there are `M + 1` of them.
///
/// Succeeds only at a KKT point: the multipliers solving `J' lam = grad f`
/// must be nonnegative and the factors must stay inside their bounds.
fn vertex_newton(x0: &[f64], pts: &[Complex64]) -> Option<(Vec<f64>, Evaluation, Vec<f64>)> {
    let n = x0.len();
    if pts.len() != n {
        return None;
    }
    let m = n - 1;
    let mut x = x0.to_vec();
    let mut ev = evaluate(&mut x, pts).ok()?;
    let size = |c: &[f64]| c.iter().fold(0.0, |a: f64, v| a.max(v.abs()));
    let mut res = size(&ev.cons);
    for _ in 0..30 {
        if res <= 1e-14 {
            break;
        }
        let jac = DenseMatrix::from_rows(&ev.jac);
        let rhs: Vec<f64> = ev.cons.iter().map(|c| -c).collect();
        let dx = jac.solve(&rhs)?;
        let mut t = 1.0;
        loop {
            let mut xt: Vec<f64> = x.iter().zip(&dx).map(|(a, b)| a + t * b).collect();
            let inside = xt[..m].iter().all(|w| (OMEGA_LOWER..=OMEGA_UPPER).contains(w)) && xt[m] > 0.0;
            if inside {
                if let Ok(et) = evaluate(&mut xt, pts) {
                    let rt = size(&et.cons);
                    if rt < res {
                        x = xt;
                        ev = et;
                        res = rt;
                        break;
                    }
                }
            }
            t *= 0.5;
            if t < 1e-3 {
                return None;
            }
        }
    }
    if res > 1e-12 {
        return None;
    }
    let jt = DenseMatrix::from_rows(&ev.jac).transpose();
    let lam = jt.solve(&objective_gradient(&x))?;
    if lam.iter().any(|&l| l < -1e-10) {
        return None;
    }
    Some((x, ev, lam.iter().map(|l| l.max(0.0)).collect()))
}

fn merit(x: &[f64], cons: &[f64], nu: f64) -> f64 {
    objective(x) + nu * violation(cons)
}

/// Run the SQP iteration on `problem`.
pub fn solve(problem: &OptimizationProblem) -> Result<OptimizationResult> {
    if problem.test_points.is_empty() {
        return Err(Error::Empty("test points"));
    }
    // Real factors give |G(conj z)| = |G(z)|, so a conjugate pair is one
    // constraint; keeping both would hand the QP duplicate rows.
    let mut unique: Vec<Complex64> = Vec::with_capacity(problem.test_points.len());
    for &z in &problem.test_points {
        let z = Complex64::new(z.re, z.im.abs());
        if !unique.iter().any(|u| (u - z).norm() <= 1e-14 * (1.0 + z.norm())) {
            unique.push(z);
        }
    }
    let pts = &unique;
    let tol = problem.tolerances;
    let m = problem.m as usize;
    let mut x: Vec<f64> = problem.initial_factors.clone();
    x.push(problem.initial_g_bar);
    let n = m + 1;

    let mut eval = evaluate(&mut x, pts)?;
    let mut lam = vec![0.0; pts.len()];
    let mut nu: f64 = 1.0;
    let mut radius: f64 = 0.5;
    let mut converged = false;
    let mut kkt = f64::INFINITY;
    let mut iterations = 0;
    let mut moved = true;

    while iterations < tol.max_iters {
        if moved {
            moved = false;
            if let Some((xv, ev, lv)) = vertex_newton(&x, pts) {
                let grad = objective_gradient(&xv);
                let mut stat = 0.0f64;
                for i in 0..n {
                    let r = grad[i] - (0..pts.len()).map(|j| lv[j] * ev.jac[j][i]).sum::<f64>();
                    stat = stat.max(r.abs());
                }
                let comp = lv.iter().zip(&ev.cons).fold(0.0f64, |a, (l, c)| a.max((l * c).abs()));
                if stat.max(comp) <= tol.kkt_tol && max_violation(&ev.cons) <= tol.feas_tol {
                    x = xv;
                    eval = ev;
                    kkt = stat.max(comp);
                    converged = true;
                    break;
                }
            }
        }
        iterations += 1;
        let h = lagrangian_hessian(&x, pts, &lam, &eval)?;
        let grad = objective_gradient(&x);
        let sub = match solve_subproblem(&x, &h, &grad, &eval.cons, &eval.jac, radius)? {
            Some(s) => s,
            None => {
                radius *= 0.25;
                if radius < 1e-14 {
                    break;
                }
                continue;
            }
        };

        // first-order optimality at x with the subproblem multipliers
        let mut r = grad.clone();
        for (j, &l) in sub.lam.iter().enumerate() {
            for i in 0..n {
                r[i] -= l * eval.jac[j][i];
            }
        }
        for i in 0..n {
            r[i] -= sub.bound_lam[i];
        }
        let stationarity = r.iter().fold(0.0, |a: f64, v| a.max(v.abs()));
        let complementarity = sub
            .lam
            .iter()
            .zip(&eval.cons)
            .fold(0.0, |a: f64, (l, c)| a.max((l * c).abs()));
        kkt = stationarity.max(complementarity);
        let feas = max_violation(&eval.cons);
        let step = sub.d.iter().fold(0.0, |a: f64, v| a.max(v.abs()));
        if feas <= tol.feas_tol && kkt <= tol.kkt_tol {
            converged = true;
            break;
        }
        if step <= tol.step_tol {
            break;
        }

        let lam_max = sub.lam.iter().fold(0.0, |a: f64, &v| a.max(v));
        nu = nu.max(2.0 * lam_max + 1e-3);

        // predicted reduction of the L1 model
        let hd = h.matvec(&sub.d);
        let quad: f64 = grad.iter().zip(&sub.d).map(|(g, d)| g * d).sum::<f64>()
            + 0.5 * hd.iter().zip(&sub.d).map(|(a, b)| a * b).sum::<f64>();
        let lin_cons: Vec<f64> = eval
            .cons
            .iter()
            .zip(&eval.jac)
            .map(|(c, j)| c + j.iter().zip(&sub.d).map(|(a, b)| a * b).sum::<f64>())
            .collect();
        let pred = -quad + nu * (violation(&eval.cons) - violation(&lin_cons));
        let phi = merit(&x, &eval.cons, nu);

        let try_point = |d: &[f64]| -> Result<(Vec<f64>, Evaluation)> {
            let mut xn: Vec<f64> = x.iter().zip(d).map(|(a, b)| a + b).collect();
            for v in xn.iter_mut().take(m) {
                *v = v.clamp(OMEGA_LOWER, OMEGA_UPPER);
            }
            xn[m] = xn[m].max(0.0);
            let ev = evaluate(&mut xn, pts)?;
            Ok((xn, ev))
        };

        let (mut xn, mut evn) = try_point(&sub.d)?;
        let mut ratio = (phi - merit(&xn, &evn.cons, nu)) / pred.max(1e-300);
        if ratio < 0.75 {
            // second-order correction against the Maratos effect
            let shifted: Vec<f64> = evn
                .cons
                .iter()
                .zip(&eval.jac)
                .map(|(c, j)| c - j.iter().zip(&sub.d).map(|(a, b)| a * b).sum::<f64>())
                .collect();
            if let Some(soc) = solve_subproblem(&x, &h, &grad, &shifted, &eval.jac, radius)? {
                let (xs, evs) = try_point(&soc.d)?;
                let rs = (phi - merit(&xs, &evs.cons, nu)) / pred.max(1e-300);
                if rs > ratio {
                    xn = xs;
                    evn = evs;
                    ratio = rs;
                }
            }
        }

        if ratio >= 0.1 || (pred <= 1e-15 && merit(&xn, &evn.cons, nu) <= phi) {
            let tr_active = (0..m).any(|i| sub.d[i].abs() >= 0.5 * radius * x[i].max(1.0));
            x = xn;
            eval = evn;
            lam = sub.lam;
            moved = true;
            if ratio > 0.75 && tr_active {
                radius = (radius * 2.0).min(10.0);
            }
        } else {
            radius *= 0.25;
            if radius < 1e-14 {
                break;
            }
        }
    }

    let g_bar = x[m];
    let mut factors = x[..m].to_vec();
    factors.sort_by(|a, b| b.total_cmp(a));
    let mut scheme = Scheme::new(factors)?.with_c_ratio(problem.c_ratio);
    if g_bar < 1.0 {
        scheme = scheme.with_g_bar(g_bar)?;
    }
    let max_constraint_violation = max_violation(&eval.cons);
    Ok(OptimizationResult {
        scheme,
        g_bar,
        converged: converged && max_constraint_violation <= tol.feas_tol,
        iterations,
        max_constraint_violation,
        kkt_residual: kkt,
    })
}

/// Derive the scheme for `(m, c)`.
///
/// Starts from the real-axis scheme with `g = 0.4`; for `c >= 1/3` the start
/// is the converged scheme of the next smaller grid ratio.
pub fn derive_scheme(m: u32, c: Ratio) -> Result<OptimizationResult> {
    if m < 2 {
        return Err(Error::Validation(format!("derivation needs M >= 2, got {m}")));
    }
    if c > Ratio::new(1, 1) {
        return Err(Error::Validation(format!("ellipse ratio c = {c} must lie in [0, 1]")));
    }
    let third = Ratio::new(1, 3);
    let (factors, g0) = if c >= third {
        let prev = Ratio::grid()
            .into_iter()
            .filter(|&r| r < c && r >= Ratio::new(1, 5))
            .max()
            .expect("grid holds 1/5");
        let warm = derive_scheme(m, prev)?;
        (warm.scheme.factors().to_vec(), warm.g_bar.max(0.4))
    } else {
        (chebyshev_scheme(m).factors().to_vec(), 0.4)
    };
    solve(&OptimizationProblem::new(m, c, factors, g0)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fd_jacobian(x: &[f64], z: Complex64) -> Vec<f64> {
        let mut xp = x.to_vec();
        (0..x.len())
            .map(|k| {
                let h = 1e-6;
                xp[k] = x[k] + h;
                let fp = constraint_value(&xp, z);
                xp[k] = x[k] - h;
                let fm = constraint_value(&xp, z);
                xp[k] = x[k];
                (fp - fm) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn objective_examples() {
        assert!((objective(&[1.0, 1.0 / 3.0]) - 1.0 / 9.0).abs() < 1e-16);
        assert_eq!(objective(&[2.0, 0.0]), 0.0);
        assert_eq!(objective(&[2.0, 3.0, 0.5]), 0.25);
        let g = objective_gradient(&[1.0, 2.0, 1.0 / 3.0]);
        assert_eq!(&g[..2], &[0.0, 0.0]);
        assert!((g[2] - 2.0 / 3.0).abs() < 1e-16);
        assert!(objective_gradient(&[1.0, 0.0]).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn objective_gradient_matches_fd() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let x: Vec<f64> = (0..4).map(|_| rng.gen_range(0.1..3.0)).collect();
            let g = objective_gradient(&x);
            let mut xp = x.clone();
            for k in 0..4 {
                xp[k] = x[k] + 1e-6;
                let fp = objective(&xp);
                xp[k] = x[k] - 1e-6;
                let fm = objective(&xp);
                xp[k] = x[k];
                assert!((g[k] - (fp - fm) / 2e-6).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn constraint_value_examples() {
        let x = [1.0, 1.0, 1.0, 1.0 / 3.0];
        assert!((constraint_value(&x, Complex64::new(0.0, 0.0)) - 1.0 / 9.0).abs() < 1e-16);
        assert!(constraint_value(&[2.0, 0.7, 1.0 / 3.0], Complex64::new(1.0, 0.0)) < 0.0);
        let s = chebyshev_scheme(2);
        let mut x = s.factors().to_vec();
        x.push(1.0 / 3.0);
        let z = Complex64::new(crate::amplification::lambda_max(2), 0.0);
        assert!(constraint_value(&x, z).abs() < 1e-6);
    }

    #[test]
    fn jacobian_last_entry_and_real_axis() {
        let x = [1.7, 0.57, 0.31];
        let j = constraint_jacobian(&x, Complex64::new(0.2, 0.0)).unwrap();
        assert_eq!(j[2], 0.62);
        let fd = fd_jacobian(&x, Complex64::new(0.2, 0.0));
        for (a, b) in j.iter().zip(&fd) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn jacobian_matches_fd_on_random_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut worst: f64 = 0.0;
        for _ in 0..200 {
            let m = rng.gen_range(2..8);
            let mut x: Vec<f64> = (0..m).map(|_| rng.gen_range(0.4..10.0)).collect();
            x.push(rng.gen_range(0.1..1.0));
            let r = make_region(rng.gen_range(2..10), rng.gen_range(0.05..0.6)).unwrap();
            let z = r.boundary_samples(97)[rng.gen_range(0..97)];
            let j = constraint_jacobian(&x, z).unwrap();
            let fd = fd_jacobian(&x, z);
            // normwise: |G|^2 can reach 1e10 here, which swamps the FD of the g entry
            let scale = fd.iter().fold(0.0, |a: f64, v| a.max(v.abs()));
            let err = j.iter().zip(&fd).fold(0.0, |a: f64, (p, q)| a.max((p - q).abs())) / scale;
            worst = worst.max(err);
            assert_eq!(j[m], 2.0 * x[m]);
        }
        assert!(worst < 1e-5, "worst relative error {worst}");
    }

    #[test]
    fn degenerate_factor_is_signalled() {
        // w = 2 puts the root of (1 - w) + w z at z = 1/2
        let x = [2.0, 1.0, 0.5];
        assert!(matches!(
            constraint_jacobian(&x, Complex64::new(0.5, 0.0)),
            Err(Error::DegenerateFactor { index: 0 })
        ));
    }

    #[test]
    fn hessian_structure() {
        let x = [3.0, 0.8, 0.55, 0.4];
        let z = Complex64::new(-0.3, 0.25);
        let h = constraint_hessian(&x, z).unwrap();
        assert!((h[(3, 3)] - 2.0).abs() < 1e-6);
        for i in 0..3 {
            assert!(h[(i, 3)].abs() < 1e-6 && h[(3, i)].abs() < 1e-6);
        }
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(h[(i, j)], h[(j, i)]);
            }
        }
        // second differences of the value itself
        let e = 1e-4;
        for (i, j) in [(0usize, 0usize), (0, 1), (1, 2), (2, 2)] {
            let f = |di: f64, dj: f64| {
                let mut y = x.to_vec();
                y[i] += di;
                y[j] += dj;
                constraint_value(&y, z)
            };
            let second = (f(e, e) - f(e, -e) - f(-e, e) + f(-e, -e)) / (4.0 * e * e);
            assert!((h[(i, j)] - second).abs() < 1e-4 * second.abs().max(1.0), "({i},{j})");
        }
    }

    #[test]
    fn derive_real_axis_m2() {
        let r = derive_scheme(2, Ratio::ZERO).unwrap();
        assert!(r.converged, "{r:?}");
        let f = r.scheme.factors();
        assert!((f[0] - 1.70710678).abs() < 1e-6);
        assert!((f[1] - 0.56903559).abs() < 1e-6);
        assert!((r.g_bar - 1.0 / 3.0).abs() < 1e-8);
        assert!(r.max_constraint_violation <= 1e-8);
    }

    #[test]
    fn derive_rejects_bad_inputs() {
        assert!(derive_scheme(1, Ratio::ZERO).is_err());
        assert!(derive_scheme(3, Ratio::new(3, 2)).is_err());
    }

    #[test]
    fn sqp_recovers_from_poor_start() {
        // far from the vertex, so the trust-region iteration does the work
        let c = Ratio::new(1, 5);
        let p = OptimizationProblem::new(3, c, vec![1.0, 1.3, 0.8], 0.9).unwrap();
        let r = solve(&p).unwrap();
        assert!(r.converged, "{r:?}");
        assert!(r.iterations > 0);
        let want = crate::catalog::lookup_mc(3, c).unwrap().sorted_factors();
        for (g, w) in r.scheme.factors().iter().zip(&want) {
            assert!((g - w).abs() < 1e-4 * w, "{:?}", r.scheme.factors());
        }
    }

    #[test]
    fn conjugate_points_count_once() {
        let p = OptimizationProblem::new(4, Ratio::new(1, 3), chebyshev_scheme(4).factors().to_vec(), 0.4).unwrap();
        assert_eq!(p.test_points.len(), 8);
        let r = solve(&p).unwrap();
        assert!(r.converged);
        for &z in &p.test_points {
            assert!(r.scheme.amplification(z).norm() <= r.g_bar + 1e-9);
        }
    }
}
