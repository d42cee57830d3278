//! Chebyshev polynomials, the affine map that turns them into SRJ
//! amplification polynomials, and the [`Scheme`] type itself.
//!
//! A scheme with relaxation factors `w_1..w_M` multiplies every Jacobi
//! eigen-component `lambda` by
//!
//! ```text
//! G_M(lambda) = prod_i [(1 - w_i) + w_i * lambda]
//! ```
//!
//! per cycle. For the real-axis schemes `G_M(lambda) = T_M(f(lambda)) / 3`,
//! where `f` maps `[-1, lambda_max]` onto `[-1, 1]` and `T_M(f(1)) = 3`.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::ratio::Ratio;

/// Evaluate the Chebyshev polynomial of the first kind `T_m(x)`.
///
/// Inside `[-1, 1]` the three-term recurrence is used; outside, the
/// hyperbolic closed form, since the recurrence loses accuracy there.
pub fn cheb_eval(m: u32, x: f64) -> f64 {
    if x.abs() <= 1.0 {
        match m {
            0 => 1.0,
            1 => x,
            _ => {
                let (mut prev, mut cur) = (1.0, x);
                for _ in 1..m {
                    let next = 2.0 * x * cur - prev;
                    prev = cur;
                    cur = next;
                }
                cur
            }
        }
    } else {
        let v = (m as f64 * x.abs().acosh()).cosh();
        if x < 0.0 && m % 2 == 1 {
            -v
        } else {
            v
        }
    }
}

/// The abscissa `lambda* > 1` with `T_m(lambda*) = 3`.
pub fn lambda_star(m: u32) -> f64 {
    (3.0f64.acosh() / m as f64).cosh()
}

/// Largest real Jacobi eigenvalue for which the real-axis scheme of order `m`
/// keeps the amplification within 1/3.
pub fn lambda_max(m: u32) -> f64 {
    let s = lambda_star(m);
    (3.0 - s) / (1.0 + s)
}

/// Constants of the order-`M` affine Chebyshev transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChebyshevConstants {
    pub order: u32,
    pub lambda_star: f64,
    pub lambda_max: f64,
}

impl ChebyshevConstants {
    pub fn new(order: u32) -> Self {
        assert!(order >= 1, "Chebyshev order must be positive");
        let lambda_star = lambda_star(order);
        ChebyshevConstants {
            order,
            lambda_star,
            lambda_max: (3.0 - lambda_star) / (1.0 + lambda_star),
        }
    }

    /// Map a Jacobi eigenvalue onto the Chebyshev variable.
    pub fn to_chebyshev(&self, lambda: f64) -> f64 {
        ((self.lambda_star + 1.0) * lambda + (self.lambda_star - 1.0)) / 2.0
    }

    /// Inverse of [`to_chebyshev`](Self::to_chebyshev).
    pub fn from_chebyshev(&self, t: f64) -> f64 {
        2.0 * t / (1.0 + self.lambda_star) + (1.0 - self.lambda_star) / (1.0 + self.lambda_star)
    }

    /// `T_M(f(lambda)) / 3`, the real-axis amplification polynomial.
    pub fn amplification(&self, lambda: f64) -> f64 {
        cheb_eval(self.order, self.to_chebyshev(lambda)) / 3.0
    }
}

/// An SRJ scheme: an ordered cycle of relaxation factors plus provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Scheme {
    factors: Vec<f64>,
    c_ratio: Option<Ratio>,
    g_bar: Option<f64>,
}

impl Scheme {
    /// Build a scheme from factors in application order.
    pub fn new(factors: Vec<f64>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::Validation("a scheme needs at least one relaxation factor (M >= 1)".into()));
        }
        if let Some((i, w)) = factors.iter().enumerate().find(|(_, w)| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::Validation(format!(
                "relaxation factor {} is {w}; factors must be finite and strictly positive",
                i + 1
            )));
        }
        Ok(Scheme {
            factors,
            c_ratio: None,
            g_bar: None,
        })
    }

    /// Plain Jacobi expressed as an `m`-step cycle of unit factors.
    pub fn jacobi(m: usize) -> Self {
        Scheme::new(vec![1.0; m.max(1)]).expect("unit factors are valid")
    }

    pub fn with_c_ratio(mut self, c: Ratio) -> Self {
        self.c_ratio = Some(c);
        self
    }

    pub fn with_g_bar(mut self, g_bar: f64) -> Result<Self> {
        if !(g_bar.is_finite() && (0.0..1.0).contains(&g_bar)) {
            return Err(Error::Validation(format!("bounding value g_bar = {g_bar} must lie in [0, 1)")));
        }
        self.g_bar = Some(g_bar);
        Ok(self)
    }

    pub fn factors(&self) -> &[f64] {
        &self.factors
    }

    pub fn m(&self) -> usize {
        self.factors.len()
    }

    pub fn c_ratio(&self) -> Option<Ratio> {
        self.c_ratio
    }

    pub fn g_bar(&self) -> Option<f64> {
        self.g_bar
    }

    pub fn is_jacobi(&self) -> bool {
        self.factors.iter().all(|&w| w == 1.0)
    }

    /// `G_M(lambda)` as a sequential product over the stored factor order.
    ///
    /// Each factor `(1 - w) + w lambda` is evaluated as `1 + w (lambda - 1)`,
    /// which is exactly one at `lambda = 1`.
    pub fn amplification(&self, lambda: Complex64) -> Complex64 {
        let d = lambda - 1.0;
        self.factors
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, &w| acc * (1.0 + w * d))
    }

    pub fn amplification_real(&self, lambda: f64) -> f64 {
        let d = lambda - 1.0;
        self.factors.iter().fold(1.0, |acc, &w| acc * (1.0 + w * d))
    }

    /// `dG_M/dlambda` at `lambda = 1`: every other factor equals one there,
    /// so the product rule collapses to the plain sum of factors.
    pub fn slope_at_one(&self) -> f64 {
        self.factors.iter().sum()
    }

    /// Factors sorted descending; the canonical form for comparing schemes.
    pub fn sorted_factors(&self) -> Vec<f64> {
        let mut v = self.factors.clone();
        v.sort_by(|a, b| b.total_cmp(a));
        v
    }

    /// Short identifier used in reports, e.g. `M=5,c=1/3` or `jacobi(M=5)`.
    pub fn label(&self) -> String {
        if self.is_jacobi() {
            format!("jacobi(M={})", self.m())
        } else {
            match self.c_ratio {
                Some(c) => format!("M={},c={c}", self.m()),
                None => format!("custom(M={})", self.m()),
            }
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [", self.label())?;
        for (i, w) in self.factors.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{w:.8}")?;
        }
        write!(f, "]")
    }
}

/// The analytic real-axis scheme of order `m`.
///
/// Factor `i` places a root of `G_m` at the image of the Chebyshev root
/// `cos((2i-1)pi/(2m))`; a linear factor `(1-w) + w*lambda` vanishes at
/// `lambda = 1 - 1/w`, hence `w = 1/(1 - root)`.
pub fn chebyshev_scheme(m: u32) -> Scheme {
    let k = ChebyshevConstants::new(m);
    let factors = (1..=m)
        .map(|i| {
            let r = ((2 * i - 1) as f64 * PI / (2 * m) as f64).cos();
            1.0 / (1.0 - k.from_chebyshev(r))
        })
        .collect();
    Scheme::new(factors)
        .expect("Chebyshev roots map below lambda = 1")
        .with_c_ratio(Ratio::ZERO)
        .with_g_bar(1.0 / 3.0)
        .expect("1/3 is a valid bound")
}

/// `|G_M|` sampled on a rectangle of the complex plane.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeGrid {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// Row-major: `values[j * xs.len() + i]` is `|G(xs[i] + i*ys[j])|`.
    pub values: Vec<f64>,
}

impl AmplitudeGrid {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.xs.len() + i]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
        .collect()
}

/// Sample `|G_M|` on `resolution x resolution` points of
/// `[x_lo, x_hi] x [y_lo, y_hi]`.
pub fn amp_grid(scheme: &Scheme, x_range: (f64, f64), y_range: (f64, f64), resolution: usize) -> Result<AmplitudeGrid> {
    if resolution < 2 {
        return Err(Error::InvalidArgument(format!("grid resolution {resolution} must be at least 2")));
    }
    for (name, (lo, hi)) in [("x", x_range), ("y", y_range)] {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidArgument(format!("{name} range [{lo}, {hi}] is empty or inverted")));
        }
    }
    let xs = linspace(x_range.0, x_range.1, resolution);
    let ys = linspace(y_range.0, y_range.1, resolution);
    let values = ys
        .iter()
        .flat_map(|&y| xs.iter().map(move |&x| Complex64::new(x, y)))
        .map(|z| scheme.amplification(z).norm())
        .collect();
    Ok(AmplitudeGrid { xs, ys, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Explicit power-basis coefficients of T_m, built independently of the
    /// recurrence used in `cheb_eval`.
    fn cheb_power_basis(m: usize) -> Vec<f64> {
        let mut t0 = vec![1.0];
        let mut t1 = vec![0.0, 1.0];
        if m == 0 {
            return t0;
        }
        for _ in 1..m {
            let mut t2 = vec![0.0; t1.len() + 1];
            for (k, c) in t1.iter().enumerate() {
                t2[k + 1] += 2.0 * c;
            }
            for (k, c) in t0.iter().enumerate() {
                t2[k] -= c;
            }
            t0 = t1;
            t1 = t2;
        }
        t1
    }

    fn horner(coeffs: &[f64], x: f64) -> f64 {
        coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    #[test]
    fn cheb_eval_examples() {
        assert_eq!(cheb_eval(2, 0.0), -1.0);
        assert_abs_diff_eq!(cheb_eval(3, 0.5), -1.0, epsilon = 1e-15);
        assert_eq!(cheb_eval(5, 1.0), 1.0);
        assert_eq!(cheb_eval(0, 0.3), 1.0);
    }

    #[test]
    fn cheb_eval_matches_power_basis() {
        for m in 0..=12 {
            let c = cheb_power_basis(m);
            for &x in &[-1.7, -1.0, -0.93, -0.2, 0.0, 0.41, 0.99, 1.0, 1.05, 2.5] {
                let expect = horner(&c, x);
                let got = cheb_eval(m as u32, x);
                assert!(
                    (got - expect).abs() <= 1e-11 * expect.abs().max(1.0),
                    "T_{m}({x}) = {got}, expected {expect}"
                );
            }
        }
    }

    #[test]
    fn cheb_branches_agree_at_unit_endpoints() {
        for m in 0..=40u32 {
            for &x in &[-1.0f64, 1.0] {
                let recurrence = cheb_eval(m, x);
                let sign = if x < 0.0 && m % 2 == 1 { -1.0 } else { 1.0 };
                let closed = sign * (m as f64 * x.abs().acosh()).cosh();
                assert!((recurrence - closed).abs() <= 1e-12);
                // just outside the interval the closed form takes over
                let outside = cheb_eval(m, x * (1.0 + 1e-15));
                assert!((outside - recurrence).abs() <= 1e-12 * (m as f64).powi(2).max(1.0));
            }
        }
    }

    #[test]
    fn lambda_star_examples() {
        assert_abs_diff_eq!(lambda_star(1), 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(lambda_star(2), 2.0f64.sqrt(), epsilon = 1e-14);
        // the transform coefficient (lambda* + 1)/2 is tabulated as 1.0314 for M = 5
        assert_abs_diff_eq!((lambda_star(5) + 1.0) / 2.0, 1.0314, epsilon = 5e-5);
        for m in 1..=32 {
            assert!((cheb_eval(m, lambda_star(m)) - 3.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn lambda_max_examples() {
        assert_abs_diff_eq!(lambda_max(1), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(lambda_max(2), 0.6569, epsilon = 5e-5);
        assert_abs_diff_eq!(lambda_max(3), 0.8368, epsilon = 5e-5);
        assert_abs_diff_eq!(lambda_max(5), 0.9391, epsilon = 5e-5);
    }

    #[test]
    fn lambda_max_increases_with_order() {
        let v: Vec<f64> = (1..=40).map(lambda_max).collect();
        assert!(v.windows(2).all(|w| w[0] < w[1]));
        assert!(v.iter().all(|&l| (-1.0..1.0).contains(&l)));
    }

    #[test]
    fn constants_are_consistent() {
        for m in 1..=20 {
            let k = ChebyshevConstants::new(m);
            assert_eq!(k.lambda_max, (3.0 - k.lambda_star) / (1.0 + k.lambda_star));
            assert_abs_diff_eq!(k.from_chebyshev(1.0), k.lambda_max, epsilon = 1e-15);
            assert_abs_diff_eq!(k.from_chebyshev(-1.0), -1.0, epsilon = 1e-15);
            assert_abs_diff_eq!(k.to_chebyshev(k.from_chebyshev(0.3)), 0.3, epsilon = 1e-15);
            assert_abs_diff_eq!(k.amplification(1.0), 1.0, epsilon = 1e-12);
        }
    }

    fn assert_multiset(got: &Scheme, expected: &[f64], tol: f64) {
        let mut e = expected.to_vec();
        e.sort_by(|a, b| b.total_cmp(a));
        let g = got.sorted_factors();
        assert_eq!(g.len(), e.len());
        for (a, b) in g.iter().zip(&e) {
            assert!((a - b).abs() <= tol, "{g:?} vs {e:?}");
        }
    }

    #[test]
    fn chebyshev_scheme_matches_tabulated_factors() {
        assert_multiset(&chebyshev_scheme(1), &[0.66666667], 1e-8);
        assert_multiset(&chebyshev_scheme(2), &[1.70710678, 0.56903559], 1e-6);
        assert_multiset(
            &chebyshev_scheme(5),
            &[9.23070105, 0.51215173, 0.97045899, 0.62486988, 2.1713295],
            1e-5,
        );
        assert_multiset(
            &chebyshev_scheme(7),
            &[17.84007924, 0.50624677, 0.9845549, 1.69891732, 0.56014439, 4.06304526, 0.69311375],
            1e-5,
        );
    }

    #[test]
    fn chebyshev_scheme_is_transformed_chebyshev() {
        for m in 1..=20 {
            let k = ChebyshevConstants::new(m);
            let s = chebyshev_scheme(m);
            assert_eq!(s.m(), m as usize);
            for i in 0..1000 {
                let lambda = -1.0 + (k.lambda_max + 1.0) * i as f64 / 999.0;
                let g = s.amplification_real(lambda);
                assert!((g - k.amplification(lambda)).abs() <= 1e-10);
                assert!(g.abs() <= 1.0 / 3.0 + 1e-9);
            }
        }
    }

    #[test]
    fn amplification_examples() {
        let ones = Scheme::jacobi(4);
        for &z in &[Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(0.3, -0.7)] {
            let g = ones.amplification(z);
            let p = z.powu(4);
            assert!((g - p).norm() <= 1e-15);
        }
        assert_eq!(ones.amplification(Complex64::new(0.0, 0.0)), Complex64::new(0.0, 0.0));
        assert_eq!(ones.amplification(Complex64::new(1.0, 0.0)), Complex64::new(1.0, 0.0));

        let m1 = Scheme::new(vec![0.66666667]).unwrap();
        assert_abs_diff_eq!(m1.amplification(Complex64::new(-1.0, 0.0)).re, -1.0 / 3.0, epsilon = 1e-8);

        let s = chebyshev_scheme(5);
        assert_eq!(s.amplification(Complex64::new(1.0, 0.0)), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn slope_examples() {
        assert_eq!(Scheme::jacobi(7).slope_at_one(), 7.0);
        let m2 = Scheme::new(vec![1.70710678, 0.56903559]).unwrap();
        assert_abs_diff_eq!(m2.slope_at_one(), 2.276, epsilon = 5e-4);
        let m5 = Scheme::new(vec![9.23070078, 0.62486986, 0.51215172, 2.17132939, 0.97045898]).unwrap();
        assert_abs_diff_eq!(m5.slope_at_one(), 13.510, epsilon = 5e-4);
    }

    #[test]
    fn scheme_validation() {
        assert!(Scheme::new(vec![]).is_err());
        assert!(Scheme::new(vec![1.0, -0.5]).is_err());
        assert!(Scheme::new(vec![1.0, 0.0]).is_err());
        assert!(Scheme::new(vec![f64::NAN]).is_err());
        assert!(Scheme::jacobi(2).with_g_bar(1.0).is_err());
        assert!(Scheme::jacobi(2).with_g_bar(0.99).is_ok());
    }

    #[test]
    fn labels() {
        assert_eq!(Scheme::jacobi(5).label(), "jacobi(M=5)");
        assert_eq!(chebyshev_scheme(3).label(), "M=3,c=0");
        assert_eq!(Scheme::new(vec![2.0, 0.5]).unwrap().label(), "custom(M=2)");
    }

    #[test]
    fn grid_examples() {
        let ones = Scheme::jacobi(1);
        let g = amp_grid(&ones, (-1.0, 1.0), (-1.0, 1.0), 3).unwrap();
        assert_eq!(g.at(1, 1), 0.0);
        assert_abs_diff_eq!(g.at(0, 0), 2.0f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(g.at(2, 1), 1.0, epsilon = 1e-15);

        let m1 = Scheme::new(vec![2.0 / 3.0]).unwrap();
        let g = amp_grid(&m1, (-1.0, 1.0), (-1.0, 1.0), 5).unwrap();
        for (i, &x) in g.xs.iter().enumerate() {
            assert_abs_diff_eq!(g.at(i, 2), ((2.0 / 3.0) * x + 1.0 / 3.0).abs(), epsilon = 1e-15);
        }

        assert!(amp_grid(&m1, (1.0, -1.0), (-1.0, 1.0), 5).is_err());
        assert!(amp_grid(&m1, (0.0, 0.0), (-1.0, 1.0), 5).is_err());
        assert!(amp_grid(&m1, (-1.0, 1.0), (-1.0, 1.0), 1).is_err());
    }

    #[test]
    fn real_axis_scheme_exceeds_one_inside_unit_disc() {
        let s = chebyshev_scheme(5);
        let worst = (0..3600)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / 3600.0;
                s.amplification(Complex64::from_polar(1.0, t)).norm()
            })
            .fold(0.0, f64::max);
        assert!(worst > 1.0, "max on unit circle = {worst}");
        let g = amp_grid(&s, (-1.0, 1.0), (-1.0, 1.0), 201).unwrap();
        let inside_max = g
            .ys
            .iter()
            .enumerate()
            .flat_map(|(j, &y)| g.xs.iter().enumerate().map(move |(i, &x)| (i, j, x, y)))
            .filter(|&(_, _, x, y)| x * x + y * y <= 1.0)
            .map(|(i, j, _, _)| g.at(i, j))
            .fold(0.0, f64::max);
        assert!(inside_max > 1.0);
    }
}
