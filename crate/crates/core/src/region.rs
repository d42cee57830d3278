//! Elliptical optimization regions and the constraint test points placed on
//! their boundary.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::amplification::ChebyshevConstants;
use crate::error::{Error, Result};

/// Ellipse spanning `[-1, lambda_max(m)]` on the real axis with
/// semi-minor axis `c * a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipseRegion {
    pub m: u32,
    pub c_ratio: f64,
    /// Semi-major axis `a`.
    pub semi_major: f64,
    /// Semi-minor axis `b`.
    pub semi_minor: f64,
    /// Center abscissa `x_c`.
    pub center: f64,
    pub lambda_max: f64,
}

pub fn make_region(m: u32, c_ratio: f64) -> Result<EllipseRegion> {
    if m == 0 {
        return Err(Error::InvalidArgument("region order M must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&c_ratio) {
        return Err(Error::InvalidArgument(format!("ellipse ratio c = {c_ratio} outside [0, 1]")));
    }
    let lambda_max = ChebyshevConstants::new(m).lambda_max;
    let semi_major = (lambda_max + 1.0) / 2.0;
    Ok(EllipseRegion {
        m,
        c_ratio,
        semi_major,
        semi_minor: c_ratio * semi_major,
        center: (lambda_max - 1.0) / 2.0,
        lambda_max,
    })
}

impl EllipseRegion {
    pub fn is_degenerate(&self) -> bool {
        self.c_ratio == 0.0
    }

    /// `(x - x_c)^2/a^2 + y^2/b^2 - 1`; zero on the boundary.
    pub fn boundary_residual(&self, z: Complex64) -> f64 {
        let u = (z.re - self.center) / self.semi_major;
        let v = if self.semi_minor > 0.0 { z.im / self.semi_minor } else { 0.0 };
        u * u + v * v - 1.0
    }

    /// Upper-half boundary ordinate above abscissa `x`.
    pub fn boundary_height(&self, x: f64) -> f64 {
        let u = (x - self.center) / self.semi_major;
        self.semi_minor * (1.0 - u * u).max(0.0).sqrt()
    }

    /// `count` points evenly spaced in the parametric angle around the boundary.
    pub fn boundary_samples(&self, count: usize) -> Vec<Complex64> {
        (0..count)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / count as f64;
                Complex64::new(self.center + self.semi_major * t.cos(), self.semi_minor * t.sin())
            })
            .collect()
    }

    /// Constraint points: the real extrema for `c = 0`, the ellipse points otherwise.
    pub fn test_points(&self) -> Vec<Complex64> {
        if self.is_degenerate() {
            real_test_points(self.m).into_iter().map(|x| Complex64::new(x, 0.0)).collect()
        } else {
            ellipse_test_points(self).expect("non-degenerate region")
        }
    }
}

/// Images of the Chebyshev extrema `cos(i pi / m)`, `i = 0..=m`, under the
/// inverse affine map. Strictly decreasing from `lambda_max(m)` to `-1`.
pub fn real_test_points(m: u32) -> Vec<f64> {
    assert!(m >= 1, "test points need M >= 1");
    let k = ChebyshevConstants::new(m);
    let mut xs: Vec<f64> = (0..=m)
        .map(|i| k.from_chebyshev((i as f64 * PI / m as f64).cos()))
        .collect();
    xs[0] = k.lambda_max;
    xs[m as usize] = -1.0;
    xs
}

/// Lift the interior real test points onto both halves of the ellipse
/// boundary; the two endpoints stay on the real axis. Yields `2m` points
/// ordered `[lambda_max, x_1 + iy_1, x_1 - iy_1, ..., -1]`.
pub fn ellipse_test_points(region: &EllipseRegion) -> Result<Vec<Complex64>> {
    if region.is_degenerate() {
        return Err(Error::InvalidArgument(
            "ellipse test points need c > 0; use the real test points for c = 0".into(),
        ));
    }
    let xs = real_test_points(region.m);
    let m = region.m as usize;
    let mut pts = Vec::with_capacity(2 * m);
    pts.push(Complex64::new(xs[0], 0.0));
    for &x in &xs[1..m] {
        let y = region.boundary_height(x);
        pts.push(Complex64::new(x, y));
        pts.push(Complex64::new(x, -y));
    }
    pts.push(Complex64::new(xs[m], 0.0));
    Ok(pts)
}
