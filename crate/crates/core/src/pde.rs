//! Upwind finite-difference assembly of steady advection-diffusion problems
//! on the unit interval and unit square.
//!
//! Grid: `h = 1/n`, unknowns at `x_i = i h` for `i = 1..=n`. The node at
//! `x = 0` carries a homogeneous Dirichlet value and is eliminated; the node
//! at `x = 1` is the last unknown and carries a homogeneous Neumann condition
//! imposed through a reflected ghost node `u_{n+1} = u_n`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// Right-hand side presets. In two dimensions `Sine` is `sin(2 pi x) sin(2 pi y)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Forcing {
    #[default]
    Sine,
    Zero,
    Constant(f64),
}

impl Forcing {
    pub fn eval_1d(&self, x: f64) -> f64 {
        match *self {
            Forcing::Sine => (2.0 * PI * x).sin(),
            Forcing::Zero => 0.0,
            Forcing::Constant(v) => v,
        }
    }

    pub fn eval_2d(&self, x: f64, y: f64) -> f64 {
        match *self {
            Forcing::Sine => (2.0 * PI * x).sin() * (2.0 * PI * y).sin(),
            Forcing::Zero => 0.0,
            Forcing::Constant(v) => v,
        }
    }
}

impl fmt::Display for Forcing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Forcing::Sine => f.write_str("sin2pi"),
            Forcing::Zero => f.write_str("zero"),
            Forcing::Constant(v) => write!(f, "const:{v}"),
        }
    }
}

impl FromStr for Forcing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sin2pi" | "sin2pix" | "sine" => Ok(Forcing::Sine),
            "zero" => Ok(Forcing::Zero),
            _ => match s.strip_prefix("const:") {
                Some(v) => v
                    .parse()
                    .map(Forcing::Constant)
                    .map_err(|_| Error::InvalidArgument(format!("bad constant forcing {s:?}"))),
                None => Err(Error::InvalidArgument(format!(
                    "unknown forcing {s:?}; expected sin2pi, zero or const:<value>"
                ))),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdvectionDiffusion1D {
    pub n: usize,
    pub nu: f64,
    pub a: f64,
    pub forcing: Forcing,
}

impl AdvectionDiffusion1D {
    pub fn new(n: usize, nu: f64, a: f64) -> Self {
        AdvectionDiffusion1D {
            n,
            nu,
            a,
            forcing: Forcing::Sine,
        }
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdvectionDiffusion2D {
    pub nx: usize,
    pub ny: usize,
    pub nu: f64,
    pub ax: f64,
    pub ay: f64,
    pub forcing: Forcing,
}

impl AdvectionDiffusion2D {
    pub fn new(nx: usize, ny: usize, nu: f64, ax: f64, ay: f64) -> Self {
        AdvectionDiffusion2D {
            nx,
            ny,
            nu,
            ax,
            ay,
            forcing: Forcing::Sine,
        }
    }

    /// Unknown index of grid node `(i, j)`, both 0-based, x fastest.
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }
}

/// Upwind three-point weights `(lower, center, upper)` along one axis.
fn stencil(nu: f64, a: f64, h: f64) -> (f64, f64, f64) {
    let d = nu / (h * h);
    let c = a.abs() / h;
    if a >= 0.0 {
        (-d - c, 2.0 * d + c, -d)
    } else {
        (-d, 2.0 * d + c, -d - c)
    }
}

fn check_params(sizes: &[usize], nu: f64, coeffs: &[f64]) -> Result<()> {
    if sizes.iter().any(|&n| n < 3) {
        return Err(Error::InvalidArgument(format!("grid needs at least 3 unknowns per axis, got {sizes:?}")));
    }
    if !(nu > 0.0) || !nu.is_finite() {
        return Err(Error::InvalidArgument(format!("viscosity must be positive, got {nu}")));
    }
    if coeffs.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidArgument("advection coefficients must be finite".into()));
    }
    Ok(())
}

pub fn build_1d(spec: &AdvectionDiffusion1D) -> Result<(CsrMatrix, Vec<f64>)> {
    check_params(&[spec.n], spec.nu, &[spec.a])?;
    let n = spec.n;
    let h = spec.h();
    let (lo, mid, hi) = stencil(spec.nu, spec.a, h);
    let mut t = Vec::with_capacity(3 * n);
    for k in 0..n {
        let mut diag = mid;
        if k > 0 {
            t.push((k, k - 1, lo));
        }
        if k + 1 < n {
            t.push((k, k + 1, hi));
        } else {
            // ghost node u_{n+1} = u_n
            diag += hi;
        }
        t.push((k, k, diag));
    }
    let a = CsrMatrix::from_triplets(n, n, &t)?;
    let rhs = (1..=n).map(|i| spec.forcing.eval_1d(i as f64 * h)).collect();
    Ok((a, rhs))
}

pub fn build_2d(spec: &AdvectionDiffusion2D) -> Result<(CsrMatrix, Vec<f64>)> {
    check_params(&[spec.nx, spec.ny], spec.nu, &[spec.ax, spec.ay])?;
    let (nx, ny) = (spec.nx, spec.ny);
    let hx = 1.0 / nx as f64;
    let hy = 1.0 / ny as f64;
    let (west, cx, east) = stencil(spec.nu, spec.ax, hx);
    let (south, cy, north) = stencil(spec.nu, spec.ay, hy);
    let n = nx * ny;
    let mut t = Vec::with_capacity(5 * n);
    let mut rhs = Vec::with_capacity(n);
    for j in 0..ny {
        for i in 0..nx {
            let row = spec.index(i, j);
            let mut diag = cx + cy;
            if j > 0 {
                t.push((row, spec.index(i, j - 1), south));
            }
            if i > 0 {
                t.push((row, row - 1, west));
            }
            if i + 1 < nx {
                t.push((row, row + 1, east));
            } else {
                diag += east;
            }
            if j + 1 < ny {
                t.push((row, spec.index(i, j + 1), north));
            } else {
                diag += north;
            }
            t.push((row, row, diag));
            rhs.push(spec.forcing.eval_2d((i + 1) as f64 * hx, (j + 1) as f64 * hy));
        }
    }
    Ok((CsrMatrix::from_triplets(n, n, &t)?, rhs))
}
