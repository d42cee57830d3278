//! Jacobi iteration-matrix spectra and predicted SRJ spectral radii.
//!
//! The spectral radius of one SRJ cycle is `max |G(lambda)|` over the
//! eigenvalues `lambda` of `B_J = I - D^{-1} A`, because the cycle operator is
//! the amplification polynomial evaluated at `B_J`.

use std::cmp::Ordering;

use num_complex::Complex64;

use crate::amplification::Scheme;
use crate::eigen::{eigenvalues, DENSE_EIGEN_CAP};
use crate::error::{Error, Result};
use crate::sparse::{jacobi_iteration_dense, CsrMatrix};

/// Eigenvalues of the Jacobi iteration matrix of `a`, computed densely.
pub fn jacobi_eigenvalues(a: &CsrMatrix) -> Result<Vec<Complex64>> {
    if a.n_rows() > DENSE_EIGEN_CAP {
        return Err(Error::SizeCap {
            n: a.n_rows(),
            cap: DENSE_EIGEN_CAP,
        });
    }
    let b = jacobi_iteration_dense(a)?;
    eigenvalues(&b)
}

pub fn spectral_radius(eigs: &[Complex64]) -> f64 {
    eigs.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `max |G(lambda)|` over `eigs`.
pub fn srj_spectral_radius(scheme: &Scheme, eigs: &[Complex64]) -> f64 {
    eigs.iter().map(|&z| scheme.amplification(z).norm()).fold(0.0, f64::max)
}

/// Radius per relaxed-Jacobi iteration, `rho^(1/M)`, for comparing schemes of
/// different length.
pub fn per_iteration_radius(scheme: &Scheme, eigs: &[Complex64]) -> f64 {
    srj_spectral_radius(scheme, eigs).powf(1.0 / scheme.m() as f64)
}

fn tie_break(a: &Scheme, b: &Scheme) -> Ordering {
    a.m().cmp(&b.m()).then_with(|| match (a.c_ratio(), b.c_ratio()) {
        (Some(x), Some(y)) => x.cmp(&y),
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (None, None) => Ordering::Equal,
    })
}

/// Candidates sorted by ascending predicted cycle radius; ties go to the
/// shorter scheme, then the smaller ellipse ratio.
pub fn rank_schemes<'a>(eigs: &[Complex64], candidates: &'a [Scheme]) -> Vec<(&'a Scheme, f64)> {
    let mut ranked: Vec<(&Scheme, f64)> = candidates.iter().map(|s| (s, srj_spectral_radius(s, eigs))).collect();
    ranked.sort_by(|x, y| x.1.total_cmp(&y.1).then_with(|| tie_break(x.0, y.0)));
    ranked
}

#[derive(Debug, Clone)]
pub struct SpectrumReport {
    pub eigenvalues: Vec<Complex64>,
    /// `(scheme label, cycle radius)` in the order the schemes were given.
    pub per_scheme_radius: Vec<(String, f64)>,
    pub jacobi_radius: f64,
}

impl SpectrumReport {
    pub fn new(eigs: Vec<Complex64>, schemes: &[Scheme]) -> Self {
        let per_scheme_radius = schemes
            .iter()
            .map(|s| (s.label(), srj_spectral_radius(s, &eigs)))
            .collect();
        SpectrumReport {
            jacobi_radius: spectral_radius(&eigs),
            eigenvalues: eigs,
            per_scheme_radius,
        }
    }

    pub fn from_matrix(a: &CsrMatrix, schemes: &[Scheme]) -> Result<Self> {
        Ok(Self::new(jacobi_eigenvalues(a)?, schemes))
    }

    pub fn radius_of(&self, label: &str) -> Option<f64> {
        self.per_scheme_radius.iter().find(|(l, _)| l == label).map(|&(_, r)| r)
    }

    pub fn max_imag(&self) -> f64 {
        self.eigenvalues.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }
}
