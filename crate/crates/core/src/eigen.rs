//! Eigenvalues of a general real dense matrix.
//!
//! Classical pipeline: diagonal balancing, Householder reduction to upper
//! Hessenberg form, then Francis double-shift QR on the Hessenberg matrix
//! with deflation. Only eigenvalues are computed.

use num_complex::Complex64;

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};

/// Largest order accepted by the dense path.
pub const DENSE_EIGEN_CAP: usize = 4096;

const MAX_SWEEPS_PER_EIGENVALUE: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EigenOptions {
    /// Scale rows/columns by powers of two before the reduction.
    pub balance: bool,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions { balance: true }
    }
}

/// All eigenvalues of `a`, complex pairs emitted as `(re + i im, re - i im)`.
pub fn eigenvalues(a: &DenseMatrix) -> Result<Vec<Complex64>> {
    eigenvalues_with(a, EigenOptions::default())
}

pub fn eigenvalues_with(a: &DenseMatrix, opts: EigenOptions) -> Result<Vec<Complex64>> {
    let n = a.rows();
    if n != a.cols() {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: a.cols(),
        });
    }
    if n > DENSE_EIGEN_CAP {
        return Err(Error::SizeCap { n, cap: DENSE_EIGEN_CAP });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut h = a.clone();
    if opts.balance {
        balance(&mut h);
    }
    hessenberg(&mut h);
    hessenberg_qr(&h)
}

/// Power-of-two diagonal similarity that equalizes row and column norms.
fn balance(a: &mut DenseMatrix) {
    const RADIX: f64 = 2.0;
    let n = a.rows();
    let sqrdx = RADIX * RADIX;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].abs();
                    r += a[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= sqrdx;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= sqrdx;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                let g = 1.0 / f;
                for j in 0..n {
                    a[(i, j)] *= g;
                }
                for j in 0..n {
                    a[(j, i)] *= f;
                }
            }
        }
    }
}

/// In-place orthogonal similarity reduction to upper Hessenberg form.
fn hessenberg(h: &mut DenseMatrix) {
    let n = h.rows();
    if n < 3 {
        return;
    }
    let high = n - 1;
    let mut ort = vec![0.0; n];
    for m in 1..high {
        let scale: f64 = (m..=high).map(|i| h[(i, m - 1)].abs()).sum();
        if scale == 0.0 {
            continue;
        }
        let mut hh = 0.0;
        for i in (m..=high).rev() {
            ort[i] = h[(i, m - 1)] / scale;
            hh += ort[i] * ort[i];
        }
        let mut g = hh.sqrt();
        if ort[m] > 0.0 {
            g = -g;
        }
        hh -= ort[m] * g;
        ort[m] -= g;
        for j in m..n {
            let mut f = 0.0;
            for i in (m..=high).rev() {
                f += ort[i] * h[(i, j)];
            }
            f /= hh;
            for i in m..=high {
                h[(i, j)] -= f * ort[i];
            }
        }
        for i in 0..=high {
            let mut f = 0.0;
            for j in (m..=high).rev() {
                f += ort[j] * h[(i, j)];
            }
            f /= hh;
            for j in m..=high {
                h[(i, j)] -= f * ort[j];
            }
        }
        ort[m] *= scale;
        h[(m, m - 1)] = scale * g;
    }
    for j in 0..n {
        for i in j + 2..n {
            h[(i, j)] = 0.0;
        }
    }
}

fn sign(a: f64, b: f64) -> f64 {
    if b >= 0.0 {
        a.abs()
    } else {
        -a.abs()
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix.
fn hessenberg_qr(h: &DenseMatrix) -> Result<Vec<Complex64>> {
    let n = h.rows();
    // 1-based working copy keeps the index arithmetic of the classical
    // formulation readable.
    let stride = n + 1;
    let mut a = vec![0.0; stride * stride];
    let at = |i: usize, j: usize| i * stride + j;
    for i in 0..n {
        for j in 0..n {
            a[at(i + 1, j + 1)] = h[(i, j)];
        }
    }
    let mut wr = vec![0.0; n + 1];
    let mut wi = vec![0.0; n + 1];

    let mut anorm = 0.0;
    for i in 1..=n {
        for j in i.saturating_sub(1).max(1)..=n {
            anorm += a[at(i, j)].abs();
        }
    }

    let mut nn = n;
    let mut t = 0.0;
    while nn >= 1 {
        let mut its = 0;
        let mut l;
        loop {
            // look for a single small subdiagonal element
            l = nn;
            while l >= 2 {
                let mut s = a[at(l - 1, l - 1)].abs() + a[at(l, l)].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a[at(l, l - 1)].abs() + s == s {
                    a[at(l, l - 1)] = 0.0;
                    break;
                }
                l -= 1;
            }
            let mut x = a[at(nn, nn)];
            if l == nn {
                // one root found
                wr[nn] = x + t;
                wi[nn] = 0.0;
                nn -= 1;
            } else {
                let mut y = a[at(nn - 1, nn - 1)];
                let mut w = a[at(nn, nn - 1)] * a[at(nn - 1, nn)];
                if l == nn - 1 {
                    // two roots found
                    let p = 0.5 * (y - x);
                    let q = p * p + w;
                    let mut z = q.abs().sqrt();
                    x += t;
                    if q >= 0.0 {
                        z = p + sign(z, p);
                        wr[nn - 1] = x + z;
                        wr[nn] = x + z;
                        if z != 0.0 {
                            wr[nn] = x - w / z;
                        }
                        wi[nn - 1] = 0.0;
                        wi[nn] = 0.0;
                    } else {
                        wr[nn - 1] = x + p;
                        wr[nn] = x + p;
                        wi[nn - 1] = z;
                        wi[nn] = -z;
                    }
                    nn = nn.saturating_sub(2);
                } else {
                    if its == MAX_SWEEPS_PER_EIGENVALUE {
                        return Err(Error::EigenNoConvergence { index: nn - 1 });
                    }
                    if its > 0 && its % 10 == 0 {
                        // exceptional shift
                        t += x;
                        for i in 1..=nn {
                            a[at(i, i)] -= x;
                        }
                        let s = a[at(nn, nn - 1)].abs() + a[at(nn - 1, nn - 2)].abs();
                        x = 0.75 * s;
                        y = x;
                        w = -0.4375 * s * s;
                    }
                    its += 1;

                    // form shift and look for two consecutive small subdiagonals
                    let (mut p, mut q, mut r);
                    let mut m = nn - 2;
                    loop {
                        let z = a[at(m, m)];
                        let rr = x - z;
                        let ss = y - z;
                        p = (rr * ss - w) / a[at(m + 1, m)] + a[at(m, m + 1)];
                        q = a[at(m + 1, m + 1)] - z - rr - ss;
                        r = a[at(m + 2, m + 1)];
                        let s = p.abs() + q.abs() + r.abs();
                        p /= s;
                        q /= s;
                        r /= s;
                        if m == l {
                            break;
                        }
                        let u = a[at(m, m - 1)].abs() * (q.abs() + r.abs());
                        let v = p.abs() * (a[at(m - 1, m - 1)].abs() + z.abs() + a[at(m + 1, m + 1)].abs());
                        if u + v == v {
                            break;
                        }
                        m -= 1;
                    }
                    for i in m + 2..=nn {
                        a[at(i, i - 2)] = 0.0;
                        if i != m + 2 {
                            a[at(i, i - 3)] = 0.0;
                        }
                    }

                    // double QR step on rows l..nn and columns m..nn
                    let mut k = m;
                    while k < nn {
                        if k != m {
                            p = a[at(k, k - 1)];
                            q = a[at(k + 1, k - 1)];
                            r = if k != nn - 1 { a[at(k + 2, k - 1)] } else { 0.0 };
                            x = p.abs() + q.abs() + r.abs();
                            if x != 0.0 {
                                p /= x;
                                q /= x;
                                r /= x;
                            }
                        }
                        let s = sign((p * p + q * q + r * r).sqrt(), p);
                        if s != 0.0 {
                            if k == m {
                                if l != m {
                                    a[at(k, k - 1)] = -a[at(k, k - 1)];
                                }
                            } else {
                                a[at(k, k - 1)] = -s * x;
                            }
                            p += s;
                            x = p / s;
                            y = q / s;
                            let z = r / s;
                            q /= p;
                            r /= p;
                            for j in k..=nn {
                                let mut pp = a[at(k, j)] + q * a[at(k + 1, j)];
                                if k != nn - 1 {
                                    pp += r * a[at(k + 2, j)];
                                    a[at(k + 2, j)] -= pp * z;
                                }
                                a[at(k + 1, j)] -= pp * y;
                                a[at(k, j)] -= pp * x;
                            }
                            let mmin = if nn < k + 3 { nn } else { k + 3 };
                            for i in l..=mmin {
                                let mut pp = x * a[at(i, k)] + y * a[at(i, k + 1)];
                                if k != nn - 1 {
                                    pp += z * a[at(i, k + 2)];
                                    a[at(i, k + 2)] -= pp * r;
                                }
                                a[at(i, k + 1)] -= pp * q;
                                a[at(i, k)] -= pp;
                            }
                        }
                        k += 1;
                    }
                }
            }
            if nn == 0 || l + 1 >= nn {
                break;
            }
        }
    }

    Ok((1..=n).map(|i| Complex64::new(wr[i], wi[i])).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sorted(mut v: Vec<Complex64>) -> Vec<Complex64> {
        v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        v
    }

    /// det(A - z I) via complex Gaussian elimination with partial pivoting.
    fn char_poly_det(a: &DenseMatrix, z: Complex64) -> Complex64 {
        let n = a.rows();
        let mut m: Vec<Vec<Complex64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| Complex64::new(a[(i, j)], 0.0) - if i == j { z } else { Complex64::new(0.0, 0.0) })
                    .collect()
            })
            .collect();
        let mut det = Complex64::new(1.0, 0.0);
        for c in 0..n {
            let p = (c..n).max_by(|&i, &j| m[i][c].norm().total_cmp(&m[j][c].norm())).unwrap();
            if p != c {
                m.swap(p, c);
                det = -det;
            }
            let piv = m[c][c];
            det *= piv;
            if piv.norm() == 0.0 {
                return det;
            }
            for i in c + 1..n {
                let f = m[i][c] / piv;
                for j in c..n {
                    let v = m[c][j];
                    m[i][j] -= f * v;
                }
            }
        }
        det
    }

    #[test]
    fn two_by_two_closed_form() {
        let a = DenseMatrix::from_rows(&[vec![1.0, -2.0], vec![3.0, 0.5]]);
        let ev = sorted(eigenvalues(&a).unwrap());
        let tr = 1.5;
        let det = 0.5 + 6.0;
        let disc: f64 = tr * tr / 4.0 - det;
        assert!(disc < 0.0);
        let im = (-disc).sqrt();
        assert!((ev[0] - Complex64::new(tr / 2.0, -im)).norm() < 1e-14);
        assert!((ev[1] - Complex64::new(tr / 2.0, im)).norm() < 1e-14);
    }

    #[test]
    fn companion_matrix_roots() {
        // (x-1)(x-2)(x+3)(x^2+1) = x^5 - 6x^3 + 6x^2 - 7x + 6
        let c = [6.0, -7.0, 6.0, -6.0, 0.0];
        let n = 5;
        let mut a = DenseMatrix::zeros(n, n);
        for i in 1..n {
            a[(i, i - 1)] = 1.0;
        }
        for i in 0..n {
            a[(i, n - 1)] = -c[i];
        }
        let ev = sorted(eigenvalues(&a).unwrap());
        let expected = sorted(vec![
            Complex64::new(-3.0, 0.0),
            Complex64::new(0.0, -1.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(2.0, 0.0),
        ]);
        for (g, e) in ev.iter().zip(&expected) {
            assert!((g - e).norm() < 1e-10, "{ev:?}");
        }
    }

    #[test]
    fn random_matrices_satisfy_characteristic_polynomial() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [1usize, 2, 3, 6, 11, 20] {
            let mut a = DenseMatrix::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    a[(i, j)] = rng.gen_range(-1.0..1.0);
                }
            }
            let ev = eigenvalues(&a).unwrap();
            assert_eq!(ev.len(), n);
            let trace: f64 = (0..n).map(|i| a[(i, i)]).sum();
            let sum: Complex64 = ev.iter().sum();
            assert!((sum.re - trace).abs() < 1e-10 && sum.im.abs() < 1e-10);
            for z in &ev {
                // relative to the product of distances to the other roots
                let d = char_poly_det(&a, *z).norm();
                let scale: f64 = ev.iter().map(|w| (z - w).norm().max(1e-3)).product();
                assert!(d / scale.max(1e-300) < 1e-8, "n={n} z={z} det={d}");
            }
        }
    }

    #[test]
    fn conjugate_pairs_for_real_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 30;
        let mut a = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                a[(i, j)] = rng.gen_range(-1.0..1.0);
            }
        }
        let ev = eigenvalues(&a).unwrap();
        for z in &ev {
            if z.im != 0.0 {
                assert!(ev.iter().any(|w| (w - z.conj()).norm() < 1e-8));
            }
        }
    }

    #[test]
    fn balancing_recovers_spectrum_of_graded_matrix() {
        // diagonally similar to the symmetric matrix with unit off-diagonals
        let n = 8;
        let mut a = DenseMatrix::zeros(n, n);
        let mut sym = DenseMatrix::zeros(n, n);
        for i in 0..n {
            a[(i, i)] = (i + 1) as f64;
            sym[(i, i)] = (i + 1) as f64;
            if i + 1 < n {
                a[(i, i + 1)] = 1e6;
                a[(i + 1, i)] = 1e-6;
                sym[(i, i + 1)] = 1.0;
                sym[(i + 1, i)] = 1.0;
            }
        }
        let reference = sorted(eigenvalues_with(&sym, EigenOptions { balance: false }).unwrap());
        let bal = sorted(eigenvalues(&a).unwrap());
        for (r, b) in reference.iter().zip(&bal) {
            assert!((r - b).norm() < 1e-10, "{bal:?}");
        }
    }

    #[test]
    fn zero_and_diagonal_matrices() {
        let ev = eigenvalues(&DenseMatrix::zeros(4, 4)).unwrap();
        assert!(ev.iter().all(|z| z.norm() == 0.0));
        let mut d = DenseMatrix::zeros(3, 3);
        d[(0, 0)] = 3.0;
        d[(1, 1)] = -1.0;
        d[(2, 2)] = 0.5;
        let ev = sorted(eigenvalues(&d).unwrap());
        assert_eq!(ev.iter().map(|z| z.re).collect::<Vec<_>>(), vec![-1.0, 0.5, 3.0]);
    }

    #[test]
    fn jacobi_matrix_of_dirichlet_laplacian() {
        let n = 16;
        let mut b = DenseMatrix::zeros(n, n);
        for i in 0..n - 1 {
            b[(i, i + 1)] = 0.5;
            b[(i + 1, i)] = 0.5;
        }
        let ev = sorted(eigenvalues(&b).unwrap());
        let mut expected: Vec<f64> = (1..=n)
            .map(|k| (k as f64 * std::f64::consts::PI / (n + 1) as f64).cos())
            .collect();
        expected.sort_by(f64::total_cmp);
        for (z, e) in ev.iter().zip(&expected) {
            assert!((z.re - e).abs() < 1e-12 && z.im.abs() < 1e-12);
        }
    }

    #[test]
    fn larger_random_matrix_trace_and_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 300;
        let mut a = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                a[(i, j)] = rng.gen_range(-1.0..1.0);
            }
        }
        let ev = eigenvalues(&a).unwrap();
        let trace: f64 = (0..n).map(|i| a[(i, i)]).sum();
        let sum: Complex64 = ev.iter().sum();
        assert!((sum.re - trace).abs() < 1e-8 && sum.im.abs() < 1e-8);
        let sq_trace: f64 = (0..n).map(|i| (0..n).map(|k| a[(i, k)] * a[(k, i)]).sum::<f64>()).sum();
        let sq_sum: Complex64 = ev.iter().map(|z| z * z).sum();
        assert!((sq_sum.re - sq_trace).abs() < 1e-7 * n as f64);
    }

    #[test]
    fn size_cap_is_enforced() {
        let a = DenseMatrix::zeros(DENSE_EIGEN_CAP + 1, DENSE_EIGEN_CAP + 1);
        assert!(matches!(eigenvalues(&a), Err(Error::SizeCap { .. })));
    }
}
