//! Dense Hermitian eigensolver: Householder reduction to a real symmetric
//! tridiagonal matrix followed by implicit-shift QL.

use num_complex::Complex64;

use crate::error::{Error, Result};

type C64 = Complex64;

const MAX_SWEEPS: usize = 60;

/// Eigenvalues ascending and the matching unit eigenvectors
/// (`vecs[n]` is the eigenvector of `vals[n]`).
pub struct Eigen {
    pub vals: Vec<f64>,
    pub vecs: Vec<Vec<C64>>,
}

/// `a` is row-major `n x n` and must be Hermitian; only its lower triangle
/// and diagonal are read.
pub fn hermitian_eigh(a: &[C64], n: usize) -> Result<Eigen> {
    assert_eq!(a.len(), n * n);
    if n == 0 {
        return Ok(Eigen { vals: vec![], vecs: vec![] });
    }
    let mut b = a.to_vec();
    for i in 0..n {
        b[i * n + i] = C64::new(b[i * n + i].re, 0.0);
        for j in 0..i {
            b[j * n + i] = b[i * n + j].conj();
        }
    }
    // q is column-major here: q[c * n + r]
    let mut q = vec![C64::new(0.0, 0.0); n * n];
    for i in 0..n {
        q[i * n + i] = C64::new(1.0, 0.0);
    }
    let mut v = vec![C64::new(0.0, 0.0); n];
    let mut p = vec![C64::new(0.0, 0.0); n];
    for k in 0..n.saturating_sub(2) {
        let m = n - k - 1;
        let tail: f64 = (k + 2..n).map(|r| b[r * n + k].norm_sqr()).sum();
        if tail == 0.0 {
            continue;
        }
        let x0 = b[(k + 1) * n + k];
        let sigma = (tail + x0.norm_sqr()).sqrt();
        let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { C64::new(1.0, 0.0) };
        let alpha = -phase * sigma;
        for i in 0..m {
            v[i] = b[(k + 1 + i) * n + k];
        }
        v[0] -= alpha;
        let vnorm2: f64 = v[..m].iter().map(|z| z.norm_sqr()).sum();
        let tau = 2.0 / vnorm2;
        // p = tau B v on the trailing block
        for i in 0..m {
            let row = &b[(k + 1 + i) * n + k + 1..(k + 1 + i) * n + n];
            let mut s = C64::new(0.0, 0.0);
            for j in 0..m {
                s += row[j] * v[j];
            }
            p[i] = s * tau;
        }
        let mut vp = C64::new(0.0, 0.0);
        for i in 0..m {
            vp += v[i].conj() * p[i];
        }
        let kk = 0.5 * tau * vp.re;
        for i in 0..m {
            p[i] -= v[i] * kk;
        }
        for i in 0..m {
            let (vi, pi) = (v[i], p[i]);
            let row = &mut b[(k + 1 + i) * n + k + 1..(k + 1 + i) * n + n];
            for j in 0..m {
                row[j] -= vi * p[j].conj() + pi * v[j].conj();
            }
        }
        b[(k + 1) * n + k] = alpha;
        b[k * n + k + 1] = alpha.conj();
        for r in k + 2..n {
            b[r * n + k] = C64::new(0.0, 0.0);
            b[k * n + r] = C64::new(0.0, 0.0);
        }
        // Q <- Q H on columns k+1..n
        for r in 0..n {
            let mut s = C64::new(0.0, 0.0);
            for j in 0..m {
                s += q[(k + 1 + j) * n + r] * v[j];
            }
            s *= tau;
            if s.norm() == 0.0 {
                continue;
            }
            for j in 0..m {
                q[(k + 1 + j) * n + r] -= s * v[j].conj();
            }
        }
    }
    let mut d: Vec<f64> = (0..n).map(|i| b[i * n + i].re).collect();
    let mut e = vec![0.0; n];
    let mut phi = C64::new(1.0, 0.0);
    for i in 0..n - 1 {
        let ei = b[(i + 1) * n + i];
        e[i] = ei.norm();
        let next = if e[i] > 0.0 { phi * ei / e[i] } else { phi };
        phi = next;
        for r in 0..n {
            q[(i + 1) * n + r] *= phi;
        }
    }
    // z is column-major as well
    let mut z = vec![0.0; n * n];
    for i in 0..n {
        z[i * n + i] = 1.0;
    }
    tql(&mut d, &mut e, &mut z, n)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].total_cmp(&d[j]).then(i.cmp(&j)));
    let vals = order.iter().map(|&i| d[i]).collect();
    let vecs = order
        .iter()
        .map(|&c| {
            let zc = &z[c * n..c * n + n];
            (0..n)
                .map(|r| {
                    let mut s = C64::new(0.0, 0.0);
                    for j in 0..n {
                        s += q[j * n + r] * zc[j];
                    }
                    s
                })
                .collect()
        })
        .collect();
    Ok(Eigen { vals, vecs })
}

fn tql(d: &mut [f64], e: &mut [f64], z: &mut [f64], n: usize) -> Result<()> {
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_SWEEPS {
                return Err(Error::ConvergenceFailure(MAX_SWEEPS));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                let (lo, hi) = z.split_at_mut((i + 1) * n);
                let zi = &mut lo[i * n..i * n + n];
                let zi1 = &mut hi[..n];
                for k in 0..n {
                    let f = zi1[k];
                    zi1[k] = s * zi[k] + c * f;
                    zi[k] = c * zi[k] - s * f;
                }
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn residual(a: &[C64], n: usize, eig: &Eigen) -> f64 {
        let mut worst: f64 = 0.0;
        for (lam, v) in eig.vals.iter().zip(&eig.vecs) {
            for r in 0..n {
                let mut s = C64::new(0.0, 0.0);
                for c in 0..n {
                    s += a[r * n + c] * v[c];
                }
                worst = worst.max((s - v[r] * lam).norm());
            }
        }
        worst
    }

    #[test]
    fn two_by_two() {
        // [[2, i], [-i, 2]] has eigenvalues 1 and 3
        let a = vec![C64::new(2.0, 0.0), C64::new(0.0, 1.0), C64::new(0.0, -1.0), C64::new(2.0, 0.0)];
        let e = hermitian_eigh(&a, 2).unwrap();
        assert!((e.vals[0] - 1.0).abs() < 1e-14 && (e.vals[1] - 3.0).abs() < 1e-14);
        assert!(residual(&a, 2, &e) < 1e-14);
    }

    #[test]
    fn matches_nalgebra_on_dense_matrix() {
        let n = 23;
        let mut a = vec![C64::new(0.0, 0.0); n * n];
        let mut seed = 7u64;
        let mut next = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        for i in 0..n {
            a[i * n + i] = C64::new(next(), 0.0);
            for j in 0..i {
                let z = C64::new(next(), next());
                a[i * n + j] = z;
                a[j * n + i] = z.conj();
            }
        }
        let e = hermitian_eigh(&a, n).unwrap();
        assert!(residual(&a, n, &e) < 1e-13);
        let m = nalgebra::DMatrix::from_fn(n, n, |r, c| a[r * n + c]);
        let mut reference: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
        reference.sort_by(f64::total_cmp);
        for (x, y) in e.vals.iter().zip(&reference) {
            assert!((x - y).abs() < 1e-12);
        }
        for i in 0..n {
            for j in 0..n {
                let g: C64 = (0..n).map(|k| e.vecs[i][k] * e.vecs[j][k].conj()).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((g - want).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn diagonal_input_is_exact() {
        let n = 16;
        let mut a = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            a[i * n + i] = C64::new((n - i) as f64, 0.0);
        }
        let e = hermitian_eigh(&a, n).unwrap();
        for (i, v) in e.vals.iter().enumerate() {
            assert_eq!(*v, (i + 1) as f64);
        }
    }
}
