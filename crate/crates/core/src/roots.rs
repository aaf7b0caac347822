//! Polynomial roots from the eigenvalues of a balanced companion matrix,
//! polished by Newton iteration.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

type C64 = Complex64;

/// Horner evaluation of `p` and `p'`; `coeffs[i]` multiplies `z^i`.
pub fn horner(coeffs: &[C64], z: C64) -> (C64, C64) {
    let mut p = C64::new(0.0, 0.0);
    let mut dp = C64::new(0.0, 0.0);
    for c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// Parlett-Reinsch balancing with power-of-two scalings.
fn balance(m: &mut DMatrix<C64>) {
    let n = m.nrows();
    let radix = 2.0f64;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += m[(j, i)].l1_norm();
                    r += m[(i, j)].l1_norm();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / radix;
            while c < g {
                f *= radix;
                c *= radix * radix;
            }
            g = r * radix;
            while c > g {
                f /= radix;
                c /= radix * radix;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                for j in 0..n {
                    m[(i, j)] /= f;
                }
                for j in 0..n {
                    m[(j, i)] *= f;
                }
            }
        }
    }
}

/// All roots of `sum coeffs[i] z^i`; the leading coefficient must be nonzero.
pub fn poly_roots(coeffs: &[C64]) -> Result<Vec<C64>> {
    let deg = coeffs.len() - 1;
    let lead = coeffs[deg];
    if deg == 0 || lead.norm() == 0.0 {
        return Err(Error::RootPolishFailure("degenerate polynomial".into()));
    }
    let mut m = DMatrix::from_element(deg, deg, C64::new(0.0, 0.0));
    for i in 1..deg {
        m[(i, i - 1)] = C64::new(1.0, 0.0);
    }
    for i in 0..deg {
        m[(i, deg - 1)] = -coeffs[i] / lead;
    }
    balance(&mut m);
    let eig = nalgebra::linalg::Schur::new(m)
        .eigenvalues()
        .ok_or_else(|| Error::RootPolishFailure("schur form not triangular".into()))?;
    let scale: f64 = coeffs.iter().map(|c| c.norm()).sum();
    let mut roots: Vec<C64> = eig.iter().copied().collect();
    for z in roots.iter_mut() {
        for _ in 0..50 {
            let (p, dp) = horner(coeffs, *z);
            if dp.norm() == 0.0 {
                break;
            }
            let step = p / dp;
            *z -= step;
            if step.norm() <= 1e-16 * z.norm().max(1e-300) {
                break;
            }
        }
        let (p, _) = horner(coeffs, *z);
        let mag = z.norm().max(1.0).powi(deg as i32);
        if !(p.norm() <= 1e-9 * scale * mag) {
            return Err(Error::RootPolishFailure(format!("residual {:e} at {z}", p.norm())));
        }
    }
    roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(roots)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic() {
        // z^2 - 3z + 1
        let r = poly_roots(&[C64::new(1.0, 0.0), C64::new(-3.0, 0.0), C64::new(1.0, 0.0)]).unwrap();
        let s5 = 5f64.sqrt();
        assert!((r[0] - C64::new((3.0 - s5) / 2.0, 0.0)).norm() < 1e-15);
        assert!((r[1] - C64::new((3.0 + s5) / 2.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn wide_scale_roots() {
        let want = [C64::new(1e-3, 0.0), C64::new(0.0, 2.0), C64::new(-5.0, 1.0), C64::new(40.0, -3.0)];
        let mut c = vec![C64::new(1.0, 0.0)];
        for w in want {
            let mut next = vec![C64::new(0.0, 0.0); c.len() + 1];
            for (i, a) in c.iter().enumerate() {
                next[i + 1] += a;
                next[i] -= a * w;
            }
            c = next;
        }
        let r = poly_roots(&c).unwrap();
        for w in want {
            assert!(r.iter().any(|z| (z - w).norm() < 1e-10 * w.norm().max(1.0)));
        }
    }
}
