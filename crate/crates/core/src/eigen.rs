//! Eigenvalues of small dense real matrices.
//!
//! Balancing, Householder reduction to upper Hessenberg form, then the
//! Francis double-shift QR iteration (EISPACK `balanc`/`orthes`/`hqr`).
//! Only eigenvalues are computed.
#![allow(clippy::needless_range_loop)]

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

const RADIX: f64 = 2.0;
const MAX_SWEEPS_PER_EIGENVALUE: usize = 60;

/// Eigenvalues as `(re, im)` pairs, complex ones in conjugate pairs.
pub fn eigenvalues(a: &DMatrix<f64>) -> Result<Vec<(f64, f64)>> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: a.ncols(),
        });
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(
            "matrix has non-finite entries".into(),
        ));
    }
    let mut h: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| a[(i, j)]).collect())
        .collect();
    balance(&mut h);
    hessenberg(&mut h);
    hqr(h)
}

fn balance(a: &mut [Vec<f64>]) {
    let n = a.len();
    let sq = RADIX * RADIX;
    loop {
        let mut done = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[j][i].abs();
                    r += a[i][j].abs();
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
                c *= sq;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= sq;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                let g = 1.0 / f;
                for j in 0..n {
                    a[i][j] *= g;
                }
                for row in a.iter_mut() {
                    row[i] *= f;
                }
            }
        }
        if done {
            break;
        }
    }
}

fn hessenberg(h: &mut [Vec<f64>]) {
    let n = h.len();
    if n < 3 {
        return;
    }
    let high = n - 1;
    let mut ort = vec![0.0; n];
    for m in 1..high {
        let scale: f64 = (m..=high).map(|i| h[i][m - 1].abs()).sum();
        if scale == 0.0 {
            continue;
        }
        let mut hh = 0.0;
        for i in (m..=high).rev() {
            ort[i] = h[i][m - 1] / scale;
            hh += ort[i] * ort[i];
        }
        let mut g = libm::sqrt(hh);
        if ort[m] > 0.0 {
            g = -g;
        }
        hh -= ort[m] * g;
        ort[m] -= g;

        for j in m..n {
            let f = (m..=high).rev().map(|i| ort[i] * h[i][j]).sum::<f64>() / hh;
            for i in m..=high {
                h[i][j] -= f * ort[i];
            }
        }
        for row in h.iter_mut().take(high + 1) {
            let f = (m..=high).rev().map(|j| ort[j] * row[j]).sum::<f64>() / hh;
            for j in m..=high {
                row[j] -= f * ort[j];
            }
        }
        ort[m] *= scale;
        h[m][m - 1] = scale * g;
    }
}

#[allow(clippy::many_single_char_names)]
fn hqr(mut h: Vec<Vec<f64>>) -> Result<Vec<(f64, f64)>> {
    let nn = h.len();
    let mut d = vec![0.0; nn];
    let mut e = vec![0.0; nn];
    if nn == 0 {
        return Ok(Vec::new());
    }
    let eps = f64::EPSILON;
    let mut norm = 0.0;
    for (i, row) in h.iter().enumerate() {
        for v in row.iter().skip(i.saturating_sub(1)) {
            norm += v.abs();
        }
    }
    if norm == 0.0 {
        return Ok(vec![(0.0, 0.0); nn]);
    }

    let mut n = nn as isize - 1;
    let low: isize = 0;
    let mut exshift = 0.0;
    let (mut p, mut q, mut r) = (0.0f64, 0.0f64, 0.0f64);
    let (mut s, mut z): (f64, f64);
    let (mut x, mut y, mut w);
    let mut iter = 0usize;
    let mut total = 0usize;
    let budget = MAX_SWEEPS_PER_EIGENVALUE * nn;

    macro_rules! at {
        ($i:expr, $j:expr) => {
            h[$i as usize][$j as usize]
        };
    }

    while n >= low {
        // find a negligible subdiagonal element
        let mut l = n;
        while l > low {
            s = at!(l - 1, l - 1).abs() + at!(l, l).abs();
            if s == 0.0 {
                s = norm;
            }
            if at!(l, l - 1).abs() < eps * s {
                break;
            }
            l -= 1;
        }

        if l == n {
            // one root
            at!(n, n) += exshift;
            d[n as usize] = at!(n, n);
            e[n as usize] = 0.0;
            n -= 1;
            iter = 0;
        } else if l == n - 1 {
            // two roots
            w = at!(n, n - 1) * at!(n - 1, n);
            p = (at!(n - 1, n - 1) - at!(n, n)) / 2.0;
            q = p * p + w;
            z = libm::sqrt(q.abs());
            at!(n, n) += exshift;
            at!(n - 1, n - 1) += exshift;
            x = at!(n, n);
            let (i, j) = ((n - 1) as usize, n as usize);
            if q >= 0.0 {
                z = if p >= 0.0 { p + z } else { p - z };
                d[i] = x + z;
                d[j] = d[i];
                if z != 0.0 {
                    d[j] = x - w / z;
                }
                e[i] = 0.0;
                e[j] = 0.0;
            } else {
                d[i] = x + p;
                d[j] = x + p;
                e[i] = z;
                e[j] = -z;
            }
            n -= 2;
            iter = 0;
        } else {
            x = at!(n, n);
            y = 0.0;
            w = 0.0;
            if l < n {
                y = at!(n - 1, n - 1);
                w = at!(n, n - 1) * at!(n - 1, n);
            }
            // exceptional shifts
            if iter == 10 {
                exshift += x;
                for i in low..=n {
                    at!(i, i) -= x;
                }
                s = at!(n, n - 1).abs() + at!(n - 1, n - 2).abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            if iter == 30 {
                s = (y - x) / 2.0;
                s = s * s + w;
                if s > 0.0 {
                    s = libm::sqrt(s);
                    if y < x {
                        s = -s;
                    }
                    s = x - w / ((y - x) / 2.0 + s);
                    for i in low..=n {
                        at!(i, i) -= s;
                    }
                    exshift += s;
                    x = 0.964;
                    y = x;
                    w = x;
                }
            }
            iter += 1;
            total += 1;
            if total > budget {
                return Err(Error::EigenSolverFailed);
            }

            // two consecutive small subdiagonal elements
            let mut m = n - 2;
            while m >= l {
                z = at!(m, m);
                r = x - z;
                s = y - z;
                p = (r * s - w) / at!(m + 1, m) + at!(m, m + 1);
                q = at!(m + 1, m + 1) - z - r - s;
                r = at!(m + 2, m + 1);
                s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                if at!(m, m - 1).abs() * (q.abs() + r.abs())
                    < eps
                        * (p.abs() * (at!(m - 1, m - 1).abs() + z.abs() + at!(m + 1, m + 1).abs()))
                {
                    break;
                }
                m -= 1;
            }
            for i in (m + 2)..=n {
                at!(i, i - 2) = 0.0;
                if i > m + 2 {
                    at!(i, i - 3) = 0.0;
                }
            }

            // double QR step on rows l..=n and columns m..=n
            let mut k = m;
            while k < n {
                let notlast = k != n - 1;
                if k != m {
                    p = at!(k, k - 1);
                    q = at!(k + 1, k - 1);
                    r = if notlast { at!(k + 2, k - 1) } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x == 0.0 {
                        k += 1;
                        continue;
                    }
                    p /= x;
                    q /= x;
                    r /= x;
                }
                s = libm::sqrt(p * p + q * q + r * r);
                if p < 0.0 {
                    s = -s;
                }
                if s != 0.0 {
                    if k != m {
                        at!(k, k - 1) = -s * x;
                    } else if l != m {
                        at!(k, k - 1) = -at!(k, k - 1);
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    z = r / s;
                    q /= p;
                    r /= p;

                    for j in k..nn as isize {
                        p = at!(k, j) + q * at!(k + 1, j);
                        if notlast {
                            p += r * at!(k + 2, j);
                            at!(k + 2, j) -= p * z;
                        }
                        at!(k, j) -= p * x;
                        at!(k + 1, j) -= p * y;
                    }
                    for i in 0..=n.min(k + 3) {
                        p = x * at!(i, k) + y * at!(i, k + 1);
                        if notlast {
                            p += z * at!(i, k + 2);
                            at!(i, k + 2) -= p * r;
                        }
                        at!(i, k) -= p;
                        at!(i, k + 1) -= p * q;
                    }
                }
                k += 1;
            }
        }
    }
    Ok(d.into_iter().zip(e).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sorted(mut v: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
        v.sort_by(|a, b| {
            a.0.partial_cmp(&b.0)
                .unwrap()
                .then(a.1.partial_cmp(&b.1).unwrap())
        });
        v
    }

    #[test]
    fn zero_and_tiny_matrices() {
        assert!(eigenvalues(&DMatrix::zeros(0, 0)).unwrap().is_empty());
        assert_eq!(
            eigenvalues(&DMatrix::zeros(4, 4)).unwrap(),
            vec![(0.0, 0.0); 4]
        );
        assert_eq!(
            eigenvalues(&DMatrix::from_element(1, 1, -3.5)).unwrap(),
            vec![(-3.5, 0.0)]
        );
    }

    #[test]
    fn triangular_matrix() {
        let a = DMatrix::from_row_slice(
            4,
            4,
            &[
                1.0, 5.0, -2.0, 7.0, 0.0, 3.0, 4.0, 1.0, 0.0, 0.0, -2.0, 9.0, 0.0, 0.0, 0.0, 0.5,
            ],
        );
        let ev = sorted(eigenvalues(&a).unwrap());
        let expected = [-2.0, 0.5, 1.0, 3.0];
        for ((re, im), want) in ev.iter().zip(expected) {
            assert!((re - want).abs() < 1e-13 && im.abs() < 1e-13, "{re} {im}");
        }
    }

    #[test]
    fn companion_matrix_with_complex_roots() {
        // x^3 - x^2 + x - 1 = (x - 1)(x^2 + 1)
        let a = DMatrix::from_row_slice(3, 3, &[1.0, -1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let ev = sorted(eigenvalues(&a).unwrap());
        let expected = [(0.0, -1.0), (0.0, 1.0), (1.0, 0.0)];
        for (got, want) in ev.iter().zip(expected) {
            assert!(
                (got.0 - want.0).abs() < 1e-12 && (got.1 - want.1).abs() < 1e-12,
                "{got:?}"
            );
        }
    }

    #[test]
    fn permutation_cycle_has_roots_of_unity() {
        let n = 5;
        let a = DMatrix::from_fn(n, n, |i, j| if j == (i + 1) % n { 1.0 } else { 0.0 });
        for (re, im) in eigenvalues(&a).unwrap() {
            assert!((libm::hypot(re, im) - 1.0).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn trace_and_determinant(n in 1usize..12, seed in proptest::collection::vec(-3.0f64..3.0, 144)) {
            let a = DMatrix::from_fn(n, n, |i, j| seed[i * 12 + j]);
            let ev = eigenvalues(&a).unwrap();
            let trace: f64 = ev.iter().map(|z| z.0).sum();
            prop_assert!((trace - a.trace()).abs() < 1e-9 * (1.0 + a.norm()));
            let imag: f64 = ev.iter().map(|z| z.1).sum();
            prop_assert!(imag.abs() < 1e-9 * (1.0 + a.norm()));
            // product of eigenvalues
            let (mut pr, mut pi) = (1.0, 0.0);
            for (re, im) in &ev {
                let t = pr * re - pi * im;
                pi = pr * im + pi * re;
                pr = t;
            }
            let det = a.clone().lu().determinant();
            let scale = a.norm().powi(n as i32) + 1.0;
            prop_assert!((pr - det).abs() < 1e-9 * scale, "{} vs {}", pr, det);
        }
    }
}
