//! Gauss rules from three-term recurrence coefficients.

use super::QuadratureError;

/// Monic Jacobi recurrence for the weight `s^(α−1)` on `[0, 1]`.
///
/// Returns the diagonal `a_k` and the off-diagonal `sqrt(b_k)` (k ≥ 1) of the
/// symmetric Jacobi matrix. The coefficients are the shifted versions of the
/// classical Jacobi ones with exponents `(0, α−1)` on `[-1, 1]`.
pub(crate) fn shifted_jacobi_recurrence(alpha: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let b = alpha - 1.0; // exponent of (1 + x) on [-1, 1]; the (1 − x) exponent is 0
    let mut diag = Vec::with_capacity(n);
    let mut off = Vec::with_capacity(n.saturating_sub(1));
    for k in 0..n {
        let kf = k as f64;
        let d = if k == 0 {
            // (1 + b/(b + 2)) / 2 without cancellation
            alpha / (alpha + 1.0)
        } else {
            let s = 2.0 * kf + b;
            0.5 * (1.0 + b * b / (s * (s + 2.0)))
        };
        diag.push(d);
        if k + 1 < n {
            let j = kf + 1.0;
            let s = 2.0 * j + b;
            let beta = 4.0 * j * j * (j + b) * (j + b) / (s * s * (s + 1.0) * (s - 1.0));
            off.push(0.5 * beta.sqrt());
        }
    }
    (diag, off)
}

/// Eigenvalues and squared first eigenvector components of a symmetric
/// tridiagonal matrix (implicit QL with Wilkinson shifts, tracking only the
/// first row of the eigenvector matrix).
///
/// Returns `(nodes, z2)` sorted by node, with `Σ z2 = 1`.
pub(crate) fn tridiagonal_eigen(diag: &[f64], off: &[f64]) -> Result<(Vec<f64>, Vec<f64>), QuadratureError> {
    let n = diag.len();
    let mut d = diag.to_vec();
    let mut e = vec![0.0; n];
    e[..n - 1].copy_from_slice(off);
    let mut z = vec![0.0; n];
    z[0] = 1.0;

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
            if iter > 60 {
                return Err(QuadratureError::EigenNoConvergence { size: n });
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
                let zf = z[i + 1];
                z[i + 1] = s * z[i] + c * zf;
                z[i] = c * z[i] - s * zf;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }

    let mut pairs: Vec<(f64, f64)> = d.into_iter().zip(z.into_iter().map(|v| v * v)).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let norm = super::neumaier_sum(pairs.iter().map(|p| p.1));
    Ok(pairs.into_iter().map(|(x, w)| (x, w / norm)).unzip())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigenvalues_of_a_known_matrix() {
        // tridiag(1, 2, 1) of size 5 has eigenvalues 2 + 2 cos(kπ/6)
        let (nodes, z2) = tridiagonal_eigen(&[2.0; 5], &[1.0; 4]).unwrap();
        let mut want: Vec<f64> = (1..=5)
            .map(|k| 2.0 + 2.0 * (k as f64 * std::f64::consts::PI / 6.0).cos())
            .collect();
        want.sort_by(f64::total_cmp);
        for (a, b) in nodes.iter().zip(&want) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!((z2.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn legendre_recurrence_on_unit_interval() {
        // α = 1: shifted Legendre, a_k = 1/2, b_k = k²/(4(4k²−1))
        let (d, o) = shifted_jacobi_recurrence(1.0, 6);
        for v in &d {
            assert!((v - 0.5).abs() < 1e-16);
        }
        for (k, v) in o.iter().enumerate() {
            let j = (k + 1) as f64;
            let want = (j * j / (4.0 * (4.0 * j * j - 1.0))).sqrt();
            assert!((v - want).abs() < 1e-16);
        }
    }
}
