//! Small dense least squares by Householder QR.

pub(crate) struct LeastSquares {
    pub coef: Vec<f64>,
    /// Sum of squared residuals.
    pub rss: f64,
    /// Standard errors of the coefficients (NaN when there are no spare degrees of freedom).
    pub stderr: Vec<f64>,
}

/// Solves `min ||X b - y||` where `rows[i]` is the i-th row of `X`.
/// Returns `None` when `X` is rank deficient or underdetermined.
pub(crate) fn least_squares(rows: &[Vec<f64>], y: &[f64]) -> Option<LeastSquares> {
    let n = rows.len();
    let m = rows.first()?.len();
    if n < m || y.len() != n {
        return None;
    }
    // Column scaling keeps the factorisation well conditioned when the
    // regressors differ by orders of magnitude.
    let mut scale = vec![0.0f64; m];
    for r in rows {
        for j in 0..m {
            scale[j] = scale[j].max(r[j].abs());
        }
    }
    if scale.iter().any(|&s| s == 0.0) {
        return None;
    }
    let mut a: Vec<Vec<f64>> = (0..m).map(|j| rows.iter().map(|r| r[j] / scale[j]).collect()).collect();
    let mut b = y.to_vec();
    let mut rdiag = vec![0.0; m];
    for j in 0..m {
        let norm = a[j][j..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return None;
        }
        let alpha = if a[j][j] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = a[j][j..].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 > 0.0 {
            for col in a.iter_mut().skip(j) {
                let d: f64 = v.iter().zip(&col[j..]).map(|(p, q)| p * q).sum::<f64>() * 2.0 / vnorm2;
                for (c, vi) in col[j..].iter_mut().zip(&v) {
                    *c -= d * vi;
                }
            }
            let d: f64 = v.iter().zip(&b[j..]).map(|(p, q)| p * q).sum::<f64>() * 2.0 / vnorm2;
            for (c, vi) in b[j..].iter_mut().zip(&v) {
                *c -= d * vi;
            }
        }
        rdiag[j] = a[j][j];
    }
    let max_diag = rdiag.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if rdiag.iter().any(|d| d.abs() <= 1e-13 * max_diag) {
        return None;
    }
    // Back substitution; the upper triangle R[i][j] lives in a[j][i].
    let mut coef = vec![0.0; m];
    for i in (0..m).rev() {
        let mut s = b[i];
        for j in i + 1..m {
            s -= a[j][i] * coef[j];
        }
        coef[i] = s / a[i][i];
    }
    let rss: f64 = b[m..].iter().map(|v| v * v).sum();
    // Diagonal of (R^T R)^{-1} via R^{-1}.
    let mut rinv = vec![vec![0.0; m]; m];
    for i in 0..m {
        rinv[i][i] = 1.0 / a[i][i];
        for j in (0..i).rev() {
            let mut s = 0.0;
            for l in j + 1..=i {
                s += a[l][j] * rinv[l][i];
            }
            rinv[j][i] = -s / a[j][j];
        }
    }
    let sigma2 = if n > m { rss / (n - m) as f64 } else { f64::NAN };
    let stderr = (0..m)
        .map(|i| (sigma2 * (i..m).map(|l| rinv[i][l] * rinv[i][l]).sum::<f64>()).sqrt() / scale[i])
        .collect();
    for (c, s) in coef.iter_mut().zip(&scale) {
        *c /= s;
    }
    Some(LeastSquares { coef, rss, stderr })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_quadratic() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64 * 0.3 + 1.0).collect();
        let rows: Vec<Vec<f64>> = xs.iter().map(|&x| vec![1.0, x, 1e3 * x * x]).collect();
        let y: Vec<f64> = xs.iter().map(|&x| 2.0 - 0.5 * x + 0.25 * x * x).collect();
        let fit = least_squares(&rows, &y).unwrap();
        assert!((fit.coef[0] - 2.0).abs() < 1e-10);
        assert!((fit.coef[1] + 0.5).abs() < 1e-10);
        assert!((fit.coef[2] - 0.25e-3).abs() < 1e-13);
        assert!(fit.rss < 1e-20);
    }

    #[test]
    fn slope_stderr_matches_textbook_formula() {
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0];
        let y = [0.1, 1.2, 1.9, 3.2, 3.9, 5.1];
        let rows: Vec<Vec<f64>> = xs.iter().map(|&x| vec![1.0, x]).collect();
        let fit = least_squares(&rows, &y).unwrap();
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        let want = (fit.rss / (n - 2.0) / sxx).sqrt();
        assert!((fit.stderr[1] - want).abs() < 1e-12);
        assert!(least_squares(&[vec![1.0, 2.0], vec![2.0, 4.0]], &[1.0, 2.0]).is_none());
    }
}
