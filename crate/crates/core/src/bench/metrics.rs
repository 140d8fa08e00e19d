use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Kendall tau-a: `(concordant - discordant) / (L (L - 1) / 2)`. Pairs tied in
/// either vector count as neither.
pub fn kendall_tau<T: Scalar>(u: &[T], v: &[T]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            got: v.len(),
        });
    }
    let len = u.len();
    if len < 2 {
        return Err(Error::Underdetermined(len));
    }
    let mut score: i64 = 0;
    for i in 0..len {
        for j in (i + 1)..len {
            let a = crate::scalar::sign(u[i] - u[j]);
            let b = crate::scalar::sign(v[i] - v[j]);
            score += i64::from(a * b);
        }
    }
    let pairs = (len * (len - 1) / 2) as f64;
    Ok(score as f64 / pairs)
}

/// Mean and standard error of the mean; the error is 0 for fewer than two values.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Least-squares slope of `y` against `x`.
pub fn ls_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::Underdetermined(x.len()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("constant abscissa".into()));
    }
    Ok(sxy / sxx)
}

/// Average ranks (1-based), ties sharing the mean rank.
fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && v[idx[end]] == v[idx[start]] {
            end += 1;
        }
        let avg = (start + end + 1) as f64 / 2.0;
        for &i in &idx[start..end] {
            r[i] = avg;
        }
        start = end;
    }
    r
}

/// Spearman rank correlation (Pearson correlation of average ranks).
pub fn spearman(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            got: v.len(),
        });
    }
    if u.len() < 2 {
        return Err(Error::Underdetermined(u.len()));
    }
    let (ru, rv) = (ranks(u), ranks(v));
    let n = ru.len() as f64;
    let (mu, mv) = (ru.iter().sum::<f64>() / n, rv.iter().sum::<f64>() / n);
    let cov: f64 = ru.iter().zip(&rv).map(|(a, b)| (a - mu) * (b - mv)).sum();
    let su: f64 = ru.iter().map(|a| (a - mu) * (a - mu)).sum::<f64>().sqrt();
    let sv: f64 = rv.iter().map(|b| (b - mv) * (b - mv)).sum::<f64>().sqrt();
    if su == 0.0 || sv == 0.0 {
        return Err(Error::Domain("constant input".into()));
    }
    Ok(cov / (su * sv))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tau_examples() {
        assert_eq!(kendall_tau(&[1.0, 2.0, 3.0, 4.0], &[1.0, 2.0, 3.0, 4.0]).unwrap(), 1.0);
        assert_eq!(kendall_tau(&[1.0, 2.0, 3.0, 4.0], &[4.0, 3.0, 2.0, 1.0]).unwrap(), -1.0);
        assert!((kendall_tau(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!(kendall_tau(&[1.0], &[1.0]).is_err());
        assert!(kendall_tau(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn ties_count_zero() {
        // pairs: (0,1) tie in u; (0,2) concordant; (1,2) concordant
        assert!((kendall_tau(&[1.0, 1.0, 2.0], &[1.0, 2.0, 3.0]).unwrap() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn se_of_constant_is_zero() {
        assert_eq!(mean_and_se(&[2.0, 2.0, 2.0]), (2.0, 0.0));
        let (m, se) = mean_and_se(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((se - 1.0).abs() < 1e-15);
    }

    #[test]
    fn slope_and_spearman() {
        assert!((ls_slope(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]).unwrap() - 2.0).abs() < 1e-15);
        assert!((spearman(&[1.0, 2.0, 3.0], &[9.0, 5.0, 1.0]).unwrap() + 1.0).abs() < 1e-15);
    }
}
