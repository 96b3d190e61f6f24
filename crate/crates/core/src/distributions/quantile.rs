use crate::error::{Error, Result};

/// Sample quantile with linear interpolation between closest ranks
/// (Hyndman–Fan type 7). Non-finite values are ignored.
pub fn empirical_quantile(values: &[f64], tau: f64) -> Result<f64> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::Domain(format!("quantile level {tau} not in (0,1)")));
    }
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return Err(Error::Data("empirical quantile of an empty sample".into()));
    }
    v.sort_by(f64::total_cmp);
    Ok(sorted_quantile(&v, tau))
}

/// Type-7 quantile of an already sorted, finite, nonempty slice.
pub(crate) fn sorted_quantile(sorted: &[f64], tau: f64) -> f64 {
    let n = sorted.len();
    let h = (n - 1) as f64 * tau;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn small_samples() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(empirical_quantile(&v, 0.5).unwrap(), 3.0);
        assert!((empirical_quantile(&v, 0.9).unwrap() - 4.6).abs() < 1e-12);
        assert!((empirical_quantile(&[5.0, 1.0, 4.0, 2.0, 3.0], 0.9).unwrap() - 4.6).abs() < 1e-12);
        assert_eq!(empirical_quantile(&[2.5], 0.3).unwrap(), 2.5);
    }

    #[test]
    fn errors() {
        assert!(matches!(empirical_quantile(&[], 0.5), Err(Error::Data(_))));
        assert!(matches!(empirical_quantile(&[1.0], 1.0), Err(Error::Domain(_))));
        assert!(matches!(empirical_quantile(&[f64::NAN], 0.5), Err(Error::Data(_))));
    }

    #[test]
    fn uniform_law_of_large_numbers() {
        let mut rng = crate::rng::stream(11, &[]);
        let v: Vec<f64> = (0..1_000_000).map(|_| rng.random::<f64>()).collect();
        let q = empirical_quantile(&v, 0.8).unwrap();
        assert!((q - 0.8).abs() < 0.002, "{q}");
    }
}
