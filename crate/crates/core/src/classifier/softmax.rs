use crate::error::{Error, Result};

/// `p_i = exp(z_i) / sum_j exp(z_j)`, evaluated after subtracting `max z`.
pub fn softmax(logits: &[f64]) -> Result<Vec<f64>> {
    if logits.iter().any(|z| !z.is_finite()) {
        return Err(Error::NonFinite("logits"));
    }
    Ok(softmax_unchecked(logits))
}

pub(crate) fn softmax_unchecked(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// `z_i - logsumexp(z)`, shifted by the max logit.
pub fn log_softmax(logits: &[f64]) -> Result<Vec<f64>> {
    if logits.iter().any(|z| !z.is_finite()) {
        return Err(Error::NonFinite("logits"));
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
    Ok(logits.iter().map(|z| z - lse).collect())
}

/// Binary log-odds `ln(p / (1 - p))`.
///
/// This is the inverse of the logistic sigmoid and not of the 10-way
/// softmax; nothing in the pipeline uses it.
pub fn logit_of_probability(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::DomainError(p));
    }
    Ok((p / (1.0 - p)).ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn uniform_logits() {
        for c in [0.0, -3.5, 700.0, 1e5] {
            let p = softmax(&[c; 10]).unwrap();
            for v in p {
                assert_abs_diff_eq!(v, 0.1, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn dominant_logit() {
        let mut z = [0.0; 10];
        z[0] = 20.0;
        let p = softmax(&z).unwrap();
        // Closed form: 1 / (1 + 9 e^-20).
        let expected = 1.0 / (1.0 + 9.0 * (-20.0f64).exp());
        assert_abs_diff_eq!(p[0], expected, epsilon = 1e-15);
        assert!(p[0] >= 0.9999);
        assert_abs_diff_eq!(p.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn rejects_non_finite() {
        assert!(matches!(softmax(&[0.0, f64::NAN]), Err(Error::NonFinite(_))));
        assert!(matches!(log_softmax(&[f64::INFINITY]), Err(Error::NonFinite(_))));
    }

    #[test]
    fn log_odds() {
        assert_eq!(logit_of_probability(0.5).unwrap(), 0.0);
        let e = std::f64::consts::E;
        assert_abs_diff_eq!(logit_of_probability(e / (1.0 + e)).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(logit_of_probability(0.9).unwrap(), 9f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(logit_of_probability(0.9).unwrap(), 2.19722, epsilon = 1e-5);
        for bad in [0.0, 1.0, -0.1, 1.2, f64::NAN] {
            assert!(matches!(logit_of_probability(bad), Err(Error::DomainError(_))));
        }
    }

    proptest! {
        #[test]
        fn simplex_shift_and_argmax(
            z in proptest::collection::vec(-50.0f64..50.0, 10),
            shift in -100.0f64..100.0,
        ) {
            let p = softmax(&z).unwrap();
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            prop_assert!(p.iter().all(|v| *v >= 0.0));
            let shifted: Vec<f64> = z.iter().map(|v| v + shift).collect();
            let q = softmax(&shifted).unwrap();
            for (a, b) in p.iter().zip(&q) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
            prop_assert_eq!(crate::data::argmax(&p), crate::data::argmax(&z));
            let lp = log_softmax(&z).unwrap();
            for (l, v) in lp.iter().zip(&p) {
                prop_assert!((l.exp() - v).abs() <= 1e-12);
            }
        }
    }
}
