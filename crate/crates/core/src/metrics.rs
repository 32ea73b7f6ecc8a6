//! Spearman and Pearson correlation between predictions and labels.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Minimum number of pairs for a correlation to be reported.
pub const MIN_PAIRS: usize = 3;

/// Predictions paired index-wise with their ground-truth labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedSeries<T> {
    predictions: Vec<T>,
    labels: Vec<T>,
}

impl<T: Scalar> PairedSeries<T> {
    pub fn new(predictions: Vec<T>, labels: Vec<T>) -> Result<Self> {
        if predictions.len() != labels.len() {
            return Err(Error::LengthMismatch {
                predictions: predictions.len(),
                labels: labels.len(),
            });
        }
        if predictions.is_empty() {
            return Err(Error::TooShort { needed: MIN_PAIRS, got: 0 });
        }
        if !predictions.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("prediction"));
        }
        if !labels.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("label"));
        }
        Ok(Self { predictions, labels })
    }

    pub fn predictions(&self) -> &[T] {
        &self.predictions
    }

    pub fn labels(&self) -> &[T] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.predictions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predictions.is_empty()
    }

    fn check_usable(&self) -> Result<()> {
        if self.len() < MIN_PAIRS {
            return Err(Error::TooShort {
                needed: MIN_PAIRS,
                got: self.len(),
            });
        }
        if is_constant(&self.predictions) {
            return Err(Error::DegenerateVariance("prediction"));
        }
        if is_constant(&self.labels) {
            return Err(Error::DegenerateVariance("label"));
        }
        Ok(())
    }
}

fn is_constant<T: Scalar>(values: &[T]) -> bool {
    values.iter().all(|&v| v == values[0])
}

/// 1-based ranks; tied values share the mean of the ranks they span.
pub fn average_ranks<T: Scalar>(values: &[T]) -> Vec<T> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite values"));

    let mut ranks = vec![T::zero(); values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let rank = T::of_usize(start + 1 + end) / T::of(2.0);
        for &idx in &order[start..end] {
            ranks[idx] = rank;
        }
        start = end;
    }
    ranks
}

fn pearson<T: Scalar>(xs: &[T], ys: &[T]) -> T {
    let n = T::of_usize(xs.len());
    let mean_x = xs.iter().fold(T::zero(), |acc, &v| acc + v) / n;
    let mean_y = ys.iter().fold(T::zero(), |acc, &v| acc + v) / n;
    let (mut sxy, mut sxx, mut syy) = (T::zero(), T::zero(), T::zero());
    for (&x, &y) in xs.iter().zip(ys) {
        let dx = x - mean_x;
        let dy = y - mean_y;
        sxy = sxy + dx * dy;
        sxx = sxx + dx * dx;
        syy = syy + dy * dy;
    }
    let r = sxy / (sxx.sqrt() * syy.sqrt());
    r.max(-T::one()).min(T::one())
}

/// Spearman rank correlation coefficient.
pub fn srcc<T: Scalar>(series: &PairedSeries<T>) -> Result<T> {
    series.check_usable()?;
    let rp = average_ranks(&series.predictions);
    let rl = average_ranks(&series.labels);
    Ok(pearson(&rp, &rl))
}

/// Pearson linear correlation coefficient on the raw values.
pub fn plcc<T: Scalar>(series: &PairedSeries<T>) -> Result<T> {
    series.check_usable()?;
    Ok(pearson(&series.predictions, &series.labels))
}

/// `(SRCC + PLCC) / 2`.
pub fn composite<T: Scalar>(series: &PairedSeries<T>) -> Result<T> {
    Ok((srcc(series)? + plcc(series)?) / T::of(2.0))
}

/// All three figures at once.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlations<T> {
    pub srcc: T,
    pub plcc: T,
    pub composite: T,
}

pub fn correlations<T: Scalar>(series: &PairedSeries<T>) -> Result<Correlations<T>> {
    let srcc = srcc(series)?;
    let plcc = plcc(series)?;
    Ok(Correlations {
        srcc,
        plcc,
        composite: (srcc + plcc) / T::of(2.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(p: &[f64], l: &[f64]) -> PairedSeries<f64> {
        PairedSeries::new(p.to_vec(), l.to_vec()).unwrap()
    }

    #[test]
    fn perfect_and_reversed() {
        let s = series(&[1.0, 2.0, 3.0, 4.0], &[10.0, 20.0, 30.0, 40.0]);
        assert!((srcc(&s).unwrap() - 1.0).abs() < 1e-15);
        let s = series(&[4.0, 3.0, 2.0, 1.0], &[10.0, 20.0, 30.0, 40.0]);
        assert!((srcc(&s).unwrap() + 1.0).abs() < 1e-15);
        assert!((plcc(&s).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn hand_computed_srcc() {
        // d = (0, 1, -1): 1 - 6*2/(3*8) = 0.5
        let s = series(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]);
        assert!((srcc(&s).unwrap() - 0.5).abs() < 1e-15);
        // same data is also 0.5 under Pearson
        assert!((composite(&s).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn hand_computed_plcc() {
        // means 2.5, 4; sxy = 14, sxx = 5, syy = 50
        let s = series(&[1.0, 2.0, 3.0, 4.0], &[1.0, 2.0, 3.0, 10.0]);
        let expected = 14.0 / 250f64.sqrt();
        assert!((plcc(&s).unwrap() - expected).abs() < 1e-12);
        assert!((expected - 0.885_4).abs() < 1e-4);
    }

    #[test]
    fn affine_labels() {
        let p = [0.3, 1.7, -2.0, 5.5, 4.25];
        let l: Vec<f64> = p.iter().map(|x| 2.0 * x + 7.0).collect();
        let s = series(&p, &l);
        assert!((plcc(&s).unwrap() - 1.0).abs() < 1e-12);
        assert!((composite(&s).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ties_get_average_ranks() {
        assert_eq!(average_ranks(&[10.0, 20.0, 10.0, 30.0]), vec![1.5, 3.0, 1.5, 4.0]);
        assert_eq!(average_ranks(&[5.0, 5.0, 5.0]), vec![2.0, 2.0, 2.0]);
    }

    #[test]
    fn degenerate_inputs() {
        let s = series(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]);
        assert!(matches!(srcc(&s), Err(Error::DegenerateVariance("prediction"))));
        let s = series(&[1.0, 2.0], &[1.0, 2.0]);
        assert!(matches!(plcc(&s), Err(Error::TooShort { .. })));
        assert!(PairedSeries::new(vec![1.0], vec![1.0, 2.0]).is_err());
        assert!(PairedSeries::new(vec![1.0, f64::NAN, 2.0], vec![1.0, 2.0, 3.0]).is_err());
        assert!(PairedSeries::<f64>::new(vec![], vec![]).is_err());
    }
}
