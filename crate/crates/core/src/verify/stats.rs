//! Kolmogorov-Smirnov distances and small summary helpers.

/// `sup |F_n - F|` of a sample against a continuous CDF.
pub fn ks_one_sample(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter().enumerate().fold(0.0, |d, (i, &x)| {
        let f = cdf(x);
        let above = (i + 1) as f64 / n - f;
        let below = f - i as f64 / n;
        d.max(above).max(below)
    })
}

/// `sup |F_n - G_m|` between two empirical distributions. Tied values are
/// consumed together on both sides before the gap is measured.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (n, m) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < xs.len() && j < ys.len() {
        let v = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= v {
            i += 1;
        }
        while j < ys.len() && ys[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// Mean and unbiased standard deviation.
pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Typical two-sample KS distance between equal laws: the mean of the
/// Kolmogorov distribution, `sqrt(pi/2) ln 2`, scaled by `sqrt(1/n + 1/m)`.
pub fn ks_two_sample_noise(n: usize, m: usize) -> f64 {
    0.8687 * (1.0 / n as f64 + 1.0 / m as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_samples_have_zero_distance() {
        let a = [0.3, 0.1, 0.2, 0.2];
        assert_eq!(ks_two_sample(&a, &a), 0.0);
    }

    #[test]
    fn disjoint_samples_have_unit_distance() {
        assert_eq!(ks_two_sample(&[0.0, 1.0], &[2.0, 3.0, 4.0]), 1.0);
    }

    #[test]
    fn two_sample_hand_value() {
        // F_a jumps at 1, 3; F_b at 2, 4: largest gap 1/2.
        assert_eq!(ks_two_sample(&[1.0, 3.0], &[2.0, 4.0]), 0.5);
    }

    #[test]
    fn one_sample_uniform() {
        let d = ks_one_sample(&[0.25, 0.5, 0.75], |x| x);
        assert!((d - 0.25).abs() < 1e-15);
    }
}
