//! Small summary statistics over per-seed results.

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance; zero for fewer than two values.
pub fn sample_variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Standard error of `mean(a) - mean(b)` for independent samples.
pub fn pooled_standard_error(a: &[f64], b: &[f64]) -> f64 {
    (sample_variance(a) / a.len() as f64 + sample_variance(b) / b.len() as f64).sqrt()
}
