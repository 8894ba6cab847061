//! Small summary statistics used by the Monte Carlo code.

/// Pairwise (cascade) summation; the result does not depend on how the
/// input was produced, only on its order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Mean and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub stderr: f64,
}

pub fn summarize(xs: &[f64]) -> Summary {
    let n = xs.len();
    if n == 0 {
        return Summary {
            n,
            mean: f64::NAN,
            stderr: f64::NAN,
        };
    }
    let mean = pairwise_sum(xs) / n as f64;
    if n == 1 {
        return Summary {
            n,
            mean,
            stderr: 0.0,
        };
    }
    let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&dev) / (n - 1) as f64;
    Summary {
        n,
        mean,
        stderr: (var / n as f64).sqrt(),
    }
}
