//! Reproducible reductions and resampling error estimates.

/// Pairwise (cascade) summation in fixed order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Pairwise sum of elementwise products.
pub fn pairwise_dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    const BLOCK: usize = 32;
    if a.len() <= BLOCK {
        return a.iter().zip(b).map(|(x, y)| x * y).sum();
    }
    let mid = a.len() / 2;
    pairwise_dot(&a[..mid], &b[..mid]) + pairwise_dot(&a[mid..], &b[mid..])
}

pub fn mean(values: &[f64]) -> f64 {
    pairwise_sum(values) / values.len() as f64
}

/// Jackknife block size `floor(sqrt(samples))`, at least 1.
pub fn jackknife_block_size(samples: usize) -> usize {
    ((samples as f64).sqrt().floor() as usize).max(1)
}

/// Per-block sums of several per-sample series, used for delete-one-block
/// jackknife estimates. Trailing samples that do not fill a block are
/// folded into the last block.
#[derive(Debug, Clone)]
pub struct BlockSums {
    /// `sums[b][series]`
    pub sums: Vec<Vec<f64>>,
    pub totals: Vec<f64>,
}

impl BlockSums {
    pub fn new(series: &[&[f64]], block_size: usize) -> Self {
        let n = series.first().map_or(0, |s| s.len());
        let blocks = (n / block_size.max(1)).max(1);
        let mut sums = vec![vec![0.0; series.len()]; blocks];
        for (j, s) in series.iter().enumerate() {
            debug_assert_eq!(s.len(), n);
            for b in 0..blocks {
                let start = b * block_size;
                let end = if b + 1 == blocks { n } else { start + block_size };
                sums[b][j] = pairwise_sum(&s[start..end]);
            }
        }
        let totals = (0..series.len())
            .map(|j| {
                let col: Vec<f64> = sums.iter().map(|row| row[j]).collect();
                pairwise_sum(&col)
            })
            .collect();
        BlockSums { sums, totals }
    }

    pub fn blocks(&self) -> usize {
        self.sums.len()
    }

    /// Totals with block `b` removed.
    pub fn leave_out(&self, b: usize) -> Vec<f64> {
        self.totals
            .iter()
            .zip(&self.sums[b])
            .map(|(t, s)| t - s)
            .collect()
    }

    /// Delete-one-block jackknife standard error of a statistic of the
    /// column totals.
    pub fn jackknife<F: Fn(&[f64]) -> f64>(&self, stat: F) -> f64 {
        let b = self.blocks();
        if b < 2 {
            return f64::NAN;
        }
        let reps: Vec<f64> = (0..b).map(|i| stat(&self.leave_out(i))).collect();
        jackknife_error(&reps)
    }
}

/// Standard error from delete-one jackknife replicates.
pub fn jackknife_error(replicates: &[f64]) -> f64 {
    let b = replicates.len() as f64;
    if replicates.len() < 2 {
        return f64::NAN;
    }
    let m = mean(replicates);
    let ss: Vec<f64> = replicates.iter().map(|r| (r - m) * (r - m)).collect();
    ((b - 1.0) / b * pairwise_sum(&ss)).sqrt()
}

/// Kish effective sample size of a set of non-negative weights.
pub fn effective_sample_size(weights: &[f64]) -> f64 {
    let s = pairwise_sum(weights);
    let sq: Vec<f64> = weights.iter().map(|w| w * w).collect();
    let s2 = pairwise_sum(&sq);
    if s2 == 0.0 {
        0.0
    } else {
        s * s / s2
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive_on_integers() {
        let v: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 499500.0);
        assert_eq!(pairwise_dot(&v, &vec![1.0; 1000]), 499500.0);
    }

    #[test]
    fn jackknife_of_mean_matches_standard_error() {
        // With block size 1 the jackknife SE of the mean is the usual s / sqrt(n).
        let v: Vec<f64> = (0..100).map(|i| ((i * 37) % 17) as f64).collect();
        let blocks = BlockSums::new(&[&v], 1);
        let n = v.len() as f64;
        let se = blocks.jackknife(|t| t[0] / (n - 1.0));
        let m = mean(&v);
        let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((se - (var / n).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn ess_bounds() {
        assert_eq!(effective_sample_size(&[1.0; 10]), 10.0);
        assert_eq!(effective_sample_size(&[1.0, 0.0, 0.0]), 1.0);
    }
}
