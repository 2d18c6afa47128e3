//! The unbiased pass@k estimator.

use crate::BenchError;

/// Probability that `k` completions drawn without replacement from `n`, of
/// which `c` verify, include at least one that verifies.
///
/// Computed as `1 - prod_{i=n-c+1}^{n} (1 - k/i)`, which equals
/// `1 - C(n-c, k) / C(n, k)` without forming the binomials.
pub fn pass_at_k(n: usize, c: usize, k: usize) -> Result<f64, BenchError> {
    if c > n || k == 0 || k > n {
        return Err(BenchError::Domain(format!("pass@k needs 0 <= c <= n and 1 <= k <= n, got n={n} c={c} k={k}")));
    }
    if n - c < k {
        return Ok(1.0);
    }
    let prod: f64 = (n - c + 1..=n).map(|i| 1.0 - k as f64 / i as f64).product();
    Ok(1.0 - prod)
}
