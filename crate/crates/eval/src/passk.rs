use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("pass@k undefined for n={n}, c={c}, k={k} (need c <= n and 1 <= k <= n)")]
pub struct DomainError {
    pub n: usize,
    pub c: usize,
    pub k: usize,
}

/// Unbiased pass@k estimate from `n` samples of which `c` passed:
/// `1 - C(n-c, k) / C(n, k)`, evaluated as a running product so no
/// binomial coefficient is ever formed.
pub fn pass_at_k(n: usize, c: usize, k: usize) -> Result<f64, DomainError> {
    if c > n || k == 0 || k > n {
        return Err(DomainError { n, c, k });
    }
    if k == 1 {
        return Ok(c as f64 / n as f64);
    }
    if n - c < k {
        return Ok(1.0);
    }
    let fail = (0..k).fold(1.0, |acc, j| acc * (n - c - j) as f64 / (n - j) as f64);
    Ok(1.0 - fail)
}
