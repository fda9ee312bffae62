use alloc::vec;
use alloc::vec::Vec;

/// Forward pass over `log_emit` (`frames x states`, row-major). Returns
/// `ln P(obs)`; negative infinity when the observation is impossible and
/// 0 for an empty sequence.
pub fn forward_log_likelihood(pi: &[f64], trans: &[Vec<f64>], log_emit: &[f64]) -> f64 {
    let k = pi.len();
    let frames = log_emit.len() / k;
    let mut alpha = vec![0.0; k];
    let mut next = vec![0.0; k];
    let mut emit = vec![0.0; k];
    let mut ll = 0.0;
    for t in 0..frames {
        let shift = scaled_emissions(&log_emit[t * k..(t + 1) * k], &mut emit);
        if shift == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        if t == 0 {
            for j in 0..k {
                next[j] = pi[j] * emit[j];
            }
        } else {
            for j in 0..k {
                let mut s = 0.0;
                for i in 0..k {
                    s += alpha[i] * trans[i][j];
                }
                next[j] = s * emit[j];
            }
        }
        let c: f64 = next.iter().sum();
        if c <= 0.0 {
            return f64::NEG_INFINITY;
        }
        for j in 0..k {
            alpha[j] = next[j] / c;
        }
        ll += libm::log(c) + shift;
    }
    ll
}

/// Exponentiates one frame of log emissions relative to its maximum and
/// returns that maximum.
#[inline]
fn scaled_emissions(log_emit: &[f64], out: &mut [f64]) -> f64 {
    let m = log_emit.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    for (o, &l) in out.iter_mut().zip(log_emit) {
        *o = libm::exp(l - m);
    }
    m
}

/// State and transition posteriors of one sequence.
#[derive(Debug, Clone)]
pub struct Posteriors {
    pub log_likelihood: f64,
    /// `frames x states`, row-major.
    pub gamma: Vec<f64>,
    /// Expected transition counts summed over time, `states x states`.
    pub xi_sum: Vec<f64>,
}

impl Posteriors {
    /// Scaled forward-backward. `None` when the sequence has zero
    /// probability under the model.
    pub fn compute(pi: &[f64], trans: &[Vec<f64>], log_emit: &[f64]) -> Option<Posteriors> {
        let k = pi.len();
        let frames = log_emit.len() / k;
        if frames == 0 {
            return Some(Posteriors { log_likelihood: 0.0, gamma: Vec::new(), xi_sum: vec![0.0; k * k] });
        }
        let mut emit = vec![0.0; frames * k];
        let mut alpha = vec![0.0; frames * k];
        let mut scale = vec![0.0; frames];
        let mut ll = 0.0;
        for t in 0..frames {
            let shift = scaled_emissions(&log_emit[t * k..(t + 1) * k], &mut emit[t * k..(t + 1) * k]);
            if shift == f64::NEG_INFINITY {
                return None;
            }
            for j in 0..k {
                let prior = if t == 0 {
                    pi[j]
                } else {
                    (0..k).map(|i| alpha[(t - 1) * k + i] * trans[i][j]).sum()
                };
                alpha[t * k + j] = prior * emit[t * k + j];
            }
            let c: f64 = alpha[t * k..(t + 1) * k].iter().sum();
            if c <= 0.0 {
                return None;
            }
            alpha[t * k..(t + 1) * k].iter_mut().for_each(|a| *a /= c);
            scale[t] = c;
            ll += libm::log(c) + shift;
        }

        let mut beta = vec![0.0; frames * k];
        beta[(frames - 1) * k..].iter_mut().for_each(|b| *b = 1.0);
        let mut xi_sum = vec![0.0; k * k];
        for t in (0..frames - 1).rev() {
            let c = scale[t + 1];
            for i in 0..k {
                let mut s = 0.0;
                for j in 0..k {
                    let w = trans[i][j] * emit[(t + 1) * k + j] * beta[(t + 1) * k + j];
                    s += w;
                    xi_sum[i * k + j] += alpha[t * k + i] * w / c;
                }
                beta[t * k + i] = s / c;
            }
        }
        let mut gamma = vec![0.0; frames * k];
        for t in 0..frames {
            let row = &mut gamma[t * k..(t + 1) * k];
            for j in 0..k {
                row[j] = alpha[t * k + j] * beta[t * k + j];
            }
            let s: f64 = row.iter().sum();
            row.iter_mut().for_each(|g| *g /= s);
        }
        Some(Posteriors { log_likelihood: ll, gamma, xi_sum })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Sum over every state path of the joint probability.
    fn brute(pi: &[f64], trans: &[Vec<f64>], emit: &[Vec<f64>]) -> f64 {
        let k = pi.len();
        let frames = emit.len();
        let mut total = 0.0;
        for code in 0..k.pow(frames as u32) {
            let mut c = code;
            let mut path = Vec::new();
            for _ in 0..frames {
                path.push(c % k);
                c /= k;
            }
            let mut p = pi[path[0]] * emit[0][path[0]];
            for t in 1..frames {
                p *= trans[path[t - 1]][path[t]] * emit[t][path[t]];
            }
            total += p;
        }
        total
    }

    #[test]
    fn matches_path_sum_and_gamma_rows_normalized() {
        let pi = [0.6, 0.4];
        let trans = vec![vec![0.7, 0.3], vec![0.2, 0.8]];
        let emit = vec![vec![0.5, 0.1], vec![0.4, 0.3], vec![0.1, 0.6]];
        let log_emit: Vec<f64> = emit.iter().flatten().map(|p: &f64| p.ln()).collect();
        let expected = brute(&pi, &trans, &emit).ln();
        assert!((forward_log_likelihood(&pi, &trans, &log_emit) - expected).abs() < 1e-12);
        let post = Posteriors::compute(&pi, &trans, &log_emit).unwrap();
        assert!((post.log_likelihood - expected).abs() < 1e-12);
        for row in post.gamma.chunks(2) {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        // Expected transitions total frames - 1.
        assert!((post.xi_sum.iter().sum::<f64>() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn impossible_and_empty() {
        let pi = [1.0, 0.0];
        let trans = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let log_emit = [f64::NEG_INFINITY, 0.0];
        assert_eq!(forward_log_likelihood(&pi, &trans, &log_emit), f64::NEG_INFINITY);
        assert!(Posteriors::compute(&pi, &trans, &log_emit).is_none());
        assert_eq!(forward_log_likelihood(&pi, &trans, &[]), 0.0);
    }

    #[test]
    fn tiny_likelihoods_survive() {
        let pi = [0.5, 0.5];
        let trans = vec![vec![0.5, 0.5], vec![0.5, 0.5]];
        let log_emit = vec![-800.0; 2 * 10];
        let ll = forward_log_likelihood(&pi, &trans, &log_emit);
        assert!((ll + 8000.0).abs() < 1e-9);
    }
}
