use serde::{Deserialize, Serialize};

/// Standard-deviation floor below which a group is treated as degenerate.
pub const DEFAULT_EPS_STD: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GrpoError {
    #[error("group size must be at least 2, got {0}")]
    GroupTooSmall(usize),
    #[error("trajectory {index}: sequence lengths differ (new {new}, old {old}, ref {reference}, mask {mask})")]
    LengthMismatch {
        index: usize,
        new: usize,
        old: usize,
        reference: usize,
        mask: usize,
    },
    #[error("trajectory {0} has no topology tokens under its mask")]
    EmptyMask(usize),
    #[error("no trajectories supplied")]
    EmptyBatch,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Group-relative advantages `(R_i - mean) / std` with population std.
/// Groups whose std falls below `eps_std` get all-zero advantages.
pub fn grpo_advantages(returns: &[f64], eps_std: f64) -> Result<Vec<f64>, GrpoError> {
    if returns.len() < 2 {
        return Err(GrpoError::GroupTooSmall(returns.len()));
    }
    let n = returns.len() as f64;
    let mean = returns.iter().sum::<f64>() / n;
    let var = returns.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    if std < eps_std {
        return Ok(vec![0.0; returns.len()]);
    }
    Ok(returns.iter().map(|r| (r - mean) / std.max(eps_std)).collect())
}

/// Token log-probabilities of one trajectory's topology tokens under the
/// current, behaviour and reference policies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryLogProbs {
    pub logp_new: Vec<f64>,
    pub logp_old: Vec<f64>,
    pub logp_ref: Vec<f64>,
    /// `true` for topology tokens. Absent means every position counts.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<Vec<bool>>,
    pub advantage: f64,
}

impl TrajectoryLogProbs {
    fn masked(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let mask = self.mask.as_deref();
        (0..self.logp_new.len())
            .filter(move |&i| mask.is_none_or(|m| m[i]))
            .map(|i| (self.logp_new[i], self.logp_old[i], self.logp_ref[i]))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KlEstimator {
    /// Sample mean of `log(pi / pi_ref)`.
    #[default]
    LogRatio,
    /// Non-negative estimator `exp(ref - new) - (ref - new) - 1`.
    ExpRatio,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurrogateConfig {
    pub eps_clip: f64,
    pub beta: f64,
    #[serde(default)]
    pub kl: KlEstimator,
}

impl Default for SurrogateConfig {
    fn default() -> Self {
        Self {
            eps_clip: 0.2,
            beta: 0.0,
            kl: KlEstimator::LogRatio,
        }
    }
}

/// Clipped GRPO objective with a topology-token KL penalty.
///
/// The policy term averages over each trajectory's masked tokens, then over
/// the group. The KL term is pooled over every masked token of the batch.
pub fn grpo_surrogate(batch: &[TrajectoryLogProbs], config: &SurrogateConfig) -> Result<f64, GrpoError> {
    if batch.is_empty() {
        return Err(GrpoError::EmptyBatch);
    }
    if !(config.eps_clip > 0.0) {
        return Err(GrpoError::InvalidParameter(format!("eps_clip must be > 0, got {}", config.eps_clip)));
    }
    if !(config.beta >= 0.0) {
        return Err(GrpoError::InvalidParameter(format!("beta must be >= 0, got {}", config.beta)));
    }

    let (lo, hi) = (1.0 - config.eps_clip, 1.0 + config.eps_clip);
    let mut policy_sum = 0.0;
    let mut kl_sum = 0.0;
    let mut token_total = 0usize;

    for (index, traj) in batch.iter().enumerate() {
        let len = traj.logp_new.len();
        let mask_len = traj.mask.as_ref().map_or(len, Vec::len);
        if traj.logp_old.len() != len || traj.logp_ref.len() != len || mask_len != len {
            return Err(GrpoError::LengthMismatch {
                index,
                new: len,
                old: traj.logp_old.len(),
                reference: traj.logp_ref.len(),
                mask: mask_len,
            });
        }

        let a = traj.advantage;
        let mut traj_sum = 0.0;
        let mut tokens = 0usize;
        for (new, old, reference) in traj.masked() {
            let ratio = (new - old).exp();
            traj_sum += (ratio * a).min(ratio.clamp(lo, hi) * a);
            kl_sum += match config.kl {
                KlEstimator::LogRatio => new - reference,
                KlEstimator::ExpRatio => {
                    let d = reference - new;
                    d.exp() - d - 1.0
                }
            };
            tokens += 1;
        }
        if tokens == 0 {
            return Err(GrpoError::EmptyMask(index));
        }
        policy_sum += traj_sum / tokens as f64;
        token_total += tokens;
    }

    Ok(policy_sum / batch.len() as f64 - config.beta * kl_sum / token_total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn traj(new: &[f64], old: &[f64], reference: &[f64], advantage: f64) -> TrajectoryLogProbs {
        TrajectoryLogProbs {
            logp_new: new.to_vec(),
            logp_old: old.to_vec(),
            logp_ref: reference.to_vec(),
            mask: None,
            advantage,
        }
    }

    #[test]
    fn advantages_of_one_to_four() {
        let adv = grpo_advantages(&[1.0, 2.0, 3.0, 4.0], DEFAULT_EPS_STD).unwrap();
        let expected = [-1.341641, -0.447214, 0.447214, 1.341641];
        for (a, e) in adv.iter().zip(expected) {
            assert!((a - e).abs() < 5e-7, "{a} vs {e}");
        }
    }

    #[test]
    fn degenerate_and_pair_groups() {
        assert_eq!(grpo_advantages(&[5.0; 4], DEFAULT_EPS_STD).unwrap(), vec![0.0; 4]);
        assert_eq!(grpo_advantages(&[0.0, 1.0], DEFAULT_EPS_STD).unwrap(), vec![-1.0, 1.0]);
        assert_eq!(grpo_advantages(&[1.0], DEFAULT_EPS_STD), Err(GrpoError::GroupTooSmall(1)));
    }

    #[test]
    fn identical_policies_cancel() {
        let lp = [-0.3, -1.2, -0.7];
        let batch = [traj(&lp, &lp, &lp, 1.0), traj(&lp, &lp, &lp, -1.0)];
        let j = grpo_surrogate(&batch, &SurrogateConfig::default()).unwrap();
        assert!(j.abs() < 1e-12);
    }

    #[test]
    fn ratio_is_clipped() {
        let batch = [traj(&[std::f64::consts::LN_2], &[0.0], &[0.0], 1.0)];
        let j = grpo_surrogate(&batch, &SurrogateConfig::default()).unwrap();
        assert!((j - 1.2).abs() < 1e-12);
    }

    #[test]
    fn kl_term_only() {
        let batch = [traj(&[-1.0], &[-1.0], &[-1.1], 0.0)];
        let cfg = SurrogateConfig {
            beta: 1.0,
            ..SurrogateConfig::default()
        };
        let j = grpo_surrogate(&batch, &cfg).unwrap();
        assert!((j + 0.1).abs() < 1e-12);
    }

    #[test]
    fn masked_positions_contribute_nothing() {
        let mut t = traj(&[0.0, 5.0], &[0.0, 0.0], &[0.0, -9.0], 1.0);
        t.mask = Some(vec![true, false]);
        let cfg = SurrogateConfig {
            beta: 1.0,
            ..SurrogateConfig::default()
        };
        assert!((grpo_surrogate(&[t], &cfg).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exp_ratio_estimator_is_non_negative() {
        let batch = [traj(&[-1.0, -2.0], &[-1.0, -2.0], &[-0.5, -2.5], 0.0)];
        let cfg = SurrogateConfig {
            beta: 1.0,
            kl: KlEstimator::ExpRatio,
            ..SurrogateConfig::default()
        };
        assert!(grpo_surrogate(&batch, &cfg).unwrap() <= 0.0);
    }

    #[test]
    fn usage_errors() {
        let cfg = SurrogateConfig::default();
        assert_eq!(grpo_surrogate(&[], &cfg), Err(GrpoError::EmptyBatch));
        let bad = traj(&[0.0, 0.0], &[0.0], &[0.0, 0.0], 1.0);
        assert!(matches!(grpo_surrogate(&[bad], &cfg), Err(GrpoError::LengthMismatch { .. })));
        let mut empty = traj(&[0.0], &[0.0], &[0.0], 1.0);
        empty.mask = Some(vec![false]);
        assert_eq!(grpo_surrogate(&[empty], &cfg), Err(GrpoError::EmptyMask(0)));
    }
}
