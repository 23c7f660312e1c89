//! Real block-fading Gaussian multiple-access channel.
//!
//! Databases are indexed from 0. Databases know the sign of their own fading
//! coefficient and pre-multiply by it, so each contributes with gain `|h_k|`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::partition::PartitionResult;

/// Relative slack allowed by [`power_check`].
pub const POWER_SLACK: f64 = 1e-6;

/// Tolerance for recomputed effective gains.
const GAIN_TOL: f64 = 1e-12;

/// I.i.d. `N(0, 1)` fading coefficients for `n_dbs` databases.
pub fn draw_fading<R: Rng + ?Sized>(n_dbs: usize, rng: &mut R) -> Result<Vec<f64>> {
    if n_dbs < 2 {
        return invalid(format!("need at least two databases, got {n_dbs}"));
    }
    Ok((0..n_dbs).map(|_| rng.sample(StandardNormal)).collect())
}

/// Unit-variance white Gaussian noise block.
pub fn draw_noise<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<f64> {
    (0..len).map(|_| rng.sample(StandardNormal)).collect()
}

/// `Σ gain_k·block_k + noise`.
pub fn superpose(signals: &[(f64, &[f64])], noise: &[f64]) -> Result<Vec<f64>> {
    let n = noise.len();
    if let Some((_, b)) = signals.iter().find(|(_, b)| b.len() != n) {
        return invalid(format!("block of length {} does not match length {n}", b.len()));
    }
    let mut y = noise.to_vec();
    for (gain, block) in signals {
        for (acc, x) in y.iter_mut().zip(block.iter()) {
            *acc += gain * x;
        }
    }
    Ok(y)
}

/// MAC output for the given weighted blocks; noise is drawn from `rng` when
/// `noise_on`.
pub fn transmit_mac<R: Rng + ?Sized>(
    signals: &[(f64, &[f64])],
    noise_on: bool,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let n = match signals.first() {
        Some((_, b)) => b.len(),
        None => return invalid("no signals to transmit"),
    };
    let noise = if noise_on { draw_noise(n, rng) } else { vec![0.0; n] };
    superpose(signals, &noise)
}

/// Average power `‖block‖²/n` and whether it respects `power`.
pub fn power_check(block: &[f64], power: f64) -> (bool, f64) {
    if block.is_empty() {
        return (true, 0.0);
    }
    let measured = block.iter().map(|x| x * x).sum::<f64>() / block.len() as f64;
    (measured <= power * (1.0 + POWER_SLACK), measured)
}

/// Fading realization together with the two-group split of the databases.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelState {
    fading: Vec<f64>,
    power: f64,
    partition: PartitionResult,
}

impl ChannelState {
    pub fn new(fading: Vec<f64>, power: f64, partition: PartitionResult) -> Result<Self> {
        if fading.len() < 2 {
            return invalid("need at least two databases");
        }
        if !(power.is_finite() && power > 0.0) {
            return invalid(format!("power must be positive, got {power}"));
        }
        if fading.iter().any(|h| !h.is_finite()) {
            return invalid("non-finite fading coefficient");
        }
        partition.validate(fading.len())?;
        for (set, stored) in [(partition.s1(), partition.gain1()), (partition.s2(), partition.gain2())] {
            let g: f64 = set.iter().map(|&k| fading[k].abs()).sum();
            if (g - stored).abs() > GAIN_TOL * (1.0 + g) {
                return invalid(format!("stored gain {stored} does not match recomputed {g}"));
            }
        }
        Ok(Self { fading, power, partition })
    }

    /// Builds the state from explicit groups, ordering them so that `h̃1 ≤ h̃2`.
    pub fn from_groups(fading: Vec<f64>, power: f64, s1: Vec<usize>, s2: Vec<usize>) -> Result<Self> {
        let weights: Vec<f64> = fading.iter().map(|h| h.abs()).collect();
        let partition = PartitionResult::from_sets(&weights, s1, s2, crate::partition::PartitionMethod::Given)?;
        Self::new(fading, power, partition)
    }

    pub fn fading(&self) -> &[f64] {
        &self.fading
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn n_dbs(&self) -> usize {
        self.fading.len()
    }

    pub fn partition(&self) -> &PartitionResult {
        &self.partition
    }

    /// `h̃1`, the smaller effective gain.
    pub fn gain1(&self) -> f64 {
        self.partition.gain1()
    }

    /// `h̃2`, the larger effective gain.
    pub fn gain2(&self) -> f64 {
        self.partition.gain2()
    }

    /// `(|h_k|, block)` pairs for every database in either group; group-1
    /// members send `block1`, group-2 members `block2`.
    pub fn weighted_blocks<'a>(&self, block1: &'a [f64], block2: &'a [f64]) -> Vec<(f64, &'a [f64])> {
        let mut out = Vec::with_capacity(self.partition.s1().len() + self.partition.s2().len());
        out.extend(self.partition.s1().iter().map(|&k| (self.fading[k].abs(), block1)));
        out.extend(self.partition.s2().iter().map(|&k| (self.fading[k].abs(), block2)));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::partition_exact;
    use crate::rng::stream;

    #[test]
    fn fading_statistics() {
        let mut rng = stream(3, 0);
        let draws = 1_000_000;
        let (mut sum, mut abs_sum) = (0.0, 0.0);
        for _ in 0..draws / 4 {
            for h in draw_fading(4, &mut rng).unwrap() {
                sum += h;
                abs_sum += h.abs();
            }
        }
        assert!((sum / draws as f64).abs() < 0.01);
        let half_normal_mean = (2.0 / std::f64::consts::PI).sqrt();
        assert!((abs_sum / draws as f64 - half_normal_mean).abs() < 0.01);
    }

    #[test]
    fn fading_is_deterministic_and_checked() {
        let a = draw_fading(6, &mut stream(9, 1)).unwrap();
        let b = draw_fading(6, &mut stream(9, 1)).unwrap();
        assert_eq!(a, b);
        assert!(draw_fading(1, &mut stream(9, 1)).is_err());
    }

    #[test]
    fn noiseless_superposition() {
        let mut rng = stream(0, 0);
        let y = transmit_mac(&[(1.0, &[1.0][..]), (1.0, &[2.0][..])], false, &mut rng).unwrap();
        assert_eq!(y, vec![3.0]);
        assert!(transmit_mac(&[(1.0, &[1.0][..]), (1.0, &[2.0, 0.0][..])], false, &mut rng).is_err());
    }

    #[test]
    fn noiseless_mac_is_linear() {
        let mut rng = stream(4, 0);
        let a = [0.3, -1.2, 2.0];
        let b = [1.1, 0.4, -0.7];
        let c = [-0.5, 0.9, 0.1];
        let ab: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 2.0 * x + y).collect();
        let lhs = transmit_mac(&[(0.7, &ab[..]), (1.3, &c[..])], false, &mut rng).unwrap();
        let ya = transmit_mac(&[(0.7, &a[..]), (1.3, &c[..])], false, &mut rng).unwrap();
        let yb = transmit_mac(&[(0.7, &b[..])], false, &mut rng).unwrap();
        let yc = transmit_mac(&[(1.3, &c[..])], false, &mut rng).unwrap();
        for i in 0..3 {
            assert!((lhs[i] - (2.0 * ya[i] - 2.0 * yc[i] + yb[i] + yc[i])).abs() < 1e-12);
        }
    }

    #[test]
    fn gain_balanced_superposition() {
        // Group 2 scales by h̃1/h̃2, so the air sum is h̃1(x1 + x'2).
        let fading = vec![0.8, -1.2];
        let state = ChannelState::from_groups(fading, 5.0, vec![0], vec![1]).unwrap();
        let (g1, g2) = (state.gain1(), state.gain2());
        assert_eq!((g1, g2), (0.8, 1.2));
        let x1 = [0.5, -1.0];
        let x2p = [1.5, 0.25];
        let x2: Vec<f64> = x2p.iter().map(|x| g1 / g2 * x).collect();
        let y = superpose(&state.weighted_blocks(&x1, &x2), &[0.0, 0.0]).unwrap();
        for i in 0..2 {
            assert!((y[i] - g1 * (x1[i] + x2p[i])).abs() < 1e-12);
        }
    }

    #[test]
    fn noise_variance() {
        let mut rng = stream(21, 0);
        let trials = 100_000;
        let mut m2 = 0.0;
        for _ in 0..trials {
            let y = transmit_mac(&[(1.0, &[0.0][..])], true, &mut rng).unwrap();
            m2 += y[0] * y[0];
        }
        assert!((m2 / trials as f64 - 1.0).abs() < 0.02);
    }

    #[test]
    fn power_check_cases() {
        assert_eq!(power_check(&[0.0; 4], 1.0), (true, 0.0));
        let (ok, m) = power_check(&[1.0, -1.0, 1.0, -1.0], 1.0);
        assert!(ok);
        assert_eq!(m, 1.0);
        assert!(!power_check(&[2.0], 1.0).0);
    }

    #[test]
    fn state_orders_gains_and_validates() {
        let fading = vec![2.0, 0.5, -0.25];
        let state = ChannelState::from_groups(fading.clone(), 1.0, vec![0], vec![1, 2]).unwrap();
        assert_eq!(state.partition().s1(), &[1, 2]);
        assert!((state.gain1() - 0.75).abs() < 1e-15);
        assert!(ChannelState::from_groups(fading.clone(), 1.0, vec![0], vec![0, 1]).is_err());
        assert!(ChannelState::from_groups(fading.clone(), 1.0, vec![], vec![0, 1]).is_err());
        assert!(ChannelState::from_groups(fading.clone(), 1.0, vec![0], vec![5]).is_err());
        assert!(ChannelState::from_groups(fading.clone(), -1.0, vec![0], vec![1]).is_err());
        let weights: Vec<f64> = fading.iter().map(|h| h.abs()).collect();
        let p = partition_exact(&weights).unwrap();
        assert!(ChannelState::new(fading, 1.0, p).is_ok());
    }
}
