//! Closed-form rates and Monte-Carlo rate statistics, all in bits per channel
//! use.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::draw_fading;
use crate::error::{invalid, Result};
use crate::partition::{optimal_gain_bounds, partition, partition_differencing, PartitionMethod, EXACT_MAX_N};
use crate::rng::stream;

/// `c = (√(2/π) − ½)²` from the expected-rate lower bound.
pub fn lower_bound_constant() -> f64 {
    ((2.0 / std::f64::consts::PI).sqrt() - 0.5).powi(2)
}

fn half_log2_plus(x: f64) -> f64 {
    if x > 1.0 {
        0.5 * x.log2()
    } else {
        0.0
    }
}

/// Sum-rate capacity with coherent combining, `½log₂(1 + P(Σ|h_k|)²)`.
pub fn sum_capacity(h: &[f64], power: f64) -> f64 {
    let s: f64 = h.iter().map(|x| x.abs()).sum();
    0.5 * (1.0 + power * s * s).log2()
}

/// Two-group lattice PIR rate `½log⁺(½ + h̃1²P)`.
pub fn r_eq(gain1: f64, power: f64) -> f64 {
    half_log2_plus(0.5 + gain1 * gain1 * power)
}

fn r_cf_ratio(a: [i64; 2], gains: (f64, f64), power: f64) -> f64 {
    let (h1, h2) = gains;
    let (a1, a2) = (a[0] as f64, a[1] as f64);
    let num = 1.0 + power * (h1 * h1 + h2 * h2);
    let mis = a1 * h2 - a2 * h1;
    num / (a1 * a1 + a2 * a2 + power * mis * mis)
}

/// Compute-and-forward comparison rate for coefficient vector `a`.
pub fn r_cf(a: [i64; 2], gains: (f64, f64), power: f64) -> Result<f64> {
    if a == [0, 0] {
        return invalid("coefficient vector must be nonzero");
    }
    Ok(half_log2_plus(r_cf_ratio(a, gains, power)))
}

/// Best compute-and-forward coefficients with `1 ≤ a1 ≤ a_max`,
/// `0 < |a2| ≤ a_max`. Since `a` and `−a` give the same rate only `a1 > 0` is
/// searched; ties go to the smallest `‖a‖`, then lexicographic order.
pub fn r_cf_best(gains: (f64, f64), power: f64, a_max: u32) -> Result<([i64; 2], f64)> {
    if a_max == 0 {
        return invalid("a_max must be at least 1");
    }
    let m = a_max as i64;
    let mut cands: Vec<[i64; 2]> = (1..=m)
        .flat_map(|a1| (-m..=m).filter(|&a2| a2 != 0).map(move |a2| [a1, a2]))
        .collect();
    cands.sort_by_key(|a| (a[0] * a[0] + a[1] * a[1], a[0], a[1]));
    let mut best = cands[0];
    let mut best_ratio = r_cf_ratio(best, gains, power);
    for &a in &cands[1..] {
        let r = r_cf_ratio(a, gains, power);
        if r > best_ratio {
            best = a;
            best_ratio = r;
        }
    }
    Ok((best, half_log2_plus(best_ratio)))
}

/// Expected-rate lower bound `½log⁺((2 + N²Pc)/4)`. The vanishing correction
/// term of the asymptotic statement is not included.
pub fn lower_bound_rate(n_dbs: usize, power: f64) -> f64 {
    let n = n_dbs as f64;
    half_log2_plus((2.0 + n * n * power * lower_bound_constant()) / 4.0)
}

/// Rates of one channel realization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub n_dbs: usize,
    pub power: f64,
    pub gain1: f64,
    pub gain2: f64,
    pub c_sr: f64,
    pub r_eq: f64,
    pub cf_a: [i64; 2],
    pub r_cf: f64,
    pub r_lower_bound: f64,
    pub lb_constant: f64,
    /// `c_sr − r_eq`.
    pub gap: f64,
}

impl RateReport {
    pub fn evaluate(h: &[f64], gains: (f64, f64), power: f64, a_max: u32) -> Result<Self> {
        let (cf_a, r_cf) = r_cf_best(gains, power, a_max)?;
        let c_sr = sum_capacity(h, power);
        let r = r_eq(gains.0, power);
        Ok(Self {
            n_dbs: h.len(),
            power,
            gain1: gains.0,
            gain2: gains.1,
            c_sr,
            r_eq: r,
            cf_a,
            r_cf,
            r_lower_bound: lower_bound_rate(h.len(), power),
            lb_constant: lower_bound_constant(),
            gap: c_sr - r,
        })
    }
}

/// Rates for one fading draw under a partitioning method.
///
/// `r_eq` uses the partition actually produced. `r_eq_upper` bounds the rate
/// of the optimal partition: it equals `r_eq` except for exact partitioning
/// beyond [`EXACT_MAX_N`], where the differencing split is used and the
/// perfect-balance gain supplies the upper end.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRates {
    pub c_sr: f64,
    pub r_eq: f64,
    pub r_eq_upper: f64,
    /// Gains of the partition actually produced.
    pub gain1: f64,
    pub gain2: f64,
}

impl TrialRates {
    pub fn gap(&self) -> f64 {
        self.c_sr - self.r_eq
    }

    pub fn gap_lower(&self) -> f64 {
        self.c_sr - self.r_eq_upper
    }
}

/// Draws the fading of trial `trial` and evaluates the rates.
pub fn trial_rates(
    n_dbs: usize,
    power: f64,
    method: PartitionMethod,
    seed: u64,
    trial: u64,
) -> Result<TrialRates> {
    let mut rng = stream(seed, trial);
    let h = draw_fading(n_dbs, &mut rng)?;
    let w: Vec<f64> = h.iter().map(|x| x.abs()).collect();
    let (part, g_hi) = if method == PartitionMethod::Exact && n_dbs > EXACT_MAX_N {
        let part = partition_differencing(&w)?;
        let (_, hi) = optimal_gain_bounds(&w)?;
        (part, hi)
    } else {
        let part = partition(&w, method, &mut rng)?;
        let g = part.gain1();
        (part, g)
    };
    Ok(TrialRates {
        c_sr: sum_capacity(&h, power),
        r_eq: r_eq(part.gain1(), power),
        r_eq_upper: r_eq(g_hi, power),
        gain1: part.gain1(),
        gain2: part.gain2(),
    })
}

/// All trials `0..trials`, evaluated in parallel and returned in trial order.
pub fn sample_trials(
    n_dbs: usize,
    power: f64,
    method: PartitionMethod,
    trials: u64,
    seed: u64,
) -> Result<Vec<TrialRates>> {
    if trials == 0 {
        return invalid("trials must be at least 1");
    }
    (0..trials).into_par_iter().map(|t| trial_rates(n_dbs, power, method, seed, t)).collect()
}

/// Summary of `C_SR − R_eq` over Monte-Carlo trials.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapStatistics {
    pub n_dbs: usize,
    pub power: f64,
    pub method: PartitionMethod,
    pub trials: u64,
    /// Mean gap of the partitions produced.
    pub mean: f64,
    /// Mean gap against the optimal-partition upper rate; equals `mean`
    /// whenever the partition is exact.
    pub mean_lower: f64,
    pub std_err: f64,
    pub q05: f64,
    pub q50: f64,
    pub q95: f64,
    pub mean_c_sr: f64,
    pub mean_r_eq: f64,
    pub mean_r_eq_upper: f64,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

impl GapStatistics {
    pub fn from_trials(n_dbs: usize, power: f64, method: PartitionMethod, samples: &[TrialRates]) -> Self {
        let k = samples.len() as f64;
        let mean_of = |f: &dyn Fn(&TrialRates) -> f64| samples.iter().map(f).sum::<f64>() / k;
        let mean = mean_of(&|t| t.gap());
        let var = if samples.len() > 1 {
            samples.iter().map(|t| (t.gap() - mean).powi(2)).sum::<f64>() / (k - 1.0)
        } else {
            0.0
        };
        let mut gaps: Vec<f64> = samples.iter().map(|t| t.gap()).collect();
        gaps.sort_by(f64::total_cmp);
        Self {
            n_dbs,
            power,
            method,
            trials: samples.len() as u64,
            mean,
            mean_lower: mean_of(&|t| t.gap_lower()),
            std_err: (var / k).sqrt(),
            q05: quantile(&gaps, 0.05),
            q50: quantile(&gaps, 0.5),
            q95: quantile(&gaps, 0.95),
            mean_c_sr: mean_of(&|t| t.c_sr),
            mean_r_eq: mean_of(&|t| t.r_eq),
            mean_r_eq_upper: mean_of(&|t| t.r_eq_upper),
        }
    }
}

/// Monte-Carlo distribution of the gap to the sum-rate capacity.
pub fn gap_statistics(
    n_dbs: usize,
    power: f64,
    trials: u64,
    method: PartitionMethod,
    seed: u64,
) -> Result<GapStatistics> {
    let samples = sample_trials(n_dbs, power, method, trials, seed)?;
    Ok(GapStatistics::from_trials(n_dbs, power, method, &samples))
}
