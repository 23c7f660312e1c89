//! Two-group splits of the databases.
//!
//! The achievable rate depends only on the smaller effective gain
//! `h̃1 = min(Σ_{S1}|h_k|, Σ_{S2}|h_k|)`, so choosing the groups is a
//! number-partitioning problem. Three solvers are provided: exhaustive search
//! (exact, small `N`), largest-differencing (Karmarkar–Karp), and the uniform
//! random half split.
//!
//! Every solver assigns all databases to a group; with nonnegative weights
//! leaving one out never raises `h̃1`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Largest `N` accepted by [`partition_exact`].
pub const EXACT_MAX_N: usize = 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PartitionMethod {
    Exact,
    Differencing,
    RandomHalf,
    /// Groups supplied by the caller.
    Given,
}

impl PartitionMethod {
    pub fn label(self) -> &'static str {
        match self {
            PartitionMethod::Exact => "exact",
            PartitionMethod::Differencing => "diff",
            PartitionMethod::RandomHalf => "random",
            PartitionMethod::Given => "given",
        }
    }
}

impl std::str::FromStr for PartitionMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(PartitionMethod::Exact),
            "diff" | "differencing" => Ok(PartitionMethod::Differencing),
            "random" | "random-half" => Ok(PartitionMethod::RandomHalf),
            other => invalid(format!("unknown partition method '{other}'")),
        }
    }
}

impl std::fmt::Display for PartitionMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Two disjoint groups of database indices with `h̃1 ≤ h̃2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionResult {
    s1: Vec<usize>,
    s2: Vec<usize>,
    gain1: f64,
    gain2: f64,
    method: PartitionMethod,
}

/// `true` when the indicator vector of `a` precedes that of `b`
/// lexicographically (index 0 first). For complementary groups this picks the
/// group without the smallest index.
fn indicator_precedes(a: &[usize], b: &[usize]) -> bool {
    let first = |s: &[usize]| s.iter().copied().min().unwrap_or(usize::MAX);
    first(a) > first(b)
}

impl PartitionResult {
    /// Orders and validates explicit groups.
    pub fn from_sets(
        weights: &[f64],
        mut a: Vec<usize>,
        mut b: Vec<usize>,
        method: PartitionMethod,
    ) -> Result<Self> {
        a.sort_unstable();
        b.sort_unstable();
        let ga: f64 = a.iter().filter_map(|&k| weights.get(k)).sum();
        let gb: f64 = b.iter().filter_map(|&k| weights.get(k)).sum();
        let swap = match ga.partial_cmp(&gb) {
            Some(Ordering::Greater) => true,
            Some(Ordering::Equal) => indicator_precedes(&b, &a),
            _ => false,
        };
        let out = if swap {
            Self { s1: b, s2: a, gain1: gb, gain2: ga, method }
        } else {
            Self { s1: a, s2: b, gain1: ga, gain2: gb, method }
        };
        out.validate(weights.len())?;
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return invalid("weights must be finite and nonnegative");
        }
        Ok(out)
    }

    pub(crate) fn validate(&self, n: usize) -> Result<()> {
        if self.s1.is_empty() || self.s2.is_empty() {
            return invalid("both groups must be non-empty");
        }
        let mut seen = vec![false; n];
        for &k in self.s1.iter().chain(&self.s2) {
            match seen.get_mut(k) {
                None => return invalid(format!("database index {k} out of range for N = {n}")),
                Some(true) => return invalid(format!("database {k} assigned twice")),
                Some(s) => *s = true,
            }
        }
        if self.gain1 > self.gain2 {
            return invalid("groups are not ordered by gain");
        }
        Ok(())
    }

    pub fn s1(&self) -> &[usize] {
        &self.s1
    }

    pub fn s2(&self) -> &[usize] {
        &self.s2
    }

    /// `h̃1 = Σ_{S1}|h_k|`.
    pub fn gain1(&self) -> f64 {
        self.gain1
    }

    /// `h̃2 = Σ_{S2}|h_k|`.
    pub fn gain2(&self) -> f64 {
        self.gain2
    }

    /// Objective value, equal to `h̃1`.
    pub fn objective(&self) -> f64 {
        self.gain1
    }

    pub fn method(&self) -> PartitionMethod {
        self.method
    }
}

fn check_weights(weights: &[f64]) -> Result<()> {
    if weights.len() < 2 {
        return invalid(format!("need at least two weights, got {}", weights.len()));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return invalid("weights must be finite and nonnegative");
    }
    Ok(())
}

/// Converts weights to integers on a common binary grid, exactly when the
/// exponent range allows it, so that subset sums compare without rounding.
fn to_fixed_point(weights: &[f64]) -> Vec<i128> {
    // Exponent of the least significant mantissa bit of each nonzero weight.
    let lsb_exp = |w: f64| -> i32 {
        let bits = w.to_bits();
        let exp = ((bits >> 52) & 0x7ff) as i32;
        let mant = bits & ((1u64 << 52) - 1);
        let (e, m) = if exp == 0 { (-1074, mant) } else { (exp - 1075, mant | (1u64 << 52)) };
        e + m.trailing_zeros() as i32
    };
    let max_exp = weights
        .iter()
        .filter(|w| **w > 0.0)
        .map(|w| w.log2().floor() as i32)
        .max()
        .unwrap_or(0);
    let min_lsb = weights.iter().filter(|w| **w > 0.0).map(|&w| lsb_exp(w)).min().unwrap_or(0);
    // Keep sums of up to 2^6 terms below 2^120.
    let shift = (-min_lsb).min(112 - max_exp);
    weights
        .iter()
        .map(|&w| {
            let scaled = w * 2f64.powi(shift);
            if scaled.fract() == 0.0 && scaled.abs() < 2f64.powi(120) {
                scaled as i128
            } else {
                scaled.round() as i128
            }
        })
        .collect()
}

/// Exhaustive search over all two-group covers, maximizing the smaller sum.
/// Ties go to the `S1` whose indicator vector is lexicographically smallest.
pub fn partition_exact(weights: &[f64]) -> Result<PartitionResult> {
    check_weights(weights)?;
    let n = weights.len();
    if n > EXACT_MAX_N {
        return Err(Error::BudgetExceeded(format!(
            "exact partitioning supports N <= {EXACT_MAX_N}, got {n}; use the differencing heuristic"
        )));
    }
    let fixed = to_fixed_point(weights);
    let total: i128 = fixed.iter().sum();
    let full: u32 = (1u32 << n) - 1;
    let key = |mask: u32| mask.reverse_bits() >> (32 - n);

    let mut mask = 0u32;
    let mut sum = 0i128;
    let mut best: Option<(i128, u32)> = None;
    for i in 1u32..(1u32 << n) {
        let bit = i.trailing_zeros();
        mask ^= 1 << bit;
        if mask & (1 << bit) != 0 {
            sum += fixed[bit as usize];
        } else {
            sum -= fixed[bit as usize];
        }
        if mask == full || 2 * sum > total {
            continue;
        }
        let better = match best {
            None => true,
            Some((b, m)) => sum > b || (sum == b && key(mask) < key(m)),
        };
        if better {
            best = Some((sum, mask));
        }
    }
    let (_, mask) = best.expect("N >= 2 admits a cover");
    let s1: Vec<usize> = (0..n).filter(|&k| mask & (1 << k) != 0).collect();
    let s2: Vec<usize> = (0..n).filter(|&k| mask & (1 << k) == 0).collect();
    let gain1 = s1.iter().map(|&k| weights[k]).sum();
    let gain2 = s2.iter().map(|&k| weights[k]).sum();
    let out = PartitionResult { s1, s2, gain1, gain2, method: PartitionMethod::Exact };
    // Float sums of an exact fixed-point tie can land either side by an ulp.
    if out.gain1 > out.gain2 {
        return Ok(PartitionResult { gain1: out.gain2, gain2: out.gain1, ..out });
    }
    Ok(out)
}

struct Node {
    value: f64,
    order: usize,
    same: Vec<usize>,
    opposite: Vec<usize>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        self.value.total_cmp(&other.value).then_with(|| other.order.cmp(&self.order))
    }
}

/// Largest-differencing heuristic: repeatedly commit the two largest
/// remaining values to opposite groups and reinsert their difference.
pub fn partition_differencing(weights: &[f64]) -> Result<PartitionResult> {
    check_weights(weights)?;
    let mut heap: BinaryHeap<Node> = weights
        .iter()
        .enumerate()
        .map(|(k, &w)| Node { value: w, order: k, same: vec![k], opposite: Vec::new() })
        .collect();
    let mut order = weights.len();
    while heap.len() > 1 {
        let mut a = heap.pop().expect("len > 1");
        let b = heap.pop().expect("len > 1");
        a.same.extend(b.opposite);
        a.opposite.extend(b.same);
        heap.push(Node { value: a.value - b.value, order, same: a.same, opposite: a.opposite });
        order += 1;
    }
    let last = heap.pop().expect("non-empty");
    PartitionResult::from_sets(weights, last.same, last.opposite, PartitionMethod::Differencing)
}

/// The uniformly drawn first half (size `⌊N/2⌋`) used by the random split.
pub fn random_half_draw<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<usize> {
    let mut s = index::sample(rng, n, n / 2).into_vec();
    s.sort_unstable();
    s
}

/// Uniform random split: `⌊N/2⌋` databases drawn without replacement, the
/// rest (including the odd leftover) in the other group. The returned groups
/// are relabelled so that `h̃1 ≤ h̃2`.
pub fn partition_random_half<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> Result<PartitionResult> {
    check_weights(weights)?;
    let n = weights.len();
    let s1 = random_half_draw(n, rng);
    let s2 = (0..n).filter(|k| s1.binary_search(k).is_err()).collect();
    PartitionResult::from_sets(weights, s1, s2, PartitionMethod::RandomHalf)
}

/// Dispatches to the requested solver.
pub fn partition<R: Rng + ?Sized>(
    weights: &[f64],
    method: PartitionMethod,
    rng: &mut R,
) -> Result<PartitionResult> {
    match method {
        PartitionMethod::Exact => partition_exact(weights),
        PartitionMethod::Differencing => partition_differencing(weights),
        PartitionMethod::RandomHalf => partition_random_half(weights, rng),
        PartitionMethod::Given => invalid("'given' partitions are built with PartitionResult::from_sets"),
    }
}

/// Enclosure `[lo, hi]` of the optimal `h̃1`. Exact when `N <= EXACT_MAX_N`;
/// otherwise `lo` comes from differencing and `hi` is the perfect-balance
/// bound `Σ|h_k|/2`.
pub fn optimal_gain_bounds(weights: &[f64]) -> Result<(f64, f64)> {
    if weights.len() <= EXACT_MAX_N {
        let g = partition_exact(weights)?.gain1();
        return Ok((g, g));
    }
    let lo = partition_differencing(weights)?.gain1();
    let hi = weights.iter().sum::<f64>() / 2.0;
    Ok((lo, hi.max(lo)))
}
