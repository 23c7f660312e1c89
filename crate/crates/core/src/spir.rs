//! Symmetric PIR.
//!
//! Two variants. With common randomness, both groups mask their answers with
//! a codeword `S` shared by the databases: group 1 adds it, group 2 subtracts
//! it, so it cancels in the user's modulo sum while each received block is
//! uniform on the codebook. Without common randomness, the databases skip the
//! modulo entirely and the queries are signed so that the answers add up to
//! `2b_i·φ(W_i)`; the user then sees nothing but its own codeword plus noise,
//! at the price of a rate that falls with `M`.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::audit::{exact_mi, Joint};
use crate::error::{invalid, Error, Result};
use crate::lattice::{FieldVector, LatticePoint, NestedLatticePair};
use crate::pir::{check_scale, form_answer, queries_for, AnswerState, Group, Query, TransmitBlock};

/// Per-iteration codeword shared by all databases and hidden from the user.
/// It carries `n·log₂p` bits, as many as the message chunk, so `ρ = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommonRandomness {
    s: LatticePoint,
}

impl CommonRandomness {
    /// Uniform draw over the codebook.
    pub fn fresh<R: Rng + ?Sized>(pair: &NestedLatticePair, rng: &mut R) -> Self {
        Self { s: pair.sample_codeword(rng) }
    }

    pub fn zero(pair: &NestedLatticePair) -> Self {
        Self { s: pair.codeword_at(0) }
    }

    pub fn from_point(pair: &NestedLatticePair, point: LatticePoint) -> Result<Self> {
        if !pair.contains(point.coords()) {
            return invalid("common randomness must be a codeword");
        }
        Ok(Self { s: point })
    }

    pub fn point(&self) -> &LatticePoint {
        &self.s
    }

    /// Bits of common randomness per bit of message chunk.
    pub fn rho(pair: &NestedLatticePair) -> f64 {
        let bits_s = pair.dim() as f64 * (pair.prime() as f64).log2();
        let bits_chunk = pair.dim() as f64 * pair.rate_bits();
        bits_s / bits_chunk
    }
}

/// `scale·[λ − d ± S] mod Λ_c`, with `+S` for group 1 and `−S` for group 2.
pub fn spir_cr_transmit(
    answer: &AnswerState,
    dither: &[f64],
    s: &CommonRandomness,
    scale: f64,
    pair: &NestedLatticePair,
) -> Result<TransmitBlock> {
    check_scale(scale)?;
    if !pair.contains(s.point().coords()) {
        return invalid("common randomness is not a codeword");
    }
    if dither.len() != pair.dim() {
        return invalid(format!("dither of length {} for dimension {}", dither.len(), pair.dim()));
    }
    let sign = match answer.group() {
        Group::One => 1.0,
        Group::Two => -1.0,
    };
    let pre: Vec<f64> = answer
        .codeword()
        .coords()
        .iter()
        .zip(dither)
        .zip(s.point().coords())
        .map(|((l, d), s)| l - d + sign * s)
        .collect();
    let block = pair.mod_reduce(&pre)?.into_iter().map(|x| scale * x).collect();
    Ok(TransmitBlock::new(block, answer.group(), scale))
}

/// Distribution of the mask in [`crypto_lemma_check`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MaskDistribution {
    Uniform,
    /// All mass on the codeword with this base-`p` field value.
    PointMass(u64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CryptoLemmaReport {
    /// `max_v TV(P(Y | λ = v), uniform)`.
    pub max_tv: f64,
    /// `I(λ; Y)` in bits under the supplied prior on `λ`.
    pub mutual_information: f64,
    pub codebook_size: u64,
}

/// Exact check that `Y = [λ + S] mod Λ_c` is uniform and independent of `λ`.
/// `lambda_weights[v]` is the (unnormalized) prior of the codeword with field
/// value `v`; an empty slice means uniform.
pub fn crypto_lemma_check(
    pair: &NestedLatticePair,
    lambda_weights: &[u64],
    mask: MaskDistribution,
) -> Result<CryptoLemmaReport> {
    let book = pair.codebook()?;
    let size = book.len() as u64;
    if !lambda_weights.is_empty() && lambda_weights.len() as u64 != size {
        return invalid(format!("prior has {} entries for {size} codewords", lambda_weights.len()));
    }
    let masks: Vec<&LatticePoint> = match mask {
        MaskDistribution::Uniform => book.iter().collect(),
        MaskDistribution::PointMass(v) => {
            vec![book.get(v as usize).ok_or_else(|| Error::InvalidInput(format!("no codeword {v}")))?]
        }
    };
    let k = masks.len() as u128;
    let index_of = |pt: &[f64]| -> Result<u64> {
        let f = pair.decode(pt)?;
        Ok(f.symbols().iter().rev().fold(0u64, |acc, &s| acc * pair.prime() + s))
    };
    let mut max_num = 0u128;
    let mut joint: Joint<u64, u64> = BTreeMap::new();
    for (v, lambda) in book.iter().enumerate() {
        let mut counts = vec![0u128; size as usize];
        for s in &masks {
            let sum: Vec<f64> = lambda.coords().iter().zip(s.coords()).map(|(a, b)| a + b).collect();
            let y = index_of(&pair.mod_reduce(&sum)?)?;
            counts[y as usize] += 1;
        }
        // TV = Σ_y |c_y/k − 1/|C|| / 2, kept as an integer numerator.
        let num: u128 = counts.iter().map(|&c| (c * size as u128).abs_diff(k)).sum();
        max_num = max_num.max(num);
        let w = lambda_weights.get(v).copied().unwrap_or(1) as u128;
        for (y, &c) in counts.iter().enumerate() {
            if c > 0 && w > 0 {
                *joint.entry((v as u64, y as u64)).or_default() += w * c;
            }
        }
    }
    Ok(CryptoLemmaReport {
        max_tv: max_num as f64 / (2 * k * size as u128) as f64,
        mutual_information: exact_mi(&joint),
        codebook_size: size,
    })
}

/// Outcome of the two-database leakage demonstration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeakageDemo {
    pub prime: u64,
    pub w1: u64,
    pub w2: u64,
    pub q1: Vec<i64>,
    pub q2: Vec<i64>,
    pub x1_plain: f64,
    pub x2_plain: f64,
    pub y_plain: f64,
    /// `P(W2 = w | view)` for `w = 0..p` without common randomness.
    pub posterior_plain: Vec<f64>,
    /// The same posterior when the answers are masked by `S`; `y_masked`
    /// is the output for the mask realization used in the run.
    pub posterior_masked: Vec<f64>,
    pub y_masked: f64,
    pub decoded_plain: u64,
    pub decoded_masked: u64,
    /// Symbol pinned down by the plain-PIR view, if any.
    pub leaked_w2: Option<u64>,
}

fn toy_output(pair: &NestedLatticePair, q1: &Query, q2: &Query, w: [u64; 2], s: Option<u64>) -> Result<f64> {
    let p = pair.prime();
    let msgs = [FieldVector::new(vec![w[0]], p)?, FieldVector::new(vec![w[1]], p)?];
    let a1 = form_answer(q1, &msgs, pair)?;
    let a2 = form_answer(q2, &msgs, pair)?;
    let zero = [0.0];
    let (x1, x2) = match s {
        None => (crate::pir::make_transmit(&a1, &zero, 1.0, pair)?, crate::pir::make_transmit(&a2, &zero, 1.0, pair)?),
        Some(v) => {
            let s = CommonRandomness::from_point(pair, pair.codeword_at(v))?;
            (spir_cr_transmit(&a1, &zero, &s, 1.0, pair)?, spir_cr_transmit(&a2, &zero, &s, 1.0, pair)?)
        }
    };
    Ok(x1.block()[0] + x2.block()[0])
}

fn posterior_over_w2(pair: &NestedLatticePair, q1: &Query, q2: &Query, y: f64, masked: bool) -> Result<Vec<f64>> {
    let p = pair.prime();
    let mut counts = vec![0u64; p as usize];
    for w1 in 0..p {
        for w2 in 0..p {
            let masks: Vec<Option<u64>> = if masked { (0..p).map(Some).collect() } else { vec![None] };
            for s in masks {
                if toy_output(pair, q1, q2, [w1, w2], s)? == y {
                    counts[w2 as usize] += 1;
                }
            }
        }
    }
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return invalid("observation is impossible under the model");
    }
    Ok(counts.iter().map(|&c| c as f64 / total as f64).collect())
}

/// Two databases with unit gains, `Λ_f = Z`, `Λ_c = 5Z`, no dither and no
/// noise. The user asks for `W1` with `b = (1, 1)`, and `φ(W1) = 1`,
/// `φ(W2) = 2`. The posterior over `W2` is obtained by enumerating every
/// message pair (and, for the masked scheme, every `S`) consistent with `y`.
pub fn leakage_example() -> Result<LeakageDemo> {
    let p = 5;
    let pair = NestedLatticePair::new(1, p, 1.0)?;
    let (w1, w2) = (1u64, 2u64);
    let (q1, q2) = queries_for(0, &[true, true])?;
    let msgs = [FieldVector::new(vec![w1], p)?, FieldVector::new(vec![w2], p)?];
    let a1 = form_answer(&q1, &msgs, &pair)?;
    let a2 = form_answer(&q2, &msgs, &pair)?;
    let (x1, x2) = (a1.codeword().coords()[0], a2.codeword().coords()[0]);
    let y_plain = toy_output(&pair, &q1, &q2, [w1, w2], None)?;
    // Any mask gives the same posterior; use S = φ(3).
    let y_masked = toy_output(&pair, &q1, &q2, [w1, w2], Some(3))?;
    let posterior_plain = posterior_over_w2(&pair, &q1, &q2, y_plain, false)?;
    let posterior_masked = posterior_over_w2(&pair, &q1, &q2, y_masked, true)?;
    let decode = |y: f64| -> Result<u64> { Ok(pair.decode(&pair.mod_reduce(&[y])?)?.symbols()[0]) };
    let leaked_w2 = posterior_plain.iter().position(|&q| q == 1.0).map(|w| w as u64);
    Ok(LeakageDemo {
        prime: p,
        w1,
        w2,
        q1: q1.coeffs().to_vec(),
        q2: q2.coeffs().to_vec(),
        x1_plain: x1,
        x2_plain: x2,
        y_plain,
        posterior_plain,
        posterior_masked,
        y_masked,
        decoded_plain: decode(y_plain)?,
        decoded_masked: decode(y_masked)?,
        leaked_w2,
    })
}

/// Signed queries for message `index` given `b ∈ {−1, 1}^M` (`true` = +1):
/// `Q1 = b`, `Q2 = −b + 2b_i e_i`.
pub fn nokey_queries_for(index: usize, b: &[bool]) -> Result<(Query, Query)> {
    if index >= b.len() {
        return invalid(format!("message index {index} out of range for M = {}", b.len()));
    }
    let q1: Vec<i64> = b.iter().map(|&x| if x { 1 } else { -1 }).collect();
    let mut q2: Vec<i64> = q1.iter().map(|x| -x).collect();
    q2[index] += 2 * q1[index];
    Ok((Query::new(q1, Group::One), Query::new(q2, Group::Two)))
}

/// Draws `b` and returns the queries with `b_i ∈ {−1, 1}`.
pub fn nokey_gen_queries<R: Rng + ?Sized>(index: usize, n_msgs: usize, rng: &mut R) -> Result<(Query, Query, i64)> {
    if index >= n_msgs {
        return invalid(format!("message index {index} out of range for M = {n_msgs}"));
    }
    let b: Vec<bool> = (0..n_msgs).map(|_| rng.random()).collect();
    let (q1, q2) = nokey_queries_for(index, &b)?;
    let bi = q1.coeffs()[index];
    Ok((q1, q2, bi))
}

/// Volume of the unit ball in `n` dimensions.
pub fn unit_ball_volume(n: usize) -> f64 {
    let mut v = [1.0, 2.0];
    for k in 2..=n {
        let next = v[0] * 2.0 * std::f64::consts::PI / k as f64;
        v = [v[1], next];
    }
    if n == 0 {
        1.0
    } else {
        v[1]
    }
}

/// Points of `γZⁿ` inside the power sphere of radius `√(nP)`. The step is
/// chosen so that one lattice cell has the volume of the noise sphere of
/// radius `√(Mn)/2`, making `|C| ≈ (2√P/√M)ⁿ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphereCodebook {
    dim: usize,
    power: f64,
    n_msgs: usize,
    scale: f64,
}

/// Cap on rejection-sampling attempts per codeword.
const SPHERE_ATTEMPTS: usize = 10_000_000;

impl SphereCodebook {
    pub fn new(dim: usize, power: f64, n_msgs: usize) -> Result<Self> {
        if dim == 0 || n_msgs == 0 {
            return invalid("dimension and message count must be positive");
        }
        if !(power > 0.0 && power.is_finite()) {
            return invalid(format!("power must be positive, got {power}"));
        }
        let noise_radius = (n_msgs as f64 * dim as f64).sqrt() / 2.0;
        let scale = noise_radius * unit_ball_volume(dim).powf(1.0 / dim as f64);
        Ok(Self { dim, power, n_msgs, scale })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn power_radius(&self) -> f64 {
        (self.dim as f64 * self.power).sqrt()
    }

    pub fn noise_radius(&self) -> f64 {
        (self.n_msgs as f64 * self.dim as f64).sqrt() / 2.0
    }

    /// `½log₂(4P/M)` bits per dimension.
    pub fn rate_bits(&self) -> f64 {
        0.5 * (4.0 * self.power / self.n_msgs as f64).log2()
    }

    /// `(1/n)·log₂(vol(power sphere)/vol(cell))`.
    pub fn volume_rate_bits(&self) -> f64 {
        let n = self.dim as f64;
        (unit_ball_volume(self.dim).log2() + n * self.power_radius().log2() - n * self.scale.log2()) / n
    }

    pub fn contains(&self, k: &[i64]) -> bool {
        k.len() == self.dim && self.norm2(k) <= self.dim as f64 * self.power
    }

    fn norm2(&self, k: &[i64]) -> f64 {
        k.iter().map(|&x| (self.scale * x as f64).powi(2)).sum()
    }

    /// `γk`.
    pub fn point(&self, k: &[i64]) -> Vec<f64> {
        k.iter().map(|&x| self.scale * x as f64).collect()
    }

    /// Uniform codeword index vector, by rejection from the bounding cube.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<i64>> {
        let r = (self.power_radius() / self.scale).floor() as i64;
        for _ in 0..SPHERE_ATTEMPTS {
            let k: Vec<i64> = (0..self.dim).map(|_| rng.random_range(-r..=r)).collect();
            if self.contains(&k) {
                return Ok(k);
            }
        }
        Err(Error::BudgetExceeded(format!("rejection sampling in dimension {} did not converge", self.dim)))
    }

    /// Nearest lattice point, rejected if it falls outside the sphere.
    pub fn decode(&self, v: &[f64]) -> Result<Vec<i64>> {
        if v.len() != self.dim {
            return invalid(format!("expected {} coordinates, got {}", self.dim, v.len()));
        }
        let k: Vec<i64> = v.iter().map(|x| (x / self.scale).round() as i64).collect();
        if !self.contains(&k) {
            return Err(Error::DecodeDomain("nearest lattice point lies outside the power sphere".into()));
        }
        Ok(k)
    }

    /// Exact number of codewords, by enumeration.
    pub fn count(&self) -> Result<u64> {
        let r = (self.power_radius() / self.scale).floor() as i64;
        let side = (2 * r + 1) as u128;
        if side.checked_pow(self.dim as u32).is_none_or(|c| c > crate::lattice::ENUMERATION_BUDGET) {
            return Err(Error::BudgetExceeded("sphere codebook too large to enumerate".into()));
        }
        let mut count = 0;
        let mut k = vec![-r; self.dim];
        loop {
            if self.contains(&k) {
                count += 1;
            }
            let mut j = 0;
            loop {
                if j == self.dim {
                    return Ok(count);
                }
                if k[j] < r {
                    k[j] += 1;
                    break;
                }
                k[j] = -r;
                j += 1;
            }
        }
    }
}

/// Result of one retrieval without common randomness (two databases, unit
/// gains).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NokeyOutcome {
    pub sign: i64,
    /// `None` when the decoder's nearest point left the power sphere.
    pub decoded: Option<Vec<i64>>,
    pub correct: bool,
    pub noise: Vec<f64>,
    /// `ŷ − b_i·φ(W_i)`, with the signal part of `ŷ` evaluated on the exact
    /// integer superposition.
    pub residual: Vec<f64>,
    /// `ŷ − b_i·φ(W_i)` evaluated in floating point end to end.
    pub residual_float: Vec<f64>,
    pub x1_power: f64,
    pub x2_power: f64,
}

/// Queries, answers `A_k = Σ Q_k,m φ(W_m)` with no modulo, transmission
/// `x_k = A_k/√M`, and decoding `b_i·(√M/2)·y`. The noise sample is drawn
/// from `rng` when `noise_on`.
pub fn nokey_round_trip<R: Rng + ?Sized>(
    messages: &[Vec<i64>],
    index: usize,
    codebook: &SphereCodebook,
    noise_on: bool,
    rng: &mut R,
) -> Result<NokeyOutcome> {
    let m = messages.len();
    if m != codebook.n_msgs {
        return invalid(format!("codebook built for M = {}, got {m} messages", codebook.n_msgs));
    }
    if let Some(w) = messages.iter().find(|w| !codebook.contains(w)) {
        return invalid(format!("message {w:?} is not a sphere codeword"));
    }
    let (q1, q2, sign) = nokey_gen_queries(index, m, rng)?;
    let n = codebook.dim;
    let combine = |q: &Query| -> Vec<i64> {
        (0..n).map(|j| q.coeffs().iter().zip(messages).map(|(c, w)| c * w[j]).sum()).collect()
    };
    let (c1, c2) = (combine(&q1), combine(&q2));
    let root_m = (m as f64).sqrt();
    let x1: Vec<f64> = codebook.point(&c1).iter().map(|a| a / root_m).collect();
    let x2: Vec<f64> = codebook.point(&c2).iter().map(|a| a / root_m).collect();
    let noise = if noise_on { crate::channel::draw_noise(n, rng) } else { vec![0.0; n] };
    let y: Vec<f64> = (0..n).map(|j| x1[j] + x2[j] + noise[j]).collect();
    let y_hat: Vec<f64> = y.iter().map(|v| root_m / 2.0 * v).collect();

    let target = &messages[index];
    let residual: Vec<f64> = (0..n)
        .map(|j| {
            let signal = c1[j] + c2[j];
            debug_assert_eq!(signal % 2, 0);
            let excess = signal / 2 - sign * target[j];
            codebook.scale * excess as f64 + root_m / 2.0 * noise[j]
        })
        .collect();
    let target_pt = codebook.point(target);
    let residual_float: Vec<f64> = (0..n).map(|j| y_hat[j] - sign as f64 * target_pt[j]).collect();

    let corrected: Vec<f64> = y_hat.iter().map(|v| sign as f64 * v).collect();
    let decoded = codebook.decode(&corrected).ok();
    let correct = decoded.as_deref() == Some(target.as_slice());
    Ok(NokeyOutcome {
        sign,
        decoded,
        correct,
        noise,
        residual,
        residual_float,
        x1_power: crate::channel::power_check(&x1, f64::INFINITY).1,
        x2_power: crate::channel::power_check(&x2, f64::INFINITY).1,
    })
}

/// `½log⁺(4P/M)` for two databases, `½log⁺(N²P/M)` for `N` databases with
/// coherent combining.
pub fn nokey_rate(power: f64, n_msgs: usize, n_dbs: Option<usize>) -> f64 {
    let n = n_dbs.unwrap_or(2) as f64;
    let x = n * n * power / n_msgs as f64;
    if x > 1.0 {
        0.5 * x.log2()
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audit::plug_in_mi;
    use crate::pir::make_transmit;
    use crate::rng::stream;

    #[test]
    fn zero_mask_reduces_to_plain_transmit() {
        let pair = NestedLatticePair::for_power(3.0, 7, 3).unwrap();
        let mut rng = stream(4, 0);
        for g in [Group::One, Group::Two] {
            let w = FieldVector::random(3, 7, &mut rng).unwrap();
            let ans = form_answer(&Query::new(vec![1], g), &[w], &pair).unwrap();
            let d = pair.sample_dither(&mut rng);
            let a = make_transmit(&ans, &d, 0.6, &pair).unwrap();
            let b = spir_cr_transmit(&ans, &d, &CommonRandomness::zero(&pair), 0.6, &pair).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn mask_must_be_a_codeword() {
        let pair = NestedLatticePair::new(1, 5, 1.0).unwrap();
        let off = LatticePoint::on_lattice(&pair, vec![3.0]).unwrap();
        assert!(CommonRandomness::from_point(&pair, off).is_err());
        assert_eq!(CommonRandomness::rho(&pair), 1.0);
    }

    #[test]
    fn masked_codeword_is_uniform() {
        let pair = NestedLatticePair::new(1, 5, 1.0).unwrap();
        let lambda = pair.codeword_at(2);
        let mut seen = vec![0; 5];
        for s in pair.codebook().unwrap() {
            let y = pair.mod_reduce(&[lambda.coords()[0] + s.coords()[0]]).unwrap();
            let v = pair.decode(&y).unwrap().symbols()[0];
            seen[v as usize] += 1;
        }
        assert_eq!(seen, vec![1; 5]);
    }

    #[test]
    fn crypto_lemma_examples() {
        let p5 = NestedLatticePair::new(1, 5, 1.0).unwrap();
        let r = crypto_lemma_check(&p5, &[], MaskDistribution::Uniform).unwrap();
        assert_eq!((r.max_tv, r.mutual_information), (0.0, 0.0));
        let r = crypto_lemma_check(&p5, &[9, 1, 0, 3, 2], MaskDistribution::Uniform).unwrap();
        assert_eq!((r.max_tv, r.mutual_information), (0.0, 0.0));
        let p3 = NestedLatticePair::new(2, 3, 0.4).unwrap();
        let r = crypto_lemma_check(&p3, &[], MaskDistribution::Uniform).unwrap();
        assert_eq!(r.codebook_size, 9);
        assert_eq!(r.max_tv, 0.0);
        let r = crypto_lemma_check(&p3, &[], MaskDistribution::PointMass(4)).unwrap();
        assert!((r.max_tv - (1.0 - 1.0 / 9.0)).abs() < 1e-15);
        assert!((r.mutual_information - 9f64.log2()).abs() < 1e-12);
        assert!(crypto_lemma_check(&p5, &[1, 2], MaskDistribution::Uniform).is_err());
    }

    #[test]
    fn leakage_demo() {
        let d = leakage_example().unwrap();
        assert_eq!((d.q1.as_slice(), d.q2.as_slice()), (&[1, 1][..], &[0, -1][..]));
        assert_eq!((d.x1_plain, d.x2_plain, d.y_plain), (-2.0, -2.0, -4.0));
        assert_eq!(d.posterior_plain, vec![0.0, 0.0, 1.0, 0.0, 0.0]);
        assert_eq!(d.leaked_w2, Some(2));
        assert_eq!(d.posterior_masked, vec![0.2; 5]);
        assert_eq!((d.decoded_plain, d.decoded_masked), (1, 1));
    }

    #[test]
    fn nokey_query_examples() {
        let (q1, q2) = nokey_queries_for(1, &[true, false, true]).unwrap();
        assert_eq!(q1.coeffs(), &[1, -1, 1]);
        assert_eq!(q2.coeffs(), &[-1, -1, -1]);
        let mut rng = stream(3, 3);
        for _ in 0..200 {
            let (q1, q2, bi) = nokey_gen_queries(2, 5, &mut rng).unwrap();
            assert_eq!(q1.coeffs()[2], bi);
            assert_eq!(q2.coeffs()[2], bi);
            for j in 0..5 {
                let expect = if j == 2 { 2 * bi } else { 0 };
                assert_eq!(q1.coeffs()[j] + q2.coeffs()[j], expect);
                assert!(q2.coeffs()[j].abs() == 1);
            }
        }
        assert!(nokey_gen_queries(5, 5, &mut rng).is_err());
    }

    #[test]
    fn ball_volumes() {
        let pi = std::f64::consts::PI;
        assert_eq!(unit_ball_volume(1), 2.0);
        assert!((unit_ball_volume(2) - pi).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 * pi / 3.0).abs() < 1e-14);
        assert!((unit_ball_volume(4) - pi * pi / 2.0).abs() < 1e-14);
    }

    #[test]
    fn sphere_codebook_rates() {
        for (n, p, m) in [(1, 4.0, 4), (3, 10.0, 2), (8, 30.0, 8), (24, 5.0, 3)] {
            let cb = SphereCodebook::new(n, p, m).unwrap();
            assert!((cb.rate_bits() - cb.volume_rate_bits()).abs() < 1e-12);
        }
        // Lattice-point count approaches the volume ratio.
        let cb = SphereCodebook::new(3, 400.0, 2).unwrap();
        let predicted = (4.0f64 * 400.0 / 2.0).powf(1.5);
        let count = cb.count().unwrap() as f64;
        assert!((count / predicted - 1.0).abs() < 0.05, "{count} vs {predicted}");
    }

    #[test]
    fn sphere_sampling_and_decoding() {
        let cb = SphereCodebook::new(2, 50.0, 2).unwrap();
        let mut rng = stream(8, 0);
        for _ in 0..1000 {
            let k = cb.sample(&mut rng).unwrap();
            assert!(cb.contains(&k));
            assert_eq!(cb.decode(&cb.point(&k)).unwrap(), k);
        }
        assert!(cb.decode(&[1e6, 0.0]).is_err());
    }

    fn random_messages(cb: &SphereCodebook, m: usize, rng: &mut crate::rng::SimRng) -> Vec<Vec<i64>> {
        (0..m).map(|_| cb.sample(rng).unwrap()).collect()
    }

    #[test]
    fn nokey_noiseless_exact() {
        for m in [2usize, 4, 8] {
            let cb = SphereCodebook::new(4, 40.0, m).unwrap();
            let mut rng = stream(m as u64, 1);
            for t in 0..200 {
                let msgs = random_messages(&cb, m, &mut rng);
                let i = t % m;
                let out = nokey_round_trip(&msgs, i, &cb, false, &mut rng).unwrap();
                assert!(out.correct);
                assert_eq!(out.decoded.as_ref(), Some(&msgs[i]));
                assert!(out.residual.iter().all(|&r| r == 0.0));
            }
        }
    }

    #[test]
    fn nokey_residual_is_the_noise() {
        let m = 8;
        let cb = SphereCodebook::new(6, 20.0, m).unwrap();
        let mut rng = stream(5, 5);
        let root_m = (m as f64).sqrt();
        for _ in 0..500 {
            let msgs = random_messages(&cb, m, &mut rng);
            let out = nokey_round_trip(&msgs, 3, &cb, true, &mut rng).unwrap();
            for (r, z) in out.residual.iter().zip(&out.noise) {
                assert_eq!(r.to_bits(), (root_m / 2.0 * z).to_bits());
            }
            for (r, z) in out.residual_float.iter().zip(&out.noise) {
                assert!((r - root_m / 2.0 * z).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn nokey_power_and_residual_independence() {
        let (p, m) = (10.0, 4);
        let cb = SphereCodebook::new(2, p, m).unwrap();
        let mut rng = stream(6, 0);
        let trials = 100_000;
        let (mut pw1, mut pw2, mut pairs) = (0.0, 0.0, Vec::with_capacity(trials));
        for t in 0..trials {
            let msgs = random_messages(&cb, m, &mut rng);
            let out = nokey_round_trip(&msgs, 0, &cb, true, &mut rng).unwrap();
            if t < 10_000 {
                pw1 += out.x1_power;
                pw2 += out.x2_power;
            }
            let other = (msgs[1][0].rem_euclid(8)) as u64;
            let bin = ((out.residual[0] / 2.0).floor().clamp(-4.0, 3.0) + 4.0) as u64;
            pairs.push((other, bin));
        }
        assert!(pw1 / 10_000.0 <= p * 1.02, "{}", pw1 / 10_000.0);
        assert!(pw2 / 10_000.0 <= p * 1.02, "{}", pw2 / 10_000.0);
        assert!(plug_in_mi(&pairs).unwrap().estimate < 0.01);
    }

    #[test]
    fn nokey_rate_examples() {
        assert_eq!(nokey_rate(4.0, 4, None), 1.0);
        assert_eq!(nokey_rate(1.0, 4, None), 0.0);
        assert_eq!(nokey_rate(8.0, 2, Some(2)), 2.0);
        assert_eq!(nokey_rate(1.0, 2, Some(4)), 1.5);
    }
}
