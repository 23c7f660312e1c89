//! Two-group lattice PIR over the fading MAC.
//!
//! The user sends `Q1 = b` to group 1 and `Q2 = −b ∓ e_i` to group 2, so the
//! two answers add up to `±W_i` over `F_p`. Each group dithers its answer
//! codeword, group 2 scales down to match the weaker group, and the user
//! decodes on the resulting modulo-lattice additive noise channel.
//!
//! Message indices are 0-based. A retrieval of `L = k·n` symbols runs `k`
//! iterations, one lattice codeword per iteration.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{draw_fading, transmit_mac, ChannelState};
use crate::error::{invalid, Error, Result};
use crate::lattice::{FieldVector, LatticeKind, LatticePoint, NestedLatticePair};
use crate::partition::{partition, PartitionMethod};
use crate::rng::{stream, SimRng};
use crate::spir::{spir_cr_transmit, CommonRandomness};

/// Database group addressed by a query.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Group {
    One,
    Two,
}

/// Integer coefficients sent to every database of one group.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Query {
    coeffs: Vec<i64>,
    group: Group,
}

impl Query {
    pub fn new(coeffs: Vec<i64>, group: Group) -> Self {
        Self { coeffs, group }
    }

    pub fn coeffs(&self) -> &[i64] {
        &self.coeffs
    }

    pub fn group(&self) -> Group {
        self.group
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }
}

/// Queries for message `index` given the random vector `b`.
pub fn queries_for(index: usize, b: &[bool]) -> Result<(Query, Query)> {
    if index >= b.len() {
        return invalid(format!("message index {index} out of range for M = {}", b.len()));
    }
    let q1: Vec<i64> = b.iter().map(|&x| x as i64).collect();
    let mut q2: Vec<i64> = q1.iter().map(|x| -x).collect();
    q2[index] += if b[index] { 1 } else { -1 };
    Ok((Query::new(q1, Group::One), Query::new(q2, Group::Two)))
}

/// Draws `b` uniformly and builds the queries. The returned flag is `b_i`;
/// `Q1 + Q2 = +e_i` when it is set and `−e_i` otherwise.
pub fn gen_queries<R: Rng + ?Sized>(index: usize, n_msgs: usize, rng: &mut R) -> Result<(Query, Query, bool)> {
    if index >= n_msgs {
        return invalid(format!("message index {index} out of range for M = {n_msgs}"));
    }
    let b: Vec<bool> = (0..n_msgs).map(|_| rng.random()).collect();
    let (q1, q2) = queries_for(index, &b)?;
    Ok((q1, q2, b[index]))
}

/// A group's answer: the field combination and its codeword.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnswerState {
    raw_combo: FieldVector,
    codeword: LatticePoint,
    group: Group,
}

impl AnswerState {
    pub fn raw_combo(&self) -> &FieldVector {
        &self.raw_combo
    }

    pub fn codeword(&self) -> &LatticePoint {
        &self.codeword
    }

    pub fn group(&self) -> Group {
        self.group
    }
}

/// `A = Σ Q_m W_m` over `F_p`, mapped to the codebook.
pub fn form_answer(query: &Query, messages: &[FieldVector], pair: &NestedLatticePair) -> Result<AnswerState> {
    if messages.len() != query.len() {
        return invalid(format!("query of length {} for {} messages", query.len(), messages.len()));
    }
    let mut acc = FieldVector::zeros(pair.dim(), pair.prime())?;
    for (w, &q) in messages.iter().zip(query.coeffs()) {
        if w.len() != pair.dim() || w.prime() != pair.prime() {
            return invalid(format!(
                "message chunk over F_{} of length {} does not fit the lattice (p = {}, n = {})",
                w.prime(),
                w.len(),
                pair.prime(),
                pair.dim()
            ));
        }
        if q != 0 {
            acc = acc.add_scaled(w, q)?;
        }
    }
    let codeword = pair.encode(&acc)?;
    Ok(AnswerState { raw_combo: acc, codeword, group: query.group() })
}

/// A real block sent by every database of one group.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransmitBlock {
    block: Vec<f64>,
    group: Group,
    scale: f64,
}

impl TransmitBlock {
    pub(crate) fn new(block: Vec<f64>, group: Group, scale: f64) -> Self {
        Self { block, group, scale }
    }

    pub fn block(&self) -> &[f64] {
        &self.block
    }

    pub fn group(&self) -> Group {
        self.group
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Average power `‖x‖²/n`.
    pub fn power(&self) -> f64 {
        crate::channel::power_check(&self.block, f64::INFINITY).1
    }
}

pub(crate) fn check_scale(scale: f64) -> Result<()> {
    if !(scale > 0.0 && scale <= 1.0) {
        return invalid(format!("transmit scale must lie in (0, 1], got {scale}"));
    }
    Ok(())
}

/// `scale · [λ − d] mod Λ_c`.
pub fn make_transmit(
    answer: &AnswerState,
    dither: &[f64],
    scale: f64,
    pair: &NestedLatticePair,
) -> Result<TransmitBlock> {
    check_scale(scale)?;
    if dither.len() != pair.dim() {
        return invalid(format!("dither of length {} for dimension {}", dither.len(), pair.dim()));
    }
    let diff: Vec<f64> = answer.codeword.coords().iter().zip(dither).map(|(l, d)| l - d).collect();
    let block = pair.mod_reduce(&diff)?.into_iter().map(|x| scale * x).collect();
    Ok(TransmitBlock::new(block, answer.group, scale))
}

/// Scaling coefficient and equivalent noise second moment for noise
/// variance `noise_var`: `α = 2P/(2P + N0/h̃1²)`. With `noise_var = 0`
/// this gives `α = 1` and no equivalent noise.
pub fn alpha_mmse(power: f64, gain1: f64, noise_var: f64) -> Result<(f64, f64)> {
    if !(power > 0.0 && power.is_finite()) {
        return invalid(format!("power must be positive, got {power}"));
    }
    if !(gain1 > 0.0 && gain1.is_finite()) {
        return Err(Error::DegenerateChannel(format!("effective gain h̃1 = {gain1}")));
    }
    if !(noise_var >= 0.0 && noise_var.is_finite()) {
        return invalid(format!("noise variance must be nonnegative, got {noise_var}"));
    }
    let n = noise_var / (gain1 * gain1);
    let denom = 2.0 * power + n;
    Ok((2.0 * power / denom, 2.0 * power * n / denom))
}

/// `(α, σ²_opt)` for unit noise variance.
pub fn alpha_opt(power: f64, gain1: f64) -> Result<(f64, f64)> {
    alpha_mmse(power, gain1, 1.0)
}

/// Second moment of the equivalent noise for an arbitrary `α`:
/// `2P(1−α)² + α²/h̃1²`.
pub fn equivalent_noise(power: f64, gain1: f64, alpha: f64) -> f64 {
    2.0 * power * (1.0 - alpha).powi(2) + alpha * alpha / (gain1 * gain1)
}

/// Decoder output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlanDecode {
    /// Nearest codeword to `raw`.
    pub estimate: LatticePoint,
    /// `±[α y/h̃1 + d1 + d2] mod Λ_c`, sign-corrected.
    pub raw: Vec<f64>,
    /// `[raw − estimate] mod Λ_c`.
    pub residual: Vec<f64>,
}

/// Modulo-lattice decoder. When `sign_bit` is clear the combination carries
/// `−W_i` and the modulo output is negated before quantizing.
pub fn decode_mlan(
    y: &[f64],
    gain1: f64,
    alpha: f64,
    d1: &[f64],
    d2: &[f64],
    sign_bit: bool,
    pair: &NestedLatticePair,
) -> Result<MlanDecode> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return invalid(format!("α must lie in (0, 1], got {alpha}"));
    }
    if !(gain1 > 0.0 && gain1.is_finite()) {
        return Err(Error::DegenerateChannel(format!("effective gain h̃1 = {gain1}")));
    }
    let n = pair.dim();
    if y.len() != n || d1.len() != n || d2.len() != n {
        return invalid("decoder inputs must all have the lattice dimension");
    }
    let pre: Vec<f64> = (0..n).map(|j| alpha * y[j] / gain1 + d1[j] + d2[j]).collect();
    let mut raw = pair.mod_reduce(&pre)?;
    if !sign_bit {
        let neg: Vec<f64> = raw.iter().map(|x| -x).collect();
        raw = pair.mod_reduce(&neg)?;
    }
    let q = pair.quantize(&raw, LatticeKind::Fine)?;
    let estimate = LatticePoint::on_lattice(pair, pair.mod_reduce(q.coords())?)?;
    let diff: Vec<f64> = raw.iter().zip(estimate.coords()).map(|(r, e)| r - e).collect();
    let residual = pair.mod_reduce(&diff)?;
    Ok(MlanDecode { estimate, raw, residual })
}

/// Which variant of the two-group scheme to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LatticeScheme {
    Pir,
    /// Common randomness drawn uniformly from the codebook each iteration.
    SpirCr,
    /// Common randomness path with `S = 0`; behaves exactly like `Pir`.
    SpirCrZero,
}

/// Choice of the decoder's scaling coefficient.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum AlphaRule {
    /// MMSE value for the actual noise level (`α = 1` when noise is off).
    Mmse,
    Fixed(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RetrievalOptions {
    pub scheme: LatticeScheme,
    pub noise_on: bool,
    pub dithers_on: bool,
    pub alpha: AlphaRule,
}

impl Default for RetrievalOptions {
    fn default() -> Self {
        Self { scheme: LatticeScheme::Pir, noise_on: true, dithers_on: true, alpha: AlphaRule::Mmse }
    }
}

/// Where each iteration's channel comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum ChannelPlan {
    /// One realization for the whole retrieval.
    Fixed(ChannelState),
    /// Fresh fading and partition every iteration.
    BlockFading { n_dbs: usize, power: f64, method: PartitionMethod },
}

/// One iteration of a retrieval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub fading: Vec<f64>,
    pub s1: Vec<usize>,
    pub s2: Vec<usize>,
    pub gain1: f64,
    pub gain2: f64,
    pub alpha: f64,
    /// `‖z_eq‖²/n` with `z_eq = [raw − v] mod Λ_c` against the true codeword.
    pub sigma2_eq: f64,
    /// Closed-form equivalent-noise moment for this channel and `α`.
    pub sigma2_theory: f64,
    pub x1_power: f64,
    pub x2_power: f64,
    pub x1: Vec<f64>,
    pub x2_unscaled: Vec<f64>,
    pub y: Vec<f64>,
    pub z_eq: Vec<f64>,
    pub decoded: Vec<u64>,
    pub symbol_errors: usize,
}

/// Everything recorded during one retrieval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RetrievalTrace {
    pub seed: u64,
    pub index: usize,
    pub sign_bit: bool,
    pub q1: Query,
    pub q2: Query,
    pub iterations: Vec<IterationRecord>,
}

#[derive(Serialize)]
struct TraceLine<'a> {
    seed: u64,
    iteration: usize,
    h: &'a [f64],
    s1: &'a [usize],
    s2: &'a [usize],
    alpha: f64,
    sigma2_eq: f64,
    symbol_errors: usize,
    decoded_ok: bool,
}

impl RetrievalTrace {
    /// One JSON record per iteration.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for it in &self.iterations {
            let line = TraceLine {
                seed: self.seed,
                iteration: it.iteration,
                h: &it.fading,
                s1: &it.s1,
                s2: &it.s2,
                alpha: it.alpha,
                sigma2_eq: it.sigma2_eq,
                symbol_errors: it.symbol_errors,
                decoded_ok: it.symbol_errors == 0,
            };
            serde_json::to_writer(&mut out, &line)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Mean of the per-iteration `σ²_eq` estimates.
    pub fn mean_sigma2_eq(&self) -> f64 {
        self.iterations.iter().map(|r| r.sigma2_eq).sum::<f64>() / self.iterations.len() as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RetrievalOutcome {
    pub decoded: FieldVector,
    pub symbol_errors: usize,
    pub symbols: usize,
    pub trace: RetrievalTrace,
}

impl RetrievalOutcome {
    pub fn symbol_error_rate(&self) -> f64 {
        self.symbol_errors as f64 / self.symbols as f64
    }
}

/// Independent sub-streams of one retrieval.
pub(crate) struct RetrievalStreams {
    pub queries: SimRng,
    pub dithers: SimRng,
    pub noise: SimRng,
    pub common: SimRng,
    pub fading: SimRng,
}

impl RetrievalStreams {
    pub(crate) fn new(seed: u64) -> Self {
        Self {
            queries: stream(seed, 0),
            dithers: stream(seed, 1),
            noise: stream(seed, 2),
            common: stream(seed, 3),
            fading: stream(seed, 4),
        }
    }
}

pub(crate) fn check_messages(messages: &[FieldVector], pair: &NestedLatticePair) -> Result<usize> {
    let first = messages.first().ok_or_else(|| Error::InvalidInput("no messages".into()))?;
    let len = first.len();
    if messages.iter().any(|m| m.len() != len || m.prime() != pair.prime()) {
        return invalid("messages must share one length and the lattice prime");
    }
    if len == 0 || len % pair.dim() != 0 {
        return invalid(format!("message length {len} is not a positive multiple of n = {}", pair.dim()));
    }
    Ok(len / pair.dim())
}

/// Retrieves `messages[index]`. All randomness derives from `seed`: queries,
/// the public dither stream, channel noise, the databases' common randomness
/// and (for block fading) the channel each use their own sub-stream.
pub fn run_retrieval(
    messages: &[FieldVector],
    index: usize,
    plan: &ChannelPlan,
    pair: &NestedLatticePair,
    options: &RetrievalOptions,
    seed: u64,
) -> Result<RetrievalOutcome> {
    let k = check_messages(messages, pair)?;
    let n = pair.dim();
    let mut rs = RetrievalStreams::new(seed);
    let (q1, q2, sign_bit) = gen_queries(index, messages.len(), &mut rs.queries)?;
    let mut records = Vec::with_capacity(k);
    let mut decoded_chunks = Vec::with_capacity(k);
    let mut errors = 0;
    for it in 0..k {
        let channel = match plan {
            ChannelPlan::Fixed(c) => c.clone(),
            ChannelPlan::BlockFading { n_dbs, power, method } => {
                let h = draw_fading(*n_dbs, &mut rs.fading)?;
                let w: Vec<f64> = h.iter().map(|x| x.abs()).collect();
                let part = partition(&w, *method, &mut rs.fading)?;
                ChannelState::new(h, *power, part)?
            }
        };
        let chunks: Vec<FieldVector> = messages.iter().map(|m| m.chunk(it * n, n)).collect::<Result<_>>()?;
        let a1 = form_answer(&q1, &chunks, pair)?;
        let a2 = form_answer(&q2, &chunks, pair)?;
        let (d1, d2) = if options.dithers_on {
            (pair.sample_dither(&mut rs.dithers), pair.sample_dither(&mut rs.dithers))
        } else {
            (vec![0.0; n], vec![0.0; n])
        };
        let (g1, g2) = (channel.gain1(), channel.gain2());
        let scale2 = g1 / g2;
        let (x1, x2) = match options.scheme {
            LatticeScheme::Pir => (make_transmit(&a1, &d1, 1.0, pair)?, make_transmit(&a2, &d2, scale2, pair)?),
            LatticeScheme::SpirCr | LatticeScheme::SpirCrZero => {
                let s = if options.scheme == LatticeScheme::SpirCr {
                    CommonRandomness::fresh(pair, &mut rs.common)
                } else {
                    CommonRandomness::zero(pair)
                };
                (
                    spir_cr_transmit(&a1, &d1, &s, 1.0, pair)?,
                    spir_cr_transmit(&a2, &d2, &s, scale2, pair)?,
                )
            }
        };
        let y = transmit_mac(&channel.weighted_blocks(x1.block(), x2.block()), options.noise_on, &mut rs.noise)?;
        let noise_var = if options.noise_on { 1.0 } else { 0.0 };
        let alpha = match options.alpha {
            AlphaRule::Mmse => alpha_mmse(channel.power(), g1, noise_var)?.0,
            AlphaRule::Fixed(a) => a,
        };
        let dec = decode_mlan(&y, g1, alpha, &d1, &d2, sign_bit, pair)?;
        let truth = pair.encode(&chunks[index])?;
        let diff: Vec<f64> = dec.raw.iter().zip(truth.coords()).map(|(r, v)| r - v).collect();
        let z_eq = pair.mod_reduce(&diff)?;
        let decoded = pair.decode(dec.estimate.coords())?;
        let sym_err = decoded.symbols().iter().zip(chunks[index].symbols()).filter(|(a, b)| a != b).count();
        errors += sym_err;
        records.push(IterationRecord {
            iteration: it,
            fading: channel.fading().to_vec(),
            s1: channel.partition().s1().to_vec(),
            s2: channel.partition().s2().to_vec(),
            gain1: g1,
            gain2: g2,
            alpha,
            sigma2_eq: z_eq.iter().map(|z| z * z).sum::<f64>() / n as f64,
            sigma2_theory: 2.0 * channel.power() * (1.0 - alpha).powi(2) + alpha * alpha * noise_var / (g1 * g1),
            x1_power: x1.power(),
            x2_power: x2.power(),
            x1: x1.block().to_vec(),
            x2_unscaled: x2.block().iter().map(|x| x / scale2).collect(),
            y,
            z_eq,
            decoded: decoded.symbols().to_vec(),
            symbol_errors: sym_err,
        });
        decoded_chunks.push(decoded);
    }
    Ok(RetrievalOutcome {
        decoded: FieldVector::concat(&decoded_chunks)?,
        symbol_errors: errors,
        symbols: k * n,
        trace: RetrievalTrace { seed, index, sign_bit, q1, q2, iterations: records },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audit::plug_in_mi;
    use crate::partition::partition_exact;
    use crate::rates::r_eq;
    use proptest::prelude::*;
    use rand::Rng;

    fn toy_pair() -> NestedLatticePair {
        NestedLatticePair::new(1, 5, 1.0).unwrap()
    }

    fn fv(s: &[u64], p: u64) -> FieldVector {
        FieldVector::new(s.to_vec(), p).unwrap()
    }

    fn random_messages(m: usize, len: usize, p: u64, seed: u64) -> Vec<FieldVector> {
        let mut rng = stream(seed, 99);
        (0..m).map(|_| FieldVector::random(len, p, &mut rng).unwrap()).collect()
    }

    fn exact_channel(n_dbs: usize, power: f64, seed: u64) -> ChannelState {
        let h = draw_fading(n_dbs, &mut stream(seed, 7)).unwrap();
        let w: Vec<f64> = h.iter().map(|x| x.abs()).collect();
        ChannelState::new(h, power, partition_exact(&w).unwrap()).unwrap()
    }

    #[test]
    fn query_examples() {
        let (q1, q2) = queries_for(1, &[true, true]).unwrap();
        assert_eq!((q1.coeffs(), q2.coeffs()), (&[1, 1][..], &[-1, 0][..]));
        let (q1, q2) = queries_for(0, &[true, true]).unwrap();
        assert_eq!((q1.coeffs(), q2.coeffs()), (&[1, 1][..], &[0, -1][..]));
        assert!(queries_for(2, &[true, true]).is_err());
        assert!(gen_queries(3, 3, &mut stream(0, 0)).is_err());
    }

    #[test]
    fn query_sum_and_ranges() {
        let mut rng = stream(1, 0);
        for _ in 0..500 {
            let m = rng.random_range(1..10);
            let i = rng.random_range(0..m);
            let (q1, q2, bi) = gen_queries(i, m, &mut rng).unwrap();
            assert!(q1.coeffs().iter().all(|&c| c == 0 || c == 1));
            assert!(q2.coeffs().iter().all(|&c| c == 0 || c == -1));
            for j in 0..m {
                let s = q1.coeffs()[j] + q2.coeffs()[j];
                let expect = if j == i { if bi { 1 } else { -1 } } else { 0 };
                assert_eq!(s, expect);
            }
        }
    }

    #[test]
    fn answer_examples() {
        let pair = toy_pair();
        let w = [fv(&[1], 5), fv(&[2], 5)];
        let a = form_answer(&Query::new(vec![1, 1], Group::One), &w, &pair).unwrap();
        assert_eq!(a.raw_combo().symbols(), &[3]);
        assert_eq!(a.codeword().coords(), &[-2.0]);
        let a = form_answer(&Query::new(vec![0, 0], Group::One), &w, &pair).unwrap();
        assert_eq!(a.codeword().coords(), &[0.0]);
        let a = form_answer(&Query::new(vec![0, -1], Group::Two), &w, &pair).unwrap();
        assert_eq!(a.raw_combo().symbols(), &[3]);
        assert_eq!(a.codeword().coords(), &[-2.0]);
        assert!(form_answer(&Query::new(vec![1], Group::One), &w, &pair).is_err());
    }

    #[test]
    fn cancellation_identity_exhaustive() {
        let p = 5u64;
        let pair = toy_pair();
        for m in 1..=3usize {
            let total = p.pow(m as u32);
            for code in 0..total {
                let w: Vec<FieldVector> = (0..m).map(|j| fv(&[(code / p.pow(j as u32)) % p], p)).collect();
                for bits in 0..(1u32 << m) {
                    let b: Vec<bool> = (0..m).map(|j| bits & (1 << j) != 0).collect();
                    for i in 0..m {
                        let (q1, q2) = queries_for(i, &b).unwrap();
                        let a1 = form_answer(&q1, &w, &pair).unwrap();
                        let a2 = form_answer(&q2, &w, &pair).unwrap();
                        let sum = a1.raw_combo().add(a2.raw_combo()).unwrap();
                        let expect = if b[i] { w[i].clone() } else { w[i].neg() };
                        assert_eq!(sum, expect);
                    }
                }
            }
        }
    }

    #[test]
    fn transmit_basics() {
        let pair = NestedLatticePair::for_power(3.0, 7, 2).unwrap();
        let ans = form_answer(&Query::new(vec![1], Group::One), &[fv(&[3, 5], 7)], &pair).unwrap();
        let x = make_transmit(&ans, &[0.0, 0.0], 1.0, &pair).unwrap();
        assert_eq!(x.block(), ans.codeword().coords());
        assert!(make_transmit(&ans, &[0.0, 0.0], 0.0, &pair).is_err());
        assert!(make_transmit(&ans, &[0.0, 0.0], 1.5, &pair).is_err());
        assert!(make_transmit(&ans, &[0.0], 1.0, &pair).is_err());
    }

    #[test]
    fn dithered_block_is_uniform_and_independent_of_codeword() {
        let pair = NestedLatticePair::for_power(2.0, 5, 1).unwrap();
        let half = pair.coarse_step() / 2.0;
        let mut rng = stream(12, 0);
        let samples = 100_000;
        let mut xs = Vec::with_capacity(samples);
        let mut pairs = Vec::with_capacity(samples);
        for _ in 0..samples {
            let w = FieldVector::random(1, 5, &mut rng).unwrap();
            let ans = form_answer(&Query::new(vec![1], Group::One), std::slice::from_ref(&w), &pair).unwrap();
            let d = pair.sample_dither(&mut rng);
            let x = make_transmit(&ans, &d, 1.0, &pair).unwrap().block()[0];
            assert!((-half..half).contains(&x));
            let bin = (((x + half) / (2.0 * half)) * 8.0).floor().min(7.0) as u64;
            xs.push(x);
            pairs.push((w.symbols()[0], bin));
        }
        // Kolmogorov–Smirnov against U[-half, half), 1% critical value.
        xs.sort_by(f64::total_cmp);
        let nf = samples as f64;
        let ks = xs
            .iter()
            .enumerate()
            .map(|(k, &x)| {
                let f = (x + half) / (2.0 * half);
                (f - k as f64 / nf).abs().max(((k + 1) as f64 / nf - f).abs())
            })
            .fold(0.0, f64::max);
        assert!(ks < 1.63 / nf.sqrt(), "KS statistic {ks}");
        let mi = plug_in_mi(&pairs).unwrap();
        assert!(mi.estimate < 0.01, "MI {}", mi.estimate);
    }

    #[test]
    fn alpha_examples() {
        let (a, s) = alpha_opt(1.0, 1.0).unwrap();
        assert!((a - 2.0 / 3.0).abs() < 1e-15 && (s - 2.0 / 3.0).abs() < 1e-15);
        assert!(alpha_opt(1e12, 1.0).unwrap().0 > 1.0 - 1e-11);
        assert!(matches!(alpha_opt(1.0, 0.0), Err(Error::DegenerateChannel(_))));
        assert_eq!(alpha_mmse(3.0, 0.7, 0.0).unwrap(), (1.0, 0.0));
    }

    #[test]
    fn decode_toy_example() {
        let pair = toy_pair();
        let dec = decode_mlan(&[-4.0], 1.0, 1.0, &[0.0], &[0.0], true, &pair).unwrap();
        assert_eq!(dec.estimate.coords(), &[1.0]);
        assert_eq!(pair.decode(dec.estimate.coords()).unwrap().symbols(), &[1]);
        assert!(decode_mlan(&[-4.0], 1.0, 0.0, &[0.0], &[0.0], true, &pair).is_err());
    }

    #[test]
    fn noiseless_retrieval_is_exact() {
        for (scheme, seed) in [(LatticeScheme::Pir, 1), (LatticeScheme::SpirCr, 2), (LatticeScheme::SpirCrZero, 3)] {
            let pair = NestedLatticePair::for_power(10.0, 13, 4).unwrap();
            let msgs = random_messages(5, 40, 13, seed);
            let opts = RetrievalOptions { scheme, noise_on: false, ..Default::default() };
            for index in 0..5 {
                let plan = ChannelPlan::BlockFading { n_dbs: 6, power: 10.0, method: PartitionMethod::Differencing };
                let out = run_retrieval(&msgs, index, &plan, &pair, &opts, seed * 10 + index as u64).unwrap();
                assert_eq!(out.symbol_errors, 0);
                assert_eq!(out.decoded, msgs[index]);
                assert_eq!(out.trace.iterations.len(), 10);
            }
        }
    }

    #[test]
    fn zero_common_randomness_matches_pir() {
        let pair = NestedLatticePair::for_power(5.0, 7, 2).unwrap();
        let msgs = random_messages(3, 20, 7, 4);
        let plan = ChannelPlan::BlockFading { n_dbs: 4, power: 5.0, method: PartitionMethod::Exact };
        let a = run_retrieval(&msgs, 1, &plan, &pair, &RetrievalOptions::default(), 8).unwrap();
        let opts = RetrievalOptions { scheme: LatticeScheme::SpirCrZero, ..Default::default() };
        let b = run_retrieval(&msgs, 1, &plan, &pair, &opts, 8).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn retrieval_input_errors() {
        let pair = NestedLatticePair::for_power(5.0, 7, 2).unwrap();
        let plan = ChannelPlan::Fixed(exact_channel(4, 5.0, 1));
        let opts = RetrievalOptions::default();
        assert!(run_retrieval(&random_messages(3, 3, 7, 1), 0, &plan, &pair, &opts, 0).is_err());
        assert!(run_retrieval(&random_messages(3, 4, 7, 1), 3, &plan, &pair, &opts, 0).is_err());
        assert!(run_retrieval(&random_messages(3, 4, 5, 1), 0, &plan, &pair, &opts, 0).is_err());
        assert!(run_retrieval(&[], 0, &plan, &pair, &opts, 0).is_err());
    }

    #[test]
    fn rate_consistency_with_alpha() {
        for (g, p) in [(1.0, 1.0), (0.8, 5.0), (2.5, 100.0), (0.3, 40.0)] {
            let (_, s) = alpha_opt(p, g).unwrap();
            assert!((r_eq(g, p) - 0.5 * (p / s).log2()).abs() < 1e-12);
        }
    }

    #[test]
    fn equivalent_noise_law_small() {
        let (power, prime, n) = (20.0, 31, 1024);
        let pair = NestedLatticePair::for_power(power, prime, n).unwrap();
        let channel = ChannelState::from_groups(vec![1.1, -0.9, 1.6], power, vec![0, 1], vec![2]).unwrap();
        let msgs = random_messages(3, n * 20, prime, 5);
        let out =
            run_retrieval(&msgs, 2, &ChannelPlan::Fixed(channel.clone()), &pair, &RetrievalOptions::default(), 3)
                .unwrap();
        let (_, s_opt) = alpha_opt(power, channel.gain1()).unwrap();
        let est = out.trace.mean_sigma2_eq();
        assert!((est / s_opt - 1.0).abs() < 0.05, "{est} vs {s_opt}");
        for it in &out.trace.iterations {
            assert!((it.sigma2_theory - s_opt).abs() < 1e-12);
            assert!((equivalent_noise(power, channel.gain1(), it.alpha) - s_opt).abs() < 1e-12);
        }
    }

    #[test]
    fn symbol_error_rate_at_operating_point() {
        let pair = NestedLatticePair::for_power(100.0, 11, 1).unwrap();
        let msgs = random_messages(2, 10_000, 11, 6);
        let plan = ChannelPlan::BlockFading { n_dbs: 8, power: 100.0, method: PartitionMethod::Exact };
        let out = run_retrieval(&msgs, 0, &plan, &pair, &RetrievalOptions::default(), 17).unwrap();
        assert!(out.symbol_error_rate() < 1e-2, "SER {}", out.symbol_error_rate());
    }

    #[test]
    fn trace_jsonl() {
        let pair = NestedLatticePair::for_power(5.0, 7, 1).unwrap();
        let msgs = random_messages(2, 6, 7, 1);
        let plan = ChannelPlan::Fixed(exact_channel(3, 5.0, 2));
        let out = run_retrieval(&msgs, 0, &plan, &pair, &RetrievalOptions::default(), 4).unwrap();
        let mut buf = Vec::new();
        out.trace.write_jsonl(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 6);
        let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(first["seed"], 4);
        assert!(first["alpha"].as_f64().unwrap() > 0.0);
    }

    #[test]
    fn dithered_power_is_close_to_p() {
        let power = 4.0;
        let pair = NestedLatticePair::for_power(power, 17, 64).unwrap();
        let msgs = random_messages(2, 64 * 10_000, 17, 8);
        let plan = ChannelPlan::BlockFading { n_dbs: 4, power, method: PartitionMethod::Exact };
        let out = run_retrieval(&msgs, 1, &plan, &pair, &RetrievalOptions::default(), 2).unwrap();
        let mean = out.trace.iterations.iter().map(|r| r.x1_power).sum::<f64>() / 10_000.0;
        assert!(mean <= power * 1.02, "{mean}");
        assert!((mean / power - 1.0).abs() < 0.02);
        let mean2 = out.trace.iterations.iter().map(|r| r.x2_power).sum::<f64>() / 10_000.0;
        assert!(mean2 <= power * 1.02, "{mean2}");
    }

    proptest! {
        #[test]
        fn noiseless_small_self_noise_decodes(alpha in prop::sample::select(vec![0.5, 0.9, 1.0]), seed in 0u64..500) {
            let pair = NestedLatticePair::for_power(10.0, 11, 1).unwrap();
            let msgs = random_messages(3, 8, 11, seed);
            let channel = exact_channel(4, 10.0, seed);
            let opts = RetrievalOptions { noise_on: false, alpha: AlphaRule::Fixed(alpha), ..Default::default() };
            let out = run_retrieval(&msgs, 1, &ChannelPlan::Fixed(channel), &pair, &opts, seed).unwrap();
            for it in &out.trace.iterations {
                let inside = it.z_eq.iter().all(|z| z.abs() < pair.scale() / 2.0 - 1e-9);
                if inside {
                    prop_assert_eq!(it.symbol_errors, 0);
                }
            }
        }
    }
}
