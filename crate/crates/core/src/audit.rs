//! Privacy audits.
//!
//! Exact audits enumerate every random choice of a small instance (one
//! lattice dimension, a handful of messages) and compare integer counts, so a
//! private scheme scores exactly zero. Noise is left out of these
//! enumerations: the user's noisy output is a degraded version of the
//! noiseless one, so zero leakage without noise implies zero leakage with it.
//! Dithers are drawn uniformly from the codebook in the enumerations, which
//! keeps them finite while preserving the uniform-masking property.
//!
//! Sampled audits use a plug-in mutual information estimator and a
//! chi-square test on query bit frequencies.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{invalid, Error, Result};
use crate::lattice::{centered_residue, FieldVector, NestedLatticePair, ENUMERATION_BUDGET};
use crate::pir::{form_answer, make_transmit, queries_for, Query};
use crate::rng::stream;
use crate::spir::{nokey_queries_for, nokey_round_trip, spir_cr_transmit, CommonRandomness, SphereCodebook};

/// Integer joint counts of two discrete variables.
pub type Joint<A, B> = BTreeMap<(A, B), u128>;

/// The three retrieval schemes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Pir,
    SpirCr,
    SpirNokey,
}

impl Scheme {
    pub fn label(self) -> &'static str {
        match self {
            Scheme::Pir => "pir",
            Scheme::SpirCr => "spir-cr",
            Scheme::SpirNokey => "spir-nokey",
        }
    }

    pub const ALL: [Scheme; 3] = [Scheme::Pir, Scheme::SpirCr, Scheme::SpirNokey];
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pir" => Ok(Scheme::Pir),
            "spir-cr" | "spir_cr" => Ok(Scheme::SpirCr),
            "spir-nokey" | "spir_nokey" => Ok(Scheme::SpirNokey),
            other => invalid(format!("unknown scheme '{other}'")),
        }
    }
}

/// Result of one audit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditVerdict {
    pub name: String,
    pub statistic: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
    pub samples: u64,
    /// Computed by enumeration, without sampling error.
    pub exact: bool,
    /// Counted toward the overall pass/fail.
    pub mandatory: bool,
}

impl AuditVerdict {
    /// Passes iff `value` is exactly zero.
    pub fn exact_zero(name: &str, statistic: &str, value: f64, samples: u64) -> Self {
        Self {
            name: name.into(),
            statistic: statistic.into(),
            value,
            threshold: 0.0,
            pass: value == 0.0,
            samples,
            exact: true,
            mandatory: true,
        }
    }

    /// Passes iff `value < threshold`.
    pub fn below(name: &str, statistic: &str, value: f64, threshold: f64, samples: u64) -> Self {
        Self {
            name: name.into(),
            statistic: statistic.into(),
            value,
            threshold,
            pass: value < threshold,
            samples,
            exact: false,
            mandatory: true,
        }
    }

    /// Passes iff `value > threshold`.
    pub fn above(name: &str, statistic: &str, value: f64, threshold: f64, samples: u64, exact: bool) -> Self {
        Self {
            name: name.into(),
            statistic: statistic.into(),
            value,
            threshold,
            pass: value > threshold,
            samples,
            exact,
            mandatory: true,
        }
    }

    pub fn informational(mut self) -> Self {
        self.mandatory = false;
        self
    }
}

impl fmt::Display for AuditVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "name={} statistic={} value={} threshold={} pass={} samples={} exact={} mandatory={}",
            self.name, self.statistic, self.value, self.threshold, self.pass, self.samples, self.exact, self.mandatory
        )
    }
}

fn entropy_bits<I: IntoIterator<Item = u128>>(counts: I, total: u128) -> f64 {
    let t = total as f64;
    counts
        .into_iter()
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / t;
            -p * p.log2()
        })
        .sum()
}

/// Mutual information in bits of an exactly known joint distribution given
/// as integer weights. Returns exactly `0.0` when the weights factorize.
pub fn exact_mi<A: Ord + Clone, B: Ord + Clone>(joint: &Joint<A, B>) -> f64 {
    let mut pa: BTreeMap<A, u128> = BTreeMap::new();
    let mut pb: BTreeMap<B, u128> = BTreeMap::new();
    let mut total = 0u128;
    for ((a, b), &c) in joint {
        if c == 0 {
            continue;
        }
        *pa.entry(a.clone()).or_default() += c;
        *pb.entry(b.clone()).or_default() += c;
        total += c;
    }
    if total == 0 {
        return 0.0;
    }
    let support = joint.values().filter(|&&c| c > 0).count();
    let factorizes = support == pa.len() * pb.len()
        && joint.iter().filter(|(_, &c)| c > 0).all(|((a, b), &c)| c * total == pa[a] * pb[b]);
    if factorizes {
        return 0.0;
    }
    let mi = entropy_bits(pa.values().copied(), total) + entropy_bits(pb.values().copied(), total)
        - entropy_bits(joint.values().copied(), total);
    mi.max(0.0)
}

/// Plug-in MI estimate with bias correction and its uncertainty.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MiEstimate {
    /// Miller–Madow corrected estimate, in bits.
    pub estimate: f64,
    pub plug_in: f64,
    /// Jackknife standard error.
    pub std_err: f64,
    pub samples: u64,
}

/// Minimum sample count for [`plug_in_mi`].
pub const MIN_MI_SAMPLES: usize = 1000;

struct Counts {
    joint: BTreeMap<(u64, u64), u64>,
    x: BTreeMap<u64, u64>,
    y: BTreeMap<u64, u64>,
    n: u64,
}

impl Counts {
    fn entropy_mm(counts: &BTreeMap<impl Ord, u64>, n: u64) -> (f64, f64) {
        let nf = n as f64;
        let mut h = 0.0;
        let mut k = 0;
        for &c in counts.values() {
            if c > 0 {
                let p = c as f64 / nf;
                h -= p * p.log2();
                k += 1;
            }
        }
        let correction = (k as f64 - 1.0).max(0.0) / (2.0 * nf * std::f64::consts::LN_2);
        (h, h + correction)
    }

    fn mi(&self) -> (f64, f64) {
        let (hx, hx_mm) = Self::entropy_mm(&self.x, self.n);
        let (hy, hy_mm) = Self::entropy_mm(&self.y, self.n);
        let (hxy, hxy_mm) = Self::entropy_mm(&self.joint, self.n);
        (hx + hy - hxy, hx_mm + hy_mm - hxy_mm)
    }

    fn adjust(&mut self, cell: (u64, u64), delta: i64) {
        let apply = |c: &mut u64| *c = (*c as i64 + delta) as u64;
        apply(self.joint.get_mut(&cell).expect("cell present"));
        apply(self.x.get_mut(&cell.0).expect("x present"));
        apply(self.y.get_mut(&cell.1).expect("y present"));
        self.n = (self.n as i64 + delta) as u64;
    }
}

/// Mutual information between the two coordinates of `samples`.
pub fn plug_in_mi(samples: &[(u64, u64)]) -> Result<MiEstimate> {
    if samples.len() < MIN_MI_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "need at least {MIN_MI_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    let mut c = Counts { joint: BTreeMap::new(), x: BTreeMap::new(), y: BTreeMap::new(), n: 0 };
    for &(x, y) in samples {
        *c.joint.entry((x, y)).or_default() += 1;
        *c.x.entry(x).or_default() += 1;
        *c.y.entry(y).or_default() += 1;
        c.n += 1;
    }
    let (plug_in, estimate) = c.mi();
    // Leave-one-out values depend only on the cell removed.
    let cells: Vec<((u64, u64), u64)> = c.joint.iter().map(|(&k, &v)| (k, v)).collect();
    let n = c.n as f64;
    let mut loo = Vec::with_capacity(cells.len());
    for &(cell, count) in &cells {
        c.adjust(cell, -1);
        loo.push((c.mi().1, count as f64));
        c.adjust(cell, 1);
    }
    let mean = loo.iter().map(|(v, w)| v * w).sum::<f64>() / n;
    let var = (n - 1.0) / n * loo.iter().map(|(v, w)| w * (v - mean).powi(2)).sum::<f64>();
    Ok(MiEstimate { estimate, plug_in, std_err: var.sqrt(), samples: samples.len() as u64 })
}

/// Bin index of `x` among `bins` equal cells of `[lo, hi)`, clamped.
pub fn discretize(x: f64, lo: f64, hi: f64, bins: u64) -> u64 {
    let t = ((x - lo) / (hi - lo) * bins as f64).floor();
    t.clamp(0.0, (bins - 1) as f64) as u64
}

/// Queries of `scheme` for message `index` and random vector `b`.
fn scheme_queries(scheme: Scheme, index: usize, b: &[bool]) -> Result<(Query, Query)> {
    match scheme {
        Scheme::Pir | Scheme::SpirCr => queries_for(index, b),
        Scheme::SpirNokey => nokey_queries_for(index, b),
    }
}

fn bits_of(v: u64, m: usize) -> Vec<bool> {
    (0..m).map(|j| v & (1 << j) != 0).collect()
}

/// How the audit suite queries are generated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum QueryMode {
    Exhaustive,
    Sampled { draws: u64, seed: u64 },
}

/// Checks that each group's query law does not depend on the requested
/// index. Exhaustive mode returns the largest total-variation distance
/// between the per-index laws; sampled mode a chi-square p-value on the
/// per-position bit frequencies.
pub fn query_invariance(scheme: Scheme, n_msgs: usize, mode: QueryMode) -> Result<AuditVerdict> {
    if n_msgs == 0 {
        return invalid("need at least one message");
    }
    match mode {
        QueryMode::Exhaustive => {
            if n_msgs > 12 {
                return Err(Error::BudgetExceeded(format!("exhaustive query audit needs M <= 12, got {n_msgs}")));
            }
            let total = 1u64 << n_msgs;
            let mut max_num = 0u128;
            for group in 0..2 {
                let laws: Vec<BTreeMap<Vec<i64>, u128>> = (0..n_msgs)
                    .map(|i| {
                        let mut law = BTreeMap::new();
                        for v in 0..total {
                            let (q1, q2) = scheme_queries(scheme, i, &bits_of(v, n_msgs))?;
                            let q = if group == 0 { q1 } else { q2 };
                            *law.entry(q.coeffs().to_vec()).or_default() += 1;
                        }
                        Ok(law)
                    })
                    .collect::<Result<_>>()?;
                for a in &laws {
                    for b in &laws {
                        let keys: std::collections::BTreeSet<&Vec<i64>> = a.keys().chain(b.keys()).collect();
                        let num: u128 = keys
                            .into_iter()
                            .map(|k| a.get(k).copied().unwrap_or(0).abs_diff(b.get(k).copied().unwrap_or(0)))
                            .sum();
                        max_num = max_num.max(num);
                    }
                }
            }
            let tv = max_num as f64 / (2 * total) as f64;
            Ok(AuditVerdict::exact_zero(
                &format!("{scheme}/query-invariance/M={n_msgs}"),
                "max-tv",
                tv,
                total * n_msgs as u64,
            ))
        }
        QueryMode::Sampled { draws, seed } => {
            if draws == 0 {
                return invalid("need at least one draw");
            }
            let indices: Vec<usize> = {
                let mut v = vec![0, n_msgs / 2, n_msgs - 1];
                v.dedup();
                v
            };
            // The two groups' bits are functions of the same `b`, so each
            // group gets its own statistic; the smaller p-value is
            // Bonferroni-adjusted for the two looks.
            let mut stat = [0.0f64; 2];
            for (t, &i) in indices.iter().enumerate() {
                let mut rng = stream(seed, t as u64);
                let mut ones = vec![[0u64; 2]; n_msgs];
                for _ in 0..draws {
                    let b: Vec<bool> = (0..n_msgs).map(|_| rng.random()).collect();
                    let (q1, q2) = scheme_queries(scheme, i, &b)?;
                    for (count, (&c1, &c2)) in ones.iter_mut().zip(q1.coeffs().iter().zip(q2.coeffs())) {
                        // Group-2 entries are {−1, 0} for the lattice schemes and {−1, 1} otherwise.
                        let q2_bit = match scheme {
                            Scheme::SpirNokey => c2 > 0,
                            _ => c2 != 0,
                        };
                        count[0] += (c1 > 0) as u64;
                        count[1] += q2_bit as u64;
                    }
                }
                for counts in &ones {
                    for g in 0..2 {
                        let d = draws as f64;
                        stat[g] += (2.0 * counts[g] as f64 - d).powi(2) / d;
                    }
                }
            }
            let dof = (indices.len() * n_msgs) as f64;
            let chi = ChiSquared::new(dof).map_err(|e| Error::InvalidInput(e.to_string()))?;
            let p_min = stat.iter().map(|&x| chi.sf(x)).fold(1.0, f64::min);
            let p_value = (2.0 * p_min).min(1.0);
            Ok(AuditVerdict::above(
                &format!("{scheme}/query-invariance/M={n_msgs}"),
                "chi2-p-value",
                p_value,
                0.01,
                draws * indices.len() as u64,
                false,
            ))
        }
    }
}

/// Parameters of the exact enumeration audits.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnumerationParams {
    pub prime: u64,
    pub n_msgs: usize,
    /// Masking randomness (dithers, common randomness) switched on. Turning it
    /// off reproduces the undithered scheme, or for the scheme without
    /// common randomness, answers reduced modulo the codebook range.
    pub masking: bool,
    /// Queries built from a uniform `b`; `false` fixes `b = (1, …, 1)`.
    pub uniform_b: bool,
    /// Power for the sphere codebook of the scheme without common randomness.
    pub nokey_power: f64,
}

impl Default for EnumerationParams {
    fn default() -> Self {
        Self { prime: 5, n_msgs: 2, masking: true, uniform_b: true, nokey_power: 8.0 }
    }
}

/// Message alphabet of the enumeration: field symbols for the lattice
/// schemes, sphere-codebook indices for the other.
fn alphabet(scheme: Scheme, params: &EnumerationParams) -> Result<Vec<i64>> {
    match scheme {
        Scheme::Pir | Scheme::SpirCr => Ok((0..params.prime as i64).collect()),
        Scheme::SpirNokey => {
            let cb = SphereCodebook::new(1, params.nokey_power, params.n_msgs)?;
            let r = (cb.power_radius() / cb.scale()).floor() as i64;
            Ok((-r..=r).collect())
        }
    }
}

fn check_budget(size: u128) -> Result<()> {
    if size > ENUMERATION_BUDGET {
        return Err(Error::BudgetExceeded(format!(
            "enumeration of {size} outcomes exceeds the budget of {ENUMERATION_BUDGET}"
        )));
    }
    Ok(())
}

/// Everything the enumeration needs about one choice of randomness.
struct Outcome {
    q1: Query,
    q2: Query,
    /// Fine-lattice (or integer) index of each group's transmission.
    x1: i64,
    x2: i64,
    /// Index of each group's answer codeword.
    a1: i64,
    a2: i64,
}

/// Runs one instance with one lattice dimension and unit gains. Dithers and
/// `S` are given by field value.
fn enumerate_outcome(
    scheme: Scheme,
    params: &EnumerationParams,
    index: usize,
    b: &[bool],
    w: &[i64],
    s: u64,
    d: (u64, u64),
) -> Result<Outcome> {
    let (q1, q2) = scheme_queries(scheme, index, b)?;
    match scheme {
        Scheme::Pir | Scheme::SpirCr => {
            let p = params.prime;
            let pair = NestedLatticePair::new(1, p, 1.0)?;
            let msgs: Vec<FieldVector> =
                w.iter().map(|&x| FieldVector::new(vec![x as u64], p)).collect::<Result<_>>()?;
            let ans1 = form_answer(&q1, &msgs, &pair)?;
            let ans2 = form_answer(&q2, &msgs, &pair)?;
            let d1 = pair.codeword_at(d.0).into_coords();
            let d2 = pair.codeword_at(d.1).into_coords();
            let (x1, x2) = if scheme == Scheme::SpirCr {
                let s = CommonRandomness::from_point(&pair, pair.codeword_at(s))?;
                (spir_cr_transmit(&ans1, &d1, &s, 1.0, &pair)?, spir_cr_transmit(&ans2, &d2, &s, 1.0, &pair)?)
            } else {
                (make_transmit(&ans1, &d1, 1.0, &pair)?, make_transmit(&ans2, &d2, 1.0, &pair)?)
            };
            Ok(Outcome {
                x1: x1.block()[0].round() as i64,
                x2: x2.block()[0].round() as i64,
                a1: ans1.codeword().coords()[0].round() as i64,
                a2: ans2.codeword().coords()[0].round() as i64,
                q1,
                q2,
            })
        }
        Scheme::SpirNokey => {
            let combine = |q: &Query| -> i64 { q.coeffs().iter().zip(w).map(|(c, x)| c * x).sum() };
            let (a1, a2) = (combine(&q1), combine(&q2));
            let (x1, x2) = if params.masking {
                (a1, a2)
            } else {
                let range = 2 * alphabet(scheme, params)?.last().copied().unwrap_or(0) as u64 + 1;
                (centered_residue(a1, range), centered_residue(a2, range))
            };
            Ok(Outcome { q1, q2, x1, x2, a1, a2 })
        }
    }
}

/// Iterates over all `(b, W, S, d1, d2)` of the enumeration.
fn for_each_choice(
    scheme: Scheme,
    params: &EnumerationParams,
    extra: u128,
    mut f: impl FnMut(&[bool], &[i64], u64, (u64, u64)) -> Result<()>,
) -> Result<u128> {
    let m = params.n_msgs;
    if m == 0 || m > 12 {
        return invalid(format!("enumeration needs 1 <= M <= 12, got {m}"));
    }
    let alpha = alphabet(scheme, params)?;
    let lattice = matches!(scheme, Scheme::Pir | Scheme::SpirCr);
    let n_s = if scheme == Scheme::SpirCr && params.masking { params.prime } else { 1 };
    let n_d = if lattice && params.masking { params.prime } else { 1 };
    let n_b = if params.uniform_b { 1u64 << m } else { 1 };
    let n_w = (alpha.len() as u128).pow(m as u32);
    let size = n_b as u128 * n_w * n_s as u128 * (n_d as u128).pow(2) * extra;
    check_budget(size)?;
    for bv in 0..n_b {
        let b = if params.uniform_b { bits_of(bv, m) } else { vec![true; m] };
        for wv in 0..n_w {
            let mut rest = wv;
            let w: Vec<i64> = (0..m)
                .map(|_| {
                    let x = alpha[(rest % alpha.len() as u128) as usize];
                    rest /= alpha.len() as u128;
                    x
                })
                .collect();
            for s in 0..n_s {
                for d1 in 0..n_d {
                    for d2 in 0..n_d {
                        f(&b, &w, s, (d1, d2))?;
                    }
                }
            }
        }
    }
    Ok(size)
}

/// Exact `I(θ; view)` for a single database, with `θ` uniform over the
/// messages. The view holds the group label, the query, all messages, the
/// public dithers, `S` where present, and the answer codeword. Returns the
/// larger of the two groups' values.
pub fn db_view_independence(scheme: Scheme, params: &EnumerationParams) -> Result<AuditVerdict> {
    let m = params.n_msgs;
    let mut joints: [Joint<i64, Vec<i64>>; 2] = [BTreeMap::new(), BTreeMap::new()];
    let mut size = 0;
    for theta in 0..m {
        size += for_each_choice(scheme, params, m as u128, |b, w, s, d| {
            let o = enumerate_outcome(scheme, params, theta, b, w, s, d)?;
            for (g, (q, a)) in [(&o.q1, o.a1), (&o.q2, o.a2)].into_iter().enumerate() {
                let mut view = vec![g as i64];
                view.extend_from_slice(q.coeffs());
                view.extend_from_slice(w);
                view.extend([d.0 as i64, d.1 as i64, s as i64, a]);
                *joints[g].entry((theta as i64, view)).or_default() += 1;
            }
            Ok(())
        })?;
    }
    let mi = exact_mi(&joints[0]).max(exact_mi(&joints[1]));
    Ok(AuditVerdict::exact_zero(&format!("{scheme}/db-view/p={}/M={m}", params.prime), "mi-bits", mi, size as u64))
}

/// Exact `I(W_ī; view)` at the user, maximized over the requested index. The
/// view holds the index, both queries, the public dithers and the noiseless
/// channel output `x1 + x2` (unit gains).
pub fn user_side_leakage(scheme: Scheme, params: &EnumerationParams) -> Result<f64> {
    let m = params.n_msgs;
    let mut worst: f64 = 0.0;
    for index in 0..m {
        let mut joint: Joint<Vec<i64>, Vec<i64>> = BTreeMap::new();
        for_each_choice(scheme, params, 1, |b, w, s, d| {
            let o = enumerate_outcome(scheme, params, index, b, w, s, d)?;
            let others: Vec<i64> = w.iter().enumerate().filter(|&(j, _)| j != index).map(|(_, &x)| x).collect();
            let mut view: Vec<i64> = o.q1.coeffs().to_vec();
            view.extend_from_slice(o.q2.coeffs());
            view.extend([d.0 as i64, d.1 as i64, o.x1 + o.x2]);
            *joint.entry((others, view)).or_default() += 1;
            Ok(())
        })?;
        worst = worst.max(exact_mi(&joint));
    }
    Ok(worst)
}

/// [`user_side_leakage`] as a verdict. Schemes claimed symmetric must score
/// zero; for plain PIR the value is reported without a pass requirement.
pub fn user_side_verdict(scheme: Scheme, params: &EnumerationParams) -> Result<AuditVerdict> {
    let mi = user_side_leakage(scheme, params)?;
    let name = format!("{scheme}/user-side-leakage/p={}/M={}", params.prime, params.n_msgs);
    let v = AuditVerdict::exact_zero(&name, "mi-bits", mi, 0);
    Ok(if scheme == Scheme::Pir { v.informational() } else { v })
}

/// Sampled `I(λ; x)` between a group-1 answer codeword and its transmitted
/// block (one dimension, 8 bins), the continuous-dither counterpart of the
/// exact audits.
pub fn transmit_independence(scheme: Scheme, prime: u64, masking: bool, samples: u64, seed: u64) -> Result<AuditVerdict> {
    if scheme == Scheme::SpirNokey {
        return invalid("the scheme without common randomness has no dithered transmission");
    }
    let pair = NestedLatticePair::for_power(1.0, prime, 1)?;
    let half = pair.coarse_step() / 2.0;
    let mut rng = stream(seed, 0);
    let mut pairs = Vec::with_capacity(samples as usize);
    let zero = vec![0.0];
    for _ in 0..samples {
        let w = FieldVector::random(1, prime, &mut rng)?;
        let (q1, _, _) = crate::pir::gen_queries(0, 1, &mut rng)?;
        let ans = form_answer(&q1, &[w], &pair)?;
        let d = if masking { pair.sample_dither(&mut rng) } else { zero.clone() };
        let x = match scheme {
            Scheme::SpirCr => {
                let s = if masking { CommonRandomness::fresh(&pair, &mut rng) } else { CommonRandomness::zero(&pair) };
                spir_cr_transmit(&ans, &d, &s, 1.0, &pair)?
            }
            _ => make_transmit(&ans, &d, 1.0, &pair)?,
        };
        let lambda = ans.raw_combo().symbols()[0];
        pairs.push((lambda, discretize(x.block()[0], -half, half, 8)));
    }
    let mi = plug_in_mi(&pairs)?;
    Ok(AuditVerdict::below(&format!("{scheme}/transmit-independence/p={prime}"), "mi-bits", mi.estimate, 0.01, samples))
}

/// Sampled `I(W_ī; residual)` for the scheme without common randomness
/// (one dimension, 8 bins).
pub fn nokey_residual_independence(n_msgs: usize, power: f64, samples: u64, seed: u64) -> Result<AuditVerdict> {
    if n_msgs < 2 {
        return invalid("need at least two messages");
    }
    let cb = SphereCodebook::new(1, power, n_msgs)?;
    let mut rng = stream(seed, 0);
    let mut pairs = Vec::with_capacity(samples as usize);
    let spread = (n_msgs as f64).sqrt() / 2.0;
    for _ in 0..samples {
        let msgs: Vec<Vec<i64>> = (0..n_msgs).map(|_| cb.sample(&mut rng)).collect::<Result<_>>()?;
        let out = nokey_round_trip(&msgs, 0, &cb, true, &mut rng)?;
        let other = msgs[1][0].rem_euclid(8) as u64;
        pairs.push((other, discretize(out.residual[0], -2.0 * spread, 2.0 * spread, 8)));
    }
    let mi = plug_in_mi(&pairs)?;
    Ok(AuditVerdict::below(&format!("spir-nokey/residual-independence/M={n_msgs}"), "mi-bits", mi.estimate, 0.01, samples))
}

/// Exact crypto-lemma checks for small codebooks.
pub fn crypto_lemma_verdicts() -> Result<Vec<AuditVerdict>> {
    use crate::spir::{crypto_lemma_check, MaskDistribution};
    let mut out = Vec::new();
    for (n, p) in [(1usize, 5u64), (2, 3)] {
        let pair = NestedLatticePair::new(n, p, 1.0)?;
        let r = crypto_lemma_check(&pair, &[], MaskDistribution::Uniform)?;
        out.push(AuditVerdict::exact_zero(&format!("crypto-lemma/n={n}/p={p}"), "max-tv", r.max_tv, r.codebook_size.pow(2)));
        out.push(AuditVerdict::exact_zero(
            &format!("crypto-lemma/n={n}/p={p}"),
            "mi-bits",
            r.mutual_information,
            r.codebook_size.pow(2),
        ));
    }
    Ok(out)
}

/// Settings of the standard audit suite.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub prime: u64,
    pub n_msgs: usize,
    /// `M` of the sampled query audit.
    pub sampled_msgs: usize,
    pub samples: u64,
    pub seed: u64,
    /// Disables dithers and common randomness (or reinstates the modulo for
    /// the scheme without common randomness).
    pub broken: bool,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self { prime: 5, n_msgs: 2, sampled_msgs: 64, samples: 100_000, seed: 0, broken: false }
    }
}

/// The audits that apply to `scheme`.
pub fn audit_suite(scheme: Scheme, cfg: &SuiteConfig) -> Result<Vec<AuditVerdict>> {
    let params = EnumerationParams { prime: cfg.prime, n_msgs: cfg.n_msgs, masking: !cfg.broken, ..Default::default() };
    let mut out = Vec::new();
    for m in 1..=cfg.n_msgs.clamp(3, 12) {
        out.push(query_invariance(scheme, m, QueryMode::Exhaustive)?);
    }
    out.push(query_invariance(scheme, cfg.sampled_msgs, QueryMode::Sampled { draws: cfg.samples, seed: cfg.seed })?);
    out.push(db_view_independence(scheme, &params)?);
    match scheme {
        Scheme::Pir => {
            out.push(transmit_independence(scheme, cfg.prime, !cfg.broken, cfg.samples, cfg.seed)?);
            out.push(user_side_verdict(scheme, &params)?);
        }
        Scheme::SpirCr => {
            out.push(transmit_independence(scheme, cfg.prime, !cfg.broken, cfg.samples, cfg.seed)?);
            out.extend(crypto_lemma_verdicts()?);
            out.push(user_side_verdict(scheme, &params)?);
        }
        Scheme::SpirNokey => {
            out.push(user_side_verdict(scheme, &params)?);
            out.push(nokey_residual_independence(cfg.n_msgs.max(2), params.nokey_power, cfg.samples, cfg.seed)?);
        }
    }
    Ok(out)
}

/// `true` when every mandatory verdict passes.
pub fn suite_passes(verdicts: &[AuditVerdict]) -> bool {
    verdicts.iter().filter(|v| v.mandatory).all(|v| v.pass)
}
