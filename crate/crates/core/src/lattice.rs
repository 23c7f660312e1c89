//! Nested lattice arithmetic.
//!
//! The code uses the product construction: the fine lattice is `γ·Zⁿ` and the
//! coarse lattice is `γ·p·Zⁿ`. Quantization is componentwise rounding, the
//! coarse Voronoi region is the half-open cube `[-γp/2, γp/2)ⁿ`, and the
//! codebook `Λ_f ∩ V_c` holds exactly `pⁿ` points, one per vector of `F_pⁿ`.
//!
//! Against the asymptotically good lattices of the information-theoretic
//! analysis this construction has the usual 1.53 dB shaping loss.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Tolerance, in units of the fine step, for treating a coordinate as a
/// lattice point.
pub const SNAP_EPS: f64 = 1e-9;

/// Upper bound on codebook sizes that may be enumerated.
pub const ENUMERATION_BUDGET: u128 = 1_000_000;

/// Which member of the nested pair an operation refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LatticeKind {
    Fine,
    Coarse,
}

/// Trial-division primality test; parameters here are small.
pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    if p < 4 {
        return true;
    }
    if p.is_multiple_of(2) {
        return false;
    }
    let mut d = 3u64;
    while d.saturating_mul(d) <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// Nearest integer with ties sent toward +∞, so that the coarse Voronoi
/// region is `[-1/2, 1/2)` in coarse units.
fn round_half_up(x: f64) -> f64 {
    let f = x.floor();
    if x - f >= 0.5 {
        f + 1.0
    } else {
        f
    }
}

/// Representative of `s mod p` in `{-⌊p/2⌋, …, ⌈p/2⌉-1}`.
pub fn centered_residue(s: i64, p: u64) -> i64 {
    let p = p as i64;
    let r = s.rem_euclid(p);
    if r >= (p + 1) / 2 {
        r - p
    } else {
        r
    }
}

/// A vector over the prime field `F_p`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FieldVector {
    symbols: Vec<u64>,
    prime: u64,
}

impl FieldVector {
    pub fn new(symbols: Vec<u64>, prime: u64) -> Result<Self> {
        if !is_prime(prime) {
            return invalid(format!("{prime} is not prime"));
        }
        if let Some(s) = symbols.iter().find(|&&s| s >= prime) {
            return invalid(format!("symbol {s} is not below p = {prime}"));
        }
        Ok(Self { symbols, prime })
    }

    pub fn zeros(len: usize, prime: u64) -> Result<Self> {
        Self::new(vec![0; len], prime)
    }

    /// Uniform vector of length `len`.
    pub fn random<R: Rng + ?Sized>(len: usize, prime: u64, rng: &mut R) -> Result<Self> {
        let symbols = (0..len).map(|_| rng.random_range(0..prime)).collect();
        Self::new(symbols, prime)
    }

    pub fn symbols(&self) -> &[u64] {
        &self.symbols
    }

    pub fn prime(&self) -> u64 {
        self.prime
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Symbols `start..start+len` as a new vector.
    pub fn chunk(&self, start: usize, len: usize) -> Result<Self> {
        match self.symbols.get(start..start + len) {
            Some(s) => Ok(Self { symbols: s.to_vec(), prime: self.prime }),
            None => invalid(format!(
                "chunk {start}..{} out of range for length {}",
                start + len,
                self.len()
            )),
        }
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.prime != other.prime || self.len() != other.len() {
            return invalid("field vectors differ in length or characteristic");
        }
        Ok(())
    }

    /// `self + coeff·other` over `F_p`.
    pub fn add_scaled(&self, other: &Self, coeff: i64) -> Result<Self> {
        self.check_compatible(other)?;
        let p = self.prime as i128;
        let c = (coeff as i128).rem_euclid(p);
        let symbols = self
            .symbols
            .iter()
            .zip(&other.symbols)
            .map(|(&a, &b)| ((a as i128 + c * b as i128) % p) as u64)
            .collect();
        Ok(Self { symbols, prime: self.prime })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.add_scaled(other, 1)
    }

    /// Additive inverse.
    pub fn neg(&self) -> Self {
        let p = self.prime;
        let symbols = self.symbols.iter().map(|&s| (p - s) % p).collect();
        Self { symbols, prime: p }
    }

    /// Concatenates chunks that share a characteristic.
    pub fn concat(chunks: &[FieldVector]) -> Result<Self> {
        let prime = match chunks.first() {
            Some(c) => c.prime,
            None => return invalid("nothing to concatenate"),
        };
        if chunks.iter().any(|c| c.prime != prime) {
            return invalid("chunks differ in characteristic");
        }
        let symbols = chunks.iter().flat_map(|c| c.symbols.iter().copied()).collect();
        Ok(Self { symbols, prime })
    }
}

/// A point of the fine lattice `γ·Zⁿ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticePoint {
    coords: Vec<f64>,
}

impl LatticePoint {
    fn from_indices(indices: &[i64], step: f64) -> Self {
        Self { coords: indices.iter().map(|&k| k as f64 * step).collect() }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Integer coordinates in units of the fine step of `pair`.
    pub fn indices(&self, pair: &NestedLatticePair) -> Vec<i64> {
        self.coords.iter().map(|&c| round_half_up(c / pair.scale) as i64).collect()
    }

    /// Wraps arbitrary coordinates, checking that they sit on the fine lattice.
    pub fn on_lattice(pair: &NestedLatticePair, coords: Vec<f64>) -> Result<Self> {
        pair.check_dim(&coords)?;
        for &c in &coords {
            if pair.fine_index(c).is_none() {
                return invalid(format!("coordinate {c} is not a multiple of γ = {}", pair.scale));
            }
        }
        Ok(Self { coords })
    }
}

/// A nested pair `Λ_c = γp·Zⁿ ⊂ Λ_f = γ·Zⁿ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NestedLatticePair {
    dim: usize,
    prime: u64,
    scale: f64,
}

impl NestedLatticePair {
    pub fn new(dim: usize, prime: u64, scale: f64) -> Result<Self> {
        if dim == 0 {
            return invalid("lattice dimension must be positive");
        }
        if !is_prime(prime) {
            return invalid(format!("{prime} is not prime"));
        }
        if !(scale.is_finite() && scale > 0.0) {
            return invalid(format!("lattice scale must be positive, got {scale}"));
        }
        Ok(Self { dim, prime, scale })
    }

    /// Pair whose coarse second moment equals `power`, i.e. `γ = √(12P)/p`.
    pub fn for_power(power: f64, prime: u64, dim: usize) -> Result<Self> {
        if !(power.is_finite() && power > 0.0) {
            return invalid(format!("power must be positive, got {power}"));
        }
        if !is_prime(prime) {
            return invalid(format!("{prime} is not prime"));
        }
        Self::new(dim, prime, (12.0 * power).sqrt() / prime as f64)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn prime(&self) -> u64 {
        self.prime
    }

    /// Fine step `γ`.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Coarse step `γp`.
    pub fn coarse_step(&self) -> f64 {
        self.scale * self.prime as f64
    }

    /// Second moment per dimension of `Λ_c`.
    pub fn second_moment(&self) -> f64 {
        let s = self.coarse_step();
        s * s / 12.0
    }

    /// Codebook rate `(1/n)·log₂ pⁿ` in bits per dimension.
    pub fn rate_bits(&self) -> f64 {
        (self.prime as f64).log2()
    }

    /// `pⁿ`, or `None` on overflow.
    pub fn codebook_size(&self) -> Option<u128> {
        (self.prime as u128).checked_pow(self.dim as u32)
    }

    /// The pair scaled by `|β|`. For `β > 0`, `β·[s] mod Λ = [βs] mod βΛ`.
    pub fn scaled(&self, beta: f64) -> Result<Self> {
        if !(beta.is_finite() && beta != 0.0) {
            return invalid(format!("scale factor must be finite and nonzero, got {beta}"));
        }
        Self::new(self.dim, self.prime, self.scale * beta.abs())
    }

    fn check_dim(&self, point: &[f64]) -> Result<()> {
        if point.len() != self.dim {
            return invalid(format!("expected a {}-vector, got length {}", self.dim, point.len()));
        }
        if point.iter().any(|c| !c.is_finite()) {
            return invalid("non-finite coordinate");
        }
        Ok(())
    }

    /// Fine-lattice index of `c` if it lies within `SNAP_EPS` of a lattice step.
    fn fine_index(&self, c: f64) -> Option<i64> {
        let t = c / self.scale;
        let k = t.round();
        ((t - k).abs() <= SNAP_EPS).then_some(k as i64)
    }

    /// Nearest point of the selected lattice.
    pub fn quantize(&self, point: &[f64], kind: LatticeKind) -> Result<LatticePoint> {
        self.check_dim(point)?;
        let step = match kind {
            LatticeKind::Fine => self.scale,
            LatticeKind::Coarse => self.coarse_step(),
        };
        let coords = point.iter().map(|&c| round_half_up(c / step) * step).collect();
        Ok(LatticePoint { coords })
    }

    /// `[s] mod Λ_c = s − Q_c(s)`, snapped onto the fine lattice when within
    /// `SNAP_EPS` of it. The result lies in `[-γp/2, γp/2)ⁿ`.
    pub fn mod_reduce(&self, point: &[f64]) -> Result<Vec<f64>> {
        let q = self.quantize(point, LatticeKind::Coarse)?;
        let p = self.prime as f64;
        let half = p / 2.0;
        Ok(point
            .iter()
            .zip(q.coords())
            .map(|(&s, &c)| {
                let mut t = (s - c) / self.scale;
                let k = t.round();
                if (t - k).abs() <= SNAP_EPS {
                    t = k;
                }
                if t >= half {
                    t -= p;
                } else if t < -half {
                    t += p;
                }
                t * self.scale
            })
            .collect())
    }

    /// Field-to-codebook isomorphism: symbol `s` goes to `γ·centered(s)`.
    pub fn encode(&self, msg: &FieldVector) -> Result<LatticePoint> {
        if msg.prime() != self.prime {
            return invalid(format!(
                "message over F_{} does not match lattice prime {}",
                msg.prime(),
                self.prime
            ));
        }
        if msg.len() != self.dim {
            return invalid(format!("expected {} symbols, got {}", self.dim, msg.len()));
        }
        let idx: Vec<i64> =
            msg.symbols().iter().map(|&s| centered_residue(s as i64, self.prime)).collect();
        Ok(LatticePoint::from_indices(&idx, self.scale))
    }

    /// Inverse of [`encode`](Self::encode).
    pub fn decode(&self, point: &[f64]) -> Result<FieldVector> {
        self.check_dim(point)?;
        let p = self.prime as i64;
        let lo = -(p / 2);
        let hi = (p + 1) / 2 - 1;
        let mut symbols = Vec::with_capacity(self.dim);
        for &c in point {
            let k = self.fine_index(c).ok_or_else(|| {
                Error::DecodeDomain(format!("{c} is off the fine lattice (γ = {})", self.scale))
            })?;
            if k < lo || k > hi {
                return Err(Error::DecodeDomain(format!(
                    "index {k} outside the codebook range {lo}..={hi}"
                )));
            }
            symbols.push(k.rem_euclid(p) as u64);
        }
        FieldVector::new(symbols, self.prime)
    }

    /// True when `point` is a codeword of `Λ_f ∩ V_c`.
    pub fn contains(&self, point: &[f64]) -> bool {
        self.decode(point).is_ok()
    }

    /// Dither uniform over `V_c`.
    pub fn sample_dither<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let s = self.coarse_step();
        (0..self.dim).map(|_| s * (rng.random::<f64>() - 0.5)).collect()
    }

    /// Codeword uniform over the `pⁿ` codebook points.
    pub fn sample_codeword<R: Rng + ?Sized>(&self, rng: &mut R) -> LatticePoint {
        let p = self.prime as i64;
        let idx: Vec<i64> =
            (0..self.dim).map(|_| centered_residue(rng.random_range(0..p), self.prime)).collect();
        LatticePoint::from_indices(&idx, self.scale)
    }

    /// All codewords, ordered by the base-`p` value of their field preimage
    /// (first coordinate least significant).
    pub fn codebook(&self) -> Result<Vec<LatticePoint>> {
        let size = self
            .codebook_size()
            .filter(|&s| s <= ENUMERATION_BUDGET)
            .ok_or_else(|| {
                Error::BudgetExceeded(format!(
                    "{}^{} codewords exceed the enumeration budget of {ENUMERATION_BUDGET}",
                    self.prime, self.dim
                ))
            })? as u64;
        Ok((0..size).map(|v| self.codeword_at(v)).collect())
    }

    /// Codeword whose field preimage has base-`p` value `value`.
    pub fn codeword_at(&self, mut value: u64) -> LatticePoint {
        let mut idx = Vec::with_capacity(self.dim);
        for _ in 0..self.dim {
            idx.push(centered_residue((value % self.prime) as i64, self.prime));
            value /= self.prime;
        }
        LatticePoint::from_indices(&idx, self.scale)
    }
}
