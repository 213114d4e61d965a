//! Linear block codes: extended BCH construction and the JSON code file.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf2::{mat_vec_mod2, rank_mod2, BitMatrix};

/// Exhaustive minimum-distance verification is done up to this dimension.
pub const EXHAUSTIVE_DMIN_MAX_K: usize = 12;

/// Arithmetic in GF(2^m) via log/antilog tables.
#[derive(Clone, Debug)]
pub struct GF2mField {
    m: u32,
    primitive_poly: u32,
    exp: Vec<u32>,
    log: Vec<u32>,
}

impl GF2mField {
    pub fn m(&self) -> u32 {
        self.m
    }

    /// The modulus, bit `i` holding the coefficient of `x^i`.
    pub fn primitive_poly(&self) -> u32 {
        self.primitive_poly
    }

    /// Multiplicative group order `2^m - 1`.
    pub fn order(&self) -> u32 {
        (1 << self.m) - 1
    }

    pub fn size(&self) -> u32 {
        1 << self.m
    }

    /// `alpha^i`.
    pub fn exp(&self, i: u64) -> u32 {
        self.exp[(i % self.order() as u64) as usize]
    }

    /// Discrete log of a nonzero element.
    pub fn log(&self, x: u32) -> u32 {
        debug_assert!(x != 0);
        self.log[x as usize]
    }

    pub fn mul(&self, a: u32, b: u32) -> u32 {
        if a == 0 || b == 0 {
            0
        } else {
            self.exp(self.log(a) as u64 + self.log(b) as u64)
        }
    }

    /// Minimal polynomial of `alpha^i` over GF(2), bit `j` = coefficient of `x^j`.
    pub fn minimal_polynomial(&self, i: u64) -> u64 {
        let order = self.order() as u64;
        let mut coset = BTreeSet::new();
        let mut e = i % order;
        while coset.insert(e) {
            e = (e * 2) % order;
        }
        // product of (x + alpha^e) with coefficients in GF(2^m)
        let mut poly: Vec<u32> = vec![1];
        for &e in &coset {
            let root = self.exp(e);
            let mut next = vec![0u32; poly.len() + 1];
            for (j, &c) in poly.iter().enumerate() {
                next[j + 1] ^= c;
                next[j] ^= self.mul(c, root);
            }
            poly = next;
        }
        poly.iter().enumerate().fold(0u64, |acc, (j, &c)| {
            debug_assert!(c <= 1, "minimal polynomial must have binary coefficients");
            acc | ((c as u64) << j)
        })
    }
}

fn antilog_table(m: u32, poly: u32) -> Option<Vec<u32>> {
    let order = (1u32 << m) - 1;
    let mut exp = Vec::with_capacity(order as usize);
    let mut x = 1u32;
    for i in 0..order {
        if i > 0 && x == 1 {
            return None;
        }
        exp.push(x);
        x <<= 1;
        if x & (1 << m) != 0 {
            x ^= poly;
        }
    }
    (x == 1).then_some(exp)
}

/// Smallest (as an integer) primitive polynomial of degree `m`.
pub fn default_primitive_poly(m: u32) -> Result<u32> {
    check_degree(m)?;
    ((1u32 << m) + 1..(1u32 << (m + 1)))
        .step_by(2)
        .find(|&p| antilog_table(m, p).is_some())
        .ok_or_else(|| Error::InvalidField(format!("no primitive polynomial of degree {m}")))
}

fn check_degree(m: u32) -> Result<()> {
    if !(2..=16).contains(&m) {
        return Err(Error::InvalidField(format!("degree m={m} outside 2..=16")));
    }
    Ok(())
}

pub fn build_field(m: u32, primitive_poly: Option<u32>) -> Result<GF2mField> {
    check_degree(m)?;
    let poly = match primitive_poly {
        Some(p) => p,
        None => default_primitive_poly(m)?,
    };
    if poly >> m != 1 {
        return Err(Error::InvalidField(format!(
            "polynomial {poly:#b} does not have degree {m}"
        )));
    }
    let exp = antilog_table(m, poly)
        .ok_or_else(|| Error::InvalidField(format!("polynomial {poly:#b} is not primitive")))?;
    let mut log = vec![0u32; 1 << m];
    for (i, &x) in exp.iter().enumerate() {
        log[x as usize] = i as u32;
    }
    Ok(GF2mField {
        m,
        primitive_poly: poly,
        exp,
        log,
    })
}

/// Binary polynomial, bit `j` of the packed words = coefficient of `x^j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryPoly(Vec<u64>);

impl BinaryPoly {
    pub fn one() -> Self {
        BinaryPoly(vec![1])
    }

    pub fn from_u64(v: u64) -> Self {
        BinaryPoly(vec![v]).trimmed()
    }

    fn trimmed(mut self) -> Self {
        while self.0.len() > 1 && *self.0.last().unwrap() == 0 {
            self.0.pop();
        }
        self
    }

    pub fn degree(&self) -> Option<usize> {
        let top = self.0.iter().rposition(|&w| w != 0)?;
        Some(top * 64 + 63 - self.0[top].leading_zeros() as usize)
    }

    pub fn coeff(&self, j: usize) -> bool {
        self.0.get(j / 64).is_some_and(|w| (w >> (j % 64)) & 1 == 1)
    }

    fn xor_shifted(&mut self, other: &BinaryPoly, shift: usize) {
        let words = shift / 64;
        let bits = shift % 64;
        let needed = other.0.len() + words + 1;
        if self.0.len() < needed {
            self.0.resize(needed, 0);
        }
        for (i, &w) in other.0.iter().enumerate() {
            self.0[i + words] ^= w << bits;
            if bits > 0 {
                self.0[i + words + 1] ^= w >> (64 - bits);
            }
        }
    }

    pub fn mul(&self, other: &BinaryPoly) -> BinaryPoly {
        let mut out = BinaryPoly(vec![0]);
        if let Some(d) = other.degree() {
            for j in 0..=d {
                if other.coeff(j) {
                    out.xor_shifted(self, j);
                }
            }
        }
        out.trimmed()
    }

    /// Remainder of `self` divided by `divisor`.
    pub fn rem(&self, divisor: &BinaryPoly) -> BinaryPoly {
        let dd = divisor.degree().expect("division by zero polynomial");
        let mut r = self.clone();
        while let Some(d) = r.degree() {
            if d < dd {
                break;
            }
            r.xor_shifted(divisor, d - dd);
        }
        r.trimmed()
    }

    /// `x^n + 1` (equal to `x^n - 1` over GF(2)).
    pub fn x_pow_plus_one(n: usize) -> BinaryPoly {
        let mut p = BinaryPoly(vec![0; n / 64 + 1]);
        p.0[0] |= 1;
        p.0[n / 64] ^= 1 << (n % 64);
        p.trimmed()
    }
}

/// A narrow-sense BCH design of length `2^m - 1`.
#[derive(Clone, Debug)]
pub struct BchDesign {
    pub t: usize,
    pub k: usize,
    pub generator: BinaryPoly,
}

/// All narrow-sense BCH designs of length `2^m - 1`, by increasing `t`.
pub fn bch_designs(field: &GF2mField) -> Vec<BchDesign> {
    let length = field.order() as usize;
    let mut designs = Vec::new();
    let mut g = BinaryPoly::one();
    let mut covered = BTreeSet::new();
    for t in 1..=length / 2 {
        for i in (2 * t - 1)..=(2 * t) {
            let rep = coset_leader(i as u64, field.order() as u64);
            if covered.insert(rep) {
                g = g.mul(&BinaryPoly::from_u64(field.minimal_polynomial(rep)));
            }
        }
        let deg = g.degree().unwrap_or(0);
        if deg >= length {
            break;
        }
        designs.push(BchDesign {
            t,
            k: length - deg,
            generator: g.clone(),
        });
    }
    designs
}

fn coset_leader(i: u64, order: u64) -> u64 {
    let mut best = i % order;
    let mut e = best;
    loop {
        e = (e * 2) % order;
        if e == i % order {
            return best;
        }
        best = best.min(e);
    }
}

/// A binary linear block code given by its generator matrix.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "CodeFile", into = "CodeFile")]
pub struct LinearCode {
    label: String,
    n: usize,
    k: usize,
    d_min: usize,
    generator: BitMatrix,
}

#[derive(Serialize, Deserialize)]
struct CodeFile {
    label: String,
    n: usize,
    k: usize,
    d_min: usize,
    #[serde(rename = "G")]
    g: BitMatrix,
}

impl TryFrom<CodeFile> for LinearCode {
    type Error = Error;
    fn try_from(f: CodeFile) -> Result<Self> {
        LinearCode::new(f.label, f.g, f.d_min).and_then(|c| {
            if c.n != f.n || c.k != f.k {
                Err(Error::InvalidCode(format!(
                    "declared ({}, {}) does not match generator {}x{}",
                    f.n, f.k, c.k, c.n
                )))
            } else {
                Ok(c)
            }
        })
    }
}

impl From<LinearCode> for CodeFile {
    fn from(c: LinearCode) -> Self {
        CodeFile {
            label: c.label,
            n: c.n,
            k: c.k,
            d_min: c.d_min,
            g: c.generator,
        }
    }
}

impl LinearCode {
    /// Validates rank, `k <= n`, and for small `k` that no nonzero codeword
    /// is lighter than the declared `d_min`.
    pub fn new(label: impl Into<String>, generator: BitMatrix, d_min: usize) -> Result<Self> {
        let (k, n) = (generator.rows(), generator.cols());
        if k > n {
            return Err(Error::InvalidCode(format!("k = {k} exceeds n = {n}")));
        }
        let rank = rank_mod2(&generator);
        if rank < k {
            return Err(Error::RankDeficient { rank, k });
        }
        let code = LinearCode {
            label: label.into(),
            n,
            k,
            d_min,
            generator,
        };
        if k <= EXHAUSTIVE_DMIN_MAX_K {
            let w = code.exhaustive_min_distance();
            if w < d_min {
                return Err(Error::InvalidCode(format!(
                    "declared d_min = {d_min} but a codeword of weight {w} exists"
                )));
            }
        }
        Ok(code)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d_min(&self) -> usize {
        self.d_min
    }

    pub fn rate(&self) -> f64 {
        self.k as f64 / self.n as f64
    }

    pub fn generator(&self) -> &BitMatrix {
        &self.generator
    }

    pub fn encode(&self, message: &[bool]) -> Result<Vec<bool>> {
        mat_vec_mod2(&self.generator, message)
    }

    /// Minimum weight over all nonzero codewords (Gray-code walk, `2^k` steps).
    pub fn exhaustive_min_distance(&self) -> usize {
        let words = self.generator.row_words();
        let mut acc = vec![0u64; words];
        let mut best = usize::MAX;
        for step in 1u64..(1u64 << self.k) {
            let flip = step.trailing_zeros() as usize;
            for (a, w) in acc.iter_mut().zip(self.generator.row(flip)) {
                *a ^= w;
            }
            let wt: usize = acc.iter().map(|w| w.count_ones() as usize).sum();
            best = best.min(wt);
        }
        best
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n")?;
        Ok(())
    }
}

pub fn load_code(path: impl AsRef<Path>) -> Result<LinearCode> {
    LinearCode::load(path)
}

pub fn save_code(code: &LinearCode, path: impl AsRef<Path>) -> Result<()> {
    code.save(path)
}

/// Extended narrow-sense BCH code of length `n = 2^m` and dimension `k`.
///
/// Among the designs with dimension `k` the one with the largest designed
/// error-correcting radius `t` is used; the declared minimum distance is
/// the designed distance plus one for the parity extension.
pub fn build_ebch(n: usize, k: usize) -> Result<LinearCode> {
    if n < 4 || !n.is_power_of_two() {
        return Err(Error::InvalidArgument(format!(
            "eBCH length must be a power of two >= 4, got {n}"
        )));
    }
    let m = n.trailing_zeros();
    let field = build_field(m, None)?;
    let length = n - 1;
    let designs = bch_designs(&field);
    let Some(design) = designs.iter().filter(|d| d.k == k).max_by_key(|d| d.t) else {
        let achievable: BTreeSet<usize> = designs.iter().map(|d| d.k).collect();
        return Err(Error::NoSuchCode {
            length,
            k,
            achievable: achievable.into_iter().rev().collect(),
        });
    };
    let g = &design.generator;
    let mut gen = BitMatrix::zeros(k, n)?;
    for r in 0..k {
        let mut parity = false;
        for j in 0..=g.degree().unwrap() {
            if g.coeff(j) {
                gen.set(r, r + j, true);
                parity ^= true;
            }
        }
        gen.set(r, length, parity);
    }
    LinearCode::new(format!("eBCH({n},{k})"), gen, 2 * design.t + 2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gf8_table() {
        let f = build_field(3, Some(0b1011)).unwrap();
        // alpha^3 = alpha + 1
        assert_eq!(f.exp(3), 0b011);
        assert_eq!(f.size(), 8);
        assert_eq!(f.exp(7), 1);
        for x in 1..8 {
            assert_eq!(f.exp(f.log(x) as u64), x);
        }
    }

    #[test]
    fn gf16_default_poly_cycles() {
        let f = build_field(4, None).unwrap();
        assert_eq!(f.primitive_poly(), 0b10011);
        assert_eq!(f.exp(15), 1);
        let distinct: BTreeSet<u32> = (0..15).map(|i| f.exp(i)).collect();
        assert_eq!(distinct.len(), 15);
    }

    #[test]
    fn reducible_poly_rejected() {
        assert!(build_field(3, Some(0b1001)).is_err());
        assert!(build_field(4, Some(0b11111)).is_err()); // irreducible, order 5
        assert!(build_field(1, None).is_err());
    }

    #[test]
    fn default_polys_are_the_smallest_primitive() {
        assert_eq!(default_primitive_poly(2).unwrap(), 0b111);
        assert_eq!(default_primitive_poly(3).unwrap(), 0b1011);
        assert_eq!(default_primitive_poly(5).unwrap(), 0b100101);
        assert_eq!(default_primitive_poly(6).unwrap(), 0b1000011);
        assert_eq!(default_primitive_poly(7).unwrap(), 0b10000011);
        assert_eq!(default_primitive_poly(8).unwrap(), 0x11d);
    }

    #[test]
    fn minimal_polynomials_gf16() {
        let f = build_field(4, None).unwrap();
        assert_eq!(f.minimal_polynomial(1), 0b10011);
        assert_eq!(f.minimal_polynomial(3), 0b11111);
        assert_eq!(f.minimal_polynomial(5), 0b111);
    }

    #[test]
    fn extended_hamming_8_4() {
        let c = build_ebch(8, 4).unwrap();
        assert_eq!((c.n(), c.k(), c.d_min()), (8, 4, 4));
        assert_eq!(c.exhaustive_min_distance(), 4);
        for r in 0..4 {
            assert_eq!(c.generator().row_weight(r) % 2, 0);
        }
    }

    #[test]
    fn extended_hamming_16_11() {
        let c = build_ebch(16, 11).unwrap();
        assert_eq!(c.d_min(), 4);
        assert_eq!(c.exhaustive_min_distance(), 4);
    }

    #[test]
    fn ebch_128_64_parameters() {
        let c = build_ebch(128, 64).unwrap();
        assert_eq!((c.n(), c.k(), c.d_min()), (128, 64, 22));
        for r in 0..64 {
            assert_eq!(c.generator().row_weight(r) % 2, 0, "row {r}");
        }
    }

    #[test]
    fn ebch_64_36_parameters() {
        let c = build_ebch(64, 36).unwrap();
        assert_eq!((c.n(), c.k(), c.d_min()), (64, 36, 12));
    }

    #[test]
    fn generator_divides_x_n_minus_1() {
        for m in 3..=7 {
            let f = build_field(m, None).unwrap();
            let xn = BinaryPoly::x_pow_plus_one(f.order() as usize);
            for d in bch_designs(&f) {
                assert_eq!(xn.rem(&d.generator), BinaryPoly(vec![0]), "m={m} t={}", d.t);
            }
        }
    }

    #[test]
    fn missing_dimension_lists_alternatives() {
        match build_ebch(128, 63) {
            Err(Error::NoSuchCode { achievable, .. }) => {
                assert!(achievable.contains(&64) && achievable.contains(&71));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(build_ebch(100, 50).is_err());
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("code.json");
        let c = build_ebch(8, 4).unwrap();
        save_code(&c, &path).unwrap();
        assert_eq!(load_code(&path).unwrap(), c);
    }

    #[test]
    fn invalid_files_rejected() {
        let rank_deficient = r#"{"label":"x","n":4,"k":2,"d_min":1,
            "G":{"rows":2,"cols":4,"row_hex":["c","c"]}}"#;
        assert!(matches!(
            serde_json::from_str::<LinearCode>(rank_deficient),
            Err(_)
        ));
        let k_gt_n = r#"{"label":"x","n":2,"k":3,"d_min":1,
            "G":{"rows":3,"cols":2,"row_hex":["8","4","c"]}}"#;
        assert!(serde_json::from_str::<LinearCode>(k_gt_n).is_err());
        let wrong_dmin = r#"{"label":"x","n":4,"k":1,"d_min":4,
            "G":{"rows":1,"cols":4,"row_hex":["c"]}}"#;
        assert!(serde_json::from_str::<LinearCode>(wrong_dmin).is_err());
    }
}
