//! Ordered-statistics decoding.
//!
//! The received word is sorted by reliability, the generator is brought to
//! systematic form on the most reliable independent positions (MRB), and every
//! test error pattern is re-encoded from the hard decisions on the MRB. The
//! winner minimizes the squared Euclidean distance to the received word.
//!
//! For BPSK candidates of fixed energy, the distance of candidate `c` is
//! `sum y^2 + n rho - 2 sqrt(rho) sum |y| + 4 sqrt(rho) D(c)`, where `D(c)` is
//! the summed `|y_j|` over positions where `c` disagrees with the hard
//! decision. Candidates are therefore ranked by `D` alone.

mod tep;

pub use tep::{build_tep_list, for_each_combination, LightestSubsets, TepList};

use std::str::FromStr;

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::channel::Observation;
use crate::code::LinearCode;
use crate::complexity::{tep_count, Order, DEFAULT_Q_BITS};
use crate::error::{Error, Result};
use crate::gf2::{mat_vec_mod2, systematic_form, BitMatrix, Permutation, SystematicForm};
use tep::{partial_layer_size, support_sum};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TieBreak {
    /// Keep the earliest candidate in enumeration order.
    #[default]
    FirstFound,
    /// Among equal distances prefer the lighter, then lexicographically
    /// smaller pattern.
    LowestIndexPattern,
}

impl FromStr for TieBreak {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "first-found" => Ok(TieBreak::FirstFound),
            "lowest-index-pattern" => Ok(TieBreak::LowestIndexPattern),
            _ => Err(Error::InvalidArgument(format!("unknown tie-break rule {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecoderConfig {
    pub s: Order,
    pub q_bits: u32,
    pub tie_break: TieBreak,
    /// Stop as soon as a candidate agrees with every hard decision.
    #[serde(default)]
    pub early_exit: bool,
}

impl DecoderConfig {
    pub fn new(s: Order) -> Self {
        DecoderConfig {
            s,
            q_bits: DEFAULT_Q_BITS,
            tie_break: TieBreak::FirstFound,
            early_exit: false,
        }
    }

    pub fn validate(&self, k: usize) -> Result<()> {
        self.s.check_against(k)?;
        if self.q_bits == 0 {
            return Err(Error::InvalidArgument("q_bits must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecodeResult {
    pub info_bits: Vec<bool>,
    pub codeword: Vec<bool>,
    pub best_distance: f64,
    pub teps_evaluated: u64,
    pub measured_xor_ops: u64,
}

/// Received word reordered by reliability, with the systematic generator on
/// its most reliable basis.
#[derive(Clone, Debug)]
pub struct ReliabilityOrder {
    pub form: SystematicForm,
    /// `y` in MRB order.
    pub y: Vec<f64>,
    /// Hard decisions on the first `k` permuted positions.
    pub hard: Vec<bool>,
    /// `|y'|` in permuted order.
    pub reliabilities: Vec<f64>,
}

impl ReliabilityOrder {
    pub fn permutation(&self) -> &Permutation {
        &self.form.permutation
    }

    pub fn generator(&self) -> &BitMatrix {
        &self.form.generator
    }
}

/// Positions by descending `|y|`, ties by index.
pub fn reliability_preference(y: &[f64]) -> Permutation {
    let mut idx: Vec<usize> = (0..y.len()).collect();
    idx.sort_by(|&a, &b| y[b].abs().total_cmp(&y[a].abs()));
    Permutation::new(idx).expect("index sort is a bijection")
}

pub fn sort_reliabilities(y: &[f64], g: &BitMatrix) -> Result<ReliabilityOrder> {
    if y.len() != g.cols() {
        return Err(Error::DimensionMismatch {
            expected: g.cols(),
            got: y.len(),
        });
    }
    let form = systematic_form(g, &reliability_preference(y))?;
    let yp: Vec<f64> = form.permutation.map().iter().map(|&j| y[j]).collect();
    let hard = yp[..g.rows()].iter().map(|&v| v > 0.0).collect();
    let reliabilities = yp.iter().map(|v| v.abs()).collect();
    Ok(ReliabilityOrder {
        form,
        y: yp,
        hard,
        reliabilities,
    })
}

/// `min(ceil(d_min / 4 - 1), k)`, floored at zero.
pub fn required_order(code: &LinearCode) -> Order {
    required_order_for(code.d_min(), code.k())
}

pub fn required_order_for(d_min: usize, k: usize) -> Order {
    let s = d_min.div_ceil(4).saturating_sub(1);
    Order::integer(s.min(k) as u64)
}

/// Per-byte lookup of summed reliabilities over the parity segment.
struct ParityTables {
    bytes: usize,
    table: Vec<f64>,
}

impl ParityTables {
    fn new(rel: &[f64]) -> Self {
        let bytes = rel.len().div_ceil(8);
        let mut table = vec![0.0; bytes * 256];
        for b in 0..bytes {
            let t = &mut table[b * 256..(b + 1) * 256];
            for v in 1..256usize {
                let hi = 7 - (v as u8).leading_zeros() as usize;
                let pos = 8 * b + hi;
                let w = if pos < rel.len() { rel[pos] } else { 0.0 };
                t[v] = t[v & !(1 << hi)] + w;
            }
        }
        ParityTables {
            bytes,
            table,
        }
    }

    #[inline]
    fn sum(&self, diff: &[u64]) -> f64 {
        let mut acc = 0.0;
        for b in 0..self.bytes {
            let byte = (diff[b / 8] >> (8 * (b % 8))) & 0xff;
            acc += self.table[b * 256 + byte as usize];
        }
        acc
    }
}

#[derive(Clone, Copy)]
struct Best {
    score: f64,
    weight: usize,
}

struct Search<'a> {
    k: usize,
    words: usize,
    /// Row `i` of the parity part, `words` words each.
    rows: Vec<u64>,
    tables: ParityTables,
    mrb_rel: &'a [f64],
    tie_break: TieBreak,
    early_exit: bool,
    best: Option<Best>,
    best_support: Vec<usize>,
    evaluated: u64,
    flipped_rows: u64,
    done: bool,
}

impl Search<'_> {
    fn offer(&mut self, support: &[usize], mrb_sum: f64, diff: &[u64]) {
        let score = mrb_sum + self.tables.sum(diff);
        self.evaluated += 1;
        self.flipped_rows += support.len() as u64;
        let better = match self.best {
            None => true,
            Some(b) => match self.tie_break {
                TieBreak::FirstFound => score < b.score,
                TieBreak::LowestIndexPattern => {
                    score < b.score
                        || (score == b.score
                            && (support.len(), support) < (b.weight, &self.best_support[..]))
                }
            },
        };
        if better {
            self.best = Some(Best {
                score,
                weight: support.len(),
            });
            self.best_support.clear();
            self.best_support.extend_from_slice(support);
        }
        if self.early_exit && score == 0.0 {
            self.done = true;
        }
    }

    /// Full layer of weight `w`, lexicographic, with incremental parity.
    fn layer(&mut self, base: &[u64], w: usize) {
        let mut stack = vec![0u64; (w + 1) * self.words];
        stack[..self.words].copy_from_slice(base);
        let mut support = Vec::with_capacity(w);
        self.rec(&mut stack, &mut support, w, 0, 0.0);
    }

    fn rec(&mut self, stack: &mut [u64], support: &mut Vec<usize>, w: usize, start: usize, sum: f64) {
        let depth = support.len();
        let wd = self.words;
        if depth == w {
            self.offer(support, sum, &stack[depth * wd..(depth + 1) * wd]);
            return;
        }
        for i in start..=self.k - (w - depth) {
            if self.done {
                return;
            }
            let (head, tail) = stack.split_at_mut((depth + 1) * wd);
            let cur = &head[depth * wd..];
            let row = &self.rows[i * wd..(i + 1) * wd];
            for t in 0..wd {
                tail[t] = cur[t] ^ row[t];
            }
            support.push(i);
            self.rec(stack, support, w, i + 1, sum + self.mrb_rel[i]);
            support.pop();
        }
    }

    fn partial_layer(&mut self, base: &[u64], w: usize, take: usize) {
        let mut diff = vec![0u64; self.words];
        for support in LightestSubsets::new(self.mrb_rel, w).take(take) {
            if self.done {
                return;
            }
            diff.copy_from_slice(base);
            for &i in &support {
                for t in 0..self.words {
                    diff[t] ^= self.rows[i * self.words + t];
                }
            }
            let sum = support_sum(self.mrb_rel, &support);
            self.offer(&support, sum, &diff);
        }
    }
}

fn pack(bits: impl Iterator<Item = bool>, words: usize) -> Vec<u64> {
    let mut out = vec![0u64; words];
    for (j, b) in bits.enumerate() {
        if b {
            out[j / 64] |= 1 << (j % 64);
        }
    }
    out
}

/// Order-`s` OS decoding of one observation.
pub fn decode(obs: &Observation, code: &LinearCode, cfg: &DecoderConfig) -> Result<DecodeResult> {
    let (n, k) = (code.n(), code.k());
    cfg.validate(k)?;
    let ord = sort_reliabilities(&obs.y, code.generator())?;
    let g = ord.generator();
    let m = n - k;
    let words = m.div_ceil(64).max(1);

    let mut rows = vec![0u64; k * words];
    for i in 0..k {
        let seg = g.row_segment(i, k, m);
        rows[i * words..(i + 1) * words].copy_from_slice(&seg[..words]);
    }
    // discrepancy of the re-encoded hard decisions on the parity segment
    let mut base = pack(ord.y[k..].iter().map(|&v| v > 0.0), words);
    for (i, &h) in ord.hard.iter().enumerate() {
        if h {
            for t in 0..words {
                base[t] ^= rows[i * words + t];
            }
        }
    }

    let mut search = Search {
        k,
        words,
        rows,
        tables: ParityTables::new(&ord.reliabilities[k..]),
        mrb_rel: &ord.reliabilities[..k],
        tie_break: cfg.tie_break,
        early_exit: cfg.early_exit,
        best: None,
        best_support: Vec::new(),
        evaluated: 0,
        flipped_rows: 0,
        done: false,
    };
    let full = cfg.s.floor() as usize;
    for w in 0..=full.min(k) {
        if search.done {
            break;
        }
        search.layer(&base, w);
    }
    let extra = partial_layer_size(k, cfg.s)?;
    if extra > 0 && !search.done {
        search.partial_layer(&base, full + 1, extra);
    }

    let best = search.best.expect("the empty pattern is always evaluated");
    let mut v = ord.hard.clone();
    for &i in &search.best_support {
        v[i] = !v[i];
    }
    let info_bits = mat_vec_mod2(&ord.form.transform, &v)?;
    let codeword = code.encode(&info_bits)?;

    let sum_sq: f64 = obs.y.iter().map(|v| v * v).sum();
    let sum_abs: f64 = obs.y.iter().map(|v| v.abs()).sum();
    let amp = obs.rho.sqrt();
    let base_dist = sum_sq + n as f64 * obs.rho - 2.0 * amp * sum_abs;
    let best_distance = (base_dist + 4.0 * amp * best.score).max(0.0);

    Ok(DecodeResult {
        info_bits,
        codeword,
        best_distance,
        teps_evaluated: search.evaluated,
        measured_xor_ops: ord.form.row_ops as u64 * n as u64 + search.flipped_rows * m as u64,
    })
}

/// Number of patterns a full (non-early-exit) decode at order `s` evaluates.
pub fn expected_teps(k: usize, s: Order) -> Result<u64> {
    tep_count(k, s)?
        .to_u64()
        .ok_or_else(|| Error::InvalidOrder(format!("order {s} needs too many patterns")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{modulate, transmit, trial_rng, ChannelParams};
    use crate::code::build_ebch;
    use rand::Rng;

    fn o(s: &str) -> Order {
        s.parse().unwrap()
    }

    fn noiseless(code: &LinearCode, msg: &[bool], rho: f64) -> Observation {
        let c = code.encode(msg).unwrap();
        Observation {
            y: modulate(&c).iter().map(|x| rho.sqrt() * x).collect(),
            rho,
        }
    }

    #[test]
    fn hand_sorted_example() {
        let g = BitMatrix::from_bit_strings(&["1100", "0011"]).unwrap();
        let ord = sort_reliabilities(&[0.1, -2.0, 0.5, 1.5], &g).unwrap();
        assert_eq!(&ord.permutation().map()[..2], &[1, 3]);
        assert_eq!(ord.hard, vec![false, true]);
        assert_eq!(ord.reliabilities, vec![2.0, 1.5, 0.5, 0.1]);
    }

    #[test]
    fn ties_keep_index_order() {
        let p = reliability_preference(&[1.0, -1.0, 0.5, 1.0]);
        assert_eq!(p.map(), &[0, 1, 3, 2]);
    }

    #[test]
    fn zero_noise_recovers_message() {
        let code = build_ebch(16, 11).unwrap();
        let mut rng = trial_rng(1, 1);
        for s in ["0", "1", "1.5", "2"] {
            let msg: Vec<bool> = (0..11).map(|_| rng.gen()).collect();
            let r = decode(&noiseless(&code, &msg, 2.0), &code, &DecoderConfig::new(o(s))).unwrap();
            assert_eq!(r.info_bits, msg);
            assert!(r.best_distance.abs() < 1e-9);
        }
    }

    #[test]
    fn corrects_single_flip_on_least_reliable_basis_position() {
        let code = build_ebch(16, 11).unwrap();
        let msg = vec![true, false, true, true, false, false, true, false, true, true, false];
        let mut obs = noiseless(&code, &msg, 1.0);
        // weakest MRB position flipped; the parity segment weaker still
        let map = sort_reliabilities(&obs.y, code.generator())
            .unwrap()
            .permutation()
            .map()
            .to_vec();
        let j = map[10];
        obs.y[j] *= -0.5;
        for &p in &map[11..] {
            obs.y[p] *= 0.4;
        }
        let ord = sort_reliabilities(&obs.y, code.generator()).unwrap();
        assert_eq!(ord.permutation().map()[10], j);
        let r0 = decode(&obs, &code, &DecoderConfig::new(o("0"))).unwrap();
        assert_ne!(r0.info_bits, msg);
        let r1 = decode(&obs, &code, &DecoderConfig::new(o("1"))).unwrap();
        assert_eq!(r1.info_bits, msg);
    }

    fn ml_oracle(obs: &Observation, code: &LinearCode) -> (Vec<bool>, f64) {
        let k = code.k();
        let amp = obs.rho.sqrt();
        let mut best: Option<(Vec<bool>, f64)> = None;
        for m in 0..1u32 << k {
            let msg: Vec<bool> = (0..k).map(|i| m >> i & 1 == 1).collect();
            let c = code.encode(&msg).unwrap();
            let d: f64 = obs
                .y
                .iter()
                .zip(&c)
                .map(|(y, &b)| (y - amp * if b { 1.0 } else { -1.0 }).powi(2))
                .sum();
            if best.as_ref().is_none_or(|b| d < b.1) {
                best = Some((c, d));
            }
        }
        best.unwrap()
    }

    #[test]
    fn full_order_is_maximum_likelihood() {
        let code = build_ebch(8, 4).unwrap();
        let params = ChannelParams::from_db(1.0).unwrap();
        let cfg = DecoderConfig::new(Order::integer(4));
        for t in 0..500 {
            let mut rng = trial_rng(77, t);
            let msg: Vec<bool> = (0..4).map(|_| rng.gen()).collect();
            let obs = transmit(&modulate(&code.encode(&msg).unwrap()), &params, &mut rng);
            let r = decode(&obs, &code, &cfg).unwrap();
            let (c, d) = ml_oracle(&obs, &code);
            assert_eq!(r.codeword, c);
            assert!((r.best_distance - d).abs() < 1e-9);
            assert_eq!(r.teps_evaluated, 16);
        }
    }

    #[test]
    fn distance_nonincreasing_in_order() {
        let code = build_ebch(32, 21).unwrap();
        let params = ChannelParams::from_db(2.0).unwrap();
        let orders = ["0", "0.5", "1", "1.25", "2", "2.5", "3"].map(o);
        for t in 0..100 {
            let mut rng = trial_rng(5, t);
            let msg: Vec<bool> = (0..21).map(|_| rng.gen()).collect();
            let obs = transmit(&modulate(&code.encode(&msg).unwrap()), &params, &mut rng);
            let mut prev = f64::INFINITY;
            for &s in &orders {
                let r = decode(&obs, &code, &DecoderConfig::new(s)).unwrap();
                assert_eq!(r.teps_evaluated, expected_teps(21, s).unwrap());
                assert!(r.best_distance <= prev);
                prev = r.best_distance;
            }
        }
    }

    #[test]
    fn early_exit_stops_on_perfect_agreement() {
        let code = build_ebch(16, 11).unwrap();
        let obs = noiseless(&code, &[false; 11], 4.0);
        let mut cfg = DecoderConfig::new(o("2"));
        cfg.early_exit = true;
        let r = decode(&obs, &code, &cfg).unwrap();
        assert_eq!(r.teps_evaluated, 1);
        assert_eq!(r.info_bits, vec![false; 11]);
    }

    #[test]
    fn required_orders() {
        let code = build_ebch(128, 64).unwrap();
        assert_eq!(required_order(&code), o("5"));
        assert_eq!(required_order_for(4, 4), o("0"));
        assert_eq!(required_order_for(40, 6), o("6"));
        assert_eq!(required_order_for(1, 6), o("0"));
    }

    #[test]
    fn rejects_excess_order() {
        let code = build_ebch(8, 4).unwrap();
        let obs = noiseless(&code, &[true; 4], 1.0);
        assert!(decode(&obs, &code, &DecoderConfig::new(o("4.5"))).is_err());
    }

    #[test]
    fn parity_tables_match_direct_sum() {
        let rel: Vec<f64> = (0..70).map(|i| 0.1 * i as f64 + 0.05).collect();
        let t = ParityTables::new(&rel);
        let mut rng = trial_rng(9, 0);
        for _ in 0..200 {
            let diff = vec![rng.gen::<u64>(), rng.gen::<u64>() & 0x3f];
            let direct: f64 = (0..70)
                .filter(|&j| diff[j / 64] >> (j % 64) & 1 == 1)
                .map(|j| rel[j])
                .sum();
            assert!((t.sum(&diff) - direct).abs() < 1e-9);
        }
    }
}
