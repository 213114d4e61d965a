//! Closed-form decoder complexity and latency accounting.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::{BigRational, Ratio};
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Order grid used when searching over `s`.
pub const ORDER_STEP_DENOM: u64 = 100;

/// Default soft-value width for complexity accounting.
pub const DEFAULT_Q_BITS: u32 = 8;

/// Non-negative rational decoder order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Order(Ratio<u64>);

impl Order {
    pub fn new(numer: u64, denom: u64) -> Result<Self> {
        if denom == 0 {
            return Err(Error::InvalidOrder("zero denominator".into()));
        }
        Ok(Order(Ratio::new(numer, denom)))
    }

    pub fn integer(s: u64) -> Self {
        Order(Ratio::from_integer(s))
    }

    /// `i / 100`.
    pub fn from_hundredths(i: u64) -> Self {
        Order(Ratio::new(i, ORDER_STEP_DENOM))
    }

    pub fn floor(&self) -> u64 {
        self.0.to_integer()
    }

    pub fn fract(&self) -> Ratio<u64> {
        self.0.fract()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn numer(&self) -> u64 {
        *self.0.numer()
    }

    pub fn denom(&self) -> u64 {
        *self.0.denom()
    }

    pub fn to_f64(&self) -> f64 {
        self.numer() as f64 / self.denom() as f64
    }

    pub fn check_against(&self, k: usize) -> Result<()> {
        if self.0 > Ratio::from_integer(k as u64) {
            return Err(Error::InvalidOrder(format!("order {self} exceeds k = {k}")));
        }
        Ok(())
    }
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (n, d) = (self.numer(), self.denom());
        if d == 1 {
            return write!(f, "{n}");
        }
        // terminating decimals print as decimals
        let mut rest = d;
        for p in [2, 5] {
            while rest % p == 0 {
                rest /= p;
            }
        }
        if rest == 1 {
            let mut digits = 0;
            let mut scale = 1u64;
            while scale % d != 0 {
                scale *= 10;
                digits += 1;
            }
            let scaled = n * (scale / d);
            let int = scaled / scale;
            let frac = scaled % scale;
            write!(f, "{int}.{frac:0digits$}")
        } else {
            write!(f, "{n}/{d}")
        }
    }
}

impl FromStr for Order {
    type Err = Error;

    /// Accepts `"2"`, `"2.5"` or `"5/2"`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidOrder(format!("cannot parse order {s:?}"));
        if let Some((n, d)) = s.split_once('/') {
            let n: u64 = n.trim().parse().map_err(|_| bad())?;
            let d: u64 = d.trim().parse().map_err(|_| bad())?;
            return Order::new(n, d);
        }
        if let Some((i, f)) = s.split_once('.') {
            if f.is_empty() || f.len() > 12 || !f.chars().all(|c| c.is_ascii_digit()) {
                return Err(bad());
            }
            let i: u64 = if i.is_empty() { 0 } else { i.parse().map_err(|_| bad())? };
            let scale = 10u64.pow(f.len() as u32);
            let f: u64 = f.parse().map_err(|_| bad())?;
            return Order::new(i * scale + f, scale);
        }
        Ok(Order::integer(s.parse().map_err(|_| bad())?))
    }
}

impl Serialize for Order {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Order {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Int(u64),
        }
        match Raw::deserialize(de)? {
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
            Raw::Int(i) => Ok(Order::integer(i)),
        }
    }
}

pub fn binomial(n: u64, r: u64) -> BigUint {
    if r > n {
        return BigUint::zero();
    }
    let r = r.min(n - r);
    let mut acc = BigUint::one();
    for i in 0..r {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// Number of test error patterns: all patterns of weight `<= floor(s)` plus
/// `floor(frac(s) * C(k, floor(s) + 1))` patterns of the next weight.
pub fn tep_count(k: usize, s: Order) -> Result<BigUint> {
    s.check_against(k)?;
    let k = k as u64;
    let w = s.floor();
    let mut total: BigUint = (0..=w).map(|i| binomial(k, i)).sum();
    if w < k && !s.is_integer() {
        let f = s.fract();
        total += (binomial(k, w + 1) * f.numer()).div_floor(&BigUint::from(*f.denom()));
    }
    Ok(total)
}

/// Number of next-weight patterns included at a fractional order.
pub fn fractional_tep_count(k: usize, s: Order) -> Result<BigUint> {
    s.check_against(k)?;
    let w = s.floor();
    if s.is_integer() || w >= k as u64 {
        return Ok(BigUint::zero());
    }
    let f = s.fract();
    Ok((binomial(k as u64, w + 1) * f.numer()).div_floor(&BigUint::from(*f.denom())))
}

/// Exact per-information-bit binary operation count
/// `K = n k + |L_TEP| / 2 * (n - q + q n / k)`.
pub fn per_bit_complexity_exact(n: usize, k: usize, q: u32, s: Order) -> Result<BigRational> {
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("need 1 <= k <= n, got k={k} n={n}")));
    }
    if q == 0 {
        return Err(Error::InvalidArgument("q must be >= 1".into()));
    }
    let teps = BigInt::from(tep_count(k, s)?);
    let (n, k, q) = (BigInt::from(n), BigInt::from(k), BigInt::from(q));
    let gj = &n * &k;
    let per_tep = BigRational::new(&k * (&n - &q) + &q * &n, &k * 2);
    Ok(BigRational::from_integer(gj) + BigRational::from_integer(teps) * per_tep)
}

pub fn per_bit_complexity(n: usize, k: usize, q: u32, s: Order) -> Result<f64> {
    let k_exact = per_bit_complexity_exact(n, k, q, s)?;
    Ok(ratio_to_f64(&k_exact))
}

pub(crate) fn ratio_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        let num = r.numer().to_f64().unwrap_or(f64::INFINITY);
        let den = r.denom().to_f64().unwrap_or(f64::INFINITY);
        num / den
    })
}

/// Leading-order growth `n k^s / Gamma(s+1)` against the exact `n C(k, floor s)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ComplexityOrder {
    pub expression: String,
    pub stirling_binomial: f64,
    pub exact_binomial: String,
    pub ratio_exact_to_stirling: f64,
    pub order_term: f64,
}

pub fn complexity_order(n: usize, k: usize, s: f64) -> Result<ComplexityOrder> {
    if s < 1.0 {
        return Err(Error::InvalidArgument(format!("order must be >= 1, got {s}")));
    }
    let stirling = (k as f64).powf(s) / statrs::function::gamma::gamma(s + 1.0);
    let exact = binomial(k as u64, s.floor() as u64);
    let exact_f = exact.to_f64().unwrap_or(f64::INFINITY);
    Ok(ComplexityOrder {
        expression: format!("O(n*k^s) = O({n}*{k}^{s})"),
        stirling_binomial: stirling,
        exact_binomial: exact.to_string(),
        ratio_exact_to_stirling: exact_f / stirling,
        order_term: n as f64 * stirling,
    })
}

/// Receiver timing model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HardwareProfile {
    /// Symbol duration (s).
    #[serde(rename = "T_s")]
    pub t_s: f64,
    /// Time per binary operation (s).
    #[serde(rename = "T_b")]
    pub t_b: f64,
    /// Parallelizable fraction of the decoding work.
    pub alpha: f64,
    /// Processor count.
    #[serde(rename = "P")]
    pub processors: u32,
}

impl Default for HardwareProfile {
    fn default() -> Self {
        HardwareProfile {
            t_s: 1e-6,
            t_b: 1e-9,
            alpha: 0.0,
            processors: 1,
        }
    }
}

impl HardwareProfile {
    pub fn new(t_s: f64, t_b: f64) -> Result<Self> {
        HardwareProfile {
            t_s,
            t_b,
            alpha: 0.0,
            processors: 1,
        }
        .validated()
    }

    pub fn validated(self) -> Result<Self> {
        if !(self.t_s > 0.0) {
            return Err(Error::InvalidArgument(format!("T_s must be > 0, got {}", self.t_s)));
        }
        if !(self.t_b >= 0.0) {
            return Err(Error::InvalidArgument(format!("T_b must be >= 0, got {}", self.t_b)));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidArgument(format!(
                "alpha must lie in [0, 1], got {}",
                self.alpha
            )));
        }
        if self.processors == 0 {
            return Err(Error::InvalidArgument("processor count must be >= 1".into()));
        }
        Ok(self)
    }

    /// Per-operation time after Amdahl speed-up.
    pub fn effective_tb(&self) -> f64 {
        effective_tb(self.t_b, amdahl_speedup(self.alpha, self.processors))
    }

    /// Same profile with `T_b` replaced by its parallel equivalent.
    pub fn parallelized(&self) -> HardwareProfile {
        HardwareProfile {
            t_b: self.effective_tb(),
            alpha: 0.0,
            processors: 1,
            ..*self
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct ComplexityReport {
    pub n: usize,
    pub k: usize,
    pub q: u32,
    pub s: Order,
    pub tep_count: String,
    #[serde(rename = "K")]
    pub k_ops: f64,
    #[serde(rename = "K_exact")]
    pub k_exact: String,
    pub log2_K: f64,
    #[serde(rename = "L_D")]
    pub l_d: f64,
    #[serde(rename = "L_A")]
    pub l_a: f64,
    pub hardware: HardwareProfile,
}

pub fn complexity_report(
    n: usize,
    k: usize,
    q: u32,
    s: Order,
    hw: &HardwareProfile,
) -> Result<ComplexityReport> {
    let exact = per_bit_complexity_exact(n, k, q, s)?;
    let k_ops = ratio_to_f64(&exact);
    let (l_d, l_a) = aggregate_latency(n, k, k_ops, &hw.parallelized());
    Ok(ComplexityReport {
        n,
        k,
        q,
        s,
        tep_count: tep_count(k, s)?.to_string(),
        k_ops,
        k_exact: exact.to_string(),
        log2_K: k_ops.log2(),
        l_d,
        l_a,
        hardware: *hw,
    })
}

/// `(L_D, L_A)` with `L_D = k K T_b` and `L_A = n T_s + L_D`.
pub fn aggregate_latency(n: usize, k: usize, k_ops: f64, hw: &HardwareProfile) -> (f64, f64) {
    let l_d = if hw.t_b == 0.0 {
        0.0
    } else {
        k as f64 * k_ops * hw.t_b
    };
    (l_d, n as f64 * hw.t_s + l_d)
}

/// Relative slack when comparing `L_M` against `n T_s`, so that e.g.
/// `1 ms / 1 us` counts as exactly 1000 symbols.
pub const TIME_REL_TOL: f64 = 1e-12;

pub(crate) fn airtime_fits(l_max: f64, n: usize, t_s: f64) -> bool {
    n as f64 * t_s <= l_max * (1.0 + TIME_REL_TOL)
}

/// Largest blocklength whose airtime fits in `l_max`.
pub fn max_blocklength(l_max: f64, t_s: f64) -> usize {
    (l_max / t_s * (1.0 + TIME_REL_TOL)).floor() as usize
}

/// Per-information-bit operation budget `(L_M - n T_s) / (k T_b)`;
/// `+inf` when `T_b = 0`.
pub fn complexity_budget(l_max: f64, n: usize, k: usize, hw: &HardwareProfile) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be >= 1".into()));
    }
    if !airtime_fits(l_max, n, hw.t_s) {
        return Err(Error::Infeasible(format!(
            "L_M = {l_max} s is shorter than the airtime n T_s = {} s",
            n as f64 * hw.t_s
        )));
    }
    if hw.t_b == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(((l_max - n as f64 * hw.t_s) / (k as f64 * hw.t_b)).max(0.0))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OrderBound {
    pub s_max_exact: Order,
    pub s_max_approx: f64,
    pub tau: f64,
    #[serde(rename = "K_budget")]
    pub k_budget: f64,
}

/// Largest grid order (step 0.01) whose complexity fits in `k_budget`,
/// alongside the binary-entropy approximation.
pub fn max_order(n: usize, k: usize, q: u32, k_budget: f64) -> Result<OrderBound> {
    let cost = |i: u64| per_bit_complexity_exact(n, k, q, Order::from_hundredths(i));
    let fits = |i: u64| -> Result<bool> {
        if k_budget.is_infinite() {
            return Ok(true);
        }
        Ok(ratio_to_f64(&cost(i)?) <= k_budget && rational_le_f64(&cost(i)?, k_budget))
    };
    if !fits(0)? {
        return Err(Error::Infeasible(format!(
            "no decoder fits: order-0 cost {} exceeds budget {k_budget}",
            per_bit_complexity(n, k, q, Order::integer(0))?
        )));
    }
    let (mut lo, mut hi) = (0u64, k as u64 * ORDER_STEP_DENOM);
    while lo < hi {
        let mid = (lo + hi).div_ceil(2);
        if fits(mid)? {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    // orders sharing a TEP count cost the same; report the smallest
    let best = tep_count(k, Order::from_hundredths(lo))?;
    let mut first = 0u64;
    let mut top = lo;
    while first < top {
        let mid = (first + top) / 2;
        if tep_count(k, Order::from_hundredths(mid))? < best {
            first = mid + 1;
        } else {
            top = mid;
        }
    }
    let lo = first;
    let tau = entropy_tau(n, k, q, k_budget);
    Ok(OrderBound {
        s_max_exact: Order::from_hundredths(lo),
        s_max_approx: s_max_approx(k, tau),
        tau,
        k_budget,
    })
}

fn rational_le_f64(r: &BigRational, x: f64) -> bool {
    match BigRational::from_float(x) {
        Some(xr) => *r <= xr,
        None => x.is_sign_positive(),
    }
}

/// `tau = (k K_budget - n k^2) / (n (k + q) - q k)`, i.e. the total budget
/// left for test patterns in units of the per-pattern cost.
pub fn entropy_tau(n: usize, k: usize, q: u32, k_budget: f64) -> f64 {
    let (n, k, q) = (n as f64, k as f64, q as f64);
    (k * k_budget - n * k * k) / (n * (k + q) - q * k)
}

/// `s ~ (k/2) (1 - sqrt(1 - ((1 + log2 tau) / k)^(4/3)))`, clamped to
/// `[0, k/2]` where the entropy bound stops being invertible.
pub fn s_max_approx(k: usize, tau: f64) -> f64 {
    let k = k as f64;
    if !(tau > 0.0) {
        return 0.0;
    }
    if tau.is_infinite() {
        return k / 2.0;
    }
    let x = (1.0 + tau.log2()) / k;
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        k / 2.0
    } else {
        0.5 * k * (1.0 - (1.0 - x.powf(4.0 / 3.0)).sqrt())
    }
}

/// Amdahl speed-up `1 / (alpha / P + (1 - alpha))`.
pub fn amdahl_speedup(alpha: f64, processors: u32) -> f64 {
    1.0 / (alpha / processors as f64 + (1.0 - alpha))
}

pub fn effective_tb(t_b: f64, speedup: f64) -> f64 {
    t_b / speedup
}

#[cfg(test)]
mod tests {
    use super::*;

    fn o(s: &str) -> Order {
        s.parse().unwrap()
    }

    #[test]
    fn order_parsing() {
        assert_eq!(o("2.5"), Order::new(5, 2).unwrap());
        assert_eq!(o("5/2"), o("2.50"));
        assert_eq!(o("3"), Order::integer(3));
        assert_eq!(o("0.25").to_string(), "0.25");
        assert_eq!(o("1/3").to_string(), "1/3");
        assert_eq!(Order::from_hundredths(250).to_string(), "2.5");
        assert!("x".parse::<Order>().is_err());
        assert!("1/0".parse::<Order>().is_err());
        assert!("-1".parse::<Order>().is_err());
    }

    #[test]
    fn tep_counts() {
        assert_eq!(tep_count(10, o("0")).unwrap(), BigUint::from(1u32));
        assert_eq!(tep_count(64, o("2")).unwrap(), BigUint::from(2081u32));
        assert_eq!(tep_count(64, o("2.5")).unwrap(), BigUint::from(22_913u32));
        assert_eq!(tep_count(64, o("5")).unwrap(), BigUint::from(8_303_633u32));
        assert_eq!(tep_count(4, o("4")).unwrap(), BigUint::from(16u32));
        assert!(tep_count(4, o("4.5")).is_err());
    }

    #[test]
    fn per_bit_examples() {
        assert_eq!(per_bit_complexity(128, 64, 8, o("0")).unwrap(), 8260.0);
        assert_eq!(per_bit_complexity(128, 64, 8, o("2")).unwrap(), 149_700.0);
        // rate one: n^2 + n / 2
        assert_eq!(per_bit_complexity(16, 16, 8, o("0")).unwrap(), 256.0 + 8.0);
    }

    #[test]
    fn monotone_in_order() {
        let mut prev = BigUint::zero();
        let mut prev_k = 0.0;
        for i in 0..=1600 {
            let s = Order::from_hundredths(i);
            let t = tep_count(16, s).unwrap();
            let kk = per_bit_complexity(32, 16, 8, s).unwrap();
            assert!(t >= prev && kk >= prev_k);
            prev = t;
            prev_k = kk;
        }
    }

    #[test]
    fn stirling_order() {
        let r = complexity_order(128, 64, 3.0).unwrap();
        assert!((r.stirling_binomial - 64f64.powi(3) / 6.0).abs() < 1e-6);
        assert!((0.9..=1.0).contains(&r.ratio_exact_to_stirling));
        let r = complexity_order(128, 64, 2.0).unwrap();
        assert_eq!(r.exact_binomial, "2016");
        assert!((r.stirling_binomial - 2048.0).abs() < 1e-9);
        let r = complexity_order(128, 64, 1.0).unwrap();
        assert_eq!(r.exact_binomial, "64");
        assert!(complexity_order(128, 64, 0.5).is_err());
    }

    #[test]
    fn latency_examples() {
        let hw = HardwareProfile::new(1e-6, 0.0).unwrap();
        assert_eq!(aggregate_latency(128, 64, 8260.0, &hw), (0.0, 128.0 * 1e-6));
        let hw = HardwareProfile::new(1e-6, 1e-9).unwrap();
        let (l_d, l_a) = aggregate_latency(128, 64, 8260.0, &hw);
        assert!((l_d - 528.64e-6).abs() < 1e-15);
        assert!((l_a - 656.64e-6).abs() < 1e-15);
        assert_eq!(aggregate_latency(128, 64, 0.0, &hw).1, 128e-6);
    }

    #[test]
    fn budget_examples() {
        let hw = HardwareProfile::new(1e-6, 1e-9).unwrap();
        assert_eq!(complexity_budget(128e-6, 128, 64, &hw).unwrap(), 0.0);
        let b = complexity_budget(1e-3, 128, 64, &hw).unwrap();
        assert!((b - 13_625.0).abs() < 1e-6);
        let free = HardwareProfile::new(1e-6, 0.0).unwrap();
        assert_eq!(complexity_budget(1e-3, 128, 64, &free).unwrap(), f64::INFINITY);
        assert!(matches!(
            complexity_budget(1e-4, 128, 64, &hw),
            Err(Error::Infeasible(_))
        ));
        assert_eq!(max_blocklength(1e-3, 1e-6), 1000);
    }

    #[test]
    fn max_order_examples() {
        let k0 = per_bit_complexity(128, 64, 8, o("0")).unwrap();
        assert_eq!(max_order(128, 64, 8, k0).unwrap().s_max_exact, o("0"));
        let k2 = per_bit_complexity(128, 64, 8, o("2")).unwrap();
        let b = max_order(128, 64, 8, k2 + 1.0).unwrap();
        assert_eq!(b.s_max_exact, o("2"));
        assert!(matches!(max_order(128, 64, 8, k0 - 1.0), Err(Error::Infeasible(_))));
        assert_eq!(max_order(16, 8, 8, f64::INFINITY).unwrap().s_max_exact, o("8"));
    }

    #[test]
    fn max_order_brackets_budget() {
        for &b in &[9e3, 2e4, 1e5, 3.3e5, 7e6, 1e8] {
            let bound = max_order(128, 64, 8, b).unwrap();
            let s = bound.s_max_exact;
            assert!(per_bit_complexity(128, 64, 8, s).unwrap() <= b);
            let i = s.numer() * (100 / s.denom());
            let next = (i + 1..=6400)
                .map(Order::from_hundredths)
                .find(|&t| tep_count(64, t).unwrap() > tep_count(64, s).unwrap())
                .unwrap();
            assert!(per_bit_complexity(128, 64, 8, next).unwrap() > b);
            if i > 0 {
                let prev = Order::from_hundredths(i - 1);
                assert!(tep_count(64, prev).unwrap() < tep_count(64, s).unwrap());
            }
        }
    }

    #[test]
    fn amdahl() {
        assert_eq!(amdahl_speedup(1.0, 8), 8.0);
        assert_eq!(amdahl_speedup(0.0, 5), 1.0);
        assert!((amdahl_speedup(0.9, 4) - 1.0 / 0.325).abs() < 1e-12);
        let u = amdahl_speedup(0.5, 4);
        assert!((1.0..=4.0).contains(&u));
        assert!(effective_tb(1e-9, u) <= 1e-9);
    }
}
