//! The three link-design problems: minimum aggregate latency, minimum
//! energy per information bit and maximum information bits, each solved by a
//! linear scan over the blocklength, plus a brute-force oracle that works on
//! the raw constraints.

use std::io::Write;
use std::ops::RangeInclusive;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{db_to_linear, linear_to_db};
use crate::complexity::{
    aggregate_latency, max_blocklength, max_order, HardwareProfile, Order, DEFAULT_Q_BITS,
    TIME_REL_TOL,
};
use crate::error::{Error, Result};
use crate::fb::{capacity_dispersion, normal_approx_rate_db, qfunc_inv, reference_snr_db};
use crate::tradeoff::{constrained_max_rate, ModelTable, TradeoffModel};

/// Largest blocklength scanned by default.
pub const N_SCAN_MAX: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Problem {
    Latency,
    Energy,
    InfoBits,
}

impl FromStr for Problem {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "latency" => Ok(Problem::Latency),
            "energy" => Ok(Problem::Energy),
            "info-bits" => Ok(Problem::InfoBits),
            _ => Err(Error::InvalidArgument(format!(
                "unknown problem {s:?}; expected latency, energy or info-bits"
            ))),
        }
    }
}

/// Reliability, power and latency requirements.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemConstraints {
    pub epsilon_m: f64,
    /// Maximum transmit SNR in dB; `+inf` removes the power limit.
    pub rho_m_db: f64,
    /// Maximum aggregate latency (s).
    #[serde(rename = "L_M", default, skip_serializing_if = "Option::is_none")]
    pub l_max: Option<f64>,
}

impl SystemConstraints {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon_m > 0.0 && self.epsilon_m < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "epsilon_m must lie in (0, 1), got {}",
                self.epsilon_m
            )));
        }
        if self.rho_m_db.is_nan() || self.rho_m_db == f64::NEG_INFINITY {
            return Err(Error::InvalidArgument(format!(
                "rho_m must be a dB value or +inf, got {}",
                self.rho_m_db
            )));
        }
        if let Some(l) = self.l_max {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::InvalidArgument(format!("L_M must be > 0, got {l}")));
            }
        }
        Ok(())
    }

    fn require_l_max(&self) -> Result<f64> {
        self.l_max
            .ok_or_else(|| Error::InvalidArgument("this problem needs a latency limit L_M".into()))
    }
}

/// The operating point chosen by an optimizer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct Design {
    pub n: usize,
    pub k: usize,
    pub rate: f64,
    /// Largest grid order whose complexity fits `K`; absent when even order
    /// zero is too expensive.
    pub s: Option<Order>,
    /// Closed-form order estimate (latency problem only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_closed_form: Option<f64>,
    pub rho_r_db: f64,
    pub delta_rho_db: f64,
    /// Transmit SNR `rho_r + delta_rho` (dB).
    pub rho_db: f64,
    pub K: f64,
    pub log2_K: f64,
    pub L_A: f64,
    /// Energy per information bit, `10^((rho_r + delta_rho)/10) / r`, in
    /// units of the noise level.
    pub e_b: f64,
    pub e_b_db: f64,
    /// `k` reachable with unlimited decoding speed (information-bit problem).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_inf: Option<usize>,
    pub model_a: f64,
    pub model_b: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignPoint {
    pub problem: Problem,
    pub feasible: bool,
    #[serde(flatten, default, skip_serializing_if = "Option::is_none")]
    pub design: Option<Design>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl DesignPoint {
    fn infeasible(problem: Problem, reason: impl Into<String>) -> Self {
        DesignPoint {
            problem,
            feasible: false,
            design: None,
            reason: Some(reason.into()),
        }
    }
}

/// Per-blocklength result of a scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct CurvePoint {
    pub n: usize,
    pub feasible: bool,
    pub k: Option<usize>,
    pub rho_r_db: Option<f64>,
    pub delta_rho_db: Option<f64>,
    pub log2_K: Option<f64>,
    pub L_A: Option<f64>,
    pub e_b: Option<f64>,
    pub objective: Option<f64>,
}

pub const CURVE_CSV_HEADER: [&str; 9] = [
    "n",
    "feasible",
    "k",
    "rho_r_db",
    "delta_rho_db",
    "log2_K",
    "L_A",
    "e_b",
    "objective",
];

pub fn write_curve_csv<W: Write>(curve: &[CurvePoint], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CURVE_CSV_HEADER)?;
    for c in curve {
        w.serialize(c)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub point: DesignPoint,
    /// One row per scanned blocklength, ascending.
    pub curve: Vec<CurvePoint>,
}

/// Closed-form order for a decoder of `log2 K = f`:
/// `s ~ (k - sqrt(k^2 - cbrt(k^2 eta^4))) / 2` with `eta = f + 1 - log2 n`,
/// clamped to `[0, k/2]`.
pub fn closed_form_order(n: usize, k: usize, f: f64) -> f64 {
    let eta = f + 1.0 - (n as f64).log2();
    let k = k as f64;
    if !(eta > 0.0) {
        return 0.0;
    }
    let inner = k * k - (k * k * eta.powi(4)).cbrt();
    if inner <= 0.0 {
        k / 2.0
    } else {
        0.5 * (k - inner.sqrt())
    }
}

fn resolve_range(
    default: RangeInclusive<usize>,
    requested: Option<RangeInclusive<usize>>,
    min_n: usize,
) -> Result<RangeInclusive<usize>> {
    let r = requested.unwrap_or(default);
    if r.start() < &min_n.max(1) {
        return Err(Error::InvalidArgument(format!(
            "blocklength range must start at n >= {}, got {}",
            min_n.max(1),
            r.start()
        )));
    }
    Ok(r)
}

fn scan_upper(l_max: Option<f64>, hw: &HardwareProfile) -> usize {
    match l_max {
        Some(l) => N_SCAN_MAX.min(max_blocklength(l, hw.t_s)),
        None => N_SCAN_MAX,
    }
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be >= 1".into()));
    }
    Ok(())
}

/// Reference SNR for `k` bits in `n` symbols, `None` if no finite SNR
/// supports the rate. With an unlimited power budget a rate-one code is
/// admitted at infinite SNR.
fn reference_for(n: usize, k: usize, eps: f64, rho_m_db: f64) -> Result<Option<f64>> {
    if k >= n {
        return Ok((k == n && rho_m_db == f64::INFINITY).then_some(f64::INFINITY));
    }
    match reference_snr_db(n, k as f64 / n as f64, eps) {
        Ok(r) => Ok(Some(r)),
        Err(Error::Infeasible(_)) | Err(Error::Search(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

fn latency_fits(l_a: f64, l_max: Option<f64>) -> bool {
    l_max.map_or(true, |l| l_a <= l * (1.0 + TIME_REL_TOL))
}

#[derive(Clone, Copy, Debug)]
struct Candidate {
    n: usize,
    k: usize,
    rho_r_db: f64,
    delta_rho_db: f64,
    log2_k: f64,
    l_a: f64,
    model: TradeoffModel,
}

impl Candidate {
    fn rho_db(&self) -> f64 {
        if self.delta_rho_db.is_infinite() {
            f64::INFINITY
        } else {
            self.rho_r_db + self.delta_rho_db
        }
    }

    fn e_b(&self) -> f64 {
        db_to_linear(self.rho_db()) / (self.k as f64 / self.n as f64)
    }

    fn curve(&self, objective: f64) -> CurvePoint {
        CurvePoint {
            n: self.n,
            feasible: true,
            k: Some(self.k),
            rho_r_db: Some(self.rho_r_db),
            delta_rho_db: Some(self.delta_rho_db),
            log2_K: Some(self.log2_k),
            L_A: Some(self.l_a),
            e_b: Some(self.e_b()),
            objective: Some(objective),
        }
    }
}

fn infeasible_row(n: usize, rho_r_db: Option<f64>) -> CurvePoint {
    CurvePoint {
        n,
        feasible: false,
        k: None,
        rho_r_db,
        delta_rho_db: None,
        log2_K: None,
        L_A: None,
        e_b: None,
        objective: None,
    }
}

fn pick<F: Fn(&Candidate) -> f64>(
    scan: &[(Option<Candidate>, CurvePoint)],
    objective: F,
    maximize: bool,
) -> Option<Candidate> {
    let mut best: Option<(f64, Candidate)> = None;
    for c in scan.iter().filter_map(|(c, _)| c.as_ref()) {
        let v = objective(c);
        let better = match best {
            None => true,
            Some((b, _)) => {
                if maximize {
                    v > b
                } else {
                    v < b
                }
            }
        };
        if better {
            best = Some((v, *c));
        }
    }
    best.map(|(_, c)| c)
}

fn design_from(c: &Candidate, q: u32) -> Result<Design> {
    let k_ops = c.log2_k.exp2();
    let s = match max_order(c.n, c.k, q, k_ops) {
        Ok(b) => Some(b.s_max_exact),
        Err(Error::Infeasible(_)) => None,
        Err(e) => return Err(e),
    };
    let e_b = c.e_b();
    Ok(Design {
        n: c.n,
        k: c.k,
        rate: c.k as f64 / c.n as f64,
        s,
        s_closed_form: None,
        rho_r_db: c.rho_r_db,
        delta_rho_db: c.delta_rho_db,
        rho_db: c.rho_db(),
        K: k_ops,
        log2_K: c.log2_k,
        L_A: c.l_a,
        e_b,
        e_b_db: linear_to_db(e_b),
        k_inf: None,
        model_a: c.model.a,
        model_b: c.model.b,
    })
}

/// Post-hoc feasibility check on every returned design.
fn verify(d: &Design, c: &SystemConstraints) -> Result<()> {
    let ok = d.k >= 1
        && d.k <= d.n
        && d.delta_rho_db >= 0.0
        && (d.rho_db <= c.rho_m_db || d.rho_db - c.rho_m_db <= 1e-9)
        && latency_fits(d.L_A, c.l_max)
        && d.s.map_or(true, |s| s.to_f64() <= d.k as f64);
    if ok {
        Ok(())
    } else {
        Err(Error::Search(format!("optimizer returned a design violating its constraints: {d:?}")))
    }
}

fn finish(
    problem: Problem,
    best: Option<Candidate>,
    curve: Vec<CurvePoint>,
    constraints: &SystemConstraints,
    tweak: impl FnOnce(&mut Design) -> Result<()>,
) -> Result<Solution> {
    let point = match best {
        None => DesignPoint::infeasible(problem, "no blocklength in range satisfies the constraints"),
        Some(c) => {
            let mut d = design_from(&c, DEFAULT_Q_BITS)?;
            tweak(&mut d)?;
            verify(&d, constraints)?;
            DesignPoint {
                problem,
                feasible: true,
                design: Some(d),
                reason: None,
            }
        }
    };
    Ok(Solution { point, curve })
}

/// Minimum aggregate latency for `k` information bits.
///
/// For each `n` the decoder runs at the full power budget, `dr = rho_m -
/// rho_r`, which gives the cheapest decoder `K = 2^F(dr)`.
pub fn minimize_latency(
    k: usize,
    constraints: &SystemConstraints,
    hw: &HardwareProfile,
    models: &ModelTable,
    n_range: Option<RangeInclusive<usize>>,
) -> Result<Solution> {
    check_k(k)?;
    constraints.validate()?;
    let hw = hw.validated()?.parallelized();
    let range = resolve_range(k..=scan_upper(constraints.l_max, &hw), n_range, k)?;
    let eps = constraints.epsilon_m;
    let rho_m = constraints.rho_m_db;

    let scan: Vec<(Option<Candidate>, CurvePoint)> = range
        .into_par_iter()
        .map(|n| -> Result<_> {
            let Some(rho_r) = reference_for(n, k, eps, rho_m)? else {
                return Ok((None, infeasible_row(n, None)));
            };
            if rho_r > rho_m {
                return Ok((None, infeasible_row(n, Some(rho_r))));
            }
            let dr = if rho_m.is_infinite() { f64::INFINITY } else { rho_m - rho_r };
            let model = models.model_for(n);
            let f = model.predicted_log_complexity(dr)?;
            let (_, l_a) = aggregate_latency(n, k, f.exp2(), &hw);
            if !latency_fits(l_a, constraints.l_max) {
                return Ok((None, infeasible_row(n, Some(rho_r))));
            }
            let c = Candidate {
                n,
                k,
                rho_r_db: rho_r,
                delta_rho_db: dr,
                log2_k: f,
                l_a,
                model,
            };
            Ok((Some(c), c.curve(l_a)))
        })
        .collect::<Result<_>>()?;

    let best = pick(&scan, |c| c.l_a, false);
    let curve = scan.into_iter().map(|(_, p)| p).collect();
    finish(Problem::Latency, best, curve, constraints, |d| {
        d.s_closed_form = Some(closed_form_order(d.n, d.k, d.log2_K));
        Ok(())
    })
}

/// Minimum energy per information bit for `k` bits under the latency limit.
///
/// For each `n` the smallest admissible penalty is the one that exactly
/// exhausts the decoding-time budget.
pub fn minimize_energy(
    k: usize,
    constraints: &SystemConstraints,
    hw: &HardwareProfile,
    models: &ModelTable,
    n_range: Option<RangeInclusive<usize>>,
) -> Result<Solution> {
    check_k(k)?;
    constraints.validate()?;
    let l_max = constraints.require_l_max()?;
    let hw = hw.validated()?.parallelized();
    let range = resolve_range(k..=scan_upper(Some(l_max), &hw), n_range, k)?;
    let eps = constraints.epsilon_m;
    let rho_m = constraints.rho_m_db;

    let scan: Vec<(Option<Candidate>, CurvePoint)> = range
        .into_par_iter()
        .map(|n| -> Result<_> {
            let Some(rho_r) = reference_for(n, k, eps, rho_m)? else {
                return Ok((None, infeasible_row(n, None)));
            };
            if rho_r.is_infinite() || rho_r > rho_m {
                return Ok((None, infeasible_row(n, Some(rho_r))));
            }
            let model = models.model_for(n);
            let dr = match model.min_power_penalty(l_max, n, k, &hw) {
                Ok(d) if d.is_finite() && rho_r + d <= rho_m => d,
                Ok(_) | Err(Error::Infeasible(_)) => return Ok((None, infeasible_row(n, Some(rho_r)))),
                Err(e) => return Err(e),
            };
            let f = model.predicted_log_complexity(dr)?;
            let (_, l_a) = aggregate_latency(n, k, f.exp2(), &hw);
            let c = Candidate {
                n,
                k,
                rho_r_db: rho_r,
                delta_rho_db: dr,
                log2_k: f,
                l_a,
                model,
            };
            Ok((Some(c), c.curve(c.e_b())))
        })
        .collect::<Result<_>>()?;

    let best = pick(&scan, Candidate::e_b, false);
    let curve = scan.into_iter().map(|(_, p)| p).collect();
    finish(Problem::Energy, best, curve, constraints, |_| Ok(()))
}

/// `k` achievable with unlimited decoding speed: the whole latency budget
/// goes to airtime, `k_inf = floor(n_inf R(n_inf, rho_m, eps))`.
pub fn k_infinite(constraints: &SystemConstraints, t_s: f64) -> Result<usize> {
    let l_max = constraints.require_l_max()?;
    let n_inf = max_blocklength(l_max, t_s);
    if n_inf == 0 {
        return Ok(0);
    }
    let r = normal_approx_rate_db(n_inf, constraints.rho_m_db, constraints.epsilon_m)?;
    Ok((n_inf as f64 * r).floor().max(0.0) as usize)
}

/// Largest number of information bits deliverable within the constraints.
pub fn maximize_info_bits(
    constraints: &SystemConstraints,
    hw: &HardwareProfile,
    models: &ModelTable,
    n_range: Option<RangeInclusive<usize>>,
) -> Result<Solution> {
    constraints.validate()?;
    let l_max = constraints.require_l_max()?;
    if !constraints.rho_m_db.is_finite() {
        return Err(Error::InvalidArgument(
            "maximizing information bits needs a finite rho_m".into(),
        ));
    }
    let hw = hw.validated()?.parallelized();
    let range = resolve_range(1..=scan_upper(Some(l_max), &hw), n_range, 1)?;
    let eps = constraints.epsilon_m;
    let rho_m = constraints.rho_m_db;

    let scan: Vec<(Option<Candidate>, CurvePoint)> = range
        .into_par_iter()
        .map(|n| -> Result<_> {
            let mr = constrained_max_rate(models, n, rho_m, eps, l_max, &hw)?;
            if !mr.feasible {
                return Ok((None, infeasible_row(n, None)));
            }
            let rho_r = reference_snr_db(n, mr.rate, eps)?;
            let model = models.model_for(n);
            let f = model.predicted_log_complexity(mr.delta_rho_m_db)?;
            let (_, l_a) = aggregate_latency(n, mr.k, f.exp2(), &hw);
            let c = Candidate {
                n,
                k: mr.k,
                rho_r_db: rho_r,
                delta_rho_db: mr.delta_rho_m_db,
                log2_k: f,
                l_a,
                model,
            };
            Ok((Some(c), c.curve(mr.k as f64)))
        })
        .collect::<Result<_>>()?;

    let best = pick(&scan, |c| c.k as f64, true);
    let curve = scan.into_iter().map(|(_, p)| p).collect();
    let k_inf = k_infinite(constraints, hw.t_s)?;
    finish(Problem::InfoBits, best, curve, constraints, |d| {
        d.k_inf = Some(k_inf);
        Ok(())
    })
}

/// Penalty grid used by [`brute_force_oracle`].
#[derive(Clone, Copy, Debug)]
pub struct OracleGrid {
    pub step_db: f64,
    /// Largest SNR drop below `rho_m` considered (dB).
    pub span_db: f64,
}

impl Default for OracleGrid {
    fn default() -> Self {
        OracleGrid {
            step_db: 0.01,
            span_db: 40.0,
        }
    }
}

/// Optimum found by exhaustive search.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleResult {
    pub n: usize,
    pub k: usize,
    pub delta_rho_db: f64,
    pub rho_db: f64,
    pub objective: f64,
}

fn bisect_last_true<F: Fn(f64) -> bool>(lo: f64, hi: f64, pred: F) -> f64 {
    // pred(lo) holds, pred(hi) fails; returns the true side.
    let (mut lo, mut hi) = (lo, hi);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if pred(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

struct RawProblem<'a> {
    k_fixed: Option<usize>,
    c: SystemConstraints,
    hw: HardwareProfile,
    models: &'a ModelTable,
    grid: Vec<f64>,
    // (C, V) at rho_m - grid[i]
    cv: Vec<(f64, f64)>,
    qinv: f64,
}

impl RawProblem<'_> {
    fn rate_at(&self, n: usize, c: f64, v: f64) -> f64 {
        c - (v / n as f64).sqrt() * self.qinv * std::f64::consts::LOG2_E
    }

    fn rate_ok(&self, n: usize, k: usize, rho_db: f64) -> bool {
        let (c, v) = capacity_dispersion(db_to_linear(rho_db));
        k as f64 / n as f64 <= self.rate_at(n, c, v)
    }

    fn latency(&self, n: usize, k: usize, model: &TradeoffModel, dr: f64) -> f64 {
        let f = 1.0 / (model.a * dr.sqrt() + model.b);
        n as f64 * self.hw.t_s + k as f64 * f.exp2() * self.hw.t_b
    }

    fn latency_ok(&self, l_a: f64) -> bool {
        latency_fits(l_a, self.c.l_max)
    }
}

/// Exhaustive search over `(n, k, dr)` honouring the raw constraints
/// `L_A <= L_M`, `rho <= rho_m` and `k/n <= R(n, rho - dr, eps)`, with the
/// penalty on a uniform grid plus the bisection-refined constraint
/// boundaries. Intended for small ranges. `k` is ignored for
/// [`Problem::InfoBits`].
pub fn brute_force_oracle(
    problem: Problem,
    k: usize,
    constraints: &SystemConstraints,
    hw: &HardwareProfile,
    models: &ModelTable,
    n_range: RangeInclusive<usize>,
    grid: OracleGrid,
) -> Result<Option<OracleResult>> {
    constraints.validate()?;
    if !constraints.rho_m_db.is_finite() {
        return Err(Error::InvalidArgument("oracle needs a finite rho_m".into()));
    }
    if problem != Problem::Latency {
        constraints.require_l_max()?;
    }
    let steps = (grid.span_db / grid.step_db).round() as usize;
    let pen: Vec<f64> = (0..=steps).map(|i| i as f64 * grid.step_db).collect();
    let cv = pen
        .iter()
        .map(|&d| capacity_dispersion(db_to_linear(constraints.rho_m_db - d)))
        .collect();
    let raw = RawProblem {
        k_fixed: (problem != Problem::InfoBits).then_some(k),
        c: *constraints,
        hw: hw.validated()?.parallelized(),
        models,
        grid: pen,
        cv,
        qinv: qfunc_inv(constraints.epsilon_m)?,
    };
    let per_n: Vec<Option<OracleResult>> = n_range
        .into_par_iter()
        .map(|n| match problem {
            Problem::Latency | Problem::Energy => raw.fixed_k(problem, n),
            Problem::InfoBits => raw.best_k(n),
        })
        .collect();
    let maximize = problem == Problem::InfoBits;
    let mut best: Option<OracleResult> = None;
    for r in per_n.into_iter().flatten() {
        let better = match best {
            None => true,
            Some(b) if maximize => r.objective > b.objective,
            Some(b) => r.objective < b.objective,
        };
        if better {
            best = Some(r);
        }
    }
    Ok(best)
}

impl RawProblem<'_> {
    fn fixed_k(&self, problem: Problem, n: usize) -> Option<OracleResult> {
        let k = self.k_fixed?;
        if k > n {
            return None;
        }
        let model = self.models.model_for(n);
        let rho_m = self.c.rho_m_db;
        let lowest = rho_m - self.grid[self.grid.len() - 1];
        // smallest rho_r meeting the rate constraint, searched directly
        if !self.rate_ok(n, k, rho_m) {
            return None;
        }
        let rho_r = if self.rate_ok(n, k, lowest) {
            lowest
        } else {
            -bisect_last_true(-rho_m, -lowest, |x| self.rate_ok(n, k, -x))
        };
        let dr_max = rho_m - rho_r;
        let mut cands: Vec<f64> = self.grid.iter().copied().filter(|&d| d <= dr_max).collect();
        cands.push(dr_max);
        if problem == Problem::Energy {
            let fits = |d: f64| self.latency_ok(self.latency(n, k, &model, d));
            if fits(0.0) {
                cands.push(0.0);
            } else if fits(dr_max) {
                cands.push(bisect_last_true(dr_max, 0.0, fits));
            }
        }
        let r = k as f64 / n as f64;
        let mut best: Option<OracleResult> = None;
        for dr in cands {
            let l_a = self.latency(n, k, &model, dr);
            if !self.latency_ok(l_a) || rho_r + dr > rho_m {
                continue;
            }
            let rho = rho_r + dr;
            let objective = match problem {
                Problem::Latency => l_a,
                _ => db_to_linear(rho) / r,
            };
            if best.map_or(true, |b| objective < b.objective) {
                best = Some(OracleResult {
                    n,
                    k,
                    delta_rho_db: dr,
                    rho_db: rho,
                    objective,
                });
            }
        }
        best
    }

    fn best_k(&self, n: usize) -> Option<OracleResult> {
        let model = self.models.model_for(n);
        let rho_m = self.c.rho_m_db;
        let span = self.grid[self.grid.len() - 1];
        let mut best = None;
        for k in 1..=n {
            let fits = |d: f64| self.latency_ok(self.latency(n, k, &model, d));
            let boundary = if fits(0.0) {
                Some(0.0)
            } else if fits(span) {
                Some(bisect_last_true(span, 0.0, fits))
            } else {
                None
            };
            let Some(dc) = boundary else { continue };
            let mut ok = self.rate_ok(n, k, rho_m - dc);
            if !ok {
                ok = self
                    .grid
                    .iter()
                    .zip(&self.cv)
                    .any(|(&d, &(c, v))| d >= dc && k as f64 / n as f64 <= self.rate_at(n, c, v));
            }
            if ok {
                best = Some(OracleResult {
                    n,
                    k,
                    delta_rho_db: dc,
                    rho_db: rho_m,
                    objective: k as f64,
                });
            }
        }
        best
    }
}
