//! Monte Carlo codeword-error estimation and SNR search.
//!
//! Trial `t` draws its message and noise from a generator keyed by
//! `(seed, t)` only, so results do not depend on how trials are spread over
//! worker threads, and every SNR probe and decoder order sees the same noise.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{db_to_linear, modulate, trial_rng, Observation};
use crate::code::LinearCode;
use crate::complexity::{per_bit_complexity, Order};
use crate::error::{Error, Result};
use crate::fb::reference_snr_db;
use crate::osd::{decode, DecoderConfig};
use crate::tradeoff::{PointSource, TradeoffPoint};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

pub const DEFAULT_TARGET_ERRORS: u64 = 100;
pub const DEFAULT_MAX_TRIALS: u64 = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StopRule {
    pub target_errors: u64,
    pub max_trials: u64,
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule {
            target_errors: DEFAULT_TARGET_ERRORS,
            max_trials: DEFAULT_MAX_TRIALS,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MessageMode {
    #[default]
    Random,
    /// Transmit the all-zero codeword; the random message bits are still
    /// drawn so the noise matches the random-message run.
    AllZero,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CepEstimate {
    pub rho_db: f64,
    pub cep: f64,
    pub trials: u64,
    pub errors: u64,
    pub ci95: (f64, f64),
    pub seed: u64,
}

/// Wilson score interval for `errors` out of `trials`.
pub fn wilson_interval(errors: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = errors as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let lo = if errors == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if errors == trials { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimOptions {
    pub seed: u64,
    pub workers: usize,
    pub messages: MessageMode,
}

impl SimOptions {
    pub fn new(seed: u64) -> Self {
        SimOptions {
            seed,
            workers: 1,
            messages: MessageMode::Random,
        }
    }

    pub fn with_workers(self, workers: usize) -> Self {
        SimOptions { workers, ..self }
    }
}

/// Message and unit-variance noise of trial `t`.
pub fn trial_draw(seed: u64, t: u64, k: usize, n: usize, mode: MessageMode) -> (Vec<bool>, Vec<f64>) {
    let mut rng = trial_rng(seed, t);
    let mut msg: Vec<bool> = (0..k).map(|_| rng.gen()).collect();
    let noise = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    if mode == MessageMode::AllZero {
        msg.iter_mut().for_each(|b| *b = false);
    }
    (msg, noise)
}

/// Received word for trial `t` at linear SNR `rho`.
pub fn trial_observation(
    code: &LinearCode,
    rho: f64,
    seed: u64,
    t: u64,
    mode: MessageMode,
) -> Result<(Vec<bool>, Observation)> {
    let (msg, noise) = trial_draw(seed, t, code.k(), code.n(), mode);
    let x = modulate(&code.encode(&msg)?);
    let amp = rho.sqrt();
    let y = x.iter().zip(&noise).map(|(xi, z)| amp * xi + z).collect();
    Ok((msg, Observation { y, rho }))
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))
}

const CHUNK_PER_WORKER: u64 = 64;

/// Runs `trial` over `0..max_trials` in parallel chunks and stops at the
/// first index where `stop(errors, trials)` holds, scanning results in trial
/// order so the stopping point never depends on the worker count.
fn run_trials<F, S>(workers: usize, max_trials: u64, trial: F, mut stop: S) -> Result<(u64, u64)>
where
    F: Fn(u64) -> Result<bool> + Sync,
    S: FnMut(u64, u64) -> bool,
{
    let pool = pool(workers)?;
    let chunk = CHUNK_PER_WORKER * workers.max(1) as u64;
    let (mut errors, mut trials) = (0u64, 0u64);
    while trials < max_trials {
        let end = (trials + chunk).min(max_trials);
        let flags: Vec<bool> = pool.install(|| {
            (trials..end)
                .into_par_iter()
                .map(&trial)
                .collect::<Result<Vec<bool>>>()
        })?;
        for f in flags {
            trials += 1;
            errors += f as u64;
            if stop(errors, trials) {
                return Ok((errors, trials));
            }
        }
    }
    Ok((errors, trials))
}

fn check_stop(stop: &StopRule) -> Result<()> {
    if stop.target_errors == 0 || stop.max_trials == 0 {
        return Err(Error::InvalidArgument(
            "target_errors and max_trials must be >= 1".into(),
        ));
    }
    Ok(())
}

/// Codeword error probability of order-`s` decoding at `rho_db`.
pub fn estimate_cep(
    code: &LinearCode,
    cfg: &DecoderConfig,
    rho_db: f64,
    stop: &StopRule,
    opts: &SimOptions,
) -> Result<CepEstimate> {
    check_stop(stop)?;
    cfg.validate(code.k())?;
    let rho = db_to_linear(rho_db);
    let trial = |t: u64| -> Result<bool> {
        let (msg, obs) = trial_observation(code, rho, opts.seed, t, opts.messages)?;
        Ok(decode(&obs, code, cfg)?.info_bits != msg)
    };
    let target = stop.target_errors;
    let (errors, trials) = run_trials(opts.workers, stop.max_trials, trial, |e, _| e >= target)?;
    Ok(estimate(rho_db, errors, trials, opts.seed))
}

fn estimate(rho_db: f64, errors: u64, trials: u64, seed: u64) -> CepEstimate {
    CepEstimate {
        rho_db,
        cep: errors as f64 / trials as f64,
        trials,
        errors,
        ci95: wilson_interval(errors, trials, Z95),
        seed,
    }
}

/// Same as [`estimate_cep`] with an arbitrary per-trial decision rule, used
/// to run reference decoders through identical trials.
pub fn estimate_cep_with<D>(
    code: &LinearCode,
    rho_db: f64,
    stop: &StopRule,
    opts: &SimOptions,
    decide: D,
) -> Result<CepEstimate>
where
    D: Fn(&Observation) -> Result<Vec<bool>> + Sync,
{
    check_stop(stop)?;
    let rho = db_to_linear(rho_db);
    let trial = |t: u64| -> Result<bool> {
        let (msg, obs) = trial_observation(code, rho, opts.seed, t, opts.messages)?;
        Ok(decide(&obs)? != msg)
    };
    let target = stop.target_errors;
    let (errors, trials) = run_trials(opts.workers, stop.max_trials, trial, |e, _| e >= target)?;
    Ok(estimate(rho_db, errors, trials, opts.seed))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnrSearch {
    pub lo_db: f64,
    pub hi_db: f64,
    pub bracket_tol_db: f64,
    pub target_errors: u64,
    /// Per-probe trial cap; `None` uses `ceil(4 target_errors / epsilon)`.
    pub max_trials: Option<u64>,
}

impl Default for SnrSearch {
    fn default() -> Self {
        SnrSearch {
            lo_db: 0.0,
            hi_db: 6.0,
            bracket_tol_db: 0.05,
            target_errors: DEFAULT_TARGET_ERRORS,
            max_trials: None,
        }
    }
}

pub const SEARCH_FLOOR_DB: f64 = -10.0;
pub const SEARCH_CEIL_DB: f64 = 20.0;
const BRACKET_STEP_DB: f64 = 2.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnrSearchResult {
    pub rho_db: f64,
    pub bracket: (f64, f64),
    pub epsilon: f64,
    pub probes: Vec<CepEstimate>,
}

/// Early-decision interval for probes (99.9% two-sided).
const Z_EARLY: f64 = 3.290_526_731_491_926;
/// Errors needed before a probe may stop early as "above target".
const MIN_EARLY_ERRORS: u64 = 10;

/// A probe stops early once its 99.9% interval lies entirely above
/// `epsilon` (with at least 10 errors) or entirely below it; otherwise it
/// runs to the stop rule and compares the point estimate.
fn probe<F>(rho_db: f64, epsilon: f64, search: &SnrSearch, opts: &SimOptions, trial: &F) -> Result<CepEstimate>
where
    F: Fn(f64, u64) -> Result<bool> + Sync,
{
    let cap = search
        .max_trials
        .unwrap_or_else(|| (4.0 * search.target_errors as f64 / epsilon).ceil() as u64)
        .max(1);
    let target = search.target_errors;
    let rho = db_to_linear(rho_db);
    let (errors, trials) = run_trials(
        opts.workers,
        cap,
        |t| trial(rho, t),
        |e, n| {
            if e >= target {
                return true;
            }
            let (lo, hi) = wilson_interval(e, n, Z_EARLY);
            (e >= MIN_EARLY_ERRORS && lo > epsilon) || hi < epsilon
        },
    )?;
    Ok(estimate(rho_db, errors, trials, opts.seed))
}

/// Bisection on SNR (dB) for the point where the error rate crosses
/// `epsilon`, with automatic bracket expansion inside `[-10, 20]` dB.
pub fn required_snr_with<F>(
    epsilon: f64,
    search: &SnrSearch,
    opts: &SimOptions,
    trial: F,
) -> Result<SnrSearchResult>
where
    F: Fn(f64, u64) -> Result<bool> + Sync,
{
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidArgument(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    if !(search.bracket_tol_db > 0.0) || search.target_errors == 0 {
        return Err(Error::InvalidArgument("search needs tolerance > 0 and target_errors >= 1".into()));
    }
    let mut probes = Vec::new();
    let above = |rho_db: f64, probes: &mut Vec<CepEstimate>| -> Result<bool> {
        let p = probe(rho_db, epsilon, search, opts, &trial)?;
        probes.push(p);
        Ok(p.cep > epsilon)
    };
    let mut lo = search.lo_db.clamp(SEARCH_FLOOR_DB, SEARCH_CEIL_DB);
    let mut hi = search.hi_db.clamp(SEARCH_FLOOR_DB, SEARCH_CEIL_DB).max(lo);
    while !above(lo, &mut probes)? {
        if lo <= SEARCH_FLOOR_DB {
            return Err(Error::Search(format!(
                "error rate stays below {epsilon} down to {SEARCH_FLOOR_DB} dB"
            )));
        }
        hi = lo;
        lo = (lo - BRACKET_STEP_DB).max(SEARCH_FLOOR_DB);
    }
    if hi <= lo {
        hi = lo + BRACKET_STEP_DB;
    }
    while above(hi, &mut probes)? {
        if hi >= SEARCH_CEIL_DB {
            return Err(Error::Search(format!(
                "error rate stays above {epsilon} up to {SEARCH_CEIL_DB} dB"
            )));
        }
        lo = hi;
        hi = (hi + BRACKET_STEP_DB).min(SEARCH_CEIL_DB);
    }
    while hi - lo > search.bracket_tol_db {
        let mid = 0.5 * (lo + hi);
        if above(mid, &mut probes)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(SnrSearchResult {
        rho_db: 0.5 * (lo + hi),
        bracket: (lo, hi),
        epsilon,
        probes,
    })
}

/// SNR at which order-`s` decoding reaches codeword error rate `epsilon`.
pub fn required_snr_for_cep(
    code: &LinearCode,
    cfg: &DecoderConfig,
    epsilon: f64,
    search: &SnrSearch,
    opts: &SimOptions,
) -> Result<SnrSearchResult> {
    cfg.validate(code.k())?;
    required_snr_with(epsilon, search, opts, |rho, t| {
        let (msg, obs) = trial_observation(code, rho, opts.seed, t, opts.messages)?;
        Ok(decode(&obs, code, cfg)?.info_bits != msg)
    })
}

/// Several decoder orders run on the same trials.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SharedNoiseReport {
    pub rho_db: f64,
    pub orders: Vec<Order>,
    pub trials: u64,
    pub errors: Vec<u64>,
    /// Trials where a higher order found a strictly larger distance.
    pub distance_violations: u64,
}

pub fn shared_noise_trials(
    code: &LinearCode,
    cfgs: &[DecoderConfig],
    rho_db: f64,
    trials: u64,
    opts: &SimOptions,
) -> Result<SharedNoiseReport> {
    for c in cfgs {
        c.validate(code.k())?;
    }
    let mut sorted: Vec<&DecoderConfig> = cfgs.iter().collect();
    sorted.sort_by_key(|c| c.s);
    let rho = db_to_linear(rho_db);
    let pool = pool(opts.workers)?;
    let per_trial: Vec<(Vec<bool>, bool)> = pool.install(|| {
        (0..trials)
            .into_par_iter()
            .map(|t| -> Result<(Vec<bool>, bool)> {
                let (msg, obs) = trial_observation(code, rho, opts.seed, t, opts.messages)?;
                let mut errs = Vec::with_capacity(sorted.len());
                let mut prev = f64::INFINITY;
                let mut monotone = true;
                for cfg in &sorted {
                    let r = decode(&obs, code, cfg)?;
                    errs.push(r.info_bits != msg);
                    monotone &= r.best_distance <= prev;
                    prev = r.best_distance;
                }
                Ok((errs, monotone))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut errors = vec![0u64; sorted.len()];
    let mut violations = 0;
    for (errs, monotone) in &per_trial {
        for (acc, &e) in errors.iter_mut().zip(errs) {
            *acc += e as u64;
        }
        violations += !monotone as u64;
    }
    Ok(SharedNoiseReport {
        rho_db,
        orders: sorted.iter().map(|c| c.s).collect(),
        trials,
        errors,
        distance_violations: violations,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TradeoffRun {
    pub rho_r_db: f64,
    pub points: Vec<TradeoffPoint>,
    pub searches: Vec<SnrSearchResult>,
}

/// Power penalty over the finite-blocklength reference for each order.
///
/// The reference is an approximation that can sit above the measured SNR for
/// short codes; such penalties are recorded as 0 dB. The raw search results
/// are kept in `searches`.
///
/// Orders are processed from the highest down and each search starts just
/// above the previous answer, since lower orders need more SNR.
pub fn build_tradeoff_dataset(
    code: &LinearCode,
    orders: &[Order],
    epsilon: f64,
    q_bits: u32,
    search: &SnrSearch,
    opts: &SimOptions,
) -> Result<TradeoffRun> {
    if orders.is_empty() {
        return Err(Error::InvalidArgument("no orders given".into()));
    }
    let (n, k) = (code.n(), code.k());
    let rho_r_db = reference_snr_db(n, k as f64 / n as f64, epsilon)?;
    let mut desc: Vec<Order> = orders.to_vec();
    desc.sort();
    desc.dedup();
    desc.reverse();
    let mut results = Vec::with_capacity(desc.len());
    let mut window = *search;
    for &s in &desc {
        let mut cfg = DecoderConfig::new(s);
        cfg.q_bits = q_bits;
        let r = required_snr_for_cep(code, &cfg, epsilon, &window, opts)?;
        let width = (search.hi_db - search.lo_db).max(BRACKET_STEP_DB);
        window.lo_db = r.bracket.0;
        window.hi_db = r.bracket.0 + width;
        results.push((s, r));
    }
    results.reverse();
    let mut points = Vec::with_capacity(results.len());
    let mut searches = Vec::with_capacity(results.len());
    for (s, r) in results {
        points.push(TradeoffPoint {
            n,
            k,
            s: Some(s),
            delta_rho_db: (r.rho_db - rho_r_db).max(0.0),
            log2_K: per_bit_complexity(n, k, q_bits, s)?.log2(),
            source: PointSource::Measured,
        });
        searches.push(r);
    }
    Ok(TradeoffRun {
        rho_r_db,
        points,
        searches,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::build_ebch;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn wilson_basics() {
        let (lo, hi) = wilson_interval(0, 100, Z95);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.05);
        let (lo, hi) = wilson_interval(50, 100, Z95);
        assert!(lo < 0.5 && hi > 0.5 && (0.5 - lo - (hi - 0.5)).abs() < 1e-12);
        assert_eq!(wilson_interval(0, 0, Z95), (0.0, 1.0));
    }

    #[test]
    fn wilson_coverage() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for &p in &[0.01, 0.05, 0.2] {
            let mut covered = 0;
            for _ in 0..500 {
                let n = 2000u64;
                let e = (0..n).filter(|_| rng.gen::<f64>() < p).count() as u64;
                let (lo, hi) = wilson_interval(e, n, Z95);
                covered += (lo <= p && p <= hi) as u32;
            }
            let rate = covered as f64 / 500.0;
            assert!((rate - 0.95).abs() <= 0.02, "p={p}: {rate}");
        }
    }

    #[test]
    fn noise_free_limit() {
        let code = build_ebch(8, 4).unwrap();
        let stop = StopRule {
            target_errors: 1,
            max_trials: 10_000,
        };
        let e = estimate_cep(&code, &DecoderConfig::new(Order::integer(0)), 20.0, &stop, &SimOptions::new(1))
            .unwrap();
        assert_eq!((e.errors, e.trials), (0, 10_000));
    }

    #[test]
    fn worker_count_does_not_matter() {
        let code = build_ebch(16, 11).unwrap();
        let cfg = DecoderConfig::new(Order::integer(1));
        let stop = StopRule {
            target_errors: 37,
            max_trials: 100_000,
        };
        let a = estimate_cep(&code, &cfg, 3.0, &stop, &SimOptions::new(9)).unwrap();
        let b = estimate_cep(&code, &cfg, 3.0, &stop, &SimOptions::new(9).with_workers(3)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.errors, 37);
    }

    #[test]
    fn linear_code_symmetry() {
        let code = build_ebch(16, 11).unwrap();
        let cfg = DecoderConfig::new(Order::integer(1));
        let stop = StopRule {
            target_errors: u64::MAX,
            max_trials: 20_000,
        };
        let rnd = estimate_cep(&code, &cfg, 2.0, &stop, &SimOptions::new(4)).unwrap();
        let zero_opts = SimOptions {
            messages: MessageMode::AllZero,
            ..SimOptions::new(4)
        };
        let zero = estimate_cep(&code, &cfg, 2.0, &stop, &zero_opts).unwrap();
        assert!(rnd.ci95.0 <= zero.ci95.1 && zero.ci95.0 <= rnd.ci95.1);
    }

    #[test]
    fn shared_noise_is_monotone() {
        let code = build_ebch(32, 21).unwrap();
        let cfgs: Vec<_> = ["0", "1", "1.5", "2"]
            .iter()
            .map(|s| DecoderConfig::new(s.parse().unwrap()))
            .collect();
        let r = shared_noise_trials(&code, &cfgs, 2.0, 400, &SimOptions::new(3)).unwrap();
        assert_eq!(r.distance_violations, 0);
        assert!(r.errors.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn snr_search_orders_by_epsilon() {
        let code = build_ebch(16, 11).unwrap();
        let cfg = DecoderConfig::new(Order::integer(2));
        let search = SnrSearch {
            lo_db: 0.0,
            hi_db: 4.0,
            bracket_tol_db: 0.1,
            target_errors: 50,
            max_trials: None,
        };
        let opts = SimOptions::new(8);
        let half = required_snr_for_cep(&code, &cfg, 0.5, &search, &opts).unwrap();
        let tight = required_snr_for_cep(&code, &cfg, 1e-2, &search, &opts).unwrap();
        assert!(half.rho_db < tight.rho_db);
        assert!(tight.bracket.1 - tight.bracket.0 <= 0.1);
    }

    #[test]
    fn search_fails_outside_range() {
        let opts = SimOptions::new(1);
        let never = required_snr_with(0.1, &SnrSearch::default(), &opts, |_, _| Ok(true));
        assert!(matches!(never, Err(Error::Search(_))));
        let always = required_snr_with(0.1, &SnrSearch::default(), &opts, |_, _| Ok(false));
        assert!(matches!(always, Err(Error::Search(_))));
    }
}
