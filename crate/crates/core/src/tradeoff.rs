//! Complexity versus power-penalty law `F(dr) = 1 / (a sqrt(dr) + b)`.
//!
//! `dr` is the excess SNR over the finite-blocklength reference, in dB, and
//! `F` is the log2 of the per-information-bit decoder complexity.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::complexity::{complexity_budget, HardwareProfile, Order};
use crate::error::{Error, Result};
use crate::fb::normal_approx_rate_db;

pub const POINTS_CSV_HEADER: [&str; 6] = ["n", "k", "s", "delta_rho_db", "log2_K", "source"];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TradeoffModel {
    pub n: usize,
    pub a: f64,
    pub b: f64,
    pub fit_rmse: f64,
}

impl TradeoffModel {
    pub fn new(n: usize, a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "model needs a > 0 and b > 0, got a={a} b={b}"
            )));
        }
        Ok(TradeoffModel {
            n,
            a,
            b,
            fit_rmse: 0.0,
        })
    }

    /// `log2 K` predicted at penalty `delta_rho_db`; `1/b` at zero and `0`
    /// at infinity.
    pub fn predicted_log_complexity(&self, delta_rho_db: f64) -> Result<f64> {
        if !(delta_rho_db >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "power penalty must be >= 0 dB, got {delta_rho_db}"
            )));
        }
        Ok(1.0 / (self.a * delta_rho_db.sqrt() + self.b))
    }

    /// Smallest penalty whose predicted complexity fits `budget_ops`
    /// operations per information bit. `+inf` when no penalty does.
    pub fn min_penalty_for_budget(&self, budget_ops: f64) -> f64 {
        if budget_ops.is_infinite() {
            return 0.0;
        }
        let lb = budget_ops.log2();
        if !(lb > 0.0) {
            return f64::INFINITY;
        }
        if lb >= 1.0 / self.b {
            return 0.0;
        }
        let root = (1.0 / lb - self.b).max(0.0) / self.a;
        root * root
    }

    /// Minimum power penalty compatible with the latency limit `l_max`.
    pub fn min_power_penalty(
        &self,
        l_max: f64,
        n: usize,
        k: usize,
        hw: &HardwareProfile,
    ) -> Result<f64> {
        if hw.t_b > 0.0 && !(l_max > n as f64 * hw.t_s) {
            return Err(Error::Infeasible(format!(
                "L_M = {l_max} s leaves no decoding time after n T_s = {} s",
                n as f64 * hw.t_s
            )));
        }
        let budget = complexity_budget(l_max, n, k, hw)?;
        Ok(self.min_penalty_for_budget(budget))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointSource {
    #[default]
    Measured,
    Ingested,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct TradeoffPoint {
    pub n: usize,
    pub k: usize,
    #[serde(default)]
    pub s: Option<Order>,
    pub delta_rho_db: f64,
    pub log2_K: f64,
    #[serde(default)]
    pub source: PointSource,
}

pub fn write_points_csv<W: Write>(points: &[TradeoffPoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(POINTS_CSV_HEADER)?;
    for p in points {
        w.write_record([
            p.n.to_string(),
            p.k.to_string(),
            p.s.map(|s| s.to_string()).unwrap_or_default(),
            p.delta_rho_db.to_string(),
            p.log2_K.to_string(),
            match p.source {
                PointSource::Measured => "measured".into(),
                PointSource::Ingested => "ingested".into(),
            },
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_points_csv<R: Read>(input: R) -> Result<Vec<TradeoffPoint>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header != POINTS_CSV_HEADER {
        return Err(Error::InvalidArgument(format!(
            "expected CSV header {}, got {}",
            POINTS_CSV_HEADER.join(","),
            header.join(",")
        )));
    }
    let mut points = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let bad = |what: &str| Error::InvalidArgument(format!("row {}: bad {what}", line + 2));
        let field = |i: usize| rec.get(i).unwrap_or("").trim();
        let s = match field(2) {
            "" => None,
            t => Some(t.parse::<Order>().map_err(|_| bad("s"))?),
        };
        let p = TradeoffPoint {
            n: field(0).parse().map_err(|_| bad("n"))?,
            k: field(1).parse().map_err(|_| bad("k"))?,
            s,
            delta_rho_db: field(3).parse().map_err(|_| bad("delta_rho_db"))?,
            log2_K: field(4).parse().map_err(|_| bad("log2_K"))?,
            source: match field(5) {
                "" | "measured" => PointSource::Measured,
                "ingested" => PointSource::Ingested,
                _ => return Err(bad("source")),
            },
        };
        if !(p.delta_rho_db >= 0.0) || !(p.log2_K > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "row {}: needs delta_rho_db >= 0 and log2_K > 0",
                line + 2
            )));
        }
        points.push(p);
    }
    Ok(points)
}

pub fn load_points(path: impl AsRef<Path>) -> Result<Vec<TradeoffPoint>> {
    read_points_csv(std::fs::File::open(path)?)
}

pub fn save_points(points: &[TradeoffPoint], path: impl AsRef<Path>) -> Result<()> {
    write_points_csv(points, std::fs::File::create(path)?)
}

const FIT_GRAD_TOL: f64 = 1e-10;
const FIT_MAX_ITERS: usize = 500;

fn sse(xs: &[f64], ys: &[f64], a: f64, b: f64) -> Option<f64> {
    let mut s = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        let d = a * x + b;
        if !(d > 0.0) {
            return None;
        }
        s += (y - 1.0 / d).powi(2);
    }
    Some(s)
}

/// Least-squares fit of `F` to `points` for blocklength `n`.
///
/// Starts from ordinary least squares on `1/log2_K = a sqrt(dr) + b`, then
/// runs damped Gauss-Newton on the untransformed residuals.
pub fn fit(points: &[TradeoffPoint], n: usize) -> Result<TradeoffModel> {
    if points.len() < 2 {
        return Err(Error::Fit(format!("need at least 2 points, got {}", points.len())));
    }
    for p in points {
        if !(p.delta_rho_db >= 0.0) || !(p.log2_K > 0.0) {
            return Err(Error::Fit(format!(
                "point needs delta_rho_db >= 0 and log2_K > 0, got {} and {}",
                p.delta_rho_db, p.log2_K
            )));
        }
    }
    let xs: Vec<f64> = points.iter().map(|p| p.delta_rho_db.sqrt()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.log2_K).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Fit("all points share one power penalty".into()));
    }
    let us: Vec<f64> = ys.iter().map(|y| 1.0 / y).collect();
    let mu = us.iter().sum::<f64>() / m;
    let sxu: f64 = xs.iter().zip(&us).map(|(x, u)| (x - mx) * (u - mu)).sum();
    let mut a = sxu / sxx;
    let mut b = mu - a * mx;
    if sse(&xs, &ys, a, b).is_none() {
        return Err(Error::Fit(format!(
            "reciprocal fit gives a non-positive denominator (a={a}, b={b})"
        )));
    }

    let mut lambda = 1e-12;
    for _ in 0..FIT_MAX_ITERS {
        let (mut jaa, mut jab, mut jbb, mut ga, mut gb) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (&x, &y) in xs.iter().zip(&ys) {
            let d = a * x + b;
            let r = y - 1.0 / d;
            let (da, db) = (x / (d * d), 1.0 / (d * d));
            jaa += da * da;
            jab += da * db;
            jbb += db * db;
            ga += da * r;
            gb += db * r;
        }
        if ga.hypot(gb) <= FIT_GRAD_TOL {
            break;
        }
        let current = sse(&xs, &ys, a, b).expect("iterate keeps denominators positive");
        let mut improved = false;
        while lambda < 1e12 {
            let (paa, pbb) = (jaa * (1.0 + lambda), jbb * (1.0 + lambda));
            let det = paa * pbb - jab * jab;
            if det.abs() < f64::MIN_POSITIVE {
                lambda *= 10.0;
                continue;
            }
            let step_a = -(pbb * ga - jab * gb) / det;
            let step_b = -(paa * gb - jab * ga) / det;
            let (na, nb) = (a + step_a, b + step_b);
            match sse(&xs, &ys, na, nb) {
                Some(s) if s <= current => {
                    improved = s < current || (na == a && nb == b);
                    a = na;
                    b = nb;
                    lambda = (lambda / 10.0).max(1e-15);
                    break;
                }
                _ => lambda *= 10.0,
            }
        }
        if !improved {
            break;
        }
    }
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::Fit(format!(
            "best fit violates positivity (a={a}, b={b}); the data do not follow the model"
        )));
    }
    let rmse = (sse(&xs, &ys, a, b).unwrap_or(f64::INFINITY) / m).sqrt();
    Ok(TradeoffModel {
        n,
        a,
        b,
        fit_rmse: rmse,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interpolation {
    #[default]
    Nearest,
    Linear,
}

/// Trade-off models indexed by blocklength.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelTableJson", into = "ModelTableJson")]
pub struct ModelTable {
    entries: BTreeMap<usize, TradeoffModel>,
    interpolation: Interpolation,
}

#[derive(Serialize, Deserialize)]
struct ModelTableJson {
    entries: Vec<TradeoffModel>,
    #[serde(default)]
    interpolation: Interpolation,
}

impl TryFrom<ModelTableJson> for ModelTable {
    type Error = Error;
    fn try_from(j: ModelTableJson) -> Result<Self> {
        ModelTable::new(j.entries, j.interpolation)
    }
}

impl From<ModelTable> for ModelTableJson {
    fn from(t: ModelTable) -> Self {
        ModelTableJson {
            entries: t.entries.into_values().collect(),
            interpolation: t.interpolation,
        }
    }
}

impl ModelTable {
    pub fn new(models: Vec<TradeoffModel>, interpolation: Interpolation) -> Result<Self> {
        if models.is_empty() {
            return Err(Error::InvalidArgument("model table is empty".into()));
        }
        let mut entries = BTreeMap::new();
        for m in models {
            TradeoffModel::new(m.n, m.a, m.b)?;
            if entries.insert(m.n, m).is_some() {
                return Err(Error::InvalidArgument(format!("duplicate model for n = {}", m.n)));
            }
        }
        Ok(ModelTable {
            entries,
            interpolation,
        })
    }

    pub fn single(model: TradeoffModel) -> Self {
        ModelTable::new(vec![model], Interpolation::Nearest).expect("validated model")
    }

    pub fn interpolation(&self) -> Interpolation {
        self.interpolation
    }

    pub fn entries(&self) -> impl Iterator<Item = &TradeoffModel> {
        self.entries.values()
    }

    /// Model used at blocklength `n`. Nearest picks the closest entry, the
    /// smaller `n` on ties; linear interpolates `(a, b)` between the
    /// neighbours and clamps outside the table.
    pub fn model_for(&self, n: usize) -> TradeoffModel {
        if let Some(m) = self.entries.get(&n) {
            return *m;
        }
        let below = self.entries.range(..n).next_back().map(|(_, m)| *m);
        let above = self.entries.range(n..).next().map(|(_, m)| *m);
        let pick = match (below, above) {
            (Some(lo), Some(hi)) => match self.interpolation {
                Interpolation::Nearest => {
                    if n - lo.n <= hi.n - n {
                        lo
                    } else {
                        hi
                    }
                }
                Interpolation::Linear => {
                    let t = (n - lo.n) as f64 / (hi.n - lo.n) as f64;
                    TradeoffModel {
                        n,
                        a: lo.a + t * (hi.a - lo.a),
                        b: lo.b + t * (hi.b - lo.b),
                        fit_rmse: lo.fit_rmse.max(hi.fit_rmse),
                    }
                }
            },
            (Some(m), None) | (None, Some(m)) => m,
            (None, None) => unreachable!("table is never empty"),
        };
        TradeoffModel { n, ..pick }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_reader(std::fs::File::open(path)?)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(&mut f, self)?;
        writeln!(f)?;
        Ok(())
    }
}

/// Largest rate `k/n` supported at transmit SNR `rho_db` once the decoder
/// pays its minimum power penalty.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaxRate {
    pub n: usize,
    pub k: usize,
    /// `k / n`; zero when infeasible.
    pub rate: f64,
    pub delta_rho_m_db: f64,
    pub feasible: bool,
}

fn rate_feasible(
    model: &TradeoffModel,
    n: usize,
    k: usize,
    rho_db: f64,
    epsilon: f64,
    l_max: f64,
    hw: &HardwareProfile,
) -> Result<Option<f64>> {
    let dr = match model.min_power_penalty(l_max, n, k, hw) {
        Ok(d) if d.is_finite() => d,
        Ok(_) | Err(Error::Infeasible(_)) => return Ok(None),
        Err(e) => return Err(e),
    };
    let r = normal_approx_rate_db(n, rho_db - dr, epsilon)?;
    Ok((k as f64 / n as f64 <= r).then_some(dr))
}

/// Complexity-constrained maximal rate at blocklength `n`.
///
/// Feasible `k` form a prefix of `1..=n`: the penalty grows with `k` while the
/// rate `k/n` grows too. The boundary is found by bisection.
pub fn constrained_max_rate(
    models: &ModelTable,
    n: usize,
    rho_db: f64,
    epsilon: f64,
    l_max: f64,
    hw: &HardwareProfile,
) -> Result<MaxRate> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be >= 1".into()));
    }
    let model = models.model_for(n);
    let infeasible = MaxRate {
        n,
        k: 0,
        rate: 0.0,
        delta_rho_m_db: f64::INFINITY,
        feasible: false,
    };
    let Some(mut best_dr) = rate_feasible(&model, n, 1, rho_db, epsilon, l_max, hw)? else {
        return Ok(infeasible);
    };
    let (mut lo, mut hi) = (1usize, n);
    while lo < hi {
        let mid = (lo + hi).div_ceil(2);
        match rate_feasible(&model, n, mid, rho_db, epsilon, l_max, hw)? {
            Some(dr) => {
                lo = mid;
                best_dr = dr;
            }
            None => hi = mid - 1,
        }
    }
    if lo > 1 {
        best_dr = rate_feasible(&model, n, lo, rho_db, epsilon, l_max, hw)?
            .expect("bisection keeps lo feasible");
    }
    Ok(MaxRate {
        n,
        k: lo,
        rate: lo as f64 / n as f64,
        delta_rho_m_db: best_dr,
        feasible: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fb::normal_approx_rate_db;

    fn model(a: f64, b: f64) -> TradeoffModel {
        TradeoffModel::new(128, a, b).unwrap()
    }

    fn synth(a: f64, b: f64, drs: &[f64]) -> Vec<TradeoffPoint> {
        drs.iter()
            .map(|&d| TradeoffPoint {
                n: 128,
                k: 64,
                s: None,
                delta_rho_db: d,
                log2_K: 1.0 / (a * d.sqrt() + b),
                source: PointSource::Ingested,
            })
            .collect()
    }

    #[test]
    fn prediction_examples() {
        let m = model(0.3, 0.04);
        assert_eq!(m.predicted_log_complexity(0.0).unwrap(), 25.0);
        assert!((m.predicted_log_complexity(1.0).unwrap() - 1.0 / 0.34).abs() < 1e-12);
        assert_eq!(m.predicted_log_complexity(f64::INFINITY).unwrap(), 0.0);
        assert!(m.predicted_log_complexity(-0.1).is_err());
        let mut prev = f64::INFINITY;
        for i in 0..200 {
            let f = m.predicted_log_complexity(0.05 * i as f64).unwrap();
            assert!(f < prev);
            prev = f;
        }
    }

    #[test]
    fn fit_recovers_generator() {
        let pts = synth(0.3, 0.04, &[0.0, 0.5, 1.0, 2.0, 4.0]);
        let m = fit(&pts, 128).unwrap();
        assert!((m.a - 0.3).abs() < 1e-6 && (m.b - 0.04).abs() < 1e-6, "{m:?}");
        assert!(m.fit_rmse <= 1e-9);
    }

    #[test]
    fn fit_two_points_interpolates() {
        let pts = synth(0.1, 0.05, &[0.5, 3.0]);
        let m = fit(&pts, 64).unwrap();
        assert!(m.fit_rmse < 1e-12);
        for p in &pts {
            assert!((m.predicted_log_complexity(p.delta_rho_db).unwrap() - p.log2_K).abs() < 1e-9);
        }
    }

    #[test]
    fn fit_rejects_degenerate_input() {
        assert!(fit(&synth(0.3, 0.04, &[1.0, 1.0, 1.0]), 128).is_err());
        assert!(fit(&synth(0.3, 0.04, &[1.0]), 128).is_err());
        // complexity growing with penalty cannot be fitted with a, b > 0
        let mut pts = synth(0.3, 0.04, &[0.0, 1.0, 2.0]);
        pts.reverse();
        for (p, d) in pts.iter_mut().zip([0.0, 1.0, 2.0]) {
            p.delta_rho_db = d;
        }
        assert!(matches!(fit(&pts, 128), Err(Error::Fit(_))));
    }

    #[test]
    fn fit_noisy_points_reduces_error() {
        let mut pts = synth(0.05, 0.03, &[0.3, 0.6, 1.0, 1.5, 2.5, 4.0]);
        for (i, p) in pts.iter_mut().enumerate() {
            p.log2_K += if i % 2 == 0 { 0.3 } else { -0.3 };
        }
        let m = fit(&pts, 128).unwrap();
        assert!(m.a > 0.0 && m.b > 0.0);
        // the refined fit beats the reciprocal initialization
        let xs: Vec<f64> = pts.iter().map(|p| p.delta_rho_db.sqrt()).collect();
        let ys: Vec<f64> = pts.iter().map(|p| p.log2_K).collect();
        let fitted = sse(&xs, &ys, m.a, m.b).unwrap();
        for (da, db) in [(1e-4, 0.0), (-1e-4, 0.0), (0.0, 1e-4), (0.0, -1e-4)] {
            assert!(fitted <= sse(&xs, &ys, m.a + da, m.b + db).unwrap());
        }
    }

    #[test]
    fn penalty_examples() {
        let m = model(0.3, 0.04);
        assert!((m.min_penalty_for_budget(1024.0) - 0.04).abs() < 1e-12);
        assert_eq!(m.min_penalty_for_budget(2f64.powi(25)), 0.0);
        assert_eq!(m.min_penalty_for_budget(f64::INFINITY), 0.0);
        assert_eq!(m.min_penalty_for_budget(1.0), f64::INFINITY);
        let hw = HardwareProfile::new(1e-6, 0.0).unwrap();
        assert_eq!(m.min_power_penalty(1e-3, 128, 64, &hw).unwrap(), 0.0);
        let hw = HardwareProfile::new(1e-6, 1e-9).unwrap();
        assert!(m.min_power_penalty(128e-6, 128, 64, &hw).is_err());
    }

    #[test]
    fn penalty_vanishing_threshold() {
        let m = model(0.3, 0.04);
        let (l_max, n, k) = (1e-3, 128usize, 64usize);
        let threshold = (l_max - n as f64 * 1e-6) / (k as f64 * 2f64.powf(1.0 / m.b));
        for f in [0.25, 0.5, 0.9, 0.999, 1.001, 1.1, 2.0, 10.0] {
            let hw = HardwareProfile::new(1e-6, threshold * f).unwrap();
            let d = m.min_power_penalty(l_max, n, k, &hw).unwrap();
            assert_eq!(d == 0.0, f <= 1.0, "factor {f}: {d}");
        }
    }

    #[test]
    fn penalty_nonincreasing_in_budget() {
        let m = model(0.05, 0.03);
        let mut prev = f64::INFINITY;
        for i in 0..400 {
            let d = m.min_penalty_for_budget(2f64.powf(0.1 * i as f64));
            assert!(d <= prev);
            prev = d;
        }
    }

    #[test]
    fn table_lookup() {
        let t = ModelTable::new(
            vec![
                TradeoffModel::new(100, 0.1, 0.02).unwrap(),
                TradeoffModel::new(200, 0.3, 0.04).unwrap(),
            ],
            Interpolation::Nearest,
        )
        .unwrap();
        assert_eq!(t.model_for(150).a, 0.1);
        assert_eq!(t.model_for(151).a, 0.3);
        assert_eq!(t.model_for(10).a, 0.1);
        assert_eq!(t.model_for(999).b, 0.04);
        let lin = ModelTable::new(t.entries().copied().collect(), Interpolation::Linear).unwrap();
        assert!((lin.model_for(150).a - 0.2).abs() < 1e-15);
        let json = serde_json::to_string(&lin).unwrap();
        assert!(json.contains("\"interpolation\":\"linear\""));
        assert_eq!(serde_json::from_str::<ModelTable>(&json).unwrap(), lin);
        assert!(serde_json::from_str::<ModelTable>(r#"{"entries":[]}"#).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let mut pts = synth(0.3, 0.04, &[0.0, 1.0]);
        pts[0].s = Some("2.5".parse().unwrap());
        pts[1].source = PointSource::Measured;
        let mut buf = Vec::new();
        write_points_csv(&pts, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("n,k,s,delta_rho_db,log2_K,source\n"));
        assert_eq!(read_points_csv(&buf[..]).unwrap(), pts);
        assert!(read_points_csv("a,b\n1,2\n".as_bytes()).is_err());
    }

    fn scan_max_rate(
        t: &ModelTable,
        n: usize,
        rho_db: f64,
        eps: f64,
        l_max: f64,
        hw: &HardwareProfile,
    ) -> usize {
        let m = t.model_for(n);
        (1..=n)
            .rev()
            .find(|&k| {
                let budget = (l_max - n as f64 * hw.t_s) / (k as f64 * hw.t_b);
                let dr = m.min_penalty_for_budget(if hw.t_b == 0.0 { f64::INFINITY } else { budget });
                dr.is_finite()
                    && k as f64 / n as f64 <= normal_approx_rate_db(n, rho_db - dr, eps).unwrap()
            })
            .unwrap_or(0)
    }

    #[test]
    fn max_rate_matches_scan() {
        let t = ModelTable::single(model(0.05, 0.035));
        for &(tb, rho) in &[(1e-9, 5.0), (1e-10, 3.0), (1e-11, 7.0), (2e-9, 10.0), (1e-8, 5.0)] {
            let hw = HardwareProfile::new(1e-6, tb).unwrap();
            let got = constrained_max_rate(&t, 128, rho, 1e-5, 1e-3, &hw).unwrap();
            assert_eq!(got.k, scan_max_rate(&t, 128, rho, 1e-5, 1e-3, &hw));
        }
    }

    #[test]
    fn max_rate_without_decoding_cost() {
        let t = ModelTable::single(model(0.05, 0.035));
        let hw = HardwareProfile::new(1e-6, 0.0).unwrap();
        let got = constrained_max_rate(&t, 128, 4.0, 1e-5, 1e-3, &hw).unwrap();
        let r = normal_approx_rate_db(128, 4.0, 1e-5).unwrap();
        assert_eq!(got.k, (128.0 * r).floor() as usize);
        assert_eq!(got.delta_rho_m_db, 0.0);
        let low = constrained_max_rate(&t, 128, -15.0, 1e-5, 1e-3, &hw).unwrap();
        assert!(!low.feasible && low.rate == 0.0);
    }

    #[test]
    fn max_rate_monotone_in_snr_and_below_bound() {
        let t = ModelTable::single(model(0.05, 0.035));
        let hw = HardwareProfile::new(1e-6, 1e-9).unwrap();
        let mut prev = 0.0;
        for i in 0..30 {
            let rho = -2.0 + 0.5 * i as f64;
            let m = constrained_max_rate(&t, 128, rho, 1e-5, 1e-3, &hw).unwrap();
            assert!(m.rate >= prev);
            assert!(m.rate <= normal_approx_rate_db(128, rho, 1e-5).unwrap().max(0.0));
            prev = m.rate;
        }
    }
}
