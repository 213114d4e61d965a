use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;
use serde_json::{json, Value};

use urllc_core::code::{build_ebch, LinearCode};
use urllc_core::complexity::{
    amdahl_speedup, complexity_budget, complexity_report, max_blocklength, max_order,
    HardwareProfile, Order,
};
use urllc_core::fb::fb_point;
use urllc_core::optimize::{
    maximize_info_bits, minimize_energy, minimize_latency, write_curve_csv, SystemConstraints,
    N_SCAN_MAX,
};
use urllc_core::osd::{required_order, DecoderConfig};
use urllc_core::sim::{
    build_tradeoff_dataset, estimate_cep, required_snr_for_cep, SimOptions, SnrSearch, StopRule,
};
use urllc_core::tradeoff::{fit, load_points, write_points_csv, ModelTable, TradeoffModel};

use crate::args::*;
use crate::output::Output;
use crate::UsageError;

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow!(UsageError(msg.into()))
}

fn to_json<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("results always serialize")
}

fn parse_order(flag: &str, s: &str) -> Result<Order> {
    s.parse::<Order>()
        .map_err(|e| usage(format!("--{flag}: cannot parse {s:?} as an order: {e}")))
}

fn hardware(h: &HardwareArgs) -> Result<HardwareProfile> {
    HardwareProfile {
        t_s: h.ts,
        t_b: h.tb,
        alpha: h.alpha,
        processors: h.procs,
    }
    .validated()
    .map_err(|e| usage(format!("--ts/--tb/--alpha/--procs: {e}")))
}

fn code_summary(code: &LinearCode) -> Value {
    json!({
        "label": code.label(),
        "n": code.n(),
        "k": code.k(),
        "d_min": code.d_min(),
        "rate": code.rate(),
        "required_order": required_order(code),
    })
}

pub fn codes(cmd: &CodesCommand) -> Result<Output> {
    match cmd {
        CodesCommand::Gen(a) => {
            let code = build_ebch(a.ebch[0], a.ebch[1])?;
            code.save(&a.out)
                .with_context(|| format!("cannot write {}", a.out.display()))?;
            let mut v = code_summary(&code);
            v["path"] = json!(a.out.display().to_string());
            Ok(Output::new(v))
        }
        CodesCommand::Info(a) => {
            let code = LinearCode::load(&a.file)
                .with_context(|| format!("cannot load code {}", a.file.display()))?;
            Ok(Output::new(code_summary(&code)))
        }
    }
}

/// Parses `start:step:stop` into an inclusive grid.
pub fn parse_grid(range: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = range.split(':').collect();
    let bad = || usage(format!("--snr-db-range: expected start:step:stop, got {range:?}"));
    let [a, s, b] = parts.as_slice() else { return Err(bad()) };
    let (start, step, stop): (f64, f64, f64) = (
        a.trim().parse().map_err(|_| bad())?,
        s.trim().parse().map_err(|_| bad())?,
        b.trim().parse().map_err(|_| bad())?,
    );
    if !(step > 0.0) || !(stop >= start) || !start.is_finite() || !stop.is_finite() {
        return Err(bad());
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}

pub fn bounds(a: &BoundsArgs) -> Result<Output> {
    if a.n == 0 {
        bail!(usage("--n must be >= 1"));
    }
    if !(a.eps > 0.0 && a.eps < 1.0) {
        bail!(usage(format!("--eps must lie in (0, 1), got {}", a.eps)));
    }
    let grid = parse_grid(&a.snr_db_range)?;
    let rows = grid
        .iter()
        .map(|&db| fb_point(a.n, db, a.eps))
        .collect::<urllc_core::Result<Vec<_>>>()?;
    let mut csv = String::from("snr_db,C,V,R\n");
    for p in &rows {
        csv.push_str(&format!("{},{},{},{}\n", p.rho_db, p.capacity, p.dispersion, p.rate));
    }
    let json = Value::Array(
        rows.iter()
            .map(|p| json!({"snr_db": p.rho_db, "C": p.capacity, "V": p.dispersion, "R": p.rate}))
            .collect(),
    );
    Ok(Output::new(json).with_csv(csv))
}

fn check_code_dims(c: &OrderArgs) -> Result<()> {
    if c.k == 0 || c.k > c.n {
        bail!(usage(format!("--k must satisfy 1 <= k <= n, got k={} n={}", c.k, c.n)));
    }
    Ok(())
}

pub fn complexity(a: &ComplexityArgs) -> Result<Output> {
    check_code_dims(&a.code)?;
    let s = parse_order("s", &a.s)?;
    let r = complexity_report(a.code.n, a.code.k, a.code.q, s, &HardwareProfile::default())?;
    Ok(Output::new(to_json(&r)))
}

pub fn latency(a: &LatencyArgs) -> Result<Output> {
    check_code_dims(&a.code)?;
    let s = parse_order("s", &a.s)?;
    let hw = hardware(&a.hw)?;
    let r = complexity_report(a.code.n, a.code.k, a.code.q, s, &hw)?;
    let mut v = to_json(&r);
    v["speedup"] = json!(amdahl_speedup(hw.alpha, hw.processors));
    v["T_b_effective"] = json!(hw.effective_tb());
    Ok(Output::new(v))
}

pub fn max_order_cmd(a: &MaxOrderArgs) -> Result<Output> {
    check_code_dims(&a.code)?;
    let hw = hardware(&a.hw)?;
    let budget = match (a.budget, a.lmax) {
        (Some(b), _) => b,
        (None, Some(l)) => complexity_budget(l, a.code.n, a.code.k, &hw.parallelized())?,
        (None, None) => bail!(usage("one of --budget or --lmax is required")),
    };
    let b = max_order(a.code.n, a.code.k, a.code.q, budget)?;
    Ok(Output::new(to_json(&b)))
}

pub fn fit_cmd(a: &FitArgs) -> Result<Output> {
    let all = load_points(&a.points)
        .with_context(|| format!("cannot read points {}", a.points.display()))?;
    let pts: Vec<_> = all.into_iter().filter(|p| p.n == a.n).collect();
    if pts.is_empty() {
        bail!(usage(format!("--n {}: no points with that blocklength", a.n)));
    }
    let model = fit(&pts, a.n)?;
    if let Some(out) = &a.out {
        let mut entries: Vec<TradeoffModel> = Vec::new();
        let mut interpolation = Default::default();
        if a.append && out.exists() {
            let old = ModelTable::load(out)?;
            interpolation = old.interpolation();
            entries.extend(old.entries().filter(|m| m.n != a.n).copied());
        }
        entries.push(model);
        ModelTable::new(entries, interpolation)?.save(out)?;
    }
    let mut v = to_json(&model);
    v["points"] = json!(pts.len());
    Ok(Output::new(v))
}

fn load_models(a: &OptimizeArgs) -> Result<ModelTable> {
    match (&a.models, a.model_a, a.model_b) {
        (Some(p), _, _) => {
            ModelTable::load(p).with_context(|| format!("cannot load models {}", p.display()))
        }
        (None, Some(ma), Some(mb)) => Ok(ModelTable::single(
            TradeoffModel::new(a.k.unwrap_or(1), ma, mb).map_err(|e| usage(format!("--model-a/--model-b: {e}")))?,
        )),
        _ => bail!(usage("either --models or both --model-a and --model-b are required")),
    }
}

pub fn optimize(a: &OptimizeArgs) -> Result<Output> {
    let hw = hardware(&a.hw)?;
    let c = SystemConstraints {
        epsilon_m: a.eps,
        rho_m_db: a.rho_max_db,
        l_max: a.lmax,
    };
    c.validate().map_err(|e| usage(format!("--eps/--rho-max-db/--lmax: {e}")))?;
    let models = load_models(a)?;
    let need_k = || a.k.ok_or_else(|| usage("--k is required for this problem"));
    let need_l = || a.lmax.ok_or_else(|| usage("--lmax is required for this problem"));
    let upper = match a.lmax {
        Some(l) => N_SCAN_MAX.min(max_blocklength(l, hw.t_s)),
        None => N_SCAN_MAX,
    };
    let lower = match a.problem {
        ProblemArg::InfoBits => 1,
        _ => need_k()?,
    };
    let range = (a.n_min.is_some() || a.n_max.is_some())
        .then(|| a.n_min.unwrap_or(lower)..=a.n_max.unwrap_or(upper));
    if let Some(r) = &range {
        if r.start() < &lower.max(1) {
            bail!(usage(format!("--n-min must be >= {}", lower.max(1))));
        }
    }
    let sol = match a.problem {
        ProblemArg::Latency => minimize_latency(need_k()?, &c, &hw, &models, range)?,
        ProblemArg::Energy => {
            need_l()?;
            minimize_energy(need_k()?, &c, &hw, &models, range)?
        }
        ProblemArg::InfoBits => {
            need_l()?;
            if !a.rho_max_db.is_finite() {
                bail!(usage("--rho-max-db must be finite for info-bits"));
            }
            maximize_info_bits(&c, &hw, &models, range)?
        }
    };
    let mut curve = Vec::new();
    write_curve_csv(&sol.curve, &mut curve)?;
    if let Some(path) = &a.csv_curve {
        std::fs::write(path, &curve).with_context(|| format!("cannot write {}", path.display()))?;
    }
    let mut out = Output::new(to_json(&sol.point)).with_csv(String::from_utf8(curve)?);
    out.infeasible = !sol.point.feasible;
    Ok(out)
}

fn resolve_code(src: &CodeSource) -> Result<LinearCode> {
    match (&src.code, &src.ebch) {
        (Some(p), _) => {
            LinearCode::load(p).with_context(|| format!("cannot load code {}", p.display()))
        }
        (None, Some(nk)) => Ok(build_ebch(nk[0], nk[1])?),
        (None, None) => bail!(usage("one of --code or --ebch is required")),
    }
}

fn decoder(d: &DecoderArgs, code: &LinearCode) -> Result<DecoderConfig> {
    let mut cfg = DecoderConfig::new(parse_order("s", &d.s)?);
    cfg.q_bits = d.q;
    cfg.early_exit = d.early_exit;
    cfg.validate(code.k()).map_err(|e| usage(format!("--s: {e}")))?;
    Ok(cfg)
}

fn snr_search(s: &SearchArgs) -> Result<SnrSearch> {
    if !(s.eps > 0.0 && s.eps < 1.0) {
        bail!(usage(format!("--eps must lie in (0, 1), got {}", s.eps)));
    }
    if !(s.lo_db < s.hi_db) || !(s.tol_db > 0.0) || s.target_errors == 0 {
        bail!(usage("--lo-db/--hi-db/--tol-db/--target-errors describe an empty search"));
    }
    Ok(SnrSearch {
        lo_db: s.lo_db,
        hi_db: s.hi_db,
        bracket_tol_db: s.tol_db,
        target_errors: s.target_errors,
        max_trials: s.max_trials,
    })
}

pub fn simulate(cmd: &SimulateCommand, opts: &SimOptions) -> Result<Output> {
    match cmd {
        SimulateCommand::Cep(a) => {
            let code = resolve_code(&a.code)?;
            let cfg = decoder(&a.decoder, &code)?;
            if a.target_errors == 0 || a.max_trials == 0 {
                bail!(usage("--target-errors and --max-trials must be >= 1"));
            }
            let stop = StopRule {
                target_errors: a.target_errors,
                max_trials: a.max_trials,
            };
            let est = estimate_cep(&code, &cfg, a.snr_db, &stop, opts)?;
            let mut v = to_json(&est);
            v["code"] = json!(code.label());
            v["s"] = to_json(&cfg.s);
            Ok(Output::new(v))
        }
        SimulateCommand::SnrForCep(a) => {
            let code = resolve_code(&a.code)?;
            let cfg = decoder(&a.decoder, &code)?;
            let search = snr_search(&a.search)?;
            let r = required_snr_for_cep(&code, &cfg, a.search.eps, &search, opts)?;
            let mut v = to_json(&r);
            v["code"] = json!(code.label());
            v["s"] = to_json(&cfg.s);
            v["seed"] = json!(opts.seed);
            Ok(Output::new(v))
        }
        SimulateCommand::Tradeoff(a) => {
            let code = resolve_code(&a.code)?;
            let orders = a
                .orders
                .iter()
                .map(|s| parse_order("orders", s.trim()))
                .collect::<Result<Vec<_>>>()?;
            for s in &orders {
                s.check_against(code.k()).map_err(|e| usage(format!("--orders: {e}")))?;
            }
            let search = snr_search(&a.search)?;
            let run = build_tradeoff_dataset(&code, &orders, a.search.eps, a.q, &search, opts)?;
            let mut csv = Vec::new();
            write_points_csv(&run.points, &mut csv)?;
            if let Some(p) = &a.out {
                write_file(p, &csv)?;
            }
            let mut v = to_json(&run);
            v["code"] = json!(code.label());
            v["seed"] = json!(opts.seed);
            Ok(Output::new(v).with_csv(String::from_utf8(csv)?))
        }
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).with_context(|| format!("cannot write {}", path.display()))
}
