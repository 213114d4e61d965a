//! Finite-blocklength limits of the BI-AWGN channel.
//!
//! Capacity and dispersion are Gaussian expectations of the information
//! density `i(z) = 1 - log2(1 + exp(-2 rho + 2 z sqrt(rho)))`. The primary
//! rule is composite Gauss-Legendre over `z in [-12, 12]`; panels shrink to
//! `pi / sqrt(rho)` so that the poles of `i(z)` at `sqrt(rho) + i pi (2j+1) /
//! (2 sqrt(rho))` stay at least half a panel away from every node. An
//! adaptive Simpson rule is kept as an independent cross-check.

use std::f64::consts::{LOG2_E, PI, SQRT_2};
use std::sync::OnceLock;

use gauss_quad::GaussLegendre;
use serde::{Deserialize, Serialize};
use libm::erfc;
use statrs::function::erf::erfc_inv;

use crate::channel::db_to_linear;
use crate::error::{Error, Result};

const Z_MAX: f64 = 12.0;
const GL_NODES: usize = 16;
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

fn gl_rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        GaussLegendre::new(GL_NODES)
            .expect("16-point rule")
            .as_node_weight_pairs()
            .to_vec()
    })
}

/// `log2(1 + e^x)` without overflow.
#[inline]
fn log2_1p_exp(x: f64) -> f64 {
    if x > 0.0 {
        (x + (-x).exp().ln_1p()) * LOG2_E
    } else {
        x.exp().ln_1p() * LOG2_E
    }
}

#[inline]
pub fn info_density(z: f64, rho: f64) -> f64 {
    1.0 - log2_1p_exp(-2.0 * rho + 2.0 * z * rho.sqrt())
}

#[inline]
fn gauss_pdf(z: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * z * z).exp()
}

fn panel_width(rho: f64) -> f64 {
    let s = rho.sqrt();
    if s > Z_MAX + 1.0 {
        1.0
    } else {
        (PI / s).min(1.0)
    }
}

/// `(C, V)` in bits and bits^2 per channel use.
pub fn capacity_dispersion(rho: f64) -> (f64, f64) {
    if rho <= 0.0 {
        return (0.0, 0.0);
    }
    let rule = gl_rule();
    let panels = ((2.0 * Z_MAX) / panel_width(rho)).ceil() as usize;
    let h = 2.0 * Z_MAX / panels as f64;
    let mut samples = Vec::with_capacity(panels * rule.len());
    for p in 0..panels {
        let mid = -Z_MAX + (p as f64 + 0.5) * h;
        for &(x, w) in rule {
            let z = mid + 0.5 * h * x;
            samples.push((0.5 * h * w * gauss_pdf(z), info_density(z, rho)));
        }
    }
    let c: f64 = samples.iter().map(|(w, f)| w * f).sum();
    let v: f64 = samples.iter().map(|(w, f)| w * (f - c) * (f - c)).sum();
    (c.clamp(0.0, 1.0), v.max(0.0))
}

pub fn capacity(rho: f64) -> f64 {
    capacity_dispersion(rho).0
}

pub fn dispersion(rho: f64) -> f64 {
    capacity_dispersion(rho).1
}

/// Adaptive Simpson reference for `(C, V)`, absolute tolerance `tol`.
pub fn capacity_dispersion_simpson(rho: f64, tol: f64) -> (f64, f64) {
    if rho <= 0.0 {
        return (0.0, 0.0);
    }
    let c = adaptive_simpson(&|z| gauss_pdf(z) * info_density(z, rho), -Z_MAX, Z_MAX, tol);
    let v = adaptive_simpson(
        &|z| {
            let d = info_density(z, rho) - c;
            gauss_pdf(z) * d * d
        },
        -Z_MAX,
        Z_MAX,
        tol,
    );
    (c, v)
}

/// Composite adaptive Simpson: the interval is first split into unit
/// panels so that narrow features cannot hide between the initial samples.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let panels = ((b - a).ceil() as usize).max(1) * 4;
    let h = (b - a) / panels as f64;
    let panel_tol = tol / panels as f64;
    (0..panels)
        .map(|i| {
            let lo = a + i as f64 * h;
            let hi = lo + h;
            let (flo, fhi, fmid) = (f(lo), f(hi), f(0.5 * (lo + hi)));
            let whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
            simpson_step(f, lo, hi, flo, fmid, fhi, whole, panel_tol, 48)
        })
        .sum()
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Gaussian tail `Q(x) = P(Z > x)`.
pub fn qfunc(x: f64) -> f64 {
    0.5 * erfc(x / SQRT_2)
}

/// Inverse of [`qfunc`] on `(0, 1)`, polished with Newton steps.
pub fn qfunc_inv(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "Q^-1 needs 0 < p < 1, got {p}"
        )));
    }
    let mut x = SQRT_2 * erfc_inv(2.0 * p);
    for _ in 0..3 {
        let pdf = gauss_pdf(x);
        if pdf <= 0.0 {
            break;
        }
        let step = (qfunc(x) - p) / pdf;
        x += step;
        if step.abs() < 1e-16 * x.abs().max(1.0) {
            break;
        }
    }
    Ok(x)
}

/// Normal approximation `R = C - sqrt(V / n) Q^-1(eps) log2(e)`. May be
/// negative for very short blocks; callers decide how to treat that.
pub fn normal_approx_rate(n: usize, rho: f64, epsilon: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("blocklength must be >= 1".into()));
    }
    let qi = qfunc_inv(epsilon)?;
    let (c, v) = capacity_dispersion(rho);
    Ok(c - (v / n as f64).sqrt() * qi * LOG2_E)
}

pub fn normal_approx_rate_db(n: usize, rho_db: f64, epsilon: f64) -> Result<f64> {
    normal_approx_rate(n, db_to_linear(rho_db), epsilon)
}

const SNR_DB_MIN: f64 = -100.0;
const SNR_DB_MAX: f64 = 80.0;

/// SNR in dB at which the normal approximation reaches rate `r`.
///
/// Bisection on the dB axis with automatic bracket expansion; stops once
/// `|R - r| <= 1e-11` or the bracket collapses.
pub fn reference_snr_db(n: usize, r: f64, epsilon: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!("rate must be > 0, got {r}")));
    }
    if r >= 1.0 {
        return Err(Error::Infeasible(format!(
            "rate {r} is not below the binary-input limit of 1"
        )));
    }
    qfunc_inv(epsilon)?;
    let f = |db: f64| normal_approx_rate_db(n, db, epsilon).map(|v| v - r);

    let (mut lo, mut hi) = (-10.0, 10.0);
    while f(lo)? >= 0.0 {
        lo -= 10.0;
        if lo < SNR_DB_MIN {
            return Err(Error::Search(format!("no lower bracket for rate {r}")));
        }
    }
    while f(hi)? < 0.0 {
        hi += 10.0;
        if hi > SNR_DB_MAX {
            return Err(Error::Infeasible(format!(
                "rate {r} not reached below {SNR_DB_MAX} dB at n = {n}"
            )));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let v = f(mid)?;
        if v.abs() <= 1e-11 || hi - lo < 1e-13 {
            return Ok(mid);
        }
        if v < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// One row of the bounds table.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct FbPoint {
    pub rho_db: f64,
    #[serde(rename = "C")]
    pub capacity: f64,
    #[serde(rename = "V")]
    pub dispersion: f64,
    #[serde(rename = "R")]
    pub rate: f64,
    pub epsilon: f64,
}

pub fn fb_point(n: usize, rho_db: f64, epsilon: f64) -> Result<FbPoint> {
    let qi = qfunc_inv(epsilon)?;
    let (c, v) = capacity_dispersion(db_to_linear(rho_db));
    Ok(FbPoint {
        rho_db,
        capacity: c,
        dispersion: v,
        rate: c - (v / n as f64).sqrt() * qi * LOG2_E,
        epsilon,
    })
}
