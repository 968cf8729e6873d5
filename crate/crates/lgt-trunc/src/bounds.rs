//! Analytic truncation-error estimates: the leakage-amplitude bounds, the
//! plaquette-chain nested-integral bounds, the Schwinger-model bounds, and
//! the earlier energy-conservation / Dyson-series bounds they are compared
//! against.
//!
//! Everything is carried in log-space end to end so that values like the
//! `6e-308`-scale amplitude bound survive far past f64 underflow.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expsum::{grid_golden_max, nested_integral, ExpSumExpression};
use crate::logmag::{ln_double_factorial_odd, ln_factorial, LogMagnitude};

#[derive(Debug, Error)]
pub enum BoundsError {
    #[error("invalid bound parameters: {0}")]
    InvalidParams(String),
}

pub type Result<T> = std::result::Result<T, BoundsError>;

/// A nonnegative bound value with the parameters that produced it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundResult {
    pub value: LogMagnitude,
    pub tag: String,
    pub t_max: Option<f64>,
    pub params: BTreeMap<String, f64>,
}

impl BoundResult {
    fn new(tag: &str, value: LogMagnitude, t_max: Option<f64>, params: &[(&str, f64)]) -> Self {
        debug_assert!(value.sign() >= 0);
        BoundResult {
            value,
            tag: tag.to_string(),
            t_max,
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }

    pub fn log10(&self) -> f64 {
        self.value.log10_mag()
    }
}

fn check(cond: bool, msg: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(BoundsError::InvalidParams(msg.to_string()))
    }
}

/// Leakage amplitude `L(g, Lambda, Lambda_0, T)`: maximum over time of the
/// explicit sum of dephasing terms weighted by products `1/(k^2 - l^2)`.
///
/// The products are accumulated in log-space with sign tracking; the sum at
/// each grid time is evaluated by factoring out the largest weight.
pub fn leakage_l(g: f64, lambda: u32, lambda0: u32, horizon: f64) -> Result<BoundResult> {
    check(g > 0.0, "g must be positive")?;
    check(lambda >= lambda0, "requires Lambda >= Lambda_0")?;
    check(horizon >= 0.0, "horizon must be nonnegative")?;

    // weights w_k = prod_{l = Lambda_0 .. Lambda+1, l != k} 1/(k^2 - l^2)
    let ks: Vec<i64> = (lambda0 as i64..=lambda as i64).collect();
    let mut weights: Vec<LogMagnitude> = Vec::with_capacity(ks.len());
    for &k in &ks {
        let mut w = LogMagnitude::ONE;
        for l in lambda0 as i64..=lambda as i64 + 1 {
            if l != k {
                w = w * LogMagnitude::from_f64((k * k - l * l) as f64).recip();
            }
        }
        weights.push(w);
    }
    let ln_max = weights.iter().map(|w| w.ln_mag()).fold(f64::NEG_INFINITY, f64::max);
    let scaled: Vec<f64> =
        weights.iter().map(|w| w.sign() as f64 * (w.ln_mag() - ln_max).exp()).collect();

    let top = 2.0 * g * g * ((lambda + 1) as f64).powi(2);
    let eval = |t: f64| -> LogMagnitude {
        let e_top = C64::new(0.0, -top * t).exp();
        let mut acc = C64::new(0.0, 0.0);
        for (i, &k) in ks.iter().enumerate() {
            let e_k = C64::new(0.0, -2.0 * g * g * (k * k) as f64 * t).exp();
            acc += scaled[i] * (e_top - e_k);
        }
        let n = acc.norm();
        if n == 0.0 {
            LogMagnitude::ZERO
        } else {
            LogMagnitude::from_ln(1, n.ln() + ln_max)
        }
    };

    let (t_star, value) = grid_golden_max(eval, horizon, top);
    Ok(BoundResult::new(
        "leakage_L",
        value,
        Some(t_star),
        &[("g", g), ("lambda", lambda as f64), ("lambda0", lambda0 as f64), ("T", horizon)],
    ))
}

/// Loose closed-form bound on the leakage amplitude:
/// `(1/g^2)^(Lambda - Lambda_0) (2 Lambda_0 - 1)!! / (2 Lambda - 1)!!`.
pub fn leakage_l_loose(g: f64, lambda: u32, lambda0: u32) -> Result<BoundResult> {
    check(g > 0.0, "g must be positive")?;
    check(lambda >= lambda0, "requires Lambda >= Lambda_0")?;
    let d = (lambda - lambda0) as f64;
    let ln = -2.0 * d * g.ln() + ln_double_factorial_odd(lambda0 as u64)
        - ln_double_factorial_odd(lambda as u64);
    Ok(BoundResult::new(
        "leakage_L_loose",
        LogMagnitude::from_ln(1, ln),
        None,
        &[("g", g), ("lambda", lambda as f64), ("lambda0", lambda0 as f64)],
    ))
}

/// State-error amplitude bound `2 L (1/2g^2)^(Lambda - Lambda_0)` using the
/// loose leakage bound, valid arbitrarily far below f64 underflow.
pub fn amplitude_bound_loose(g: f64, lambda: u32, lambda0: u32) -> Result<BoundResult> {
    let loose = leakage_l_loose(g, lambda, lambda0)?;
    let pref = LogMagnitude::from_f64(1.0 / (2.0 * g * g)).powi((lambda - lambda0) as i32);
    let value = LogMagnitude::from_f64(2.0) * loose.value * pref;
    Ok(BoundResult::new(
        "amplitude_bound_loose",
        value,
        None,
        &[("g", g), ("lambda", lambda as f64), ("lambda0", lambda0 as f64)],
    ))
}

/// Single-plaquette electric-energy error bound
/// `2 (Lambda+1)^2 [L (1/2g^2)^(2(Lambda+1-Lambda_0))]^2`.
///
/// The per-branch amplitude into `|+-(Lambda+1)>` carries one hopping element
/// and one energy denominator per climb step (`Lambda + 1 - Lambda_0` steps),
/// i.e. two powers of `1/2g^2` per level; the error in `<E^2>` is the missing
/// occupation at the two boundary states weighted by `(Lambda+1)^2`.
pub fn one_plaquette_e2_bound(g: f64, lambda: u32, lambda0: u32, horizon: f64) -> Result<BoundResult> {
    let leak = leakage_l(g, lambda, lambda0, horizon)?;
    let pref = LogMagnitude::from_f64(1.0 / (2.0 * g * g)).powi(4 * (lambda + 1 - lambda0) as i32);
    let value = LogMagnitude::from_f64(2.0 * ((lambda + 1) as f64).powi(2))
        * pref
        * leak.value.powi(2);
    Ok(BoundResult::new(
        "one_plaquette_E2_bound",
        value,
        leak.t_max,
        &[("g", g), ("lambda", lambda as f64), ("lambda0", lambda0 as f64), ("T", horizon)],
    ))
}

/// Predicted maximum occupation of the single-plaquette state `|Lambda>`:
/// the square of the leading leakage amplitude past a cut at `Lambda - 1`,
/// `[2 L(g, Lambda-1, Lambda_0, T) (1/2g^2)^(2(Lambda - Lambda_0))]^2`.
/// Each climb step contributes one hopping element and one energy
/// denominator, hence two powers of `1/2g^2` per level.
pub fn plaquette_occupation_prediction(
    g: f64,
    lambda: u32,
    lambda0: u32,
    horizon: f64,
) -> Result<BoundResult> {
    check(lambda >= lambda0 + 1, "requires Lambda >= Lambda_0 + 1")?;
    let leak = leakage_l(g, lambda - 1, lambda0, horizon)?;
    let pref = LogMagnitude::from_f64(1.0 / (2.0 * g * g)).powi(2 * (lambda - lambda0) as i32);
    let amp = LogMagnitude::from_f64(2.0) * leak.value * pref;
    Ok(BoundResult::new(
        "plaquette_occupation_prediction",
        amp.powi(2),
        leak.t_max,
        &[("g", g), ("lambda", lambda as f64), ("lambda0", lambda0 as f64), ("T", horizon)],
    ))
}

/// Closed form of the chain leakage integral `A_{n,m}` as a function of time:
/// nested phases `g^2 (4k + 2 - n - m)` for `k = Lambda_0 .. Lambda`
/// (innermost first), prefactor `(1/2g^2)^(Lambda - Lambda_0 + 1)`.
pub fn chain_a_expression(
    n: i64,
    m: i64,
    g: f64,
    lambda: u32,
    lambda0: u32,
) -> Result<ExpSumExpression> {
    check(g > 0.0, "g must be positive")?;
    check(lambda >= lambda0, "requires Lambda >= Lambda_0")?;
    check(
        n.unsigned_abs() <= lambda0 as u64 && m.unsigned_abs() <= lambda0 as u64,
        "requires |n|, |m| <= Lambda_0",
    )?;
    let freqs: Vec<f64> = (lambda0 as i64..=lambda as i64)
        .map(|k| g * g * (4 * k + 2 - n - m) as f64)
        .collect();
    let depth = (lambda - lambda0 + 1) as i32;
    let pref = LogMagnitude::from_f64(1.0 / (2.0 * g * g)).powi(depth);
    Ok(nested_integral(&freqs).scaled(pref, 0.0))
}

/// `max_{t <= T} |A_{n,m}|`.
pub fn chain_a(n: i64, m: i64, g: f64, lambda: u32, lambda0: u32, horizon: f64) -> Result<BoundResult> {
    let expr = chain_a_expression(n, m, g, lambda, lambda0)?;
    let (t_star, value) = expr.max_abs_over(horizon);
    Ok(BoundResult::new(
        "chain_A",
        value,
        Some(t_star),
        &[
            ("n", n as f64),
            ("m", m as f64),
            ("g", g),
            ("lambda", lambda as f64),
            ("lambda0", lambda0 as f64),
            ("T", horizon),
        ],
    ))
}

fn chain_a_box_max(
    g: f64,
    lambda: u32,
    lambda0: u32,
    horizon: f64,
    weight: impl Fn(i64, i64) -> f64,
) -> Result<(LogMagnitude, f64)> {
    let r = lambda0 as i64;
    let mut best = LogMagnitude::ZERO;
    let mut best_t = 0.0;
    for n in -r..=r {
        for m in n..=r {
            let w = weight(n, m).max(weight(m, n));
            if w == 0.0 {
                continue;
            }
            let a = chain_a(n, m, g, lambda, lambda0, horizon)?;
            let v = LogMagnitude::from_f64(w) * a.value.powi(2);
            if v.mag_ge(&best) {
                best = v;
                best_t = a.t_max.unwrap_or(0.0);
            }
        }
    }
    Ok((best, best_t))
}

/// Link-excitation probability bound
/// `P = max_{|n|,|m| <= Lambda_0} max_{tau < T} |A_{n,m}|^2`.
pub fn chain_p(g: f64, lambda: u32, lambda0: u32, horizon: f64) -> Result<BoundResult> {
    let (value, t_star) = chain_a_box_max(g, lambda, lambda0, horizon, |_, _| 1.0)?;
    Ok(BoundResult::new(
        "chain_P",
        value,
        Some(t_star),
        &[("g", g), ("lambda", lambda as f64), ("lambda0", lambda0 as f64), ("T", horizon)],
    ))
}

/// Time-independent product-form link-excitation bound for a vacuum start:
/// each of the `Lambda - Lambda_0` climb steps contributes a hopping factor
/// `1/2g^2` and an oscillatory integral bounded by `2 / (g^2 (4k + 2))`,
/// so `P(Lambda) <= [(1/2g^2)^(Lambda-Lambda_0) prod_k 2/(g^2(4k+2))]^2`
/// with `k = Lambda_0 .. Lambda-1`. Cruder than [`chain_p`] but valid at
/// all times and separable as `g^(-8(Lambda-Lambda_0))` times a
/// `g`-independent factor.
pub fn chain_p_product(g: f64, lambda: u32, lambda0: u32) -> Result<BoundResult> {
    check(g > 0.0, "g must be positive")?;
    check(lambda > lambda0, "requires Lambda > Lambda_0")?;
    let mut amp = LogMagnitude::from_f64(1.0 / (2.0 * g * g)).powi((lambda - lambda0) as i32);
    for k in lambda0..lambda {
        amp = amp * LogMagnitude::from_f64(2.0 / (g * g * (4 * k + 2) as f64));
    }
    Ok(BoundResult::new(
        "chain_P_product",
        amp.powi(2),
        None,
        &[("g", g), ("lambda", lambda as f64), ("lambda0", lambda0 as f64)],
    ))
}

/// Chain electric-energy error bound
/// `2 max (Lambda+1)^2 |A|^2 + 4 max n^2 |A|^2` over the `(n, m)` box.
pub fn chain_e2_bound(g: f64, lambda: u32, lambda0: u32, horizon: f64) -> Result<BoundResult> {
    let lp1 = ((lambda + 1) as f64).powi(2);
    let (direct, t_star) = chain_a_box_max(g, lambda, lambda0, horizon, |_, _| lp1)?;
    let (neighbor, _) = chain_a_box_max(g, lambda, lambda0, horizon, |n, _| (n * n) as f64)?;
    let value = LogMagnitude::from_f64(2.0) * direct + LogMagnitude::from_f64(4.0) * neighbor;
    Ok(BoundResult::new(
        "chain_E2_bound",
        value,
        Some(t_star),
        &[("g", g), ("lambda", lambda as f64), ("lambda0", lambda0 as f64), ("T", horizon)],
    ))
}

/// Time-independent energy-conservation bound `<Pi_Lambda> <= 1/(g^4 Lambda^2)`.
pub fn tong_energy_bound(g: f64, lambda: u32) -> Result<BoundResult> {
    check(g > 0.0 && lambda >= 1, "requires g > 0 and Lambda >= 1")?;
    let value = LogMagnitude::from_f64(1.0 / (g.powi(4) * (lambda as f64).powi(2)));
    Ok(BoundResult::new("tong_energy_bound", value, None, &[("g", g), ("lambda", lambda as f64)]))
}

/// Short-time Dyson-series amplitude bound `t^Delta / (g^(2 Delta) Delta!)`.
pub fn tong_short_time(g: f64, delta: u32, t: f64) -> Result<BoundResult> {
    check(g > 0.0 && t >= 0.0, "requires g > 0 and t >= 0")?;
    let value = if t == 0.0 && delta > 0 {
        LogMagnitude::ZERO
    } else {
        let d = delta as f64;
        LogMagnitude::from_ln(1, d * t.ln() - 2.0 * d * g.ln() - ln_factorial(delta as u64))
    };
    Ok(BoundResult::new("tong_short_time", value, None, &[("g", g), ("delta", delta as f64), ("t", t)]))
}

fn segment_sum(g: f64, deltas: &[u32], times: &[f64]) -> LogMagnitude {
    deltas
        .iter()
        .zip(times)
        .map(|(&d, &t)| tong_short_time(g, d, t).expect("validated").value)
        .fold(LogMagnitude::ZERO, |acc, v| acc + v)
}

fn compositions(total: u32, parts: u32, budget: &mut usize, out: &mut Vec<Vec<u32>>, prefix: &mut Vec<u32>) {
    if *budget == 0 {
        return;
    }
    if parts == 1 {
        let mut c = prefix.clone();
        c.push(total);
        out.push(c);
        *budget -= 1;
        return;
    }
    for first in 1..=(total - parts + 1) {
        prefix.push(first);
        compositions(total - first, parts - 1, budget, out, prefix);
        prefix.pop();
    }
}

/// Projector-insertion amplitude bound with `num_segments` Dyson segments:
/// minimizes `sum_i t_i^(D_i) / (g^(2 D_i) D_i!)` over compositions of
/// `Lambda` (capped search budget) and over the interior times by coordinate
/// descent from the equal split. Any search shortfall still yields a valid
/// upper bound.
pub fn tong_long_time(g: f64, lambda: u32, t: f64, num_segments: u32) -> Result<BoundResult> {
    check(g > 0.0 && t >= 0.0, "requires g > 0 and t >= 0")?;
    check(num_segments >= 1 && num_segments <= lambda, "requires 1 <= segments <= Lambda")?;
    if num_segments == 1 {
        let mut r = tong_short_time(g, lambda, t)?;
        r.tag = "tong_long_time".to_string();
        return Ok(r);
    }
    let mut comps = Vec::new();
    let mut budget = 2000usize;
    compositions(lambda, num_segments, &mut budget, &mut comps, &mut Vec::new());
    if comps.is_empty() {
        comps.push(equal_split(lambda, num_segments));
    }
    let mut best = LogMagnitude::ZERO;
    let mut first = true;
    for deltas in &comps {
        let v = optimize_times(g, deltas, t);
        if first || best.mag_ge(&v) {
            best = v;
            first = false;
        }
    }
    Ok(BoundResult::new(
        "tong_long_time",
        best,
        None,
        &[("g", g), ("lambda", lambda as f64), ("t", t), ("segments", num_segments as f64)],
    ))
}

fn equal_split(total: u32, parts: u32) -> Vec<u32> {
    let base = total / parts;
    let rem = total % parts;
    (0..parts).map(|i| base + u32::from(i < rem)).collect()
}

fn optimize_times(g: f64, deltas: &[u32], t: f64) -> LogMagnitude {
    let n = deltas.len();
    let mut times = vec![t / n as f64; n];
    let mut best = segment_sum(g, deltas, &times);
    // coordinate descent on pairs, shifting time between neighbors
    for _ in 0..40 {
        let mut improved = false;
        for i in 0..n - 1 {
            let pair = times[i] + times[i + 1];
            let mut local_best = best;
            let mut local_x = times[i];
            for k in 0..=20 {
                let x = (pair * k as f64 / 20.0).min(pair);
                let mut trial = times.clone();
                trial[i] = x;
                trial[i + 1] = (pair - x).max(0.0);
                let v = segment_sum(g, deltas, &trial);
                if local_best.mag_ge(&v) && v != local_best {
                    local_best = v;
                    local_x = x;
                }
            }
            if local_best != best {
                times[i] = local_x;
                times[i + 1] = pair - local_x;
                best = local_best;
                improved = true;
            }
        }
        if !improved {
            break;
        }
    }
    best
}

/// Minimum over segment counts of the projector-insertion amplitude bound.
pub fn tong_best_amplitude(g: f64, lambda: u32, t: f64) -> Result<BoundResult> {
    let mut best = tong_short_time(g, lambda, t)?.value;
    let max_segments = lambda.min(8);
    for s in 2..=max_segments {
        let v = tong_long_time(g, lambda, t, s)?.value;
        if best.mag_ge(&v) {
            best = v;
        }
    }
    Ok(BoundResult::new(
        "tong_best_amplitude",
        best,
        None,
        &[("g", g), ("lambda", lambda as f64), ("t", t)],
    ))
}

/// Combined probability-level bound: min of the energy-conservation bound and
/// the squared best amplitude bound.
pub fn tong_combined_probability(g: f64, lambda: u32, t: f64) -> Result<BoundResult> {
    let energy = tong_energy_bound(g, lambda)?.value;
    let amp2 = tong_best_amplitude(g, lambda, t)?.value.powi(2);
    let value = if energy.mag_ge(&amp2) { amp2 } else { energy };
    Ok(BoundResult::new(
        "tong_combined_probability",
        value,
        None,
        &[("g", g), ("lambda", lambda as f64), ("t", t)],
    ))
}

/// Schwinger single-step leakage amplitude bound `1/(2m + g^2 (Lambda + 1/2))`.
pub fn schwinger_leak1(g: f64, m: f64, lambda: u32) -> Result<BoundResult> {
    check(g > 0.0 && m >= 0.0, "requires g > 0 and m >= 0")?;
    let gap = 2.0 * m + g * g * (lambda as f64 + 0.5);
    check(gap > 0.0, "requires positive gap")?;
    Ok(BoundResult::new(
        "schwinger_leak1",
        LogMagnitude::from_f64(1.0 / gap),
        None,
        &[("g", g), ("m", m), ("lambda", lambda as f64)],
    ))
}

/// Closed form of the six-fold Schwinger leakage integral `A(Lambda, g, m, t)`
/// with the counting factor `14 / 2^6`.
pub fn schwinger_a_expression(lambda: u32, g: f64, m: f64) -> Result<ExpSumExpression> {
    check(lambda >= 2, "requires Lambda >= 2")?;
    check(g > 0.0 && m >= 0.0, "requires g > 0 and m >= 0")?;
    let lam = lambda as f64;
    let w_pair = 2.0 * m + 2.0 * g * g * (lam + 1.0);
    let w_anti = -2.0 * m + g * g * (lam + 0.5);
    let w_move = 2.0 * m + g * g * (lam - 0.5);
    // innermost first: t6, t5, t4 (pair moves), t3, t2, then outermost t1
    let freqs = [w_move, w_move, w_move, w_anti, w_anti, w_pair];
    let pref = LogMagnitude::from_f64(14.0 / 64.0);
    Ok(nested_integral(&freqs).scaled(pref, 0.0))
}

/// `|A(Lambda, g, m, t)|` at a single time.
pub fn schwinger_a(lambda: u32, g: f64, m: f64, t: f64) -> Result<BoundResult> {
    let expr = schwinger_a_expression(lambda, g, m)?;
    Ok(BoundResult::new(
        "schwinger_A",
        expr.eval_abs(t),
        Some(t),
        &[("lambda", lambda as f64), ("g", g), ("m", m), ("t", t)],
    ))
}

/// `M(Lambda, g, m, T) = max_{tau < T} |A|`.
pub fn schwinger_m(lambda: u32, g: f64, m: f64, horizon: f64) -> Result<BoundResult> {
    let expr = schwinger_a_expression(lambda, g, m)?;
    let (t_star, value) = expr.max_abs_over(horizon);
    Ok(BoundResult::new(
        "schwinger_M",
        value,
        Some(t_star),
        &[("lambda", lambda as f64), ("g", g), ("m", m), ("T", horizon)],
    ))
}

/// Truncation-error bounds on the electric energy per link and the chiral
/// condensate per site.
///
/// At the fragmentation onset the single-step form is used; above it, the
/// six-hop form built on `M`.
pub fn schwinger_error_bounds(
    g: f64,
    m: f64,
    lambda: u32,
    horizon: f64,
    onset: u32,
) -> Result<(BoundResult, BoundResult)> {
    let lam = lambda as f64;
    let params: &[(&str, f64)] =
        &[("g", g), ("m", m), ("lambda", lam), ("T", horizon), ("onset", onset as f64)];
    if lambda == onset {
        let leak = schwinger_leak1(g, m, lambda)?.value;
        let de2 = LogMagnitude::from_f64(2.0 * lam * lam + (lam + 1.0).powi(2)) * leak.powi(2);
        let dchi = LogMagnitude::from_f64(2.0) * leak.powi(2);
        Ok((
            BoundResult::new("schwinger_dE2", de2, None, params),
            BoundResult::new("schwinger_dchi", dchi, None, params),
        ))
    } else {
        let mres = schwinger_m(lambda, g, m, horizon)?;
        let m2 = mres.value.powi(2);
        let w = 2.0 * (lam - 1.0).powi(2) + 4.0 * lam * lam + (lam + 1.0).powi(2);
        let de2 = LogMagnitude::from_f64(w) * m2;
        let dchi = LogMagnitude::from_f64(4.0) * m2;
        Ok((
            BoundResult::new("schwinger_dE2", de2, mres.t_max, params),
            BoundResult::new("schwinger_dchi", dchi, mres.t_max, params),
        ))
    }
}

/// Model family for the fragmentation-onset heuristic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OnsetModel {
    U1Plaquette,
    U1Chain,
    Schwinger { m: f64 },
}

/// Smallest `Lambda_0` for which the single-step leakage estimate drops
/// below 1. The figure presets pin `Lambda_0` explicitly; this rule is
/// advisory.
pub fn suggest_lambda0(g: f64, model: OnsetModel) -> u32 {
    for lambda0 in 0u32..64 {
        let amp = match model {
            OnsetModel::U1Plaquette | OnsetModel::U1Chain => {
                // 2 |V| / gap = 2 (1/2g^2) / (2g^2 (2 Lambda_0 + 1))
                (1.0 / g.powi(4)) / (2.0 * (2.0 * lambda0 as f64 + 1.0))
            }
            OnsetModel::Schwinger { m } => 1.0 / (2.0 * m + g * g * (lambda0 as f64 + 0.5)),
        };
        if amp < 1.0 {
            return lambda0;
        }
    }
    64
}
