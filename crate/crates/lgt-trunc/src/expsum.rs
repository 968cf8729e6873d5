//! Analytic evaluation of iterated oscillatory integrals as closed-form
//! sums of `c t^p e^{i O t}` terms.
//!
//! The iterated integral
//! `I_k(t) = int_0^t ds e^{i w_k s} I_{k-1}(s)`, `I_0 = 1`,
//! stays inside this family, so each level is computed exactly by
//! term-by-term antidifferentiation. Near-degenerate cumulative frequencies
//! take the polynomial branch `t^{p+1}/(p+1)` instead of dividing by a
//! vanishing frequency.

use crate::logmag::LogMagnitude;
use num_complex::Complex64 as C64;

/// One closed-form term `coeff * t^power * exp(i freq t)`.
#[derive(Debug, Clone, Copy)]
pub struct Term {
    pub coeff: C64,
    pub freq: f64,
    pub power: u32,
}

/// A finite sum of exponential terms with an overall log-space scale factor.
///
/// The term coefficients stay O(1) in f64; astronomically small prefactors
/// such as `(1/2g^2)^(Lambda - Lambda_0)` live in `scale`.
#[derive(Debug, Clone)]
pub struct ExpSumExpression {
    pub scale: LogMagnitude,
    pub scale_phase: f64,
    pub terms: Vec<Term>,
    eps_deg: f64,
}

impl ExpSumExpression {
    /// The constant function 1.
    pub fn one(eps_deg: f64) -> Self {
        ExpSumExpression {
            scale: LogMagnitude::ONE,
            scale_phase: 0.0,
            terms: vec![Term { coeff: C64::new(1.0, 0.0), freq: 0.0, power: 0 }],
            eps_deg,
        }
    }

    pub fn scaled(mut self, mag: LogMagnitude, phase: f64) -> Self {
        self.scale = self.scale * mag;
        self.scale_phase += phase;
        self
    }

    /// Unscaled sum of terms at time `t`.
    fn eval_terms(&self, t: f64) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for term in &self.terms {
            let rot = C64::new(0.0, term.freq * t).exp();
            acc += term.coeff * t.powi(term.power as i32) * rot;
        }
        acc
    }

    /// Value at `t` including the scale, as (magnitude, phase).
    pub fn eval_abs(&self, t: f64) -> LogMagnitude {
        let v = self.eval_terms(t);
        let n = v.norm();
        if n == 0.0 {
            LogMagnitude::ZERO
        } else {
            LogMagnitude::from_ln(1, n.ln()) * self.scale.abs()
        }
    }

    /// Value at `t` as a plain complex number; only meaningful when the scale
    /// is representable in f64.
    pub fn eval(&self, t: f64) -> C64 {
        let s = self.scale.to_f64();
        self.eval_terms(t) * C64::new(0.0, self.scale_phase).exp() * s
    }

    pub fn max_abs_freq(&self) -> f64 {
        self.terms.iter().map(|t| t.freq.abs()).fold(0.0, f64::max)
    }

    /// Integrate `e^{i freq_shift t} * self` from 0 to `t`, returning the new
    /// expression as a function of the upper limit.
    pub fn integrate(&self, freq_shift: f64) -> Self {
        let mut out: Vec<Term> = Vec::with_capacity(2 * self.terms.len());
        for term in &self.terms {
            let omega = term.freq + freq_shift;
            let p = term.power;
            if omega.abs() <= self.eps_deg {
                // polynomial branch
                push_merged(
                    &mut out,
                    Term { coeff: term.coeff / (p as f64 + 1.0), freq: omega, power: p + 1 },
                    self.eps_deg,
                );
            } else {
                // int t^p e^{iwt} = e^{iwt} sum_{j=0..p} (-1)^j p!/(p-j)! t^{p-j}/(iw)^{j+1}
                // minus the value at 0 (only the j = p piece survives there).
                let iw = C64::new(0.0, omega);
                let mut fac = C64::new(1.0, 0.0); // p!/(p-j)! (-1)^j / (iw)^{j+1}
                for j in 0..=p {
                    fac /= iw;
                    if j > 0 {
                        fac *= -((p - j + 1) as f64);
                    }
                    push_merged(
                        &mut out,
                        Term { coeff: term.coeff * fac, freq: omega, power: p - j },
                        self.eps_deg,
                    );
                }
                push_merged(
                    &mut out,
                    Term { coeff: -term.coeff * fac, freq: 0.0, power: 0 },
                    self.eps_deg,
                );
            }
        }
        ExpSumExpression {
            scale: self.scale,
            scale_phase: self.scale_phase,
            terms: out,
            eps_deg: self.eps_deg,
        }
    }

    /// Maximum of |value| over `0 <= t <= horizon`.
    pub fn max_abs_over(&self, horizon: f64) -> (f64, LogMagnitude) {
        grid_golden_max(|t| self.eval_abs(t), horizon, self.max_abs_freq())
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }
}

fn push_merged(out: &mut Vec<Term>, term: Term, eps_deg: f64) {
    for existing in out.iter_mut() {
        if existing.power == term.power && (existing.freq - term.freq).abs() <= eps_deg {
            existing.coeff += term.coeff;
            return;
        }
    }
    out.push(term);
}

fn golden_max<F: Fn(f64) -> LogMagnitude>(
    f: F,
    mut a: f64,
    mut b: f64,
    tol: f64,
) -> (f64, LogMagnitude) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - (b - a) * INV_PHI;
    let mut d = a + (b - a) * INV_PHI;
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc.mag_ge(&fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - (b - a) * INV_PHI;
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + (b - a) * INV_PHI;
            fd = f(d);
        }
    }
    let mid = 0.5 * (a + b);
    (mid, f(mid))
}

/// Maximum of a band-limited |f| over `[0, horizon]`: grid of step
/// `pi / (10 max_freq)` plus golden-section refinement around the argmax.
pub fn grid_golden_max<F: Fn(f64) -> LogMagnitude>(
    f: F,
    horizon: f64,
    max_freq: f64,
) -> (f64, LogMagnitude) {
    if horizon <= 0.0 {
        return (0.0, f(0.0));
    }
    let step = if max_freq > 0.0 {
        (std::f64::consts::PI / (10.0 * max_freq)).min(horizon / 10.0)
    } else {
        horizon / 10.0
    };
    let n = (horizon / step).ceil() as usize;
    let mut best_t = 0.0;
    let mut best = f(0.0);
    for i in 0..=n {
        let t = (i as f64 * step).min(horizon);
        let v = f(t);
        if v.mag_ge(&best) {
            best = v;
            best_t = t;
        }
    }
    let lo = (best_t - step).max(0.0);
    let hi = (best_t + step).min(horizon);
    let (t_ref, v_ref) = golden_max(&f, lo, hi, 1e-12 * horizon.max(1.0));
    if v_ref.mag_ge(&best) {
        (t_ref, v_ref)
    } else {
        (best_t, best)
    }
}

/// Degeneracy threshold for a frequency list: `1e-9 * max|O|`.
pub fn degeneracy_eps(freqs: &[f64]) -> f64 {
    1e-9 * freqs.iter().map(|w| w.abs()).fold(0.0, f64::max)
}

/// Exact closed form of the iterated integral with the given per-level
/// frequencies, innermost first, as a function of the outer upper limit.
pub fn nested_integral(freqs: &[f64]) -> ExpSumExpression {
    assert!(!freqs.is_empty(), "nested_integral needs at least one frequency");
    let eps = degeneracy_eps(freqs);
    let mut expr = ExpSumExpression::one(eps);
    for &w in freqs {
        expr = expr.integrate(w);
    }
    expr
}
