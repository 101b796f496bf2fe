//! Young functions: evaluation, numeric inverse, associate (Legendre conjugate),
//! `B_p` tail integrals and the growth-compatibility checks used by the bump conditions.

use std::f64::consts::E;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{conjugate_exponent, invert_increasing, log_grid, ternary_max};

/// Relative slack allowed in the sampled convexity test.
pub const CONVEXITY_SLACK: f64 = 1e-9;

/// A convex gauge `Φ : [0, ∞) → [0, ∞)` with `Φ(0) = 0`.
///
/// Serialized with an explicit family tag, e.g. `{"family":"LogBump","p":2,"q":3.5}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family")]
pub enum YoungFunction {
    /// `t^p`, `p >= 1`.
    Power { p: f64 },
    /// `t^p log(e+t)^q`, `p > 1`.
    LogBump { p: f64, q: f64 },
    /// `t^p log(e+t)^q [log log(e^e+t)]^r`, `p > 1`.
    LogLogBump { p: f64, q: f64, r: f64 },
    /// `exp(t^a) - 1`, `a > 0`.
    ExpMinusOne { a: f64 },
    /// `exp(exp(t^r)) - e`, `r > 0`.
    DoubleExp { r: f64 },
    /// Piecewise-linear interpolation of user knots.
    Tabulated(Tabulated),
}

/// Knot table for [`YoungFunction::Tabulated`].
///
/// Values are linearly interpolated; beyond the last knot the table continues as the
/// power law `Φ_N (t / t_N)^e` whose exponent matches the last slope, which keeps the
/// extension convex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TabulatedRaw", into = "TabulatedRaw")]
pub struct Tabulated {
    t: Vec<f64>,
    phi: Vec<f64>,
    tail_exponent: f64,
}

#[derive(Serialize, Deserialize)]
struct TabulatedRaw {
    knots: Vec<(f64, f64)>,
}

impl TryFrom<TabulatedRaw> for Tabulated {
    type Error = Error;
    fn try_from(raw: TabulatedRaw) -> Result<Self> {
        Tabulated::new(raw.knots)
    }
}

impl From<Tabulated> for TabulatedRaw {
    fn from(tab: Tabulated) -> Self {
        TabulatedRaw { knots: tab.knots() }
    }
}

impl Tabulated {
    /// Validates and normalizes a knot list. A knot `(0, 0)` is prepended if missing.
    pub fn new(mut knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.iter().any(|(t, v)| !t.is_finite() || !v.is_finite()) {
            return Err(Error::InvalidGauge("knots must be finite".into()));
        }
        match knots.first() {
            None => return Err(Error::InvalidGauge("empty knot table".into())),
            Some(&(t0, v0)) if t0 == 0.0 && v0 != 0.0 => {
                return Err(Error::InvalidGauge("table must satisfy Φ(0) = 0".into()))
            }
            Some(&(t0, _)) if t0 > 0.0 => knots.insert(0, (0.0, 0.0)),
            Some(&(t0, _)) if t0 < 0.0 => {
                return Err(Error::InvalidGauge("knots must have t >= 0".into()))
            }
            _ => {}
        }
        if knots.len() < 2 {
            return Err(Error::InvalidGauge("need at least one knot with t > 0".into()));
        }
        let mut slopes = Vec::with_capacity(knots.len() - 1);
        for w in knots.windows(2) {
            let ((t0, v0), (t1, v1)) = (w[0], w[1]);
            if t1 <= t0 {
                return Err(Error::InvalidGauge("knot abscissae must increase".into()));
            }
            if v1 <= v0 {
                return Err(Error::InvalidGauge(format!(
                    "table must be strictly increasing (Φ({t1}) = {v1} <= Φ({t0}) = {v0})"
                )));
            }
            slopes.push((v1 - v0) / (t1 - t0));
        }
        for (i, w) in slopes.windows(2).enumerate() {
            if w[1] < w[0] * (1.0 - CONVEXITY_SLACK) {
                return Err(Error::InvalidGauge(format!(
                    "table is not convex at t = {}",
                    knots[i + 1].0
                )));
            }
        }
        let (tn, vn) = *knots.last().unwrap();
        let tail_exponent = (slopes.last().unwrap() * tn / vn).max(1.0);
        Ok(Tabulated {
            t: knots.iter().map(|k| k.0).collect(),
            phi: knots.iter().map(|k| k.1).collect(),
            tail_exponent,
        })
    }

    /// Knots including the leading `(0, 0)`.
    pub fn knots(&self) -> Vec<(f64, f64)> {
        self.t.iter().copied().zip(self.phi.iter().copied()).collect()
    }

    /// Exponent of the power-law extension past the last knot.
    pub fn tail_exponent(&self) -> f64 {
        self.tail_exponent
    }

    fn eval(&self, t: f64) -> f64 {
        let n = self.t.len();
        let (tn, vn) = (self.t[n - 1], self.phi[n - 1]);
        if t >= tn {
            return vn * (t / tn).powf(self.tail_exponent);
        }
        let j = self.t.partition_point(|&x| x <= t);
        let (t0, t1) = (self.t[j - 1], self.t[j]);
        let (v0, v1) = (self.phi[j - 1], self.phi[j]);
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }

    fn log_eval(&self, t: f64) -> f64 {
        let n = self.t.len();
        let (tn, vn) = (self.t[n - 1], self.phi[n - 1]);
        if t >= tn {
            vn.ln() + self.tail_exponent * (t / tn).ln()
        } else {
            self.eval(t).ln()
        }
    }
}

/// Result of the sampled invariant checks on a gauge.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InvariantReport {
    pub zero_at_origin: bool,
    pub increasing: bool,
    pub convex: bool,
    /// Largest relative excess of `Φ(t2)` over the chord through its neighbours.
    pub worst_convexity_excess: f64,
    /// Points below this abscissa are excluded from the convexity test.
    pub convex_from: f64,
    pub superlinear: bool,
}

impl InvariantReport {
    pub fn holds(&self) -> bool {
        self.zero_at_origin && self.increasing && self.convex && self.superlinear
    }
}

/// `∫_1^T Φ(t) t^{-p} dt/t` along a ladder of `T`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BpReport {
    pub p: f64,
    pub tail_values: Vec<(f64, f64)>,
    pub verdict: BpVerdict,
    pub extrapolated_limit: Option<f64>,
    /// Known membership for closed-form families, independent of the quadrature.
    pub analytic: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BpVerdict {
    Converges,
    Diverges,
    Inconclusive,
}

/// Worst-case ratios of `Φ⁻¹(s) Φ̄⁻¹(s) / s` over a grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SandwichReport {
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub argmin_s: f64,
    pub argmax_s: f64,
    pub holds: bool,
}

/// Ratio samples for an asymptotic `≲` comparison.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RatioReport {
    pub samples: Vec<(f64, f64)>,
    pub sup: f64,
    pub inf: f64,
    /// max/min of the ratio over the last quarter of the grid.
    pub last_quarter_spread: f64,
    pub stabilizes: bool,
}

/// Numeric inverse and associate against their closed-form asymptotes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AsymptoticsReport {
    /// `(t, inverse / asymptote, associate / asymptote)`.
    pub samples: Vec<(f64, f64, f64)>,
    pub inverse_range: (f64, f64),
    pub associate_range: (f64, f64),
    pub within_window: bool,
}

/// Spread threshold for [`RatioReport::stabilizes`].
pub const STABILIZATION_SPREAD: f64 = 1.05;

impl YoungFunction {
    pub fn power(p: f64) -> Result<Self> {
        let g = YoungFunction::Power { p };
        g.validate()?;
        Ok(g)
    }

    pub fn log_bump(p: f64, q: f64) -> Result<Self> {
        let g = YoungFunction::LogBump { p, q };
        g.validate()?;
        Ok(g)
    }

    pub fn log_log_bump(p: f64, q: f64, r: f64) -> Result<Self> {
        let g = YoungFunction::LogLogBump { p, q, r };
        g.validate()?;
        Ok(g)
    }

    pub fn exp_minus_one(a: f64) -> Result<Self> {
        let g = YoungFunction::ExpMinusOne { a };
        g.validate()?;
        Ok(g)
    }

    pub fn double_exp(r: f64) -> Result<Self> {
        let g = YoungFunction::DoubleExp { r };
        g.validate()?;
        Ok(g)
    }

    pub fn tabulated(knots: Vec<(f64, f64)>) -> Result<Self> {
        Ok(YoungFunction::Tabulated(Tabulated::new(knots)?))
    }

    /// Checks family parameters (tables are validated when built).
    pub fn validate(&self) -> Result<()> {
        use YoungFunction::*;
        let bad = |msg: String| Err(Error::InvalidGauge(msg));
        match *self {
            Power { p } if !(p.is_finite() && p >= 1.0) => bad(format!("Power needs p >= 1, got {p}")),
            LogBump { p, q } if !(p.is_finite() && p > 1.0 && q.is_finite()) => {
                bad(format!("LogBump needs p > 1 and finite q, got p = {p}, q = {q}"))
            }
            LogLogBump { p, q, r } if !(p.is_finite() && p > 1.0 && q.is_finite() && r.is_finite()) => {
                bad(format!("LogLogBump needs p > 1 and finite q, r, got ({p}, {q}, {r})"))
            }
            ExpMinusOne { a } if !(a.is_finite() && a > 0.0) => bad(format!("ExpMinusOne needs a > 0, got {a}")),
            DoubleExp { r } if !(r.is_finite() && r > 0.0) => bad(format!("DoubleExp needs r > 0, got {r}")),
            _ => Ok(()),
        }
    }

    /// Parses either a JSON record or a preset call such as `logbump(2,1)` or `cor1.3-B(2,1,0.5)`.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        if text.starts_with('{') {
            let g: YoungFunction = serde_json::from_str(text)?;
            g.validate()?;
            return Ok(g);
        }
        preset(text)
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, YoungFunction::Power { p } if *p == 1.0)
    }

    /// `Φ(t)`; negative `t` is a domain error.
    pub fn evaluate(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("Young functions live on [0, ∞), got t = {t}")));
        }
        Ok(self.eval(t))
    }

    /// Unchecked evaluation for `t >= 0`.
    pub fn eval(&self, t: f64) -> f64 {
        use YoungFunction::*;
        if t == 0.0 {
            return 0.0;
        }
        match self {
            Power { p } => t.powf(*p),
            LogBump { p, q } => t.powf(*p) * (E + t).ln().powf(*q),
            LogLogBump { p, q, r } => {
                t.powf(*p) * (E + t).ln().powf(*q) * (E.exp() + t).ln().ln().powf(*r)
            }
            ExpMinusOne { a } => t.powf(*a).exp_m1(),
            DoubleExp { r } => E * t.powf(*r).exp_m1().exp_m1(),
            Tabulated(tab) => tab.eval(t),
        }
    }

    /// `ln Φ(t)` computed without forming `Φ(t)` where that would overflow.
    pub fn log_eval(&self, t: f64) -> f64 {
        use YoungFunction::*;
        if t <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let lt = t.ln();
        match self {
            Power { p } => p * lt,
            LogBump { p, q } => p * lt + q * (E + t).ln().ln(),
            LogLogBump { p, q, r } => {
                p * lt + q * (E + t).ln().ln() + r * (E.exp() + t).ln().ln().ln()
            }
            ExpMinusOne { a } => log_expm1((a * lt).exp()),
            DoubleExp { r } => {
                // e^{e^u} - e = e^{e^u} (1 - e^{1 - e^u})
                let w = (r * lt).exp().exp();
                if w > 30.0 {
                    w + (-(1.0 - w).exp()).ln_1p()
                } else {
                    (E * (w - 1.0).exp_m1()).ln()
                }
            }
            Tabulated(tab) => tab.log_eval(t),
        }
    }

    /// `Φ⁻¹(s)` by bracket doubling from `[0, 1]` and bisection.
    pub fn inverse(&self, s: f64) -> Result<f64> {
        if !(s >= 0.0) {
            return Err(Error::Domain(format!("inverse needs s >= 0, got {s}")));
        }
        Ok(self.eval_inverse(s))
    }

    /// Unchecked inverse for `s >= 0`.
    pub fn eval_inverse(&self, s: f64) -> f64 {
        invert_increasing(|t| self.eval(t), s)
    }

    /// `Φ̄(t) = sup_{s>0} (st - Φ(s))`.
    pub fn associate(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("associate needs t >= 0, got {t}")));
        }
        if self.is_linear() {
            return Err(Error::NoFiniteAssociate(self.to_string()));
        }
        if t == 0.0 {
            return Ok(0.0);
        }
        let g = |s: f64| s * t - self.eval(s);
        let mut hi = 1.0_f64;
        let mut doublings = 0;
        while g(2.0 * hi) > g(hi) {
            hi *= 2.0;
            doublings += 1;
            if doublings > 1100 || !hi.is_finite() {
                return Err(Error::Invariant(format!(
                    "sup_s (s·{t} - Φ(s)) is unbounded for {self}"
                )));
            }
        }
        let top = 2.0 * hi;
        // Coarse log scan so the ternary phase starts next to the maximiser even when it
        // sits many decades below the bracket end.
        let mut grid = vec![0.0];
        grid.extend(log_grid(top * 1e-15, top, 400));
        let vals: Vec<f64> = grid.iter().map(|&s| g(s)).collect();
        let k = crate::numeric::argmax(&vals).unwrap();
        let lo = grid[k.saturating_sub(1)];
        let hi = grid[(k + 1).min(grid.len() - 1)];
        let (_, best) = ternary_max(g, lo, hi, 200);
        Ok(best.max(vals[k]).max(0.0))
    }

    /// `Φ̄⁻¹(s)`.
    pub fn associate_inverse(&self, s: f64) -> Result<f64> {
        if self.is_linear() {
            return Err(Error::NoFiniteAssociate(self.to_string()));
        }
        if !(s >= 0.0) {
            return Err(Error::Domain(format!("inverse needs s >= 0, got {s}")));
        }
        Ok(invert_increasing(|t| self.associate(t).unwrap_or(f64::INFINITY), s))
    }

    /// Samples `Φ̄` on `t_grid` and returns it as a table.
    pub fn associate_as_tabulated(&self, t_grid: &[f64]) -> Result<YoungFunction> {
        let mut knots = Vec::with_capacity(t_grid.len());
        for &t in t_grid {
            let v = self.associate(t)?;
            if v > 0.0 {
                knots.push((t, v));
            }
        }
        YoungFunction::tabulated(knots)
    }

    /// Smallest abscissa from which the gauge is convex.
    ///
    /// `exp(t^a) - 1` with `a < 1` and `exp(exp(t^r)) - e` with `r < 1` are only
    /// eventually convex; every other admitted family is convex on `[0, ∞)`.
    pub fn convex_from(&self) -> f64 {
        match *self {
            YoungFunction::ExpMinusOne { a } if a < 1.0 => ((1.0 - a) / a).powf(1.0 / a),
            YoungFunction::DoubleExp { r } if r < 1.0 => {
                // Φ'' >= 0  iff  r u (e^u + 1) >= 1 - r  with u = t^r.
                let u = invert_increasing(|u| r * u * (u.exp() + 1.0), 1.0 - r);
                u.powf(1.0 / r)
            }
            _ => 0.0,
        }
    }

    /// Whether `Φ(t)/t → ∞`.
    pub fn is_superlinear(&self) -> bool {
        match self {
            YoungFunction::Power { p } => *p > 1.0,
            YoungFunction::Tabulated(tab) => tab.tail_exponent > 1.0,
            _ => true,
        }
    }

    /// Sampled check of `Φ(0) = 0`, monotonicity and convexity on a log grid.
    pub fn check_invariants(&self) -> InvariantReport {
        let start = self.convex_from();
        let mut grid = vec![0.0];
        grid.extend(log_grid(1e-4, 1e6, 241));
        let vals: Vec<f64> = grid.iter().map(|&t| self.eval(t)).collect();
        let finite = vals.iter().take_while(|v| v.is_finite()).count();
        let increasing = vals[..finite].windows(2).all(|w| w[1] > w[0]);
        let mut worst: f64 = 0.0;
        for i in 1..finite.saturating_sub(1) {
            if grid[i - 1] < start {
                continue;
            }
            let (t1, t2, t3) = (grid[i - 1], grid[i], grid[i + 1]);
            let chord = vals[i - 1] + (vals[i + 1] - vals[i - 1]) * (t2 - t1) / (t3 - t1);
            if chord > 0.0 {
                worst = worst.max((vals[i] - chord) / chord);
            }
        }
        InvariantReport {
            zero_at_origin: self.eval(0.0) == 0.0,
            increasing,
            convex: worst <= CONVEXITY_SLACK,
            worst_convexity_excess: worst,
            convex_from: start,
            superlinear: self.is_linear() || self.is_superlinear(),
        }
    }

    /// `Φ_m(t) = Φ(t^{1/m})`.
    ///
    /// Closed for powers with `p/m >= 1`, both exponential families (eventually convex
    /// when the new exponent drops below one) and tables; log bumps leave their family.
    pub fn power_compose(&self, m: u32) -> Result<YoungFunction> {
        use YoungFunction::*;
        if m == 0 {
            return Err(Error::Domain("composition order m must be positive".into()));
        }
        if m == 1 {
            return Ok(self.clone());
        }
        let mf = m as f64;
        match self {
            Power { p } if p / mf >= 1.0 => Ok(Power { p: p / mf }),
            Power { p } => Err(Error::Invariant(format!(
                "t^{} is not convex, so t^{p} cannot be composed with t^(1/{m})",
                p / mf
            ))),
            ExpMinusOne { a } => Ok(ExpMinusOne { a: a / mf }),
            DoubleExp { r } => Ok(DoubleExp { r: r / mf }),
            Tabulated(tab) => {
                let knots = tab.knots().into_iter().skip(1).map(|(t, v)| (t.powf(mf), v)).collect();
                YoungFunction::tabulated(knots).map_err(|e| {
                    Error::Invariant(format!("composed table is not a Young function: {e}"))
                })
            }
            LogBump { .. } | LogLogBump { .. } => Err(Error::Invariant(format!(
                "{self} composed with t^(1/{m}) leaves the closed-form families"
            ))),
        }
    }
}

fn log_expm1(x: f64) -> f64 {
    if x > 30.0 {
        x + (-(-x).exp()).ln_1p()
    } else {
        x.exp_m1().ln()
    }
}

impl fmt::Display for YoungFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use YoungFunction::*;
        match self {
            Power { p } => write!(f, "t^{p}"),
            LogBump { p, q } => write!(f, "t^{p} log(e+t)^{q}"),
            LogLogBump { p, q, r } => write!(f, "t^{p} log(e+t)^{q} loglog(e^e+t)^{r}"),
            ExpMinusOne { a } => write!(f, "exp(t^{a}) - 1"),
            DoubleExp { r } => write!(f, "exp(exp(t^{r})) - e"),
            Tabulated(tab) => write!(f, "tabulated({} knots)", tab.t.len()),
        }
    }
}

/// Checks `1 <= Φ⁻¹(s) Φ̄⁻¹(s) / s <= 2` on `s_grid` with slack `1e-6`.
pub fn check_duality_sandwich(phi: &YoungFunction, s_grid: &[f64]) -> Result<SandwichReport> {
    if s_grid.is_empty() {
        return Err(Error::Domain("empty s grid".into()));
    }
    let mut rep = SandwichReport {
        min_ratio: f64::INFINITY,
        max_ratio: f64::NEG_INFINITY,
        argmin_s: f64::NAN,
        argmax_s: f64::NAN,
        holds: false,
    };
    for &s in s_grid {
        if !(s > 0.0) {
            return Err(Error::Domain(format!("sandwich grid needs s > 0, got {s}")));
        }
        let ratio = phi.inverse(s)? * phi.associate_inverse(s)? / s;
        if ratio < rep.min_ratio {
            rep.min_ratio = ratio;
            rep.argmin_s = s;
        }
        if ratio > rep.max_ratio {
            rep.max_ratio = ratio;
            rep.argmax_s = s;
        }
    }
    rep.holds = rep.min_ratio >= 1.0 - 1e-6 && rep.max_ratio <= 2.0 + 1e-6;
    Ok(rep)
}

/// Default ladder `T_k = exp(2^k)`, `k = 0..=9`, for [`bp_tail`].
pub fn bp_default_ladder() -> Vec<f64> {
    (0..=9).map(|k| (2f64.powi(k)).exp()).collect()
}

/// Tail integrals `∫_1^T Φ(t) t^{-p} dt/t` with a convergence verdict.
///
/// The integral is computed in `x = ln t`, segment by segment, with double-exponential
/// quadrature. The verdict reads the last three ratios of successive increments:
/// all below 0.9 means converging, non-decreasing increments mean diverging.
pub fn bp_tail(phi: &YoungFunction, p: f64, t_list: &[f64]) -> Result<BpReport> {
    if !(p > 1.0) {
        return Err(Error::Domain(format!("B_p needs p > 1, got {p}")));
    }
    if t_list.iter().any(|&t| !(t > 1.0)) || t_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("T list must be increasing and > 1".into()));
    }
    let integrand = |x: f64| (phi.log_eval(x.exp()) - p * x).exp();
    let mut tails = Vec::with_capacity(t_list.len());
    let mut increments = Vec::with_capacity(t_list.len());
    let mut acc = 0.0;
    let mut lo = 0.0;
    for &t in t_list {
        let hi = t.ln();
        let seg = quadrature::integrate(integrand, lo, hi, 1e-14).integral;
        let seg = if seg.is_finite() { seg.max(0.0) } else { f64::INFINITY };
        acc += seg;
        increments.push(seg);
        tails.push((t, acc));
        lo = hi;
    }
    let (verdict, extrapolated_limit) = bp_verdict(&increments, acc);
    Ok(BpReport {
        p,
        tail_values: tails,
        verdict,
        extrapolated_limit,
        analytic: bp_membership(phi, p),
    })
}

fn bp_verdict(inc: &[f64], total: f64) -> (BpVerdict, Option<f64>) {
    if inc.iter().any(|d| !d.is_finite()) {
        return (BpVerdict::Diverges, None);
    }
    if inc.len() < 4 {
        return (BpVerdict::Inconclusive, None);
    }
    let last = &inc[inc.len() - 4..];
    let ratios: Vec<f64> = last
        .windows(2)
        .map(|w| match (w[0], w[1]) {
            (a, b) if a > 0.0 => b / a,
            (_, 0.0) => 0.0,
            _ => f64::INFINITY,
        })
        .collect();
    if ratios.iter().all(|&r| r < 0.9) {
        let rho = *ratios.last().unwrap();
        let d = *last.last().unwrap();
        return (BpVerdict::Converges, Some(total + d * rho / (1.0 - rho)));
    }
    if last.windows(2).all(|w| w[1] >= w[0]) {
        return (BpVerdict::Diverges, None);
    }
    (BpVerdict::Inconclusive, None)
}

/// Known `Φ ∈ B_p` membership for the closed-form families.
pub fn bp_membership(phi: &YoungFunction, p: f64) -> Option<bool> {
    use YoungFunction::*;
    match *phi {
        Power { p: a } => Some(a < p),
        LogBump { p: a, q } => Some(a < p || (a == p && q < -1.0)),
        LogLogBump { p: a, q, r } => Some(a < p || (a == p && (q < -1.0 || (q == -1.0 && r < -1.0)))),
        ExpMinusOne { .. } | DoubleExp { .. } => Some(false),
        Tabulated(ref tab) => Some(tab.tail_exponent < p),
    }
}

/// Known `Φ̄ ∈ B_p` membership, from the associate asymptotics of the closed-form families.
pub fn associate_bp_membership(phi: &YoungFunction, p: f64) -> Option<bool> {
    use YoungFunction::*;
    match *phi {
        Power { p: a } if a > 1.0 => Some(conjugate_exponent(a) < p),
        LogBump { p: a, q } => {
            // Φ̄(t) ≈ t^{a'} / log(e+t)^{a' q / a}
            let c = conjugate_exponent(a);
            Some(c < p || (c == p && c * q / a > 1.0))
        }
        LogLogBump { p: a, q, r } => {
            let c = conjugate_exponent(a);
            let (lq, lr) = (c * q / a, c * r / a);
            Some(c < p || (c == p && (lq > 1.0 || (lq == 1.0 && lr > 1.0))))
        }
        ExpMinusOne { .. } | DoubleExp { .. } => Some(true),
        _ => None,
    }
}

/// Default "large t" grid: 97 log-spaced points from `e²` to `1e12`.
pub fn default_large_t_grid() -> Vec<f64> {
    log_grid(E * E, 1e12, 97)
}

fn ratio_report(samples: Vec<(f64, f64)>) -> RatioReport {
    let sup = samples.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
    let inf = samples.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    let start = samples.len() - samples.len().div_ceil(4);
    let tail = &samples[start..];
    let tmax = tail.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
    let tmin = tail.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    let spread = if tmin > 0.0 { tmax / tmin } else { f64::INFINITY };
    RatioReport {
        samples,
        sup,
        inf,
        last_quarter_spread: spread,
        stabilizes: spread.is_finite() && spread < STABILIZATION_SPREAD,
    }
}

/// `A⁻¹(t) B⁻¹(t) / C⁻¹(t)` over `t_grid`.
pub fn holder_triple_check(
    a: &YoungFunction,
    b: &YoungFunction,
    c: &YoungFunction,
    t_grid: &[f64],
) -> Result<RatioReport> {
    if t_grid.is_empty() {
        return Err(Error::Domain("empty t grid".into()));
    }
    let mut samples = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        samples.push((t, a.inverse(t)? * b.inverse(t)? / c.inverse(t)?));
    }
    Ok(ratio_report(samples))
}

/// `X⁻¹(t) Φ⁻¹(t)^m / B⁻¹(t)` over `t_grid`.
pub fn checkyoung_compatible(
    x: &YoungFunction,
    b: &YoungFunction,
    phi: &YoungFunction,
    m: u32,
    t_grid: &[f64],
) -> Result<RatioReport> {
    if t_grid.is_empty() {
        return Err(Error::Domain("empty t grid".into()));
    }
    let mut samples = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let num = x.inverse(t)? * phi.inverse(t)?.powi(m as i32);
        samples.push((t, num / b.inverse(t)?));
    }
    Ok(ratio_report(samples))
}

/// Numeric inverse and associate of a log or log-log bump divided by the asymptotes
/// `t^{1/p} / log(e+t)^{q/p} [loglog]^{r/p}` and `t^{p'} / log(e+t)^{p'q/p} [loglog]^{p'r/p}`.
/// The window is `[1/10, 10]`.
pub fn log_bump_asymptotics_check(psi: &YoungFunction, t_grid: &[f64]) -> Result<AsymptoticsReport> {
    let (p, q, r) = match *psi {
        YoungFunction::LogBump { p, q } => (p, q, 0.0),
        YoungFunction::LogLogBump { p, q, r } => (p, q, r),
        _ => return Err(Error::Domain(format!("{psi} is not a log or log-log bump"))),
    };
    if t_grid.is_empty() {
        return Err(Error::Domain("empty t grid".into()));
    }
    let pc = conjugate_exponent(p);
    let mut samples = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let l = (E + t).ln();
        let ll = (E.exp() + t).ln().ln();
        let inv_model = t.powf(1.0 / p) / (l.powf(q / p) * ll.powf(r / p));
        let assoc_model = t.powf(pc) / (l.powf(pc * q / p) * ll.powf(pc * r / p));
        samples.push((t, psi.inverse(t)? / inv_model, psi.associate(t)? / assoc_model));
    }
    let range = |sel: fn(&(f64, f64, f64)) -> f64| {
        samples
            .iter()
            .map(sel)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
    };
    let inverse_range = range(|s| s.1);
    let associate_range = range(|s| s.2);
    let inside = |(lo, hi): (f64, f64)| lo >= 0.1 && hi <= 10.0;
    Ok(AsymptoticsReport {
        within_window: inside(inverse_range) && inside(associate_range),
        samples,
        inverse_range,
        associate_range,
    })
}

fn parse_call(text: &str) -> Result<(String, Vec<f64>)> {
    let bad = || Error::Parse(format!("expected name(args), got `{text}`"));
    let open = text.find('(').ok_or_else(bad)?;
    if !text.ends_with(')') {
        return Err(bad());
    }
    let name = text[..open].trim().to_string();
    let inner = text[open + 1..text.len() - 1].trim();
    let args = if inner.is_empty() {
        Vec::new()
    } else {
        inner
            .split(',')
            .map(|a| a.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad number `{a}` in `{text}`"))))
            .collect::<Result<Vec<_>>>()?
    };
    Ok((name, args))
}

/// Named constructors and log-bump presets.
///
/// | name | gauge |
/// |---|---|
/// | `power(p)` | `t^p` |
/// | `logbump(p,q)` | `t^p log(e+t)^q` |
/// | `loglogbump(p,q,r)` | `t^p log(e+t)^q loglog(e^e+t)^r` |
/// | `expL(a)` | `exp(t^a) - 1` |
/// | `expexpL(r)` | `exp(exp(t^r)) - e` |
/// | `cor1.3-A(p,[m,]delta)` | `L^p (log L)^{(m+1)p-1+δ}` |
/// | `cor1.3-B(p,[m,]delta)` | `L^{p'} (log L)^{(m+1)p'-1+δ}` |
/// | `cor1.4-A(p,m,eps,delta)` | `L^p (log L)^{(εm+1)p-1+δ}` |
/// | `cor1.4-B(p,m,eps,delta)` | `L^{p'} (log L)^{(εm+1)p'-1+δ}` |
/// | `cor1.4-Phi(eps)` | `exp(t^{1/ε}) - 1` |
/// | `cor1.6-A(p,delta)` | `L^p (log L)^{p-1+δ}` |
/// | `cor1.6-B(p,delta)` | `L^{p'} (log L)^{p'-1+δ}` |
/// | `cor1.7-A(p,m,eps,delta)` | `L^p (log L)^{p-1} (log log L)^{(1+mε)p-1+δ}` |
/// | `cor1.7-B(p,m,eps,delta)` | `L^{p'} (log L)^{p'-1} (log log L)^{(1+mε)p'-1+δ}` |
/// | `cor1.7-Phi(eps)` | `exp(exp(t^{1/ε})) - e` |
/// | `free-A(p,delta)` | `L^p (log L)^{p-1+δ}` |
/// | `free-D(p,delta)` | `L^{p'} (log L)^{p'-1+δ}` |
///
/// `A` presets carry exponent `p` (the `u^{1/p}` side), `B` presets exponent `p'`.
/// When `m` is omitted from a `cor1.3` preset it defaults to 1.
pub fn preset(text: &str) -> Result<YoungFunction> {
    let (name, args) = parse_call(text)?;
    let arity = |n: usize| -> Result<()> {
        if args.len() == n {
            Ok(())
        } else {
            Err(Error::Parse(format!("`{name}` takes {n} arguments, got {}", args.len())))
        }
    };
    let conj = |p: f64| -> Result<f64> {
        if p > 1.0 {
            Ok(conjugate_exponent(p))
        } else {
            Err(Error::InvalidGauge(format!("preset exponent p must exceed 1, got {p}")))
        }
    };
    match name.as_str() {
        "power" => {
            arity(1)?;
            YoungFunction::power(args[0])
        }
        "logbump" => {
            arity(2)?;
            YoungFunction::log_bump(args[0], args[1])
        }
        "loglogbump" => {
            arity(3)?;
            YoungFunction::log_log_bump(args[0], args[1], args[2])
        }
        "expL" => {
            arity(1)?;
            YoungFunction::exp_minus_one(args[0])
        }
        "expexpL" => {
            arity(1)?;
            YoungFunction::double_exp(args[0])
        }
        "cor1.3-A" | "cor1.3-B" => {
            let (p, m, delta) = match args.len() {
                2 => (args[0], 1.0, args[1]),
                3 => (args[0], args[1], args[2]),
                n => return Err(Error::Parse(format!("`{name}` takes 2 or 3 arguments, got {n}"))),
            };
            let e = if name.ends_with('A') { p } else { conj(p)? };
            YoungFunction::log_bump(e, (m + 1.0) * e - 1.0 + delta)
        }
        "cor1.4-A" | "cor1.4-B" => {
            arity(4)?;
            let (p, m, eps, delta) = (args[0], args[1], args[2], args[3]);
            let e = if name.ends_with('A') { p } else { conj(p)? };
            YoungFunction::log_bump(e, (eps * m + 1.0) * e - 1.0 + delta)
        }
        "cor1.4-Phi" => {
            arity(1)?;
            YoungFunction::exp_minus_one(1.0 / args[0])
        }
        "cor1.6-A" | "free-A" => {
            arity(2)?;
            YoungFunction::log_bump(args[0], args[0] - 1.0 + args[1])
        }
        "cor1.6-B" | "free-D" => {
            arity(2)?;
            let e = conj(args[0])?;
            YoungFunction::log_bump(e, e - 1.0 + args[1])
        }
        "cor1.7-A" | "cor1.7-B" => {
            arity(4)?;
            let (p, m, eps, delta) = (args[0], args[1], args[2], args[3]);
            let e = if name.ends_with('A') { p } else { conj(p)? };
            YoungFunction::log_log_bump(e, e - 1.0, (1.0 + m * eps) * e - 1.0 + delta)
        }
        "cor1.7-Phi" => {
            arity(1)?;
            YoungFunction::double_exp(1.0 / args[0])
        }
        _ => Err(Error::Parse(format!("unknown Young function preset `{name}`"))),
    }
}
