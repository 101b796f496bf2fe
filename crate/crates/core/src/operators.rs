//! Principal-value Hilbert transform on the sample lattice, iterated commutators in
//! kernel and recursive form, weighted norm ratios, and the extremal test functions
//! used by the necessity arguments.
//!
//! Quadrature: every source cell `[y_j - h/2, y_j + h/2)` is represented by the two nodes
//! `y_j ± h/4` with weight `h/2`. Evaluation points are cell midpoints, so a node never
//! coincides with an evaluation point and the two nodes of the evaluation cell cancel,
//! which realizes the principal value. The kernel is `1/(x - y)` without a `1/π` factor.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{mean, Cube, DyadicGrid, Lattice, SampledFunction, Weight};
use crate::sparse::{apply_sparse, apply_sparse_adjoint, SparseFamily};

/// `w_k = k / (k² - 1/16)`: combined weight of the two nodes of a cell `k` cells away.
/// The lattice spacing cancels out of the Hilbert kernel.
fn kernel_table(n: usize) -> Vec<f64> {
    (0..n).map(|k| if k == 0 { 0.0 } else { let k = k as f64; k / (k * k - 0.0625) }).collect()
}

/// Index range outside which `f` vanishes.
fn support(values: &[f64]) -> std::ops::Range<usize> {
    let first = values.iter().position(|v| *v != 0.0);
    match first {
        None => 0..0,
        Some(s) => s..values.iter().rposition(|v| *v != 0.0).unwrap() + 1,
    }
}

/// `out_i = Σ_j w_{i-j} P(b_i - b_j) f_j`, parallel over `i`.
fn apply_kernel<P: Fn(f64) -> f64 + Sync>(f: &SampledFunction, b: &[f64], pw: P) -> SampledFunction {
    let n = f.lattice.n;
    let w = kernel_table(n);
    let sup = support(&f.values);
    let fv = &f.values;
    let values = (0..n)
        .into_par_iter()
        .map(|i| {
            let bi = b[i];
            let mut acc = 0.0;
            for j in sup.start..i.min(sup.end) {
                acc += w[i - j] * pw(bi - b[j]) * fv[j];
            }
            for j in (i + 1).max(sup.start)..sup.end {
                acc -= w[j - i] * pw(bi - b[j]) * fv[j];
            }
            acc
        })
        .collect();
    SampledFunction { lattice: f.lattice, values }
}

/// `Hf` at the sample midpoints.
pub fn hilbert(f: &SampledFunction) -> SampledFunction {
    apply_kernel(f, &vec![0.0; f.lattice.n], |_| 1.0)
}

/// `Hf(x)` at arbitrary points with the same node set; a point on a node is an error.
pub fn hilbert_at(f: &SampledFunction, points: &[f64]) -> Result<Vec<f64>> {
    let lat = f.lattice;
    let h = lat.h();
    let sup = support(&f.values);
    points
        .par_iter()
        .map(|&x| {
            let mut acc = 0.0;
            for j in sup.clone() {
                let d = x - lat.midpoint(j);
                let (d1, d2) = (d + 0.25 * h, d - 0.25 * h);
                if d1.abs() < 1e-12 * h || d2.abs() < 1e-12 * h {
                    return Err(Error::Domain(format!("evaluation point {x} sits on a quadrature node")));
                }
                acc += f.values[j] * 0.5 * h * (1.0 / d1 + 1.0 / d2);
            }
            Ok(acc)
        })
        .collect()
}

/// `|tail| <= ‖f‖_1 / dist`: bound on the contribution of mass of `f` lying outside the
/// truncated domain, at distance at least `dist` from the evaluation point.
pub fn truncation_tail_bound(outside_l1: f64, dist: f64) -> f64 {
    if outside_l1 == 0.0 {
        0.0
    } else {
        outside_l1 / dist
    }
}

/// `H^m_b f(x) = p.v. ∫ (b(x) - b(y))^m / (x - y) f(y) dy` with the signed power.
pub fn commutator_kernel_apply(b: &SampledFunction, m: u32, f: &SampledFunction) -> Result<SampledFunction> {
    b.lattice.check_same(&f.lattice)?;
    let bv = &b.values;
    Ok(match m {
        0 => hilbert(f),
        1 => apply_kernel(f, bv, |d| d),
        2 => apply_kernel(f, bv, |d| d * d),
        3 => apply_kernel(f, bv, |d| d * d * d),
        _ => apply_kernel(f, bv, |d| d.powi(m as i32)),
    })
}

/// `H^m_b f = b H^{m-1}_b f - H^{m-1}_b (b f)` with `H^0_b = H`.
pub fn commutator_recursive(b: &SampledFunction, m: u32, f: &SampledFunction) -> Result<SampledFunction> {
    b.lattice.check_same(&f.lattice)?;
    if m == 0 {
        return Ok(hilbert(f));
    }
    let first = commutator_recursive(b, m - 1, f)?.mul(b)?;
    let second = commutator_recursive(b, m - 1, &f.mul(b)?)?;
    first.zip_with(&second, |x, y| x - y)
}

/// Number of pairs `(i, j)` whose discrete kernel times `(x_i - y_j)` is negative.
/// Zero for every real `b` when `m` is even.
pub fn negative_kernel_count(b: &SampledFunction, m: u32) -> usize {
    let n = b.lattice.n;
    let w = kernel_table(n);
    let bv = &b.values;
    (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .filter(|&j| {
                    let k = i as f64 - j as f64;
                    let wk = if i >= j { w[i - j] } else { -w[j - i] };
                    wk * k * (bv[i] - bv[j]).powi(m as i32) < 0.0
                })
                .count()
        })
        .sum()
}

/// Which discretization of `H^m_b` to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CommutatorForm {
    Kernel,
    Recursive,
}

/// A linear operator on sampled functions.
pub trait LinearOperator: Sync {
    fn apply(&self, f: &SampledFunction) -> Result<SampledFunction>;
    fn describe(&self) -> String;
}

pub struct Identity;

impl LinearOperator for Identity {
    fn apply(&self, f: &SampledFunction) -> Result<SampledFunction> {
        Ok(f.clone())
    }
    fn describe(&self) -> String {
        "identity".into()
    }
}

pub struct Hilbert;

impl LinearOperator for Hilbert {
    fn apply(&self, f: &SampledFunction) -> Result<SampledFunction> {
        Ok(hilbert(f))
    }
    fn describe(&self) -> String {
        "hilbert".into()
    }
}

pub struct Commutator<'a> {
    pub b: &'a SampledFunction,
    pub m: u32,
    pub form: CommutatorForm,
}

impl LinearOperator for Commutator<'_> {
    fn apply(&self, f: &SampledFunction) -> Result<SampledFunction> {
        match self.form {
            CommutatorForm::Kernel => commutator_kernel_apply(self.b, self.m, f),
            CommutatorForm::Recursive => commutator_recursive(self.b, self.m, f),
        }
    }
    fn describe(&self) -> String {
        format!("commutator({})", self.m)
    }
}

pub struct SparseOperator<'a> {
    pub family: &'a SparseFamily,
    pub b: &'a SampledFunction,
    pub m: u32,
    pub adjoint: bool,
}

impl LinearOperator for SparseOperator<'_> {
    fn apply(&self, f: &SampledFunction) -> Result<SampledFunction> {
        if self.adjoint {
            apply_sparse_adjoint(self.family, self.b, self.m, f)
        } else {
            apply_sparse(self.family, self.b, self.m, f)
        }
    }
    fn describe(&self) -> String {
        let name = if self.adjoint { "sparse_adjoint" } else { "sparse" };
        format!("{name}({})", self.m)
    }
}

/// `‖Tf‖_{L^p(u)} / ‖f‖_{L^p(v)}`.
pub fn weighted_norm_ratio(t: &dyn LinearOperator, f: &SampledFunction, u: &Weight, v: &Weight, p: f64) -> Result<f64> {
    let den = f.lp_norm(p, Some(v))?;
    if !(den > 0.0) {
        return Err(Error::ZeroNorm("‖f‖_{L^p(v)} = 0".into()));
    }
    Ok(t.apply(f)?.lp_norm(p, Some(u))? / den)
}

/// Extremal function for the necessity argument on `I`:
/// `sgn(b - b_I)|b - b_I|^{p-1} 1_I` for `m = 1`, `|b - b_I|^{m(p-1)} 1_I` for even `m`.
pub fn extremal_necessity_f(b: &SampledFunction, i: &Cube, p: f64, m: u32) -> Result<SampledFunction> {
    if !(p > 1.0) {
        return Err(Error::Domain(format!("p must exceed 1, got {p}")));
    }
    if m == 0 || (m > 1 && m % 2 == 1) {
        return Err(Error::UnsupportedOrder(m));
    }
    let r = b.lattice.index_range(i)?;
    let bi = mean(&b.values[r.clone()]);
    let mut out = SampledFunction::zeros(b.lattice);
    for k in r {
        let d = b.values[k] - bi;
        out.values[k] = if m == 1 {
            d.signum() * d.abs().powf(p - 1.0) * if d == 0.0 { 0.0 } else { 1.0 }
        } else {
            d.abs().powf(m as f64 * (p - 1.0))
        };
    }
    Ok(out)
}

/// Extremal function of the sparse converse argument on `Q`: `|b - b_Q|^{m(p'-1)} σ 1_Q`.
pub fn extremal_sparse_test(b: &SampledFunction, q: &Cube, p: f64, m: u32, sigma: &Weight) -> Result<SampledFunction> {
    if !(p > 1.0) {
        return Err(Error::Domain(format!("p must exceed 1, got {p}")));
    }
    b.lattice.check_same(&sigma.lattice())?;
    let r = b.lattice.index_range(q)?;
    let bq = mean(&b.values[r.clone()]);
    let e = m as f64 * (crate::numeric::conjugate_exponent(p) - 1.0);
    let mut out = SampledFunction::zeros(b.lattice);
    for k in r {
        out.values[k] = (b.values[k] - bq).abs().powf(e) * sigma.values()[k];
    }
    Ok(out)
}

/// `g_c(x) = (x - c)/|I| 1_I(x)` with `c` the center of `I`.
pub fn extremal_g_c(lattice: Lattice, i: &Cube) -> Result<SampledFunction> {
    let r = lattice.index_range(i)?;
    let mut out = SampledFunction::zeros(lattice);
    for k in r {
        out.values[k] = (lattice.midpoint(k) - i.center()) / i.side;
    }
    Ok(out)
}

/// Terms of the decomposition
/// `∫_I (H^m_b 1_I) g_c f u - ∫ (H^m_b g_c) f u = (1/|I|) ∫_I ∫_I (b(x)-b(y))^m f(x) u(x) dy dx`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NecessityIdentity {
    pub cube: Cube,
    pub m: u32,
    pub p: f64,
    /// `∫_I |b - b_I|^{mp} u`.
    pub lhs: f64,
    /// The double integral; equals `lhs` when `m = 1`, dominates it when `m` is even.
    pub middle: f64,
    pub t1: f64,
    pub t2: f64,
    /// `|middle - (t1 - t2)| / |middle|` (absolute when `middle = 0`).
    pub residual: f64,
    /// `lhs <= middle` (up to rounding).
    pub jensen_holds: bool,
}

/// Evaluates both sides of the necessity decomposition with the discrete commutator kernel.
pub fn necessity_identity(b: &SampledFunction, i: &Cube, p: f64, m: u32, u: &Weight) -> Result<NecessityIdentity> {
    b.lattice.check_same(&u.lattice())?;
    let lat = b.lattice;
    let h = lat.h();
    let r = lat.index_range(i)?;
    let f = extremal_necessity_f(b, i, p, m)?;
    let g = extremal_g_c(lat, i)?;
    let ind = SampledFunction::constant(lat, 1.0).restrict(i)?;
    let bi = mean(&b.values[r.clone()]);
    let uv = u.values();
    let lhs: f64 = r.clone().map(|k| (b.values[k] - bi).abs().powf(m as f64 * p) * uv[k]).sum::<f64>() * h;
    let middle = if m == 1 {
        r.clone().map(|k| (b.values[k] - bi) * f.values[k] * uv[k]).sum::<f64>() * h
    } else {
        let bs = &b.values[r.clone()];
        r.clone()
            .into_par_iter()
            .map(|k| {
                let bk = b.values[k];
                let s: f64 = if m == 2 {
                    bs.iter().map(|bj| (bk - bj) * (bk - bj)).sum()
                } else {
                    bs.iter().map(|bj| (bk - bj).powi(m as i32)).sum()
                };
                s * f.values[k] * uv[k]
            })
            .collect::<Vec<f64>>()
            .iter()
            .sum::<f64>()
            * h
            * h
            / i.side
    };
    let h1 = commutator_kernel_apply(b, m, &ind)?;
    let h2 = commutator_kernel_apply(b, m, &g)?;
    let t1: f64 = r.clone().map(|k| h1.values[k] * g.values[k] * f.values[k] * uv[k]).sum::<f64>() * h;
    let t2: f64 = r.clone().map(|k| h2.values[k] * f.values[k] * uv[k]).sum::<f64>() * h;
    let diff = (middle - (t1 - t2)).abs();
    let residual = if middle != 0.0 { diff / middle.abs() } else { diff };
    Ok(NecessityIdentity {
        cube: *i,
        m,
        p,
        lhs,
        middle,
        t1,
        t2,
        residual,
        jensen_holds: lhs <= middle * (1.0 + 1e-12) + 1e-300,
    })
}

/// Labelled test function.
#[derive(Debug, Clone)]
pub struct TestFunction {
    pub label: String,
    pub f: SampledFunction,
}

/// How to assemble a battery of test functions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatterySpec {
    pub random_steps: usize,
    pub seed: u64,
    pub oscillations: usize,
}

impl Default for BatterySpec {
    fn default() -> Self {
        BatterySpec { random_steps: 16, seed: 0, oscillations: 8 }
    }
}

/// Extremal functions and `g_c` on each cube of `cubes`, indicators of the coarse grid
/// cubes, seeded random dyadic step functions and windowed sines.
pub fn build_battery(
    grid: &DyadicGrid,
    b: &SampledFunction,
    cubes: &[Cube],
    p: f64,
    m: u32,
    spec: &BatterySpec,
) -> Result<Vec<TestFunction>> {
    let lat = grid.lattice;
    let mut out = Vec::new();
    for q in cubes {
        if let Ok(f) = extremal_necessity_f(b, q, p, m) {
            if f.max_abs() > 0.0 {
                out.push(TestFunction { label: format!("extremal on {q}"), f });
            }
        }
        out.push(TestFunction { label: format!("g_c on {q}"), f: extremal_g_c(lat, q)? });
    }
    let coarse_levels = 4.min(grid.k_max - grid.k_min + 1);
    for k in (grid.k_max - coarse_levels + 1..=grid.k_max).rev() {
        for q in grid.level(k) {
            out.push(TestFunction { label: format!("indicator of {q}"), f: SampledFunction::constant(lat, 1.0).restrict(&q)? });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    for t in 0..spec.random_steps {
        let span = (grid.k_max - grid.k_min).max(1);
        let k = grid.k_max - 1 - rng.gen_range(0..span.min(6));
        let k = k.max(grid.k_min);
        let mut f = SampledFunction::zeros(lat);
        for q in grid.level(k) {
            let c: f64 = rng.gen_range(-1.0..1.0);
            for i in lat.index_range(&q)? {
                f.values[i] = c;
            }
        }
        out.push(TestFunction { label: format!("random step #{t} (side 2^{k})"), f });
    }
    let dom = lat.domain();
    for j in 1..=spec.oscillations {
        let freq = 2.0 * std::f64::consts::PI * (4 * j) as f64 / dom.side;
        let f = SampledFunction::from_fn(lat, |x| {
            let s = (x - dom.a) / dom.side;
            (freq * (x - dom.a)).sin() * (std::f64::consts::PI * s).sin().powi(2)
        });
        out.push(TestFunction { label: format!("windowed sine, {} periods", 4 * j), f });
    }
    Ok(out)
}

/// Largest weighted norm ratio over a battery; a certified lower bound for the operator norm.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormEstimate {
    pub lower_bound: f64,
    pub witness: String,
    pub p: f64,
    pub trials: usize,
    pub operator: String,
}

/// Maximizes [`weighted_norm_ratio`] over the battery; ties keep the earlier function.
pub fn norm_lower_bound(
    t: &dyn LinearOperator,
    u: &Weight,
    v: &Weight,
    p: f64,
    battery: &[TestFunction],
) -> Result<NormEstimate> {
    if battery.is_empty() {
        return Err(Error::Domain("empty test battery".into()));
    }
    let ratios: Vec<Option<f64>> = battery
        .par_iter()
        .map(|tf| match weighted_norm_ratio(t, &tf.f, u, v, p) {
            Ok(r) => Ok(Some(r)),
            Err(Error::ZeroNorm(_)) => Ok(None),
            Err(e) => Err(e),
        })
        .collect::<Result<_>>()?;
    let mut best: Option<(usize, f64)> = None;
    for (k, r) in ratios.iter().enumerate() {
        if let Some(r) = *r {
            if best.is_none_or(|(_, b)| r > b) {
                best = Some((k, r));
            }
        }
    }
    let (k, r) = best.ok_or_else(|| Error::ZeroNorm("every test function vanishes".into()))?;
    Ok(NormEstimate {
        lower_bound: r,
        witness: battery[k].label.clone(),
        p,
        trials: battery.len(),
        operator: t.describe(),
    })
}
