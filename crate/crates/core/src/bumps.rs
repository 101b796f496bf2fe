//! Weight-pair functionals: `A_p` constants, the two-suprema bump constant `K` and its
//! separated log-bump variants, unbumped and necessity constants, the sparse converse
//! check and reverse Hölder exponents.
//!
//! Every supremum runs over the cubes of the supplied grids and carries the attaining cube;
//! ties go to the lexicographically smallest cube.

use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{mean, supremum, Cube, DyadicGrid, SampledFunction, Weight};
use crate::numeric::conjugate_exponent;
use crate::orlicz::luxemburg;
use crate::operators::extremal_sparse_test;
use crate::oscillation::{bmo_seminorm, osc_seminorm};
use crate::sparse::{apply_sparse, apply_sparse_adjoint, SparseFamily};
use crate::young::{preset, YoungFunction};

/// A supremum over grid cubes together with the cube attaining it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witnessed {
    pub value: f64,
    pub cube: Cube,
}

fn check_p(p: f64) -> Result<f64> {
    if p > 1.0 && p.is_finite() {
        Ok(conjugate_exponent(p))
    } else {
        Err(Error::Domain(format!("p must lie in (1, inf), got {p}")))
    }
}

fn per_cube<F>(grids: &[DyadicGrid], f: F) -> Result<Vec<(Cube, f64)>>
where
    F: Fn(&Cube, Range<usize>) -> f64 + Sync,
{
    let mut rows = Vec::new();
    for g in grids {
        let r: Vec<(Cube, f64)> = g.cube_ranges().par_iter().map(|(q, r)| (*q, f(q, r.clone()))).collect();
        rows.extend(r);
    }
    if rows.is_empty() {
        return Err(Error::Domain("no grid cubes to scan".into()));
    }
    Ok(rows)
}

fn sup_of(rows: &[(Cube, f64)]) -> Witnessed {
    let (cube, value) = supremum(rows).expect("nonempty rows");
    Witnessed { value, cube }
}

fn same_lattice(grids: &[DyadicGrid], fs: &[&SampledFunction]) -> Result<()> {
    let g = grids.first().ok_or_else(|| Error::Domain("no grids supplied".into()))?;
    for f in fs {
        g.lattice.check_same(&f.lattice)?;
    }
    for h in grids {
        g.lattice.check_same(&h.lattice)?;
    }
    Ok(())
}

fn avg_pow(xs: &[f64], s: f64) -> f64 {
    xs.iter().map(|x| x.powf(s)).sum::<f64>() / xs.len() as f64
}

/// `[w]_{A_p} = sup_I (⨍_I w)(⨍_I w^{-p'/p})^{p/p'}`.
pub fn ap_constant(w: &Weight, p: f64, grids: &[DyadicGrid]) -> Result<Witnessed> {
    let pp = check_p(p)?;
    same_lattice(grids, &[w.as_function()])?;
    let wv = w.values();
    let rows = per_cube(grids, |_, r| {
        let xs = &wv[r];
        mean(xs) * avg_pow(xs, -pp / p).powf(p / pp)
    })?;
    Ok(sup_of(&rows))
}

/// `sup_Q (⨍_Q u)^{1/p} (⨍_Q v^{-p'/p})^{1/p'}`.
pub fn two_weight_ap(u: &Weight, v: &Weight, p: f64, grids: &[DyadicGrid]) -> Result<Witnessed> {
    let pp = check_p(p)?;
    same_lattice(grids, &[u.as_function(), v.as_function()])?;
    let (uv, vv) = (u.values(), v.values());
    let rows = per_cube(grids, |_, r| mean(&uv[r.clone()]).powf(1.0 / p) * avg_pow(&vv[r], -pp / p).powf(1.0 / pp))?;
    Ok(sup_of(&rows))
}

/// Inputs of a bump constant.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BumpConfig {
    pub p: f64,
    pub m: u32,
    pub a: YoungFunction,
    pub b: YoungFunction,
    pub c: YoungFunction,
    pub d: YoungFunction,
    pub preset: Option<String>,
    pub n: usize,
    pub grids: usize,
}

/// `K = term1 + term2`, each term the supremum of its per-cube products.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BumpReport {
    pub k: f64,
    pub term1: Witnessed,
    pub term2: Witnessed,
    pub config: BumpConfig,
}

/// The four gauges of a bump condition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Gauges {
    pub a: YoungFunction,
    pub b: YoungFunction,
    pub c: YoungFunction,
    pub d: YoungFunction,
}

impl Gauges {
    /// `A = C = t^p`, `B = D = t^{p'}`.
    pub fn unbumped(p: f64) -> Result<Gauges> {
        let pp = check_p(p)?;
        Ok(Gauges {
            a: YoungFunction::power(p)?,
            b: YoungFunction::power(pp)?,
            c: YoungFunction::power(p)?,
            d: YoungFunction::power(pp)?,
        })
    }

    pub fn validate(&self) -> Result<()> {
        for g in [&self.a, &self.b, &self.c, &self.d] {
            g.validate()?;
        }
        Ok(())
    }
}

/// `sup_Q ‖u^{1/p}‖_{A,Q} ‖(b-b_Q)^m v^{-1/p}‖_{B,Q} + sup_Q ‖(b-b_Q)^m u^{1/p}‖_{C,Q} ‖v^{-1/p}‖_{D,Q}`.
pub fn bump_constant_k(
    gauges: &Gauges,
    b: &SampledFunction,
    m: u32,
    u: &Weight,
    v: &Weight,
    p: f64,
    grids: &[DyadicGrid],
) -> Result<BumpReport> {
    check_p(p)?;
    gauges.validate()?;
    same_lattice(grids, &[b, u.as_function(), v.as_function()])?;
    let u1 = u.powf(1.0 / p)?;
    let v1 = v.powf(-1.0 / p)?;
    let (uv, vv, bv) = (u1.values(), v1.values(), &b.values);
    let mi = m as i32;
    let rows: Vec<(Cube, (f64, f64))> = grids
        .iter()
        .flat_map(|g| g.cube_ranges())
        .collect::<Vec<_>>()
        .par_iter()
        .map(|(q, r)| {
            let bs = &bv[r.clone()];
            let bq = mean(bs);
            let osc: Vec<f64> = bs.iter().map(|x| (x - bq).powi(mi)).collect();
            let ou: Vec<f64> = osc.iter().zip(&uv[r.clone()]).map(|(o, w)| o * w).collect();
            let ov: Vec<f64> = osc.iter().zip(&vv[r.clone()]).map(|(o, w)| o * w).collect();
            let t1 = luxemburg(&gauges.a, &uv[r.clone()]).0 * luxemburg(&gauges.b, &ov).0;
            let t2 = luxemburg(&gauges.c, &ou).0 * luxemburg(&gauges.d, &vv[r.clone()]).0;
            (*q, (t1, t2))
        })
        .collect();
    if rows.is_empty() {
        return Err(Error::Domain("no grid cubes to scan".into()));
    }
    let r1: Vec<(Cube, f64)> = rows.iter().map(|(q, t)| (*q, t.0)).collect();
    let r2: Vec<(Cube, f64)> = rows.iter().map(|(q, t)| (*q, t.1)).collect();
    let (term1, term2) = (sup_of(&r1), sup_of(&r2));
    Ok(BumpReport {
        k: term1.value + term2.value,
        term1,
        term2,
        config: BumpConfig {
            p,
            m,
            a: gauges.a.clone(),
            b: gauges.b.clone(),
            c: gauges.c.clone(),
            d: gauges.d.clone(),
            preset: None,
            n: b.lattice.n,
            grids: grids.len(),
        },
    })
}

/// The two suprema of the unbumped condition computed from plain power averages:
/// `sup (⨍|b-b_Q|^{mp} u)^{1/p} (⨍σ)^{1/p'} + sup (⨍u)^{1/p} (⨍|b-b_Q|^{mp'} σ)^{1/p'}`,
/// `σ = v^{-p'/p}`. Returned in the order `(u-side moment term, σ-side moment term)`.
pub fn unbumped_direct(
    b: &SampledFunction,
    m: u32,
    u: &Weight,
    v: &Weight,
    p: f64,
    grids: &[DyadicGrid],
) -> Result<(Witnessed, Witnessed)> {
    let pp = check_p(p)?;
    same_lattice(grids, &[b, u.as_function(), v.as_function()])?;
    let sigma = v.sigma(p)?;
    let (uv, sv, bv) = (u.values(), sigma.values(), &b.values);
    let mf = m as f64;
    let moment = |r: &Range<usize>, w: &[f64], s: f64| {
        let bs = &bv[r.clone()];
        let bq = mean(bs);
        bs.iter().zip(&w[r.clone()]).map(|(x, w)| (x - bq).abs().powf(s) * w).sum::<f64>() / bs.len() as f64
    };
    let first = per_cube(grids, |_, r| moment(&r, uv, mf * p).powf(1.0 / p) * mean(&sv[r]).powf(1.0 / pp))?;
    let second = per_cube(grids, |_, r| mean(&uv[r.clone()]).powf(1.0 / p) * moment(&r, sv, mf * pp).powf(1.0 / pp))?;
    Ok((sup_of(&first), sup_of(&second)))
}

/// Separated log-bump presets
/// `sup ‖u^{1/p}‖_A ‖v^{-1/p}‖_X + sup ‖u^{1/p}‖_Y ‖v^{-1/p}‖_D`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "lowercase")]
pub enum SeparatedPreset {
    /// `b ∈ BMO`: `X = L^{p'}(log L)^{(m+1)p'-1+δ}`.
    #[serde(rename = "cor1.3")]
    Cor13 { m: u32, delta: f64 },
    /// `b ∈ Osc(exp L^{1/ε})`: `X = L^{p'}(log L)^{(εm+1)p'-1+δ}`.
    #[serde(rename = "cor1.4")]
    Cor14 { m: u32, eps: f64, delta: f64 },
    /// `b^a ∈ BMO` with `a > max(p, p') m / δ`: `X = L^{p'}(log L)^{p'-1+δ}`.
    #[serde(rename = "cor1.6")]
    Cor16 { m: u32, delta: f64, a: Option<f64> },
    /// `b ∈ Osc(exp exp L^{1/ε})`: `X = L^{p'}(log L)^{p'-1}(log log L)^{(1+mε)p'-1+δ}`.
    #[serde(rename = "cor1.7")]
    Cor17 { m: u32, eps: f64, delta: f64 },
}

impl SeparatedPreset {
    /// Parses `cor1.3(m,delta)`, `cor1.4(m,eps,delta)`, `cor1.6(m,delta[,a])`, `cor1.7(m,eps,delta)`.
    pub fn parse(text: &str) -> Result<Self> {
        let t = text.trim();
        let open = t.find('(').ok_or_else(|| Error::Parse(format!("expected `name(args)`, got `{t}`")))?;
        if !t.ends_with(')') {
            return Err(Error::Parse(format!("unbalanced parentheses in `{t}`")));
        }
        let name = &t[..open];
        let args: Vec<f64> = t[open + 1..t.len() - 1]
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("bad argument `{s}`: {e}"))))
            .collect::<Result<_>>()?;
        let order = |x: f64| -> Result<u32> {
            if x >= 1.0 && x.fract() == 0.0 {
                Ok(x as u32)
            } else {
                Err(Error::Parse(format!("order m must be a positive integer, got {x}")))
            }
        };
        let preset = match (name, args.len()) {
            ("cor1.3", 2) => SeparatedPreset::Cor13 { m: order(args[0])?, delta: args[1] },
            ("cor1.4", 3) => SeparatedPreset::Cor14 { m: order(args[0])?, eps: args[1], delta: args[2] },
            ("cor1.6", 2) => SeparatedPreset::Cor16 { m: order(args[0])?, delta: args[1], a: None },
            ("cor1.6", 3) => SeparatedPreset::Cor16 { m: order(args[0])?, delta: args[1], a: Some(args[2]) },
            ("cor1.7", 3) => SeparatedPreset::Cor17 { m: order(args[0])?, eps: args[1], delta: args[2] },
            _ => return Err(Error::Parse(format!("unknown separated preset `{t}`"))),
        };
        preset.validate()?;
        Ok(preset)
    }

    pub fn validate(&self) -> Result<()> {
        let (delta, eps) = match *self {
            SeparatedPreset::Cor13 { delta, .. } | SeparatedPreset::Cor16 { delta, .. } => (delta, 1.0),
            SeparatedPreset::Cor14 { eps, delta, .. } | SeparatedPreset::Cor17 { eps, delta, .. } => (delta, eps),
        };
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidGauge(format!("delta must be positive, got {delta}")));
        }
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidGauge(format!("epsilon must be positive, got {eps}")));
        }
        if let SeparatedPreset::Cor16 { a: Some(a), .. } = *self {
            if !(a > 1.0 && a.is_finite()) {
                return Err(Error::InvalidGauge(format!("root exponent a must exceed 1, got {a}")));
            }
        }
        Ok(())
    }

    pub fn m(&self) -> u32 {
        match *self {
            SeparatedPreset::Cor13 { m, .. }
            | SeparatedPreset::Cor14 { m, .. }
            | SeparatedPreset::Cor16 { m, .. }
            | SeparatedPreset::Cor17 { m, .. } => m,
        }
    }

    pub fn delta(&self) -> f64 {
        match *self {
            SeparatedPreset::Cor13 { delta, .. }
            | SeparatedPreset::Cor14 { delta, .. }
            | SeparatedPreset::Cor16 { delta, .. }
            | SeparatedPreset::Cor17 { delta, .. } => delta,
        }
    }

    pub fn label(&self) -> String {
        match *self {
            SeparatedPreset::Cor13 { m, delta } => format!("cor1.3({m},{delta})"),
            SeparatedPreset::Cor14 { m, eps, delta } => format!("cor1.4({m},{eps},{delta})"),
            SeparatedPreset::Cor16 { m, delta, a: None } => format!("cor1.6({m},{delta})"),
            SeparatedPreset::Cor16 { m, delta, a: Some(a) } => format!("cor1.6({m},{delta},{a})"),
            SeparatedPreset::Cor17 { m, eps, delta } => format!("cor1.7({m},{eps},{delta})"),
        }
    }

    /// `(X, Y)`: the bumped `v` gauge (exponent `p'`) and the bumped `u` gauge (exponent `p`).
    pub fn gauges(&self, p: f64) -> Result<(YoungFunction, YoungFunction)> {
        self.validate()?;
        check_p(p)?;
        let (x, y) = match *self {
            SeparatedPreset::Cor13 { m, delta } => (format!("cor1.3-B({p},{m},{delta})"), format!("cor1.3-A({p},{m},{delta})")),
            SeparatedPreset::Cor14 { m, eps, delta } => {
                (format!("cor1.4-B({p},{m},{eps},{delta})"), format!("cor1.4-A({p},{m},{eps},{delta})"))
            }
            SeparatedPreset::Cor16 { delta, .. } => (format!("cor1.6-B({p},{delta})"), format!("cor1.6-A({p},{delta})")),
            SeparatedPreset::Cor17 { m, eps, delta } => {
                (format!("cor1.7-B({p},{m},{eps},{delta})"), format!("cor1.7-A({p},{m},{eps},{delta})"))
            }
        };
        Ok((preset(&x)?, preset(&y)?))
    }

    /// Default free gauges `A = L^p (log L)^{p-1+δ}`, `D = L^{p'} (log L)^{p'-1+δ}`.
    pub fn free_defaults(&self, p: f64) -> Result<(YoungFunction, YoungFunction)> {
        let d = self.delta();
        Ok((preset(&format!("free-A({p},{d})"))?, preset(&format!("free-D({p},{d})"))?))
    }

    /// Warnings on the preset's hypotheses that cannot be enforced numerically.
    pub fn warnings(&self, p: f64) -> Vec<String> {
        let mut out = Vec::new();
        if let SeparatedPreset::Cor16 { m, delta, a } = *self {
            let threshold = p.max(conjugate_exponent(p)) * m as f64 / delta;
            match a {
                Some(a) if a <= threshold => {
                    out.push(format!("root exponent a = {a} does not exceed max(p, p') m / delta = {threshold}"))
                }
                None => out.push(format!("root exponent a not given; the preset needs a > {threshold}")),
                _ => {}
            }
        }
        out
    }
}

/// Separated-bump constant plus the oscillation factor of `b` when one is supplied.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeparatedReport {
    pub preset: SeparatedPreset,
    /// Gauges in the order `(A, X, Y, D)` stored as `(a, b, c, d)`.
    pub bump: BumpReport,
    /// `‖b‖^m` in the preset's oscillation class (`‖b^a‖_BMO^{m/a}` for `cor1.6`).
    pub osc_factor: Option<f64>,
    pub warnings: Vec<String>,
}

/// Separated log-bump constant of a preset. `free` overrides the default `(A, D)`.
#[allow(clippy::too_many_arguments)]
pub fn separated_log_bump(
    preset: &SeparatedPreset,
    free: Option<(YoungFunction, YoungFunction)>,
    b: Option<&SampledFunction>,
    u: &Weight,
    v: &Weight,
    p: f64,
    grids: &[DyadicGrid],
) -> Result<SeparatedReport> {
    let (x, y) = preset.gauges(p)?;
    let (a, d) = match free {
        Some(ad) => ad,
        None => preset.free_defaults(p)?,
    };
    // With b ≡ 1 and m = 0 the bump constant is exactly the separated form.
    let one = SampledFunction::constant(u.lattice(), 1.0);
    let gauges = Gauges { a, b: x, c: y, d };
    let mut bump = bump_constant_k(&gauges, &one, 0, u, v, p, grids)?;
    bump.config.m = preset.m();
    bump.config.preset = Some(preset.label());
    let m = preset.m();
    let osc_factor = match b {
        None => None,
        Some(b) => Some(match *preset {
            SeparatedPreset::Cor13 { .. } => osc_seminorm(&YoungFunction::exp_minus_one(1.0)?, b, grids)?.seminorm.powi(m as i32),
            SeparatedPreset::Cor14 { eps, .. } => {
                osc_seminorm(&YoungFunction::exp_minus_one(1.0 / eps)?, b, grids)?.seminorm.powi(m as i32)
            }
            SeparatedPreset::Cor16 { a, .. } => {
                let a = a.ok_or_else(|| Error::Domain("cor1.6 oscillation factor needs the root exponent a".into()))?;
                if b.values.iter().any(|x| !(*x >= 0.0)) {
                    return Err(Error::Domain("cor1.6 needs b >= 0".into()));
                }
                bmo_seminorm(&b.map(|x| x.powf(a)), grids)?.seminorm.powf(m as f64 / a)
            }
            SeparatedPreset::Cor17 { eps, .. } => {
                osc_seminorm(&YoungFunction::double_exp(1.0 / eps)?, b, grids)?.seminorm.powi(m as i32)
            }
        }),
    };
    Ok(SeparatedReport { preset: preset.clone(), bump, osc_factor, warnings: preset.warnings(p) })
}

/// The two necessary suprema for bounded commutators of the Hilbert transform.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NecessityConstants {
    /// `sup_I (v(I)^{-1} ∫_I |b - b_I|^{mp} u)^{1/p}`.
    pub first: Witnessed,
    /// `sup_I (σ_u(I)^{-1} ∫_I |b - b_I|^{mp'} σ)^{1/p'}` with `σ = v^{-p'/p}`, `σ_u = u^{-p'/p}`.
    pub second: Witnessed,
}

pub fn necessity_constants(
    b: &SampledFunction,
    m: u32,
    u: &Weight,
    v: &Weight,
    p: f64,
    grids: &[DyadicGrid],
) -> Result<NecessityConstants> {
    let pp = check_p(p)?;
    if m == 0 {
        return Err(Error::UnsupportedOrder(0));
    }
    same_lattice(grids, &[b, u.as_function(), v.as_function()])?;
    let sigma = v.sigma(p)?;
    let sigma_u = u.sigma(p)?;
    let (uv, vv, sv, suv, bv) = (u.values(), v.values(), sigma.values(), sigma_u.values(), &b.values);
    let mf = m as f64;
    let ratio = |r: &Range<usize>, num_w: &[f64], den_w: &[f64], s: f64| {
        let bs = &bv[r.clone()];
        let bq = mean(bs);
        let num: f64 = bs.iter().zip(&num_w[r.clone()]).map(|(x, w)| (x - bq).abs().powf(s) * w).sum();
        num / den_w[r.clone()].iter().sum::<f64>()
    };
    let first = per_cube(grids, |_, r| ratio(&r, uv, vv, mf * p).powf(1.0 / p))?;
    let second = per_cube(grids, |_, r| ratio(&r, sv, suv, mf * pp).powf(1.0 / pp))?;
    Ok(NecessityConstants { first: sup_of(&first), second: sup_of(&second) })
}

/// One cube of the sparse converse check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SparseNecessityRow {
    pub cube: Cube,
    /// `‖T f‖_{L^p(u)} / ‖f‖_{L^p(v)}` for the extremal `f` of the cube.
    pub ratio: f64,
    /// The lower bound the converse argument gives for that ratio.
    pub bound: f64,
    /// `max(0, bound - ratio) / bound`.
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SparseNecessityReport {
    pub adjoint: bool,
    pub rows: Vec<SparseNecessityRow>,
    pub skipped: Vec<Cube>,
    /// Largest bound: the family's unbumped supremum.
    pub sup_bound: Option<Witnessed>,
    pub max_residual: f64,
    pub holds: bool,
}

/// Tolerance for the sparse converse inequality.
pub const SPARSE_NECESSITY_TOL: f64 = 1e-8;

/// For each `Q ∈ S` tests `T^m_{S,b}` on `f = |b - b_Q|^{m(p'-1)} σ 1_Q` and checks
/// `ratio >= (⨍_Q u)^{1/p} (⨍_Q |b - b_Q|^{mp'} σ)^{1/p'}`; with `adjoint` tests
/// `(T^m_{S,b})^*` on `f = σ 1_Q` against `(⨍_Q |b - b_Q|^{mp} u)^{1/p} (⨍_Q σ)^{1/p'}`.
/// Cubes where the bound vanishes are skipped.
pub fn sparse_necessity_check(
    s: &SparseFamily,
    b: &SampledFunction,
    m: u32,
    u: &Weight,
    v: &Weight,
    p: f64,
    adjoint: bool,
) -> Result<SparseNecessityReport> {
    let pp = check_p(p)?;
    let lat = s.grid.lattice;
    lat.check_same(&b.lattice)?;
    lat.check_same(&u.lattice())?;
    lat.check_same(&v.lattice())?;
    let sigma = v.sigma(p)?;
    let (uv, sv, bv) = (u.values(), sigma.values(), &b.values);
    let mf = m as f64;
    let results: Vec<Result<Option<SparseNecessityRow>>> = s
        .cubes
        .par_iter()
        .map(|sc| {
            let q = sc.cube;
            let r = lat.index_range(&q)?;
            let bq = mean(&bv[r.clone()]);
            let mut f = SampledFunction::zeros(lat);
            let bound = if adjoint {
                let mom = r.clone().map(|i| (bv[i] - bq).abs().powf(mf * p) * uv[i]).sum::<f64>() / r.len() as f64;
                for i in r.clone() {
                    f.values[i] = sv[i];
                }
                mom.powf(1.0 / p) * mean(&sv[r.clone()]).powf(1.0 / pp)
            } else {
                let mom = r.clone().map(|i| (bv[i] - bq).abs().powf(mf * pp) * sv[i]).sum::<f64>() / r.len() as f64;
                f = extremal_sparse_test(b, &q, p, m, &sigma)?;
                mean(&uv[r.clone()]).powf(1.0 / p) * mom.powf(1.0 / pp)
            };
            if !(bound > 0.0) || f.max_abs() == 0.0 {
                return Ok(None);
            }
            let tf = if adjoint { apply_sparse_adjoint(s, b, m, &f)? } else { apply_sparse(s, b, m, &f)? };
            let ratio = tf.lp_norm(p, Some(u))? / f.lp_norm(p, Some(v))?;
            let residual = (bound - ratio).max(0.0) / bound;
            Ok(Some(SparseNecessityRow { cube: q, ratio, bound, residual }))
        })
        .collect();
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for (sc, res) in s.cubes.iter().zip(results) {
        match res? {
            Some(row) => rows.push(row),
            None => skipped.push(sc.cube),
        }
    }
    let bounds: Vec<(Cube, f64)> = rows.iter().map(|r| (r.cube, r.bound)).collect();
    let max_residual = rows.iter().fold(0.0_f64, |a, r| a.max(r.residual));
    Ok(SparseNecessityReport {
        adjoint,
        sup_bound: supremum(&bounds).map(|(cube, value)| Witnessed { value, cube }),
        max_residual,
        holds: max_residual <= SPARSE_NECESSITY_TOL,
        rows,
        skipped,
    })
}

/// Reverse Hölder ladder search.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReverseHolderReport {
    pub c_cap: f64,
    /// Largest rung with `sup_I (⨍_I w^r)^{1/r} / ⨍_I w <= c_cap`; `None` if no rung qualifies.
    pub r: Option<f64>,
    /// `(r, sup ratio, attaining cube)` for every rung tried, top first.
    pub rungs: Vec<(f64, Witnessed)>,
}

/// Candidate exponents `1 + 8·2^{-j}`, `j = 0..=20`.
pub fn reverse_holder_ladder() -> Vec<f64> {
    (0..=20).map(|j| 1.0 + 8.0 * 0.5f64.powi(j)).collect()
}

pub fn reverse_holder_exponent(w: &Weight, grids: &[DyadicGrid], c_cap: f64) -> Result<ReverseHolderReport> {
    if !(c_cap > 1.0) {
        return Err(Error::Domain(format!("C_cap must exceed 1, got {c_cap}")));
    }
    same_lattice(grids, &[w.as_function()])?;
    let wv = w.values();
    let mut rungs = Vec::new();
    let mut found = None;
    for r in reverse_holder_ladder() {
        let rows = per_cube(grids, |_, rg| {
            let xs = &wv[rg];
            // scale by the max to keep w^r finite
            let top = xs.iter().fold(0.0_f64, |a, &x| a.max(x));
            let pm = avg_pow(&xs.iter().map(|x| x / top).collect::<Vec<_>>(), r).powf(1.0 / r) * top;
            pm / mean(xs)
        })?;
        let sup = sup_of(&rows);
        rungs.push((r, sup));
        if sup.value <= c_cap {
            found = Some(r);
            break;
        }
    }
    Ok(ReverseHolderReport { c_cap, r: found, rungs })
}

/// `(|Q|/w(Q))^{1/p} <= (⨍_Q w^{-p'/p})^{1/p'} <= [w]_{A_p}^{1/p} (|Q|/w(Q))^{1/p}` on every cube.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OneWeightChain {
    pub ap: Witnessed,
    pub left_violations: usize,
    pub right_violations: usize,
    /// Largest `(⨍ w^{-p'/p})^{1/p'} / (|Q|/w(Q))^{1/p}`; at most `[w]_{A_p}^{1/p}`.
    pub max_middle_ratio: f64,
    pub holds: bool,
}

pub fn one_weight_chain_check(w: &Weight, p: f64, grids: &[DyadicGrid]) -> Result<OneWeightChain> {
    let pp = check_p(p)?;
    let ap = ap_constant(w, p, grids)?;
    let bound = ap.value.powf(1.0 / p);
    let wv = w.values();
    let rows = per_cube(grids, |_, r| {
        let xs = &wv[r];
        let left = mean(xs).powf(-1.0 / p);
        let middle = avg_pow(xs, -pp / p).powf(1.0 / pp);
        middle / left
    })?;
    let tol = 1e-12;
    let left_violations = rows.iter().filter(|(_, x)| *x < 1.0 - tol).count();
    let right_violations = rows.iter().filter(|(_, x)| *x > bound * (1.0 + tol)).count();
    let max_middle_ratio = rows.iter().fold(0.0_f64, |a, (_, x)| a.max(*x));
    Ok(OneWeightChain {
        ap,
        left_violations,
        right_violations,
        max_middle_ratio,
        holds: left_violations == 0 && right_violations == 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Generator, Lattice};
    use crate::sparse::verify_or_build_exceptional;
    use approx::assert_relative_eq;

    fn setup(x0: f64, x1: f64, depth: u32) -> (Lattice, Vec<DyadicGrid>) {
        let lat = Lattice::with_depth(x0, x1, depth).unwrap();
        (lat, vec![DyadicGrid::standard(lat).unwrap()])
    }

    #[test]
    fn ap_of_constants_and_power_weight() {
        let (lat, g) = setup(0.0, 1.0, 8);
        let one = Weight::constant(lat, 3.0).unwrap();
        assert_relative_eq!(ap_constant(&one, 2.0, &g).unwrap().value, 1.0, max_relative = 1e-12);
        assert_relative_eq!(two_weight_ap(&one, &one, 3.0, &g).unwrap().value, 1.0, max_relative = 1e-12);
        let (lat, g) = setup(-1.0, 1.0, 10);
        let mut last = 1.0;
        for alpha in [0.25, 0.5, 0.75] {
            let w = Weight::new(Generator::PowerWeight(alpha).sample(lat)).unwrap();
            let ap = ap_constant(&w, 2.0, &g).unwrap().value;
            assert!(ap > last);
            last = ap;
            let two = two_weight_ap(&w, &w, 2.0, &g).unwrap().value;
            assert_relative_eq!(two, ap.sqrt(), max_relative = 1e-12);
        }
    }

    #[test]
    fn linear_symbol_unbumped() {
        let (lat, g) = setup(0.0, 1.0, 8);
        let b = Generator::Identity.sample(lat);
        let one = Weight::constant(lat, 1.0).unwrap();
        let rep = bump_constant_k(&Gauges::unbumped(2.0).unwrap(), &b, 1, &one, &one, 2.0, &g).unwrap();
        // discrete variance of the 256 midpoints of [0, 1)
        let var: f64 = (1.0 - 1.0 / 65536.0) / 12.0;
        assert_relative_eq!(rep.term1.value, var.sqrt(), max_relative = 1e-10);
        assert_relative_eq!(rep.term2.value, var.sqrt(), max_relative = 1e-10);
        assert_eq!(rep.term1.cube, lat.domain());
        let (d1, d2) = unbumped_direct(&b, 1, &one, &one, 2.0, &g).unwrap();
        assert_relative_eq!(rep.k, d1.value + d2.value, max_relative = 1e-10);
        let nc = necessity_constants(&b, 1, &one, &one, 2.0, &g).unwrap();
        assert_relative_eq!(nc.first.value, var.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn constant_symbol_gives_zero() {
        let (lat, g) = setup(0.0, 1.0, 6);
        let b = SampledFunction::constant(lat, 2.0);
        let w = Weight::new(Generator::Poly(vec![1.0, 0.0, 1.0]).sample(lat)).unwrap();
        let rep = bump_constant_k(&Gauges::unbumped(3.0).unwrap(), &b, 2, &w, &w, 3.0, &g).unwrap();
        assert_eq!(rep.k, 0.0);
        let nc = necessity_constants(&b, 1, &w, &w, 2.0, &g).unwrap();
        assert_eq!((nc.first.value, nc.second.value), (0.0, 0.0));
    }

    #[test]
    fn separated_presets() {
        let (lat, g) = setup(0.0, 1.0, 6);
        let one = Weight::constant(lat, 1.0).unwrap();
        let b = Generator::Identity.sample(lat);
        for text in ["cor1.3(1,0.5)", "cor1.4(2,0.5,0.5)", "cor1.6(1,0.5,5)", "cor1.7(1,1,0.5)"] {
            let pr = SeparatedPreset::parse(text).unwrap();
            let rep = separated_log_bump(&pr, None, Some(&b), &one, &one, 2.0, &g).unwrap();
            assert!(rep.bump.k.is_finite() && rep.bump.k > 0.0);
            assert!(rep.osc_factor.unwrap() > 0.0);
        }
        let c13 = SeparatedPreset::parse("cor1.3(2,0.3)").unwrap().gauges(3.0).unwrap();
        let c14 = SeparatedPreset::parse("cor1.4(2,1,0.3)").unwrap().gauges(3.0).unwrap();
        assert_eq!(c13, c14);
        assert_eq!(SeparatedPreset::parse("cor1.6(1,0.5,3)").unwrap().warnings(2.0).len(), 1);
        assert!(SeparatedPreset::parse("cor1.6(1,0.5,5)").unwrap().warnings(2.0).is_empty());
        assert!(SeparatedPreset::parse("cor1.5(1,1)").is_err());
    }

    #[test]
    fn sparse_converse_singleton() {
        let (lat, g) = setup(0.0, 1.0, 6);
        let s = verify_or_build_exceptional(&g[0], &[lat.domain()], 0.5).unwrap();
        let b = Generator::Identity.sample(lat);
        let u = Weight::new(Generator::Poly(vec![1.0, 1.0]).sample(lat)).unwrap();
        let v = Weight::new(Generator::Poly(vec![2.0, 0.0, 1.0]).sample(lat)).unwrap();
        for adjoint in [false, true] {
            let rep = sparse_necessity_check(&s, &b, 1, &u, &v, 2.0, adjoint).unwrap();
            assert!(rep.holds);
            // one cube: T f is constant on Q, so the bound is attained
            if !adjoint {
                assert_relative_eq!(rep.rows[0].ratio, rep.rows[0].bound, max_relative = 1e-12);
            }
        }
        let flat = sparse_necessity_check(&s, &SampledFunction::constant(lat, 1.0), 1, &u, &v, 2.0, false).unwrap();
        assert_eq!(flat.skipped.len(), 1);
    }

    #[test]
    fn reverse_holder_and_chain() {
        let (lat, g) = setup(-1.0, 1.0, 10);
        let one = Weight::constant(lat, 1.0).unwrap();
        assert_eq!(reverse_holder_exponent(&one, &g, 2.0).unwrap().r, Some(9.0));
        let w = Weight::new(Generator::PowerWeight(0.5).sample(lat)).unwrap();
        let r2 = reverse_holder_exponent(&w, &g, 2.0).unwrap().r.unwrap();
        let r4 = reverse_holder_exponent(&w, &g, 4.0).unwrap().r.unwrap();
        assert!(r2 > 1.0 && r4 >= r2);
        assert!(one_weight_chain_check(&w, 2.0, &g).unwrap().holds);
    }
}
