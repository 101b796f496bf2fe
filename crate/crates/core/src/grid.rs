//! Half-open cubes (intervals), dyadic grids with shifts, and functions sampled at the
//! midpoints of a uniform power-of-two lattice.
//!
//! Functions with singularities (for instance `log(1/|x|)`) are sampled at midpoints, so
//! values stay finite; any supremum over the finest levels is then a lower bound for the
//! true, possibly infinite, supremum.

use std::cmp::Ordering;
use std::fmt;
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::conjugate_exponent;

/// Tolerance, in units of the lattice spacing, for cube/lattice alignment.
const ALIGN_TOL: f64 = 1e-9;

/// Half-open interval `[a, a + side)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cube {
    pub a: f64,
    pub side: f64,
}

impl Cube {
    pub fn new(a: f64, side: f64) -> Result<Self> {
        if !(a.is_finite() && side.is_finite() && side > 0.0) {
            return Err(Error::Domain(format!("cube needs finite a and side > 0, got ({a}, {side})")));
        }
        Ok(Cube { a, side })
    }

    pub fn b(&self) -> f64 {
        self.a + self.side
    }

    pub fn center(&self) -> f64 {
        self.a + 0.5 * self.side
    }

    pub fn contains(&self, x: f64) -> bool {
        self.a <= x && x < self.b()
    }

    /// `self ⊆ other`.
    pub fn is_within(&self, other: &Cube) -> bool {
        other.a <= self.a && self.b() <= other.b()
    }

    pub fn intersects(&self, other: &Cube) -> bool {
        self.a < other.b() && other.a < self.b()
    }

    pub fn children(&self) -> [Cube; 2] {
        let h = 0.5 * self.side;
        [Cube { a: self.a, side: h }, Cube { a: self.a + h, side: h }]
    }

    /// Lexicographic order on `(a, side)`, used to break ties deterministically.
    pub fn lex_cmp(&self, other: &Cube) -> Ordering {
        self.a.total_cmp(&other.a).then(self.side.total_cmp(&other.side))
    }
}

impl fmt::Display for Cube {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.a, self.b())
    }
}

/// Uniform lattice of `n` cells on `[x0, x1)`; samples sit at cell midpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub x0: f64,
    pub x1: f64,
    pub n: usize,
}

impl Lattice {
    pub fn new(x0: f64, x1: f64, n: usize) -> Result<Self> {
        if !(x0.is_finite() && x1.is_finite() && x1 > x0) {
            return Err(Error::Domain(format!("domain [{x0}, {x1}) is empty or unbounded")));
        }
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::Domain(format!("sample count must be a power of two >= 2, got {n}")));
        }
        Ok(Lattice { x0, x1, n })
    }

    /// Lattice with `2^depth` cells.
    pub fn with_depth(x0: f64, x1: f64, depth: u32) -> Result<Self> {
        if depth >= usize::BITS {
            return Err(Error::Domain(format!("depth {depth} is too large")));
        }
        Lattice::new(x0, x1, 1usize << depth)
    }

    pub fn h(&self) -> f64 {
        (self.x1 - self.x0) / self.n as f64
    }

    pub fn depth(&self) -> u32 {
        self.n.trailing_zeros()
    }

    pub fn domain(&self) -> Cube {
        Cube { a: self.x0, side: self.x1 - self.x0 }
    }

    pub fn midpoint(&self, i: usize) -> f64 {
        self.x0 + (i as f64 + 0.5) * self.h()
    }

    pub fn midpoints(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.midpoint(i)).collect()
    }

    /// Sample indices covered by `q`; errors if `q` is misaligned or leaves the domain.
    pub fn index_range(&self, q: &Cube) -> Result<Range<usize>> {
        let h = self.h();
        let s = (q.a - self.x0) / h;
        let e = (q.b() - self.x0) / h;
        let (sr, er) = (s.round(), e.round());
        if (s - sr).abs() > ALIGN_TOL * s.abs().max(1.0)
            || (e - er).abs() > ALIGN_TOL * e.abs().max(1.0)
            || sr < 0.0
            || er > self.n as f64
            || er <= sr
        {
            return Err(Error::Misaligned(*q));
        }
        Ok(sr as usize..er as usize)
    }

    /// Cell containing `x`.
    pub fn locate(&self, x: f64) -> Result<usize> {
        if !(self.x0 <= x && x < self.x1) {
            return Err(Error::Domain(format!("point {x} lies outside [{}, {})", self.x0, self.x1)));
        }
        Ok((((x - self.x0) / self.h()) as usize).min(self.n - 1))
    }

    fn same_as(&self, other: &Lattice) -> bool {
        self.n == other.n
            && (self.x0 - other.x0).abs() <= ALIGN_TOL * self.h()
            && (self.x1 - other.x1).abs() <= ALIGN_TOL * self.h()
    }

    pub fn check_same(&self, other: &Lattice) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::LatticeMismatch(format!(
                "[{}, {}) with {} samples vs [{}, {}) with {} samples",
                self.x0, self.x1, self.n, other.x0, other.x1, other.n
            )))
        }
    }
}

/// Dyadic cubes `shift + 2^k [j, j+1)` for `k_min <= k <= k_max`, restricted to cubes that
/// lie inside the lattice domain. Any two cubes are nested or disjoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DyadicGrid {
    pub lattice: Lattice,
    pub shift: f64,
    pub k_min: i32,
    pub k_max: i32,
}

impl DyadicGrid {
    pub fn new(lattice: Lattice, shift: f64, k_min: i32, k_max: i32) -> Result<Self> {
        if k_min > k_max {
            return Err(Error::Domain(format!("empty level range [{k_min}, {k_max}]")));
        }
        let finest = 2f64.powi(k_min);
        let ratio = finest / lattice.h();
        if (ratio - ratio.round()).abs() > ALIGN_TOL || ratio.round() < 1.0 {
            return Err(Error::Domain(format!(
                "finest side 2^{k_min} is not a multiple of the spacing {}",
                lattice.h()
            )));
        }
        Ok(DyadicGrid { lattice, shift, k_min, k_max })
    }

    /// Unshifted grid from the sample spacing up to the largest power of two fitting the domain.
    pub fn standard(lattice: Lattice) -> Result<Self> {
        DyadicGrid::shifted(lattice, 0.0)
    }

    fn shifted(lattice: Lattice, shift: f64) -> Result<Self> {
        let lh = lattice.h().log2();
        if (lh - lh.round()).abs() > 1e-12 {
            return Err(Error::Domain(format!(
                "dyadic grids need a power-of-two spacing, got h = {}",
                lattice.h()
            )));
        }
        let k_min = lh.round() as i32;
        let k_max = ((lattice.x1 - lattice.x0).log2() + 1e-12).floor() as i32;
        DyadicGrid::new(lattice, shift, k_min, k_max)
    }

    /// Cubes of side `2^k` inside the domain, left to right.
    pub fn level(&self, k: i32) -> Vec<Cube> {
        let side = 2f64.powi(k);
        let (x0, x1) = (self.lattice.x0, self.lattice.x1);
        let tol = ALIGN_TOL * self.lattice.h();
        let j0 = ((x0 - self.shift - tol) / side).ceil() as i64;
        let j1 = ((x1 - self.shift + tol) / side).floor() as i64;
        (j0..j1)
            .map(|j| Cube { a: self.shift + j as f64 * side, side })
            .filter(|q| q.a >= x0 - tol && q.b() <= x1 + tol)
            .filter(|q| self.lattice.index_range(q).is_ok())
            .collect()
    }

    /// Every cube, coarsest level first.
    pub fn cubes(&self) -> Vec<Cube> {
        (self.k_min..=self.k_max).rev().flat_map(|k| self.level(k)).collect()
    }

    /// Cubes together with their sample ranges.
    pub fn cube_ranges(&self) -> Vec<(Cube, Range<usize>)> {
        self.cubes()
            .into_iter()
            .map(|q| {
                let r = self.lattice.index_range(&q).expect("grid cubes are aligned");
                (q, r)
            })
            .collect()
    }

    /// Cubes of the grid not contained in a larger grid cube.
    pub fn maximal_cubes(&self) -> Vec<Cube> {
        let mut out: Vec<Cube> = Vec::new();
        for k in (self.k_min..=self.k_max).rev() {
            for q in self.level(k) {
                if !out.iter().any(|p| q.is_within(p)) {
                    out.push(q);
                }
            }
        }
        out.sort_by(|a, b| a.lex_cmp(b));
        out
    }

    /// Grid cubes containing `x`, coarsest first.
    pub fn containing(&self, x: f64) -> Vec<Cube> {
        (self.k_min..=self.k_max)
            .rev()
            .filter_map(|k| {
                let side = 2f64.powi(k);
                let j = ((x - self.shift) / side).floor();
                let q = Cube { a: self.shift + j * side, side };
                (q.contains(x) && q.is_within(&self.lattice.domain()) && self.lattice.index_range(&q).is_ok())
                    .then_some(q)
            })
            .collect()
    }
}

/// `n_shifts` grids with shifts `j ℓ_max / 3`, each rounded to the nearest multiple of the
/// sample spacing so that shifted cubes stay aligned with the samples.
pub fn shifted_grids(lattice: Lattice, n_shifts: usize) -> Result<Vec<DyadicGrid>> {
    if n_shifts != 1 && n_shifts != 3 {
        return Err(Error::Domain(format!("n_shifts must be 1 or 3, got {n_shifts}")));
    }
    let base = DyadicGrid::standard(lattice)?;
    let lmax = 2f64.powi(base.k_max);
    let h = lattice.h();
    (0..n_shifts)
        .map(|j| {
            let raw = j as f64 * lmax / 3.0;
            let snapped = (raw / h).round() * h;
            DyadicGrid::shifted(lattice, snapped)
        })
        .collect()
}

/// Real function sampled at lattice midpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledFunction {
    pub lattice: Lattice,
    pub values: Vec<f64>,
}

impl SampledFunction {
    pub fn new(lattice: Lattice, values: Vec<f64>) -> Result<Self> {
        if values.len() != lattice.n {
            return Err(Error::LatticeMismatch(format!(
                "{} values for a lattice of {} samples",
                values.len(),
                lattice.n
            )));
        }
        Ok(SampledFunction { lattice, values })
    }

    pub fn from_fn(lattice: Lattice, f: impl Fn(f64) -> f64) -> Self {
        let values = (0..lattice.n).map(|i| f(lattice.midpoint(i))).collect();
        SampledFunction { lattice, values }
    }

    pub fn constant(lattice: Lattice, c: f64) -> Self {
        SampledFunction { lattice, values: vec![c; lattice.n] }
    }

    pub fn zeros(lattice: Lattice) -> Self {
        Self::constant(lattice, 0.0)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        SampledFunction { lattice: self.lattice, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_with(&self, other: &SampledFunction, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.lattice.check_same(&other.lattice)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(SampledFunction { lattice: self.lattice, values })
    }

    pub fn mul(&self, other: &SampledFunction) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    /// `f · 1_Q`.
    pub fn restrict(&self, q: &Cube) -> Result<Self> {
        let r = self.lattice.index_range(q)?;
        let mut values = vec![0.0; self.lattice.n];
        values[r.clone()].copy_from_slice(&self.values[r]);
        Ok(SampledFunction { lattice: self.lattice, values })
    }

    pub fn slice(&self, q: &Cube) -> Result<&[f64]> {
        Ok(&self.values[self.lattice.index_range(q)?])
    }

    /// Midpoint-rule mean over `q`.
    pub fn average(&self, q: &Cube) -> Result<f64> {
        Ok(mean(self.slice(q)?))
    }

    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.lattice.h()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `(∫ |f|^p w)^{1/p}`, with `w ≡ 1` when absent.
    pub fn lp_norm(&self, p: f64, w: Option<&Weight>) -> Result<f64> {
        let h = self.lattice.h();
        let s = match w {
            None => self.values.iter().map(|v| v.abs().powf(p)).sum::<f64>(),
            Some(w) => {
                self.lattice.check_same(&w.lattice())?;
                self.values.iter().zip(w.values()).map(|(v, w)| v.abs().powf(p) * w).sum::<f64>()
            }
        };
        Ok((s * h).powf(1.0 / p))
    }

    pub fn inner(&self, other: &SampledFunction) -> Result<f64> {
        self.lattice.check_same(&other.lattice)?;
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<f64>() * self.lattice.h())
    }

    /// Writes `x,value` rows with a header.
    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["x", "value"])?;
        for (i, v) in self.values.iter().enumerate() {
            w.write_record([self.lattice.midpoint(i).to_string(), v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads `x,value` rows; `x` must be uniformly spaced midpoints of a power-of-two lattice.
    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let mut rd = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_path(path)?;
        let mut xs = Vec::new();
        let mut vs = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            let parse = |i: usize| -> Result<f64> {
                rec.get(i)
                    .ok_or_else(|| Error::Parse("CSV rows need two columns (x,value)".into()))?
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("bad CSV number: {e}")))
            };
            xs.push(parse(0)?);
            vs.push(parse(1)?);
        }
        if xs.len() < 2 {
            return Err(Error::Parse("CSV needs at least two rows".into()));
        }
        let h = (xs[xs.len() - 1] - xs[0]) / (xs.len() - 1) as f64;
        for (i, x) in xs.iter().enumerate() {
            let expect = xs[0] + i as f64 * h;
            if (x - expect).abs() > 1e-6 * h {
                return Err(Error::LatticeMismatch(format!("CSV abscissa {x} breaks uniform spacing {h}")));
            }
        }
        let lattice = Lattice::new(xs[0] - 0.5 * h, xs[xs.len() - 1] + 0.5 * h, xs.len())?;
        SampledFunction::new(lattice, vs)
    }
}

/// Largest value with its cube; ties go to the lexicographically smallest cube.
/// NaN entries are ignored.
pub fn supremum(entries: &[(Cube, f64)]) -> Option<(Cube, f64)> {
    let mut best: Option<(Cube, f64)> = None;
    for &(q, v) in entries {
        if v.is_nan() {
            continue;
        }
        best = match best {
            None => Some((q, v)),
            Some((bq, bv)) if v > bv || (v == bv && q.lex_cmp(&bq).is_lt()) => Some((q, v)),
            keep => keep,
        };
    }
    best
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Strictly positive, finite sampled function.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Weight(SampledFunction);

impl Weight {
    pub fn new(f: SampledFunction) -> Result<Self> {
        if let Some((i, v)) = f.values.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::Domain(format!(
                "weight must be positive and finite, got {v} at x = {}",
                f.lattice.midpoint(i)
            )));
        }
        Ok(Weight(f))
    }

    pub fn constant(lattice: Lattice, c: f64) -> Result<Self> {
        Weight::new(SampledFunction::constant(lattice, c))
    }

    pub fn as_function(&self) -> &SampledFunction {
        &self.0
    }

    pub fn values(&self) -> &[f64] {
        &self.0.values
    }

    pub fn lattice(&self) -> Lattice {
        self.0.lattice
    }

    /// `w^s`; rejects results that under- or overflow.
    pub fn powf(&self, s: f64) -> Result<Weight> {
        Weight::new(self.0.map(|v| v.powf(s)))
    }

    /// `σ = w^{-p'/p}`.
    pub fn sigma(&self, p: f64) -> Result<Weight> {
        self.powf(-conjugate_exponent(p) / p)
    }

    pub fn scale(&self, c: f64) -> Result<Weight> {
        Weight::new(self.0.scale(c))
    }

    pub fn average(&self, q: &Cube) -> Result<f64> {
        self.0.average(q)
    }

    /// `w(Q) = ∫_Q w`.
    pub fn measure(&self, q: &Cube) -> Result<f64> {
        Ok(self.0.slice(q)?.iter().sum::<f64>() * self.0.lattice.h())
    }
}

/// Named sample generators usable in scenario files.
#[derive(Debug, Clone, PartialEq)]
pub enum Generator {
    Constant(f64),
    Identity,
    Monomial(i32),
    Poly(Vec<f64>),
    Sin(f64),
    SmoothBump { center: f64, radius: f64 },
    PowerWeight(f64),
    LogSymbol,
    RootLogSymbol(f64),
    Indicator(f64, f64),
}

impl Generator {
    /// Parses `constant(c)`, `identity()`, `monomial(k)`, `poly(c0,c1,..)`, `sin(freq)`,
    /// `smooth_bump(center,radius)`, `power_weight(alpha)`, `log_symbol()`,
    /// `root_log_symbol(a)` or `indicator(a,b)`.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        let open = text.find('(').ok_or_else(|| Error::Parse(format!("expected generator(args), got `{text}`")))?;
        if !text.ends_with(')') {
            return Err(Error::Parse(format!("unbalanced parentheses in `{text}`")));
        }
        let name = text[..open].trim();
        let inner = text[open + 1..text.len() - 1].trim();
        let args: Vec<f64> = if inner.is_empty() {
            Vec::new()
        } else {
            inner
                .split(',')
                .map(|a| a.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad number `{a}` in `{text}`"))))
                .collect::<Result<_>>()?
        };
        let want = |n: usize| -> Result<()> {
            if args.len() == n {
                Ok(())
            } else {
                Err(Error::Parse(format!("`{name}` takes {n} arguments, got {}", args.len())))
            }
        };
        Ok(match name {
            "constant" => {
                want(1)?;
                Generator::Constant(args[0])
            }
            "identity" => {
                want(0)?;
                Generator::Identity
            }
            "monomial" => {
                want(1)?;
                if args[0] < 0.0 || args[0].fract() != 0.0 {
                    return Err(Error::Parse("monomial degree must be a nonnegative integer".into()));
                }
                Generator::Monomial(args[0] as i32)
            }
            "poly" => {
                if args.is_empty() {
                    return Err(Error::Parse("poly needs at least one coefficient".into()));
                }
                Generator::Poly(args)
            }
            "sin" => {
                want(1)?;
                Generator::Sin(args[0])
            }
            "smooth_bump" => {
                want(2)?;
                if !(args[1] > 0.0) {
                    return Err(Error::Parse("smooth_bump radius must be positive".into()));
                }
                Generator::SmoothBump { center: args[0], radius: args[1] }
            }
            "power_weight" => {
                want(1)?;
                Generator::PowerWeight(args[0])
            }
            "log_symbol" => {
                want(0)?;
                Generator::LogSymbol
            }
            "root_log_symbol" => {
                want(1)?;
                if !(args[0] > 0.0) {
                    return Err(Error::Parse("root_log_symbol needs a > 0".into()));
                }
                Generator::RootLogSymbol(args[0])
            }
            "indicator" => {
                want(2)?;
                Generator::Indicator(args[0], args[1])
            }
            _ => return Err(Error::Parse(format!("unknown generator `{name}`"))),
        })
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Generator::Constant(c) => *c,
            Generator::Identity => x,
            Generator::Monomial(k) => x.powi(*k),
            Generator::Poly(c) => c.iter().rev().fold(0.0, |acc, &ci| acc * x + ci),
            Generator::Sin(w) => (w * x).sin(),
            Generator::SmoothBump { center, radius } => {
                let s = (x - center) / radius;
                if s.abs() < 1.0 {
                    (-1.0 / (1.0 - s * s)).exp()
                } else {
                    0.0
                }
            }
            Generator::PowerWeight(alpha) => x.abs().powf(*alpha),
            Generator::LogSymbol => -x.abs().ln(),
            Generator::RootLogSymbol(a) => x.abs().ln().abs().powf(1.0 / a),
            Generator::Indicator(a, b) => {
                if *a <= x && x < *b {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn sample(&self, lattice: Lattice) -> SampledFunction {
        SampledFunction::from_fn(lattice, |x| self.eval(x))
    }
}

/// Where a scenario takes a function from: a generator string or a CSV file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FunctionSource {
    Generator(String),
    Csv { csv: String },
}

impl FunctionSource {
    /// Samples the source on `lattice`; relative CSV paths resolve against `base`.
    pub fn resolve(&self, lattice: Lattice, base: Option<&Path>) -> Result<SampledFunction> {
        match self {
            FunctionSource::Generator(s) => Ok(Generator::parse(s)?.sample(lattice)),
            FunctionSource::Csv { csv } => {
                let path = match base {
                    Some(dir) if Path::new(csv).is_relative() => dir.join(csv),
                    _ => Path::new(csv).to_path_buf(),
                };
                let f = SampledFunction::load_csv(&path)?;
                f.lattice.check_same(&lattice)?;
                Ok(SampledFunction { lattice, values: f.values })
            }
        }
    }
}

impl fmt::Display for FunctionSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunctionSource::Generator(s) => write!(f, "{s}"),
            FunctionSource::Csv { csv } => write!(f, "csv:{csv}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(depth: u32) -> Lattice {
        Lattice::with_depth(0.0, 1.0, depth).unwrap()
    }

    #[test]
    fn averages() {
        let lat = unit(6);
        let q = Cube::new(0.0, 1.0).unwrap();
        assert_eq!(SampledFunction::constant(lat, 3.5).average(&q).unwrap(), 3.5);
        let x = Generator::Identity.sample(lat);
        assert!((x.average(&q).unwrap() - 0.5).abs() < 1e-15);
        let ind = Generator::Indicator(0.0, 0.5).sample(lat);
        assert_eq!(ind.average(&q).unwrap(), 0.5);
        assert!(matches!(x.average(&Cube::new(0.01, 0.5).unwrap()), Err(Error::Misaligned(_))));
        assert!(x.average(&Cube::new(0.5, 1.0).unwrap()).is_err());
    }

    #[test]
    fn dyadic_enumeration() {
        let lat = unit(1);
        let g = DyadicGrid::standard(lat).unwrap();
        assert_eq!((g.k_min, g.k_max), (-1, 0));
        let cubes = g.cubes();
        assert_eq!(cubes, vec![Cube { a: 0.0, side: 1.0 }, Cube { a: 0.0, side: 0.5 }, Cube { a: 0.5, side: 0.5 }]);
        for l in 1..8 {
            let g = DyadicGrid::standard(unit(l)).unwrap();
            assert_eq!(g.cubes().len(), (1usize << (l + 1)) - 1);
        }
    }

    #[test]
    fn shifted_grids_translate() {
        let lat = Lattice::with_depth(0.0, 4.0, 8).unwrap();
        let grids = shifted_grids(lat, 3).unwrap();
        assert_eq!(grids.len(), 3);
        let h = lat.h();
        for g in &grids {
            assert!((g.shift / h - (g.shift / h).round()).abs() < 1e-12);
            for q in g.cubes() {
                assert!(q.is_within(&lat.domain()));
            }
        }
        assert!(grids[1].shift > 0.0 && grids[2].shift > grids[1].shift);
        assert!(shifted_grids(lat, 2).is_err());
    }

    #[test]
    fn symmetric_domain_grid() {
        let lat = Lattice::with_depth(-4.0, 4.0, 10).unwrap();
        let g = DyadicGrid::standard(lat).unwrap();
        let top = g.maximal_cubes();
        assert_eq!(top, vec![Cube { a: -4.0, side: 4.0 }, Cube { a: 0.0, side: 4.0 }]);
        assert_eq!(g.containing(0.3).len(), 10);
    }

    #[test]
    fn weights_reject_zeros() {
        let lat = unit(4);
        assert!(Weight::new(Generator::Indicator(0.0, 0.5).sample(lat)).is_err());
        let w = Weight::new(Generator::PowerWeight(0.5).sample(lat)).unwrap();
        let s = w.sigma(2.0).unwrap();
        assert!((s.values()[0] * w.values()[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn generator_parsing() {
        assert_eq!(Generator::parse("poly(1, 0, 1)").unwrap().eval(2.0), 5.0);
        assert_eq!(Generator::parse("monomial(2)").unwrap().eval(3.0), 9.0);
        assert!((Generator::parse("log_symbol()").unwrap().eval(0.5) - 2f64.ln()).abs() < 1e-15);
        assert!(Generator::parse("bogus(1)").is_err());
        assert!(Generator::parse("constant()").is_err());
    }

    #[test]
    fn csv_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.csv");
        let f = Generator::Sin(3.0).sample(Lattice::with_depth(-1.0, 1.0, 5).unwrap());
        f.save_csv(&path).unwrap();
        let g = SampledFunction::load_csv(&path).unwrap();
        assert_eq!(g.lattice.n, 32);
        assert!((g.lattice.x0 + 1.0).abs() < 1e-12);
        for (a, b) in f.values.iter().zip(&g.values) {
            assert!((a - b).abs() < 1e-15);
        }
        let src = FunctionSource::Csv { csv: "f.csv".into() };
        assert!(src.resolve(f.lattice, Some(dir.path())).is_ok());
        assert!(src.resolve(Lattice::with_depth(-1.0, 1.0, 6).unwrap(), Some(dir.path())).is_err());
    }
}
