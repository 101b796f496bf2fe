//! Acceptance criteria, one line per criterion. Runs without the libtest harness so the
//! lines are always printed; exits nonzero if any criterion fails.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use oscbump::bumps::{bump_constant_k, sparse_necessity_check, unbumped_direct, Gauges};
use oscbump::grid::{shifted_grids, Cube, DyadicGrid, Generator, Lattice, SampledFunction, Weight};
use oscbump::harness::corollary_suite;
use oscbump::numeric::log_grid;
use oscbump::operators::{commutator_kernel_apply, commutator_recursive, hilbert_at, necessity_identity, negative_kernel_count};
use oscbump::orlicz::orlicz_average;
use oscbump::oscillation::root_bmo_check;
use oscbump::sparse::{duality_residual, pointwise_bound_check};
use oscbump::young::{bp_default_ladder, bp_tail, check_duality_sandwich, BpVerdict, YoungFunction};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn orlicz_vs_lp() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let lat = unit(10);
    let grid = DyadicGrid::standard(lat).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let f = random_steps(&mut rng, lat, 0..10, -3.0, 3.0);
        let q = random_cube(&mut rng, &grid);
        for p in [1.5, 2.0, 3.0] {
            let got = orlicz_average(&YoungFunction::power(p).unwrap(), &f, &q).unwrap().value;
            let xs = f.slice(&q).unwrap();
            let exact = (xs.iter().map(|x| x.abs().powf(p)).sum::<f64>() / xs.len() as f64).powf(1.0 / p);
            if exact > 0.0 {
                worst = worst.max((got - exact).abs() / exact);
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(worst <= 1e-8 && secs < 5.0, format!("max rel err {worst:.2e}, {secs:.2}s"))
}

fn duality_sandwich() -> Outcome {
    let grid = log_grid(1e-3, 1e3, 50);
    let gauges = [
        YoungFunction::power(2.0).unwrap(),
        YoungFunction::power(3.0).unwrap(),
        YoungFunction::log_bump(2.0, 1.0).unwrap(),
        YoungFunction::exp_minus_one(1.0).unwrap(),
    ];
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for g in &gauges {
        let r = check_duality_sandwich(g, &grid).map_err(|e| e.to_string())?;
        lo = lo.min(r.min_ratio);
        hi = hi.max(r.max_ratio);
    }
    let p2 = YoungFunction::power(2.0).unwrap();
    let assoc = grid
        .iter()
        .map(|&t| (p2.associate(t).unwrap() - t * t / 4.0).abs() / (t * t / 4.0))
        .fold(0.0, f64::max);
    ensure(
        lo >= 1.0 - 1e-6 && hi <= 2.0 + 1e-6 && assoc <= 1e-9,
        format!("ratio range [{lo:.9}, {hi:.9}], associate(t^2) rel err {assoc:.1e}"),
    )
}

fn bp_dichotomy() -> Outcome {
    let ladder = bp_default_ladder();
    let verdict = |g: YoungFunction, p: f64| bp_tail(&g, p, &ladder).unwrap();
    let mut bad = Vec::new();
    for p in [2.0, 3.0] {
        if verdict(YoungFunction::power(p - 0.5).unwrap(), p).verdict != BpVerdict::Converges {
            bad.push(format!("Power({})", p - 0.5));
        }
        if verdict(YoungFunction::log_bump(p, -2.0).unwrap(), p).verdict != BpVerdict::Converges {
            bad.push(format!("LogBump({p},-2)"));
        }
        if verdict(YoungFunction::power(p).unwrap(), p).verdict != BpVerdict::Diverges {
            bad.push(format!("Power({p})"));
        }
    }
    let limit = verdict(YoungFunction::power(1.5).unwrap(), 2.0).extrapolated_limit.unwrap_or(f64::NAN);
    if (limit - 2.0).abs() > 1e-6 || limit.is_nan() {
        bad.push(format!("Power(1.5) limit {limit}"));
    }
    ensure(bad.is_empty(), if bad.is_empty() { format!("Power(1.5)/p=2 limit {limit:.9}") } else { bad.join(", ") })
}

fn pointwise_bound() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut violations = 0;
    for _ in 0..1000 {
        let lat = unit(rng.gen_range(4..9));
        let grid = DyadicGrid::standard(lat).unwrap();
        let m = rng.gen_range(0..=4);
        let b = random_symbol(&mut rng, lat);
        let f = random_steps(&mut rng, lat, 0..8, 0.0, 2.0);
        let q = random_cube(&mut rng, &grid);
        let x = q.a + rng.gen_range(0.0..1.0) * q.side;
        if !pointwise_bound_check(&b, m, &q, &f, x).unwrap().holds {
            violations += 1;
        }
    }
    ensure(violations == 0, format!("{violations} violations in 1000 instances"))
}

fn sparse_duality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for _ in 0..500 {
        let lat = unit(rng.gen_range(5..10));
        let grid = DyadicGrid::standard(lat).unwrap();
        let s = random_family(&mut rng, &grid);
        let m = rng.gen_range(0..=4);
        let b = random_symbol(&mut rng, lat);
        let f = random_steps(&mut rng, lat, 0..9, -1.0, 1.0);
        let g = random_steps(&mut rng, lat, 0..9, -1.0, 1.0);
        worst = worst.max(duality_residual(&s, &b, m, &f, &g).unwrap());
    }
    ensure(worst <= 1e-10, format!("max residual {worst:.2e}"))
}

fn sparse_converse() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut worst, mut rows, mut all_hold): (f64, usize, bool) = (0.0, 0, true);
    for i in 0..200 {
        let lat = unit(rng.gen_range(5..9));
        let grid = DyadicGrid::standard(lat).unwrap();
        let s = random_family(&mut rng, &grid);
        let m = rng.gen_range(1..=3);
        let p = rng.gen_range(1.2..4.0);
        let b = random_symbol(&mut rng, lat);
        let (u, v) = (random_weight(&mut rng, lat), random_weight(&mut rng, lat));
        let r = sparse_necessity_check(&s, &b, m, &u, &v, p, i % 2 == 1).unwrap();
        worst = worst.max(r.max_residual);
        rows += r.rows.len();
        all_hold &= r.holds;
    }
    ensure(all_hold && worst <= 1e-8, format!("max residual {worst:.2e} over {rows} cubes"))
}

fn identity_reproduction() -> Outcome {
    let lat = unit(14);
    let i = Cube::new(0.0, 1.0).unwrap();
    let symbols = ["identity()", "monomial(2)", "smooth_bump(0.5,0.4)"];
    let weights = ["constant(1)", "poly(1,0,1)"];
    let mut worst: f64 = 0.0;
    for bs in symbols {
        let b = Generator::parse(bs).unwrap().sample(lat);
        for ws in weights {
            let u = Weight::new(Generator::parse(ws).unwrap().sample(lat)).unwrap();
            for p in [2.0, 3.0] {
                worst = worst.max(necessity_identity(&b, &i, p, 1, &u).unwrap().residual);
            }
        }
    }
    let wide = Lattice::with_depth(-1.0, 1.0, 14).unwrap();
    let h = hilbert_at(&SampledFunction::constant(wide, 1.0), &[2.0]).unwrap()[0];
    let err = (h - 3f64.ln()).abs();
    ensure(worst <= 1e-3 && err <= 1e-3, format!("max residual {worst:.2e}, |H1(2) - ln 3| = {err:.2e}"))
}

fn commutator_forms() -> Outcome {
    let lat = unit(13);
    let f = Generator::parse("smooth_bump(0.4,0.3)").unwrap().sample(lat);
    let mut worst: f64 = 0.0;
    let mut negatives = 0;
    for bs in ["identity()", "sin(6)"] {
        let b = Generator::parse(bs).unwrap().sample(lat);
        for m in 1..=3 {
            let k = commutator_kernel_apply(&b, m, &f).unwrap();
            let r = commutator_recursive(&b, m, &f).unwrap();
            let scale = r.max_abs().max(f64::MIN_POSITIVE);
            let diff = k.values.iter().zip(&r.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            worst = worst.max(diff / scale);
        }
        negatives += negative_kernel_count(&b, 2);
    }
    ensure(worst <= 5e-3 && negatives == 0, format!("max rel diff {worst:.2e}, negative m=2 kernel values {negatives}"))
}

fn root_bmo() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for a in [2.0, 3.0] {
        let ratios: Vec<f64> = (8..=12)
            .map(|d| {
                let lat = unit(d);
                let b = Generator::RootLogSymbol(a).sample(lat);
                root_bmo_check(&b, a, &DyadicGrid::standard(lat).unwrap()).unwrap().ratio
            })
            .collect();
        let steps: Vec<f64> = ratios.windows(2).map(|w| w[1] - w[0]).collect();
        let monotone = steps.iter().all(|s| *s >= 0.0) || steps.iter().all(|s| *s <= 0.0);
        let settling = steps.windows(2).all(|w| w[1].abs() <= w[0].abs());
        ok &= ratios.iter().all(|r| r.is_finite() && *r <= 10.0) && monotone && settling;
        lines.push(format!("a={a}: {:.4}..{:.4}", ratios[0], ratios[4]));
    }
    ensure(ok, lines.join(", "))
}

fn unbumped_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let lat = unit(rng.gen_range(5..9));
        let grids = shifted_grids(lat, [1, 3][rng.gen_range(0..2)]).unwrap();
        let m = rng.gen_range(0..=3);
        let p = rng.gen_range(1.2..4.0);
        let b = random_symbol(&mut rng, lat);
        let (u, v) = (random_weight(&mut rng, lat), random_weight(&mut rng, lat));
        let k = bump_constant_k(&Gauges::unbumped(p).unwrap(), &b, m, &u, &v, p, &grids).unwrap().k;
        let (first, second) = unbumped_direct(&b, m, &u, &v, p, &grids).unwrap();
        let direct = first.value + second.value;
        worst = worst.max((k - direct).abs() / direct.abs().max(1e-300));
    }
    ensure(worst <= 1e-8, format!("max rel diff {worst:.2e}"))
}

fn determinism() -> Outcome {
    let start = Instant::now();
    let a = corollary_suite(7).map_err(|e| e.to_string())?;
    let b = corollary_suite(7).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let same = a.fingerprint == b.fingerprint && a.compute_fingerprint().unwrap() == a.fingerprint;
    ensure(
        same && a.all_hard_pass && secs < 600.0,
        format!("fingerprint {}, hard checks pass {}, {:.1}s per run", &a.fingerprint[..16], a.all_hard_pass, secs / 2.0),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("orlicz average vs closed-form L^p average", orlicz_vs_lp),
        ("conjugate duality sandwich", duality_sandwich),
        ("B_p dichotomy", bp_dichotomy),
        ("pointwise sparse bound", pointwise_bound),
        ("sparse adjoint duality", sparse_duality),
        ("sparse converse inequality", sparse_converse),
        ("necessity decomposition and H1 closed form", identity_reproduction),
        ("commutator kernel vs recursive form", commutator_forms),
        ("root BMO at desk scale", root_bmo),
        ("unbumped equivalence", unbumped_equivalence),
        ("suite determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} [{secs:.2}s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail} [{secs:.2}s]", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
