//! Scenario execution and refinement sweeps.

use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::report::{now_stamp, sha256_hex, Check, Provenance, VerdictReport};
use super::scenario::{cube_of, OperatorHandle, Resolved, Scenario, SparseSpec, SCHEMA_VERSION};
use crate::bumps::{
    bump_constant_k, necessity_constants, one_weight_chain_check, reverse_holder_exponent, separated_log_bump,
    sparse_necessity_check, unbumped_direct, BumpReport, Gauges,
};
use crate::error::{Error, Result};
use crate::grid::{Cube, SampledFunction};
use crate::numeric::conjugate_exponent;
use crate::operators::{
    build_battery, necessity_identity, negative_kernel_count, norm_lower_bound, Commutator, CommutatorForm, Hilbert,
    Identity, LinearOperator, SparseOperator,
};
use crate::oscillation::{bmo_seminorm, root_bmo_check};
use crate::sparse::{build_sparse_stopping, duality_residual, pointwise_bound_check, verify_or_build_exceptional, SparseFamily};
use crate::values;
use crate::young::{associate_bp_membership, default_large_t_grid, log_bump_asymptotics_check, YoungFunction};

fn build_families(s: &Scenario, r: &Resolved, base: Option<&Path>) -> Result<Vec<SparseFamily>> {
    let grid = r.grids[0];
    let default = [SparseSpec::Stopping { function: None, ratio: 4.0 }];
    let specs: &[SparseSpec] = if s.sparse.is_empty() { &default } else { &s.sparse };
    specs
        .iter()
        .map(|spec| match spec {
            SparseSpec::Stopping { function, ratio } => {
                let f = match function {
                    None => r.sigma.as_function().clone(),
                    Some(src) => src.resolve(r.lattice, base)?.map(f64::abs),
                };
                build_sparse_stopping(&f, &grid, *ratio)
            }
            SparseSpec::Cubes { cubes, delta } => {
                let cubes: Vec<Cube> = cubes.iter().map(|c| cube_of(*c)).collect::<Result<_>>()?;
                verify_or_build_exceptional(&grid, &cubes, *delta)
            }
            SparseSpec::File { path } => {
                let p = match base {
                    Some(dir) if Path::new(path).is_relative() => dir.join(path),
                    _ => Path::new(path).to_path_buf(),
                };
                let fam: SparseFamily = serde_json::from_str(&std::fs::read_to_string(p)?)?;
                fam.grid.lattice.check_same(&r.lattice)?;
                fam.reverify()
            }
        })
        .collect()
}

fn random_signed(lat: crate::grid::Lattice, rng: &mut ChaCha8Rng) -> SampledFunction {
    SampledFunction { lattice: lat, values: (0..lat.n).map(|_| rng.gen_range(-1.0..1.0)).collect() }
}

fn gauge_bp_info(g: &Gauges, p: f64) -> Check {
    let pp = conjugate_exponent(p);
    let show = |x: Option<bool>| match x {
        Some(true) => "yes",
        Some(false) => "no",
        None => "unknown",
    };
    Check::info(
        "bp_heuristics",
        values! {
            "A_bar_in_B_pprime" => show(associate_bp_membership(&g.a, pp)),
            "B_bar_in_B_p" => show(associate_bp_membership(&g.b, p)),
            "C_bar_in_B_pprime" => show(associate_bp_membership(&g.c, pp)),
            "D_bar_in_B_p" => show(associate_bp_membership(&g.d, p)),
        },
    )
}

fn asymptotic_info(g: &Gauges) -> Result<Option<Check>> {
    let grid = default_large_t_grid();
    let mut vals = serde_json::Map::new();
    for (name, phi) in [("A", &g.a), ("B", &g.b), ("C", &g.c), ("D", &g.d)] {
        if matches!(phi, YoungFunction::LogBump { .. } | YoungFunction::LogLogBump { .. }) {
            let rep = log_bump_asymptotics_check(phi, &grid)?;
            vals.insert(
                name.into(),
                serde_json::json!({
                    "inverse_range": [rep.inverse_range.0, rep.inverse_range.1],
                    "associate_range": [rep.associate_range.0, rep.associate_range.1],
                    "within_window": rep.within_window,
                }),
            );
        }
    }
    Ok((!vals.is_empty()).then(|| Check::info("asymptotic_windows", vals)))
}

/// Runs every hard and informational check of a scenario.
pub fn run_scenario(s: &Scenario, base: Option<&Path>) -> Result<VerdictReport> {
    let r = s.resolve(base)?;
    let (p, m) = (s.p, s.m);
    let grids = &r.grids;
    let mut checks = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);

    // Bump constants.
    let (k, separated) = match s.explicit_gauges()? {
        Some(g) => (Some(bump_constant_k(&g, &r.b, m, &r.u, &r.v, p, grids)?), None),
        None => {
            let (a, d) = match &s.gauges {
                super::scenario::GaugeSelection::Preset { a, d, .. } => (a.clone(), d.clone()),
                _ => (None, None),
            };
            let preset = r.separated.as_ref().expect("preset gauges resolve to a preset");
            let free = match (a, d) {
                (None, None) => None,
                (a, d) => {
                    let (da, dd) = preset.free_defaults(p)?;
                    Some((a.unwrap_or(da), d.unwrap_or(dd)))
                }
            };
            (None, Some(separated_log_bump(preset, free, Some(&r.b), &r.u, &r.v, p, grids)?))
        }
    };

    // Power-gauge K against the directly computed unbumped expression.
    let unb = bump_constant_k(&Gauges::unbumped(p)?, &r.b, m, &r.u, &r.v, p, grids)?;
    let (d1, d2) = unbumped_direct(&r.b, m, &r.u, &r.v, p, grids)?;
    let direct = d1.value + d2.value;
    let rel = (unb.k - direct).abs() / direct.abs().max(1e-300);
    let rel = if unb.k == direct { 0.0 } else { rel };
    checks.push(Check::hard(
        "unbumped_equivalence",
        rel <= s.tolerances.unbumped,
        values! { "k_power_gauges" => unb.k, "direct" => direct, "relative_residual" => rel, "tolerance" => s.tolerances.unbumped },
    ));

    // Sparse families and their hard checks.
    let families = build_families(s, &r, base)?;
    let mut dual_max = 0.0_f64;
    let mut pw_viol = 0usize;
    let mut pw_total = 0usize;
    for fam in &families {
        for _ in 0..s.random_checks {
            let f = random_signed(r.lattice, &mut rng);
            let g = random_signed(r.lattice, &mut rng);
            dual_max = dual_max.max(duality_residual(fam, &r.b, m, &f, &g)?);
        }
        if !fam.is_empty() {
            for _ in 0..s.random_checks {
                let q = fam.cubes[rng.gen_range(0..fam.len())].cube;
                let range = r.lattice.index_range(&q)?;
                let x = r.lattice.midpoint(rng.gen_range(range));
                let f = random_signed(r.lattice, &mut rng).map(f64::abs);
                pw_total += 1;
                if !pointwise_bound_check(&r.b, m, &q, &f, x)?.holds {
                    pw_viol += 1;
                }
            }
        }
    }
    checks.push(Check::hard(
        "sparse_duality",
        dual_max <= s.tolerances.sparse_duality,
        values! { "families" => families.len(), "instances" => families.len() * s.random_checks, "max_residual" => dual_max, "tolerance" => s.tolerances.sparse_duality },
    ));
    checks.push(Check::hard(
        "pointwise_sparse_bound",
        pw_viol == 0,
        values! { "instances" => pw_total, "violations" => pw_viol },
    ));
    for adjoint in [false, true] {
        let mut worst = 0.0_f64;
        let mut rows = 0usize;
        let mut skipped = 0usize;
        let mut sup = 0.0_f64;
        for fam in &families {
            let rep = sparse_necessity_check(fam, &r.b, m, &r.u, &r.v, p, adjoint)?;
            worst = worst.max(rep.max_residual);
            rows += rep.rows.len();
            skipped += rep.skipped.len();
            sup = sup.max(rep.sup_bound.map_or(0.0, |w| w.value));
        }
        let name = if adjoint { "sparse_necessity_adjoint" } else { "sparse_necessity" };
        checks.push(Check::hard(
            name,
            worst <= s.tolerances.sparse_necessity,
            values! { "cubes" => rows, "skipped" => skipped, "max_residual" => worst, "sup_bound" => sup, "tolerance" => s.tolerances.sparse_necessity },
        ));
    }
    checks.push(Check::info(
        "sparse_families",
        values! {
            "sizes" => families.iter().map(|f| f.len()).collect::<Vec<_>>(),
            "min_ratios" => families.iter().map(|f| f.min_ratio()).collect::<Vec<_>>(),
            "deltas" => families.iter().map(|f| f.delta).collect::<Vec<_>>(),
        },
    ));

    // Necessity decomposition on the maximal cubes.
    let maximal = grids[0].maximal_cubes();
    if m == 1 || m % 2 == 0 {
        let mut worst = 0.0_f64;
        let mut jensen = true;
        let mut rows = Vec::new();
        for i in &maximal {
            let rep = necessity_identity(&r.b, i, p, m, &r.u)?;
            worst = worst.max(rep.residual);
            jensen &= rep.jensen_holds;
            rows.push(serde_json::json!({"cube": i.to_string(), "lhs": rep.lhs, "middle": rep.middle, "t1": rep.t1, "t2": rep.t2, "residual": rep.residual}));
        }
        let mut vals = values! { "max_residual" => worst, "jensen_holds" => jensen, "tolerance" => s.tolerances.necessity_identity, "cubes" => rows };
        if m % 2 == 0 {
            vals.insert("negative_kernel_pairs".into(), serde_json::json!(negative_kernel_count(&r.b, m)));
        }
        checks.push(Check::hard("necessity_identity", worst <= s.tolerances.necessity_identity && jensen, vals));
    } else {
        checks.push(Check::info(
            "necessity_identity",
            values! { "skipped" => format!("order m = {m} is odd and greater than 1; the decomposition argument does not apply") },
        ));
    }

    // Necessity constants and the operator norm lower bound.
    let necessity = necessity_constants(&r.b, m, &r.u, &r.v, p, grids)?;
    let mut battery_cubes = maximal.clone();
    for q in &maximal {
        battery_cubes.extend(q.children().iter().filter(|c| r.lattice.index_range(c).is_ok()));
    }
    let battery = build_battery(&grids[0], &r.b, &battery_cubes, p, m, &s.battery_spec())?;
    let norm = {
        let op: Box<dyn LinearOperator + '_> = match r.operator {
            OperatorHandle::Identity => Box::new(Identity),
            OperatorHandle::Hilbert => Box::new(Hilbert),
            OperatorHandle::Commutator(mm) => Box::new(Commutator { b: &r.b, m: mm, form: CommutatorForm::Kernel }),
            OperatorHandle::Sparse { m: mm, family } => {
                Box::new(SparseOperator { family: &families[family], b: &r.b, m: mm, adjoint: false })
            }
            OperatorHandle::SparseAdjoint { m: mm, family } => {
                Box::new(SparseOperator { family: &families[family], b: &r.b, m: mm, adjoint: true })
            }
        };
        norm_lower_bound(op.as_ref(), &r.u, &r.v, p, &battery).ok()
    };
    let k_value = match (&k, &separated) {
        (Some(k), _) => Some(k.k),
        (None, Some(sep)) => sep.osc_factor.map(|o| o * sep.bump.k),
        _ => None,
    };
    if let Some(est) = &norm {
        let ratio = k_value.map(|kv| if kv > 0.0 { est.lower_bound / kv } else { f64::INFINITY });
        checks.push(Check::info(
            "norm_vs_k",
            values! {
                "operator" => est.operator.clone(),
                "lower_bound" => est.lower_bound,
                "witness" => est.witness.clone(),
                "trials" => est.trials,
                "k" => k_value,
                "ratio" => ratio.filter(|x| x.is_finite()),
            },
        ));
        if matches!(r.operator, OperatorHandle::Commutator(_)) {
            checks.push(Check::info(
                "necessity_vs_norm",
                values! {
                    "necessity_first" => necessity.first.value,
                    "necessity_second" => necessity.second.value,
                    "lower_bound" => est.lower_bound,
                },
            ));
        }
    }
    if let Some(sep) = &separated {
        checks.push(Check::info(
            "separated_preset",
            values! {
                "preset" => sep.preset.label(),
                "k_separated" => sep.bump.k,
                "osc_factor" => sep.osc_factor,
                "warnings" => sep.warnings.clone(),
            },
        ));
    }
    let gauges_for_info = match (&k, &separated) {
        (Some(k), _) => Some(gauges_of(k)),
        (None, Some(sep)) => Some(gauges_of(&sep.bump)),
        _ => None,
    };
    if let Some(g) = gauges_for_info {
        checks.push(gauge_bp_info(&g, p));
        if let Some(c) = asymptotic_info(&g)? {
            checks.push(c);
        }
    }

    // Extras.
    for &a in &s.extras.root_bmo {
        let rep = root_bmo_check(&r.b, a, &grids[0])?;
        checks.push(Check::info(
            &format!("root_bmo_a{a}"),
            values! { "ratio" => rep.ratio, "osc_exp" => rep.osc_exp, "bmo_of_power" => rep.bmo_of_power, "chain_max" => rep.chain_max, "chain_holds" => rep.chain_holds },
        ));
    }
    if s.extras.one_weight {
        let chain = one_weight_chain_check(&r.u, p, grids)?;
        let bmo = bmo_seminorm(&r.b, grids)?;
        let mut vals = values! {
            "ap" => chain.ap.value,
            "chain_holds" => chain.holds,
            "max_middle_ratio" => chain.max_middle_ratio,
            "bmo" => bmo.seminorm,
            "necessity_first" => necessity.first.value,
            "necessity_second" => necessity.second.value,
        };
        if let Some(cap) = s.extras.reverse_holder_cap {
            let rh = reverse_holder_exponent(&r.u, grids, cap)?;
            vals.insert("reverse_holder_r".into(), serde_json::json!(rh.r));
            vals.insert("reverse_holder_cap".into(), serde_json::json!(cap));
        }
        checks.push(Check::info("one_weight", vals));
    }

    let provenance = Provenance {
        scenario_sha256: sha256_hex(serde_json::to_string(s)?.as_bytes()),
        n: r.lattice.n,
        depth: s.grid.depth,
        shifts: s.grid.shifts,
        seed: s.seed,
        toolkit_version: env!("CARGO_PKG_VERSION").into(),
    };
    VerdictReport {
        schema_version: SCHEMA_VERSION,
        scenario: s.name.clone(),
        k,
        separated,
        necessity,
        norm,
        checks,
        passed: false,
        provenance,
        timestamp: now_stamp(),
        fingerprint: String::new(),
    }
    .seal()
}

fn gauges_of(k: &BumpReport) -> Gauges {
    Gauges { a: k.config.a.clone(), b: k.config.b.clone(), c: k.config.c.clone(), d: k.config.d.clone() }
}

/// One depth of a refinement sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RefinementRow {
    pub depth: u32,
    pub n: usize,
    /// `K` (full or separated).
    pub k: f64,
    pub necessity_first: f64,
    pub necessity_second: f64,
    pub norm_lower_bound: Option<f64>,
    pub hard_checks_pass: bool,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RefinementTable {
    pub scenario: String,
    pub rows: Vec<RefinementRow>,
    pub k_nondecreasing: bool,
    /// Relative change of `K` between the last two depths.
    pub k_last_change: Option<f64>,
}

impl RefinementTable {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(row)?;
        }
        let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
        Ok(String::from_utf8_lossy(&bytes).into_owned())
    }
}

/// Reruns a scenario at each depth.
pub fn refinement_sweep(s: &Scenario, depths: &[u32], base: Option<&Path>) -> Result<RefinementTable> {
    if depths.is_empty() {
        return Err(Error::Domain("no depths given".into()));
    }
    let mut rows = Vec::new();
    for &d in depths {
        let t = Instant::now();
        let rep = run_scenario(&s.with_depth(d), base)?;
        let k = match (&rep.k, &rep.separated) {
            (Some(k), _) => k.k,
            (None, Some(sep)) => sep.bump.k,
            _ => f64::NAN,
        };
        rows.push(RefinementRow {
            depth: d,
            n: rep.provenance.n,
            k,
            necessity_first: rep.necessity.first.value,
            necessity_second: rep.necessity.second.value,
            norm_lower_bound: rep.norm.as_ref().map(|e| e.lower_bound),
            hard_checks_pass: rep.passed,
            seconds: t.elapsed().as_secs_f64(),
        });
    }
    let k_nondecreasing = rows.windows(2).all(|w| w[1].k >= w[0].k * (1.0 - 1e-12));
    let k_last_change = (rows.len() >= 2).then(|| {
        let (a, b) = (rows[rows.len() - 2].k, rows[rows.len() - 1].k);
        (b - a).abs() / b.abs().max(1e-300)
    });
    Ok(RefinementTable { scenario: s.name.clone(), rows, k_nondecreasing, k_last_change })
}
