//! Verification suites: each one exercises a single structural result at desk
//! scale and reports one pass/fail line per check. The CLI exposes them under
//! `verify --suite <name>`; the acceptance tests drive the same code.

use rand::Rng;
use rand_chacha::ChaCha20Rng;

use crate::convexity::{
    equalize_pair, halfbound_check, modulus_estimate, modulus_estimate_report, prescribe_gap,
    rotate_pair, ModulusQuery, ModulusVariant, SearchConfig,
};
use crate::dual::{
    dual_norm, eval_functional, norm_attaining, sup_formula_check, RandomFunctional,
};
use crate::error::{Error, Result};
use crate::expr::random_expr;
use crate::ivt::{locality_audit, solve_ivt, LocalFunction};
use crate::json::JsonValue;
use crate::lp::uniform_convexity_audit;
use crate::measure::{
    kyfan_distance, lattice_extrema, leq_on, strata_pos, ExtremaMode, FiniteProbSpace,
};
use crate::module::{module_distance, module_scale, FiberNorm, ModuleElement, RnModuleSpec};
use crate::rank::grand_stratum;
use crate::search::{gaussian_vec, seeded_rng};

#[derive(Clone, Debug)]
pub struct CheckLine {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug)]
pub struct SuiteReport {
    pub suite: String,
    pub header: String,
    pub checks: Vec<CheckLine>,
    pub passed: bool,
    /// Suite-specific structured data, already rendered as a JSON value.
    pub reports_json: Option<String>,
}

impl SuiteReport {
    fn new(suite: &str, header: &str) -> Self {
        SuiteReport {
            suite: suite.to_string(),
            header: header.to_string(),
            checks: Vec::new(),
            passed: true,
            reports_json: None,
        }
    }

    fn push(&mut self, name: impl Into<String>, pass: bool, detail: impl Into<String>) {
        self.passed &= pass;
        self.checks.push(CheckLine {
            name: name.into(),
            pass,
            detail: detail.into(),
        });
    }
}

pub const SUITES: &[&str] = &[
    "thm12", "lem31", "lem32", "lem33", "prop31", "prop32", "cor21", "hb", "axioms",
];

pub fn run_suite(name: &str, seed: u64) -> Result<SuiteReport> {
    match name {
        "thm12" => variant_agreement_suite(seed),
        "lem31" => rotation_suite(200, seed),
        "lem32" => gap_prescription_suite(200, seed),
        "lem33" => halfbound_suite(100, seed),
        "prop31" => equalization_suite(200, seed),
        "prop32" => convexity_constant_suite(seed),
        "cor21" => degenerate_strata_suite(10, seed),
        "hb" => norming_functional_suite(seed),
        "axioms" => axioms_suite(seed),
        other => Err(Error::precondition(format!(
            "unknown suite '{other}'; known: {}",
            SUITES.join(", ")
        ))),
    }
}

// ---------------------------------------------------------------------------
// Fixtures and generators
// ---------------------------------------------------------------------------

/// Four rank->=2 fibers covering the geometry the estimators must agree on.
pub fn standard_rank2_spec() -> RnModuleSpec {
    RnModuleSpec::uniform(&[
        ("a", 2, FiberNorm::Euclidean),
        ("b", 3, FiberNorm::Euclidean),
        ("c", 2, FiberNorm::PNorm(1.5)),
        ("d", 2, FiberNorm::PNorm(3.0)),
    ])
    .unwrap()
}

/// A support that straddles the grand stratum: one rank-2 fiber, two scalar
/// fibers, and one empty fiber.
pub fn straddling_spec() -> RnModuleSpec {
    let space = FiniteProbSpace::new(vec![
        ("a".into(), 0.3),
        ("b".into(), 0.3),
        ("c".into(), 0.2),
        ("z".into(), 0.2),
    ])
    .unwrap();
    RnModuleSpec::new(
        space,
        vec![
            (2, FiberNorm::Euclidean),
            (1, FiberNorm::Euclidean),
            (1, FiberNorm::PNorm(3.0)),
            (0, FiberNorm::Euclidean),
        ],
    )
    .unwrap()
}

fn random_weights(rng: &mut ChaCha20Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..1.0)).collect();
    let sum: f64 = raw.iter().sum();
    let mut w: Vec<f64> = raw.iter().map(|v| v / sum).collect();
    let s: f64 = w.iter().sum();
    w[0] += 1.0 - s;
    w
}

fn random_norm_kind(rng: &mut ChaCha20Rng) -> FiberNorm {
    match rng.gen_range(0..4) {
        0 => FiberNorm::Euclidean,
        1 => FiberNorm::PNorm(1.5),
        2 => FiberNorm::PNorm(2.5),
        _ => FiberNorm::PNorm(3.0),
    }
}

/// Random spec whose fibers all carry rank >= 2.
pub fn random_rank2_spec(rng: &mut ChaCha20Rng) -> RnModuleSpec {
    let n = rng.gen_range(2..=5);
    let weights = random_weights(rng, n);
    let atoms: Vec<(String, f64)> = weights
        .into_iter()
        .enumerate()
        .map(|(i, w)| (format!("w{i}"), w))
        .collect();
    let fibers: Vec<(usize, FiberNorm)> = (0..n)
        .map(|_| (rng.gen_range(2..=3), random_norm_kind(rng)))
        .collect();
    RnModuleSpec::new(FiniteProbSpace::new(atoms).unwrap(), fibers).unwrap()
}

fn random_unit_fiber(rng: &mut ChaCha20Rng, norm: FiberNorm, dim: usize) -> Vec<f64> {
    loop {
        let v = gaussian_vec(rng, dim);
        let n = norm.eval(&v);
        if n > 1e-8 {
            return v.iter().map(|&x| x / n).collect();
        }
    }
}

fn random_mask(rng: &mut ChaCha20Rng, n: usize) -> Vec<bool> {
    loop {
        let mask: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
        if mask.iter().any(|&b| b) {
            return mask;
        }
    }
}

// ---------------------------------------------------------------------------
// axioms
// ---------------------------------------------------------------------------

fn axioms_suite(seed: u64) -> Result<SuiteReport> {
    let mut report = SuiteReport::new(
        "axioms",
        "random norm axioms, lattice laws, indicator algebra, metric laws",
    );
    let spec = standard_rank2_spec();
    let space = spec.space().clone();
    let mut rng = seeded_rng(seed, 0);

    // Norm axioms on random elements and scalars.
    let mut homogeneity = 0.0f64;
    let mut triangle = 0.0f64;
    for _ in 0..1000 {
        let mk = |rng: &mut ChaCha20Rng| {
            let fibers: Vec<Vec<f64>> = (0..space.len())
                .map(|i| gaussian_vec(rng, spec.dim(i)))
                .collect();
            spec.element(fibers).unwrap()
        };
        let x = mk(&mut rng);
        let y = mk(&mut rng);
        let xi = space.l0((0..space.len()).map(|_| rng.gen_range(-3.0..3.0)).collect())?;
        let lhs = module_scale(&xi, &x).random_norm();
        let rhs = xi.abs() * x.random_norm();
        homogeneity = homogeneity.max((lhs - rhs).max_abs());
        let violation = x
            .add(&y)
            .random_norm()
            .values()
            .iter()
            .zip((x.random_norm() + y.random_norm()).values())
            .map(|(&a, &b)| (a - b).max(0.0))
            .fold(0.0f64, f64::max);
        triangle = triangle.max(violation);
    }
    report.push(
        "homogeneity |xi x| = |xi| |x|",
        homogeneity <= 1e-12,
        format!("max deviation {homogeneity:.3e}"),
    );
    report.push(
        "triangle |x + y| <= |x| + |y|",
        triangle <= 1e-12,
        format!("max violation {triangle:.3e}"),
    );

    // Definiteness: zero norm only at the zero element.
    let zero_ok = spec.zero().random_norm().values().iter().all(|&v| v == 0.0);
    report.push("definiteness at the zero element", zero_ok, "exact");

    // Lattice laws and the sup + inf identity.
    let mut lattice_ok = true;
    for _ in 0..500 {
        let a = space.l0((0..space.len()).map(|_| rng.gen_range(-2.0..2.0)).collect())?;
        let b = space.l0((0..space.len()).map(|_| rng.gen_range(-2.0..2.0)).collect())?;
        let c = space.l0((0..space.len()).map(|_| rng.gen_range(-2.0..2.0)).collect())?;
        let sup_ab = lattice_extrema(&[a.clone(), b.clone()], ExtremaMode::Sup)?;
        let inf_ab = lattice_extrema(&[a.clone(), b.clone()], ExtremaMode::Inf)?;
        lattice_ok &= (&sup_ab + &inf_ab) == (&a + &b);
        let assoc1 = lattice_extrema(&[sup_ab.clone(), c.clone()], ExtremaMode::Sup)?;
        let assoc2 = lattice_extrema(&[a.clone(), b.clone(), c.clone()], ExtremaMode::Sup)?;
        lattice_ok &= assoc1 == assoc2;
        lattice_ok &= lattice_extrema(std::slice::from_ref(&a), ExtremaMode::Inf)? == a;
        lattice_ok &= leq_on(&inf_ab, &sup_ab, &space.full_event());
    }
    report.push(
        "lattice laws",
        lattice_ok,
        "associativity, idempotence, sup+inf identity",
    );

    // Indicator algebra.
    let mut indicator_ok = true;
    for _ in 0..200 {
        let e = space.event_from_mask(random_mask(&mut rng, space.len()))?;
        let f = space.event_from_mask(random_mask(&mut rng, space.len()))?;
        let prod = space.indicator(&e) * space.indicator(&f);
        indicator_ok &= prod == space.indicator(&e.intersect(&f));
        let sup = lattice_extrema(
            &[space.indicator(&e), space.indicator(&f)],
            ExtremaMode::Sup,
        )?;
        indicator_ok &= sup == space.indicator(&e.union(&f));
    }
    report.push("indicator algebra", indicator_ok, "products and unions");

    // Metric laws.
    let mut metric_ok = true;
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let a = space.l0((0..space.len()).map(|_| rng.gen_range(-4.0..4.0)).collect())?;
        let b = space.l0((0..space.len()).map(|_| rng.gen_range(-4.0..4.0)).collect())?;
        let c = space.l0((0..space.len()).map(|_| rng.gen_range(-4.0..4.0)).collect())?;
        let dab = kyfan_distance(&a, &b);
        let dbc = kyfan_distance(&b, &c);
        let dac = kyfan_distance(&a, &c);
        let excess = dac - (dab + dbc);
        worst = worst.max(excess);
        metric_ok &= excess <= 1e-12;
        metric_ok &= (kyfan_distance(&a, &b) - kyfan_distance(&b, &a)).abs() <= 1e-15;
        metric_ok &= kyfan_distance(&a, &a) == 0.0;
    }
    report.push(
        "metric triangle inequality",
        metric_ok,
        format!("worst excess {worst:.3e}"),
    );

    // Convergence-in-probability witness.
    let xi = space.l0((0..space.len()).map(|_| rng.gen_range(-2.0..2.0)).collect())?;
    let eta = space.l0((0..space.len()).map(|_| rng.gen_range(-2.0..2.0)).collect())?;
    let mut conv_ok = true;
    let mut last = f64::INFINITY;
    for n in 1..=64u32 {
        let d = kyfan_distance(&(&xi + &eta.scale(1.0 / n as f64)), &xi);
        conv_ok &= d <= last + 1e-15;
        last = d;
    }
    conv_ok &= last <= 0.1;
    report.push("convergence witness", conv_ok, "monotone decay to 0");

    // Joint continuity of module multiplication on deterministic sequences.
    let x = spec.unit_section()?;
    let y = spec.element(
        (0..space.len())
            .map(|i| gaussian_vec(&mut rng, spec.dim(i)))
            .collect(),
    )?;
    let xi0 = space.constant(1.5);
    let eta0 = space.l0((0..space.len()).map(|_| rng.gen_range(-1.0..1.0)).collect())?;
    let mut joint_ok = true;
    let mut lastd = f64::INFINITY;
    for n in [1u32, 2, 4, 8, 16, 32, 64] {
        let t = 1.0 / n as f64;
        let xin = &xi0 + &eta0.scale(t);
        let xn = x.add(&y.scaled(&space.constant(t)));
        let d = module_distance(&module_scale(&xin, &xn), &module_scale(&xi0, &x));
        joint_ok &= d <= lastd + 1e-15;
        lastd = d;
    }
    joint_ok &= lastd <= 0.1;
    report.push(
        "joint continuity of module multiplication",
        joint_ok,
        "deterministic sequences",
    );

    // Glue over a partition reproduces the element.
    let mut glue_ok = true;
    for _ in 0..50 {
        let z = spec.element(
            (0..space.len())
                .map(|i| gaussian_vec(&mut rng, spec.dim(i)))
                .collect(),
        )?;
        let mask = random_mask(&mut rng, space.len());
        let e = space.event_from_mask(mask)?;
        let pieces = vec![
            (e.clone(), module_scale(&space.indicator(&e), &z)),
            (
                e.complement(),
                module_scale(&space.indicator(&e.complement()), &z),
            ),
        ];
        glue_ok &= spec.glue(&pieces)? == z;
    }
    report.push("glue over a partition is the identity", glue_ok, "exact");

    Ok(report)
}

// ---------------------------------------------------------------------------
// hb: norming functionals and sup formulas
// ---------------------------------------------------------------------------

fn norming_functional_suite(seed: u64) -> Result<SuiteReport> {
    let mut report = SuiteReport::new(
        "hb",
        "norming functionals: g(x) = \u{2016}x\u{2016}, \u{2016}g\u{2016}* = I_Ax; |f(x)| <= \u{2016}f\u{2016}*\u{2016}x\u{2016}; sup formulas attained",
    );
    let spec = RnModuleSpec::uniform(&[
        ("a", 2, FiberNorm::Euclidean),
        ("b", 3, FiberNorm::Euclidean),
        ("c", 2, FiberNorm::PNorm(1.5)),
        ("d", 3, FiberNorm::PNorm(3.0)),
        ("e", 2, FiberNorm::PNorm(1.0)),
    ])
    .unwrap();
    let space = spec.space().clone();
    let mut rng = seeded_rng(seed, 0);

    let mut attain_eval = 0.0f64;
    let mut attain_dual = 0.0f64;
    let mut homogeneity = 0.0f64;
    for _ in 0..300 {
        let fibers: Vec<Vec<f64>> = (0..space.len())
            .map(|i| {
                if rng.gen_range(0..5) == 0 {
                    vec![0.0; spec.dim(i)]
                } else {
                    gaussian_vec(&mut rng, spec.dim(i))
                }
            })
            .collect();
        let x = spec.element(fibers)?;
        let g = norm_attaining(&x);
        attain_eval = attain_eval.max((eval_functional(&g, &x) - x.random_norm()).max_abs());
        let indicator = space.indicator(&strata_pos(&x.random_norm()));
        attain_dual = attain_dual.max((dual_norm(&g) - indicator).max_abs());
        let c: f64 = rng.gen_range(0.1..5.0);
        let g2 = norm_attaining(&x.scaled(&space.constant(c)));
        for i in 0..space.len() {
            for (a, b) in g.coeff(i).iter().zip(g2.coeff(i)) {
                homogeneity = homogeneity.max((a - b).abs());
            }
        }
    }
    report.push(
        "norming functional attains the norm",
        attain_eval <= 1e-12,
        format!("max |g(x) - \u{2016}x\u{2016}| = {attain_eval:.3e}"),
    );
    report.push(
        "dual norm of the norming functional is the support indicator",
        attain_dual <= 1e-12,
        format!("max deviation {attain_dual:.3e}"),
    );
    report.push(
        "zero-homogeneity of the construction",
        homogeneity <= 1e-12,
        format!("max coefficient deviation {homogeneity:.3e}"),
    );

    let mut bound_excess = 0.0f64;
    for _ in 0..1000 {
        let x = spec.element(
            (0..space.len())
                .map(|i| gaussian_vec(&mut rng, spec.dim(i)))
                .collect(),
        )?;
        let f = RandomFunctional::new(
            spec.clone(),
            (0..space.len())
                .map(|i| gaussian_vec(&mut rng, spec.dim(i)))
                .collect(),
        )?;
        let lhs = eval_functional(&f, &x).abs();
        let rhs = dual_norm(&f) * x.random_norm();
        let excess = lhs
            .values()
            .iter()
            .zip(rhs.values())
            .map(|(&a, &b)| a - b)
            .fold(f64::NEG_INFINITY, f64::max);
        bound_excess = bound_excess.max(excess);
    }
    report.push(
        "bound |f(x)| <= \u{2016}f\u{2016}* \u{2016}x\u{2016}",
        bound_excess <= 1e-12,
        format!("max excess {bound_excess:.3e}"),
    );

    let mut sup_ok = true;
    for k in 0..5 {
        let f = RandomFunctional::new(
            spec.clone(),
            (0..space.len())
                .map(|i| gaussian_vec(&mut rng, spec.dim(i)))
                .collect(),
        )?;
        let r = sup_formula_check(&f, 300, seed.wrapping_add(k))?;
        sup_ok &= r.inequality_ok && r.attained && r.bidual_inequality_ok && r.bidual_attained;
    }
    report.push(
        "sup formulas attained with injected witnesses",
        sup_ok,
        "dual and bidual sides",
    );

    Ok(report)
}

// ---------------------------------------------------------------------------
// cor21: degenerate strata
// ---------------------------------------------------------------------------

fn degenerate_strata_suite(n_eps: usize, seed: u64) -> Result<SuiteReport> {
    let mut report = SuiteReport::new(
        "cor21",
        "degenerate strata: the modulus is identically 1 where the rank is < 2",
    );
    let spec = straddling_spec();
    let g = grand_stratum(&spec);
    let degenerate = spec.support().minus(&g);
    let mut rng = seeded_rng(seed, 0);
    let cfg = SearchConfig {
        grid_points: 64,
        random_restarts: 64,
        refine_iters: 8,
        seed,
    };
    let mut all_exact = true;
    let mut convention_flagged = true;
    for _ in 0..n_eps {
        let eps: f64 = rng.gen_range(f64::MIN_POSITIVE..=2.0).min(2.0);
        for variant in [ModulusVariant::GeqSphere, ModulusVariant::GeqBall] {
            let q = ModulusQuery {
                domain: degenerate.clone(),
                eps: spec.space().constant(eps),
                variant,
            };
            let est = modulus_estimate(&spec, &q, &cfg)?;
            for i in degenerate.indices() {
                all_exact &= est.get(i) == 1.0;
            }
        }
        for variant in [ModulusVariant::EqSphere, ModulusVariant::EqBall] {
            let q = ModulusQuery {
                domain: degenerate.clone(),
                eps: spec.space().constant(eps),
                variant,
            };
            let r = modulus_estimate_report(&spec, &q, &cfg)?;
            for i in degenerate.indices() {
                all_exact &= r.estimate.get(i) == 1.0;
            }
            if eps < 2.0 - 1e-12 {
                convention_flagged &= r.empty_feasible.len() == degenerate.count();
            }
        }
    }
    report.push(
        "rank-1 strata return exactly 1 under the >= variants",
        all_exact,
        format!("{n_eps} random eps values"),
    );
    report.push(
        "= variants flag the empty feasible set below eps = 2",
        convention_flagged,
        "lattice-top convention",
    );
    Ok(report)
}

// ---------------------------------------------------------------------------
// thm12: variant agreement
// ---------------------------------------------------------------------------

fn variant_agreement_suite(seed: u64) -> Result<SuiteReport> {
    let mut report = SuiteReport::new(
        "thm12",
        "variant agreement on rank >= 2 strata: sphere/ball and >=/= forms coincide",
    );
    let spec = standard_rank2_spec();
    let g = grand_stratum(&spec);
    let cfg = SearchConfig::default().with_seed(seed);
    for eps in [0.25, 0.5, 1.0, 1.5, 2.0] {
        let mut estimates = Vec::new();
        for variant in ModulusVariant::all() {
            let q = ModulusQuery {
                domain: g.clone(),
                eps: spec.space().constant(eps),
                variant,
            };
            estimates.push(modulus_estimate(&spec, &q, &cfg)?);
        }
        let mut spread = 0.0f64;
        for i in g.indices() {
            let vals: Vec<f64> = estimates.iter().map(|e| e.get(i)).collect();
            let hi = vals.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
            let lo = vals.iter().fold(f64::INFINITY, |m, &v| m.min(v));
            spread = spread.max(hi - lo);
        }
        report.push(
            format!("eps = {eps}"),
            spread <= 5e-3,
            format!("max atomwise spread {spread:.3e}"),
        );
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// lem31 / lem32 / prop31: constructions on random instances
// ---------------------------------------------------------------------------

struct PairInstance {
    spec: RnModuleSpec,
    x: ModuleElement,
    y: ModuleElement,
    on: crate::measure::EventSet,
}

fn rotation_instance(rng: &mut ChaCha20Rng, unit_y: bool) -> PairInstance {
    let spec = random_rank2_spec(rng);
    let space = spec.space().clone();
    let support_mask = random_mask(rng, space.len());
    let support = space.event_from_mask(support_mask).unwrap();
    let mut x = spec.zero();
    let mut y = spec.zero();
    for i in support.indices() {
        let norm = spec.norm(i);
        let dim = spec.dim(i);
        let xf = random_unit_fiber(rng, norm, dim);
        let scale = if unit_y || rng.gen_range(0..10) == 0 {
            1.0
        } else {
            rng.gen_range(0.05..=1.0)
        };
        let yf = loop {
            let raw = random_unit_fiber(rng, norm, dim);
            let cand: Vec<f64> = raw.iter().map(|&v| scale * v).collect();
            if crate::rank::fibers_independent(&xf, &cand) {
                break cand;
            }
        };
        x.set_fiber(i, xf).unwrap();
        y.set_fiber(i, yf).unwrap();
    }
    PairInstance {
        spec,
        x,
        y,
        on: support,
    }
}

fn rotation_suite(n: usize, seed: u64) -> Result<SuiteReport> {
    let mut report = SuiteReport::new(
        "lem31",
        "rotation: a unit pair with the prescribed difference u - v = I_E(x - y)",
    );
    let mut rng = seeded_rng(seed, 0);
    let mut worst = 0.0f64;
    let mut failures = 0usize;
    for _ in 0..n {
        let inst = rotation_instance(&mut rng, false);
        match rotate_pair(&inst.x, &inst.y, &inst.on) {
            Ok((u, v)) => {
                let nu = u.random_norm();
                let nv = v.random_norm();
                let ind = inst.spec.space().indicator(&inst.on);
                worst = worst.max((nu - ind.clone()).max_abs());
                worst = worst.max((nv - ind.clone()).max_abs());
                let diff_dev = u
                    .sub(&v)
                    .sub(&inst.x.sub(&inst.y).scaled(&ind))
                    .random_norm()
                    .max_abs();
                worst = worst.max(diff_dev);
            }
            Err(_) => failures += 1,
        }
    }
    report.push(
        format!("{n} random instances"),
        failures == 0 && worst <= 1e-9,
        format!("max identity deviation {worst:.3e}, {failures} failures"),
    );
    Ok(report)
}

fn gap_prescription_suite(n: usize, seed: u64) -> Result<SuiteReport> {
    let mut report = SuiteReport::new(
        "lem32",
        "gap prescription: every eps I_D is realized as the gap of a unit pair",
    );
    let mut rng = seeded_rng(seed, 0);
    let mut worst = 0.0f64;
    let mut failures = 0usize;
    for _ in 0..n {
        let inst = rotation_instance(&mut rng, true);
        let eps_values: Vec<f64> = (0..inst.spec.space().len())
            .map(|_| {
                if rng.gen_range(0..10) == 0 {
                    2.0
                } else {
                    rng.gen_range(0.05..=2.0)
                }
            })
            .collect();
        let eps = inst.spec.space().l0(eps_values)?;
        match prescribe_gap(&inst.x, &inst.y, &inst.on, &eps) {
            Ok(v) => {
                let ind = inst.spec.space().indicator(&inst.on);
                worst = worst.max((v.random_norm() - ind.clone()).max_abs());
                let gap = inst.x.sub(&v).random_norm();
                worst = worst.max(((gap - eps.clone()) * ind).max_abs());
            }
            Err(_) => failures += 1,
        }
    }
    report.push(
        format!("{n} random instances"),
        failures == 0 && worst <= 1e-9,
        format!("max identity deviation {worst:.3e}, {failures} failures"),
    );
    Ok(report)
}

fn equalization_instance(rng: &mut ChaCha20Rng) -> PairInstance {
    let spec = random_rank2_spec(rng);
    let space = spec.space().clone();
    let support = space
        .event_from_mask(random_mask(rng, space.len()))
        .unwrap();
    let mut x = spec.zero();
    let mut y = spec.zero();
    for i in support.indices() {
        let norm = spec.norm(i);
        let dim = spec.dim(i);
        let xf = random_unit_fiber(rng, norm, dim);
        let yf: Vec<f64> = match rng.gen_range(0..6) {
            // dependent, strictly inside the ball
            0 | 1 => {
                let gamma: f64 = rng.gen_range(0.05..0.95) * if rng.gen() { 1.0 } else { -1.0 };
                xf.iter().map(|&v| gamma * v).collect()
            }
            // dependent on the sphere
            2 => {
                let sign = if rng.gen() { 1.0 } else { -1.0 };
                xf.iter().map(|&v| sign * v).collect()
            }
            // independent on the sphere
            3 => loop {
                let cand = random_unit_fiber(rng, norm, dim);
                if crate::rank::fibers_independent(&xf, &cand) {
                    break cand;
                }
            },
            // independent inside the ball
            _ => loop {
                let scale: f64 = rng.gen_range(0.05..=0.98);
                let cand: Vec<f64> = random_unit_fiber(rng, norm, dim)
                    .iter()
                    .map(|&v| scale * v)
                    .collect();
                if crate::rank::fibers_independent(&xf, &cand) {
                    break cand;
                }
            },
        };
        x.set_fiber(i, xf).unwrap();
        y.set_fiber(i, yf).unwrap();
    }
    PairInstance {
        spec,
        x,
        y,
        on: support,
    }
}

fn equalization_suite(n: usize, seed: u64) -> Result<SuiteReport> {
    let mut report = SuiteReport::new(
        "prop31",
        "norm equalization: a unit pair with the same difference and a sum at least as long",
    );
    let mut rng = seeded_rng(seed, 0);
    let mut worst = 0.0f64;
    let mut worst_sum = 0.0f64;
    let mut failures = 0usize;
    for _ in 0..n {
        let inst = equalization_instance(&mut rng);
        match equalize_pair(&inst.x, &inst.y) {
            Ok((u, v)) => {
                let ind = inst.spec.space().indicator(&inst.on);
                worst = worst.max((u.random_norm() - ind.clone()).max_abs());
                worst = worst.max((v.random_norm() - ind.clone()).max_abs());
                let diff_dev = u
                    .sub(&v)
                    .sub(&inst.x.sub(&inst.y).scaled(&ind))
                    .random_norm()
                    .max_abs();
                worst = worst.max(diff_dev);
                let sum_uv = u.add(&v).random_norm();
                let sum_xy = inst.x.add(&inst.y).random_norm();
                for i in inst.on.indices() {
                    worst_sum = worst_sum.max(sum_xy.get(i) - sum_uv.get(i));
                }
            }
            Err(_) => failures += 1,
        }
    }
    report.push(
        format!("{n} random instances: unit norms and difference identity"),
        failures == 0 && worst <= 1e-9,
        format!("max identity deviation {worst:.3e}, {failures} failures"),
    );
    report.push(
        "sum inequality \u{2016}u+v\u{2016} >= \u{2016}x+y\u{2016}",
        worst_sum <= 1e-9,
        format!("max shortfall {worst_sum:.3e}"),
    );
    Ok(report)
}

// ---------------------------------------------------------------------------
// lem33 / prop32
// ---------------------------------------------------------------------------

fn halfbound_suite(n_eps: usize, seed: u64) -> Result<SuiteReport> {
    let mut report = SuiteReport::new(
        "lem33",
        "half bound: the modulus on the rank >= 2 stratum is at most eps/2",
    );
    let spec = standard_rank2_spec();
    let mut rng = seeded_rng(seed, 0);
    let grid: Vec<f64> = (0..n_eps)
        .map(|_| rng.gen_range(f64::MIN_POSITIVE..=2.0).min(2.0))
        .collect();
    let cfg = SearchConfig {
        grid_points: 512,
        random_restarts: 4000,
        refine_iters: 100,
        seed,
    };
    let out = halfbound_check(&spec, &grid, &cfg)?;
    let worst = out
        .rows
        .iter()
        .map(|r| r.max_estimate - r.bound)
        .fold(f64::NEG_INFINITY, f64::max);
    report.push(
        format!("{n_eps} random eps values"),
        out.all_ok,
        format!("worst margin {worst:.3e} (negative is inside the bound)"),
    );
    Ok(report)
}

fn convexity_constant_suite(seed: u64) -> Result<SuiteReport> {
    let mut report = SuiteReport::new(
        "prop32",
        "uniform convexity constant: delta_p(eps) lies in (0, 1) and is seed-stable",
    );
    let spec = RnModuleSpec::uniform(&[
        ("a", 2, FiberNorm::Euclidean),
        ("b", 3, FiberNorm::Euclidean),
    ])
    .unwrap();
    let mut reports = Vec::new();
    for p in [1.5, 2.0, 3.0] {
        for eps in [0.5, 1.0] {
            let r = uniform_convexity_audit(&spec, p, eps, 20000, seed)?;
            let pass = r.delta_in_unit_interval && r.stability_delta < 0.25;
            report.push(
                format!("p = {p}, eps = {eps}"),
                pass,
                format!(
                    "delta_p = {:.6}, stability {:.2}%, worst atom '{}'",
                    r.delta_p,
                    100.0 * r.stability_delta,
                    r.worst_atom
                ),
            );
            reports.push(JsonValue::Obj(vec![
                ("p".into(), JsonValue::Num(r.p)),
                ("eps".into(), JsonValue::Num(r.eps)),
                ("delta_p".into(), JsonValue::Num(r.delta_p)),
                (
                    "samples_accepted".into(),
                    JsonValue::Int(r.samples_accepted as i64),
                ),
                ("seed".into(), JsonValue::Int(r.seed as i64)),
                ("worst_atom".into(), JsonValue::Str(r.worst_atom.clone())),
                ("stability_delta".into(), JsonValue::Num(r.stability_delta)),
            ]));
        }
    }
    report.reports_json = Some(JsonValue::Arr(reports).render());
    Ok(report)
}

// ---------------------------------------------------------------------------
// Stratified IVT and parser suites (driven by the acceptance tests)
// ---------------------------------------------------------------------------

/// Random stratified solves with polynomial and trigonometric per-atom maps.
pub fn ivt_suite(n: usize, seed: u64) -> Result<SuiteReport> {
    let mut report = SuiteReport::new(
        "ivt",
        "stratified intermediate values: bracketing and residuals at tolerance",
    );
    let mut rng = seeded_rng(seed, 0);
    let tol = 1e-9;
    let mut worst_residual = 0.0f64;
    let mut bracket_ok = true;
    for _ in 0..n {
        let n_atoms = rng.gen_range(2..=5);
        let ids: Vec<String> = (0..n_atoms).map(|i| format!("w{i}")).collect();
        let id_refs: Vec<&str> = ids.iter().map(|s| s.as_str()).collect();
        let space = FiniteProbSpace::uniform(&id_refs)?;
        let mut fns: Vec<std::sync::Arc<dyn Fn(f64) -> f64 + Send + Sync>> = Vec::new();
        for _ in 0..n_atoms {
            let a: f64 = rng.gen_range(-2.0..2.0);
            let b: f64 = rng.gen_range(-2.0..2.0);
            let c: f64 = rng.gen_range(-2.0..2.0);
            let d: f64 = rng.gen_range(-2.0..2.0);
            if rng.gen() {
                fns.push(std::sync::Arc::new(move |z: f64| {
                    a * z * z * z + b * z * z + c * z + d
                }));
            } else {
                fns.push(std::sync::Arc::new(move |z: f64| {
                    a * (b * z).sin() + c * z + d * (z).cos()
                }));
            }
        }
        let f = LocalFunction::from_atom_fns(space.clone(), fns)?;
        let mut y1v = Vec::new();
        let mut y2v = Vec::new();
        for _ in 0..n_atoms {
            let lo: f64 = rng.gen_range(-2.0..0.5);
            let width: f64 = if rng.gen_range(0..20) == 0 {
                0.0
            } else {
                rng.gen_range(0.0..2.5)
            };
            y1v.push(lo);
            y2v.push(lo + width);
        }
        let y1 = space.l0(y1v)?;
        let y2 = space.l0(y2v)?;
        let f1 = f.eval(&y1)?;
        let f2 = f.eval(&y2)?;
        let xi_values: Vec<f64> = (0..n_atoms)
            .map(|i| {
                let lo = f1.get(i).min(f2.get(i));
                let hi = f1.get(i).max(f2.get(i));
                let lambda: f64 = rng.gen_range(0.0..=1.0);
                lo + lambda * (hi - lo)
            })
            .collect();
        let xi = space.l0(xi_values)?;
        let eta = solve_ivt(&f, &y1, &y2, &xi, tol)?;
        bracket_ok &=
            leq_on(&y1, &eta, &space.full_event()) && leq_on(&eta, &y2, &space.full_event());
        let residual = (f.eval(&eta)? - xi).max_abs();
        worst_residual = worst_residual.max(residual);
    }
    report.push(
        format!("{n} random instances bracketed"),
        bracket_ok,
        "Y1 <= eta <= Y2 atomwise",
    );
    report.push(
        "residuals at tolerance",
        worst_residual <= tol,
        format!("max |f(eta) - xi| = {worst_residual:.3e}"),
    );
    Ok(report)
}

/// Round-trip identity and compiled-function locality on random trees.
pub fn parser_suite(n: usize, seed: u64) -> Result<SuiteReport> {
    let mut report = SuiteReport::new(
        "parser",
        "expression round trips and locality of compiled functions",
    );
    let mut rng = seeded_rng(seed, 0);
    let space = FiniteProbSpace::uniform(&["a", "b", "c"])?;
    let mut roundtrip_ok = true;
    let mut locality_max = 0.0f64;
    for k in 0..n {
        let tree = random_expr(&mut rng, 6);
        let printed = tree.to_string();
        match crate::expr::parse_expr(&printed) {
            Ok(back) => roundtrip_ok &= back == tree,
            Err(_) => roundtrip_ok = false,
        }
        if k % 5 == 0 {
            let bindings = vec![
                (
                    "c".to_string(),
                    space.l0((0..3).map(|_| rng.gen_range(-2.0..2.0)).collect())?,
                ),
                (
                    "d".to_string(),
                    space.l0((0..3).map(|_| rng.gen_range(-2.0..2.0)).collect())?,
                ),
            ];
            let f = LocalFunction::from_expr(space.clone(), tree, bindings)?;
            let audit = locality_audit(&f, 20, seed.wrapping_add(k as u64))?;
            locality_max = locality_max.max(audit.max_deviation);
        }
    }
    report.push(
        format!("round-trip identity on {n} trees"),
        roundtrip_ok,
        "print then parse is the identity",
    );
    report.push(
        "compiled functions are local",
        locality_max == 0.0,
        format!("max audited deviation {locality_max:.3e}"),
    );
    Ok(report)
}
