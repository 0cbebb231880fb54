//! The derived Banach space Lp(S): its norm, modulus-of-convexity estimation, and
//! the uniform-convexity audit.
//!
//! For a module over finitely many atoms, Lp(S) is the finite-dimensional space of
//! elements under `(sum_w p_w * \|x\|(w)^p)^(1/p)`. Uniform convexity is audited
//! through explicit estimates rather than abstract predicates: the modulus
//! estimator searches unit pairs of the derived norm, and the audit samples
//! stratified pairs satisfying the gap hypotheses and reports the worst midpoint
//! power ratio.

use rand::Rng;
use rand_chacha::ChaCha20Rng;

use crate::convexity::{sphere_geq_pair_minimum, SearchConfig};
use crate::error::{Error, Result};
use crate::module::{FiberNorm, ModuleElement, RnModuleSpec};
use crate::search::{bisect_to, gaussian_vec, seeded_rng};

/// The derived space: a module spec together with an exponent 1 < p < infinity.
#[derive(Clone, Debug)]
pub struct LpSpace {
    spec: RnModuleSpec,
    p: f64,
}

fn validate_p(p: f64) -> Result<()> {
    if p.is_finite() && p > 1.0 {
        Ok(())
    } else {
        Err(Error::precondition(format!(
            "exponent must satisfy 1 < p < infinity, got {p}"
        )))
    }
}

impl LpSpace {
    pub fn new(spec: RnModuleSpec, p: f64) -> Result<Self> {
        validate_p(p)?;
        Ok(LpSpace { spec, p })
    }

    pub fn spec(&self) -> &RnModuleSpec {
        &self.spec
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn norm(&self, x: &ModuleElement) -> f64 {
        let norms = x.random_norm();
        let space = self.spec.space();
        let mut acc = 0.0;
        for i in 0..space.len() {
            acc += space.weight(i) * norms.get(i).powf(self.p);
        }
        acc.powf(1.0 / self.p)
    }
}

/// `(E \|x\|^p)^(1/p)` for 1 < p < infinity.
pub fn lp_norm(x: &ModuleElement, p: f64) -> Result<f64> {
    validate_p(p)?;
    Ok(LpSpace::new(x.spec().clone(), p)?.norm(x))
}

/// Flattened coordinate layout of the nonzero fibers.
struct Flat {
    entries: Vec<(usize, usize, usize)>, // (atom, offset, dim)
    total: usize,
}

fn flatten(spec: &RnModuleSpec) -> Flat {
    let mut entries = Vec::new();
    let mut total = 0usize;
    for i in 0..spec.space().len() {
        let d = spec.dim(i);
        if d > 0 {
            entries.push((i, total, d));
            total += d;
        }
    }
    Flat { entries, total }
}

fn lp_norm_flat(spec: &RnModuleSpec, flat: &Flat, p: f64, v: &[f64]) -> f64 {
    let mut acc = 0.0;
    for &(atom, offset, d) in &flat.entries {
        let n = spec.norm(atom).eval(&v[offset..offset + d]);
        acc += spec.space().weight(atom) * n.powf(p);
    }
    acc.powf(1.0 / p)
}

/// Modulus estimate for the derived space, reported with a doubled-budget rerun.
#[derive(Clone, Debug)]
pub struct LpModulusReport {
    pub p: f64,
    pub eps: f64,
    pub estimate: f64,
    pub doubled_estimate: f64,
    /// Gap between the default-budget and doubled-budget estimates.
    pub budget_delta: f64,
    pub seed: u64,
}

/// Minimum of `1 - \|(x+y)/2\|_p` over found unit pairs with `\|x - y\|_p >= eps`.
/// The value is an upper bound on the true modulus; the doubled-budget run shares
/// the seed, so its candidate set extends the first and its estimate can only be
/// lower.
pub fn lp_modulus_estimate(
    spec: &RnModuleSpec,
    p: f64,
    eps: f64,
    cfg: &SearchConfig,
) -> Result<LpModulusReport> {
    validate_p(p)?;
    if !(eps > 0.0 && eps <= 2.0) {
        return Err(Error::precondition(format!(
            "eps must lie in (0, 2], got {eps}"
        )));
    }
    cfg.validate()?;
    let flat = flatten(spec);
    if flat.total == 0 {
        return Err(Error::precondition(
            "the derived space is trivial: empty support",
        ));
    }
    let norm = |v: &[f64]| lp_norm_flat(spec, &flat, p, v);
    let run = |budget: &SearchConfig| -> Result<f64> {
        let mut rng = seeded_rng(budget.seed, LP_STREAM);
        sphere_geq_pair_minimum(&norm, flat.total, eps, budget, &mut rng).ok_or_else(|| {
            Error::Sampling("no feasible unit pair found for the gap constraint".into())
        })
    };
    let estimate = run(cfg)?;
    let doubled = SearchConfig {
        grid_points: cfg.grid_points,
        random_restarts: cfg.random_restarts * 2,
        refine_iters: cfg.refine_iters * 2,
        seed: cfg.seed,
    };
    let doubled_estimate = run(&doubled)?;
    Ok(LpModulusReport {
        p,
        eps,
        estimate,
        doubled_estimate,
        budget_delta: (estimate - doubled_estimate).abs(),
        seed: cfg.seed,
    })
}

/// RNG stream tag for derived-space searches.
const LP_STREAM: u64 = 0x4c50;

/// Report of the stratified uniform-convexity audit.
#[derive(Clone, Debug)]
pub struct ConvexityAuditReport {
    pub p: f64,
    pub eps: f64,
    /// `1 - r*` where `r*` is the worst sampled midpoint power ratio under the
    /// ball-pair hypothesis.
    pub delta_p: f64,
    /// Same quantity for the scale-free hypothesis batch.
    pub delta_p_scaled: f64,
    pub delta_in_unit_interval: bool,
    pub samples_accepted: usize,
    pub samples_rejected: usize,
    pub seed: u64,
    pub worst_atom: String,
    /// Relative difference of `delta_p` across the two internal seeds.
    pub stability_delta: f64,
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

/// One feasible fiber pair with both norms in (0, 1] and gap at least `eps`
/// (`None` if the drawn strategy failed; the caller retries and counts).
fn feasible_fiber_pair(
    rng: &mut ChaCha20Rng,
    norm: FiberNorm,
    dim: usize,
    eps: f64,
    strategy: usize,
) -> Option<(Vec<f64>, Vec<f64>)> {
    match strategy {
        // Chord fix: move the second point along the chord to gap exactly eps.
        0 => {
            let r: f64 = rng.gen_range(0.05..=1.0);
            let a: Vec<f64> = random_unit_fiber(rng, norm, dim)
                .iter()
                .map(|&x| r * x)
                .collect();
            let b0 = random_unit_fiber(rng, norm, dim);
            let chord: Vec<f64> = a.iter().zip(&b0).map(|(&x, &y)| x - y).collect();
            let cn = norm.eval(&chord);
            if cn < 1e-8 {
                return None;
            }
            let b: Vec<f64> = a
                .iter()
                .zip(&chord)
                .map(|(&x, &c)| x - eps * c / cn)
                .collect();
            let nb = norm.eval(&b);
            if !(1e-3..=1.0).contains(&nb) {
                return None;
            }
            Some((a, b))
        }
        // Antipodal family: covers eps all the way to 2.
        1 => {
            let lo = (eps - 1.0).max(0.05);
            if lo > 1.0 {
                return None;
            }
            let r: f64 = rng.gen_range(lo..=1.0);
            let slo = (eps - r).max(0.05);
            if slo > 1.0 {
                return None;
            }
            let s: f64 = rng.gen_range(slo..=1.0);
            let u = random_unit_fiber(rng, norm, dim);
            let a: Vec<f64> = u.iter().map(|&x| r * x).collect();
            let b: Vec<f64> = u.iter().map(|&x| -s * x).collect();
            Some((a, b))
        }
        // Boundary pair: unit vectors at gap exactly eps along a sphere path.
        _ => {
            if dim < 2 {
                return None;
            }
            let u = random_unit_fiber(rng, norm, dim);
            let w = random_unit_fiber(rng, norm, dim);
            let path = |t: f64| -> Option<Vec<f64>> {
                let raw: Vec<f64> = u
                    .iter()
                    .zip(&w)
                    .map(|(&x, &y)| t.cos() * x + t.sin() * y)
                    .collect();
                let n = norm.eval(&raw);
                if n > 1e-8 {
                    Some(raw.iter().map(|&x| x / n).collect())
                } else {
                    None
                }
            };
            let g = |t: f64| match path(t) {
                Some(y) => {
                    let d: Vec<f64> = u.iter().zip(&y).map(|(&x, &z)| x - z).collect();
                    norm.eval(&d)
                }
                None => f64::NAN,
            };
            if g(std::f64::consts::PI) < eps {
                return None;
            }
            let t = bisect_to(&g, 0.0, std::f64::consts::PI, eps, 80);
            let b = path(t)?;
            let d: Vec<f64> = u.iter().zip(&b).map(|(&x, &z)| x - z).collect();
            if (norm.eval(&d) - eps).abs() > 1e-6 {
                return None;
            }
            Some((u, b))
        }
    }
}

struct BatchOutcome {
    r_star: f64,
    r_star_scaled: f64,
    worst_atom: usize,
    accepted: usize,
    rejected: usize,
}

fn audit_batch(
    spec: &RnModuleSpec,
    p: f64,
    eps: f64,
    samples: usize,
    seed: u64,
) -> Result<BatchOutcome> {
    let eligible: Vec<usize> = (0..spec.space().len())
        .filter(|&i| spec.dim(i) >= 1)
        .collect();
    if eligible.is_empty() {
        return Err(Error::Sampling("empty support: nothing to sample".into()));
    }
    let mut rng = seeded_rng(seed, 0x5c);
    let mut r_star = 0.0f64;
    let mut r_star_scaled = 0.0f64;
    let mut worst_atom = eligible[0];
    let mut accepted = 0usize;
    let mut rejected = 0usize;
    for k in 0..samples {
        // Random nonempty stratum of eligible atoms.
        let mut domain: Vec<usize> = eligible
            .iter()
            .copied()
            .filter(|_| rng.gen::<bool>())
            .collect();
        if domain.is_empty() {
            domain.push(eligible[rng.gen_range(0..eligible.len())]);
        }
        let scale: f64 = rng.gen_range(0.05..=3.0);
        let mut sample_ok = true;
        let mut sample_ratio = 0.0f64;
        let mut sample_atom = domain[0];
        for &i in &domain {
            let norm = spec.norm(i);
            let dim = spec.dim(i);
            let mut pair = None;
            for attempt in 0..24 {
                match feasible_fiber_pair(&mut rng, norm, dim, eps, (k + attempt) % 3) {
                    Some(found) => {
                        pair = Some(found);
                        break;
                    }
                    None => rejected += 1,
                }
            }
            let Some((a, b)) = pair else {
                sample_ok = false;
                break;
            };
            let mid: Vec<f64> = a.iter().zip(&b).map(|(&x, &y)| 0.5 * (x + y)).collect();
            let num = norm.eval(&mid).powf(p);
            let den = 0.5 * (norm.eval(&a).powf(p) + norm.eval(&b).powf(p));
            let ratio = num / den;
            if ratio > sample_ratio {
                sample_ratio = ratio;
                sample_atom = i;
            }
            // The scale-free hypothesis batch: both points scaled jointly leave
            // the ratio invariant, which is checked rather than assumed.
            let sa: Vec<f64> = a.iter().map(|&x| scale * x).collect();
            let sb: Vec<f64> = b.iter().map(|&x| scale * x).collect();
            let snum = norm
                .eval(
                    &sa.iter()
                        .zip(&sb)
                        .map(|(&x, &y)| 0.5 * (x + y))
                        .collect::<Vec<f64>>(),
                )
                .powf(p);
            let sden = 0.5 * (norm.eval(&sa).powf(p) + norm.eval(&sb).powf(p));
            r_star_scaled = r_star_scaled.max(snum / sden);
        }
        if sample_ok {
            accepted += 1;
            if sample_ratio > r_star {
                r_star = sample_ratio;
                worst_atom = sample_atom;
            }
        }
    }
    if accepted == 0 {
        return Err(Error::Sampling(format!(
            "no feasible samples generated for eps = {eps} ({rejected} attempts rejected)"
        )));
    }
    Ok(BatchOutcome {
        r_star,
        r_star_scaled,
        worst_atom,
        accepted,
        rejected,
    })
}

/// Samples stratified pairs under the gap hypotheses and reports the empirical
/// convexity constant `delta_p = 1 - r*`, its scale-free counterpart, and the
/// stability of the constant across a second internal seed.
pub fn uniform_convexity_audit(
    spec: &RnModuleSpec,
    p: f64,
    eps: f64,
    samples: usize,
    seed: u64,
) -> Result<ConvexityAuditReport> {
    validate_p(p)?;
    if !(eps > 0.0 && eps <= 2.0) {
        return Err(Error::precondition(format!(
            "eps must lie in (0, 2], got {eps}"
        )));
    }
    if samples < 1 {
        return Err(Error::precondition("audit needs samples >= 1"));
    }
    for i in 0..spec.space().len() {
        if spec.dim(i) >= 1 {
            match spec.norm(i) {
                FiberNorm::Euclidean => {}
                FiberNorm::PNorm(q) if q > 1.0 => {}
                FiberNorm::PNorm(q) => {
                    return Err(Error::precondition(format!(
                        "audit requires randomly uniformly convex fibers; atom '{}' carries the {q}-norm",
                        spec.space().id(i)
                    )))
                }
            }
        }
    }
    let first = audit_batch(spec, p, eps, samples, seed)?;
    let second = audit_batch(spec, p, eps, samples, seed.wrapping_add(1))?;
    let d1 = 1.0 - first.r_star;
    let d2 = 1.0 - second.r_star;
    let stability = if d1.max(d2) > 0.0 {
        (d1 - d2).abs() / d1.max(d2)
    } else {
        0.0
    };
    Ok(ConvexityAuditReport {
        p,
        eps,
        delta_p: d1,
        delta_p_scaled: 1.0 - first.r_star_scaled,
        delta_in_unit_interval: d1 > 0.0 && d1 < 1.0,
        samples_accepted: first.accepted,
        samples_rejected: first.rejected,
        seed,
        worst_atom: spec.space().id(first.worst_atom).to_string(),
        stability_delta: stability,
    })
}
