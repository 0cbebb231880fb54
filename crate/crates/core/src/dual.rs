//! The random conjugate space: evaluation, dual norm, and the constructive
//! norm-attaining functional.
//!
//! A functional stores one dual fiber vector per atom and acts atomwise by the
//! fiber inner product, so evaluation is automatically L0-linear. The dual norm of
//! a p-norm fiber is the q-norm with 1/p + 1/q = 1 (max-abs for p = 1), and the
//! Euclidean fiber is self-dual; both have exact norming vectors, which makes the
//! Hahn-Banach norming functional exactly constructible.

use crate::error::{Error, Result};
use crate::measure::{strata_pos, EventSet, L0Real};
use crate::module::{FiberNorm, ModuleElement, RnModuleSpec};
use crate::search::{random_unit, seeded_rng};

/// An element of the random conjugate space: one dual vector per atom.
#[derive(Clone, Debug)]
pub struct RandomFunctional {
    spec: RnModuleSpec,
    coeffs: Vec<Vec<f64>>,
}

impl PartialEq for RandomFunctional {
    fn eq(&self, other: &Self) -> bool {
        self.spec.same(&other.spec) && self.coeffs == other.coeffs
    }
}

impl RandomFunctional {
    pub fn new(spec: RnModuleSpec, coeffs: Vec<Vec<f64>>) -> Result<Self> {
        if coeffs.len() != spec.space().len() {
            return Err(Error::schema(format!(
                "expected {} dual fibers, got {}",
                spec.space().len(),
                coeffs.len()
            )));
        }
        for (i, c) in coeffs.iter().enumerate() {
            if c.len() != spec.dim(i) {
                return Err(Error::schema(format!(
                    "dual fiber at atom '{}' has length {}, expected {}",
                    spec.space().id(i),
                    c.len(),
                    spec.dim(i)
                )));
            }
        }
        Ok(RandomFunctional { spec, coeffs })
    }

    pub fn zero(spec: &RnModuleSpec) -> Self {
        RandomFunctional {
            spec: spec.clone(),
            coeffs: (0..spec.space().len())
                .map(|i| vec![0.0; spec.dim(i)])
                .collect(),
        }
    }

    pub fn spec(&self) -> &RnModuleSpec {
        &self.spec
    }

    pub fn coeff(&self, idx: usize) -> &[f64] {
        &self.coeffs[idx]
    }

    pub fn coeffs(&self) -> &[Vec<f64>] {
        &self.coeffs
    }

    /// Reinterprets the coefficient table as a module element (same shape).
    pub fn as_element(&self) -> ModuleElement {
        self.spec
            .element(self.coeffs.clone())
            .expect("shapes match by construction")
    }
}

/// Atomwise dot product `f(x)`.
pub fn eval_functional(f: &RandomFunctional, x: &ModuleElement) -> L0Real {
    assert!(
        f.spec.same(x.spec()),
        "functional and element on different specs"
    );
    let values = f
        .coeffs
        .iter()
        .zip(x.fibers())
        .map(|(c, v)| c.iter().zip(v).map(|(&a, &b)| a * b).sum())
        .collect();
    f.spec.space().l0(values).expect("length matches")
}

/// Atomwise dual norm of the coefficient vectors.
pub fn dual_norm(f: &RandomFunctional) -> L0Real {
    let values = f
        .coeffs
        .iter()
        .enumerate()
        .map(|(i, c)| f.spec.norm(i).eval_dual(c))
        .collect();
    f.spec.space().l0(values).expect("length matches")
}

/// Norming subgradient of a single fiber vector: `g` with `g . v = N(v)` and dual
/// norm exactly 1 (0 on the zero vector).
fn fiber_norming_subgradient(norm: FiberNorm, v: &[f64]) -> Vec<f64> {
    let n = norm.eval(v);
    if n == 0.0 {
        return vec![0.0; v.len()];
    }
    match norm {
        FiberNorm::Euclidean => v.iter().map(|&x| x / n).collect(),
        FiberNorm::PNorm(p) => {
            if p == 1.0 {
                // Subgradient of the 1-norm: the sign pattern, zeros preserved.
                v.iter()
                    .map(|&x| {
                        if x > 0.0 {
                            1.0
                        } else if x < 0.0 {
                            -1.0
                        } else {
                            0.0
                        }
                    })
                    .collect()
            } else {
                let scale = n.powf(p - 1.0);
                v.iter()
                    .map(|&x| x.signum() * x.abs().powf(p - 1.0) / scale)
                    .collect()
            }
        }
    }
}

/// The Hahn-Banach norming functional of `x`: `g(x) = \|x\|` atomwise and
/// `\|g\|^* = I_{A_x}`.
pub fn norm_attaining(x: &ModuleElement) -> RandomFunctional {
    let coeffs = x
        .fibers()
        .iter()
        .enumerate()
        .map(|(i, v)| fiber_norming_subgradient(x.spec().norm(i), v))
        .collect();
    RandomFunctional {
        spec: x.spec().clone(),
        coeffs,
    }
}

/// Fiber direction at which a dual vector attains its dual norm over the primal
/// unit sphere. For a p = 1 fiber the maximizer concentrates on the first
/// coordinate of largest magnitude.
fn fiber_norming_direction(norm: FiberNorm, c: &[f64]) -> Vec<f64> {
    let nd = norm.eval_dual(c);
    if nd == 0.0 {
        return vec![0.0; c.len()];
    }
    match norm {
        FiberNorm::Euclidean => c.iter().map(|&x| x / nd).collect(),
        FiberNorm::PNorm(p) => {
            if p == 1.0 {
                let mut best = 0usize;
                for (i, x) in c.iter().enumerate() {
                    if x.abs() > c[best].abs() {
                        best = i;
                    }
                }
                let mut out = vec![0.0; c.len()];
                out[best] = c[best].signum();
                out
            } else {
                let q = p / (p - 1.0);
                let scale = nd.powf(q - 1.0);
                c.iter()
                    .map(|&x| x.signum() * x.abs().powf(q - 1.0) / scale)
                    .collect()
            }
        }
    }
}

/// Primal witness element for `f`: unit fiber vectors on which `f` attains its
/// dual norm, zero where `f` vanishes.
pub fn norming_direction(f: &RandomFunctional) -> ModuleElement {
    let fibers = f
        .coeffs
        .iter()
        .enumerate()
        .map(|(i, c)| fiber_norming_direction(f.spec.norm(i), c))
        .collect();
    f.spec.element(fibers).expect("shapes match")
}

/// Report of the sampled supremum formulas for the dual norm and the bidual norm.
#[derive(Clone, Debug)]
pub struct SupFormulaReport {
    pub samples: usize,
    pub seed: u64,
    /// Atomwise dual norm of `f`.
    pub dual_norm: L0Real,
    /// Atomwise `max |f(x)|` over sampled unit-sphere elements plus the injected
    /// norming direction.
    pub sampled_sup: L0Real,
    /// All sampled evaluations stayed below the dual norm (1e-12 slack).
    pub inequality_ok: bool,
    /// The sampled sup matches the dual norm atomwise within 1e-9.
    pub attained: bool,
    /// Atomwise norm of the coefficient table viewed as an element.
    pub element_norm: L0Real,
    /// Atomwise `max g(x)` over sampled unit functionals plus the norm-attaining
    /// witness, where `x` is the coefficient table viewed as an element.
    pub bidual_sampled_sup: L0Real,
    pub bidual_inequality_ok: bool,
    pub bidual_attained: bool,
}

/// Samples the supremum formulas: `\|f\|^* = sup |f(x)|` over the unit sphere and
/// the bidual identity `\|x\| = sup g(x)` over unit functionals, with the exact
/// witnesses injected into the sample streams.
pub fn sup_formula_check(
    f: &RandomFunctional,
    samples: usize,
    seed: u64,
) -> Result<SupFormulaReport> {
    if samples < 1 {
        return Err(Error::precondition("sup_formula_check needs samples >= 1"));
    }
    let spec = &f.spec;
    let space = spec.space();
    let n_atoms = space.len();
    let dual = dual_norm(f);
    let x_elem = f.as_element();
    let elem_norm = x_elem.random_norm();

    let mut sup_eval = vec![0.0f64; n_atoms];
    let mut bidual_sup = vec![0.0f64; n_atoms];
    let mut inequality_ok = true;
    let mut bidual_inequality_ok = true;

    let mut rng = seeded_rng(seed, 0);
    for _ in 0..samples {
        // Primal sample: an element of the random unit sphere supported on H(S).
        let fibers: Vec<Vec<f64>> = (0..n_atoms)
            .map(|i| {
                let d = spec.dim(i);
                if d == 0 {
                    Vec::new()
                } else {
                    let norm = spec.norm(i);
                    random_unit(&mut rng, d, &|v: &[f64]| norm.eval(v))
                }
            })
            .collect();
        let sample = spec.element(fibers).expect("valid shape");
        let ev = eval_functional(f, &sample);
        for i in 0..n_atoms {
            let v = ev.get(i).abs();
            if v > dual.get(i) + 1e-12 {
                inequality_ok = false;
            }
            sup_eval[i] = sup_eval[i].max(v);
        }

        // Dual sample: a functional of unit dual norm on the support.
        let coeffs: Vec<Vec<f64>> = (0..n_atoms)
            .map(|i| {
                let d = spec.dim(i);
                if d == 0 {
                    Vec::new()
                } else {
                    let norm = spec.norm(i);
                    random_unit(&mut rng, d, &|v: &[f64]| norm.eval_dual(v))
                }
            })
            .collect();
        let g = RandomFunctional::new(spec.clone(), coeffs)?;
        let gv = eval_functional(&g, &x_elem);
        for i in 0..n_atoms {
            let v = gv.get(i);
            if v > elem_norm.get(i) + 1e-12 {
                bidual_inequality_ok = false;
            }
            bidual_sup[i] = bidual_sup[i].max(v);
        }
    }

    // Injected witnesses: the exact norming direction and norming functional.
    let witness = norming_direction(f);
    let wv = eval_functional(f, &witness);
    for i in 0..n_atoms {
        sup_eval[i] = sup_eval[i].max(wv.get(i).abs());
    }
    let g_star = norm_attaining(&x_elem);
    let gv = eval_functional(&g_star, &x_elem);
    for i in 0..n_atoms {
        bidual_sup[i] = bidual_sup[i].max(gv.get(i));
    }

    let sampled_sup = space.l0(sup_eval)?;
    let bidual_sampled_sup = space.l0(bidual_sup)?;
    let attained = sampled_sup
        .values()
        .iter()
        .zip(dual.values())
        .all(|(&s, &d)| (s - d).abs() <= 1e-9);
    let bidual_attained = bidual_sampled_sup
        .values()
        .iter()
        .zip(elem_norm.values())
        .all(|(&s, &d)| (s - d).abs() <= 1e-9);

    Ok(SupFormulaReport {
        samples,
        seed,
        dual_norm: dual,
        sampled_sup,
        inequality_ok,
        attained,
        element_norm: elem_norm,
        bidual_sampled_sup,
        bidual_inequality_ok,
        bidual_attained,
    })
}

/// The support of a functional in the dual: `[\|f\|^* > 0]`.
pub fn functional_support(f: &RandomFunctional) -> EventSet {
    strata_pos(&dual_norm(f))
}
