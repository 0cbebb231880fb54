//! Concrete random normed modules: per-atom fiber spaces with per-atom norms.
//!
//! A module spec assigns each atom a fiber dimension and a fiber norm. An element
//! carries one fiber vector per atom; its random norm is the L0Real of fiber norms.
//! Atoms of dimension zero model strata outside the support H(S).

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::measure::{kyfan_distance, strata_pos, EventSet, FiniteProbSpace, L0Real};

/// Norm carried by a single fiber.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FiberNorm {
    Euclidean,
    /// p-norm with finite exponent p >= 1.
    PNorm(f64),
}

impl FiberNorm {
    pub fn validate(&self) -> Result<()> {
        match self {
            FiberNorm::Euclidean => Ok(()),
            FiberNorm::PNorm(p) => {
                if p.is_finite() && *p >= 1.0 {
                    Ok(())
                } else {
                    Err(Error::schema(format!(
                        "p-norm exponent must be finite and >= 1, got {p}"
                    )))
                }
            }
        }
    }

    pub fn eval(&self, v: &[f64]) -> f64 {
        match self {
            FiberNorm::Euclidean => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
            FiberNorm::PNorm(p) => {
                if *p == 1.0 {
                    v.iter().map(|x| x.abs()).sum()
                } else {
                    v.iter()
                        .map(|x| x.abs().powf(*p))
                        .sum::<f64>()
                        .powf(1.0 / p)
                }
            }
        }
    }

    /// Norm of the dual fiber: Euclidean is self-dual, the p-norm dualizes to the
    /// q-norm with 1/p + 1/q = 1 (max-abs when p = 1).
    pub fn eval_dual(&self, v: &[f64]) -> f64 {
        match self {
            FiberNorm::Euclidean => self.eval(v),
            FiberNorm::PNorm(p) => {
                if *p == 1.0 {
                    v.iter().fold(0.0, |m, x| m.max(x.abs()))
                } else {
                    let q = p / (p - 1.0);
                    FiberNorm::PNorm(q).eval(v)
                }
            }
        }
    }
}

#[derive(Debug)]
struct SpecInner {
    space: FiniteProbSpace,
    dims: Vec<usize>,
    norms: Vec<FiberNorm>,
}

/// Per-atom fiber dimensions and norms over a base space.
#[derive(Clone, Debug)]
pub struct RnModuleSpec {
    inner: Arc<SpecInner>,
}

impl RnModuleSpec {
    pub fn new(space: FiniteProbSpace, fibers: Vec<(usize, FiberNorm)>) -> Result<Self> {
        if fibers.len() != space.len() {
            return Err(Error::schema(format!(
                "expected {} fibers, got {}",
                space.len(),
                fibers.len()
            )));
        }
        let mut dims = Vec::with_capacity(fibers.len());
        let mut norms = Vec::with_capacity(fibers.len());
        for (dim, norm) in fibers {
            norm.validate()?;
            dims.push(dim);
            norms.push(norm);
        }
        Ok(RnModuleSpec {
            inner: Arc::new(SpecInner { space, dims, norms }),
        })
    }

    /// Uniform-weight spec from `(id, dim, norm)` triples.
    pub fn uniform(atoms: &[(&str, usize, FiberNorm)]) -> Result<Self> {
        let ids: Vec<&str> = atoms.iter().map(|(id, _, _)| *id).collect();
        let space = FiniteProbSpace::uniform(&ids)?;
        RnModuleSpec::new(space, atoms.iter().map(|&(_, d, n)| (d, n)).collect())
    }

    pub fn space(&self) -> &FiniteProbSpace {
        &self.inner.space
    }

    pub fn dim(&self, idx: usize) -> usize {
        self.inner.dims[idx]
    }

    pub fn norm(&self, idx: usize) -> FiberNorm {
        self.inner.norms[idx]
    }

    pub fn same(&self, other: &RnModuleSpec) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.space.same(&other.inner.space)
                && self.inner.dims == other.inner.dims
                && self.inner.norms == other.inner.norms)
    }

    /// The support H(S): atoms that carry a nonzero fiber.
    pub fn support(&self) -> EventSet {
        self.inner.space.event_where(|i| self.inner.dims[i] >= 1)
    }

    /// The all-zero element.
    pub fn zero(&self) -> ModuleElement {
        ModuleElement {
            spec: self.clone(),
            fibers: self.inner.dims.iter().map(|&d| vec![0.0; d]).collect(),
        }
    }

    pub fn element(&self, fibers: Vec<Vec<f64>>) -> Result<ModuleElement> {
        if fibers.len() != self.inner.dims.len() {
            return Err(Error::schema(format!(
                "expected {} fibers, got {}",
                self.inner.dims.len(),
                fibers.len()
            )));
        }
        for (i, f) in fibers.iter().enumerate() {
            if f.len() != self.inner.dims[i] {
                return Err(Error::schema(format!(
                    "fiber at atom '{}' has length {}, expected {}",
                    self.inner.space.id(i),
                    f.len(),
                    self.inner.dims[i]
                )));
            }
        }
        Ok(ModuleElement {
            spec: self.clone(),
            fibers,
        })
    }

    /// An element whose random norm is the indicator of the support: the first
    /// standard basis vector in every nonzero fiber.
    pub fn unit_section(&self) -> Result<ModuleElement> {
        if self.support().is_empty() {
            return Err(Error::precondition(
                "unit_section requires a nonempty support",
            ));
        }
        let fibers = self
            .inner
            .dims
            .iter()
            .map(|&d| {
                let mut v = vec![0.0; d];
                if d >= 1 {
                    v[0] = 1.0;
                }
                v
            })
            .collect();
        Ok(ModuleElement {
            spec: self.clone(),
            fibers,
        })
    }

    /// Assembles an element from pieces over pairwise disjoint events; the result
    /// agrees with each piece on its event and vanishes outside the union.
    pub fn glue(&self, pieces: &[(EventSet, ModuleElement)]) -> Result<ModuleElement> {
        let mut used = vec![false; self.inner.space.len()];
        let mut out = self.zero();
        for (event, piece) in pieces {
            if !event.space().same(self.space()) || !piece.spec.same(self) {
                return Err(Error::precondition(
                    "glue pieces must live on the same module spec",
                ));
            }
            for i in event.indices() {
                if used[i] {
                    return Err(Error::precondition(format!(
                        "glue events overlap at atom '{}'",
                        self.inner.space.id(i)
                    )));
                }
                used[i] = true;
                out.fibers[i] = piece.fibers[i].clone();
            }
        }
        Ok(out)
    }
}

/// One fiber vector per atom.
#[derive(Clone, Debug)]
pub struct ModuleElement {
    spec: RnModuleSpec,
    fibers: Vec<Vec<f64>>,
}

impl PartialEq for ModuleElement {
    fn eq(&self, other: &Self) -> bool {
        self.spec.same(&other.spec) && self.fibers == other.fibers
    }
}

impl ModuleElement {
    pub fn spec(&self) -> &RnModuleSpec {
        &self.spec
    }

    pub fn fiber(&self, idx: usize) -> &[f64] {
        &self.fibers[idx]
    }

    pub fn fibers(&self) -> &[Vec<f64>] {
        &self.fibers
    }

    pub fn set_fiber(&mut self, idx: usize, v: Vec<f64>) -> Result<()> {
        if v.len() != self.spec.dim(idx) {
            return Err(Error::schema("fiber length does not match dimension"));
        }
        self.fibers[idx] = v;
        Ok(())
    }

    /// The random norm: fiber norm at every atom, zero on zero-dimensional fibers.
    pub fn random_norm(&self) -> L0Real {
        let values = self
            .fibers
            .iter()
            .enumerate()
            .map(|(i, f)| self.spec.norm(i).eval(f))
            .collect();
        self.spec.space().l0(values).expect("length matches space")
    }

    /// Module multiplication by an L0 scalar, atom by atom.
    pub fn scaled(&self, xi: &L0Real) -> ModuleElement {
        assert!(
            self.spec.space().same(xi.space()),
            "scalar on another space"
        );
        let fibers = self
            .fibers
            .iter()
            .enumerate()
            .map(|(i, f)| {
                let c = xi.get(i);
                f.iter().map(|&v| c * v).collect()
            })
            .collect();
        ModuleElement {
            spec: self.spec.clone(),
            fibers,
        }
    }

    pub fn add(&self, other: &ModuleElement) -> ModuleElement {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ModuleElement) -> ModuleElement {
        self.zip(other, |a, b| a - b)
    }

    pub fn neg(&self) -> ModuleElement {
        ModuleElement {
            spec: self.spec.clone(),
            fibers: self
                .fibers
                .iter()
                .map(|f| f.iter().map(|&v| -v).collect())
                .collect(),
        }
    }

    fn zip(&self, other: &ModuleElement, op: impl Fn(f64, f64) -> f64) -> ModuleElement {
        assert!(self.spec.same(&other.spec), "elements on different specs");
        let fibers = self
            .fibers
            .iter()
            .zip(&other.fibers)
            .map(|(a, b)| a.iter().zip(b).map(|(&x, &y)| op(x, y)).collect())
            .collect();
        ModuleElement {
            spec: self.spec.clone(),
            fibers,
        }
    }
}

/// Module multiplication as a free function mirroring the operation name.
pub fn module_scale(xi: &L0Real, x: &ModuleElement) -> ModuleElement {
    x.scaled(xi)
}

pub fn random_norm(x: &ModuleElement) -> L0Real {
    x.random_norm()
}

/// Support events of one or two elements.
pub struct Supports {
    pub a_x: EventSet,
    pub a_xy: Option<EventSet>,
    pub b_xy: Option<EventSet>,
}

/// `A_x = [\|x\| > 0]`; with a second element also `A_xy = A_x ∩ A_y` and
/// `B_xy = A_xy ∩ A_{x-y}`.
pub fn supports(x: &ModuleElement, y: Option<&ModuleElement>) -> Supports {
    let a_x = strata_pos(&x.random_norm());
    match y {
        None => Supports {
            a_x,
            a_xy: None,
            b_xy: None,
        },
        Some(y) => {
            let a_y = strata_pos(&y.random_norm());
            let a_xy = a_x.intersect(&a_y);
            let diff = x.sub(y);
            let a_diff = strata_pos(&diff.random_norm());
            let b_xy = a_xy.intersect(&a_diff);
            Supports {
                a_x,
                a_xy: Some(a_xy),
                b_xy: Some(b_xy),
            }
        }
    }
}

const SPHERE_TOL: f64 = 1e-12;

/// If `x` lies on the random unit sphere, returns the event `A` with
/// `\|x\| = I_A` and positive weight; `None` otherwise.
pub fn sphere_membership(x: &ModuleElement) -> Option<EventSet> {
    let norm = x.random_norm();
    let mut mask = Vec::with_capacity(norm.values().len());
    for &v in norm.values() {
        if (v - 1.0).abs() <= SPHERE_TOL {
            mask.push(true);
        } else if v.abs() <= SPHERE_TOL {
            mask.push(false);
        } else {
            return None;
        }
    }
    let event = x
        .spec()
        .space()
        .event_from_mask(mask)
        .expect("mask length matches");
    if event.weight() > 0.0 {
        Some(event)
    } else {
        None
    }
}

/// Metric induced by the random norm: the Ky Fan distance of `\|x - y\|` to zero.
pub fn module_distance(x: &ModuleElement, y: &ModuleElement) -> f64 {
    let diff = x.sub(y);
    let norm = diff.random_norm();
    let zero = x.spec().space().constant(0.0);
    kyfan_distance(&norm, &zero)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec_2_1() -> RnModuleSpec {
        RnModuleSpec::uniform(&[
            ("a", 2, FiberNorm::Euclidean),
            ("b", 1, FiberNorm::Euclidean),
        ])
        .unwrap()
    }

    #[test]
    fn random_norm_euclidean() {
        let spec = spec_2_1();
        let x = spec.element(vec![vec![3.0, 4.0], vec![-2.0]]).unwrap();
        assert_eq!(x.random_norm().values(), &[5.0, 2.0]);
        assert_eq!(spec.zero().random_norm().values(), &[0.0, 0.0]);
        let xi = spec.space().l0(vec![2.0, -3.0]).unwrap();
        let scaled = module_scale(&xi, &x);
        assert_eq!(scaled.random_norm().values(), &[10.0, 6.0]);
    }

    #[test]
    fn module_scale_cases() {
        let spec = spec_2_1();
        let x = spec.element(vec![vec![3.0, 4.0], vec![-2.0]]).unwrap();
        let mask = spec.space().indicator(&spec.space().event(&["b"]).unwrap());
        let masked = module_scale(&mask, &x);
        assert_eq!(masked.fiber(0), &[0.0, 0.0]);
        assert_eq!(masked.fiber(1), &[-2.0]);
        let one = spec.space().constant(1.0);
        assert_eq!(module_scale(&one, &x), x);
        let zero = spec.space().constant(0.0);
        assert_eq!(module_scale(&zero, &x), spec.zero());
    }

    #[test]
    fn supports_examples() {
        let spec = spec_2_1();
        let x = spec.element(vec![vec![1.0, 0.0], vec![0.0]]).unwrap();
        let s = supports(&x, None);
        assert_eq!(s.a_x, spec.space().event(&["a"]).unwrap());

        let y = spec.element(vec![vec![1.0, 0.0], vec![1.0]]).unwrap();
        let s = supports(&x, Some(&y));
        assert_eq!(s.a_xy.unwrap(), spec.space().event(&["a"]).unwrap());
        assert!(s.b_xy.unwrap().is_empty());

        let x2 = spec.element(vec![vec![1.0, 0.0], vec![1.0]]).unwrap();
        let y2 = spec.element(vec![vec![0.0, 1.0], vec![1.0]]).unwrap();
        let s = supports(&x2, Some(&y2));
        assert_eq!(s.a_xy.unwrap(), spec.space().full_event());
        assert_eq!(s.b_xy.unwrap(), spec.space().event(&["a"]).unwrap());
    }

    #[test]
    fn sphere_membership_examples() {
        let spec = spec_2_1();
        let x = spec.element(vec![vec![0.6, 0.8], vec![0.0]]).unwrap();
        assert_eq!(
            sphere_membership(&x).unwrap(),
            spec.space().event(&["a"]).unwrap()
        );
        let y = spec.element(vec![vec![1.0, 1.0], vec![0.0]]).unwrap();
        assert!(sphere_membership(&y).is_none());
        assert!(sphere_membership(&spec.zero()).is_none());
    }

    #[test]
    fn glue_identity_and_overlap() {
        let spec = spec_2_1();
        let x1 = spec.element(vec![vec![1.0, 2.0], vec![3.0]]).unwrap();
        let x2 = spec.element(vec![vec![4.0, 5.0], vec![6.0]]).unwrap();
        let ea = spec.space().event(&["a"]).unwrap();
        let eb = spec.space().event(&["b"]).unwrap();
        let glued = spec
            .glue(&[(ea.clone(), x1.clone()), (eb.clone(), x2.clone())])
            .unwrap();
        assert_eq!(glued.fiber(0), x1.fiber(0));
        assert_eq!(glued.fiber(1), x2.fiber(1));

        let single = spec
            .glue(&[(spec.space().full_event(), x1.clone())])
            .unwrap();
        assert_eq!(single, x1);
        assert_eq!(spec.glue(&[]).unwrap(), spec.zero());

        let overlap = spec.glue(&[(ea.clone(), x1.clone()), (ea, x2)]);
        assert!(matches!(overlap, Err(Error::Precondition(_))));
    }

    #[test]
    fn unit_section_examples() {
        let spec = spec_2_1();
        let u = spec.unit_section().unwrap();
        assert_eq!(u.fiber(0), &[1.0, 0.0]);
        assert_eq!(u.fiber(1), &[1.0]);
        assert_eq!(u.random_norm().values(), &[1.0, 1.0]);

        let spec20 = RnModuleSpec::uniform(&[
            ("a", 2, FiberNorm::Euclidean),
            ("b", 0, FiberNorm::Euclidean),
        ])
        .unwrap();
        let u = spec20.unit_section().unwrap();
        assert_eq!(u.random_norm().values(), &[1.0, 0.0]);

        let spec00 = RnModuleSpec::uniform(&[
            ("a", 0, FiberNorm::Euclidean),
            ("b", 0, FiberNorm::Euclidean),
        ])
        .unwrap();
        assert!(spec00.unit_section().is_err());
    }

    #[test]
    fn module_distance_examples() {
        let spec = spec_2_1();
        let x = spec.element(vec![vec![1.0, 0.0], vec![0.5]]).unwrap();
        assert_eq!(module_distance(&x, &x), 0.0);
        // distance driven by the norm of the difference
        let y = spec.element(vec![vec![3.0, 0.0], vec![0.0]]).unwrap();
        // |x - y| has norms (2, 0.5) and weights are 0.5 each
        assert!((module_distance(&x, &y) - 0.75).abs() < 1e-15);
        let masked = module_scale(&spec.space().indicator(&spec.space().empty_event()), &x);
        assert_eq!(module_distance(&masked, &spec.zero()), 0.0);
    }

    #[test]
    fn pnorm_values() {
        let n = FiberNorm::PNorm(3.0);
        let v = [1.0, 1.0];
        assert!((n.eval(&v) - 2f64.powf(1.0 / 3.0)).abs() < 1e-15);
        assert!((n.eval_dual(&v) - 2f64.powf(2.0 / 3.0)).abs() < 1e-15);
        let one = FiberNorm::PNorm(1.0);
        assert_eq!(one.eval(&[3.0, -4.0]), 7.0);
        assert_eq!(one.eval_dual(&[3.0, -4.0]), 4.0);
        assert!(FiberNorm::PNorm(0.5).validate().is_err());
        assert!(FiberNorm::PNorm(f64::INFINITY).validate().is_err());
    }
}
