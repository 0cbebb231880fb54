//! Finite atomic probability space, events, and the L0 lattice/metric algebra.
//!
//! Everything downstream works over a `FiniteProbSpace`: finitely many atoms, each of
//! strictly positive mass. On such a space every event equivalence class has a unique
//! representative and essential suprema/infima over finite families are pointwise, so
//! the usual almost-sure objects become exactly computable. An `L0Real` is one real
//! value per atom; an `EventSet` is a subset of atoms.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use crate::error::{Error, Result};

const WEIGHT_SUM_TOL: f64 = 1e-12;

#[derive(Debug)]
struct SpaceInner {
    ids: Vec<String>,
    weights: Vec<f64>,
    index: BTreeMap<String, usize>,
}

/// A probability space with finitely many atoms of strictly positive weight.
#[derive(Clone, Debug)]
pub struct FiniteProbSpace {
    inner: Arc<SpaceInner>,
}

impl FiniteProbSpace {
    /// Builds a space from `(id, weight)` pairs. Weights must be strictly positive,
    /// the ids distinct, and the weights must sum to 1 within 1e-12.
    pub fn new(atoms: Vec<(String, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::schema("space must have at least one atom"));
        }
        let mut index = BTreeMap::new();
        let mut ids = Vec::with_capacity(atoms.len());
        let mut weights = Vec::with_capacity(atoms.len());
        for (i, (id, w)) in atoms.into_iter().enumerate() {
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::schema(format!(
                    "atom '{id}' has non-positive weight {w}"
                )));
            }
            if index.insert(id.clone(), i).is_some() {
                return Err(Error::schema(format!("duplicate atom id '{id}'")));
            }
            ids.push(id);
            weights.push(w);
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::schema(format!(
                "atom weights sum to {sum}, expected 1 within {WEIGHT_SUM_TOL:e}"
            )));
        }
        Ok(FiniteProbSpace {
            inner: Arc::new(SpaceInner {
                ids,
                weights,
                index,
            }),
        })
    }

    /// Uniform space over the given ids.
    pub fn uniform(ids: &[&str]) -> Result<Self> {
        let n = ids.len();
        let w = 1.0 / n as f64;
        // Distribute the rounding residue onto the first atom so the sum is exactly 1.
        let mut atoms: Vec<(String, f64)> = ids.iter().map(|id| (id.to_string(), w)).collect();
        let sum: f64 = atoms.iter().map(|(_, w)| *w).sum();
        if let Some(first) = atoms.first_mut() {
            first.1 += 1.0 - sum;
        }
        FiniteProbSpace::new(atoms)
    }

    pub fn len(&self) -> usize {
        self.inner.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inner.ids.is_empty()
    }

    pub fn atom_ids(&self) -> &[String] {
        &self.inner.ids
    }

    pub fn id(&self, idx: usize) -> &str {
        &self.inner.ids[idx]
    }

    pub fn weight(&self, idx: usize) -> f64 {
        self.inner.weights[idx]
    }

    pub fn weights(&self) -> &[f64] {
        &self.inner.weights
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.inner.index.get(id).copied()
    }

    /// Two handles denote the same space if they share storage or agree structurally.
    pub fn same(&self, other: &FiniteProbSpace) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.ids == other.inner.ids && self.inner.weights == other.inner.weights)
    }

    /// The event containing every atom.
    pub fn full_event(&self) -> EventSet {
        EventSet {
            space: self.clone(),
            mask: vec![true; self.len()],
        }
    }

    /// The empty event.
    pub fn empty_event(&self) -> EventSet {
        EventSet {
            space: self.clone(),
            mask: vec![false; self.len()],
        }
    }

    /// Event from a list of atom ids. Unknown ids are schema errors.
    pub fn event(&self, ids: &[&str]) -> Result<EventSet> {
        let mut mask = vec![false; self.len()];
        for id in ids {
            let idx = self
                .index_of(id)
                .ok_or_else(|| Error::schema(format!("atom id '{id}' not in space")))?;
            mask[idx] = true;
        }
        Ok(EventSet {
            space: self.clone(),
            mask,
        })
    }

    pub fn event_from_mask(&self, mask: Vec<bool>) -> Result<EventSet> {
        if mask.len() != self.len() {
            return Err(Error::schema("event mask length does not match space"));
        }
        Ok(EventSet {
            space: self.clone(),
            mask,
        })
    }

    pub fn event_where(&self, pred: impl Fn(usize) -> bool) -> EventSet {
        EventSet {
            space: self.clone(),
            mask: (0..self.len()).map(pred).collect(),
        }
    }

    /// The indicator random variable of an event.
    pub fn indicator(&self, event: &EventSet) -> L0Real {
        assert!(self.same(&event.space), "event belongs to another space");
        L0Real {
            space: self.clone(),
            values: event
                .mask
                .iter()
                .map(|&b| if b { 1.0 } else { 0.0 })
                .collect(),
        }
    }

    /// Constant random variable.
    pub fn constant(&self, v: f64) -> L0Real {
        L0Real {
            space: self.clone(),
            values: vec![v; self.len()],
        }
    }

    pub fn l0(&self, values: Vec<f64>) -> Result<L0Real> {
        if values.len() != self.len() {
            return Err(Error::schema(format!(
                "expected {} values, got {}",
                self.len(),
                values.len()
            )));
        }
        Ok(L0Real {
            space: self.clone(),
            values,
        })
    }
}

/// An event: a subset of atoms. Since all atoms carry positive weight, set equality
/// is equality of equivalence classes.
#[derive(Clone, Debug)]
pub struct EventSet {
    space: FiniteProbSpace,
    mask: Vec<bool>,
}

impl PartialEq for EventSet {
    fn eq(&self, other: &Self) -> bool {
        self.space.same(&other.space) && self.mask == other.mask
    }
}
impl Eq for EventSet {}

impl EventSet {
    pub fn space(&self) -> &FiniteProbSpace {
        &self.space
    }

    pub fn contains(&self, idx: usize) -> bool {
        self.mask[idx]
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.mask
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| if b { Some(i) } else { None })
    }

    pub fn ids(&self) -> Vec<&str> {
        self.indices().map(|i| self.space.id(i)).collect()
    }

    pub fn is_empty(&self) -> bool {
        !self.mask.iter().any(|&b| b)
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    /// P(E): total weight of the member atoms.
    pub fn weight(&self) -> f64 {
        self.indices().map(|i| self.space.weight(i)).sum()
    }

    pub fn union(&self, other: &EventSet) -> EventSet {
        self.zip(other, |a, b| a || b)
    }

    pub fn intersect(&self, other: &EventSet) -> EventSet {
        self.zip(other, |a, b| a && b)
    }

    pub fn minus(&self, other: &EventSet) -> EventSet {
        self.zip(other, |a, b| a && !b)
    }

    pub fn complement(&self) -> EventSet {
        EventSet {
            space: self.space.clone(),
            mask: self.mask.iter().map(|&b| !b).collect(),
        }
    }

    pub fn is_subset_of(&self, other: &EventSet) -> bool {
        assert!(self.space.same(&other.space), "events on different spaces");
        self.mask.iter().zip(&other.mask).all(|(&a, &b)| !a || b)
    }

    fn zip(&self, other: &EventSet, op: impl Fn(bool, bool) -> bool) -> EventSet {
        assert!(self.space.same(&other.space), "events on different spaces");
        EventSet {
            space: self.space.clone(),
            mask: self
                .mask
                .iter()
                .zip(&other.mask)
                .map(|(&a, &b)| op(a, b))
                .collect(),
        }
    }
}

/// An equivalence class of real random variables: one value per atom.
#[derive(Clone, Debug)]
pub struct L0Real {
    space: FiniteProbSpace,
    values: Vec<f64>,
}

impl PartialEq for L0Real {
    fn eq(&self, other: &Self) -> bool {
        self.space.same(&other.space) && self.values == other.values
    }
}

impl L0Real {
    pub fn space(&self) -> &FiniteProbSpace {
        &self.space
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> L0Real {
        L0Real {
            space: self.space.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &L0Real, f: impl Fn(f64, f64) -> f64) -> L0Real {
        assert!(self.space.same(&other.space), "values on different spaces");
        L0Real {
            space: self.space.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn abs(&self) -> L0Real {
        self.map(f64::abs)
    }

    pub fn scale(&self, c: f64) -> L0Real {
        self.map(|v| c * v)
    }

    /// Pointwise multiplication by an event indicator.
    pub fn masked(&self, event: &EventSet) -> L0Real {
        assert!(self.space.same(&event.space), "event on another space");
        L0Real {
            space: self.space.clone(),
            values: self
                .values
                .iter()
                .enumerate()
                .map(|(i, &v)| if event.mask[i] { v } else { 0.0 })
                .collect(),
        }
    }

    /// `self <= other` at every atom.
    pub fn le(&self, other: &L0Real) -> bool {
        assert!(self.space.same(&other.space), "values on different spaces");
        self.values.iter().zip(&other.values).all(|(&a, &b)| a <= b)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, &v| m.max(v.abs()))
    }
}

pub enum ExtremaMode {
    Sup,
    Inf,
}

/// Pointwise supremum or infimum of a nonempty family.
pub fn lattice_extrema(family: &[L0Real], mode: ExtremaMode) -> Result<L0Real> {
    let first = family
        .first()
        .ok_or_else(|| Error::precondition("lattice_extrema over an empty family"))?;
    for member in &family[1..] {
        if !first.space.same(&member.space) {
            return Err(Error::precondition(
                "lattice_extrema family members on different spaces",
            ));
        }
    }
    let mut values = first.values.clone();
    for member in &family[1..] {
        for (acc, &v) in values.iter_mut().zip(&member.values) {
            *acc = match mode {
                ExtremaMode::Sup => acc.max(v),
                ExtremaMode::Inf => acc.min(v),
            };
        }
    }
    Ok(L0Real {
        space: first.space.clone(),
        values,
    })
}

/// The event `[xi > 0]`. The comparison is exact; inputs are caller-provided reals.
pub fn strata_pos(xi: &L0Real) -> EventSet {
    EventSet {
        space: xi.space.clone(),
        mask: xi.values.iter().map(|&v| v > 0.0).collect(),
    }
}

/// Ky Fan-style metric `E[min(|xi - eta|, 1)]`, which metrizes convergence in
/// probability on a finite space.
pub fn kyfan_distance(xi: &L0Real, eta: &L0Real) -> f64 {
    assert!(xi.space.same(&eta.space), "values on different spaces");
    xi.values
        .iter()
        .zip(&eta.values)
        .zip(xi.space.weights())
        .map(|((&a, &b), &w)| w * (a - b).abs().min(1.0))
        .sum()
}

/// `xi <= eta` at every atom of `event` (vacuously true on the empty event).
pub fn leq_on(xi: &L0Real, eta: &L0Real, event: &EventSet) -> bool {
    assert!(xi.space.same(&eta.space), "values on different spaces");
    assert!(xi.space.same(&event.space), "event on another space");
    event.indices().all(|i| xi.values[i] <= eta.values[i])
}

macro_rules! impl_binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait for &L0Real {
            type Output = L0Real;
            fn $method(self, rhs: &L0Real) -> L0Real {
                self.zip_map(rhs, |a, b| a $op b)
            }
        }
        impl $trait for L0Real {
            type Output = L0Real;
            fn $method(self, rhs: L0Real) -> L0Real {
                (&self).$method(&rhs)
            }
        }
    };
}

impl_binop!(Add, add, +);
impl_binop!(Sub, sub, -);
impl_binop!(Mul, mul, *);

impl Neg for &L0Real {
    type Output = L0Real;
    fn neg(self) -> L0Real {
        self.map(|v| -v)
    }
}
impl Neg for L0Real {
    type Output = L0Real;
    fn neg(self) -> L0Real {
        -&self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_atoms() -> FiniteProbSpace {
        FiniteProbSpace::new(vec![("a".into(), 0.5), ("b".into(), 0.5)]).unwrap()
    }

    #[test]
    fn indicator_values() {
        let sp = two_atoms();
        let e = sp.event(&["a"]).unwrap();
        assert_eq!(sp.indicator(&e).values(), &[1.0, 0.0]);
        assert_eq!(sp.indicator(&sp.empty_event()).values(), &[0.0, 0.0]);
        assert_eq!(sp.indicator(&sp.full_event()).values(), &[1.0, 1.0]);
        // idempotent
        let i = sp.indicator(&e);
        assert_eq!((&i * &i).values(), i.values());
    }

    #[test]
    fn indicator_rejects_unknown_atom() {
        let sp = two_atoms();
        assert!(matches!(sp.event(&["zz"]), Err(Error::Schema(_))));
    }

    #[test]
    fn extrema_pointwise() {
        let sp = two_atoms();
        let x = sp.l0(vec![1.0, 3.0]).unwrap();
        let y = sp.l0(vec![2.0, 0.0]).unwrap();
        let sup = lattice_extrema(&[x.clone(), y.clone()], ExtremaMode::Sup).unwrap();
        let inf = lattice_extrema(&[x.clone(), y.clone()], ExtremaMode::Inf).unwrap();
        assert_eq!(sup.values(), &[2.0, 3.0]);
        assert_eq!(inf.values(), &[1.0, 0.0]);
        let single = lattice_extrema(&[sp.constant(5.0)], ExtremaMode::Sup).unwrap();
        assert_eq!(single.values(), &[5.0, 5.0]);
        assert!(lattice_extrema(&[], ExtremaMode::Sup).is_err());
        // sup + inf identity
        let total = &sup + &inf;
        assert_eq!(total.values(), (&x + &y).values());
    }

    #[test]
    fn strata_pos_exact() {
        let sp = two_atoms();
        assert_eq!(
            strata_pos(&sp.l0(vec![0.5, 0.0]).unwrap()),
            sp.event(&["a"]).unwrap()
        );
        assert!(strata_pos(&sp.constant(0.0)).is_empty());
        assert_eq!(
            strata_pos(&sp.l0(vec![2.0, -1.0]).unwrap()),
            sp.event(&["a"]).unwrap()
        );
    }

    #[test]
    fn kyfan_examples() {
        let sp = two_atoms();
        let zero = sp.constant(0.0);
        let eta = sp.l0(vec![2.0, 0.5]).unwrap();
        assert!((kyfan_distance(&zero, &eta) - 0.75).abs() < 1e-15);
        assert_eq!(kyfan_distance(&eta, &eta), 0.0);
        let c = sp.constant(0.2);
        assert!((kyfan_distance(&c, &zero) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn leq_on_examples() {
        let sp = two_atoms();
        let x = sp.l0(vec![1.0, 5.0]).unwrap();
        let y = sp.l0(vec![2.0, 0.0]).unwrap();
        assert!(leq_on(&x, &y, &sp.event(&["a"]).unwrap()));
        assert!(!leq_on(&x, &y, &sp.full_event()));
        assert!(leq_on(&x, &y, &sp.empty_event()));
    }

    #[test]
    fn weights_must_sum_to_one() {
        let bad = FiniteProbSpace::new(vec![("a".into(), 0.5), ("b".into(), 0.4)]);
        assert!(matches!(bad, Err(Error::Schema(_))));
        let neg = FiniteProbSpace::new(vec![("a".into(), 1.5), ("b".into(), -0.5)]);
        assert!(matches!(neg, Err(Error::Schema(_))));
    }

    #[test]
    fn convergence_in_probability_witness() {
        let sp = two_atoms();
        let xi = sp.l0(vec![1.0, -2.0]).unwrap();
        let eta = sp.l0(vec![3.0, 0.7]).unwrap();
        let mut last = f64::INFINITY;
        for n in 1..=64u32 {
            let xn = &xi + &eta.scale(1.0 / n as f64);
            let d = kyfan_distance(&xn, &xi);
            assert!(d <= last + 1e-15);
            last = d;
        }
        assert!(last < 0.05);
    }
}
