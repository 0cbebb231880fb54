//! L0-independence of element pairs, the dependence/independence decomposition,
//! the grand stratum of quasi-rank >= 2, and the companion construction.

use crate::error::{Error, Result};
use crate::measure::{EventSet, L0Real};
use crate::module::supports;
use crate::module::{ModuleElement, RnModuleSpec};

const RANK_TOL: f64 = 1e-10;

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, &x| m.max(x.abs()))
}

/// Largest 2x2 minor test: two fiber vectors are independent when some minor
/// exceeds 1e-10 relative to the vector magnitudes.
pub(crate) fn fibers_independent(u: &[f64], v: &[f64]) -> bool {
    if u.len() < 2 {
        return false;
    }
    let scale = max_abs(u) * max_abs(v);
    if scale == 0.0 {
        return false;
    }
    let mut largest = 0.0f64;
    for i in 0..u.len() {
        for j in (i + 1)..u.len() {
            let minor = (u[i] * v[j] - u[j] * v[i]).abs();
            largest = largest.max(minor);
        }
    }
    largest > RANK_TOL * scale
}

/// `x` and `y` are L0-independent on `event`: linearly independent fibers at every
/// atom of the (nonempty) event.
pub fn is_independent(x: &ModuleElement, y: &ModuleElement, event: &EventSet) -> Result<bool> {
    if event.is_empty() {
        return Err(Error::precondition(
            "independence is only defined on a nonempty event",
        ));
    }
    Ok(event
        .indices()
        .all(|i| fibers_independent(x.fiber(i), y.fiber(i))))
}

/// Dependence stratum of a pair together with coefficients witnessing the
/// dependence there. On `F` the combination `xi*x + eta*y` vanishes with both
/// coefficients nonzero; off `F` (within `A_xy`) the pair is independent.
#[derive(Clone, Debug)]
pub struct IndependencePart {
    /// Stratum of `A_xy` where the fibers are dependent.
    pub dependence: EventSet,
    pub xi: L0Real,
    pub eta: L0Real,
    /// `A_xy \ F`: the stratum where the pair is independent.
    pub independent_part: EventSet,
}

/// Splits `A_xy` into the dependence stratum `F` (with explicit coefficients) and
/// its complement, on which the pair is independent.
pub fn independent_part(x: &ModuleElement, y: &ModuleElement) -> Result<IndependencePart> {
    let s = supports(x, Some(y));
    let a_xy = s.a_xy.expect("pair supports requested");
    if a_xy.weight() <= 0.0 {
        return Err(Error::precondition("independent_part requires P(A_xy) > 0"));
    }
    let space = x.spec().space();
    let mut mask = vec![false; space.len()];
    let mut xi = vec![0.0; space.len()];
    let mut eta = vec![0.0; space.len()];
    for i in a_xy.indices() {
        let u = x.fiber(i);
        let v = y.fiber(i);
        if !fibers_independent(u, v) {
            mask[i] = true;
            // y = gamma * x on the dependence stratum; pin eta = -1.
            let dot_xy: f64 = u.iter().zip(v).map(|(&a, &b)| a * b).sum();
            let dot_xx: f64 = u.iter().map(|&a| a * a).sum();
            xi[i] = dot_xy / dot_xx;
            eta[i] = -1.0;
        }
    }
    let dependence = space.event_from_mask(mask)?;
    let independent = a_xy.minus(&dependence);
    Ok(IndependencePart {
        dependence,
        xi: space.l0(xi)?,
        eta: space.l0(eta)?,
        independent_part: independent,
    })
}

/// The grand stratum G(S): atoms whose fiber carries an independent pair, which on
/// concrete fibers is exactly dimension >= 2.
pub fn grand_stratum(spec: &RnModuleSpec) -> EventSet {
    spec.space().event_where(|i| spec.dim(i) >= 2)
}

fn euclid_dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Companion direction of a single unit fiber vector: the first standard basis
/// vector not collinear with `u`, orthogonalized against `u`, oriented so the
/// leading 2x2 minor of the pair is positive, and normalized in the fiber norm.
pub(crate) fn companion_fiber(norm: crate::module::FiberNorm, u: &[f64]) -> Option<Vec<f64>> {
    let d = u.len();
    if d < 2 {
        return None;
    }
    let mut basis_idx = None;
    for k in 0..d {
        let mut e = vec![0.0; d];
        e[k] = 1.0;
        if fibers_independent(u, &e) {
            basis_idx = Some(k);
            break;
        }
    }
    let k = basis_idx?;
    let mut w = vec![0.0; d];
    w[k] = 1.0;
    let uu = euclid_dot(u, u);
    let proj = euclid_dot(&w, u) / uu;
    for (wi, &ui) in w.iter_mut().zip(u) {
        *wi -= proj * ui;
    }
    // Orient: the first coordinate pair with a nonzero minor determines the sign.
    'outer: for i in 0..d {
        for j in (i + 1)..d {
            let minor = u[i] * w[j] - u[j] * w[i];
            if minor.abs() > 1e-14 {
                if minor < 0.0 {
                    for wi in w.iter_mut() {
                        *wi = -*wi;
                    }
                }
                break 'outer;
            }
        }
    }
    let n = norm.eval(&w);
    Some(w.iter().map(|&x| x / n).collect())
}

/// Given `u` with `\|u\| = I_{G(S)}`, builds `v` with the same norm that is
/// independent of `u` at every atom of the grand stratum.
pub fn companion(u: &ModuleElement) -> Result<ModuleElement> {
    let spec = u.spec();
    let g = grand_stratum(spec);
    if g.weight() <= 0.0 {
        return Err(Error::precondition("companion requires P(G(S)) > 0"));
    }
    let norm = u.random_norm();
    for i in 0..spec.space().len() {
        let expected = if g.contains(i) { 1.0 } else { 0.0 };
        if (norm.get(i) - expected).abs() > 1e-12 {
            return Err(Error::precondition(format!(
                "companion requires \u{2016}u\u{2016} = I_G(S); atom '{}' has norm {}",
                spec.space().id(i),
                norm.get(i)
            )));
        }
    }
    let mut out = spec.zero();
    for i in g.indices() {
        let v = companion_fiber(spec.norm(i), u.fiber(i)).ok_or_else(|| {
            Error::precondition(format!(
                "no companion direction at atom '{}'",
                spec.space().id(i)
            ))
        })?;
        out.set_fiber(i, v)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::module::{sphere_membership, FiberNorm};

    fn spec_2_1() -> RnModuleSpec {
        RnModuleSpec::uniform(&[
            ("a", 2, FiberNorm::Euclidean),
            ("b", 1, FiberNorm::Euclidean),
        ])
        .unwrap()
    }

    #[test]
    fn independence_examples() {
        let spec = spec_2_1();
        let x = spec.element(vec![vec![1.0, 0.0], vec![1.0]]).unwrap();
        let y = spec.element(vec![vec![0.0, 1.0], vec![2.0]]).unwrap();
        let ea = spec.space().event(&["a"]).unwrap();
        let eb = spec.space().event(&["b"]).unwrap();
        assert!(is_independent(&x, &y, &ea).unwrap());
        let y2 = spec.element(vec![vec![2.0, 0.0], vec![2.0]]).unwrap();
        assert!(!is_independent(&x, &y2, &ea).unwrap());
        // two scalars are always dependent
        assert!(!is_independent(&x, &y, &eb).unwrap());
        assert!(is_independent(&x, &y, &spec.space().empty_event()).is_err());
    }

    #[test]
    fn independent_part_examples() {
        let spec = spec_2_1();
        let x = spec.element(vec![vec![1.0, 0.0], vec![1.0]]).unwrap();
        let y = spec.element(vec![vec![0.0, 1.0], vec![2.0]]).unwrap();
        let part = independent_part(&x, &y).unwrap();
        assert_eq!(part.dependence, spec.space().event(&["b"]).unwrap());
        assert_eq!(part.xi.get(1), 2.0);
        assert_eq!(part.eta.get(1), -1.0);
        // xi*x + eta*y = 2*1 - 1*2 = 0 at b.
        assert!((part.xi.get(1) * 1.0 + part.eta.get(1) * 2.0).abs() < 1e-10);

        // fully independent on A_xy
        let spec22 = RnModuleSpec::uniform(&[
            ("a", 2, FiberNorm::Euclidean),
            ("b", 2, FiberNorm::Euclidean),
        ])
        .unwrap();
        let x = spec22
            .element(vec![vec![1.0, 0.0], vec![1.0, 1.0]])
            .unwrap();
        let y = spec22
            .element(vec![vec![0.0, 1.0], vec![1.0, -1.0]])
            .unwrap();
        let part = independent_part(&x, &y).unwrap();
        assert!(part.dependence.is_empty());

        // fully dependent: y = 2x
        let y = x.scaled(&spec22.space().constant(2.0));
        let part = independent_part(&x, &y).unwrap();
        assert_eq!(part.dependence, spec22.space().full_event());
        assert!(part.independent_part.is_empty());
    }

    #[test]
    fn grand_stratum_by_dimension() {
        let spec = spec_2_1();
        assert_eq!(grand_stratum(&spec), spec.space().event(&["a"]).unwrap());
        let spec11 = RnModuleSpec::uniform(&[
            ("a", 1, FiberNorm::Euclidean),
            ("b", 1, FiberNorm::Euclidean),
        ])
        .unwrap();
        assert!(grand_stratum(&spec11).is_empty());
        let spec23 = RnModuleSpec::uniform(&[
            ("a", 2, FiberNorm::Euclidean),
            ("b", 3, FiberNorm::Euclidean),
        ])
        .unwrap();
        assert_eq!(grand_stratum(&spec23), spec23.space().full_event());
        // witness pair at each dim >= 2 atom: the first two basis vectors
        for i in grand_stratum(&spec23).indices() {
            let d = spec23.dim(i);
            let mut e1 = vec![0.0; d];
            let mut e2 = vec![0.0; d];
            e1[0] = 1.0;
            e2[1] = 1.0;
            assert!(fibers_independent(&e1, &e2));
        }
    }

    #[test]
    fn companion_examples() {
        let spec = spec_2_1();
        // G(S) = {a}; u must vanish at b.
        let u = spec.element(vec![vec![1.0, 0.0], vec![0.0]]).unwrap();
        let v = companion(&u).unwrap();
        assert_eq!(v.fiber(0), &[0.0, 1.0]);

        let u = spec.element(vec![vec![0.6, 0.8], vec![0.0]]).unwrap();
        let v = companion(&u).unwrap();
        assert!((v.fiber(0)[0] + 0.8).abs() < 1e-12);
        assert!((v.fiber(0)[1] - 0.6).abs() < 1e-12);
        assert_eq!(sphere_membership(&v).unwrap(), grand_stratum(&spec));
        assert!(is_independent(&u, &v, &grand_stratum(&spec)).unwrap());

        let spec11 = RnModuleSpec::uniform(&[
            ("a", 1, FiberNorm::Euclidean),
            ("b", 1, FiberNorm::Euclidean),
        ])
        .unwrap();
        let u = spec11.unit_section().unwrap();
        assert!(companion(&u).is_err());
    }
}
