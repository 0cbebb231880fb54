//! Continuous local maps on the L0 algebra and the constructive stratified
//! intermediate value solver.
//!
//! On a finite atomic space a continuous local function decomposes into one
//! continuous scalar map per atom, so the lattice-infimum argument behind the
//! intermediate value theorem reduces to a classical per-atom bisection. The
//! per-atom representation makes locality hold by construction; `locality_audit`
//! measures it, including for deliberately non-local test doubles.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::{eval_scalar, ExprAst};
use crate::measure::{EventSet, FiniteProbSpace, L0Real};
use crate::search::seeded_rng;
use rand::Rng;

type AtomFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type GlobalFn = Arc<dyn Fn(&L0Real) -> L0Real + Send + Sync>;

enum Repr {
    /// One scalar map per atom.
    PerAtom(Vec<AtomFn>),
    /// A compiled expression with per-atom constant bindings.
    Compiled {
        ast: ExprAst,
        bindings: Vec<(String, L0Real)>,
    },
    /// An arbitrary map on L0. Not guaranteed local; used to exercise the audit.
    Global(GlobalFn),
}

/// A map from L0 to L0 supplied atom by atom (or as a compiled expression).
pub struct LocalFunction {
    space: FiniteProbSpace,
    repr: Repr,
}

impl LocalFunction {
    pub fn from_atom_fns(space: FiniteProbSpace, fns: Vec<AtomFn>) -> Result<Self> {
        if fns.len() != space.len() {
            return Err(Error::schema(format!(
                "expected {} atom functions, got {}",
                space.len(),
                fns.len()
            )));
        }
        Ok(LocalFunction {
            space,
            repr: Repr::PerAtom(fns),
        })
    }

    pub fn from_expr(
        space: FiniteProbSpace,
        ast: ExprAst,
        bindings: Vec<(String, L0Real)>,
    ) -> Result<Self> {
        for (name, value) in &bindings {
            if !value.space().same(&space) {
                return Err(Error::precondition(format!(
                    "binding '{name}' lives on a different space"
                )));
            }
        }
        Ok(LocalFunction {
            space,
            repr: Repr::Compiled { ast, bindings },
        })
    }

    /// Wraps an arbitrary L0 map. Such a function has no atomwise form and is
    /// rejected by the solver; it exists so the locality audit has something to
    /// catch.
    pub fn from_global(
        space: FiniteProbSpace,
        f: impl Fn(&L0Real) -> L0Real + Send + Sync + 'static,
    ) -> Self {
        LocalFunction {
            space,
            repr: Repr::Global(Arc::new(f)),
        }
    }

    pub fn space(&self) -> &FiniteProbSpace {
        &self.space
    }

    pub fn has_atomwise_form(&self) -> bool {
        !matches!(self.repr, Repr::Global(_))
    }

    /// Scalar evaluation at one atom. Only defined for atomwise representations.
    pub fn eval_at(&self, atom: usize, z: f64) -> Result<f64> {
        match &self.repr {
            Repr::PerAtom(fns) => Ok(fns[atom](z)),
            Repr::Compiled { ast, bindings } => {
                let lookup = |name: &str| {
                    bindings
                        .iter()
                        .find(|(n, _)| n == name)
                        .map(|(_, v)| v.get(atom))
                };
                eval_scalar(ast, &lookup, z).map_err(|message| Error::Domain {
                    atom: self.space.id(atom).to_string(),
                    message,
                })
            }
            Repr::Global(_) => Err(Error::precondition("function has no atomwise form")),
        }
    }

    pub fn eval(&self, x: &L0Real) -> Result<L0Real> {
        if !x.space().same(&self.space) {
            return Err(Error::precondition("argument lives on a different space"));
        }
        match &self.repr {
            Repr::Global(f) => Ok(f(x)),
            _ => {
                let mut values = Vec::with_capacity(self.space.len());
                for i in 0..self.space.len() {
                    values.push(self.eval_at(i, x.get(i))?);
                }
                self.space.l0(values)
            }
        }
    }
}

const MAX_BISECT_ITERS: usize = 200;

/// Solves `f(eta) = xi` with `Y1 <= eta <= Y2` atomwise.
///
/// Preconditions are checked per atom: `Y1 <= Y2` and `xi` inside
/// `[f(Y1) /\ f(Y2), f(Y1) \/ f(Y2)]`. An endpoint whose residual already meets
/// `tol` is returned before the bracket test, so targets a rounding error past an
/// endpoint value do not fail. Each atom is solved by bisection with the
/// orientation folded into a sign flip; the two solves of `(f, xi)` and
/// `(-f, -xi)` therefore walk identical intervals.
pub fn solve_ivt(
    f: &LocalFunction,
    y1: &L0Real,
    y2: &L0Real,
    xi: &L0Real,
    tol: f64,
) -> Result<L0Real> {
    if !(tol > 0.0) {
        return Err(Error::precondition("tolerance must be positive"));
    }
    if !f.has_atomwise_form() {
        return Err(Error::precondition(
            "solver requires an atomwise-local function",
        ));
    }
    let space = f.space();
    for v in [y1, y2, xi] {
        if !v.space().same(space) {
            return Err(Error::precondition("inputs live on different spaces"));
        }
    }
    let mut out = Vec::with_capacity(space.len());
    for i in 0..space.len() {
        let a = y1.get(i);
        let b = y2.get(i);
        if a > b {
            return Err(Error::precondition(format!(
                "Y1 > Y2 at atom '{}'",
                space.id(i)
            )));
        }
        let t = xi.get(i);
        let ga = f.eval_at(i, a)?;
        if (ga - t).abs() <= tol {
            out.push(a);
            continue;
        }
        let gb = f.eval_at(i, b)?;
        if (gb - t).abs() <= tol {
            out.push(b);
            continue;
        }
        if t < ga.min(gb) || t > ga.max(gb) {
            return Err(Error::precondition(format!(
                "target {t} outside [{}, {}] at atom '{}'",
                ga.min(gb),
                ga.max(gb),
                space.id(i)
            )));
        }
        // Orientation-normalized bisection: h = sign(f(b) - f(a)) * (f - t).
        let sgn = if gb >= ga { 1.0 } else { -1.0 };
        let mut lo = a;
        let mut hi = b;
        let mut eta = None;
        for _ in 0..MAX_BISECT_ITERS {
            let mid = 0.5 * (lo + hi);
            let gm = f.eval_at(i, mid)?;
            if (gm - t).abs() <= tol {
                eta = Some(mid);
                break;
            }
            if sgn * (gm - t) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let eta = match eta {
            Some(v) => v,
            None => {
                let mid = 0.5 * (lo + hi);
                let gm = f.eval_at(i, mid)?;
                if (gm - t).abs() <= tol {
                    mid
                } else {
                    return Err(Error::Convergence(format!(
                        "residual {} above tolerance {tol} at atom '{}' after {MAX_BISECT_ITERS} iterations",
                        (gm - t).abs(),
                        space.id(i)
                    )));
                }
            }
        };
        out.push(eta);
    }
    space.l0(out)
}

/// Outcome of a locality audit.
#[derive(Clone, Debug)]
pub struct LocalityReport {
    pub trials: usize,
    pub seed: u64,
    pub max_deviation: f64,
    /// Trials whose deviation exceeded 1e-12.
    pub failures: usize,
}

/// Measures `d(I_A f(x), I_A f(I_A x))` over random `x` and random events `A`.
/// Atomwise-constructed functions report zero deviation; a map that lets one atom
/// read another's value is flagged.
pub fn locality_audit(f: &LocalFunction, trials: usize, seed: u64) -> Result<LocalityReport> {
    if trials < 1 {
        return Err(Error::precondition("locality_audit needs trials >= 1"));
    }
    let space = f.space();
    let mut rng = seeded_rng(seed, 0);
    let mut max_deviation = 0.0f64;
    let mut failures = 0usize;
    for _ in 0..trials {
        let x = space.l0((0..space.len()).map(|_| rng.gen_range(-4.0..4.0)).collect())?;
        let mask: Vec<bool> = (0..space.len()).map(|_| rng.gen()).collect();
        let event = space.event_from_mask(mask)?;
        let lhs = f.eval(&x)?.masked(&event);
        let rhs = f.eval(&x.masked(&event))?.masked(&event);
        // Ky Fan distance with an equality short-circuit so matching infinities
        // and NaNs (possible under exp overflow) compare as zero.
        let mut dev = 0.0;
        for i in 0..space.len() {
            let (a, b) = (lhs.get(i), rhs.get(i));
            let same = a == b || (a.is_nan() && b.is_nan());
            if !same {
                dev += space.weight(i) * (a - b).abs().min(1.0);
            }
        }
        if dev > 1e-12 {
            failures += 1;
        }
        max_deviation = max_deviation.max(dev);
    }
    Ok(LocalityReport {
        trials,
        seed,
        max_deviation,
        failures,
    })
}

/// Restriction of a solve to a stratum: masking the problem by an event and
/// solving agrees on that event with the unmasked solution.
pub fn masked_problem(f: &LocalFunction, event: &EventSet) -> Result<LocalFunction> {
    if !f.has_atomwise_form() {
        return Err(Error::precondition(
            "masking requires an atomwise-local function",
        ));
    }
    let space = f.space().clone();
    let mut fns: Vec<AtomFn> = Vec::with_capacity(space.len());
    for i in 0..space.len() {
        if event.contains(i) {
            // Rebuild a per-atom closure over the existing representation.
            let g = match &f.repr {
                Repr::PerAtom(v) => v[i].clone(),
                Repr::Compiled { ast, bindings } => {
                    let ast = ast.clone();
                    let consts: Vec<(String, f64)> = bindings
                        .iter()
                        .map(|(n, v)| (n.clone(), v.get(i)))
                        .collect();
                    Arc::new(move |z: f64| {
                        let lookup =
                            |name: &str| consts.iter().find(|(n, _)| n == name).map(|(_, v)| *v);
                        eval_scalar(&ast, &lookup, z).unwrap_or(f64::NAN)
                    }) as AtomFn
                }
                Repr::Global(_) => unreachable!(),
            };
            fns.push(g);
        } else {
            fns.push(Arc::new(|_| 0.0));
        }
    }
    LocalFunction::from_atom_fns(space, fns)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;

    fn space2() -> FiniteProbSpace {
        FiniteProbSpace::uniform(&["a", "b"]).unwrap()
    }

    #[test]
    fn cube_roots() {
        let sp = space2();
        let f = LocalFunction::from_expr(sp.clone(), parse_expr("x^3").unwrap(), vec![]).unwrap();
        let eta = solve_ivt(
            &f,
            &sp.constant(-2.0),
            &sp.constant(2.0),
            &sp.l0(vec![1.0, 8.0]).unwrap(),
            1e-9,
        )
        .unwrap();
        assert!((eta.get(0) - 1.0).abs() < 1e-9);
        assert!((eta.get(1) - 2.0).abs() < 1e-9);
    }

    #[test]
    fn mixed_orientation() {
        let sp = space2();
        let f = LocalFunction::from_atom_fns(sp.clone(), vec![Arc::new(|z| z), Arc::new(|z| -z)])
            .unwrap();
        let eta = solve_ivt(
            &f,
            &sp.constant(0.0),
            &sp.constant(1.0),
            &sp.l0(vec![0.5, -0.5]).unwrap(),
            1e-9,
        )
        .unwrap();
        assert!((eta.get(0) - 0.5).abs() < 1e-9);
        assert!((eta.get(1) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn nonunique_root_contract_only() {
        let sp = space2();
        let f =
            LocalFunction::from_expr(sp.clone(), parse_expr("x^3 - x").unwrap(), vec![]).unwrap();
        let y1 = sp.constant(-2.0);
        let y2 = sp.constant(2.0);
        let eta = solve_ivt(&f, &y1, &y2, &sp.constant(0.0), 1e-9).unwrap();
        for i in 0..2 {
            let e = eta.get(i);
            assert!((-2.0..=2.0).contains(&e));
            let r = e * e * e - e;
            assert!(r.abs() <= 1e-9);
        }
    }

    #[test]
    fn degenerate_interval_returns_y1() {
        let sp = space2();
        let f = LocalFunction::from_expr(sp.clone(), parse_expr("x^2").unwrap(), vec![]).unwrap();
        let y = sp.constant(3.0);
        let eta = solve_ivt(&f, &y, &y, &sp.constant(9.0), 1e-9).unwrap();
        assert_eq!(eta.values(), &[3.0, 3.0]);
    }

    #[test]
    fn bracket_violation_names_atom() {
        let sp = space2();
        let f = LocalFunction::from_expr(sp.clone(), parse_expr("x").unwrap(), vec![]).unwrap();
        let err = solve_ivt(
            &f,
            &sp.constant(0.0),
            &sp.constant(1.0),
            &sp.l0(vec![0.5, 7.0]).unwrap(),
            1e-9,
        )
        .unwrap_err();
        match err {
            Error::Precondition(msg) => assert!(msg.contains("atom 'b'"), "{msg}"),
            other => panic!("expected precondition error, got {other:?}"),
        }
    }

    #[test]
    fn orientation_symmetry() {
        let sp = space2();
        let f = LocalFunction::from_atom_fns(
            sp.clone(),
            vec![
                Arc::new(|z: f64| z.powi(3) + 0.5 * z),
                Arc::new(|z: f64| z.sin() + 0.2 * z),
            ],
        )
        .unwrap();
        let g = LocalFunction::from_atom_fns(
            sp.clone(),
            vec![
                Arc::new(|z: f64| -(z.powi(3) + 0.5 * z)),
                Arc::new(|z: f64| -(z.sin() + 0.2 * z)),
            ],
        )
        .unwrap();
        let y1 = sp.constant(-1.5);
        let y2 = sp.constant(1.5);
        let xi = sp.l0(vec![0.7, -0.3]).unwrap();
        let eta_f = solve_ivt(&f, &y1, &y2, &xi, 1e-11).unwrap();
        let eta_g = solve_ivt(&g, &y1, &y2, &xi.scale(-1.0), 1e-11).unwrap();
        assert_eq!(eta_f.values(), eta_g.values());
    }

    #[test]
    fn discontinuous_map_reports_convergence_failure() {
        let sp = space2();
        // Jump over the target: no point attains residual <= tol.
        let f = LocalFunction::from_atom_fns(
            sp.clone(),
            vec![
                Arc::new(|z: f64| if z < 0.25 { 0.0 } else { 1.0 }),
                Arc::new(|z| z),
            ],
        )
        .unwrap();
        let err = solve_ivt(
            &f,
            &sp.constant(0.0),
            &sp.constant(1.0),
            &sp.l0(vec![0.5, 0.5]).unwrap(),
            1e-9,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Convergence(_)));
    }

    #[test]
    fn locality_audit_compiled_is_exact() {
        let sp = space2();
        let f = LocalFunction::from_expr(
            sp.clone(),
            parse_expr("min(x, 1) * c + x^2").unwrap(),
            vec![("c".into(), sp.l0(vec![2.0, -1.0]).unwrap())],
        )
        .unwrap();
        let report = locality_audit(&f, 200, 9).unwrap();
        assert_eq!(report.max_deviation, 0.0);
        assert_eq!(report.failures, 0);
    }

    #[test]
    fn locality_audit_flags_nonlocal_double() {
        let sp = space2();
        // Atom a reads atom b's value.
        let f = LocalFunction::from_global(sp.clone(), |x: &L0Real| {
            x.space()
                .l0(vec![x.get(1), x.get(1)])
                .expect("fixed length")
        });
        let report = locality_audit(&f, 200, 9).unwrap();
        assert!(report.max_deviation > 0.0);
        assert!(report.failures > 0);
    }

    #[test]
    fn localized_solution_agrees_on_stratum() {
        let sp = space2();
        let f =
            LocalFunction::from_expr(sp.clone(), parse_expr("x^3 + x").unwrap(), vec![]).unwrap();
        let y1 = sp.constant(-2.0);
        let y2 = sp.constant(2.0);
        let xi = sp.l0(vec![1.0, -2.0]).unwrap();
        let full = solve_ivt(&f, &y1, &y2, &xi, 1e-12).unwrap();
        let d = sp.event(&["a"]).unwrap();
        let masked_f = masked_problem(&f, &d).unwrap();
        let masked = solve_ivt(
            &masked_f,
            &y1.masked(&d),
            &y2.masked(&d),
            &xi.masked(&d),
            1e-12,
        )
        .unwrap();
        for i in d.indices() {
            assert_eq!(full.get(i), masked.get(i));
        }
    }
}
