//! Random normed modules over finite atomic probability spaces, made computable:
//! the L0 random-variable algebra, concrete modules with per-atom fiber norms,
//! the random conjugate space with exact norming functionals, a constructive
//! stratified intermediate value solver, modulus-of-random-convexity estimators
//! in four variants, and the derived Lp space with uniform-convexity audits.

pub mod convexity;
pub mod dual;
pub mod error;
pub mod expr;
pub mod ivt;
pub mod json;
pub mod lp;
pub mod measure;
pub mod module;
pub mod rank;
pub(crate) mod search;
pub mod verify;

pub use convexity::{
    equalize_pair, euclid_modulus_oracle, halfbound_check, modulus_estimate,
    modulus_estimate_report, prescribe_gap, rotate_pair, HalfboundReport, ModulusQuery,
    ModulusReport, ModulusVariant, SearchConfig,
};
pub use dual::{
    dual_norm, eval_functional, norm_attaining, norming_direction, sup_formula_check,
    RandomFunctional, SupFormulaReport,
};
pub use error::{Error, Result};
pub use expr::{eval_expr, parse_expr, ExprAst};
pub use ivt::{locality_audit, solve_ivt, LocalFunction, LocalityReport};
pub use lp::{
    lp_modulus_estimate, lp_norm, uniform_convexity_audit, ConvexityAuditReport, LpModulusReport,
    LpSpace,
};
pub use measure::{
    kyfan_distance, lattice_extrema, leq_on, strata_pos, EventSet, ExtremaMode, FiniteProbSpace,
    L0Real,
};
pub use module::{
    module_distance, module_scale, random_norm, sphere_membership, supports, FiberNorm,
    ModuleElement, RnModuleSpec, Supports,
};
pub use rank::{companion, grand_stratum, independent_part, is_independent, IndependencePart};
pub use verify::{run_suite, CheckLine, SuiteReport, SUITES};
