//! Metric temporal conjunctive queries over temporal ABoxes.

pub mod eval;
pub mod formula;
pub mod interval;
pub mod next_form;
pub mod prove;
pub mod rules;

pub use eval::{compute_rulers, eval_formula, eval_mtcq, PointOracle, TemporalError};
pub use formula::{AnnotatedFormula, Formula, Mtcq, TemporalAbox, TemporalFact};
pub use interval::{coalesce, intervals_from_points, Interval, IntervalError, OpRange};
pub use next_form::expand_next_form;
pub use prove::{proof_window, prove_formula, temporal_min_proof, tree_size_bound, tree_size_bound_parameters};
pub use rules::{infer_temporal, infer_tmp, TemporalChecker, TemporalRule, TemporalTheory};
