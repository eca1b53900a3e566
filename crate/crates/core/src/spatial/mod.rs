//! Exact evaluation of spatial terms and formulas on one frame.
//!
//! Boxes are closed sets. Regions are represented on a grid compressed to
//! the box edges that matter for the expression being evaluated, so every
//! Boolean combination is exact.

mod eval;
mod region;

pub use eval::{
    eval_formula, resolve_term, term_distance, BoundValue, Binding, EvalContext, EvalError,
};
pub use region::{min_region_distance, Rect, RegionSet};
