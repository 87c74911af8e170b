//! Basic diagrams, their rational linear combinations, the index DSL and
//! canonical forms.

mod basic;
mod cache;
mod index_expr;
mod parse;
mod render;
mod sum;

pub use basic::{BasicDiagram, Leg, LegSignature, Mode, VertexLabel};
pub use index_expr::{
    to_index_expression, ExprMode, IndexExpression, IndexFactor, IndexTerm, Variance,
};
pub use parse::parse;
pub use render::{render_dot, render_dsl};
pub use sum::{q, Coeff, DiagramSum};
