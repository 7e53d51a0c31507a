//! Executable SC and PSO semantics for a small concurrent language, with a
//! bounded state-space explorer, history compatibility checking and fence
//! planning.

pub mod corpus;
pub mod explore;
pub mod expr;
pub mod fence;
pub mod history;
pub mod lang;
pub mod machine;
pub mod par;
pub mod pso;
pub mod sc;
pub mod syntax;
pub mod value;
