//! Agent-based simulator of an influence game on graphs: agents pay one
//! another to adopt opinions and are rewarded for ending in the global
//! majority.
//!
//! See the guide under `book/` for the model and the config format.

pub mod engine;
pub mod experiments;
pub mod graph;
pub mod metrics;
pub mod scenarios;
pub mod seeds;

// The guide's code blocks run as doc-tests, one module per chapter.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/game.md")]
    mod game {}
    #[doc = include_str!("../../../book/src/graphs.md")]
    mod graphs {}
    #[doc = include_str!("../../../book/src/scenarios.md")]
    mod scenarios {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/reproducibility.md")]
    mod reproducibility {}
}
