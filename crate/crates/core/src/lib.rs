//! Preprocessing operators that turn literal-bearing knowledge graphs into
//! purely relational graphs.

pub mod augment;
pub mod baselines;
pub mod binning;
pub mod graph;
pub mod image;
pub mod pipeline;
pub mod rdf;
pub mod subpopulation;
pub mod temporal;
pub mod text;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/graphs.md")]
    mod graphs {}
    #[doc = include_str!("../../../book/src/baselines.md")]
    mod baselines {}
    #[doc = include_str!("../../../book/src/numbers.md")]
    mod numbers {}
    #[doc = include_str!("../../../book/src/subpopulations.md")]
    mod subpopulations {}
    #[doc = include_str!("../../../book/src/dates.md")]
    mod dates {}
    #[doc = include_str!("../../../book/src/text.md")]
    mod text {}
    #[doc = include_str!("../../../book/src/images.md")]
    mod images {}
    #[doc = include_str!("../../../book/src/pipeline.md")]
    mod pipeline {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
