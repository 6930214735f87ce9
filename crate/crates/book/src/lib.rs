//! Runs every snippet of the guide in `book/src` as a doctest, one module
//! per chapter so failures point at their chapter.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/grid.md")]
pub mod grid {}
#[doc = include_str!("../../../book/src/spectral.md")]
pub mod spectral {}
#[doc = include_str!("../../../book/src/noise.md")]
pub mod noise {}
#[doc = include_str!("../../../book/src/dynamics.md")]
pub mod dynamics {}
#[doc = include_str!("../../../book/src/comparison.md")]
pub mod comparison {}
#[doc = include_str!("../../../book/src/montecarlo.md")]
pub mod montecarlo {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
