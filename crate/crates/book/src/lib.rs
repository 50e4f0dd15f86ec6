//! Runs the Rust blocks of the guide in `book/` as doctests.

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/quantities.md")]
pub mod quantities {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/pencils.md")]
pub mod pencils {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/certificates.md")]
pub mod certificates {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/interpolation.md")]
pub mod interpolation {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/solver.md")]
pub mod solver {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/verification.md")]
pub mod verification {}
