//! Scattered linear sets over finite fields and the MRD codes they define.
//!
//! See the guide in `book/` for a walk through the modules.

pub mod error;
pub mod fields;
pub mod constructions;
pub mod fp;
pub mod linmaps;
pub mod linsets;
pub mod rankcodes;
pub mod serial;

pub use error::{Error, Result};
pub use fields::{FieldElement, FieldTower, Frame};
pub use linmaps::{BasisTag, LinearMapMatrix, LinearizedPoly, QBasis};
pub use linsets::{Ambient, SubspaceQ, WeightReport};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/fields.md")]
    mod fields {}
    #[doc = include_str!("../../../book/src/linmaps.md")]
    mod linmaps {}
    #[doc = include_str!("../../../book/src/linsets.md")]
    mod linsets {}
    #[doc = include_str!("../../../book/src/constructions.md")]
    mod constructions {}
    #[doc = include_str!("../../../book/src/codes.md")]
    mod codes {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/formats.md")]
    mod formats {}
}
