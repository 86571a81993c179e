//! Each chapter of the guide is a module so that its listings run as
//! doctests and a failure names the chapter it came from.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/corpus.md")]
pub mod corpus {}
#[doc = include_str!("../../../book/src/normalization.md")]
pub mod normalization {}
#[doc = include_str!("../../../book/src/network.md")]
pub mod network {}
#[doc = include_str!("../../../book/src/layout.md")]
pub mod layout {}
#[doc = include_str!("../../../book/src/zoom.md")]
pub mod zoom {}
#[doc = include_str!("../../../book/src/overlays.md")]
pub mod overlays {}
#[doc = include_str!("../../../book/src/bundles.md")]
pub mod bundles {}
