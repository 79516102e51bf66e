//! Belavkin-matrix algebra for quantum feedback networks.
//!
//! Components are described by Hudson-Parthasarathy triples `(S, L, H)`.
//! Each triple maps to a ⋆-unitary bordered coefficient matrix `𝕍`; series
//! connection is the product of these matrices and eliminating internal
//! edges is a non-commutative Möbius transformation of `𝕍`.

pub mod belavkin;
pub mod dynamics;
pub mod error;
pub mod network;
pub mod opmatrix;
pub mod sample;
pub mod verify;

pub use belavkin::{BelavkinMatrix, ItoMatrix, Slh};
pub use error::{QfnError, Result};
pub use opmatrix::{BlockMatrix, CMat, Label, Op, C64};
