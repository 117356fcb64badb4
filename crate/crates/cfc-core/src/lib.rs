//! Convex function chasing (CFC) with black-box advice.
//!
//! This crate implements the online decision-making problem of chasing convex
//! cost functions in a normed vector space: at each round the player sees a
//! convex hitting cost, picks a point, and pays the hitting cost plus the
//! normed distance moved since the previous round. On top of the plain
//! problem it provides *advice-augmented meta-algorithms* that combine an
//! untrusted black-box advice algorithm with a competitive robust algorithm
//! while keeping provable competitive ratios against both:
//!
//! * [`meta::Switch`] — budgeted switching between advice and robust decisions,
//! * [`meta::NestedSwitch`] — single-threshold switching for nested body chasing,
//! * [`meta::Interp`] — radial-retraction hedging between the two,
//! * [`meta::BdInterp`] — segment interpolation for diameter-bounded pairs.
//!
//! Supporting machinery: ℓᵖ norms and the normed-space constants entering the
//! bounds ([`geometry`]), convex bodies and cost families ([`body`], [`cost`]),
//! baseline online algorithms ([`algorithm`]), problem instance generators and
//! an adaptive adversarial builder ([`instance`], [`adversary`]), offline
//! optimum oracles ([`offline`]), and a sampling suite for the geometric
//! inequalities the analysis relies on ([`lemmas`]).
//!
//! The crate is `no_std`-compatible (with `alloc`); disable the default `std`
//! feature for embedded use. All randomized routines take explicit seeds and
//! are deterministic for a fixed seed.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod adversary;
pub mod algorithm;
pub mod body;
pub mod cost;
pub mod error;
pub mod geometry;
pub mod instance;
pub mod lemmas;
pub mod meta;
pub mod norm;
pub mod offline;
pub mod vector;

pub use algorithm::{run, OnlineAlgorithm, Trajectory};
pub use body::ConvexBody;
pub use cost::CostFunction;
pub use error::CoreError;
pub use geometry::SpaceConstants;
pub use instance::{AdviceSpec, Instance, Subclass};
pub use norm::NormTag;
pub use vector::Vector;
