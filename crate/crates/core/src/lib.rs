//! Computations with finitely generated nilpotent groups and finite balls of
//! their Cayley graphs.
//!
//! * [`pcgroup`]: power-commutator presentations, collection, built-in families.
//! * [`cayley`]: radius-r balls, word metric, geodesic counting and enumeration.
//! * [`order`]: bi-orders from central filtrations, convex lines, distortion.
//! * [`structure`]: torsion, quotients, isolators, the distorted centre, conjugators.
//! * [`constructions`]: wreath products, lifted and `FSF` generating sets, twins,
//!   the Klein-bottle maps.
//! * [`autlab`]: ball-restricted automorphism search and affine checks.
//! * [`verify`]: the packaged experiment suites.

pub mod autlab;
pub mod cayley;
pub mod constructions;
pub mod error;
pub mod order;
pub mod pcgroup;
pub mod report;
pub mod structure;
pub mod verify;

pub use error::{Error, Result};
pub use pcgroup::{builtin, parse_presentation, BuiltinGroup, Family, GroupElement, PcPresentation};
