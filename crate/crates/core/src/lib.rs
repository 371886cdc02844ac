//! Viability games on valence systems over graph monoids.
//!
//! The storage of a valence system is an element of the graph monoid of a
//! [`PresentationGraph`]. [`classify`] sorts graphs into the decidable
//! classes, [`solver_fv`] and [`solver_uv`] decide fixed and unknown
//! initial credit games for pushdown-over-group storages, and [`oracle`]
//! is a bounded explicit-state solver used for cross-checking.

pub mod arena;
pub mod classify;
mod error;
pub mod credits;
pub mod monoid;
pub mod oracle;
pub mod reductions;
pub mod solver_fv;
pub mod solver_uv;

pub use arena::{GameArena, Owner};
pub use classify::{classify, find_illegal, ClassKind, ClassLabel, Pattern};
pub use error::{Error, Result};
pub use monoid::{Letter, MonoidElement, PresentationGraph, RestrictedCayley, Sign};

/// The player who wins a game.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Winner {
    #[serde(rename = "E")]
    Exists,
    #[serde(rename = "A")]
    Forall,
}

impl std::fmt::Display for Winner {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Winner::Exists => "E",
            Winner::Forall => "A",
        })
    }
}
