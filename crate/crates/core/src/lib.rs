//! Core of the DeliverC pointer game: the delivery-grid engine, the command
//! wire format, the C-subset interpreter that turns student code into
//! commands, and the task model used to define and validate challenges.
//!
//! Everything here is deterministic and free of IO, and builds without `std`.

#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod dsl;
pub mod game;
pub mod interp;
pub mod task;

pub use dsl::DslError;
pub use game::{outcome_matches, run, Command, GameState, Item, LocationId, SlotIndex, Slots};
pub use interp::{check_constraints, compile, execute, ConstraintTag, Limits, Program};
pub use task::{CandidateTask, LevelTopic, TaskSpec};
