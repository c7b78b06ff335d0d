//! Event-sourced release workflow.
//!
//! Every task of the four actors is an event in an append-only journal.
//! The current state is the fold of the journal; each event kind can only
//! be emitted by one role, component releases only by the component's own
//! developer, and stages are granted strictly in order.

mod engine;
mod event;
mod state;

pub use engine::{
    apply_event, apply_event_in, grant_stage, grant_stage_in, mark_stale, replay, BlockReason, GateMode, ReplayError,
    WorkflowError,
};
pub use event::{EventKind, EventPayload, WorkflowEvent};
pub use state::{permissible_conditions, DecisionEntry, PrototypeProgress, ReviewEntry, WorkflowState};
