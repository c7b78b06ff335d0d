//! Domain records shared by every other module, and their invariants.

mod classes;
mod ids;
mod records;
mod stage;
mod validate;

pub use classes::{AsilLevel, ClassRangeError, RiskParameters, Rsil, RsilOutOfRange};
pub use ids::{rid, ActorId, RecordId, RecordIdError, RecordKind, MAX_SERIAL};
pub use records::*;
pub use stage::{is_stage_prefix, stage, OperatingMode, StageDefinition, StageNumber, StageOutOfRange};
pub use validate::{hazard_rsil, validate_record, validate_repository, InvariantViolation, Rule};
