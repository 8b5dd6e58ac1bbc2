//! Parameter sweeps, manufactured-solution verification and the closure audit.

mod audit;
mod manufactured;
mod sweep;

pub use audit::{closure_audit, AuditCheck, AuditPlan, AuditReport, CheckKind};
pub use manufactured::{verify_manufactured, ConvergenceRow, ConvergenceTable, ManufacturedCase, LEVELS};
pub use sweep::{run_member, run_sweep, InvariantSuite, MemberReport, SweepAxis, SweepPlan, SweepReport};
