//! Systems with disturbances, their numerical flow, and the axioms a
//! transition map must satisfy.

pub mod axioms;
pub mod batch;
pub mod builtin;
pub mod integrator;
pub mod signal;
pub mod system;

pub use axioms::{check_axioms, AxiomReport};
pub use batch::TrajectoryBatch;
pub use builtin::{builtin, list_builtins};
pub use signal::{sample_signals, DisturbanceBox, DisturbanceSignal, SignalStrategy};
pub use system::{LinearSystem, OdeSystem, System, Trajectory};
