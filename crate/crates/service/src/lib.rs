//! Game server: sessions mixing bot agents and human seats, a versioned
//! frame protocol per seat, and a headless client for it.

pub mod client;
pub mod error;
pub mod server;
pub mod session;
pub mod spec;
pub mod wire;

pub use error::ServiceError;
pub use session::{Session, SessionEnv, SessionSummary, SeatTicket};
pub use spec::{SeatKind, SeatSpec, SessionSpec};
