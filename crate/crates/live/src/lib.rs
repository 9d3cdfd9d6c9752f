//! Live sessions: the reflex controller ticking at a fixed rate, streaming
//! state frames over WebSocket and taking obstacle and target updates.

pub mod protocol;
pub mod server;
pub mod session;

pub use protocol::{ClientMessage, Handshake, SchemaError, StateFrame, Status};
pub use server::{serve, start, LiveConfig, LiveError, LiveServer};
pub use session::Session;
