//! Network access to a live session: the JSON wire protocol and the server.

pub mod protocol;
pub mod server;

pub use protocol::{handle_command, parse_command, Command, Control, Frame};
pub use server::{Server, ServerConfig, ShutdownHandle};
