//! Live interactive runs over HTTP. A human decision maker answers the
//! pairwise queries of each consultation one pair at a time while the
//! optimizer waits.
//!
//! | method | path | |
//! |---|---|---|
//! | POST | `/v1/sessions` | create from a [`SessionConfig`] |
//! | GET | `/v1/sessions` | list |
//! | GET | `/v1/sessions/{id}` | state |
//! | DELETE | `/v1/sessions/{id}` | abort |
//! | GET | `/v1/sessions/{id}/query` | next pending pair |
//! | POST | `/v1/sessions/{id}/judgment` | `{pair_index, outcome}` |
//! | GET | `/v1/sessions/{id}/population` | current population |
//!
//! Errors are `{code, message, field?}` with status 404, 409 or 422.

pub mod api;
pub mod config;
pub mod error;
pub mod session;

pub use api::{router, serve, JudgmentRequest, QueryResponse, SessionList};
pub use config::SessionConfig;
pub use error::{ErrorBody, Result, ServiceError};
pub use session::{Ack, Event, JudgmentEntry, Member, Phase, PopulationView, QueryView, SessionManager, SessionView};
