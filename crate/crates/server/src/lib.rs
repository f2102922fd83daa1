//! HTTP+JSON host for live workshop sessions.
//!
//! A session moves Lobby → Bracelet → Grammar → Reveal → Closed under the
//! facilitator's key. Teams receive masked decks, submit card orderings that
//! are scored against the session's bigram model, propose grammar rules to a
//! shared poll and, once revealed, see the clear-language corpus.
//!
//! Every change is an [`Event`] appended to a JSON-lines log; the live state
//! is a fold over that log, which is also what `GET /sessions/{id}/stream`
//! replays to clients.

pub mod error;
pub mod registry;
mod routes;
pub mod session;
pub mod store;
pub mod views;

use std::io;

pub use error::SessionError;
pub use registry::CorpusRegistry;
pub use routes::router;
pub use session::{mask_config, Event, EventBody, Phase, Session, SessionConfig, Viewer};
pub use store::AppState;

/// Serves `state` on an already bound listener until the process stops.
pub async fn serve(listener: tokio::net::TcpListener, state: AppState) -> io::Result<()> {
    axum::serve(listener, router(state)).await
}
