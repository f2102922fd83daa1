//! Live sessions, their on-disk logs and change notification.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use tokio::sync::{watch, RwLock as AsyncRwLock};

use crate::error::SessionError;
use crate::registry::CorpusRegistry;
use crate::session::{Event, EventBody, Session, SessionConfig};

/// Longest a stream request may wait for news.
pub const MAX_WAIT: Duration = Duration::from_secs(30);

struct Slot {
    session: AsyncRwLock<Session>,
    log: Option<PathBuf>,
    version: watch::Sender<u64>,
}

/// Shared handle cloned into every request.
#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

struct Inner {
    registry: CorpusRegistry,
    data_dir: Option<PathBuf>,
    sessions: RwLock<HashMap<String, Arc<Slot>>>,
}

pub fn now_millis() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

fn append(path: &Path, events: &[Event]) -> Result<(), SessionError> {
    let mut file = OpenOptions::new().create(true).append(true).open(path)?;
    let mut buf = Vec::new();
    for e in events {
        serde_json::to_writer(&mut buf, e).map_err(|e| SessionError::Corrupt(e.to_string()))?;
        buf.push(b'\n');
    }
    file.write_all(&buf)?;
    file.sync_data()?;
    Ok(())
}

fn read_log(path: &Path) -> Result<Vec<Event>, SessionError> {
    let reader = BufReader::new(File::open(path)?);
    let mut events = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let event: Event = serde_json::from_str(&line)
            .map_err(|e| SessionError::Corrupt(format!("{}:{}: {e}", path.display(), i + 1)))?;
        events.push(event);
    }
    Ok(events)
}

impl AppState {
    /// In-memory sessions only.
    pub fn ephemeral(registry: CorpusRegistry) -> Self {
        Self::build(registry, None)
    }

    /// Sessions logged under `data_dir`; existing logs are replayed.
    pub fn persistent(
        registry: CorpusRegistry,
        data_dir: impl Into<PathBuf>,
    ) -> Result<Self, SessionError> {
        let dir = data_dir.into();
        std::fs::create_dir_all(&dir)?;
        let state = Self::build(registry, Some(dir.clone()));
        let mut paths: Vec<PathBuf> = std::fs::read_dir(&dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .collect();
        paths.sort();
        {
            let mut sessions = state.inner.sessions.write().expect("session map lock");
            for path in paths {
                let session = Session::replay(read_log(&path)?, &state.inner.registry)?;
                let (tx, _) = watch::channel(session.version());
                sessions.insert(
                    session.id().to_string(),
                    Arc::new(Slot {
                        session: AsyncRwLock::new(session),
                        log: Some(path),
                        version: tx,
                    }),
                );
            }
        }
        Ok(state)
    }

    fn build(registry: CorpusRegistry, data_dir: Option<PathBuf>) -> Self {
        AppState {
            inner: Arc::new(Inner {
                registry,
                data_dir,
                sessions: RwLock::new(HashMap::new()),
            }),
        }
    }

    pub fn registry(&self) -> &CorpusRegistry {
        &self.inner.registry
    }

    pub fn session_count(&self) -> usize {
        self.inner.sessions.read().expect("session map lock").len()
    }

    /// Returns the new session id and the facilitator key.
    pub fn create(
        &self,
        config: SessionConfig,
        facilitator_key: Option<String>,
    ) -> Result<(String, String), SessionError> {
        let id = uuid::Uuid::new_v4().simple().to_string();
        let key = match facilitator_key {
            Some(k) if k.trim().len() >= 8 => k,
            Some(_) => {
                return Err(SessionError::InvalidConfig(
                    "facilitator key needs at least 8 characters".into(),
                ))
            }
            None => uuid::Uuid::new_v4().simple().to_string(),
        };
        let session = Session::create(&id, config, &key, &self.inner.registry, now_millis())?;
        let log = self
            .inner
            .data_dir
            .as_ref()
            .map(|d| d.join(format!("{id}.jsonl")));
        if let Some(path) = &log {
            append(path, session.events())?;
        }
        let (tx, _) = watch::channel(session.version());
        self.inner
            .sessions
            .write()
            .expect("session map lock")
            .insert(
                id.clone(),
                Arc::new(Slot {
                    session: AsyncRwLock::new(session),
                    log,
                    version: tx,
                }),
            );
        Ok((id, key))
    }

    fn slot(&self, id: &str) -> Result<Arc<Slot>, SessionError> {
        self.inner
            .sessions
            .read()
            .expect("session map lock")
            .get(id)
            .cloned()
            .ok_or_else(|| SessionError::UnknownSession(id.to_string()))
    }

    /// Runs `f` against a consistent snapshot; concurrent readers allowed.
    pub async fn read<T>(
        &self,
        id: &str,
        f: impl FnOnce(&Session) -> Result<T, SessionError>,
    ) -> Result<T, SessionError> {
        let slot = self.slot(id)?;
        let session = slot.session.read().await;
        f(&session)
    }

    /// One writer per session: `decide` proposes events, which are logged,
    /// folded in and announced before `respond` reads the new state.
    pub async fn write<D, T>(
        &self,
        id: &str,
        decide: impl FnOnce(&Session) -> Result<(D, Vec<EventBody>), SessionError>,
        respond: impl FnOnce(&Session, D) -> Result<T, SessionError>,
    ) -> Result<T, SessionError> {
        let slot = self.slot(id)?;
        let mut session = slot.session.write().await;
        let (data, bodies) = decide(&session)?;
        if !bodies.is_empty() {
            let now = now_millis();
            let first = session.version() + 1;
            let events: Vec<Event> = bodies
                .into_iter()
                .enumerate()
                .map(|(i, body)| Event {
                    version: first + i as u64,
                    timestamp: now,
                    body,
                })
                .collect();
            // log first so a failed write leaves memory and disk in step
            if let Some(path) = &slot.log {
                append(path, &events)?;
            }
            for event in events {
                session.apply(event)?;
            }
            slot.version.send_replace(session.version());
        }
        respond(&session, data)
    }

    /// Waits until the session moves past `since`, or `wait` elapses.
    pub async fn wait_past(
        &self,
        id: &str,
        since: u64,
        wait: Duration,
    ) -> Result<(), SessionError> {
        let slot = self.slot(id)?;
        let mut rx = slot.version.subscribe();
        let _ = tokio::time::timeout(wait.min(MAX_WAIT), rx.wait_for(|v| *v > since)).await;
        Ok(())
    }
}
