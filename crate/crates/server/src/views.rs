//! JSON payloads as each viewer may see them.
//!
//! Participants see their own team's cards and submissions; for other teams
//! they get sizes and verdict flags only. Nothing here exposes clear-language
//! text except [`reveal`], which is gated on the phase.

use glossa_core::corpus::serialize_corpus;
use glossa_core::masking::unmask_tokens;
use serde_json::{json, Value};

use crate::error::SessionError;
use crate::session::{Event, EventBody, Phase, Session, Viewer};

/// One stream frame: the event with its payload redacted for `viewer`.
pub fn event(session: &Session, event: &Event, viewer: &Viewer) -> Value {
    json!({
        "version": event.version,
        "timestamp": event.timestamp,
        "kind": event.body.kind(),
        "payload": payload(session, &event.body, viewer),
    })
}

fn team_visible(session: &Session, team: &str, viewer: &Viewer) -> bool {
    session
        .teams()
        .iter()
        .position(|t| t.name == team)
        .is_some_and(|i| viewer.sees_team(i))
}

fn payload(session: &Session, body: &EventBody, viewer: &Viewer) -> Value {
    let facilitator = *viewer == Viewer::Facilitator;
    match body {
        EventBody::SessionCreated { id, config, .. } => {
            let mut v = json!({
                "id": id,
                "corpus": config.corpus,
                "mask_mode": config.mask_mode,
                "policy": config.policy,
                "hints": config.hints,
                "teams": config.teams,
                "team_cap": config.team_cap,
            });
            if facilitator {
                v["seed"] = json!(config.seed);
                v["deal_seed"] = json!(config.deal_seed);
            }
            v
        }
        EventBody::ParticipantJoined { name, team, .. } => json!({ "name": name, "team": team }),
        EventBody::PhaseChanged { from, to } => json!({ "from": from, "to": to }),
        EventBody::DeckDealt {
            team,
            sentence,
            cards,
        } => {
            if facilitator {
                json!({ "team": team, "sentence": sentence, "cards": cards })
            } else if team_visible(session, team, viewer) {
                json!({ "team": team, "cards": cards })
            } else {
                json!({ "team": team, "size": cards.len() })
            }
        }
        EventBody::BraceletSubmitted {
            index,
            team,
            author,
            tokens,
            verdict,
            ..
        } => {
            if team_visible(session, team, viewer) {
                json!({
                    "index": index,
                    "team": team,
                    "author": author,
                    "tokens": tokens,
                    "verdict": verdict,
                })
            } else {
                json!({
                    "index": index,
                    "team": team,
                    "author": author,
                    "length": tokens.len(),
                    "valid": verdict.valid,
                })
            }
        }
        EventBody::RuleProposed {
            author,
            rule,
            votes,
            ..
        } => json!({ "author": author, "rule": rule.to_string(), "votes": votes }),
        EventBody::SubmissionHidden { index, hidden } => {
            json!({ "index": index, "hidden": hidden })
        }
    }
}

/// Frames after `since`, oldest first.
pub fn stream(session: &Session, since: u64, viewer: &Viewer) -> Value {
    let events: Vec<Value> = session
        .events()
        .iter()
        .filter(|e| e.version > since)
        .map(|e| event(session, e, viewer))
        .collect();
    json!({
        "session": session.id(),
        "version": session.version(),
        "phase": session.phase(),
        "events": events,
    })
}

fn submission(session: &Session, index: usize, viewer: &Viewer) -> Option<Value> {
    let s = &session.submissions()[index];
    if s.hidden && *viewer != Viewer::Facilitator {
        return None;
    }
    let own = team_visible(session, &s.team, viewer);
    let mut v = json!({
        "index": s.index,
        "team": s.team,
        "author": s.author,
        "submitted_at": s.submitted_at,
        "valid": s.verdict.valid,
        "hidden": s.hidden,
    });
    if own {
        v["tokens"] = json!(s.tokens);
        v["verdict"] = json!(s.verdict);
    } else {
        v["length"] = json!(s.tokens.len());
    }
    Some(v)
}

/// Whole current state, for (re)synchronising a client.
pub fn state(session: &Session, viewer: &Viewer) -> Value {
    let teams: Vec<Value> = session
        .teams()
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let members: Vec<&str> = t
                .members
                .iter()
                .filter_map(|m| session.participant(m))
                .map(|p| p.name.as_str())
                .collect();
            let mut v = json!({ "name": t.name, "members": members, "deck_size": t.deck.len() });
            if viewer.sees_team(i) {
                v["deck"] = json!(t.deck);
                v["board"] = json!(t.board);
                v["remaining"] = json!(t.remaining());
            }
            if *viewer == Viewer::Facilitator {
                v["sentence"] = json!(t.sentence);
            }
            v
        })
        .collect();
    let submissions: Vec<Value> = (0..session.submissions().len())
        .filter_map(|i| submission(session, i, viewer))
        .collect();
    let config = session.config();
    let mut v = json!({
        "session": session.id(),
        "version": session.version(),
        "phase": session.phase(),
        "corpus": config.corpus,
        "mask_mode": config.mask_mode,
        "policy": config.policy,
        "hints": config.hints,
        "created_at": session.created_at(),
        "teams": teams,
        "submissions": submissions,
        "poll": session.poll(),
    });
    match viewer {
        Viewer::Facilitator => v["role"] = json!("facilitator"),
        Viewer::Participant { token, team } => {
            let p = session
                .participant(token)
                .expect("viewer resolved from participants");
            v["role"] = json!("participant");
            v["you"] = json!({ "name": p.name, "team": session.teams()[*team].name });
        }
    }
    v
}

/// The masked corpus, the only corpus view before Reveal.
pub fn corpus(session: &Session) -> Value {
    let masked = &session.language().masked;
    let sentences: Vec<Value> = masked
        .sentences
        .iter()
        .map(|s| json!({ "id": s.id, "text": s.text(), "tree": s.tree }))
        .collect();
    json!({
        "language": masked.language,
        "tagset": masked.tagset,
        "categories": masked.categories,
        "sentences": sentences,
        "document": serialize_corpus(masked),
    })
}

/// Clear corpus, decks and submissions aligned with their masked forms.
pub fn reveal(session: &Session) -> Result<Value, SessionError> {
    if session.phase() < Phase::Reveal {
        return Err(SessionError::WrongPhase(session.phase()));
    }
    let lang = session.language();
    let sentences: Vec<Value> = lang
        .clear
        .sentences
        .iter()
        .zip(&lang.masked.sentences)
        .map(|(c, m)| json!({ "id": c.id, "text": c.text(), "masked": m.text(), "tree": c.tree }))
        .collect();
    let table: Vec<Value> = lang
        .table
        .entries()
        .map(|(word, mask)| json!({ "word": word, "mask": mask }))
        .collect();
    let decks = session
        .teams()
        .iter()
        .map(|t| {
            Ok(json!({
                "team": t.name,
                "sentence": t.sentence,
                "cards": t.deck,
                "clear": unmask_tokens(&t.deck, &lang.table)?,
            }))
        })
        .collect::<Result<Vec<Value>, SessionError>>()?;
    let submissions = session
        .submissions()
        .iter()
        .map(|s| {
            Ok(json!({
                "index": s.index,
                "team": s.team,
                "author": s.author,
                "tokens": s.tokens,
                "clear": unmask_tokens(&s.tokens, &lang.table)?.join(" "),
                "valid": s.verdict.valid,
                "hidden": s.hidden,
            }))
        })
        .collect::<Result<Vec<Value>, SessionError>>()?;
    Ok(json!({
        "language": lang.clear.language,
        "sentences": sentences,
        "table": table,
        "decks": decks,
        "submissions": submissions,
        "document": serialize_corpus(&lang.clear),
    }))
}
