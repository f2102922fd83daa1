//! Workshop session state as a fold over its event log.
//!
//! Commands are split in two: a `decide_*` method inspects the current state
//! and returns the events the command produces (or an error, leaving the
//! state untouched), and [`Session::apply`] folds one event in. Recovery is
//! [`Session::replay`] over the stored events.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use glossa_core::bracelet::{suggest_next, validate_sequence, Suggestion};
use glossa_core::grammar::Rule;
use glossa_core::masking::{
    build_masking_table, default_alphabet, mask_corpus, PhonotacticProfile,
};
use glossa_core::{
    AnnotatedCorpus, BoundaryPolicy, Deck, MaskConfig, MaskMode, MaskingTable, Model, Verdict,
};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::SessionError;
use crate::registry::CorpusRegistry;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Lobby,
    Bracelet,
    Grammar,
    Reveal,
    Closed,
}

impl Phase {
    pub const ORDER: [Phase; 5] = [
        Phase::Lobby,
        Phase::Bracelet,
        Phase::Grammar,
        Phase::Reveal,
        Phase::Closed,
    ];

    pub fn next(self) -> Option<Phase> {
        let i = Phase::ORDER.iter().position(|p| *p == self)?;
        Phase::ORDER.get(i + 1).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Lobby => "lobby",
            Phase::Bracelet => "bracelet",
            Phase::Grammar => "grammar",
            Phase::Reveal => "reveal",
            Phase::Closed => "closed",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Phase {
    type Err = SessionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Phase::ORDER
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| SessionError::BadRequest(format!("unknown phase `{s}`")))
    }
}

pub const MAX_TEAMS: usize = 16;
const MAX_NAME: usize = 40;

/// Everything needed to rebuild a session's language from scratch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionConfig {
    pub corpus: String,
    pub mask_mode: MaskMode,
    pub seed: u64,
    pub policy: BoundaryPolicy,
    pub hints: bool,
    pub teams: Vec<String>,
    pub team_cap: Option<usize>,
    /// Seed for random deals; the mask seed when absent.
    pub deal_seed: Option<u64>,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            corpus: "snow-white".into(),
            mask_mode: MaskMode::NonWords,
            seed: 0,
            policy: BoundaryPolicy::EndOptional,
            hints: true,
            teams: vec!["team-1".into(), "team-2".into()],
            team_cap: None,
            deal_seed: None,
        }
    }
}

impl SessionConfig {
    pub fn validate(&self) -> Result<(), SessionError> {
        let bad = |m: String| Err(SessionError::InvalidConfig(m));
        if self.teams.is_empty() || self.teams.len() > MAX_TEAMS {
            return bad(format!("between 1 and {MAX_TEAMS} teams are required"));
        }
        let mut seen = BTreeSet::new();
        for team in &self.teams {
            if !valid_handle(team) {
                return bad(format!(
                    "team name `{team}` must be 1-{MAX_NAME} visible characters without spaces"
                ));
            }
            if !seen.insert(team) {
                return bad(format!("team name `{team}` is repeated"));
            }
        }
        if self.team_cap == Some(0) {
            return bad("team_cap must be positive".into());
        }
        Ok(())
    }

    /// The inventory masks are drawn from, shared with the command line.
    pub fn mask_config(&self) -> MaskConfig {
        mask_config(self.mask_mode)
    }
}

/// Default inventory for a mask mode.
pub fn mask_config(mode: MaskMode) -> MaskConfig {
    match mode {
        MaskMode::NonWords => MaskConfig::NonWords(PhonotacticProfile::italian()),
        MaskMode::Symbols => MaskConfig::Symbols(default_alphabet()),
    }
}

fn valid_handle(name: &str) -> bool {
    let n = name.chars().count();
    (1..=MAX_NAME).contains(&n) && !name.chars().any(|c| c.is_whitespace() || c.is_control())
}

fn valid_display_name(name: &str) -> bool {
    let n = name.trim().chars().count();
    (1..=MAX_NAME).contains(&n) && !name.chars().any(char::is_control)
}

/// One line of the session log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub version: u64,
    /// Milliseconds since the Unix epoch.
    pub timestamp: u64,
    #[serde(flatten)]
    pub body: EventBody,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum EventBody {
    SessionCreated {
        id: String,
        config: SessionConfig,
        facilitator_key_sha256: String,
    },
    ParticipantJoined {
        participant: String,
        name: String,
        team: String,
    },
    PhaseChanged {
        from: Phase,
        to: Phase,
    },
    DeckDealt {
        team: String,
        sentence: usize,
        cards: Vec<String>,
    },
    BraceletSubmitted {
        index: usize,
        team: String,
        participant: String,
        author: String,
        tokens: Vec<String>,
        verdict: Verdict,
    },
    RuleProposed {
        participant: String,
        author: String,
        rule: Rule,
        votes: usize,
    },
    SubmissionHidden {
        index: usize,
        hidden: bool,
    },
}

impl EventBody {
    pub fn kind(&self) -> &'static str {
        match self {
            EventBody::SessionCreated { .. } => "session_created",
            EventBody::ParticipantJoined { .. } => "participant_joined",
            EventBody::PhaseChanged { .. } => "phase_changed",
            EventBody::DeckDealt { .. } => "deck_dealt",
            EventBody::BraceletSubmitted { .. } => "bracelet_submitted",
            EventBody::RuleProposed { .. } => "rule_proposed",
            EventBody::SubmissionHidden { .. } => "submission_hidden",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Team {
    pub name: String,
    /// Participant tokens.
    #[serde(skip)]
    pub members: Vec<String>,
    pub sentence: Option<usize>,
    /// Masked cards in dealt order.
    pub deck: Vec<String>,
    /// Cards of the team's latest submission.
    pub board: Vec<String>,
}

impl Team {
    /// Dealt cards not on the board.
    pub fn remaining(&self) -> Vec<String> {
        let mut left = self.deck.clone();
        for card in &self.board {
            if let Some(i) = left.iter().position(|c| c == card) {
                left.remove(i);
            }
        }
        left
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Participant {
    pub token: String,
    pub name: String,
    pub team: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Submission {
    pub index: usize,
    pub team: String,
    pub author: String,
    pub tokens: Vec<String>,
    pub verdict: Verdict,
    pub submitted_at: u64,
    pub hidden: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Proposal {
    pub participant: String,
    pub author: String,
    pub rule: Rule,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PollEntry {
    pub rule: String,
    pub votes: usize,
    pub proposers: Vec<String>,
}

/// Who is asking.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Viewer {
    Facilitator,
    Participant { token: String, team: usize },
}

impl Viewer {
    pub fn sees_team(&self, team: usize) -> bool {
        match self {
            Viewer::Facilitator => true,
            Viewer::Participant { team: own, .. } => *own == team,
        }
    }
}

/// Clear corpus and everything derived from it.
#[derive(Debug, Clone)]
pub struct Language {
    pub clear: AnnotatedCorpus,
    pub masked: AnnotatedCorpus,
    pub table: MaskingTable,
    pub model: Model,
}

impl Language {
    pub fn build(
        config: &SessionConfig,
        registry: &CorpusRegistry,
    ) -> Result<Language, SessionError> {
        config.validate()?;
        let clear = registry.load(&config.corpus)?;
        if clear.is_empty() {
            return Err(SessionError::InvalidConfig(format!(
                "corpus `{}` has no sentences",
                config.corpus
            )));
        }
        let table = build_masking_table(&clear, config.seed, &config.mask_config())?;
        let masked = mask_corpus(&clear, &table)?;
        let model = Model::train(&masked)?;
        Ok(Language {
            clear,
            masked,
            table,
            model,
        })
    }
}

pub fn hash_key(key: &str) -> String {
    hex::encode(Sha256::digest(key.as_bytes()))
}

#[derive(Debug, Clone)]
pub struct Session {
    id: String,
    config: SessionConfig,
    created_at: u64,
    key_hash: String,
    phase: Phase,
    teams: Vec<Team>,
    participants: BTreeMap<String, Participant>,
    submissions: Vec<Submission>,
    proposals: Vec<Proposal>,
    events: Vec<Event>,
    lang: Language,
}

impl Session {
    /// A fresh session in the lobby; its log holds the creation event.
    pub fn create(
        id: &str,
        config: SessionConfig,
        facilitator_key: &str,
        registry: &CorpusRegistry,
        now: u64,
    ) -> Result<Session, SessionError> {
        let created = Event {
            version: 1,
            timestamp: now,
            body: EventBody::SessionCreated {
                id: id.to_string(),
                config,
                facilitator_key_sha256: hash_key(facilitator_key),
            },
        };
        Session::replay(vec![created], registry)
    }

    /// Rebuilds a session by folding `events` in order.
    pub fn replay(events: Vec<Event>, registry: &CorpusRegistry) -> Result<Session, SessionError> {
        let mut events = events.into_iter();
        let first = events
            .next()
            .ok_or_else(|| SessionError::Corrupt("empty log".into()))?;
        let EventBody::SessionCreated {
            id,
            config,
            facilitator_key_sha256,
        } = &first.body
        else {
            return Err(SessionError::Corrupt(
                "log does not start with session_created".into(),
            ));
        };
        if first.version != 1 {
            return Err(SessionError::Corrupt("first version is not 1".into()));
        }
        let lang = Language::build(config, registry)?;
        let teams = config
            .teams
            .iter()
            .map(|name| Team {
                name: name.clone(),
                members: Vec::new(),
                sentence: None,
                deck: Vec::new(),
                board: Vec::new(),
            })
            .collect();
        let mut session = Session {
            id: id.clone(),
            config: config.clone(),
            created_at: first.timestamp,
            key_hash: facilitator_key_sha256.clone(),
            phase: Phase::Lobby,
            teams,
            participants: BTreeMap::new(),
            submissions: Vec::new(),
            proposals: Vec::new(),
            events: vec![first],
            lang,
        };
        for event in events {
            session.apply(event)?;
        }
        Ok(session)
    }

    /// Folds one event in. Versions must follow on without gaps.
    pub fn apply(&mut self, event: Event) -> Result<(), SessionError> {
        if event.version != self.version() + 1 {
            return Err(SessionError::Corrupt(format!(
                "version {} follows {}",
                event.version,
                self.version()
            )));
        }
        match &event.body {
            EventBody::SessionCreated { .. } => {
                return Err(SessionError::Corrupt("second session_created".into()));
            }
            EventBody::ParticipantJoined {
                participant,
                name,
                team,
            } => {
                let t = self.team_index(team)?;
                self.teams[t].members.push(participant.clone());
                self.participants.insert(
                    participant.clone(),
                    Participant {
                        token: participant.clone(),
                        name: name.clone(),
                        team: t,
                    },
                );
            }
            EventBody::PhaseChanged { to, .. } => self.phase = *to,
            EventBody::DeckDealt {
                team,
                sentence,
                cards,
            } => {
                let t = self.team_index(team)?;
                let team = &mut self.teams[t];
                team.sentence = Some(*sentence);
                team.deck = cards.clone();
                team.board.clear();
            }
            EventBody::BraceletSubmitted {
                index,
                team,
                author,
                tokens,
                verdict,
                ..
            } => {
                let t = self.team_index(team)?;
                if *index != self.submissions.len() {
                    return Err(SessionError::Corrupt(format!(
                        "submission index {index} out of order"
                    )));
                }
                self.teams[t].board = tokens.clone();
                self.submissions.push(Submission {
                    index: *index,
                    team: team.clone(),
                    author: author.clone(),
                    tokens: tokens.clone(),
                    verdict: verdict.clone(),
                    submitted_at: event.timestamp,
                    hidden: false,
                });
            }
            EventBody::RuleProposed {
                participant,
                author,
                rule,
                ..
            } => self.proposals.push(Proposal {
                participant: participant.clone(),
                author: author.clone(),
                rule: rule.clone(),
            }),
            EventBody::SubmissionHidden { index, hidden } => {
                let s = self
                    .submissions
                    .get_mut(*index)
                    .ok_or_else(|| SessionError::Corrupt(format!("no submission {index}")))?;
                s.hidden = *hidden;
            }
        }
        self.events.push(event);
        Ok(())
    }

    fn team_index(&self, name: &str) -> Result<usize, SessionError> {
        self.teams
            .iter()
            .position(|t| t.name == name)
            .ok_or_else(|| SessionError::UnknownTeam(name.to_string()))
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn created_at(&self) -> u64 {
        self.created_at
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn version(&self) -> u64 {
        self.events.last().map_or(0, |e| e.version)
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn teams(&self) -> &[Team] {
        &self.teams
    }

    pub fn participant(&self, token: &str) -> Option<&Participant> {
        self.participants.get(token)
    }

    pub fn participants(&self) -> impl Iterator<Item = &Participant> {
        self.participants.values()
    }

    pub fn submissions(&self) -> &[Submission] {
        &self.submissions
    }

    pub fn proposals(&self) -> &[Proposal] {
        &self.proposals
    }

    pub fn language(&self) -> &Language {
        &self.lang
    }

    /// Resolves a bearer credential.
    pub fn viewer(&self, bearer: Option<&str>) -> Result<Viewer, SessionError> {
        let bearer = bearer.ok_or(SessionError::Unauthorized)?;
        if hash_key(bearer) == self.key_hash {
            return Ok(Viewer::Facilitator);
        }
        self.participants
            .get(bearer)
            .map(|p| Viewer::Participant {
                token: p.token.clone(),
                team: p.team,
            })
            .ok_or(SessionError::Unauthorized)
    }

    fn participant_of(&self, viewer: &Viewer) -> Result<&Participant, SessionError> {
        match viewer {
            Viewer::Participant { token, .. } => self
                .participants
                .get(token)
                .ok_or(SessionError::Unauthorized),
            Viewer::Facilitator => Err(SessionError::ParticipantOnly),
        }
    }

    fn require_phase(&self, phase: Phase) -> Result<(), SessionError> {
        match self.phase {
            p if p == phase => Ok(()),
            Phase::Closed => Err(SessionError::Closed),
            p => Err(SessionError::WrongPhase(p)),
        }
    }

    /// `fresh_token` is used only when the caller is not already joined.
    pub fn decide_join(
        &self,
        existing: Option<&str>,
        team: &str,
        name: &str,
        fresh_token: String,
    ) -> Result<(String, Vec<EventBody>), SessionError> {
        match self.phase {
            Phase::Lobby | Phase::Bracelet => {}
            Phase::Closed => return Err(SessionError::Closed),
            p => return Err(SessionError::WrongPhase(p)),
        }
        if let Some(p) = existing.and_then(|t| self.participants.get(t)) {
            return Ok((p.token.clone(), Vec::new()));
        }
        let t = self.team_index(team)?;
        if !valid_display_name(name) {
            return Err(SessionError::BadRequest(format!(
                "display name must be 1-{MAX_NAME} characters"
            )));
        }
        if let Some(cap) = self.config.team_cap {
            if self.teams[t].members.len() >= cap {
                return Err(SessionError::TeamFull {
                    team: team.to_string(),
                    cap,
                });
            }
        }
        let body = EventBody::ParticipantJoined {
            participant: fresh_token.clone(),
            name: name.trim().to_string(),
            team: team.to_string(),
        };
        Ok((fresh_token, vec![body]))
    }

    /// Moves one phase forward. Entering Bracelet deals every team a deck:
    /// the sentence named in `deal`, or one drawn with the deal seed.
    pub fn decide_advance(
        &self,
        viewer: &Viewer,
        to: Option<Phase>,
        deal: &BTreeMap<String, usize>,
    ) -> Result<Vec<EventBody>, SessionError> {
        if *viewer != Viewer::Facilitator {
            return Err(SessionError::FacilitatorOnly);
        }
        let next = self.phase.next().ok_or(SessionError::Closed)?;
        if let Some(to) = to {
            if to != next {
                return Err(SessionError::BadRequest(format!(
                    "the phase after {} is {next}, not {to}",
                    self.phase
                )));
            }
        }
        if !deal.is_empty() && next != Phase::Bracelet {
            return Err(SessionError::BadRequest(
                "decks are dealt only when entering bracelet".into(),
            ));
        }
        let mut out = vec![EventBody::PhaseChanged {
            from: self.phase,
            to: next,
        }];
        if next == Phase::Bracelet {
            out.extend(self.deal(deal)?);
        }
        Ok(out)
    }

    fn deal(&self, requested: &BTreeMap<String, usize>) -> Result<Vec<EventBody>, SessionError> {
        let sentences = &self.lang.masked.sentences;
        for (team, id) in requested {
            self.team_index(team)?;
            if !sentences.iter().any(|s| s.id == *id) {
                return Err(SessionError::BadRequest(format!(
                    "no sentence with id {id}"
                )));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.deal_seed.unwrap_or(self.config.seed));
        let mut pool: Vec<usize> = sentences
            .iter()
            .map(|s| s.id)
            .filter(|id| !requested.values().any(|r| r == id))
            .collect();
        pool.shuffle(&mut rng);
        let mut pool = pool.into_iter();
        let mut out = Vec::new();
        for (i, team) in self.teams.iter().enumerate() {
            let id = match requested.get(&team.name) {
                Some(id) => *id,
                // fewer sentences than teams: wrap around the corpus
                None => pool.next().unwrap_or(sentences[i % sentences.len()].id),
            };
            let sentence = sentences
                .iter()
                .find(|s| s.id == id)
                .expect("checked above");
            let mut cards = sentence.surfaces();
            cards.shuffle(&mut rng);
            out.push(EventBody::DeckDealt {
                team: team.name.clone(),
                sentence: id,
                cards,
            });
        }
        Ok(out)
    }

    fn team_deck(&self, team: usize) -> Deck {
        Deck::from_tokens(&self.teams[team].deck)
    }

    pub fn decide_submit(
        &self,
        viewer: &Viewer,
        tokens: &[String],
    ) -> Result<Vec<EventBody>, SessionError> {
        let p = self.participant_of(viewer)?;
        self.require_phase(Phase::Bracelet)?;
        if tokens.is_empty() {
            return Err(SessionError::BadRequest("no cards submitted".into()));
        }
        let missing = self.team_deck(p.team).missing(tokens);
        if !missing.is_empty() {
            return Err(SessionError::NotInDeck(missing));
        }
        let verdict = validate_sequence(&self.lang.model, tokens, self.config.policy)?;
        Ok(vec![EventBody::BraceletSubmitted {
            index: self.submissions.len(),
            team: self.teams[p.team].name.clone(),
            participant: p.token.clone(),
            author: p.name.clone(),
            tokens: tokens.to_vec(),
            verdict,
        }])
    }

    /// Ranked next cards from what the team holds beyond `prefix`.
    pub fn suggest(
        &self,
        viewer: &Viewer,
        prefix: &[String],
    ) -> Result<Vec<Suggestion<f64>>, SessionError> {
        let p = self.participant_of(viewer)?;
        self.require_phase(Phase::Bracelet)?;
        if !self.config.hints {
            return Err(SessionError::HintsDisabled);
        }
        let deck = self.team_deck(p.team);
        let remaining = deck
            .without(prefix)
            .ok_or_else(|| SessionError::NotInDeck(deck.missing(prefix)))?;
        Ok(suggest_next(
            &self.lang.model,
            prefix,
            &remaining,
            self.config.policy,
        )?)
    }

    /// One vote per participant and rule; a repeated proposal changes nothing.
    pub fn decide_propose(
        &self,
        viewer: &Viewer,
        text: &str,
    ) -> Result<Vec<EventBody>, SessionError> {
        let p = self.participant_of(viewer)?;
        self.require_phase(Phase::Grammar)?;
        let rule = Rule::parse(text, &self.lang.clear)?;
        let voters: BTreeSet<&str> = self
            .proposals
            .iter()
            .filter(|q| q.rule == rule)
            .map(|q| q.participant.as_str())
            .collect();
        if voters.contains(p.token.as_str()) {
            return Ok(Vec::new());
        }
        Ok(vec![EventBody::RuleProposed {
            participant: p.token.clone(),
            author: p.name.clone(),
            rule,
            votes: voters.len() + 1,
        }])
    }

    pub fn decide_hide(
        &self,
        viewer: &Viewer,
        index: usize,
        hidden: bool,
    ) -> Result<Vec<EventBody>, SessionError> {
        if *viewer != Viewer::Facilitator {
            return Err(SessionError::FacilitatorOnly);
        }
        let s = self
            .submissions
            .get(index)
            .ok_or_else(|| SessionError::BadRequest(format!("no submission {index}")))?;
        if s.hidden == hidden {
            return Ok(Vec::new());
        }
        Ok(vec![EventBody::SubmissionHidden { index, hidden }])
    }

    /// Tally per distinct rule, most votes first.
    pub fn poll(&self) -> Vec<PollEntry> {
        let mut by_rule: BTreeMap<&Rule, Vec<String>> = BTreeMap::new();
        for p in &self.proposals {
            by_rule.entry(&p.rule).or_default().push(p.author.clone());
        }
        let mut out: Vec<PollEntry> = by_rule
            .into_iter()
            .map(|(rule, proposers)| PollEntry {
                rule: rule.to_string(),
                votes: proposers.len(),
                proposers,
            })
            .collect();
        out.sort_by(|a, b| b.votes.cmp(&a.votes).then_with(|| a.rule.cmp(&b.rule)));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f1_session(policy: BoundaryPolicy) -> Session {
        let config = SessionConfig {
            corpus: "f1".into(),
            seed: 7,
            policy,
            ..SessionConfig::default()
        };
        Session::create("s", config, "key", &CorpusRegistry::builtin(), 0).unwrap()
    }

    fn commit(s: &mut Session, bodies: Vec<EventBody>) {
        for body in bodies {
            let version = s.version() + 1;
            s.apply(Event {
                version,
                timestamp: version,
                body,
            })
            .unwrap();
        }
    }

    fn join(s: &mut Session, team: &str, token: &str) -> Viewer {
        let (token, bodies) = s.decide_join(None, team, token, token.to_string()).unwrap();
        commit(s, bodies);
        s.viewer(Some(&token)).unwrap()
    }

    #[test]
    fn phases_advance_in_order_and_stop_at_closed() {
        let mut s = f1_session(BoundaryPolicy::EndOptional);
        let mut seen = vec![s.phase()];
        while s.phase() != Phase::Closed {
            let bodies = s
                .decide_advance(&Viewer::Facilitator, None, &BTreeMap::new())
                .unwrap();
            commit(&mut s, bodies);
            seen.push(s.phase());
        }
        assert_eq!(seen, Phase::ORDER);
        assert!(matches!(
            s.decide_advance(&Viewer::Facilitator, None, &BTreeMap::new()),
            Err(SessionError::Closed)
        ));
    }

    #[test]
    fn skipping_a_phase_is_refused() {
        let s = f1_session(BoundaryPolicy::EndOptional);
        assert!(matches!(
            s.decide_advance(&Viewer::Facilitator, Some(Phase::Grammar), &BTreeMap::new()),
            Err(SessionError::BadRequest(_))
        ));
    }

    #[test]
    fn facilitator_deal_is_honoured_and_decks_are_masked_sentences() {
        let mut s = f1_session(BoundaryPolicy::EndOptional);
        let deal = BTreeMap::from([("team-1".to_string(), 1), ("team-2".to_string(), 3)]);
        let bodies = s.decide_advance(&Viewer::Facilitator, None, &deal).unwrap();
        commit(&mut s, bodies);
        let masked = &s.language().masked;
        for (team, id) in s.teams().iter().zip([1, 3]) {
            assert_eq!(team.sentence, Some(id));
            let mut want = masked.sentences[id - 1].surfaces();
            let mut got = team.deck.clone();
            want.sort();
            got.sort();
            assert_eq!(got, want);
        }
    }

    #[test]
    fn join_is_idempotent_per_token_and_capped() {
        let config = SessionConfig {
            corpus: "f1".into(),
            team_cap: Some(1),
            ..SessionConfig::default()
        };
        let mut s = Session::create("s", config, "key", &CorpusRegistry::builtin(), 0).unwrap();
        join(&mut s, "team-1", "ada");
        let (token, bodies) = s
            .decide_join(Some("ada"), "team-2", "ada", "other".into())
            .unwrap();
        assert_eq!(token, "ada");
        assert!(bodies.is_empty());
        assert!(matches!(
            s.decide_join(None, "team-1", "bob", "bob".into()),
            Err(SessionError::TeamFull { cap: 1, .. })
        ));
        assert!(matches!(
            s.decide_join(None, "team-9", "bob", "bob".into()),
            Err(SessionError::UnknownTeam(_))
        ));
    }

    #[test]
    fn submission_checks_the_deck_and_scores_server_side() {
        let mut s = f1_session(BoundaryPolicy::EndOptional);
        let ada = join(&mut s, "team-1", "ada");
        let deal = BTreeMap::from([("team-1".to_string(), 1)]);
        let bodies = s.decide_advance(&Viewer::Facilitator, None, &deal).unwrap();
        commit(&mut s, bodies);
        let table = s.language().table.clone();
        let s1 = table
            .mask_tokens(&["il", "mio", "cane", "è", "nel", "giardino"])
            .unwrap();
        let bodies = s.decide_submit(&ada, &s1).unwrap();
        commit(&mut s, bodies);
        assert!(s.submissions()[0].verdict.valid);
        assert_eq!(s.teams()[0].board, s1);
        assert!(s.teams()[0].remaining().is_empty());

        let gatto = table.mask_of("gatto").unwrap().to_string();
        assert!(matches!(
            s.decide_submit(&ada, std::slice::from_ref(&gatto)),
            Err(SessionError::NotInDeck(m)) if m == vec![gatto]
        ));
    }

    #[test]
    fn suggestions_follow_the_prefix() {
        let mut s = f1_session(BoundaryPolicy::EndOptional);
        let ada = join(&mut s, "team-1", "ada");
        let deal = BTreeMap::from([("team-1".to_string(), 1)]);
        let bodies = s.decide_advance(&Viewer::Facilitator, None, &deal).unwrap();
        commit(&mut s, bodies);
        let il = s.language().table.mask_of("il").unwrap().to_string();
        let first = s.suggest(&ada, &[]).unwrap();
        assert_eq!(first.len(), 1);
        assert_eq!(first[0].token, il);
        assert_eq!(first[0].probability, 1.0);
        let all = s.teams()[0].deck.clone();
        assert!(s.suggest(&ada, &all).unwrap().is_empty());
    }

    #[test]
    fn repeated_proposals_by_one_participant_count_once() {
        let mut s = f1_session(BoundaryPolicy::EndOptional);
        let ada = join(&mut s, "team-1", "ada");
        let bob = join(&mut s, "team-2", "bob");
        for _ in 0..2 {
            let bodies = s
                .decide_advance(&Viewer::Facilitator, None, &BTreeMap::new())
                .unwrap();
            commit(&mut s, bodies);
        }
        for who in [&ada, &ada, &bob] {
            let bodies = s.decide_propose(who, "S = NP VP").unwrap();
            commit(&mut s, bodies);
        }
        let poll = s.poll();
        assert_eq!(poll.len(), 1);
        assert_eq!(poll[0].votes, 2);
        assert_eq!(poll[0].rule, "S = NP VP");
        assert!(matches!(
            s.decide_propose(&ada, "S = XP"),
            Err(SessionError::Rule(_))
        ));
    }

    #[test]
    fn replay_reproduces_the_state() {
        let mut s = f1_session(BoundaryPolicy::EndOptional);
        let ada = join(&mut s, "team-1", "ada");
        let bodies = s
            .decide_advance(&Viewer::Facilitator, None, &BTreeMap::new())
            .unwrap();
        commit(&mut s, bodies);
        let deck = s.teams()[0].deck.clone();
        let bodies = s.decide_submit(&ada, &deck[..2]).unwrap();
        commit(&mut s, bodies);
        let again = Session::replay(s.events().to_vec(), &CorpusRegistry::builtin()).unwrap();
        assert_eq!(again.teams(), s.teams());
        assert_eq!(again.submissions(), s.submissions());
        assert_eq!(again.version(), s.version());
        assert_eq!(again.phase(), s.phase());
    }

    #[test]
    fn gaps_in_the_log_are_rejected() {
        let mut s = f1_session(BoundaryPolicy::EndOptional);
        let err = s.apply(Event {
            version: 5,
            timestamp: 0,
            body: EventBody::PhaseChanged {
                from: Phase::Lobby,
                to: Phase::Bracelet,
            },
        });
        assert!(matches!(err, Err(SessionError::Corrupt(_))));
    }

    #[test]
    fn log_lines_have_the_four_fields() {
        let s = f1_session(BoundaryPolicy::EndOptional);
        let line = serde_json::to_value(&s.events()[0]).unwrap();
        let keys: BTreeSet<&str> = line
            .as_object()
            .unwrap()
            .keys()
            .map(String::as_str)
            .collect();
        assert_eq!(
            keys,
            BTreeSet::from(["version", "timestamp", "kind", "payload"])
        );
        let back: Event = serde_json::from_value(line).unwrap();
        assert_eq!(back, s.events()[0]);
    }
}
