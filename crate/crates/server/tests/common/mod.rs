#![allow(dead_code)]

use std::collections::BTreeSet;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use glossa_core::bracelet::validate_sequence;
use glossa_core::masking::{build_masking_table, mask_corpus};
use glossa_core::{fixtures, Model};
use glossa_server::{mask_config, router, AppState, CorpusRegistry, Phase, SessionConfig};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

/// In-process client that keeps every response body it has seen.
pub struct Client {
    app: Router,
    pub seen: Vec<(String, Value)>,
}

impl Client {
    pub fn new() -> Self {
        Self::with_state(AppState::ephemeral(CorpusRegistry::builtin()))
    }

    pub fn with_state(state: AppState) -> Self {
        Client {
            app: router(state),
            seen: Vec::new(),
        }
    }

    pub async fn call(
        &mut self,
        method: Method,
        uri: &str,
        bearer: Option<&str>,
        body: Option<Value>,
    ) -> (StatusCode, Value) {
        let mut req = Request::builder().method(method).uri(uri);
        if let Some(b) = bearer {
            req = req.header("authorization", format!("Bearer {b}"));
        }
        let req = match body {
            Some(v) => req
                .header("content-type", "application/json")
                .body(Body::from(v.to_string())),
            None => req.body(Body::empty()),
        }
        .unwrap();
        let resp = self.app.clone().oneshot(req).await.unwrap();
        let status = resp.status();
        let bytes = resp.into_body().collect().await.unwrap().to_bytes();
        let value: Value = if bytes.is_empty() {
            Value::Null
        } else {
            serde_json::from_slice(&bytes)
                .unwrap_or_else(|_| Value::String(String::from_utf8_lossy(&bytes).into()))
        };
        self.seen.push((uri.to_string(), value.clone()));
        (status, value)
    }

    pub async fn get(&mut self, uri: &str, bearer: Option<&str>) -> (StatusCode, Value) {
        self.call(Method::GET, uri, bearer, None).await
    }

    pub async fn post(
        &mut self,
        uri: &str,
        bearer: Option<&str>,
        body: Value,
    ) -> (StatusCode, Value) {
        self.call(Method::POST, uri, bearer, Some(body)).await
    }

    pub async fn create(&mut self, body: Value) -> (String, String) {
        let (status, v) = self.post("/sessions", None, body).await;
        assert_eq!(status, StatusCode::CREATED, "{v}");
        (
            v["session"].as_str().unwrap().into(),
            v["facilitator_key"].as_str().unwrap().into(),
        )
    }

    pub async fn join(&mut self, id: &str, team: &str, name: &str) -> String {
        let (status, v) = self
            .post(
                &format!("/sessions/{id}/join"),
                None,
                json!({ "team": team, "name": name }),
            )
            .await;
        assert_eq!(status, StatusCode::OK, "{v}");
        v["participant_token"].as_str().unwrap().into()
    }

    pub async fn advance(&mut self, id: &str, key: &str, body: Value) -> Value {
        let (status, v) = self
            .post(&format!("/sessions/{id}/phase"), Some(key), body)
            .await;
        assert_eq!(status, StatusCode::OK, "{v}");
        v
    }
}

/// Words of `lexicon` found in any string (or object key) of `value`,
/// compared case-insensitively token by token.
pub fn clear_words(value: &Value, lexicon: &BTreeSet<String>) -> Vec<String> {
    fn scan(text: &str, lexicon: &BTreeSet<String>, out: &mut Vec<String>) {
        for raw in text.split_whitespace() {
            let token = raw
                .trim_matches(|c: char| !c.is_alphanumeric() && c != '\'')
                .to_lowercase();
            if lexicon.contains(&token) {
                out.push(token);
            }
        }
    }
    fn walk(v: &Value, lexicon: &BTreeSet<String>, out: &mut Vec<String>) {
        match v {
            Value::String(s) => scan(s, lexicon, out),
            Value::Array(items) => items.iter().for_each(|i| walk(i, lexicon, out)),
            Value::Object(map) => {
                for (k, v) in map {
                    scan(k, lexicon, out);
                    walk(v, lexicon, out);
                }
            }
            _ => {}
        }
    }
    let mut out = Vec::new();
    walk(value, lexicon, &mut out);
    out
}

/// Phase names in `seen` must appear in the lifecycle order, never going back.
pub fn monotone(seen: &[String]) -> bool {
    let rank = |p: &str| Phase::ORDER.iter().position(|q| q.as_str() == p);
    let ranks: Option<Vec<usize>> = seen.iter().map(|p| rank(p)).collect();
    ranks.is_some_and(|r| r.windows(2).all(|w| w[0] <= w[1]))
}

/// Findings of one scripted run.
#[derive(Debug, Default)]
pub struct Report {
    pub monotone: bool,
    pub leaks: Vec<String>,
    pub verdicts_checked: usize,
    pub verdicts_agree: bool,
    pub gap_free: bool,
    pub revealed_first_line: String,
    pub clear_first_line: String,
}

struct Watcher {
    bearer: String,
    since: u64,
    versions: Vec<u64>,
    phases: Vec<String>,
}

impl Watcher {
    async fn poll(&mut self, client: &mut Client, id: &str) {
        let (status, v) = client
            .get(
                &format!("/sessions/{id}/stream?since={}", self.since),
                Some(&self.bearer),
            )
            .await;
        assert_eq!(status, StatusCode::OK, "{v}");
        for e in v["events"].as_array().unwrap() {
            let version = e["version"].as_u64().unwrap();
            self.versions.push(version);
            if e["kind"] == "phase_changed" {
                self.phases
                    .push(e["payload"]["to"].as_str().unwrap().into());
            }
        }
        self.phases.push(v["phase"].as_str().unwrap().into());
        self.since = v["version"].as_u64().unwrap();
    }
}

/// create → join×4 in 2 teams → Bracelet → 3 submissions → Grammar →
/// 2 rule proposals → Reveal, with every client polling its stream after
/// each step.
pub async fn scripted_session(corpus: &str, seed: u64) -> Report {
    let clear = fixtures::builtin(corpus).unwrap();
    let lexicon: BTreeSet<String> = clear.lexicon().into_iter().collect();
    let mut client = Client::new();
    let (id, key) = client
        .create(json!({ "corpus": corpus, "seed": seed }))
        .await;

    let mut tokens = Vec::new();
    for (team, name) in [
        ("team-1", "ada"),
        ("team-1", "bo"),
        ("team-2", "cy"),
        ("team-2", "dee"),
    ] {
        tokens.push(client.join(&id, team, name).await);
    }
    let mut watchers: Vec<Watcher> = std::iter::once(key.clone())
        .chain(tokens.iter().cloned())
        .map(|bearer| Watcher {
            bearer,
            since: 0,
            versions: Vec::new(),
            phases: Vec::new(),
        })
        .collect();
    macro_rules! sync {
        () => {
            for w in watchers.iter_mut() {
                w.poll(&mut client, &id).await;
            }
        };
    }
    sync!();

    client
        .advance(
            &id,
            &key,
            json!({ "to": "bracelet", "deal": { "team-1": 1, "team-2": 2 } }),
        )
        .await;
    sync!();

    // team 1 rebuilds its sentence from the masked corpus panel
    let (_, masked) = client
        .get(&format!("/sessions/{id}/corpus"), Some(&tokens[0]))
        .await;
    let line1: Vec<String> = masked["sentences"][0]["text"]
        .as_str()
        .unwrap()
        .split(' ')
        .map(String::from)
        .collect();
    let mut reversed = line1.clone();
    reversed.reverse();
    let (_, state2) = client
        .get(&format!("/sessions/{id}"), Some(&tokens[2]))
        .await;
    let deck2: Vec<String> = serde_json::from_value(state2["teams"][1]["deck"].clone()).unwrap();
    for (who, cards) in [(0, line1.clone()), (1, reversed), (2, deck2)] {
        let (status, v) = client
            .post(
                &format!("/sessions/{id}/bracelet"),
                Some(&tokens[who]),
                json!({ "tokens": cards }),
            )
            .await;
        assert_eq!(status, StatusCode::CREATED, "{v}");
        sync!();
    }

    client.advance(&id, &key, json!({ "to": "grammar" })).await;
    sync!();
    for (who, rule) in [(0, "S = NP VP"), (2, "NP = ART N")] {
        let (status, v) = client
            .post(
                &format!("/sessions/{id}/rules"),
                Some(&tokens[who]),
                json!({ "rule": rule }),
            )
            .await;
        assert_eq!(status, StatusCode::OK, "{v}");
        sync!();
    }

    let before_reveal = client.seen.len();
    client.advance(&id, &key, json!({ "to": "reveal" })).await;
    sync!();
    let (status, reveal) = client
        .get(&format!("/sessions/{id}/reveal"), Some(&tokens[3]))
        .await;
    assert_eq!(status, StatusCode::OK, "{reveal}");

    let mut report = Report {
        monotone: watchers.iter().all(|w| monotone(&w.phases)),
        ..Report::default()
    };
    for (uri, body) in &client.seen[..before_reveal] {
        for w in clear_words(body, &lexicon) {
            report.leaks.push(format!("{w} in {uri}"));
        }
    }

    // every watcher saw 1..=v exactly once, in order
    let latest = watchers[0].since;
    report.gap_free = watchers
        .iter()
        .all(|w| w.versions == (1..=latest).collect::<Vec<u64>>());

    let table = build_masking_table(
        &clear,
        seed,
        &mask_config(SessionConfig::default().mask_mode),
    )
    .unwrap();
    let model = Model::train(&mask_corpus(&clear, &table).unwrap()).unwrap();
    let (_, full) = client
        .get(&format!("/sessions/{id}/stream?since=0"), Some(&key))
        .await;
    report.verdicts_agree = true;
    for e in full["events"].as_array().unwrap() {
        if e["kind"] != "bracelet_submitted" {
            continue;
        }
        let cards: Vec<String> = serde_json::from_value(e["payload"]["tokens"].clone()).unwrap();
        let again = validate_sequence(&model, &cards, SessionConfig::default().policy).unwrap();
        report.verdicts_checked += 1;
        report.verdicts_agree &= serde_json::to_value(&again).unwrap() == e["payload"]["verdict"];
    }
    report.revealed_first_line = reveal["submissions"][0]["clear"].as_str().unwrap().into();
    report.clear_first_line = clear.sentences[0].text();
    report
}
