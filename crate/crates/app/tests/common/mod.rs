#![allow(dead_code)]

use std::collections::BTreeMap;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use rand::seq::IndexedRandom;
use rand::Rng;
use scalecal::session::{Answer, PairAnswer, Question};
use scalecal_core::scales::VerbalCategory;
use serde_json::Value;
use tower::ServiceExt;

fn pair_answer(left: &str, right: &str, rng: &mut impl Rng) -> PairAnswer {
    let category = *VerbalCategory::ALL.choose(rng).unwrap();
    let preferred = match category {
        VerbalCategory::Equal => "neither".to_string(),
        _ if rng.random_bool(0.5) => left.to_string(),
        _ => right.to_string(),
    };
    // Either display order of the pair is accepted.
    let items = if rng.random_bool(0.5) {
        [left.to_string(), right.to_string()]
    } else {
        [right.to_string(), left.to_string()]
    };
    PairAnswer {
        items,
        preferred,
        category,
    }
}

/// A valid random answer to `question`. Scores are 1..=10 so cleaning keeps
/// the record whenever all categories were used.
pub fn random_answer(question: &Question, rng: &mut impl Rng) -> Answer {
    match question {
        Question::PairChoice { left, right, .. } => {
            Answer::PairChoice(pair_answer(&left.name, &right.name, rng))
        }
        Question::RepeatChoice { left, right, .. } => {
            Answer::RepeatChoice(pair_answer(&left.name, &right.name, rng))
        }
        Question::DirectScores { items, .. } => Answer::DirectScores {
            scores: items
                .iter()
                .map(|i| (i.name.clone(), rng.random_range(1..=10)))
                .collect::<BTreeMap<_, _>>(),
        },
        Question::Demographics { .. } => Answer::Demographics {
            gender: ["f", "m", "x"].choose(rng).unwrap().to_string(),
            age: rng.random_range(18..80).to_string(),
            county: ["Pest", "Baranya", "Somogy"]
                .choose(rng)
                .unwrap()
                .to_string(),
        },
    }
}

pub async fn call(
    app: &Router,
    method: Method,
    uri: &str,
    body: Option<Value>,
) -> (StatusCode, Vec<u8>) {
    let mut req = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(v) => {
            req = req.header("content-type", "application/json");
            Body::from(serde_json::to_vec(&v).unwrap())
        }
        None => Body::empty(),
    };
    let resp = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    let bytes = resp
        .into_body()
        .collect()
        .await
        .unwrap()
        .to_bytes()
        .to_vec();
    (status, bytes)
}

pub async fn call_json(
    app: &Router,
    method: Method,
    uri: &str,
    body: Option<Value>,
) -> (StatusCode, Value) {
    let (status, bytes) = call(app, method, uri, body).await;
    (
        status,
        serde_json::from_slice(&bytes).unwrap_or(Value::Null),
    )
}

/// Drives one session over HTTP with random valid answers. Returns the
/// session id and the number of accepted answers.
pub async fn drive_session(app: &Router, rng: &mut impl Rng) -> (String, usize) {
    let (status, created) = call_json(app, Method::POST, "/sessions", None).await;
    assert_eq!(status, StatusCode::CREATED);
    let id = created["session_id"].as_str().unwrap().to_string();
    let mut steps = 0;
    loop {
        let (status, q) = call_json(app, Method::GET, &format!("/sessions/{id}/next"), None).await;
        if status == StatusCode::GONE {
            return (id, steps);
        }
        assert_eq!(status, StatusCode::OK, "{q}");
        let question: Question = serde_json::from_value(q).unwrap();
        let answer = serde_json::to_value(random_answer(&question, rng)).unwrap();
        let (status, ack) = call_json(
            app,
            Method::POST,
            &format!("/sessions/{id}/answers"),
            Some(answer),
        )
        .await;
        assert_eq!(status, StatusCode::OK, "{ack}");
        assert_eq!(ack["accepted"], true);
        steps += 1;
        assert!(steps <= 100, "session does not terminate");
    }
}
