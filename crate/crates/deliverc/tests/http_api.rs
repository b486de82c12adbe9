mod common;

use std::sync::Arc;

use common::{echo, service_with, INJECTION};
use deliverc::http::{router, SessionView, StartResponse, SubmitResponse, TaskView};
use deliverc::session::store::MemoryStore;
use deliverc::session::ServiceConfig;
use serde_json::{json, Value};

struct Api {
    base: String,
    store: Arc<MemoryStore>,
}

fn api(admin: Option<&str>) -> Api {
    let store = Arc::new(MemoryStore::default());
    let svc = Arc::new(service_with(echo(), Box::new(store.clone()), ServiceConfig::default()));
    let addr = common::spawn_server(router(svc, admin.map(String::from)));
    Api { base: format!("http://{addr}"), store }
}

fn status(r: Result<ureq::Response, ureq::Error>) -> u16 {
    match r {
        Ok(resp) => resp.status(),
        Err(ureq::Error::Status(code, _)) => code,
        Err(e) => panic!("{e}"),
    }
}

impl Api {
    fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    fn start(&self, student: &str) -> StartResponse {
        ureq::post(&self.url("/sessions")).send_json(json!({"studentId": student})).unwrap().into_json().unwrap()
    }

    fn get(&self, path: &str, token: &str) -> Result<ureq::Response, ureq::Error> {
        ureq::get(&self.url(path)).set("Authorization", &format!("Bearer {token}")).call()
    }

    fn submit(&self, id: &str, token: &str, source: &str) -> Result<ureq::Response, ureq::Error> {
        ureq::post(&self.url(&format!("/sessions/{id}/submit")))
            .set("Authorization", &format!("Bearer {token}"))
            .set("Content-Type", "text/plain")
            .send_string(source)
    }
}

#[test]
fn a_student_plays_through_the_api() {
    let api = api(None);
    let start = api.start("ana");
    assert!(!start.resumed);
    let id = start.session.session_id.clone();
    let token = start.token.clone();

    let task: TaskView = api.get(&format!("/sessions/{id}/task"), &token).unwrap().into_json().unwrap();
    assert_eq!((task.level, task.ordinal), (1, 1));
    assert!(!task.requirements.is_empty());
    let raw: Value = api.get(&format!("/sessions/{id}/task"), &token).unwrap().into_json().unwrap();
    assert!(raw.get("referenceSolution").is_none() && raw.get("referenceOutcome").is_none(), "{raw}");

    let wrong: SubmitResponse = api.submit(&id, &token, "V(3);").unwrap().into_json().unwrap();
    assert_eq!(wrong.result.to_string(), "OutcomeMismatch");
    assert_eq!(wrong.trace.as_deref(), Some("V03"));
    assert!(!wrong.differences.is_empty());
    assert_eq!(wrong.session.mistake_count, 1);

    let mistake: SubmitResponse = api.submit(&id, &token, "V(0) P(3);").unwrap().into_json().unwrap();
    assert_eq!(mistake.result.to_string(), "ParseError");
    assert_eq!(mistake.diagnostics[0].line, 1);

    let solution = api.store.load_task_solution(&id);
    let pass: Value = api.submit(&id, &token, &solution).unwrap().into_json().unwrap();
    assert_eq!(pass["verdict"], "meets_expectations");
    assert_eq!(pass["session"]["completedCount"], 1);
    assert_eq!(pass["session"]["taskOrdinal"], 2);

    let hud: SessionView = api.get(&format!("/sessions/{id}"), &token).unwrap().into_json().unwrap();
    assert_eq!((hud.completed_count, hud.mistake_count, hud.task_ordinal), (1, 2, 2));

    let again = api.start("ana");
    assert!(again.resumed);
    assert_eq!(again.session, hud);
}

#[test]
fn injection_text_is_just_a_wrong_program() {
    let api = api(None);
    let start = api.start("eve");
    let (id, token) = (start.session.session_id, start.token);
    api.get(&format!("/sessions/{id}/task"), &token).unwrap();
    let out: Value = api.submit(&id, &token, INJECTION).unwrap().into_json().unwrap();
    assert_eq!(out["verdict"], "incorrect");
    assert_eq!(out["result"], "ParseError");
    assert_eq!(out["session"]["completedCount"], 0);
    assert!(!out["feedback"]["input_flags"].as_array().unwrap().is_empty());
}

#[test]
fn requests_need_the_sessions_token() {
    let api = api(None);
    let ana = api.start("ana");
    let ben = api.start("ben");
    let path = format!("/sessions/{}", ana.session.session_id);
    assert_eq!(status(ureq::get(&api.url(&path)).call()), 401);
    assert_eq!(status(api.get(&path, "not-a-token")), 401);
    assert_eq!(status(api.get(&path, &ben.token)), 403);
    assert_eq!(status(api.get(&path, &ana.token)), 200);
    assert_eq!(status(api.submit(&ana.session.session_id, &ben.token, "V(1);")), 403);
}

#[test]
fn errors_map_to_status_codes() {
    let api = api(None);
    let ana = api.start("ana");
    let id = ana.session.session_id.clone();
    assert_eq!(status(api.submit(&id, &ana.token, "V(1);")), 409, "no task issued yet");
    assert_eq!(status(ureq::post(&api.url("/sessions")).send_json(json!({"studentId": ""}))), 400);
    assert_eq!(status(ureq::post(&api.url("/sessions")).send_json(json!({"name": "x"}))), 422);
    let big = "V(1);\n".repeat(20_000);
    api.get(&format!("/sessions/{id}/task"), &ana.token).unwrap();
    assert_eq!(status(api.submit(&id, &ana.token, &big)), 413);
    api.store.set_available(false);
    assert_eq!(status(ureq::post(&api.url("/sessions")).send_json(json!({"studentId": "zed"}))), 503);
    assert_eq!(status(ureq::get(&api.url("/analytics/export")).call()), 503);
}

#[test]
fn analytics_export_is_csv() {
    let api = api(Some("admin-secret"));
    let ana = api.start("ana");
    let id = ana.session.session_id.clone();
    api.get(&format!("/sessions/{id}/task"), &ana.token).unwrap();
    api.submit(&id, &ana.token, "V(3);").unwrap();
    api.submit(&id, &ana.token, "V(4);").unwrap();
    assert_eq!(status(ureq::get(&api.url("/analytics/export")).call()), 401);
    let resp = ureq::get(&api.url("/analytics/export")).set("Authorization", "Bearer admin-secret").call().unwrap();
    assert!(resp.content_type().starts_with("text/csv"));
    let body = resp.into_string().unwrap();
    assert_eq!(body, "level,unique_students\n1,1\n\nstudent_id,level,attempts\nana,1,2\n");
}

#[test]
fn health_and_metrics_are_public() {
    let api = api(None);
    assert_eq!(ureq::get(&api.url("/health")).call().unwrap().into_string().unwrap(), "ok");
    let m: Value = ureq::get(&api.url("/metrics")).call().unwrap().into_json().unwrap();
    assert_eq!(m["fallbacks"], 0);
}

trait Solutions {
    fn load_task_solution(&self, session: &str) -> String;
}

impl Solutions for MemoryStore {
    /// The reference solution of the session's latest issued task, read from
    /// the event log the server wrote.
    fn load_task_solution(&self, session: &str) -> String {
        use deliverc::session::events::Event;
        use deliverc::session::store::EventStore;
        self.load()
            .unwrap()
            .into_iter()
            .rev()
            .find_map(|e| match e {
                Event::TaskIssued { session_id, task, .. } if session_id == session => Some(task.reference_solution),
                _ => None,
            })
            .expect("a task was issued")
    }
}
