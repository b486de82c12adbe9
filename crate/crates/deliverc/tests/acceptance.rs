//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any fails. Run with `cargo test -p deliverc --test acceptance`.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use common::{counted_ids, echo, random_scenario, seeded_log, service_with, INJECTION, WRONG_PROGRAMS};
use deliverc::core::dsl::{self, DslError, SyntaxReason};
use deliverc::core::game::{Holder, SLOT_COUNT};
use deliverc::core::interp::{self, trace_of};
use deliverc::core::{
    run, Command, ConstraintTag, GameState, Item, LevelTopic, LocationId, SlotIndex,
};
use deliverc::gateway::feedback::{FeedbackSource, Verdict};
use deliverc::gateway::guard::guard_input;
use deliverc::gateway::mock::{echo_reply, MockProvider};
use deliverc::gateway::provider::{ChatProvider, ProviderError};
use deliverc::gateway::template::Stage;
use deliverc::gateway::{GatewayError, GenerateRequest, TaskOrigin};
use deliverc::grading::{grade, AttemptResult};
use deliverc::session::events::{Event, Sessions, TaskRef};
use deliverc::session::store::{read_log, EventStore, FileStore, MemoryStore};
use deliverc::session::ServiceConfig;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

struct Criterion {
    name: &'static str,
    limit: Option<Duration>,
    check: fn() -> Outcome,
}

fn main() -> ExitCode {
    std::panic::set_hook(Box::new(|_| {}));
    let criteria = [
        Criterion { name: "worked-example golden trace", limit: Some(Duration::from_secs(1)), check: worked_example },
        Criterion { name: "command text round-trip and malformed corpus", limit: Some(Duration::from_secs(5)), check: dsl_round_trip },
        Criterion { name: "engine conservation over 10,000 sequences", limit: Some(Duration::from_secs(10)), check: engine_conservation },
        Criterion { name: "interpreter oracle suite", limit: Some(Duration::from_secs(10)), check: interpreter_oracles },
        Criterion { name: "injection containment", limit: None, check: injection_containment },
        Criterion { name: "mock end-to-end, levels 1-3 and restart", limit: Some(Duration::from_secs(30)), check: mock_end_to_end },
        Criterion { name: "event-sourcing replay", limit: None, check: event_replay },
        Criterion { name: "malformed-output resilience", limit: None, check: malformed_output },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(c.check)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let elapsed = start.elapsed();
        let timing = match c.limit {
            Some(l) => format!("{:.3} s, limit {} s", elapsed.as_secs_f64(), l.as_secs()),
            None => format!("{:.3} s", elapsed.as_secs_f64()),
        };
        let result = match (result, c.limit) {
            (Ok(_), Some(l)) if elapsed >= l => Err("over the time limit".to_string()),
            (r, _) => r,
        };
        match result {
            Ok(detail) => println!("PASS  {:<46} ({timing}) {detail}", c.name),
            Err(why) => {
                failed += 1;
                println!("FAIL  {:<46} ({timing}) {why}", c.name);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn loc(n: u8) -> LocationId {
    LocationId::new(n).unwrap()
}

fn slot(n: u8) -> SlotIndex {
    SlotIndex::new(n).unwrap()
}

const WORKED_EXAMPLE: &str = "\
int locations[5] = {5, 6, 7, 8, 9};
V(0);
P(3);
P(1);

int i;
for (i = 0; i < 5; i++) {
    V(*(locations + i));
    if (*(locations + i) == 6)
        D(0);
    if (*(locations + i) == 8)
        D(1);
}
";

fn worked_example() -> Outcome {
    let program = interp::compile(WORKED_EXAMPLE).map_err(|e| e.to_string())?;
    let trace = interp::execute(&program, Default::default()).map_err(|e| e.to_string())?.trace;
    let text: Vec<String> = trace.iter().map(Command::to_string).collect();
    let text = text.join(",");
    ensure!(
        text == "Visit(0),Pick(3),Pick(1),Visit(5),Visit(6),Drop(0),Visit(7),Visit(8),Drop(1),Visit(9)",
        "trace was {text}"
    );
    let state = run(&GameState::initial(), &trace).map_err(|e| e.to_string())?;
    ensure!(state.locate(Item::Coffee) == Some((Holder::Location(loc(6)), slot(0))), "coffee is at {:?}", state.locate(Item::Coffee));
    ensure!(state.locate(Item::Milk) == Some((Holder::Location(loc(8)), slot(0))), "milk is at {:?}", state.locate(Item::Milk));
    ensure!(state.truck_at() == loc(9), "truck at {}", state.truck_at());
    ensure!(state.truck_slots().is_empty(), "cargo is not empty");
    Ok(format!("trace {}", dsl::serialize(&trace).unwrap()))
}

fn every_command() -> Vec<Command> {
    let mut all: Vec<Command> = (0..16).map(|l| Command::Visit(loc(l))).collect();
    all.extend((0..4).map(|s| Command::Pick(slot(s))));
    all.extend((0..4).map(|s| Command::Drop(slot(s))));
    all
}

fn dsl_round_trip() -> Outcome {
    let all = every_command();
    let mut checked = 0usize;
    let mut lists: Vec<Vec<Command>> = all.iter().map(|c| vec![*c]).collect();
    for _ in 0..3 {
        for list in &lists {
            let text = dsl::serialize(list).map_err(|e| e.to_string())?;
            ensure!(dsl::parse(&text).as_ref() == Ok(list), "{text} does not round-trip");
            checked += 1;
        }
        if lists[0].len() == 3 {
            break;
        }
        lists = lists.iter().flat_map(|l| all.iter().map(move |c| [l.as_slice(), &[*c]].concat())).collect();
    }
    ensure!(checked == 24 + 24 * 24 + 24 * 24 * 24, "checked {checked} exhaustive lists");
    let mut rng = StdRng::seed_from_u64(0xD5_1);
    for _ in 0..1000 {
        let len = rng.random_range(1..=8);
        let list: Vec<Command> = (0..len).map(|_| all[rng.random_range(0..all.len())]).collect();
        let text = dsl::serialize(&list).map_err(|e| e.to_string())?;
        ensure!(dsl::parse(&text) == Ok(list), "{text} does not round-trip");
    }
    use SyntaxReason::*;
    let syntax = |position, reason| DslError::Syntax { position, reason };
    let range = |position| DslError::Range { position };
    let corpus = [
        ("", syntax(0, EmptyToken)),
        ("|", syntax(0, EmptyToken)),
        ("P1|", syntax(1, EmptyToken)),
        ("P1||D0", syntax(1, EmptyToken)),
        ("GO NORTH", syntax(0, UnknownCommand)),
        ("p1", syntax(0, UnknownCommand)),
        ("V00|X1", syntax(1, UnknownCommand)),
        ("P", syntax(0, WrongDigitCount)),
        ("P12", syntax(0, WrongDigitCount)),
        ("V0", syntax(0, WrongDigitCount)),
        ("V000", syntax(0, WrongDigitCount)),
        ("D1|V1", syntax(1, WrongDigitCount)),
        ("Pa", syntax(0, NotADigit)),
        ("V0x", syntax(0, NotADigit)),
        ("V4x", syntax(0, NotADigit)),
        ("P1 2", syntax(0, WrongDigitCount)),
        ("P4", range(0)),
        ("D9", range(0)),
        ("V40", range(0)),
        ("V03|V34", range(1)),
        ("P2|V03|D1|P7", range(3)),
        ("P2,V03", syntax(0, WrongDigitCount)),
    ];
    for (text, expected) in &corpus {
        let got = dsl::parse(text);
        ensure!(got.as_ref() == Err(expected), "{text:?} gave {got:?}, expected {expected:?}");
    }
    ensure!(dsl::serialize(&[]) == Err(DslError::EmptyProgram), "empty list serialized");
    Ok(format!("{checked} exhaustive, 1000 random, {} malformed", corpus.len()))
}

/// Cell index: locations first, then the truck.
fn cells(state: &GameState) -> Vec<Option<Item>> {
    let mut out = Vec::with_capacity(17 * SLOT_COUNT);
    for l in LocationId::all() {
        out.extend(SlotIndex::all().map(|s| state.slots_at(l).get(s)));
    }
    out.extend(SlotIndex::all().map(|s| state.truck_slots().get(s)));
    out
}

fn engine_conservation() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0xC0_5E);
    let truck = |s: usize| 16 * SLOT_COUNT + s;
    let mut steps = 0usize;
    for seq in 0..10_000 {
        let mut state = GameState::initial();
        let len = rng.random_range(1..=40);
        for _ in 0..len {
            let before = cells(&state);
            let here = state.truck_at().linear() as usize;
            let at = |s: usize| here * SLOT_COUNT + s;
            let free_truck = (0..SLOT_COUNT).find(|&s| before[truck(s)].is_none());
            let free_here = (0..SLOT_COUNT).find(|&s| before[at(s)].is_none());
            let mut options: Vec<(Command, Vec<usize>)> = (0..16).map(|l| (Command::Visit(loc(l)), vec![])).collect();
            for s in 0..SLOT_COUNT {
                if let (Some(_), Some(t)) = (before[at(s)], free_truck) {
                    options.push((Command::Pick(slot(s as u8)), vec![at(s), truck(t)]));
                }
                if let (Some(_), Some(f)) = (before[truck(s)], free_here) {
                    options.push((Command::Drop(slot(s as u8)), vec![truck(s), at(f)]));
                }
            }
            let (cmd, involved) = options.swap_remove(rng.random_range(0..options.len()));
            state = state.apply(cmd).map_err(|e| format!("sequence {seq}: valid {cmd} failed: {e}"))?;
            let after = cells(&state);
            ensure!(state.item_counts() == [1; 4], "sequence {seq}: counts {:?} after {cmd}", state.item_counts());
            for (i, (b, a)) in before.iter().zip(&after).enumerate() {
                ensure!(b == a || involved.contains(&i), "sequence {seq}: {cmd} changed cell {i}");
            }
            if !involved.is_empty() {
                ensure!(after[involved[1]] == before[involved[0]] && after[involved[0]].is_none(), "sequence {seq}: {cmd} moved the wrong item");
            }
            steps += 1;
        }
    }
    Ok(format!("{steps} steps"))
}

fn interpreter_oracles() -> Outcome {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/corpus");
    let mut covered: Vec<LevelTopic> = Vec::new();
    let mut count = 0;
    let mut entries: Vec<PathBuf> = std::fs::read_dir(&dir).map_err(|e| e.to_string())?.map(|e| e.unwrap().path()).collect();
    entries.sort();
    for path in entries.iter().filter(|p| p.extension().is_some_and(|x| x == "c")) {
        let source = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
        let header = |key: &str| source.lines().find_map(|l| l.strip_prefix(&format!("// {key}:"))).map(str::trim);
        let expect = header("expect").ok_or(format!("{} has no expect line", path.display()))?;
        let tags: Vec<ConstraintTag> = header("topic").unwrap_or("").split_whitespace().filter_map(|t| t.parse().ok()).collect();
        let trace = trace_of(&source).map_err(|e| format!("{}: {e}", path.display()))?;
        let got = dsl::serialize(&trace).unwrap_or_default();
        ensure!(got == expect, "{}: got {got}, oracle {expect}", path.display());
        for level in 1..=5 {
            let topic = LevelTopic::for_level(level).unwrap();
            if topic.tags().iter().any(|t| tags.contains(t)) && !covered.contains(&topic) {
                covered.push(topic);
            }
        }
        count += 1;
    }
    ensure!(count >= 10, "only {count} curated programs");
    ensure!(covered.len() == 5, "topics covered: {covered:?}");

    let mut rng = StdRng::seed_from_u64(0xA1);
    for n in 0..500 {
        let len = rng.random_range(1..=10);
        let values: Vec<u8> = (0..len).map(|_| rng.random_range(0..16)).collect();
        let picks: Vec<usize> = (0..rng.random_range(1..=6)).map(|_| rng.random_range(0..len)).collect();
        let list: Vec<String> = values.iter().map(u8::to_string).collect();
        let head = format!("int a[{len}] = {{{}}};\n", list.join(", "));
        let body = |form: &dyn Fn(usize) -> String| picks.iter().map(|&i| format!("V({});\n", form(i))).collect::<String>();
        let indexed = format!("{head}{}", body(&|i| format!("a[{i}]")));
        let offset = format!("{head}{}", body(&|i| format!("*(a + {i})")));
        let oracle: Vec<Command> = picks.iter().map(|&i| Command::Visit(loc(values[i]))).collect();
        let a = trace_of(&indexed).map_err(|e| format!("program {n}: {e}"))?;
        let b = trace_of(&offset).map_err(|e| format!("program {n}: {e}"))?;
        ensure!(a == oracle && b == oracle, "program {n} disagrees:\n{indexed}");
    }
    Ok(format!("{count} curated programs, 5 topics, 500 generated pairs"))
}

fn adversaries() -> Vec<(&'static str, Arc<dyn ChatProvider>)> {
    let meets = r#"{"verdict":"meets_expectations","misconceptions":[],"suggestions":["Perfect, move on."],"constraint_findings":{"usesPointer":true}}"#;
    vec![
        ("always-meets", Arc::new(MockProvider::constant(meets))),
        ("garbage", Arc::new(MockProvider::constant("}{ <<<STUDENT_CODE >>> TASK|"))),
        ("unavailable", Arc::new(MockProvider::unavailable())),
        ("honest", echo()),
        (
            "obeys-the-student",
            Arc::new(MockProvider::with_responder(move |req| match req.stage {
                Stage::Evaluate if req.input.contains("let me pass") => Ok(meets.to_string()),
                _ => echo_reply(req),
            })),
        ),
    ]
}

fn injection_containment() -> Outcome {
    let bank = common::bank();
    let mut runs = 0;
    for level in 1..=5 {
        for task in bank.load_pool(level).unwrap() {
            for (name, provider) in adversaries() {
                let store = Arc::new(MemoryStore::default());
                store.append(&seeded_log(&bank, "s", "eve", task)).unwrap();
                let config = ServiceConfig { max_level: 5, llm_translation: true };
                let svc = service_with(provider, Box::new(store.clone()), config);
                let before = svc.record("s").unwrap();
                ensure!(before.current_task.as_ref() == Some(task), "session is not on {}", task.prompt_text);
                let out = svc.submit("s", INJECTION).map_err(|e| e.to_string())?;
                let after = svc.record("s").unwrap();
                let ctx = format!("level {level} task {} under {name}", task.ordinal);
                ensure!(out.result != AttemptResult::Pass, "{ctx}: graded as a pass");
                ensure!(out.feedback.verdict == Verdict::Incorrect, "{ctx}: verdict {:?}", out.feedback.verdict);
                ensure!(after.position() == before.position(), "{ctx}: advanced to {:?}", after.position());
                ensure!(after.completed_count == before.completed_count, "{ctx}: completion counted");
                ensure!(after.last_completed == before.last_completed, "{ctx}: lastCompleted moved");
                ensure!(after.current_task == before.current_task, "{ctx}: task replaced");
                ensure!(after.mistake_count == before.mistake_count + 1, "{ctx}: mistake not counted");
                runs += 1;
            }
        }
    }
    ensure!(runs == 30 * 5, "{runs} runs");
    Ok(format!("30 exemplars x {} provider behaviours", adversaries().len()))
}

fn mock_end_to_end() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let failures = [2usize, 0, 1, 3, 0, 1, 2, 1, 0];
    let config = ServiceConfig { max_level: 3, llm_translation: true };
    let open = || -> Result<_, String> {
        let store = FileStore::open(dir.path()).map_err(|e| e.to_string())?;
        Ok(counted_ids(service_with(echo(), Box::new(store), config)))
    };
    let mut svc = open()?;
    let mut id = svc.start_or_resume("pat").map_err(|e| e.to_string())?.record.session_id;
    let mut scripted = 0u32;
    for (n, &k) in failures.iter().enumerate() {
        if n == 4 {
            let primed = svc.issue_task(&id).map_err(|e| e.to_string())?.task;
            drop(svc);
            svc = open()?;
            let s = svc.start_or_resume("pat").map_err(|e| e.to_string())?;
            ensure!(s.resumed && s.record.session_id == id, "restart created a new session");
            ensure!(s.record.last_completed == Some(TaskRef { level: 2, ordinal: 1 }), "lastCompleted {:?}", s.record.last_completed);
            ensure!(s.record.position() == TaskRef { level: 2, ordinal: 2 }, "resumed at {:?}", s.record.position());
            let task = svc.issue_task(&id).map_err(|e| e.to_string())?.task;
            ensure!(task == primed && (task.level, task.ordinal) == (2, 2), "resumed on a different task");
            id = s.record.session_id;
        }
        let issued = svc.issue_task(&id).map_err(|e| e.to_string())?;
        ensure!(!issued.degraded, "task {n} was served offline");
        for j in 0..k {
            let (source, expected) = WRONG_PROGRAMS[(n + j) % WRONG_PROGRAMS.len()];
            let out = svc.submit(&id, source).map_err(|e| e.to_string())?;
            ensure!(out.result == expected && out.feedback.verdict == Verdict::Incorrect, "task {n}: {source} gave {}", out.result);
            scripted += 1;
        }
        let out = svc.submit(&id, &issued.task.reference_solution).map_err(|e| e.to_string())?;
        ensure!(out.result == AttemptResult::Pass, "task {n}: reference solution gave {}", out.result);
        ensure!(out.translation.as_ref().is_some_and(|t| !t.diverged), "task {n}: translation diverged");
    }
    let r = svc.record(&id).map_err(|e| e.to_string())?;
    ensure!(r.finished && r.completed_count == 9, "finished {} after {} tasks", r.finished, r.completed_count);
    ensure!(r.mistake_count == scripted, "mistakeCount {} but {scripted} scripted failures", r.mistake_count);
    drop(svc);
    let svc = open()?;
    let again = svc.start_or_resume("pat").map_err(|e| e.to_string())?.record;
    ensure!(again == r, "state after the final restart differs");
    let log = read_log(&FileStore::open(dir.path()).map_err(|e| e.to_string())?.log_path()).map_err(|e| e.to_string())?;
    let failed = log.iter().filter(|e| matches!(e, Event::Attempt(a) if a.result != AttemptResult::Pass)).count();
    ensure!(failed == scripted as usize, "log holds {failed} failed attempts");
    Ok(format!("9 tasks, {scripted} mistakes, resumed at level 2 task 2"))
}

fn event_replay() -> Outcome {
    let mut events = 0;
    for seed in 0..200u64 {
        let store = Arc::new(MemoryStore::default());
        let svc = random_scenario(seed, store.clone(), 150);
        let log = store.load().map_err(|e| e.to_string())?;
        events += log.len();
        let replayed = Sessions::replay(&log).map_err(|e| format!("seed {seed}: {e}"))?.snapshot();
        ensure!(replayed == svc.snapshot(), "seed {seed}: replay differs from the live state");
        ensure!(store.snapshot().as_deref() == Some(replayed.as_str()), "seed {seed}: stored snapshot is stale");
    }
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let live = {
        let svc = service_with(echo(), Box::new(FileStore::open(dir.path()).unwrap()), ServiceConfig::default());
        for student in ["ana", "ben"] {
            let id = svc.start_or_resume(student).unwrap().record.session_id;
            for _ in 0..4 {
                let task = svc.issue_task(&id).unwrap().task;
                svc.submit(&id, "V(3);").unwrap();
                svc.submit(&id, &task.reference_solution).unwrap();
            }
        }
        svc.snapshot()
    };
    let store = FileStore::open(dir.path()).unwrap();
    let from_file = Sessions::replay(&read_log(&store.log_path()).unwrap()).unwrap().snapshot();
    let on_disk = std::fs::read_to_string(store.snapshot_path()).unwrap();
    ensure!(from_file == live && on_disk == live, "file log replay differs");
    let attempts = read_log(&store.log_path()).unwrap().iter().filter(|e| matches!(e, Event::Attempt(_))).count();
    Ok(format!("200 random scenarios ({events} events) and a {attempts}-attempt file log"))
}

const NEW_TASK: &str = "TASK|2|Deliver soda to location 9 using a pointer to the address.|usesPointer|-|int a = 9; int *p = &a; V(0); P(2); V(*p); D(0);";
const NEW_SOLUTION: &str = "int b = 9; int *q = &b; V(0); P(2); V(*q); D(0);";
const GARBAGE: &str = "As an AI tutor I think this is great!";

fn malformed_output() -> Outcome {
    let pool = common::bank().load_pool(1).unwrap().to_vec();
    let req = GenerateRequest { level: 1, ordinal: 2, exemplars: &pool, history: &[], fallback_seed: 1 };
    let task = pool.iter().find(|t| t.prompt_text.contains("coffee")).unwrap().clone();
    let student = "int t = 3; int *p = &t; V(0); P(3); V(*p); D(0);";
    let local = grade(&task, student);
    let trace = interp::trace_of(student).unwrap();

    // Generate.
    let mock = Arc::new(MockProvider::echo());
    mock.push_text(Stage::Generate, GARBAGE).push_text(Stage::Generate, NEW_TASK).push_text(Stage::ReferenceSolution, NEW_SOLUTION);
    let gw = common::gateway(mock);
    let out = gw.generate_task(&req).map_err(|e| e.to_string())?;
    ensure!(out.origin == TaskOrigin::Generated && out.attempts == 2, "generate: {:?} after {}", out.origin, out.attempts);
    ensure!(gw.metrics().format_retries == 1, "generate: {:?}", gw.metrics());
    let gw = common::gateway(Arc::new(MockProvider::constant(GARBAGE)));
    let out = gw.generate_task(&req).map_err(|e| e.to_string())?;
    ensure!(out.origin == TaskOrigin::ExemplarFallback && out.task.exemplar, "generate all-bad: {:?}", out.origin);

    // Reference solution.
    let mock = Arc::new(MockProvider::echo());
    mock.push_text(Stage::ReferenceSolution, GARBAGE).push_text(Stage::ReferenceSolution, &task.reference_solution);
    let gw = common::gateway(mock);
    let code = gw.reference_solution(&task, &pool).map_err(|e| e.to_string())?;
    ensure!(code == task.reference_solution && gw.metrics().format_retries == 1, "reference: {:?}", gw.metrics());
    let mock = Arc::new(MockProvider::with_responder(|r| match r.stage {
        Stage::Generate => Ok(NEW_TASK.to_string()),
        _ => Ok(GARBAGE.to_string()),
    }));
    let gw = common::gateway(mock);
    ensure!(matches!(gw.reference_solution(&task, &pool), Err(GatewayError::ReferenceRejected { .. })), "reference all-bad accepted");
    let out = gw.generate_task(&req).map_err(|e| e.to_string())?;
    ensure!(out.origin == TaskOrigin::ExemplarFallback, "reference all-bad: task not replaced by an exemplar");

    // Evaluate.
    let mock = Arc::new(MockProvider::echo());
    mock.push_text(Stage::Evaluate, GARBAGE);
    let gw = common::gateway(mock);
    let fb = gw.evaluate_code(&task, &guard_input(student), &local);
    ensure!(fb.source == FeedbackSource::Model && gw.metrics().format_retries == 1, "evaluate: {:?}", fb.source);
    let gw = common::gateway(Arc::new(MockProvider::constant(GARBAGE)));
    let fb = gw.evaluate_code(&task, &guard_input(student), &local);
    ensure!(fb.source == FeedbackSource::Template && fb.verdict == Verdict::MeetsExpectations, "evaluate all-bad: {:?}", fb);

    // Translate.
    let mock = Arc::new(MockProvider::echo());
    mock.push_text(Stage::Translate, GARBAGE);
    let gw = common::gateway(mock);
    let t = gw.translate_code(&guard_input(student), &trace);
    ensure!(t.model_text.as_deref() == Some("V00|P3|V03|D0") && gw.metrics().format_retries == 1, "translate: {:?}", t.model_text);
    let gw = common::gateway(Arc::new(MockProvider::constant(GARBAGE)));
    let t = gw.translate_code(&guard_input(student), &trace);
    ensure!(t.model_text.is_none() && t.commands == trace, "translate all-bad: {:?}", t.model_text);

    // A whole session against a provider that never answers usefully.
    let mock = Arc::new(MockProvider::constant(GARBAGE));
    mock.push(Stage::Generate, Err(ProviderError::Timeout));
    let svc = service_with(mock, Box::new(MemoryStore::default()), ServiceConfig { max_level: 1, llm_translation: true });
    let id = svc.start_or_resume("sam").map_err(|e| e.to_string())?.record.session_id;
    for _ in 0..3 {
        let issued = svc.issue_task(&id).map_err(|e| e.to_string())?;
        ensure!(issued.degraded, "all-bad session got a generated task");
        svc.submit(&id, "V(3);").map_err(|e| e.to_string())?;
        let out = svc.submit(&id, &issued.task.reference_solution).map_err(|e| e.to_string())?;
        ensure!(out.result == AttemptResult::Pass && out.feedback.source == FeedbackSource::Template, "all-bad session: {}", out.result);
    }
    ensure!(svc.record(&id).unwrap().finished, "all-bad session did not finish level 1");
    Ok("4 stages, retry and fallback each, plus a full all-bad session".into())
}
