//! Task definitions: the per-level topics, the task record text format, and
//! validation of candidate tasks against the engine.
//!
//! A task record is one line of `|`-separated fields:
//!
//! ```text
//! TASK|<ordinal>|<prompt text>|<tags>|<required visits>|<reference solution>
//! ```
//!
//! `tags` is a comma-separated list of constraint tag names and `required
//! visits` a comma-separated list of linear location ids; either may be `-`
//! when empty. The reference solution is C source on a single line and is the
//! last field, so it may itself contain `|` (as in `||`). Lines that are blank
//! or start with `#` are ignored in pool files.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::game::{self, GameState, Holder, Item, LocationId};
use crate::interp::{self, ConstraintTag, Limits};

pub const LEVEL_COUNT: u8 = 5;
pub const TASKS_PER_LEVEL: u8 = 3;
pub const RECORD_MARKER: &str = "TASK";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum LevelTopic {
    PointerInitDeref,
    ArrayIndexingPointerArith,
    VoidPointerTypecast,
    MultiLevelIndirection,
    FunctionPointers,
}

impl LevelTopic {
    pub fn for_level(level: u8) -> Option<LevelTopic> {
        Some(match level {
            1 => LevelTopic::PointerInitDeref,
            2 => LevelTopic::ArrayIndexingPointerArith,
            3 => LevelTopic::VoidPointerTypecast,
            4 => LevelTopic::MultiLevelIndirection,
            5 => LevelTopic::FunctionPointers,
            _ => return None,
        })
    }

    pub fn level(self) -> u8 {
        self as u8 + 1
    }

    /// Constraint tags a task at this level may require.
    pub fn tags(self) -> &'static [ConstraintTag] {
        match self {
            LevelTopic::PointerInitDeref => &[ConstraintTag::UsesPointer],
            LevelTopic::ArrayIndexingPointerArith => &[ConstraintTag::UsesArray, ConstraintTag::UsesPointerArithmetic],
            LevelTopic::VoidPointerTypecast => &[ConstraintTag::UsesVoidCast],
            LevelTopic::MultiLevelIndirection => &[ConstraintTag::UsesDoubleIndirection],
            LevelTopic::FunctionPointers => &[ConstraintTag::UsesFunctionPointer],
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            LevelTopic::PointerInitDeref => "pointer initialization and dereferencing",
            LevelTopic::ArrayIndexingPointerArith => "array indexing and pointer arithmetic",
            LevelTopic::VoidPointerTypecast => "void pointers and typecasting",
            LevelTopic::MultiLevelIndirection => "double and triple pointers",
            LevelTopic::FunctionPointers => "function pointers",
        }
    }
}

/// A task as written by an author or produced by the generator, before its
/// reference solution has been run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CandidateTask {
    pub level: u8,
    pub ordinal: u8,
    pub prompt_text: String,
    pub constraint_tags: BTreeSet<ConstraintTag>,
    pub required_visits: Option<Vec<LocationId>>,
    pub reference_solution: String,
}

/// A validated task whose expected end state was produced by running its
/// reference solution.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TaskSpec {
    pub level: u8,
    pub ordinal: u8,
    pub prompt_text: String,
    pub constraint_tags: BTreeSet<ConstraintTag>,
    pub required_visits: Option<Vec<LocationId>>,
    pub reference_outcome: GameState,
    pub reference_solution: String,
    pub exemplar: bool,
}

impl TaskSpec {
    pub fn topic(&self) -> LevelTopic {
        LevelTopic::for_level(self.level).unwrap_or(LevelTopic::PointerInitDeref)
    }

    pub fn to_candidate(&self) -> CandidateTask {
        CandidateTask {
            level: self.level,
            ordinal: self.ordinal,
            prompt_text: self.prompt_text.clone(),
            constraint_tags: self.constraint_tags.clone(),
            required_visits: self.required_visits.clone(),
            reference_solution: self.reference_solution.clone(),
        }
    }

    /// The task's record line.
    pub fn to_record(&self) -> String {
        self.to_candidate().to_record()
    }
}

impl CandidateTask {
    pub fn to_record(&self) -> String {
        let tags = if self.constraint_tags.is_empty() {
            String::from("-")
        } else {
            self.constraint_tags.iter().map(|t| t.name()).collect::<Vec<_>>().join(",")
        };
        let visits = match &self.required_visits {
            Some(v) if !v.is_empty() => v.iter().map(|l| l.linear().to_string()).collect::<Vec<_>>().join(","),
            _ => String::from("-"),
        };
        format!(
            "{}|{}|{}|{}|{}|{}",
            RECORD_MARKER, self.ordinal, self.prompt_text, tags, visits, self.reference_solution
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum RecordError {
    #[error("record must start with {RECORD_MARKER}| and have 6 fields")]
    Shape,
    #[error("ordinal '{0}' is not a task number from 1 to {TASKS_PER_LEVEL}")]
    Ordinal(String),
    #[error("empty prompt")]
    EmptyPrompt,
    #[error(transparent)]
    Tag(#[from] interp::UnknownTag),
    #[error("bad location '{0}' in required visits")]
    Visit(String),
    #[error("empty reference solution")]
    EmptySolution,
}

pub fn parse_record(line: &str, level: u8) -> Result<CandidateTask, RecordError> {
    let mut fields = line.trim().splitn(6, '|').map(str::trim);
    if fields.next() != Some(RECORD_MARKER) {
        return Err(RecordError::Shape);
    }
    let (Some(ordinal), Some(prompt), Some(tags), Some(visits), Some(solution)) =
        (fields.next(), fields.next(), fields.next(), fields.next(), fields.next())
    else {
        return Err(RecordError::Shape);
    };
    let ordinal: u8 = ordinal
        .parse()
        .ok()
        .filter(|n| (1..=TASKS_PER_LEVEL).contains(n))
        .ok_or_else(|| RecordError::Ordinal(ordinal.into()))?;
    if prompt.is_empty() {
        return Err(RecordError::EmptyPrompt);
    }
    let constraint_tags = if tags == "-" || tags.is_empty() {
        BTreeSet::new()
    } else {
        tags.split(',').map(|t| t.trim().parse()).collect::<Result<_, _>>()?
    };
    let required_visits = if visits == "-" || visits.is_empty() {
        None
    } else {
        let parsed = visits
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<u8>()
                    .ok()
                    .and_then(LocationId::new)
                    .ok_or_else(|| RecordError::Visit(v.trim().into()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Some(parsed)
    };
    if solution.is_empty() {
        return Err(RecordError::EmptySolution);
    }
    Ok(CandidateTask {
        level,
        ordinal,
        prompt_text: prompt.into(),
        constraint_tags,
        required_visits,
        reference_solution: solution.into(),
    })
}

/// Finds the first record line in free-form text, such as a model reply that
/// wraps the record in prose or code fences.
pub fn find_record(text: &str) -> Option<&str> {
    text.lines()
        .map(str::trim)
        .map(|l| l.trim_matches('`').trim())
        .find(|l| l.starts_with(RECORD_MARKER) && l[RECORD_MARKER.len()..].trim_start().starts_with('|'))
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum PoolError {
    #[error("line {line}: {reason}")]
    MalformedTaskFile { line: usize, reason: String },
    #[error("level {0} has no task pool")]
    MissingPool(u8),
}

/// Parses and validates every record of a level's pool file.
pub fn parse_pool(level: u8, text: &str) -> Result<Vec<TaskSpec>, PoolError> {
    if LevelTopic::for_level(level).is_none() {
        return Err(PoolError::MissingPool(level));
    }
    let mut tasks = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let malformed = |reason: String| PoolError::MalformedTaskFile { line: i + 1, reason };
        let candidate = parse_record(line, level).map_err(|e| malformed(e.to_string()))?;
        let mut task = validate_generated(&candidate).map_err(|e| malformed(e.to_string()))?;
        task.exemplar = true;
        tasks.push(task);
    }
    Ok(tasks)
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ValidationError {
    #[error("task text uses '{0}', which is outside the allowed vocabulary")]
    VocabularyViolation(String),
    #[error("reference outcome cannot be reached: {0}")]
    UnreachableOutcome(String),
    #[error("task does not match the level topic: {0}")]
    TopicMismatch(String),
}

/// Accepts a candidate task: the prompt keeps to the fixed vocabulary, its
/// tags belong to the level topic, and its reference solution runs, uses the
/// tagged features, honours the required visit order and agrees with any
/// deliveries the prompt states. The solution's end state becomes the
/// reference outcome.
pub fn validate_generated(candidate: &CandidateTask) -> Result<TaskSpec, ValidationError> {
    let topic = LevelTopic::for_level(candidate.level)
        .ok_or_else(|| ValidationError::TopicMismatch(format!("level {} does not exist", candidate.level)))?;
    check_vocabulary(&candidate.prompt_text)?;
    if candidate.constraint_tags.is_empty() {
        return Err(ValidationError::TopicMismatch(String::from("task names no constraint tags")));
    }
    if let Some(tag) = candidate.constraint_tags.iter().find(|t| !topic.tags().contains(t)) {
        return Err(ValidationError::TopicMismatch(format!(
            "{} is not part of level {} ({})",
            tag,
            topic.level(),
            topic.description()
        )));
    }
    let unreachable = |msg: String| ValidationError::UnreachableOutcome(msg);
    let program = interp::compile(&candidate.reference_solution).map_err(|e| unreachable(format!("solution does not compile: {}", e)))?;
    let trace = interp::execute(&program, Limits::default())
        .map_err(|e| unreachable(format!("solution fails: {}", e)))?
        .trace;
    if trace.is_empty() {
        return Err(unreachable(String::from("solution performs no actions")));
    }
    let outcome = game::run(&GameState::initial(), &trace).map_err(|e| unreachable(format!("solution fails in the game: {}", e)))?;
    let missing: Vec<_> = interp::check_constraints(&program, &candidate.constraint_tags)
        .into_iter()
        .filter(|(_, ok)| !ok)
        .map(|(t, _)| t.name())
        .collect();
    if !missing.is_empty() {
        return Err(ValidationError::TopicMismatch(format!("solution does not satisfy {}", missing.join(", "))));
    }
    if let Some(required) = &candidate.required_visits {
        if !game::is_subsequence(required, outcome.visit_trace()) {
            return Err(unreachable(String::from("solution does not visit the required locations in order")));
        }
    }
    for (item, location) in stated_deliveries(&candidate.prompt_text) {
        let at_target = matches!(outcome.locate(item), Some((Holder::Location(l), _)) if l == location);
        if !at_target {
            return Err(unreachable(format!(
                "the prompt sends {} to location {} but the solution leaves it elsewhere",
                item,
                location.linear()
            )));
        }
    }
    Ok(TaskSpec {
        level: candidate.level,
        ordinal: candidate.ordinal,
        prompt_text: candidate.prompt_text.clone(),
        constraint_tags: candidate.constraint_tags.clone(),
        required_visits: candidate.required_visits.clone(),
        reference_outcome: outcome,
        reference_solution: candidate.reference_solution.clone(),
        exemplar: false,
    })
}

/// Words a task prompt may use. Item and truck nouns plus the small set of
/// verbs, connectives and pointer terms that task texts are written in.
pub const VOCABULARY: &[&str] = &[
    // objects
    "truck", "juice", "orange", "milk", "soda", "coffee", "item", "items", "cargo",
    // places
    "location", "locations", "address", "addresses", "memory", "block", "blocks", "grid", "cell", "cells", "coordinate",
    "coordinates", "row", "column", "slot", "slots", "index", "indices", "indexes", "indexing", "depot", "start", "starting",
    // actions
    "drive", "drives", "driving", "visit", "visits", "visiting", "move", "moves", "moving", "go", "goes", "travel",
    "deliver", "delivers", "delivering", "delivery", "deliveries", "drop", "drops", "dropping", "pick", "picks",
    "picking", "up", "off", "grab", "grabs", "grabbing", "load", "unload", "carry", "carrying", "bring", "return",
    "leave", "leaving", "take", "put", "place", "park", "stop", "stops", "end", "ends", "finish", "swap", "swapped",
    "exchange", "collect", "collecting", "stay", "stays", "remain", "remains",
    // code vocabulary
    "store", "stored", "storing", "save", "keep", "hold", "holds", "holding", "access", "accessing", "read", "reading",
    "write", "writing", "use", "using", "used", "declare", "declaring", "initialize", "initialized", "initializing",
    "assign", "assigned", "set", "change", "changes", "their", "point", "points", "pointing", "pointer", "pointers", "arithmetic", "dereference",
    "dereferencing", "dereferenced", "variable", "variables", "int", "integer", "integers", "void", "cast", "casting",
    "typecast", "typecasting", "generic", "double", "triple", "level", "levels", "indirection", "function", "functions",
    "call", "calls", "calling", "called", "table", "array", "arrays", "element", "elements", "loop", "loops",
    "increment", "incrementing", "step", "steps", "value", "values", "1d", "v", "p", "d", "s", "whose", "through",
    "pass", "passing", "select", "choose", "chosen", "copy", "its", "own",
    // connectives and quantities
    "a", "an", "the", "to", "from", "at", "in", "on", "of", "and", "or", "then", "with", "without", "by", "for", "into",
    "onto", "each", "every", "all", "both", "only", "one", "two", "three", "four", "first", "second", "third", "fourth",
    "last", "next", "before", "after", "back", "again", "once", "twice", "it", "them", "that", "this", "these",
    "those", "there", "here", "which", "where", "is", "are", "be", "must", "should", "so", "as", "your", "you",
    "same", "other", "another", "remaining", "rest", "empty", "order", "ascending", "descending", "reverse",
    "along", "finally", "while", "when", "not", "no", "instead", "via", "what", "who", "now", "still", "never",
    "just", "exactly", "directly", "than", "more", "less", "same", "every", "make", "sure", "new", "stop",
];

/// Checks that a prompt uses only [`VOCABULARY`] words and numbers that denote
/// a grid address (a linear id `0..=15` or a `<row><col>` pair `00..=33`).
pub fn check_vocabulary(prompt: &str) -> Result<(), ValidationError> {
    for token in prompt.split(|c: char| !c.is_ascii_alphanumeric()).filter(|t| !t.is_empty()) {
        if token.bytes().all(|b| b.is_ascii_digit()) {
            if address_of(token).is_none() {
                return Err(ValidationError::VocabularyViolation(String::from(token)));
            }
            continue;
        }
        let lower = token.to_ascii_lowercase();
        if !VOCABULARY.contains(&lower.as_str()) {
            return Err(ValidationError::VocabularyViolation(String::from(token)));
        }
    }
    if prompt.chars().any(|c| !c.is_ascii()) {
        return Err(ValidationError::VocabularyViolation(String::from("non-ASCII text")));
    }
    Ok(())
}

/// Reads a number written in a prompt as a location. Two-digit numbers with a
/// leading zero or above 15 are `<row><col>` coordinates; anything else is a
/// linear id.
pub fn address_of(token: &str) -> Option<LocationId> {
    let digits: Vec<u8> = token.bytes().map(|b| b.wrapping_sub(b'0')).collect();
    if digits.iter().any(|&d| d > 9) {
        return None;
    }
    let value: u32 = token.parse().ok()?;
    match digits.as_slice() {
        [row, col] if *row == 0 || value > 15 => LocationId::from_coords(*row, *col),
        _ => u8::try_from(value).ok().and_then(LocationId::new),
    }
}

/// Deliveries a prompt states as "<item> to location <n>".
pub fn stated_deliveries(prompt: &str) -> Vec<(Item, LocationId)> {
    let words: Vec<String> = prompt
        .split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_ascii_lowercase())
        .collect();
    let mut out = Vec::new();
    for (i, w) in words.iter().enumerate() {
        let Some(item) = Item::ALL.into_iter().find(|it| it.noun() == w) else { continue };
        let rest = &words[i + 1..];
        if let [to, place, number, ..] = rest {
            if to == "to" && (place == "location" || place == "address") {
                if let Some(loc) = address_of(number) {
                    out.push((item, loc));
                }
            }
        }
    }
    out
}

impl fmt::Display for TaskSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Level {}, task {}: {}", self.level, self.ordinal, self.prompt_text)
    }
}
