//! Participation tables computed from the event log.

use std::collections::{BTreeMap, BTreeSet};

use super::events::Event;

/// Unique students per level and attempts per (student, level), as two CSV
/// tables separated by a blank line. Only attempts count as participation.
pub fn export(events: &[Event]) -> String {
    let student_of: BTreeMap<&str, &str> = events
        .iter()
        .filter_map(|e| match e {
            Event::SessionStarted { session_id, student_id, .. } => Some((session_id.as_str(), student_id.as_str())),
            _ => None,
        })
        .collect();
    let mut students: BTreeMap<u8, BTreeSet<&str>> = BTreeMap::new();
    let mut attempts: BTreeMap<(&str, u8), u64> = BTreeMap::new();
    for e in events {
        if let Event::Attempt(a) = e {
            let student = student_of.get(a.session_id.as_str()).copied().unwrap_or(a.session_id.as_str());
            students.entry(a.level).or_default().insert(student);
            *attempts.entry((student, a.level)).or_default() += 1;
        }
    }
    let mut levels = csv::Writer::from_writer(Vec::new());
    levels.write_record(["level", "unique_students"]).expect("in-memory write");
    for (level, set) in &students {
        levels.write_record([level.to_string(), set.len().to_string()]).expect("in-memory write");
    }
    let mut per_student = csv::Writer::from_writer(Vec::new());
    per_student.write_record(["student_id", "level", "attempts"]).expect("in-memory write");
    for ((student, level), n) in &attempts {
        per_student.write_record([student.to_string(), level.to_string(), n.to_string()]).expect("in-memory write");
    }
    let bytes = |w: csv::Writer<Vec<u8>>| String::from_utf8(w.into_inner().expect("flush")).expect("utf-8");
    format!("{}\n{}", bytes(levels), bytes(per_student))
}
