//! Containment of student text inside prompts.
//!
//! Student code only ever reaches a provider inside a fenced block:
//!
//! ```text
//! <<<STUDENT_CODE
//! ...escaped code...
//! STUDENT_CODE>>>
//! ```
//!
//! Escaping doubles every backslash and puts a backslash before any `<` or
//! `>` that directly follows the same character, so the escaped text never
//! contains `<<` or `>>` and cannot close the fence early.

pub const FENCE_OPEN: &str = "<<<STUDENT_CODE";
pub const FENCE_CLOSE: &str = "STUDENT_CODE>>>";

/// Phrases that suggest the text is addressed to the reviewer rather than
/// being a program. Matched against lowercased text with runs of non-letters
/// folded to one space.
pub const INJECTION_PHRASES: &[&str] = &[
    "ignore previous",
    "ignore all previous",
    "ignore the previous",
    "ignore the above",
    "ignore your instructions",
    "ignore all instructions",
    "disregard",
    "let me pass",
    "mark this as correct",
    "mark it as correct",
    "mark as correct",
    "meets expectations",
    "you are now",
    "system prompt",
    "new instructions",
    "forget your instructions",
    "forget previous",
    "pretend",
    "override",
];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GuardedInput {
    /// The fenced block to embed in a prompt.
    pub block: String,
    /// Instruction-like phrases found in the text.
    pub flags: Vec<String>,
}

pub fn guard_input(source: &str) -> GuardedInput {
    GuardedInput { block: format!("{FENCE_OPEN}\n{}\n{FENCE_CLOSE}", escape(source)), flags: injection_flags(source) }
}

pub fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut prev = None;
    for c in text.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '<' | '>' if prev == Some(c) => {
                out.push('\\');
                out.push(c);
            }
            _ => out.push(c),
        }
        prev = Some(c);
    }
    out
}

pub fn unescape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut chars = text.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            if let Some(next) = chars.next() {
                out.push(next);
                continue;
            }
        }
        out.push(c);
    }
    out
}

/// Recovers the original text of the first fenced block in `prompt`.
pub fn extract_block(prompt: &str) -> Option<String> {
    let start = prompt.find(FENCE_OPEN)? + FENCE_OPEN.len();
    let body = &prompt[start..];
    let end = body.find(FENCE_CLOSE)?;
    let inner = body[..end].strip_prefix('\n').unwrap_or(&body[..end]);
    let inner = inner.strip_suffix('\n').unwrap_or(inner);
    Some(unescape(inner))
}

pub fn injection_flags(text: &str) -> Vec<String> {
    let mut folded = String::with_capacity(text.len());
    for c in text.chars() {
        if c.is_alphabetic() {
            folded.extend(c.to_lowercase());
        } else if !folded.ends_with(' ') {
            folded.push(' ');
        }
    }
    let padded = format!(" {} ", folded.trim());
    INJECTION_PHRASES
        .iter()
        .filter(|p| padded.contains(&format!(" {p} ")))
        .map(|p| format!("instruction-like text: \"{p}\""))
        .collect()
}
