//! Reading and writing of model and scenario documents.
//!
//! Documents are UTF-8 JSON. Parsing is strict and two-staged: a syntax
//! error aborts immediately, while shape errors (unknown keys, missing
//! keys, type mismatches, duplicate member names) are collected so one pass
//! reports every defect. Every error carries a line/column location plus a
//! JSON pointer. Semantic rules are NOT checked here; a document can parse
//! cleanly and still fail [`crate::model::validate_model`].
//!
//! Serialization is canonical — keys in schema order, numbers with at most
//! six decimals and no trailing zeros, LF endings — so serialized output is
//! a fixed point of parse/serialize and diffs stay stable.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde_json::Value;

use crate::model::{
    Decision, DurationDistribution, ParallelBlock, ProcessModel, Step, Task, TaskCategory,
};
use crate::scenario::{DurationSelector, Scenario, ScenarioOp, TransformOp};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseErrorCode {
    Syntax,
    UnknownKey,
    MissingKey,
    TypeMismatch,
    DuplicateId,
}

impl ParseErrorCode {
    pub fn code(self) -> &'static str {
        match self {
            ParseErrorCode::Syntax => "SYNTAX",
            ParseErrorCode::UnknownKey => "UNKNOWN_KEY",
            ParseErrorCode::MissingKey => "MISSING_KEY",
            ParseErrorCode::TypeMismatch => "TYPE_MISMATCH",
            ParseErrorCode::DuplicateId => "DUPLICATE_ID",
        }
    }
}

impl fmt::Display for ParseErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// Where an error was found: 1-based line and column, and for shape errors
/// the JSON pointer of the offending node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Location {
    pub line: usize,
    pub column: usize,
    pub pointer: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub code: ParseErrorCode,
    pub location: Location,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}: error[{}]",
            self.location.line, self.location.column, self.code
        )?;
        if let Some(pointer) = &self.location.pointer {
            let shown = if pointer.is_empty() { "/" } else { pointer };
            write!(f, " at {shown}")?;
        }
        write!(f, ": {}", self.message)
    }
}

/// One failed parse: the source label plus every collected error.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseFailure {
    pub source: String,
    pub errors: Vec<ParseError>,
}

impl ParseFailure {
    pub fn with_source(mut self, label: impl Into<String>) -> ParseFailure {
        self.source = label.into();
        self
    }
}

impl fmt::Display for ParseFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.errors.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{}:{}", self.source, e)?;
        }
        Ok(())
    }
}

impl std::error::Error for ParseFailure {}

// ---------------------------------------------------------------------------
// Pointer index: map JSON pointers to line/column positions.
//
// serde_json reports positions only for syntax errors, so after a document
// parses we re-scan the (now known valid) text once, recording where every
// value and member name starts. Columns count bytes from the line start,
// matching serde_json's convention.

#[derive(Default)]
struct PointerIndex {
    values: HashMap<String, (usize, usize)>,
    keys: HashMap<String, (usize, usize)>,
    /// Repeated member names within one object: pointer, line, column.
    duplicates: Vec<(String, usize, usize)>,
}

impl PointerIndex {
    fn value_pos(&self, pointer: &str) -> (usize, usize) {
        self.values.get(pointer).copied().unwrap_or((1, 1))
    }

    fn key_pos(&self, pointer: &str) -> (usize, usize) {
        self.keys
            .get(pointer)
            .copied()
            .or_else(|| self.values.get(pointer).copied())
            .unwrap_or((1, 1))
    }
}

fn escape_pointer_token(token: &str) -> String {
    token.replace('~', "~0").replace('/', "~1")
}

struct Scanner<'a> {
    bytes: &'a [u8],
    pos: usize,
    line: usize,
    col: usize,
    pointer: String,
    index: PointerIndex,
}

impl<'a> Scanner<'a> {
    fn scan(text: &'a str) -> PointerIndex {
        let mut s = Scanner {
            bytes: text.as_bytes(),
            pos: 0,
            line: 1,
            col: 1,
            pointer: String::new(),
            index: PointerIndex::default(),
        };
        s.value();
        s.index
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let b = self.peek()?;
        self.pos += 1;
        if b == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(b)
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(b' ' | b'\t' | b'\n' | b'\r')) {
            self.bump();
        }
    }

    fn value(&mut self) {
        self.skip_ws();
        self.index
            .values
            .insert(self.pointer.clone(), (self.line, self.col));
        match self.peek() {
            Some(b'{') => self.object(),
            Some(b'[') => self.array(),
            Some(b'"') => {
                self.string();
            }
            Some(_) => {
                // number / true / false / null
                while let Some(b) = self.peek() {
                    if matches!(b, b',' | b'}' | b']' | b' ' | b'\t' | b'\n' | b'\r') {
                        break;
                    }
                    self.bump();
                }
            }
            None => {}
        }
    }

    fn object(&mut self) {
        self.bump(); // '{'
        self.skip_ws();
        if self.peek() == Some(b'}') {
            self.bump();
            return;
        }
        let mut seen: HashSet<String> = HashSet::new();
        loop {
            self.skip_ws();
            let key_pos = (self.line, self.col);
            let key = self.string();
            let base = self.pointer.len();
            self.pointer.push('/');
            self.pointer.push_str(&escape_pointer_token(&key));
            self.index.keys.insert(self.pointer.clone(), key_pos);
            if !seen.insert(key) {
                self.index
                    .duplicates
                    .push((self.pointer.clone(), key_pos.0, key_pos.1));
            }
            self.skip_ws();
            if self.peek() == Some(b':') {
                self.bump();
            }
            self.value();
            self.pointer.truncate(base);
            self.skip_ws();
            match self.peek() {
                Some(b',') => {
                    self.bump();
                }
                Some(b'}') => {
                    self.bump();
                    return;
                }
                _ => return,
            }
        }
    }

    fn array(&mut self) {
        self.bump(); // '['
        self.skip_ws();
        if self.peek() == Some(b']') {
            self.bump();
            return;
        }
        let mut i = 0usize;
        loop {
            let base = self.pointer.len();
            self.pointer.push('/');
            self.pointer.push_str(&i.to_string());
            self.value();
            self.pointer.truncate(base);
            self.skip_ws();
            match self.peek() {
                Some(b',') => {
                    self.bump();
                    i += 1;
                }
                Some(b']') => {
                    self.bump();
                    return;
                }
                _ => return,
            }
        }
    }

    /// Consume a string token and return its decoded value.
    fn string(&mut self) -> String {
        let mut out = String::new();
        if self.peek() != Some(b'"') {
            return out;
        }
        self.bump();
        let start = self.pos;
        loop {
            match self.peek() {
                None => break,
                Some(b'"') => {
                    out.push_str(&decode_json_string(&self.bytes[start..self.pos]));
                    self.bump();
                    break;
                }
                Some(b'\\') => {
                    self.bump();
                    self.bump();
                }
                Some(_) => {
                    self.bump();
                }
            }
        }
        out
    }
}

/// Decode the interior of a JSON string (without the quotes). The input is
/// known-valid JSON, so this only needs to mirror the grammar.
fn decode_json_string(raw: &[u8]) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut i = 0;
    while i < raw.len() {
        let b = raw[i];
        if b != b'\\' {
            // Copy the full UTF-8 sequence.
            let len = utf8_len(b);
            if let Ok(s) = std::str::from_utf8(&raw[i..(i + len).min(raw.len())]) {
                out.push_str(s);
            } else {
                out.push('\u{FFFD}');
            }
            i += len;
            continue;
        }
        i += 1;
        if i >= raw.len() {
            break;
        }
        match raw[i] {
            b'"' => out.push('"'),
            b'\\' => out.push('\\'),
            b'/' => out.push('/'),
            b'b' => out.push('\u{0008}'),
            b'f' => out.push('\u{000C}'),
            b'n' => out.push('\n'),
            b'r' => out.push('\r'),
            b't' => out.push('\t'),
            b'u' => {
                let (cp, consumed) = decode_unicode_escape(raw, i + 1);
                out.push(cp);
                i += consumed;
            }
            other => out.push(other as char),
        }
        i += 1;
    }
    out
}

fn utf8_len(first: u8) -> usize {
    match first {
        0x00..=0x7f => 1,
        0xc0..=0xdf => 2,
        0xe0..=0xef => 3,
        _ => 4,
    }
}

fn hex4(raw: &[u8], at: usize) -> Option<u32> {
    if at + 4 > raw.len() {
        return None;
    }
    let mut v = 0u32;
    for b in &raw[at..at + 4] {
        v = v * 16 + (*b as char).to_digit(16)?;
    }
    Some(v)
}

fn decode_unicode_escape(raw: &[u8], at: usize) -> (char, usize) {
    match hex4(raw, at) {
        Some(hi) if (0xd800..0xdc00).contains(&hi) => {
            // Surrogate pair: expect \uXXXX immediately after.
            if raw.get(at + 4) == Some(&b'\\') && raw.get(at + 5) == Some(&b'u') {
                if let Some(lo) = hex4(raw, at + 6) {
                    if (0xdc00..0xe000).contains(&lo) {
                        let cp = 0x10000 + ((hi - 0xd800) << 10) + (lo - 0xdc00);
                        return (char::from_u32(cp).unwrap_or('\u{FFFD}'), 10);
                    }
                }
            }
            ('\u{FFFD}', 4)
        }
        Some(cp) => (char::from_u32(cp).unwrap_or('\u{FFFD}'), 4),
        None => ('\u{FFFD}', 0),
    }
}

// ---------------------------------------------------------------------------
// Shape walker

struct Walker<'a> {
    index: &'a PointerIndex,
    errors: Vec<ParseError>,
}

fn value_kind(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "a boolean",
        Value::Number(_) => "a number",
        Value::String(_) => "a string",
        Value::Array(_) => "an array",
        Value::Object(_) => "an object",
    }
}

impl<'a> Walker<'a> {
    fn error_at_value(&mut self, code: ParseErrorCode, pointer: &str, message: String) {
        let (line, column) = self.index.value_pos(pointer);
        self.errors.push(ParseError {
            code,
            location: Location {
                line,
                column,
                pointer: Some(pointer.to_owned()),
            },
            message,
        });
    }

    fn error_at_key(&mut self, code: ParseErrorCode, pointer: &str, message: String) {
        let (line, column) = self.index.key_pos(pointer);
        self.errors.push(ParseError {
            code,
            location: Location {
                line,
                column,
                pointer: Some(pointer.to_owned()),
            },
            message,
        });
    }

    fn mismatch(&mut self, pointer: &str, expected: &str, found: &Value) {
        self.error_at_value(
            ParseErrorCode::TypeMismatch,
            pointer,
            format!("expected {expected}, found {}", value_kind(found)),
        );
    }

    fn object<'v>(
        &mut self,
        v: &'v Value,
        pointer: &str,
    ) -> Option<&'v serde_json::Map<String, Value>> {
        match v {
            Value::Object(map) => Some(map),
            other => {
                self.mismatch(pointer, "an object", other);
                None
            }
        }
    }

    fn array<'v>(&mut self, v: &'v Value, pointer: &str) -> Option<&'v Vec<Value>> {
        match v {
            Value::Array(items) => Some(items),
            other => {
                self.mismatch(pointer, "an array", other);
                None
            }
        }
    }

    fn string<'v>(&mut self, v: &'v Value, pointer: &str) -> Option<&'v str> {
        match v {
            Value::String(s) => Some(s),
            other => {
                self.mismatch(pointer, "a string", other);
                None
            }
        }
    }

    fn number(&mut self, v: &Value, pointer: &str) -> Option<f64> {
        match v {
            Value::Number(n) => n.as_f64(),
            other => {
                self.mismatch(pointer, "a number", other);
                None
            }
        }
    }

    /// Strict key check: every key must be known, every required key present.
    /// Returns false if a required key is missing.
    fn check_keys(
        &mut self,
        map: &serde_json::Map<String, Value>,
        pointer: &str,
        required: &[&str],
        optional: &[&str],
    ) -> bool {
        for key in map.keys() {
            if !required.contains(&key.as_str()) && !optional.contains(&key.as_str()) {
                let kp = format!("{pointer}/{}", escape_pointer_token(key));
                self.error_at_key(
                    ParseErrorCode::UnknownKey,
                    &kp,
                    format!("unknown key \"{key}\""),
                );
            }
        }
        let mut complete = true;
        for key in required {
            if !map.contains_key(*key) {
                self.error_at_value(
                    ParseErrorCode::MissingKey,
                    pointer,
                    format!("missing required key \"{key}\""),
                );
                complete = false;
            }
        }
        complete
    }

    fn req_string(
        &mut self,
        map: &serde_json::Map<String, Value>,
        pointer: &str,
        key: &str,
    ) -> Option<String> {
        let v = map.get(key)?;
        self.string(v, &format!("{pointer}/{key}"))
            .map(str::to_owned)
    }

    fn req_number(
        &mut self,
        map: &serde_json::Map<String, Value>,
        pointer: &str,
        key: &str,
    ) -> Option<f64> {
        let v = map.get(key)?;
        self.number(v, &format!("{pointer}/{key}"))
    }

    fn opt_provenance(
        &mut self,
        map: &serde_json::Map<String, Value>,
        pointer: &str,
    ) -> Option<String> {
        map.get("provenance").and_then(|v| {
            self.string(v, &format!("{pointer}/provenance"))
                .map(str::to_owned)
        })
    }
}

fn walk_duration(w: &mut Walker<'_>, v: &Value, pointer: &str) -> Option<DurationDistribution> {
    let map = w.object(v, pointer)?;
    let type_ptr = format!("{pointer}/type");
    let Some(type_value) = map.get("type") else {
        w.error_at_value(
            ParseErrorCode::MissingKey,
            pointer,
            "missing required key \"type\"".into(),
        );
        return None;
    };
    let type_name = w.string(type_value, &type_ptr)?;
    match type_name {
        "triangular" => {
            let complete = w.check_keys(map, pointer, &["type", "min", "mode", "max"], &[]);
            let min = w.req_number(map, pointer, "min");
            let mode = w.req_number(map, pointer, "mode");
            let max = w.req_number(map, pointer, "max");
            if !complete {
                return None;
            }
            Some(DurationDistribution::Triangular {
                min: min?,
                mode: mode?,
                max: max?,
            })
        }
        "deterministic" => {
            let complete = w.check_keys(map, pointer, &["type", "value"], &[]);
            let value = w.req_number(map, pointer, "value");
            if !complete {
                return None;
            }
            Some(DurationDistribution::Deterministic { value: value? })
        }
        other => {
            w.error_at_value(
                ParseErrorCode::TypeMismatch,
                &type_ptr,
                format!("unknown duration type \"{other}\""),
            );
            None
        }
    }
}

fn walk_category(w: &mut Walker<'_>, v: &Value, pointer: &str) -> Option<TaskCategory> {
    let name = w.string(v, pointer)?;
    match TaskCategory::from_wire_name(name) {
        Some(c) => Some(c),
        None => {
            w.error_at_value(
                ParseErrorCode::TypeMismatch,
                pointer,
                format!("unknown category \"{name}\""),
            );
            None
        }
    }
}

fn walk_task(
    w: &mut Walker<'_>,
    map: &serde_json::Map<String, Value>,
    pointer: &str,
) -> Option<Task> {
    let complete = w.check_keys(
        map,
        pointer,
        &["kind", "id", "label", "stakeholder", "category", "duration"],
        &["provenance"],
    );
    let id = w.req_string(map, pointer, "id");
    let label = w.req_string(map, pointer, "label");
    let stakeholder = w.req_string(map, pointer, "stakeholder");
    let category = map
        .get("category")
        .and_then(|v| walk_category(w, v, &format!("{pointer}/category")));
    let duration = map
        .get("duration")
        .and_then(|v| walk_duration(w, v, &format!("{pointer}/duration")));
    let provenance = w.opt_provenance(map, pointer);
    if !complete {
        return None;
    }
    Some(Task {
        id: id?,
        label: label?,
        stakeholder: stakeholder?,
        category: category?,
        duration: duration?,
        provenance,
    })
}

fn walk_step(w: &mut Walker<'_>, v: &Value, pointer: &str) -> Option<Step> {
    let map = w.object(v, pointer)?;
    let Some(kind_value) = map.get("kind") else {
        w.error_at_value(
            ParseErrorCode::MissingKey,
            pointer,
            "missing required key \"kind\"".into(),
        );
        return None;
    };
    let kind = w.string(kind_value, &format!("{pointer}/kind"))?;
    match kind {
        "task" => walk_task(w, map, pointer).map(Step::Task),
        "parallel" => {
            let complete = w.check_keys(map, pointer, &["kind", "id", "branches"], &[]);
            let id = w.req_string(map, pointer, "id");
            let branches_ptr = format!("{pointer}/branches");
            let branches = map
                .get("branches")
                .and_then(|v| w.array(v, &branches_ptr))
                .map(|items| {
                    let mut out = Vec::with_capacity(items.len());
                    let mut ok = true;
                    for (bi, branch_value) in items.iter().enumerate() {
                        let branch_ptr = format!("{branches_ptr}/{bi}");
                        match w.array(branch_value, &branch_ptr) {
                            Some(tasks_json) => {
                                let mut branch = Vec::with_capacity(tasks_json.len());
                                for (ti, task_value) in tasks_json.iter().enumerate() {
                                    let task_ptr = format!("{branch_ptr}/{ti}");
                                    match walk_branch_task(w, task_value, &task_ptr) {
                                        Some(task) => branch.push(task),
                                        None => ok = false,
                                    }
                                }
                                out.push(branch);
                            }
                            None => ok = false,
                        }
                    }
                    (ok, out)
                });
            if !complete {
                return None;
            }
            let (ok, branches) = branches?;
            if !ok {
                return None;
            }
            Some(Step::Parallel(ParallelBlock { id: id?, branches }))
        }
        "decision" => {
            let complete = w.check_keys(
                map,
                pointer,
                &["kind", "id", "label", "probability", "target"],
                &["provenance"],
            );
            let id = w.req_string(map, pointer, "id");
            let label = w.req_string(map, pointer, "label");
            let probability = w.req_number(map, pointer, "probability");
            let target = w.req_string(map, pointer, "target");
            let provenance = w.opt_provenance(map, pointer);
            if !complete {
                return None;
            }
            Some(Step::Decision(Decision {
                id: id?,
                label: label?,
                probability: probability?,
                target: target?,
                provenance,
            }))
        }
        other => {
            w.error_at_value(
                ParseErrorCode::TypeMismatch,
                &format!("{pointer}/kind"),
                format!("unknown step kind \"{other}\""),
            );
            None
        }
    }
}

fn walk_branch_task(w: &mut Walker<'_>, v: &Value, pointer: &str) -> Option<Task> {
    let map = w.object(v, pointer)?;
    match map.get("kind") {
        None => {
            w.error_at_value(
                ParseErrorCode::MissingKey,
                pointer,
                "missing required key \"kind\"".into(),
            );
            None
        }
        Some(kind_value) => {
            let kind = w.string(kind_value, &format!("{pointer}/kind"))?;
            if kind != "task" {
                w.error_at_value(
                    ParseErrorCode::TypeMismatch,
                    &format!("{pointer}/kind"),
                    format!("parallel branches may contain only tasks, found kind \"{kind}\""),
                );
                return None;
            }
            walk_task(w, map, pointer)
        }
    }
}

fn walk_string_list(w: &mut Walker<'_>, v: &Value, pointer: &str) -> Option<Vec<String>> {
    let items = w.array(v, pointer)?;
    let mut out = Vec::with_capacity(items.len());
    let mut ok = true;
    for (i, item) in items.iter().enumerate() {
        match w.string(item, &format!("{pointer}/{i}")) {
            Some(s) => out.push(s.to_owned()),
            None => ok = false,
        }
    }
    ok.then_some(out)
}

fn start_parse(text: &str) -> Result<(Value, PointerIndex, Vec<ParseError>), ParseFailure> {
    let value: Value = match serde_json::from_str(text) {
        Ok(v) => v,
        Err(e) => {
            return Err(ParseFailure {
                source: "<input>".to_owned(),
                errors: vec![ParseError {
                    code: ParseErrorCode::Syntax,
                    location: Location {
                        line: e.line().max(1),
                        column: e.column().max(1),
                        pointer: None,
                    },
                    message: e.to_string(),
                }],
            })
        }
    };
    let index = Scanner::scan(text);
    let mut errors = Vec::new();
    for (pointer, line, column) in &index.duplicates {
        let key = pointer.rsplit('/').next().unwrap_or_default();
        errors.push(ParseError {
            code: ParseErrorCode::DuplicateId,
            location: Location {
                line: *line,
                column: *column,
                pointer: Some(pointer.clone()),
            },
            message: format!("duplicate key \"{key}\" in the same object"),
        });
    }
    Ok((value, index, errors))
}

/// Parse a model document. All shape errors are collected; semantic
/// validation is a separate pass.
pub fn parse_model(text: &str) -> Result<ProcessModel, ParseFailure> {
    let (value, index, seed_errors) = start_parse(text)?;
    let mut w = Walker {
        index: &index,
        errors: seed_errors,
    };

    let model = (|w: &mut Walker<'_>| {
        let map = w.object(&value, "")?;
        let complete = w.check_keys(map, "", &["name", "stakeholders", "steps"], &[]);
        let name = w.req_string(map, "", "name");
        let stakeholders = map
            .get("stakeholders")
            .and_then(|v| walk_string_list(w, v, "/stakeholders"));
        let steps = map
            .get("steps")
            .and_then(|v| w.array(v, "/steps"))
            .map(|items| {
                let mut out = Vec::with_capacity(items.len());
                let mut ok = true;
                for (i, item) in items.iter().enumerate() {
                    match walk_step(w, item, &format!("/steps/{i}")) {
                        Some(step) => out.push(step),
                        None => ok = false,
                    }
                }
                (ok, out)
            });
        if !complete {
            return None;
        }
        let (ok, steps) = steps?;
        if !ok {
            return None;
        }
        Some(ProcessModel {
            name: name?,
            stakeholders: stakeholders?,
            steps,
        })
    })(&mut w);

    finish(model, w.errors)
}

/// Parse a scenario document.
pub fn parse_scenario(text: &str) -> Result<Scenario, ParseFailure> {
    let (value, index, seed_errors) = start_parse(text)?;
    let mut w = Walker {
        index: &index,
        errors: seed_errors,
    };

    let scenario = (|w: &mut Walker<'_>| {
        let map = w.object(&value, "")?;
        let complete = w.check_keys(map, "", &["name", "ops"], &[]);
        let name = w.req_string(map, "", "name");
        let ops = map
            .get("ops")
            .and_then(|v| w.array(v, "/ops"))
            .map(|items| {
                let mut out = Vec::with_capacity(items.len());
                let mut ok = true;
                for (i, item) in items.iter().enumerate() {
                    match walk_op(w, item, &format!("/ops/{i}")) {
                        Some(op) => out.push(op),
                        None => ok = false,
                    }
                }
                (ok, out)
            });
        if !complete {
            return None;
        }
        let (ok, ops) = ops?;
        if !ok {
            return None;
        }
        Some(Scenario { name: name?, ops })
    })(&mut w);

    finish(scenario, w.errors)
}

fn finish<T>(parsed: Option<T>, errors: Vec<ParseError>) -> Result<T, ParseFailure> {
    if errors.is_empty() {
        Ok(parsed.expect("no errors collected implies a complete parse"))
    } else {
        Err(ParseFailure {
            source: "<input>".to_owned(),
            errors,
        })
    }
}

fn walk_op(w: &mut Walker<'_>, v: &Value, pointer: &str) -> Option<ScenarioOp> {
    let map = w.object(v, pointer)?;
    let op_ptr = format!("{pointer}/op");
    let Some(op_value) = map.get("op") else {
        w.error_at_value(
            ParseErrorCode::MissingKey,
            pointer,
            "missing required key \"op\"".into(),
        );
        return None;
    };
    let op_name = w.string(op_value, &op_ptr)?.to_owned();
    let op = match op_name.as_str() {
        "remove_tasks" => {
            let complete = w.check_keys(map, pointer, &["op", "ids"], &["provenance"]);
            let ids_ptr = format!("{pointer}/ids");
            let ids = map
                .get("ids")
                .and_then(|v| walk_string_list(w, v, &ids_ptr));
            if !complete {
                return None;
            }
            let ids = ids?;
            if ids.is_empty() {
                w.error_at_value(
                    ParseErrorCode::TypeMismatch,
                    &ids_ptr,
                    "ids must not be empty".into(),
                );
                return None;
            }
            Some(TransformOp::RemoveTasks { ids })
        }
        "scale_duration" => {
            let complete =
                w.check_keys(map, pointer, &["op", "selector", "factor"], &["provenance"]);
            let selector = map
                .get("selector")
                .and_then(|v| walk_selector(w, v, &format!("{pointer}/selector")));
            let factor_ptr = format!("{pointer}/factor");
            let factor = w.req_number(map, pointer, "factor");
            if !complete {
                return None;
            }
            let factor = factor?;
            if !(factor.is_finite() && factor > 0.0) {
                w.error_at_value(
                    ParseErrorCode::TypeMismatch,
                    &factor_ptr,
                    format!("factor must be a positive number, got {factor}"),
                );
                return None;
            }
            Some(TransformOp::ScaleDuration {
                selector: selector?,
                factor,
            })
        }
        "replace_duration" => {
            let complete = w.check_keys(map, pointer, &["op", "id", "duration"], &["provenance"]);
            let id = w.req_string(map, pointer, "id");
            let duration = map
                .get("duration")
                .and_then(|v| walk_duration(w, v, &format!("{pointer}/duration")));
            if !complete {
                return None;
            }
            Some(TransformOp::ReplaceDuration {
                id: id?,
                duration: duration?,
            })
        }
        "set_probability" => {
            let complete = w.check_keys(map, pointer, &["op", "id", "value"], &["provenance"]);
            let id = w.req_string(map, pointer, "id");
            let value_ptr = format!("{pointer}/value");
            let value = w.req_number(map, pointer, "value");
            if !complete {
                return None;
            }
            let value = value?;
            if !(value.is_finite() && (0.0..1.0).contains(&value)) {
                w.error_at_value(
                    ParseErrorCode::TypeMismatch,
                    &value_ptr,
                    format!("value must lie in [0, 1), got {value}"),
                );
                return None;
            }
            Some(TransformOp::SetProbability { id: id?, value })
        }
        other => {
            w.error_at_value(
                ParseErrorCode::TypeMismatch,
                &op_ptr,
                format!("unknown op \"{other}\""),
            );
            None
        }
    };
    let provenance = w.opt_provenance(map, pointer);
    Some(ScenarioOp {
        op: op?,
        provenance,
    })
}

fn walk_selector(w: &mut Walker<'_>, v: &Value, pointer: &str) -> Option<DurationSelector> {
    let map = w.object(v, pointer)?;
    w.check_keys(map, pointer, &[], &["ids", "category"]);
    match (map.get("ids"), map.get("category")) {
        (Some(ids_value), None) => {
            let ids_ptr = format!("{pointer}/ids");
            let ids = walk_string_list(w, ids_value, &ids_ptr)?;
            if ids.is_empty() {
                w.error_at_value(
                    ParseErrorCode::TypeMismatch,
                    &ids_ptr,
                    "ids must not be empty".into(),
                );
                return None;
            }
            Some(DurationSelector::Ids(ids))
        }
        (None, Some(category_value)) => {
            walk_category(w, category_value, &format!("{pointer}/category"))
                .map(DurationSelector::Category)
        }
        _ => {
            w.error_at_value(
                ParseErrorCode::TypeMismatch,
                pointer,
                "selector must contain exactly one of \"ids\" or \"category\"".into(),
            );
            None
        }
    }
}

// ---------------------------------------------------------------------------
// Canonical serialization

/// Format a number with at most six decimals and no trailing zeros.
fn fmt_number(x: f64) -> String {
    if x == x.trunc() && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        let s = format!("{x:.6}");
        s.trim_end_matches('0').trim_end_matches('.').to_owned()
    }
}

fn json_string(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

fn fmt_duration_inline(d: &DurationDistribution) -> String {
    match d {
        DurationDistribution::Triangular { min, mode, max } => format!(
            "{{ \"type\": \"triangular\", \"min\": {}, \"mode\": {}, \"max\": {} }}",
            fmt_number(*min),
            fmt_number(*mode),
            fmt_number(*max)
        ),
        DurationDistribution::Deterministic { value } => {
            format!(
                "{{ \"type\": \"deterministic\", \"value\": {} }}",
                fmt_number(*value)
            )
        }
    }
}

fn fmt_string_list_inline(items: &[String]) -> String {
    let quoted: Vec<String> = items.iter().map(|s| json_string(s)).collect();
    format!("[{}]", quoted.join(", "))
}

fn write_task(out: &mut String, task: &Task, indent: usize) {
    let pad = " ".repeat(indent);
    let inner = " ".repeat(indent + 2);
    out.push_str(&format!("{pad}{{\n"));
    out.push_str(&format!("{inner}\"kind\": \"task\",\n"));
    out.push_str(&format!("{inner}\"id\": {},\n", json_string(&task.id)));
    out.push_str(&format!(
        "{inner}\"label\": {},\n",
        json_string(&task.label)
    ));
    out.push_str(&format!(
        "{inner}\"stakeholder\": {},\n",
        json_string(&task.stakeholder)
    ));
    out.push_str(&format!(
        "{inner}\"category\": \"{}\",\n",
        task.category.wire_name()
    ));
    out.push_str(&format!(
        "{inner}\"duration\": {}",
        fmt_duration_inline(&task.duration)
    ));
    if let Some(p) = &task.provenance {
        out.push_str(&format!(",\n{inner}\"provenance\": {}", json_string(p)));
    }
    out.push_str(&format!("\n{pad}}}"));
}

/// Render a model in canonical form: schema key order, six-decimal numbers
/// with trailing zeros trimmed, two-space indent, LF endings. The output
/// re-parses to a structurally equal model and is a serialization fixed
/// point.
pub fn serialize_model(model: &ProcessModel) -> String {
    let mut out = String::new();
    out.push_str("{\n");
    out.push_str(&format!("  \"name\": {},\n", json_string(&model.name)));
    out.push_str(&format!(
        "  \"stakeholders\": {},\n",
        fmt_string_list_inline(&model.stakeholders)
    ));
    if model.steps.is_empty() {
        out.push_str("  \"steps\": []\n");
    } else {
        out.push_str("  \"steps\": [\n");
        for (i, step) in model.steps.iter().enumerate() {
            match step {
                Step::Task(task) => write_task(&mut out, task, 4),
                Step::Parallel(p) => {
                    out.push_str("    {\n");
                    out.push_str("      \"kind\": \"parallel\",\n");
                    out.push_str(&format!("      \"id\": {},\n", json_string(&p.id)));
                    if p.branches.is_empty() {
                        out.push_str("      \"branches\": []\n");
                    } else {
                        out.push_str("      \"branches\": [\n");
                        for (bi, branch) in p.branches.iter().enumerate() {
                            if branch.is_empty() {
                                out.push_str("        []");
                            } else {
                                out.push_str("        [\n");
                                for (ti, task) in branch.iter().enumerate() {
                                    write_task(&mut out, task, 10);
                                    out.push_str(if ti + 1 < branch.len() { ",\n" } else { "\n" });
                                }
                                out.push_str("        ]");
                            }
                            out.push_str(if bi + 1 < p.branches.len() {
                                ",\n"
                            } else {
                                "\n"
                            });
                        }
                        out.push_str("      ]\n");
                    }
                    out.push_str("    }");
                }
                Step::Decision(d) => {
                    out.push_str("    {\n");
                    out.push_str("      \"kind\": \"decision\",\n");
                    out.push_str(&format!("      \"id\": {},\n", json_string(&d.id)));
                    out.push_str(&format!("      \"label\": {},\n", json_string(&d.label)));
                    out.push_str(&format!(
                        "      \"probability\": {},\n",
                        fmt_number(d.probability)
                    ));
                    out.push_str(&format!("      \"target\": {}", json_string(&d.target)));
                    if let Some(p) = &d.provenance {
                        out.push_str(&format!(",\n      \"provenance\": {}", json_string(p)));
                    }
                    out.push_str("\n    }");
                }
            }
            out.push_str(if i + 1 < model.steps.len() {
                ",\n"
            } else {
                "\n"
            });
        }
        out.push_str("  ]\n");
    }
    out.push_str("}\n");
    out
}

/// Render a scenario in canonical form; same conventions as
/// [`serialize_model`].
pub fn serialize_scenario(scenario: &Scenario) -> String {
    let mut out = String::new();
    out.push_str("{\n");
    out.push_str(&format!("  \"name\": {},\n", json_string(&scenario.name)));
    if scenario.ops.is_empty() {
        out.push_str("  \"ops\": []\n");
    } else {
        out.push_str("  \"ops\": [\n");
        for (i, entry) in scenario.ops.iter().enumerate() {
            out.push_str("    {\n");
            match &entry.op {
                TransformOp::RemoveTasks { ids } => {
                    out.push_str("      \"op\": \"remove_tasks\",\n");
                    out.push_str(&format!("      \"ids\": {}", fmt_string_list_inline(ids)));
                }
                TransformOp::ScaleDuration { selector, factor } => {
                    out.push_str("      \"op\": \"scale_duration\",\n");
                    let sel = match selector {
                        DurationSelector::Ids(ids) => {
                            format!("{{ \"ids\": {} }}", fmt_string_list_inline(ids))
                        }
                        DurationSelector::Category(c) => {
                            format!("{{ \"category\": \"{}\" }}", c.wire_name())
                        }
                    };
                    out.push_str(&format!("      \"selector\": {sel},\n"));
                    out.push_str(&format!("      \"factor\": {}", fmt_number(*factor)));
                }
                TransformOp::ReplaceDuration { id, duration } => {
                    out.push_str("      \"op\": \"replace_duration\",\n");
                    out.push_str(&format!("      \"id\": {},\n", json_string(id)));
                    out.push_str(&format!(
                        "      \"duration\": {}",
                        fmt_duration_inline(duration)
                    ));
                }
                TransformOp::SetProbability { id, value } => {
                    out.push_str("      \"op\": \"set_probability\",\n");
                    out.push_str(&format!("      \"id\": {},\n", json_string(id)));
                    out.push_str(&format!("      \"value\": {}", fmt_number(*value)));
                }
            }
            if let Some(p) = &entry.provenance {
                out.push_str(&format!(",\n      \"provenance\": {}", json_string(p)));
            }
            out.push_str("\n    }");
            out.push_str(if i + 1 < scenario.ops.len() {
                ",\n"
            } else {
                "\n"
            });
        }
        out.push_str("  ]\n");
    }
    out.push_str("}\n");
    out
}
