//! Text formats for suboperation traces and replayable recordings.
//!
//! A trace entry is one line, `<SUBOP> <args> [-> <ret>]`:
//!
//! ```text
//! HASPARENT 1 -> false
//! COMPARE 1 2 -> true
//! PAIR 1 2 -> inc
//! SWAP 1 2
//! END
//! ```
//!
//! A recording interleaves priority-queue operations with the trace of each
//! extract-min and checkpoints of the structure code:
//!
//! ```text
//! PARAMS d=1 W=1 T=4 rho=8
//! INS 0
//! DK 0 inf
//! EM
//! HASPARENT 1 -> false
//! ...
//! END
//! SNAPSHOT (u)
//! ```
//!
//! Blank lines and lines starting with `#` are ignored.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::forest::NodeId;
use crate::key::Delta;
use crate::rank::RankParams;
use crate::vm::{Operation, PureHeap, SubopReturn, Suboperation, Trace, TraceEntry, VmError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

fn perr(line: usize, message: impl Into<String>) -> ParseError {
    ParseError {
        line,
        message: message.into(),
    }
}

impl fmt::Display for Suboperation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Suboperation::*;
        match *self {
            HasParent(i) => write!(f, "HASPARENT {i}"),
            HasLeftSibling(i) => write!(f, "HASLEFTSIBLING {i}"),
            HasRightSibling(i) => write!(f, "HASRIGHTSIBLING {i}"),
            HasChildren(i) => write!(f, "HASCHILDREN {i}"),
            Compare(i, j) => write!(f, "COMPARE {i} {j}"),
            Pair(i, j) => write!(f, "PAIR {i} {j}"),
            Unpair(i) => write!(f, "UNPAIR {i}"),
            Set(i, j) => write!(f, "SET {i} {j}"),
            Swap(i, j) => write!(f, "SWAP {i} {j}"),
            MoveToParent(i) => write!(f, "MOVETOPARENT {i}"),
            MoveToLeftmostChild(i) => write!(f, "MOVETOLEFTMOSTCHILD {i}"),
            MoveToRightSibling(i) => write!(f, "MOVETORIGHTSIBLING {i}"),
            MoveToLeftSibling(i) => write!(f, "MOVETOLEFTSIBLING {i}"),
            End => f.write_str("END"),
        }
    }
}

impl FromStr for Suboperation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        use Suboperation::*;
        let mut words = s.split_whitespace();
        let name = words.next().ok_or("empty suboperation")?;
        let args: Vec<usize> = words
            .map(|w| w.parse::<usize>().map_err(|_| format!("bad register `{w}`")))
            .collect::<Result<_, _>>()?;
        let one = |ctor: fn(usize) -> Suboperation| match args[..] {
            [i] => Ok(ctor(i)),
            _ => Err(format!("{name} takes one register")),
        };
        let two = |ctor: fn(usize, usize) -> Suboperation| match args[..] {
            [i, j] => Ok(ctor(i, j)),
            _ => Err(format!("{name} takes two registers")),
        };
        match name {
            "HASPARENT" => one(HasParent),
            "HASLEFTSIBLING" => one(HasLeftSibling),
            "HASRIGHTSIBLING" => one(HasRightSibling),
            "HASCHILDREN" => one(HasChildren),
            "COMPARE" => two(Compare),
            "PAIR" => two(Pair),
            "UNPAIR" => one(Unpair),
            "SET" => two(Set),
            "SWAP" => two(Swap),
            "MOVETOPARENT" => one(MoveToParent),
            "MOVETOLEFTMOSTCHILD" => one(MoveToLeftmostChild),
            "MOVETORIGHTSIBLING" => one(MoveToRightSibling),
            "MOVETOLEFTSIBLING" => one(MoveToLeftSibling),
            "END" if args.is_empty() => Ok(End),
            "END" => Err("END takes no registers".into()),
            _ => Err(format!("unknown suboperation `{name}`")),
        }
    }
}

impl fmt::Display for TraceEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.subop)?;
        match self.ret {
            SubopReturn::Unit => Ok(()),
            SubopReturn::Bool(b) => write!(f, " -> {b}"),
            SubopReturn::Pair { incremented: true } => f.write_str(" -> inc"),
            SubopReturn::Pair { incremented: false } => f.write_str(" -> noinc"),
        }
    }
}

impl FromStr for TraceEntry {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (head, ret) = match s.split_once("->") {
            Some((h, r)) => (h, Some(r.trim())),
            None => (s, None),
        };
        let subop: Suboperation = head.parse()?;
        let is_pair = matches!(subop, Suboperation::Pair(..));
        let is_query = matches!(
            subop,
            Suboperation::HasParent(_)
                | Suboperation::HasLeftSibling(_)
                | Suboperation::HasRightSibling(_)
                | Suboperation::HasChildren(_)
                | Suboperation::Compare(..)
        );
        let ret = match (ret, is_pair, is_query) {
            (None, false, false) => SubopReturn::Unit,
            (Some("inc"), true, _) => SubopReturn::Pair { incremented: true },
            (Some("noinc"), true, _) => SubopReturn::Pair { incremented: false },
            (Some("true"), _, true) => SubopReturn::Bool(true),
            (Some("false"), _, true) => SubopReturn::Bool(false),
            (None, _, _) => return Err(format!("{subop} needs a return value")),
            (Some(r), _, _) => return Err(format!("bad return value `{r}` for {subop}")),
        };
        Ok(TraceEntry { subop, ret })
    }
}

pub fn format_trace(trace: &[TraceEntry]) -> String {
    trace.iter().map(|e| format!("{e}\n")).collect()
}

pub fn parse_trace(text: &str) -> Result<Trace, ParseError> {
    content_lines(text)
        .map(|(n, l)| l.parse().map_err(|m| perr(n, m)))
        .collect()
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RecordItem {
    Insert(i64),
    DecreaseKey(NodeId, Delta),
    ExtractMin(Trace),
    Snapshot(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub params: RankParams,
    pub rho: usize,
    pub items: Vec<RecordItem>,
}

pub fn parse_delta(s: &str) -> Result<Delta, String> {
    if s == "inf" {
        return Ok(Delta::Infinite);
    }
    s.parse::<i64>()
        .map(Delta::Finite)
        .map_err(|_| format!("bad delta `{s}`"))
}

/// Parses one `INS v` / `DK h d` / `EM` line.
pub fn parse_operation(line: &str) -> Result<Operation, String> {
    let words: Vec<&str> = line.split_whitespace().collect();
    match words[..] {
        ["INS", v] => v.parse().map(Operation::Insert).map_err(|_| format!("bad key `{v}`")),
        ["DK", h, d] => {
            let h = h.parse::<u32>().map_err(|_| format!("bad handle `{h}`"))?;
            Ok(Operation::DecreaseKey(NodeId(h), parse_delta(d)?))
        }
        ["EM"] => Ok(Operation::ExtractMin),
        _ => Err(format!("unrecognised operation `{line}`")),
    }
}

pub fn format_operation(op: &Operation) -> String {
    match op {
        Operation::Insert(v) => format!("INS {v}"),
        Operation::DecreaseKey(h, d) => format!("DK {h} {d}"),
        Operation::ExtractMin => "EM".to_string(),
    }
}

fn format_params(params: &RankParams, rho: usize) -> String {
    format!(
        "PARAMS d={} W={} T={} rho={}",
        params.d, params.window, params.threshold, rho
    )
}

fn parse_params(line: &str) -> Result<(RankParams, usize), String> {
    let mut d = None;
    let mut window = None;
    let mut threshold = None;
    let mut rho = None;
    for word in line.split_whitespace().skip(1) {
        let (k, v) = word.split_once('=').ok_or(format!("bad field `{word}`"))?;
        let v: u32 = v.parse().map_err(|_| format!("bad value in `{word}`"))?;
        match k {
            "d" => d = Some(v),
            "W" => window = Some(v),
            "T" => threshold = Some(v),
            "rho" => rho = Some(v as usize),
            _ => return Err(format!("unknown field `{k}`")),
        }
    }
    let missing = |n: &str| format!("PARAMS is missing {n}");
    let params = RankParams::explicit(
        d.ok_or_else(|| missing("d"))?,
        window.ok_or_else(|| missing("W"))?,
        threshold.ok_or_else(|| missing("T"))?,
    )
    .map_err(|e| e.to_string())?;
    let rho = rho.ok_or_else(|| missing("rho"))?;
    if rho == 0 {
        return Err("rho must be positive".into());
    }
    Ok((params, rho))
}

impl fmt::Display for Recording {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", format_params(&self.params, self.rho))?;
        for item in &self.items {
            match item {
                RecordItem::Insert(v) => writeln!(f, "INS {v}")?,
                RecordItem::DecreaseKey(h, d) => writeln!(f, "DK {h} {d}")?,
                RecordItem::ExtractMin(trace) => {
                    writeln!(f, "EM")?;
                    f.write_str(&format_trace(trace))?;
                }
                RecordItem::Snapshot(code) if code.is_empty() => writeln!(f, "SNAPSHOT")?,
                RecordItem::Snapshot(code) => writeln!(f, "SNAPSHOT {code}")?,
            }
        }
        Ok(())
    }
}

impl FromStr for Recording {
    type Err = ParseError;

    fn from_str(text: &str) -> Result<Self, ParseError> {
        let mut lines = content_lines(text).peekable();
        let (n, first) = lines.next().ok_or_else(|| perr(1, "empty recording"))?;
        if !first.starts_with("PARAMS") {
            return Err(perr(n, "recording must start with PARAMS"));
        }
        let (params, rho) = parse_params(first).map_err(|m| perr(n, m))?;
        let mut items = Vec::new();
        while let Some((n, line)) = lines.next() {
            if let Some(code) = line.strip_prefix("SNAPSHOT") {
                items.push(RecordItem::Snapshot(code.trim().to_string()));
                continue;
            }
            match parse_operation(line).map_err(|m| perr(n, m))? {
                Operation::Insert(v) => items.push(RecordItem::Insert(v)),
                Operation::DecreaseKey(h, d) => items.push(RecordItem::DecreaseKey(h, d)),
                Operation::ExtractMin => {
                    let mut trace = Vec::new();
                    loop {
                        let (m, l) = lines.next().ok_or_else(|| perr(n, "EM without END"))?;
                        let e: TraceEntry = l.parse().map_err(|msg| perr(m, msg))?;
                        trace.push(e);
                        if e.subop == Suboperation::End {
                            break;
                        }
                    }
                    items.push(RecordItem::ExtractMin(trace));
                }
            }
        }
        Ok(Recording { params, rho, items })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplayError {
    #[error("item {item}: {source}")]
    Vm { item: usize, source: VmError },
    #[error("item {item}, step {step}: recorded `{expected}` but replay returned `{actual}`")]
    ReturnMismatch {
        item: usize,
        step: usize,
        expected: TraceEntry,
        actual: TraceEntry,
    },
    #[error("item {item}: snapshot `{expected}` recorded, replay produced `{actual}`")]
    SnapshotMismatch {
        item: usize,
        expected: String,
        actual: String,
    },
}

impl Recording {
    pub fn new(params: RankParams, rho: usize) -> Self {
        Recording {
            params,
            rho,
            items: Vec::new(),
        }
    }

    /// Re-executes every item on a fresh heap, checking each return value and
    /// snapshot. Returns the final heap.
    pub fn replay(&self) -> Result<PureHeap, ReplayError> {
        let mut heap = PureHeap::new(self.params, self.rho);
        for (item, it) in self.items.iter().enumerate() {
            let vm = |source| ReplayError::Vm { item, source };
            match it {
                RecordItem::Insert(v) => {
                    heap.insert(*v).map_err(vm)?;
                }
                RecordItem::DecreaseKey(h, d) => heap.decrease_key(*h, *d).map_err(vm)?,
                RecordItem::ExtractMin(trace) => {
                    heap.begin_extract_min().map_err(vm)?;
                    for (step, expected) in trace.iter().enumerate() {
                        let ret = heap.apply(expected.subop).map_err(vm)?;
                        let actual = TraceEntry {
                            subop: expected.subop,
                            ret,
                        };
                        if actual != *expected {
                            return Err(ReplayError::ReturnMismatch {
                                item,
                                step,
                                expected: *expected,
                                actual,
                            });
                        }
                    }
                    heap.finish_extract_min().map_err(vm)?;
                }
                RecordItem::Snapshot(expected) => {
                    let actual = heap.snapshot_structure().map_err(vm)?;
                    if actual != *expected {
                        return Err(ReplayError::SnapshotMismatch {
                            item,
                            expected: expected.clone(),
                            actual,
                        });
                    }
                }
            }
        }
        Ok(heap)
    }

    /// Structure code recorded by the last `SNAPSHOT` item.
    pub fn last_snapshot(&self) -> Option<&str> {
        self.items.iter().rev().find_map(|i| match i {
            RecordItem::Snapshot(s) => Some(s.as_str()),
            _ => None,
        })
    }
}
