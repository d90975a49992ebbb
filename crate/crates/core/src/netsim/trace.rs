//! Packet trace emission and post-run auditing.
//!
//! Line format, tab separated, fixed column order:
//! `time  event  packet-kind  origin  destination  current-node  hop_count  seq`
//! where `event` is one of `orig`, `tx`, `rx`, `deliver`, `drop`.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::{self, Write};
use std::rc::Rc;

use thiserror::Error;

use super::packet::{Addr, Entity, PacketKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TraceEvent {
    /// A DATA packet was created at its source.
    Orig,
    Tx,
    Rx,
    /// First arrival of a DATA packet at its destination.
    Deliver,
    Drop,
}

impl TraceEvent {
    pub fn name(self) -> &'static str {
        match self {
            TraceEvent::Orig => "orig",
            TraceEvent::Tx => "tx",
            TraceEvent::Rx => "rx",
            TraceEvent::Deliver => "deliver",
            TraceEvent::Drop => "drop",
        }
    }

    fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "orig" => TraceEvent::Orig,
            "tx" => TraceEvent::Tx,
            "rx" => TraceEvent::Rx,
            "deliver" => TraceEvent::Deliver,
            "drop" => TraceEvent::Drop,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub time: f64,
    pub event: TraceEvent,
    pub kind: PacketKind,
    pub origin: Entity,
    pub destination: Addr,
    pub node: Entity,
    pub hop_count: u32,
    pub seq: u64,
}

impl fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:.6}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            self.time,
            self.event.name(),
            self.kind,
            self.origin,
            self.destination,
            self.node,
            self.hop_count,
            self.seq
        )
    }
}

pub trait TraceSink {
    fn record(&mut self, rec: &TraceRecord);
}

/// Writes one text line per record.
pub struct LineTrace<W: Write> {
    out: W,
    error: Option<io::Error>,
}

impl<W: Write> LineTrace<W> {
    pub fn new(out: W) -> Self {
        Self { out, error: None }
    }

    pub fn finish(mut self) -> io::Result<W> {
        if let Some(e) = self.error.take() {
            return Err(e);
        }
        self.out.flush()?;
        Ok(self.out)
    }
}

impl<W: Write> TraceSink for LineTrace<W> {
    fn record(&mut self, rec: &TraceRecord) {
        if self.error.is_none() {
            if let Err(e) = writeln!(self.out, "{rec}") {
                self.error = Some(e);
            }
        }
    }
}

/// Forwards records to two sinks.
pub struct Tee<A, B>(pub A, pub B);

impl<A: TraceSink, B: TraceSink> TraceSink for Tee<A, B> {
    fn record(&mut self, rec: &TraceRecord) {
        self.0.record(rec);
        self.1.record(rec);
    }
}

impl<S: TraceSink + ?Sized> TraceSink for &mut S {
    fn record(&mut self, rec: &TraceRecord) {
        (**self).record(rec)
    }
}

impl<S: TraceSink + ?Sized> TraceSink for Box<S> {
    fn record(&mut self, rec: &TraceRecord) {
        (**self).record(rec)
    }
}

impl TraceSink for Vec<TraceRecord> {
    fn record(&mut self, rec: &TraceRecord) {
        self.push(*rec);
    }
}

/// A sink the caller keeps a handle to while the simulation owns a clone.
#[derive(Debug, Default)]
pub struct Shared<S>(Rc<RefCell<S>>);

impl<S> Clone for Shared<S> {
    fn clone(&self) -> Self {
        Shared(Rc::clone(&self.0))
    }
}

impl<S> Shared<S> {
    pub fn new(sink: S) -> Self {
        Shared(Rc::new(RefCell::new(sink)))
    }

    pub fn borrow(&self) -> std::cell::Ref<'_, S> {
        self.0.borrow()
    }

    /// The inner sink, if this is the last handle.
    pub fn into_inner(self) -> Option<S> {
        Rc::try_unwrap(self.0).ok().map(RefCell::into_inner)
    }
}

impl<S: TraceSink> TraceSink for Shared<S> {
    fn record(&mut self, rec: &TraceRecord) {
        self.0.borrow_mut().record(rec);
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TraceParseError {
    #[error("line {line}: expected 8 tab-separated fields, found {found}")]
    FieldCount { line: usize, found: usize },
    #[error("line {line}: bad {field} {value:?}")]
    Field {
        line: usize,
        field: &'static str,
        value: String,
    },
}

fn parse_entity(s: &str) -> Option<Entity> {
    if s == "BS" {
        return Some(Entity::BaseStation);
    }
    s.parse().ok().map(|n| Entity::Node(super::NodeId(n)))
}

fn parse_addr(s: &str) -> Option<Addr> {
    match s {
        "*" => Some(Addr::Broadcast),
        "BS" => Some(Addr::BaseStation),
        _ => s.parse().ok().map(|n| Addr::Node(super::NodeId(n))),
    }
}

impl TraceRecord {
    pub fn parse_line(line: &str, lineno: usize) -> Result<Self, TraceParseError> {
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 8 {
            return Err(TraceParseError::FieldCount {
                line: lineno,
                found: f.len(),
            });
        }
        let bad = |field: &'static str, value: &str| TraceParseError::Field {
            line: lineno,
            field,
            value: value.to_string(),
        };
        Ok(TraceRecord {
            time: f[0].parse().map_err(|_| bad("time", f[0]))?,
            event: TraceEvent::from_name(f[1]).ok_or_else(|| bad("event", f[1]))?,
            kind: PacketKind::from_name(f[2]).ok_or_else(|| bad("packet kind", f[2]))?,
            origin: parse_entity(f[3]).ok_or_else(|| bad("origin", f[3]))?,
            destination: parse_addr(f[4]).ok_or_else(|| bad("destination", f[4]))?,
            node: parse_entity(f[5]).ok_or_else(|| bad("node", f[5]))?,
            hop_count: f[6].parse().map_err(|_| bad("hop count", f[6]))?,
            seq: f[7].parse().map_err(|_| bad("seq", f[7]))?,
        })
    }
}

/// Counter conservation checks computed from trace records alone.
#[derive(Debug, Default, Clone)]
pub struct TraceAudit {
    pub data_sent: u64,
    pub data_delivered: u64,
    /// DATA originations keyed by (source, destination).
    pub sent_per_flow: BTreeMap<(Entity, Addr), u64>,
    pub duplicate_deliveries: u64,
    pub deliveries_without_origination: u64,
    pub deliveries_to_wrong_node: u64,
    /// Arrivals timestamped before the matching transmission could exist.
    pub causality_violations: u64,
    pub control_tx: BTreeMap<PacketKind, u64>,
    originated: HashSet<(Entity, u64)>,
    delivered: HashSet<(Entity, u64)>,
    last_time: f64,
}

impl TraceAudit {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_text(text: &str) -> Result<Self, TraceParseError> {
        let mut audit = Self::new();
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.is_empty()) {
            audit.record(&TraceRecord::parse_line(line, i + 1)?);
        }
        Ok(audit)
    }

    pub fn control_total(&self) -> u64 {
        self.control_tx.values().sum()
    }

    /// Every invariant the trace can establish on its own.
    pub fn is_consistent(&self) -> bool {
        self.data_delivered <= self.data_sent
            && self.sent_per_flow.values().sum::<u64>() == self.data_sent
            && self.duplicate_deliveries == 0
            && self.deliveries_without_origination == 0
            && self.deliveries_to_wrong_node == 0
            && self.causality_violations == 0
    }
}

impl TraceSink for TraceAudit {
    fn record(&mut self, rec: &TraceRecord) {
        if rec.time < self.last_time {
            self.causality_violations += 1;
        }
        self.last_time = rec.time;
        match rec.event {
            TraceEvent::Orig => {
                self.data_sent += 1;
                *self.sent_per_flow.entry((rec.origin, rec.destination)).or_default() += 1;
                self.originated.insert((rec.origin, rec.seq));
            }
            TraceEvent::Deliver => {
                if !self.originated.contains(&(rec.origin, rec.seq)) {
                    self.deliveries_without_origination += 1;
                }
                if Addr::from(rec.node) != rec.destination {
                    self.deliveries_to_wrong_node += 1;
                }
                if self.delivered.insert((rec.origin, rec.seq)) {
                    self.data_delivered += 1;
                } else {
                    self.duplicate_deliveries += 1;
                }
            }
            TraceEvent::Tx if rec.kind.is_control() => {
                *self.control_tx.entry(rec.kind).or_default() += 1;
            }
            _ => {}
        }
    }
}
