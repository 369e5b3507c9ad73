use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::workflow::WorkerId;

/// Payload of a scheduled event. Task starts happen inside dispatch and show
/// up only in the trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    JobArrival { job: usize },
    PlanComplete { job: usize },
    InputArrival { job: usize, task: usize, worker: WorkerId },
    FetchComplete { worker: WorkerId },
    TaskComplete { worker: WorkerId },
    SstPublish { load: bool, cache: bool },
    SimEnd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Event {
    pub time_us: u64,
    pub seq: u64,
    pub kind: EventKind,
}

impl Ord for Event {
    /// Reversed so that `BinaryHeap` pops the earliest event first.
    fn cmp(&self, other: &Self) -> Ordering {
        (other.time_us, other.seq).cmp(&(self.time_us, self.seq))
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Min-queue on `(time, seq)`; `seq` is assigned at push time.
#[derive(Debug, Default)]
pub struct EventQueue {
    heap: BinaryHeap<Event>,
    next_seq: u64,
}

impl EventQueue {
    pub fn push(&mut self, time_us: u64, kind: EventKind) {
        self.heap.push(Event { time_us, seq: self.next_seq, kind });
        self.next_seq += 1;
    }

    pub fn pop(&mut self) -> Option<Event> {
        self.heap.pop()
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}
