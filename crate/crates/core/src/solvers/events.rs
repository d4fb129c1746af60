use serde::{Deserialize, Serialize};

/// One phase of an iteration, in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "phase")]
pub enum Event {
    Spmv,
    Precond,
    /// One vector recurrence line (AXPY-like update).
    Axpy,
    /// A global reduction phase assembling `dots` inner products. With
    /// `overlapped` set, the SPMV/PRECOND events that follow it up to the
    /// next reduction run inside its window.
    Glred { dots: usize, overlapped: bool },
}

/// Tally of events.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseCounts {
    pub spmv: usize,
    pub precond: usize,
    pub glred: usize,
    pub glred_overlapped: usize,
    pub dots: usize,
    pub axpy: usize,
}

impl PhaseCounts {
    pub fn from_events(events: &[Event]) -> Self {
        let mut c = PhaseCounts::default();
        for e in events {
            c.record(*e);
        }
        c
    }

    pub fn record(&mut self, e: Event) {
        match e {
            Event::Spmv => self.spmv += 1,
            Event::Precond => self.precond += 1,
            Event::Axpy => self.axpy += 1,
            Event::Glred { dots, overlapped } => {
                self.glred += 1;
                self.dots += dots;
                if overlapped {
                    self.glred_overlapped += 1;
                }
            }
        }
    }

    pub fn add(&mut self, other: &PhaseCounts) {
        self.spmv += other.spmv;
        self.precond += other.precond;
        self.glred += other.glred;
        self.glred_overlapped += other.glred_overlapped;
        self.dots += other.dots;
        self.axpy += other.axpy;
    }
}
