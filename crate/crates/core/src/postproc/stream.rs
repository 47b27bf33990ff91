use std::collections::VecDeque;

use super::events::{GestureEvent, StepClock};
use super::{promotion, Strategies};
use crate::signal::GestureKind;

/// Number of most recent time steps the streaming optimizer can still edit.
pub const BUFFER_LEN: usize = 10;

/// Class counts of a non-null run plus the latest step of each class, enough
/// to take the majority vote after its head has left the buffer.
#[derive(Debug, Clone, Copy, Default)]
struct RunStats {
    len: usize,
    counts: [usize; GestureKind::COUNT],
    last: [usize; GestureKind::COUNT],
}

impl RunStats {
    fn push(&mut self, kind: GestureKind, step: usize) {
        self.len += 1;
        self.counts[kind.index()] += 1;
        self.last[kind.index()] = step;
    }

    fn uniform(kind: GestureKind, len: usize, last_step: usize) -> Self {
        let mut s = Self { len, ..Self::default() };
        s.counts[kind.index()] = len;
        s.last[kind.index()] = last_step;
        s
    }

    fn vote(&self) -> Option<GestureKind> {
        GestureKind::ALL
            .into_iter()
            .filter(|k| self.counts[k.index()] > 0)
            .max_by_key(|k| (self.counts[k.index()], self.last[k.index()]))
    }
}

/// A time step whose correction can no longer change.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Finalized {
    pub step: usize,
    pub raw: GestureKind,
    pub corrected: GestureKind,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StreamOutput {
    /// The step pushed out of the buffer by this prediction.
    pub finalized: Option<Finalized>,
    /// A gesture whose run was closed by this prediction.
    pub event: Option<GestureEvent>,
}

/// Real-time optimizer: predictions go in one at a time, corrections are
/// applied to the last [`BUFFER_LEN`] steps, and an event fires on the first
/// null after a run.
#[derive(Debug, Clone)]
pub struct StreamBuffer {
    strategies: Strategies,
    clock: StepClock,
    /// `(raw, corrected)` for steps `step − len .. step`.
    buf: VecDeque<(GestureKind, GestureKind)>,
    step: usize,
    run: RunStats,
    prev_run: RunStats,
}

impl StreamBuffer {
    pub fn new(strategies: Strategies) -> Self {
        Self::with_clock(strategies, StepClock::default())
    }

    pub fn with_clock(strategies: Strategies, clock: StepClock) -> Self {
        Self {
            strategies,
            clock,
            buf: VecDeque::with_capacity(BUFFER_LEN),
            step: 0,
            run: RunStats::default(),
            prev_run: RunStats::default(),
        }
    }

    /// Number of predictions pushed so far.
    pub fn steps(&self) -> usize {
        self.step
    }

    /// Corrected values currently held, oldest first.
    pub fn pending(&self) -> impl Iterator<Item = GestureKind> + '_ {
        self.buf.iter().map(|&(_, y)| y)
    }

    pub fn push(&mut self, pred: GestureKind) -> StreamOutput {
        use GestureKind::Null;
        let mut out = StreamOutput::default();
        if self.buf.len() == BUFFER_LEN {
            let (raw, corrected) = self.buf.pop_front().expect("full buffer");
            out.finalized = Some(Finalized { step: self.step - BUFFER_LEN, raw, corrected });
        }
        self.buf.push_back((pred, pred));
        let i = self.step;
        let n = self.buf.len();
        let y = |b: &VecDeque<(GestureKind, GestureKind)>, back: usize| b[n - 1 - back].1;

        if i >= 2 {
            if self.strategies.low_pass && y(&self.buf, 2) == Null && y(&self.buf, 1) != Null && pred == Null {
                self.buf[n - 2].1 = Null;
                self.run = RunStats::default();
            }
            let before = y(&self.buf, 2);
            if before != Null && y(&self.buf, 1) == Null && pred != Null {
                self.buf[n - 2].1 = before;
                self.run = self.prev_run;
                self.run.push(before, i - 1);
            }
        }
        if i >= 1 {
            let prev = y(&self.buf, 1);
            if self.strategies.front_follows_back {
                if let Some(code) = promotion(prev, pred) {
                    self.fill_run(code);
                    self.run = RunStats::uniform(code, self.run.len, i - 1);
                }
            }
            if prev != Null && pred == Null {
                let vote = self.run.vote().expect("closing run is non-empty");
                if self.strategies.majority_rule {
                    self.fill_run(vote);
                    self.run = RunStats::uniform(vote, self.run.len, i - 1);
                }
                out.event = Some(GestureEvent::new(vote, i - self.run.len, i - 1, &self.clock));
            }
        }
        self.prev_run = self.run;
        if pred == Null {
            self.run = RunStats::default();
        } else {
            self.run.push(pred, i);
        }
        self.step += 1;
        out
    }

    /// Rewrites the part of the current run (which ends just before the
    /// newest slot) that is still in the buffer.
    fn fill_run(&mut self, code: GestureKind) {
        let n = self.buf.len();
        let from = (n - 1).saturating_sub(self.run.len);
        for slot in self.buf.range_mut(from..n - 1) {
            slot.1 = code;
        }
    }

    /// Ends the stream: drains the buffer and reports a run left open.
    pub fn finish(mut self) -> (Vec<Finalized>, Option<GestureEvent>) {
        let first = self.step - self.buf.len();
        let rest = self
            .buf
            .drain(..)
            .enumerate()
            .map(|(k, (raw, corrected))| Finalized { step: first + k, raw, corrected })
            .collect();
        let event = (self.run.len > 0).then(|| {
            let kind = self.run.vote().expect("open run is non-empty");
            GestureEvent::new(kind, self.step - self.run.len, self.step - 1, &self.clock)
        });
        (rest, event)
    }
}

/// Runs a whole sequence through a [`StreamBuffer`]; returns the corrected
/// trace and every event in emission order.
pub fn stream_all(seq: &[GestureKind], strategies: Strategies) -> (Vec<Finalized>, Vec<GestureEvent>) {
    let mut buf = StreamBuffer::new(strategies);
    let mut trace = Vec::with_capacity(seq.len());
    let mut events = Vec::new();
    for &p in seq {
        let out = buf.push(p);
        trace.extend(out.finalized);
        events.extend(out.event);
    }
    let (rest, last) = buf.finish();
    trace.extend(rest);
    events.extend(last);
    (trace, events)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::postproc::{eventize, optimize};
    use rand::Rng;

    fn random_seq(rng: &mut impl Rng) -> Vec<GestureKind> {
        let len = rng.random_range(0..120);
        let mut s = Vec::with_capacity(len);
        while s.len() < len {
            // Null gaps and short runs of mixed classes, with occasional
            // isolated noise.
            for _ in 0..rng.random_range(1..6) {
                s.push(GestureKind::Null);
            }
            let base = rng.random_range(1..5u8);
            for _ in 0..rng.random_range(1..8) {
                let c = if rng.random_bool(0.25) { rng.random_range(0..5u8) } else { base };
                s.push(GestureKind::from_code(c).unwrap());
            }
        }
        s.truncate(len);
        s
    }

    fn max_run(s: &[GestureKind]) -> usize {
        s.split(|k| k.is_null()).map(<[_]>::len).max().unwrap_or(0)
    }

    #[test]
    fn matches_batch_for_short_runs() {
        let mut rng = crate::seed::rng(17);
        let mut checked = 0;
        while checked < 2000 {
            let s = random_seq(&mut rng);
            for st in [Strategies::ALL, Strategies::NONE, Strategies { front_follows_back: false, ..Strategies::ALL }] {
                let batch = optimize(&s, st);
                if max_run(&batch) >= BUFFER_LEN {
                    continue;
                }
                let (trace, _) = stream_all(&s, st);
                let corrected: Vec<_> = trace.iter().map(|f| f.corrected).collect();
                assert_eq!(corrected, batch, "{s:?} {st}");
                assert!(trace.iter().enumerate().all(|(k, f)| f.step == k && f.raw == s[k]));
                checked += 1;
            }
        }
    }

    #[test]
    fn event_fires_one_step_after_run() {
        let seq: Vec<_> = [0u8, 2, 2, 3, 3, 0, 0].iter().map(|&c| GestureKind::from_code(c).unwrap()).collect();
        let mut buf = StreamBuffer::new(Strategies::ALL);
        let fired: Vec<_> = seq.iter().enumerate().filter_map(|(i, &p)| buf.push(p).event.map(|e| (i, e))).collect();
        assert_eq!(fired.len(), 1);
        let (at, e) = &fired[0];
        assert_eq!(*at, 5);
        assert_eq!((e.kind, e.start_step, e.end_step), (GestureKind::DoubleClick, 1, 4));
    }

    fn fire(codes: &[u8]) -> Vec<(usize, GestureKind)> {
        let mut buf = StreamBuffer::new(Strategies::ALL);
        codes
            .iter()
            .enumerate()
            .filter_map(|(i, &c)| buf.push(GestureKind::from_code(c).unwrap()).event.map(|e| (i, e.kind)))
            .collect()
    }

    #[test]
    fn stream_examples() {
        assert_eq!(fire(&[0, 2, 2, 2, 0]), vec![(4, GestureKind::SingleClick)]);
        assert!(fire(&[0; 50]).is_empty());
        assert_eq!(fire(&[0, 2, 3, 3, 0, 0, 4, 4, 4, 0]), vec![(4, GestureKind::DoubleClick), (9, GestureKind::TripleClick)]);
        // No event while the run is still open.
        assert!(fire(&[0, 4, 4, 4]).is_empty());
    }

    #[test]
    fn events_match_batch_when_runs_are_apart() {
        let mut rng = crate::seed::rng(5);
        for _ in 0..1000 {
            let s = random_seq(&mut rng);
            let batch = optimize(&s, Strategies::ALL);
            if max_run(&batch) >= BUFFER_LEN {
                continue;
            }
            // A single-null gap can be merged after the first event fired.
            let single_gaps = (1..batch.len().saturating_sub(1))
                .any(|i| batch[i].is_null() && !batch[i - 1].is_null() && !batch[i + 1].is_null());
            let raw_single_gaps =
                (1..s.len().saturating_sub(1)).any(|i| s[i].is_null() && !s[i - 1].is_null() && !s[i + 1].is_null());
            if single_gaps || raw_single_gaps {
                continue;
            }
            let (_, events) = stream_all(&s, Strategies::ALL);
            assert_eq!(events, eventize(&batch), "{s:?}");
        }
    }

    #[test]
    fn long_runs_stay_bounded() {
        let s: Vec<_> = std::iter::repeat_n(GestureKind::SingleClick, 30)
            .chain(std::iter::repeat_n(GestureKind::DoubleClick, 5))
            .chain([GestureKind::Null])
            .collect();
        let (trace, events) = stream_all(&s, Strategies::ALL);
        assert_eq!(trace.len(), s.len());
        assert_eq!(events.len(), 1);
        assert_eq!(events[0].kind, GestureKind::DoubleClick);
        assert_eq!((events[0].start_step, events[0].end_step), (0, 34));
    }
}
