//! Correction of time-step predictions and event extraction.
//!
//! Three strategies run in a single left-to-right pass:
//!
//! 1. low-pass: a lone non-null prediction between nulls becomes null;
//! 2. front-follows-back: on a 2→3, 3→4 or 2→1 transition the run so far is
//!    rewritten to the later, more complete gesture;
//! 3. majority rule: when a run closes, it is rewritten to its majority class.
//!
//! A null sandwiched between two non-null predictions is always filled with
//! the preceding class, whichever strategies are enabled.
//!
//! [`optimize`] is the batch form, [`StreamBuffer`] the real-time form over a
//! ten-slot buffer. Both emit the same corrections for runs shorter than the
//! buffer.

mod batch;
mod events;
mod io;
mod stream;

pub use batch::{front_follows_back, lowpass, majority_rule, majority_vote, optimize};
pub use events::{eventize, eventize_with, GestureEvent, StepClock};
pub use io::{load_events, load_trace, save_events, save_trace, TraceRecord, EVENTS_FORMAT, TRACE_FORMAT};
pub use stream::{stream_all, Finalized, StreamBuffer, StreamOutput, BUFFER_LEN};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which strategies [`optimize`] applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Strategies {
    pub low_pass: bool,
    pub front_follows_back: bool,
    pub majority_rule: bool,
}

impl Strategies {
    pub const ALL: Strategies = Strategies { low_pass: true, front_follows_back: true, majority_rule: true };
    pub const NONE: Strategies = Strategies { low_pass: false, front_follows_back: false, majority_rule: false };
}

impl Default for Strategies {
    fn default() -> Self {
        Self::ALL
    }
}

impl std::str::FromStr for Strategies {
    type Err = Error;

    /// `"none"` or a comma-separated subset of `s1,s2,s3`.
    fn from_str(s: &str) -> Result<Self> {
        let mut out = Strategies::NONE;
        if s.trim().eq_ignore_ascii_case("none") {
            return Ok(out);
        }
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part.to_ascii_lowercase().as_str() {
                "s1" | "lowpass" | "low-pass" => out.low_pass = true,
                "s2" | "ffb" | "front-follows-back" => out.front_follows_back = true,
                "s3" | "majority" => out.majority_rule = true,
                other => return Err(Error::InvalidConfig(format!("unknown strategy {other:?}"))),
            }
        }
        Ok(out)
    }
}

impl std::fmt::Display for Strategies {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let names: Vec<&str> = [(self.low_pass, "s1"), (self.front_follows_back, "s2"), (self.majority_rule, "s3")]
            .into_iter()
            .filter_map(|(on, n)| on.then_some(n))
            .collect();
        if names.is_empty() {
            f.write_str("none")
        } else {
            f.write_str(&names.join(","))
        }
    }
}

/// Later gesture that overrides an earlier partial one, if `(prev, next)` is
/// one of the front-follows-back transitions.
pub(crate) fn promotion(prev: crate::GestureKind, next: crate::GestureKind) -> Option<crate::GestureKind> {
    use crate::GestureKind::*;
    match (prev, next) {
        (SingleClick, DoubleClick) | (DoubleClick, TripleClick) | (SingleClick, Sos) => Some(next),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_strategies() {
        assert_eq!("none".parse::<Strategies>().unwrap(), Strategies::NONE);
        assert_eq!("s1,s2,s3".parse::<Strategies>().unwrap(), Strategies::ALL);
        let s: Strategies = "s3".parse().unwrap();
        assert!(s.majority_rule && !s.low_pass && !s.front_follows_back);
        assert!("s4".parse::<Strategies>().is_err());
        assert_eq!(Strategies::ALL.to_string(), "s1,s2,s3");
        assert_eq!(Strategies::NONE.to_string(), "none");
    }
}
