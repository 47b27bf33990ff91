use super::{promotion, Strategies};
use crate::signal::GestureKind;

/// Majority class of a run; ties go to the tied class whose last occurrence
/// is latest. `None` for an empty slice.
pub fn majority_vote(run: &[GestureKind]) -> Option<GestureKind> {
    let mut counts = [0usize; GestureKind::COUNT];
    let mut last = [0usize; GestureKind::COUNT];
    for (i, k) in run.iter().enumerate() {
        counts[k.index()] += 1;
        last[k.index()] = i;
    }
    GestureKind::ALL
        .into_iter()
        .filter(|k| counts[k.index()] > 0)
        .max_by_key(|k| (counts[k.index()], last[k.index()]))
}

#[derive(Clone, Copy)]
struct Pass {
    low_pass: bool,
    sandwich: bool,
    front_follows_back: bool,
    majority_rule: bool,
}

/// One left-to-right pass. `run` is the length of the non-null run ending at
/// `i − 1`, `prev_run` the one ending at `i − 2`, both measured on the
/// already corrected sequence.
fn run_pass(seq: &[GestureKind], pass: Pass) -> Vec<GestureKind> {
    use GestureKind::Null;
    let mut y = seq.to_vec();
    let mut run = 0usize;
    let mut prev_run = 0usize;
    for i in 0..y.len() {
        if i >= 2 {
            if pass.low_pass && y[i - 2] == Null && y[i - 1] != Null && y[i] == Null {
                y[i - 1] = Null;
                run = 0;
            }
            if pass.sandwich && y[i - 2] != Null && y[i - 1] == Null && y[i] != Null {
                y[i - 1] = y[i - 2];
                run = prev_run + 1;
            }
        }
        if i >= 1 {
            if pass.front_follows_back {
                if let Some(code) = promotion(y[i - 1], y[i]) {
                    y[i - run..i].fill(code);
                }
            }
            if pass.majority_rule && y[i - 1] != Null && y[i] == Null {
                let vote = majority_vote(&y[i - run..i]).expect("closing run is non-empty");
                y[i - run..i].fill(vote);
            }
        }
        prev_run = run;
        run = if y[i] == Null { 0 } else { run + 1 };
    }
    y
}

/// The full optimizer with the selected strategies.
pub fn optimize(seq: &[GestureKind], strategies: Strategies) -> Vec<GestureKind> {
    run_pass(
        seq,
        Pass {
            low_pass: strategies.low_pass,
            sandwich: true,
            front_follows_back: strategies.front_follows_back,
            majority_rule: strategies.majority_rule,
        },
    )
}

/// Strategy 1 on its own (with the null-sandwich fill).
pub fn lowpass(seq: &[GestureKind]) -> Vec<GestureKind> {
    optimize(seq, Strategies { low_pass: true, ..Strategies::NONE })
}

/// Strategy 2 on its own.
pub fn front_follows_back(seq: &[GestureKind]) -> Vec<GestureKind> {
    run_pass(seq, Pass { low_pass: false, sandwich: false, front_follows_back: true, majority_rule: false })
}

/// Strategy 3 on its own: every run closed by a null takes its majority
/// class. A run still open at the end of the sequence is left as is.
pub fn majority_rule(seq: &[GestureKind]) -> Vec<GestureKind> {
    run_pass(seq, Pass { low_pass: false, sandwich: false, front_follows_back: false, majority_rule: true })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seq(codes: &[u8]) -> Vec<GestureKind> {
        codes.iter().map(|&c| GestureKind::from_code(c).unwrap()).collect()
    }

    fn codes(seq: &[GestureKind]) -> Vec<u8> {
        seq.iter().map(|k| k.code()).collect()
    }

    #[test]
    fn lowpass_examples() {
        assert_eq!(codes(&lowpass(&seq(&[0, 2, 0]))), vec![0, 0, 0]);
        assert_eq!(codes(&lowpass(&seq(&[2, 0, 2]))), vec![2, 2, 2]);
        assert_eq!(codes(&lowpass(&seq(&[0, 2, 2, 0]))), vec![0, 2, 2, 0]);
        // The fill takes the preceding class.
        assert_eq!(codes(&lowpass(&seq(&[3, 0, 2]))), vec![3, 3, 2]);
    }

    #[test]
    fn front_follows_back_examples() {
        assert_eq!(codes(&front_follows_back(&seq(&[2, 2, 3, 3]))), vec![3, 3, 3, 3]);
        assert_eq!(codes(&front_follows_back(&seq(&[3, 3, 4]))), vec![4, 4, 4]);
        assert_eq!(codes(&front_follows_back(&seq(&[2, 2, 1]))), vec![1, 1, 1]);
        // Only within the current run.
        assert_eq!(codes(&front_follows_back(&seq(&[2, 0, 2, 3]))), vec![2, 0, 3, 3]);
        // Not a listed transition.
        assert_eq!(codes(&front_follows_back(&seq(&[3, 3, 2]))), vec![3, 3, 2]);
    }

    #[test]
    fn majority_examples() {
        assert_eq!(codes(&majority_rule(&seq(&[2, 2, 3, 2, 2, 0]))), vec![2, 2, 2, 2, 2, 0]);
        assert_eq!(codes(&majority_rule(&seq(&[3, 3, 0]))), vec![3, 3, 0]);
        assert_eq!(codes(&majority_rule(&seq(&[2, 2, 3, 3, 0]))), vec![3, 3, 3, 3, 0]);
        assert_eq!(codes(&majority_rule(&seq(&[3, 3, 2, 2, 0]))), vec![2, 2, 2, 2, 0]);
        // Open run at the end is not closed yet.
        assert_eq!(codes(&majority_rule(&seq(&[0, 2, 3, 3]))), vec![0, 2, 3, 3]);
    }

    #[test]
    fn growing_triple_click_collapses() {
        let raw = seq(&[0, 0, 2, 2, 2, 3, 3, 3, 4, 4, 4, 4, 0, 0]);
        let out = optimize(&raw, Strategies::ALL);
        assert_eq!(codes(&out), vec![0, 0, 4, 4, 4, 4, 4, 4, 4, 4, 4, 4, 0, 0]);
        // Majority alone would settle on the plurality of the raw run.
        let s3 = optimize(&raw, Strategies { majority_rule: true, ..Strategies::NONE });
        assert_eq!(codes(&s3), vec![0, 0, 4, 4, 4, 4, 4, 4, 4, 4, 4, 4, 0, 0]);
        let raw = seq(&[0, 2, 2, 2, 2, 3, 3, 4, 0]);
        assert_eq!(codes(&optimize(&raw, Strategies::ALL)), vec![0, 4, 4, 4, 4, 4, 4, 4, 0]);
        assert_eq!(codes(&majority_rule(&raw)), vec![0, 2, 2, 2, 2, 2, 2, 2, 0]);
    }

    #[test]
    fn flags_off_only_fill_sandwiches() {
        let raw = seq(&[0, 2, 0, 0, 3, 0, 3, 2, 2, 0]);
        assert_eq!(codes(&optimize(&raw, Strategies::NONE)), vec![0, 2, 0, 0, 3, 3, 3, 2, 2, 0]);
        assert!(optimize(&seq(&[0; 30]), Strategies::ALL).iter().all(|k| k.is_null()));
    }

    #[test]
    fn tie_break_matches_brute_force() {
        // Brute force: enumerate classes, keep the largest (count, last index).
        let brute = |run: &[GestureKind]| -> GestureKind {
            let mut best: Option<(usize, usize, GestureKind)> = None;
            for k in GestureKind::ALL {
                let count = run.iter().filter(|&&x| x == k).count();
                if count == 0 {
                    continue;
                }
                let last = run.iter().rposition(|&x| x == k).unwrap();
                if best.is_none_or(|(c, l, _)| (count, last) > (c, l)) {
                    best = Some((count, last, k));
                }
            }
            best.unwrap().2
        };
        let mut rng = crate::seed::rng(3);
        for _ in 0..2000 {
            use rand::Rng;
            let n = rng.random_range(1..12);
            let run: Vec<_> = (0..n).map(|_| GestureKind::from_code(rng.random_range(1..5)).unwrap()).collect();
            assert_eq!(majority_vote(&run).unwrap(), brute(&run), "{run:?}");
        }
    }

    /// Unit-test corpus on which the optimizer is idempotent.
    const CORPUS: &[&[u8]] = &[
        &[0, 2, 0],
        &[2, 0, 2],
        &[0, 2, 2, 0],
        &[2, 2, 3, 3],
        &[3, 3, 4],
        &[2, 2, 1],
        &[2, 2, 3, 2, 2, 0],
        &[3, 3, 0],
        &[2, 2, 3, 3, 0],
        &[0, 0, 2, 2, 2, 3, 3, 3, 4, 4, 4, 4, 0, 0],
        &[0, 2, 3, 3, 0, 0, 4, 4, 4, 0],
        &[0, 1, 1, 2, 1, 0, 0, 0, 3, 0, 0],
    ];

    #[test]
    fn idempotent_on_corpus() {
        for &c in CORPUS {
            let once = optimize(&seq(c), Strategies::ALL);
            assert_eq!(optimize(&once, Strategies::ALL), once, "{c:?}");
        }
    }

    fn arb_seq() -> impl Strategy<Value = Vec<GestureKind>> {
        prop::collection::vec(prop_oneof![3 => Just(0u8), 1 => 1u8..5], 0..60)
            .prop_map(|c| c.into_iter().map(|x| GestureKind::from_code(x).unwrap()).collect())
    }

    fn arb_strategies() -> impl Strategy<Value = Strategies> {
        (any::<bool>(), any::<bool>(), any::<bool>())
            .prop_map(|(a, b, c)| Strategies { low_pass: a, front_follows_back: b, majority_rule: c })
    }

    proptest! {
        #[test]
        fn length_preserved(s in arb_seq(), st in arb_strategies()) {
            prop_assert_eq!(optimize(&s, st).len(), s.len());
        }

        #[test]
        fn far_nulls_untouched(s in arb_seq(), st in arb_strategies()) {
            let out = optimize(&s, st);
            for i in 0..s.len() {
                let lo = i.saturating_sub(2);
                let hi = (i + 3).min(s.len());
                if s[lo..hi].iter().all(|k| k.is_null()) {
                    prop_assert!(out[i].is_null());
                }
            }
        }

        #[test]
        fn strategies_never_invent_nulls_inside_runs(s in arb_seq()) {
            // Null count can only shrink except for removed singletons.
            let out = optimize(&s, Strategies { low_pass: false, ..Strategies::ALL });
            for (a, b) in s.iter().zip(&out) {
                if !a.is_null() { prop_assert!(!b.is_null()); }
            }
        }
    }
}
