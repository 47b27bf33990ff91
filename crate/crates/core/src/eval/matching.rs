use super::ConfusionMatrix;
use crate::postproc::GestureEvent;
use crate::signal::GestureKind;

fn overlap(a: &GestureEvent, b: &GestureEvent) -> usize {
    let lo = a.start_step.max(b.start_step);
    let hi = a.end_step.min(b.end_step);
    if hi >= lo {
        hi - lo + 1
    } else {
        0
    }
}

/// Event-level confusion matrix.
///
/// Every predicted event goes to the truth event it overlaps most (earliest
/// on ties). Per truth event the prediction with the largest overlap is its
/// match and scores `(truth, pred)`; extra predictions and predictions that
/// overlap nothing score `(Null, pred)`, an unmatched truth event scores
/// `(truth, Null)`. The null stretches around truth events count as Null
/// truth events: one without any stray prediction scores `(Null, Null)`.
/// The leading stretch counts only if the first truth event does not start
/// at step 0.
pub fn match_events(pred: &[GestureEvent], truth: &[GestureEvent]) -> ConfusionMatrix {
    use GestureKind::Null;
    let mut cm = ConfusionMatrix::default();
    let mut assigned: Vec<Vec<(usize, usize)>> = vec![Vec::new(); truth.len()];
    let mut strays = vec![0usize; truth.len() + 1];
    for (p, ev) in pred.iter().enumerate() {
        let best = truth
            .iter()
            .enumerate()
            .map(|(t, tr)| (overlap(ev, tr), t))
            .filter(|&(o, _)| o > 0)
            .max_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)));
        match best {
            Some((o, t)) => assigned[t].push((o, p)),
            None => {
                let gap = truth.iter().take_while(|tr| tr.end_step < ev.start_step).count();
                strays[gap] += 1;
                cm.add(Null, ev.kind);
            }
        }
    }
    for (t, tr) in truth.iter().enumerate() {
        let matched = assigned[t].iter().max_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1))).map(|&(_, p)| p);
        match matched {
            Some(m) => {
                cm.add(tr.kind, pred[m].kind);
                for &(_, p) in assigned[t].iter().filter(|&&(_, p)| p != m) {
                    cm.add(Null, pred[p].kind);
                }
            }
            None => cm.add(tr.kind, Null),
        }
    }
    let leading_gap = truth.first().is_none_or(|tr| tr.start_step > 0);
    for (g, &n) in strays.iter().enumerate() {
        if n == 0 && (g > 0 || leading_gap) {
            cm.add(Null, Null);
        }
    }
    cm
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::postproc::{GestureEvent, StepClock};
    use GestureKind::*;

    fn ev(kind: GestureKind, a: usize, b: usize) -> GestureEvent {
        GestureEvent::new(kind, a, b, &StepClock::default())
    }

    #[test]
    fn exact_events_are_diagonal() {
        let truth = vec![ev(SingleClick, 5, 10), ev(Sos, 20, 30), ev(TripleClick, 40, 52)];
        let cm = match_events(&truth, &truth);
        assert_eq!(cm.trace(), cm.total());
        assert_eq!(cm.get(Null, Null), 4);
        assert_eq!(cm.get(Sos, Sos), 1);
    }

    #[test]
    fn spurious_event_in_null_region() {
        let truth = vec![ev(SingleClick, 5, 10), ev(Sos, 20, 30)];
        let mut pred = truth.clone();
        pred.insert(1, ev(DoubleClick, 14, 15));
        let cm = match_events(&pred, &truth);
        assert_eq!(cm.get(Null, DoubleClick), 1);
        assert_eq!(cm.get(Null, Null), 2);
        assert_eq!(cm.total() - cm.trace(), 1);
    }

    #[test]
    fn missed_and_duplicate_events() {
        let truth = vec![ev(SingleClick, 5, 10), ev(Sos, 20, 30)];
        let pred = vec![ev(Sos, 20, 22), ev(DoubleClick, 24, 30)];
        let cm = match_events(&pred, &truth);
        assert_eq!(cm.get(SingleClick, Null), 1);
        // The longer overlap wins the match, the other is a false alarm.
        assert_eq!(cm.get(Sos, DoubleClick), 1);
        assert_eq!(cm.get(Null, Sos), 1);
    }

    #[test]
    fn event_spanning_two_truths_goes_to_larger_overlap() {
        let truth = vec![ev(SingleClick, 10, 14), ev(DoubleClick, 16, 25)];
        let pred = vec![ev(DoubleClick, 12, 20)];
        let cm = match_events(&pred, &truth);
        // Exhaustive check over every possible assignment of the single
        // prediction: the one with the largest overlap is the one scored.
        let best = (0..truth.len()).max_by_key(|&t| overlap(&pred[0], &truth[t])).unwrap();
        assert_eq!(best, 1);
        assert_eq!(cm.get(DoubleClick, DoubleClick), 1);
        assert_eq!(cm.get(SingleClick, Null), 1);
        assert_eq!(cm.get(Null, Null), 3);
    }

    #[test]
    fn no_truth_no_pred() {
        let cm = match_events(&[], &[]);
        assert_eq!(cm.total(), 1);
        assert_eq!(cm.get(Null, Null), 1);
    }
}
