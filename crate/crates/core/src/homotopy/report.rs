use crate::linalg::IndexSet;
use crate::problem::{KinkEvents, OneAtATimeReport, SolutionPath};

/// Hitting and leaving sets at every kink. The kink before `t^0` is taken to
/// have empty equicorrelation and active sets.
pub fn one_at_a_time_report(path: &SolutionPath) -> OneAtATimeReport {
    let mut prev_e = IndexSet::empty();
    let mut prev_a = IndexSet::empty();
    let mut records = Vec::with_capacity(path.kinks().len());
    for (kink, point) in path.kinks().iter().enumerate() {
        records.push(KinkEvents {
            kink,
            t: point.t,
            hitting: point.equicorrelation.difference(&prev_e),
            leaving: prev_a.difference(&point.active),
        });
        prev_e = point.equicorrelation.clone();
        prev_a = point.active.clone();
    }
    let holds = records.iter().filter(|r| r.t > 0.0).all(|r| r.count() <= 1);
    OneAtATimeReport { records, holds }
}
