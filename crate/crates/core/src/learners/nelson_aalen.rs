//! Nelson-Aalen estimation and the shared Breslow baseline routine.

use crate::data::Dataset;
use crate::hazard::StepHazard;

/// Breslow baseline cumulative hazard for events of `cause`:
/// jumps d(s) / sum_{i: time_i >= s} score_i at each distinct event time s.
///
/// With unit scores this is exactly the Nelson-Aalen estimator, and the
/// two code paths coincide bit for bit.
pub fn breslow_baseline(d: &Dataset, cause: u8, scores: &[f64]) -> StepHazard {
    let n = d.len();
    debug_assert_eq!(scores.len(), n);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        d.observation(a)
            .time
            .total_cmp(&d.observation(b).time)
            .then(a.cmp(&b))
    });

    // Risk sums accumulated from the largest time downward in index
    // order, so the summation order is independent of the caller.
    let mut risk_at = vec![0.0; n];
    let mut running = 0.0;
    for pos in (0..n).rev() {
        running += scores[order[pos]];
        risk_at[pos] = running;
    }

    let mut times = Vec::new();
    let mut jumps = Vec::new();
    let mut pos = 0;
    while pos < n {
        let t = d.observation(order[pos]).time;
        let mut end = pos;
        let mut events = 0u32;
        while end < n && d.observation(order[end]).time == t {
            if d.observation(order[end]).status == cause {
                events += 1;
            }
            end += 1;
        }
        if events > 0 {
            times.push(t);
            jumps.push(f64::from(events) / risk_at[pos]);
        }
        pos = end;
    }
    StepHazard::new(times, jumps)
}
