//! Wall-clock measurement with an injectable clock.

use std::cell::RefCell;
use std::collections::VecDeque;
use std::time::Instant;

use crate::error::BenchError;

/// Measures how long a piece of work takes, in seconds.
pub trait Clock {
    fn measure(&self, work: &mut dyn FnMut()) -> f64;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn measure(&self, work: &mut dyn FnMut()) -> f64 {
        let start = Instant::now();
        work();
        start.elapsed().as_secs_f64()
    }
}

/// Runs the work and reports scripted durations in order, cycling when the
/// script runs out.
#[derive(Debug)]
pub struct FakeClock {
    script: Vec<f64>,
    queue: RefCell<VecDeque<f64>>,
}

impl FakeClock {
    pub fn new(script: Vec<f64>) -> Self {
        assert!(!script.is_empty(), "empty script");
        FakeClock { queue: RefCell::new(script.iter().copied().collect()), script }
    }
}

impl Clock for FakeClock {
    fn measure(&self, work: &mut dyn FnMut()) -> f64 {
        work();
        let mut q = self.queue.borrow_mut();
        if q.is_empty() {
            q.extend(self.script.iter().copied());
        }
        q.pop_front().expect("refilled")
    }
}

/// Median; for an even count, the mean of the two middle values.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

/// Runs `work` `runs` times and returns the median duration of the runs
/// after the first `warmup`.
pub fn time_run(work: &mut dyn FnMut(), runs: usize, warmup: usize, clock: &dyn Clock) -> Result<f64, BenchError> {
    if runs <= warmup {
        return Err(BenchError::Usage(format!("runs ({runs}) must exceed warmup ({warmup})")));
    }
    let samples: Vec<f64> = (0..runs).map(|_| clock.measure(work)).collect();
    Ok(median(&samples[warmup..]).expect("at least one kept run"))
}
