//! Line-search frequency controller.
//!
//! Two exponential moving averages of the accepted step size (fast, beta = 0.9
//! and slow, beta = 0.99) measure how quickly the step size is drifting. The
//! search interval is `L = round(1 / (r - 1))` with `r >= 1` the symmetric
//! fast/slow ratio, clamped to `[1, 10]`.

use serde::{Deserialize, Serialize};

pub const FAST_BETA: f64 = 0.9;
pub const SLOW_BETA: f64 = 0.99;
pub const MIN_INTERVAL: u32 = 1;
pub const MAX_INTERVAL: u32 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreqState {
    pub ema_fast: f64,
    pub ema_slow: f64,
    pub interval: u32,
    pub since_search: u32,
    pub seeded: bool,
}

impl Default for FreqState {
    fn default() -> Self {
        Self::new()
    }
}

impl FreqState {
    pub fn new() -> Self {
        Self {
            ema_fast: 0.0,
            ema_slow: 0.0,
            interval: MIN_INTERVAL,
            since_search: 0,
            seeded: false,
        }
    }

    /// Folds a freshly searched step size into both averages.
    pub fn update_emas(&mut self, eta: f64) {
        if self.seeded {
            self.ema_fast = FAST_BETA * self.ema_fast + (1.0 - FAST_BETA) * eta;
            self.ema_slow = SLOW_BETA * self.ema_slow + (1.0 - SLOW_BETA) * eta;
        } else {
            self.ema_fast = eta;
            self.ema_slow = eta;
            self.seeded = true;
        }
    }

    pub fn compute_interval(&self) -> u32 {
        compute_interval(self.ema_fast, self.ema_slow)
    }

    pub fn should_search(&self) -> bool {
        self.since_search + 1 >= self.interval
    }

    /// Bookkeeping after a step: resets the counter and refreshes the interval
    /// after a search, otherwise counts the skipped step.
    pub fn record_step(&mut self, searched: bool, eta: f64) {
        if searched {
            self.since_search = 0;
            self.update_emas(eta);
            self.interval = self.compute_interval();
        } else {
            self.since_search += 1;
        }
    }
}

/// Search interval from the fast and slow step-size averages.
pub fn compute_interval(ema_fast: f64, ema_slow: f64) -> u32 {
    let r = ema_fast / ema_slow;
    let r_bar = if r >= 1.0 { r } else { 1.0 / r };
    let excess = r_bar - 1.0;
    if !(excess > 0.0) {
        return MAX_INTERVAL;
    }
    let raw = (1.0 / excess).round();
    if raw >= MAX_INTERVAL as f64 {
        MAX_INTERVAL
    } else if raw <= MIN_INTERVAL as f64 {
        MIN_INTERVAL
    } else {
        raw as u32
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn seeding_and_updates() {
        let mut s = FreqState::new();
        s.update_emas(0.01);
        assert_eq!((s.ema_fast, s.ema_slow), (0.01, 0.01));

        let mut s = FreqState {
            ema_fast: 1.0,
            ema_slow: 1.0,
            seeded: true,
            ..FreqState::new()
        };
        s.update_emas(2.0);
        assert!((s.ema_fast - 1.1).abs() < 1e-15);
        assert!((s.ema_slow - 1.01).abs() < 1e-15);
    }

    #[test]
    fn constant_stream_is_a_fixed_point() {
        let mut s = FreqState::new();
        for _ in 0..500 {
            s.update_emas(0.37);
            assert_eq!(s.ema_fast, 0.37);
            assert_eq!(s.ema_slow, 0.37);
        }
    }

    #[test]
    fn interval_examples() {
        assert_eq!(compute_interval(1.0, 1.0), 10);
        assert_eq!(compute_interval(1.2, 1.0), 5);
        assert_eq!(compute_interval(0.8, 1.0), 4);
        assert_eq!(compute_interval(1.05, 1.0), 10);
        assert_eq!(compute_interval(3.0, 1.0), 1);
    }

    #[test]
    fn search_schedule() {
        let mut s = FreqState::new();
        assert!(s.should_search());
        s.interval = 1;
        s.since_search = 5;
        assert!(s.should_search());
        s.interval = 10;
        s.since_search = 8;
        assert!(!s.should_search());
        s.since_search = 9;
        assert!(s.should_search());
    }

    #[test]
    fn constant_eta_searches_every_tenth_step() {
        let mut s = FreqState::new();
        let mut searched = 0;
        for _ in 0..5000 {
            let search = s.should_search();
            searched += search as u32;
            s.record_step(search, 0.5);
        }
        assert_eq!(s.interval, 10);
        assert_eq!(searched, 500);
    }

    proptest! {
        #[test]
        fn interval_stays_in_range(etas in prop::collection::vec(1e-10f64..10.0, 1..200)) {
            let mut s = FreqState::new();
            for eta in etas {
                s.record_step(true, eta);
                prop_assert!((MIN_INTERVAL..=MAX_INTERVAL).contains(&s.interval));
            }
        }

        #[test]
        fn growth_and_decay_are_treated_alike(fast in 1e-6f64..1e3, ratio in 1.0f64..4.0) {
            // Off the rounding boundaries, r and 1/r give the same interval.
            let raw = 1.0 / (ratio - 1.0);
            prop_assume!((raw - raw.floor() - 0.5).abs() > 1e-6);
            prop_assert_eq!(
                compute_interval(fast * ratio, fast),
                compute_interval(fast, fast * ratio)
            );
        }
    }
}
