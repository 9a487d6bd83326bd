//! Byte-level checks of the CSV trace format against a hand-computed file.

use salsa_core::baselines::{FixedLr, ScheduleConfig};
use salsa_core::directions::DirectionKind;
use salsa_core::problems::Quadratic;
use salsa_core::train::Trainer;
use salsa_harness::emit::render;
use salsa_harness::Format;

// f(w) = 0.5 * (w0^2 + 0.5 * w1^2) from (1, 2) with plain SGD at lr 0.5:
// the second step starts at (0.5, 1.5). Batch seeds are splitmix64 of
// (seed 3, epoch), one epoch per step on a single-sample problem.
const GOLDEN: &str = include_str!("data/golden_trace.csv");

#[test]
fn sgd_on_a_diagonal_quadratic_matches_the_golden_csv() {
    let p = Quadratic::from_parts(vec![1.0, 0.5], vec![0.0, 0.0]);
    let mut opt = FixedLr::new(DirectionKind::Sgd, ScheduleConfig::flat(0.5, 2), 2);
    let result = Trainer::new(&p, 1, 3)
        .run_from(&mut opt, vec![1.0, 2.0].into(), 2, |_| {})
        .unwrap();
    let bytes = render(&result.trace, Format::Csv).unwrap();
    assert_eq!(String::from_utf8(bytes).unwrap(), GOLDEN);
}

#[test]
fn json_round_trip_preserves_every_bit() {
    let p = Quadratic::new(5, 30.0, 1);
    let mut opt = salsa_core::salsa::Salsa::new(DirectionKind::Adam, Default::default(), 5);
    let trace = Trainer::new(&p, 1, 2).run(&mut opt, 50).unwrap();
    let json = render(&trace, Format::Json).unwrap();
    let back = salsa_core::TrainingTrace::from_json_str(std::str::from_utf8(&json).unwrap()).unwrap();
    assert_eq!(back, trace);
    assert_eq!(back.to_csv_string(), trace.to_csv_string());
}
