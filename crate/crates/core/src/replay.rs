//! Re-checks recorded line-search decisions by re-evaluating the batch.
//!
//! Deliberately independent of the search code: losses are recomputed from
//! the problem and the inequalities are written out again here.

use crate::optimizer::Batch;
use crate::problems::Problem;
use crate::trace::{Criterion, StepRecord};
use crate::vector::ParamVector;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Recheck {
    /// `lhs - rhs` of the inequality in "greater is better" form; the
    /// criterion holds when this is `>= -tolerance`.
    pub margin: f64,
    pub holds: bool,
}

/// Re-evaluates an accepted searched step. Returns `None` for steps without
/// a search or whose search gave up.
pub fn recheck_step(
    problem: &dyn Problem,
    w: &ParamVector,
    direction: &ParamVector,
    batch: &Batch,
    record: &StepRecord,
    tolerance: f64,
) -> Option<Recheck> {
    let check = record.check.as_ref()?;
    if !record.searched || !check.accepted {
        return None;
    }
    let trial: ParamVector = w
        .iter()
        .zip(direction.iter())
        .map(|(wi, di)| wi + record.eta * di)
        .collect::<Vec<_>>()
        .into();
    let loss0 = problem.loss(w, &batch.indices);
    let loss_trial = problem.loss(&trial, &batch.indices);
    let decrease = loss0 - loss_trial;
    let margin = match check.criterion {
        Criterion::Armijo { c, gnorm_term } => decrease - c * record.eta * gnorm_term,
        Criterion::Salsa { c, beta3, h_prev, s } => {
            let h = match h_prev {
                Some(prev) => beta3 * prev + (1.0 - beta3) * decrease,
                None => decrease,
            };
            h - c * record.eta * s
        }
    };
    Some(Recheck {
        margin,
        holds: margin >= -tolerance,
    })
}
