//! Evaluation metrics over replications of the refinement loop.
//!
//! The formulas work on a reward matrix: one row per replication, one mean
//! reward per iteration, iterations numbered from 1. [`impute_row`] turns a
//! record's possibly short history into a full row; [`evaluate`] groups
//! records into experiment cells and produces a [`MetricsReport`] for each.

mod report;

use thiserror::Error;

pub use report::{
    evaluate, improvement_reference, render_curve_csv, render_table, robustness_of_program,
    robustness_of_record, CellKey, MetricsOptions, MetricsReport, DEFAULT_N_EVAL,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("no rewards to aggregate")]
    Empty,
}

/// Completes a replication's history to exactly `t_max` iterations.
///
/// Longer histories are truncated. A history that stopped early because it
/// reached `r_max` is padded with `r_max`; any other short history repeats
/// its last value. An empty history has nothing to extend and yields `None`.
pub fn impute_row(rewards: &[f64], t_max: usize, r_max: Option<f64>) -> Option<Vec<f64>> {
    let &last = rewards.last()?;
    let mut row: Vec<f64> = rewards.iter().copied().take(t_max).collect();
    let fill = match r_max {
        Some(max) if rewards.iter().any(|&r| r >= max) => max,
        _ => last,
    };
    row.resize(t_max, fill);
    Some(row)
}

/// Mean of every entry of the matrix.
pub fn average_reward(rows: &[Vec<f64>]) -> Result<f64, MetricsError> {
    let count: usize = rows.iter().map(Vec::len).sum();
    if count == 0 {
        return Err(MetricsError::Empty);
    }
    Ok(rows.iter().flatten().sum::<f64>() / count as f64)
}

/// 1-based iteration at which `row` first reaches `r_max`, if that happens
/// within `t_max` iterations.
pub fn first_hit(row: &[f64], r_max: f64, t_max: usize) -> Option<usize> {
    row.iter().take(t_max).position(|&r| r >= r_max).map(|i| i + 1)
}

/// Indices of the rows that reach `r_max` within `t_max` iterations.
pub fn successful_set(rows: &[Vec<f64>], r_max: f64, t_max: usize) -> Vec<usize> {
    (0..rows.len())
        .filter(|&i| first_hit(&rows[i], r_max, t_max).is_some())
        .collect()
}

/// Fraction of rows that reach `r_max` within `t_max` iterations.
pub fn success(rows: &[Vec<f64>], r_max: f64, t_max: usize) -> Result<f64, MetricsError> {
    if rows.is_empty() {
        return Err(MetricsError::Empty);
    }
    Ok(successful_set(rows, r_max, t_max).len() as f64 / rows.len() as f64)
}

/// Mean over the successful rows of first-hit iteration divided by `t_max`;
/// absent when no row succeeds. Lies in `[1/t_max, 1]`.
pub fn learning_time(rows: &[Vec<f64>], r_max: f64, t_max: usize) -> Option<f64> {
    let hits: Vec<usize> = rows.iter().filter_map(|r| first_hit(r, r_max, t_max)).collect();
    if hits.is_empty() {
        return None;
    }
    Some(hits.iter().map(|&h| h as f64 / t_max as f64).sum::<f64>() / hits.len() as f64)
}

/// Fraction of episode returns that reach `r_max`.
pub fn fraction_at_max(returns: &[f64], r_max: f64) -> Option<f64> {
    if returns.is_empty() {
        return None;
    }
    Some(returns.iter().filter(|&&r| r >= r_max).count() as f64 / returns.len() as f64)
}

/// Mean of per-replication robustness fractions; absent for an empty set.
pub fn robustness(fractions: &[f64]) -> Option<f64> {
    if fractions.is_empty() {
        return None;
    }
    Some(fractions.iter().sum::<f64>() / fractions.len() as f64)
}

/// Success counts twice as much as the other two components.
pub fn figure_of_merit(robustness: f64, success: f64, learning_time: f64) -> f64 {
    robustness * success * success / learning_time
}

/// Share of the gap between `initial` and `reference` closed by `best`.
/// No progress is 0 whatever the reference; otherwise a reference equal to
/// `initial` leaves the ratio undefined.
pub fn improvement_ratio(initial: f64, best: f64, reference: f64) -> Option<f64> {
    if best == initial {
        return Some(0.0);
    }
    if reference == initial {
        return None;
    }
    Some((best - initial) / (reference - initial))
}
