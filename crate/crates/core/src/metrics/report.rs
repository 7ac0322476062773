use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    average_reward, figure_of_merit, first_hit, fraction_at_max, improvement_ratio, impute_row,
    learning_time, robustness, success, successful_set, MetricsError,
};
use crate::dsl::{run_episode_with, PolicyProgram};
use crate::env::{EnvOptions, TaskId};
use crate::prompt::Ablation;
use crate::refine::RunRecord;
use crate::seed::{derive_seed, stream};

/// Fresh episodes per robustness re-run.
pub const DEFAULT_N_EVAL: usize = 2000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsOptions {
    pub n_eval: usize,
    /// Iterations per replication; defaults to the records' `epochs`.
    pub t_max: Option<usize>,
    /// Success threshold for tasks without a maximum reward.
    pub threshold: Option<f64>,
    /// Skip the re-runs; robustness and the figure of merit are then absent.
    pub skip_robustness: bool,
}

impl Default for MetricsOptions {
    fn default() -> Self {
        MetricsOptions {
            n_eval: DEFAULT_N_EVAL,
            t_max: None,
            threshold: None,
            skip_robustness: false,
        }
    }
}

/// The experiment cell a record belongs to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellKey {
    pub task: TaskId,
    pub model: String,
    pub temperature: f64,
    pub ablation: Ablation,
}

impl CellKey {
    fn of(record: &RunRecord) -> Self {
        let c = &record.config;
        CellKey {
            task: c.task,
            model: c.model.clone(),
            temperature: c.temperature,
            ablation: c.ablation,
        }
    }
}

/// Metrics of one cell. Components that need a success threshold or a
/// non-empty successful set are absent otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    #[serde(flatten)]
    pub cell: CellKey,
    pub n_reps: usize,
    /// Replications that ended early through an abort.
    pub n_aborted: usize,
    /// Iterations per replication after imputation.
    pub n_episodes: usize,
    /// Success threshold: the task maximum or the configured threshold.
    pub r_max: Option<f64>,
    pub n_eval: usize,
    pub average_reward: Option<f64>,
    pub success: Option<f64>,
    pub robustness: Option<f64>,
    pub learning_time: Option<f64>,
    pub fom: Option<f64>,
    /// Replication indices that reached the threshold.
    pub successful_set: Vec<usize>,
    /// Mean first-iteration reward over replications.
    pub initial_reward: Option<f64>,
    /// Highest iteration reward of any replication.
    pub best_reward: Option<f64>,
    pub reference_reward: Option<f64>,
    pub improvement_ratio: Option<f64>,
}

/// Fraction of `n_eval` fresh episodes in which `program` reaches `r_max`.
/// Episode `ep` of replication `replication` uses the environment seed
/// `[ROBUSTNESS, replication, ep, 0]` and the policy seed
/// `[ROBUSTNESS, replication, ep, 1]`, disjoint from the loop's own seeds.
pub fn robustness_of_program(
    program: &PolicyProgram,
    env: &EnvOptions,
    seed_root: u64,
    replication: usize,
    n_eval: usize,
    r_max: f64,
) -> f64 {
    let returns: Vec<f64> = (0..n_eval)
        .into_par_iter()
        .map(|ep| {
            let key =
                |k: u64| derive_seed(seed_root, &[stream::ROBUSTNESS, replication as u64, ep as u64, k]);
            let mut rng = ChaCha8Rng::seed_from_u64(key(1));
            run_episode_with(program, env, key(0), &mut rng).total_reward
        })
        .collect();
    fraction_at_max(&returns, r_max).unwrap_or(0.0)
}

/// Re-runs the first strategy of `record` that reached `r_max` within
/// `t_max` iterations; `None` if there is none.
pub fn robustness_of_record(record: &RunRecord, r_max: f64, t_max: usize, n_eval: usize) -> Option<f64> {
    let hit = first_hit(&record.rewards(), r_max, t_max)?;
    let c = &record.config;
    Some(robustness_of_program(
        &record.strategies[hit - 1].program,
        &c.env,
        c.seed_root,
        record.replication,
        n_eval,
        r_max,
    ))
}

/// The improvement-ratio reference for `task`: its maximum reward, or else
/// the best iteration reward any record of that task reached.
pub fn improvement_reference(records: &[RunRecord], task: TaskId) -> Option<f64> {
    task.spec().r_max.or_else(|| {
        records
            .iter()
            .filter(|r| r.task() == task)
            .flat_map(|r| r.rewards())
            .reduce(f64::max)
    })
}

fn cells(records: &[RunRecord]) -> Vec<(CellKey, Vec<&RunRecord>)> {
    let mut cells: Vec<(CellKey, Vec<&RunRecord>)> = Vec::new();
    for record in records {
        let key = CellKey::of(record);
        match cells.iter_mut().find(|(k, _)| *k == key) {
            Some((_, members)) => members.push(record),
            None => cells.push((key, vec![record])),
        }
    }
    cells
}

fn report_cell(
    key: CellKey,
    members: &[&RunRecord],
    reference: Option<f64>,
    options: &MetricsOptions,
) -> Result<MetricsReport, MetricsError> {
    let t_max = options
        .t_max
        .unwrap_or_else(|| members.iter().map(|r| r.config.epochs).max().unwrap_or(1));
    let r_max = key.task.spec().r_max.or(options.threshold);
    let raw: Vec<Vec<f64>> = members.iter().map(|r| r.rewards()).collect();
    let rows: Vec<Vec<f64>> = raw
        .iter()
        .map(|r| impute_row(r, t_max, r_max).unwrap_or_default())
        .collect();
    let initials: Vec<f64> = raw.iter().filter_map(|r| r.first().copied()).collect();
    let initial_reward = (!initials.is_empty()).then(|| initials.iter().sum::<f64>() / initials.len() as f64);
    let best_reward = raw.iter().flatten().copied().reduce(f64::max);

    let mut report = MetricsReport {
        n_reps: members.len(),
        n_aborted: members.iter().filter(|r| r.abort_reason.is_some()).count(),
        n_episodes: t_max,
        r_max,
        n_eval: options.n_eval,
        average_reward: average_reward(&rows).ok(),
        success: None,
        robustness: None,
        learning_time: None,
        fom: None,
        successful_set: Vec::new(),
        improvement_ratio: match (initial_reward, best_reward, reference) {
            (Some(i), Some(b), Some(r)) => improvement_ratio(i, b, r),
            _ => None,
        },
        initial_reward,
        best_reward,
        reference_reward: reference,
        cell: key,
    };
    let Some(max) = r_max else {
        return Ok(report);
    };
    let successful = successful_set(&rows, max, t_max);
    report.success = Some(success(&rows, max, t_max)?);
    report.learning_time = learning_time(&rows, max, t_max);
    report.successful_set = successful.iter().map(|&i| members[i].replication).collect();
    if !options.skip_robustness {
        let fractions: Vec<f64> = successful
            .iter()
            .filter_map(|&i| robustness_of_record(members[i], max, t_max, options.n_eval))
            .collect();
        report.robustness = robustness(&fractions);
    }
    if let (Some(rob), Some(succ), Some(lt)) = (report.robustness, report.success, report.learning_time) {
        report.fom = Some(figure_of_merit(rob, succ, lt));
    }
    Ok(report)
}

/// One report per (task, model, temperature, ablation) cell, in order of
/// first appearance.
pub fn evaluate(records: &[RunRecord], options: &MetricsOptions) -> Result<Vec<MetricsReport>, MetricsError> {
    if records.is_empty() {
        return Err(MetricsError::Empty);
    }
    cells(records)
        .into_iter()
        .map(|(key, members)| {
            let reference = improvement_reference(records, key.task);
            report_cell(key, &members, reference, options)
        })
        .collect()
}

fn cell(value: Option<f64>) -> String {
    value.map_or_else(|| "-".to_string(), |v| format!("{v:.2}"))
}

/// Aligned human-readable table, two decimals per value.
pub fn render_table(reports: &[MetricsReport]) -> String {
    let header = [
        "task",
        "model",
        "temp",
        "ablation",
        "reps",
        "avg_reward",
        "success",
        "robustness",
        "learn_time",
        "fom",
        "improvement",
    ];
    let mut rows: Vec<Vec<String>> = vec![header.iter().map(|h| h.to_string()).collect()];
    for r in reports {
        rows.push(vec![
            r.cell.task.to_string(),
            r.cell.model.clone(),
            format!("{:.2}", r.cell.temperature),
            r.cell.ablation.to_string(),
            r.n_reps.to_string(),
            cell(r.average_reward),
            cell(r.success),
            cell(r.robustness),
            cell(r.learning_time),
            cell(r.fom),
            cell(r.improvement_ratio),
        ]);
    }
    let widths: Vec<usize> = (0..header.len())
        .map(|c| rows.iter().map(|row| row[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in &rows {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(c, (text, &w))| {
                if c < 4 {
                    format!("{text:<w$}")
                } else {
                    format!("{text:>w$}")
                }
            })
            .collect();
        writeln!(out, "{}", line.join("  ").trim_end()).expect("writing to a String");
    }
    out
}

/// Mean imputed reward per cell and iteration, for plotting learning curves.
pub fn render_curve_csv(records: &[RunRecord], t_max: Option<usize>) -> String {
    let mut out = String::from("task,model,temperature,ablation,iteration,replications,mean_reward\n");
    for (key, members) in cells(records) {
        let t = t_max.unwrap_or_else(|| members.iter().map(|r| r.config.epochs).max().unwrap_or(1));
        let rows: Vec<Vec<f64>> = members
            .iter()
            .filter_map(|r| impute_row(&r.rewards(), t, key.task.spec().r_max))
            .collect();
        if rows.is_empty() {
            continue;
        }
        for i in 0..t {
            let mean = rows.iter().map(|row| row[i]).sum::<f64>() / rows.len() as f64;
            writeln!(
                out,
                "{},\"{}\",{},{},{},{},{}",
                key.task,
                key.model.replace('"', "\"\""),
                key.temperature,
                key.ablation,
                i + 1,
                rows.len(),
                mean
            )
            .expect("writing to a String");
        }
    }
    out
}
