//! Brute-force metric formulas written with explicit index loops and no
//! shared helpers, as an independent check of `policy_refine::metrics`.
//! Rows are assumed already complete (`t_max` entries each, or empty for a
//! replication that produced nothing).

#![allow(clippy::needless_range_loop)]

pub struct Oracle {
    pub average_reward: Option<f64>,
    pub success: f64,
    pub learning_time: Option<f64>,
    pub successful: Vec<usize>,
}

pub fn oracle(matrix: &[Vec<f64>], r_max: f64, t_max: usize) -> Oracle {
    let mut total = 0.0;
    let mut count = 0usize;
    for row in matrix {
        for t in 0..row.len() {
            total += row[t];
            count += 1;
        }
    }
    let mut successful = Vec::new();
    let mut fraction_sum = 0.0;
    for m in 0..matrix.len() {
        let mut hit = 0usize;
        let mut t = 1;
        while t <= t_max && t <= matrix[m].len() {
            if matrix[m][t - 1] >= r_max {
                hit = t;
                break;
            }
            t += 1;
        }
        if hit > 0 {
            successful.push(m);
            fraction_sum += hit as f64 / t_max as f64;
        }
    }
    Oracle {
        average_reward: if count == 0 {
            None
        } else {
            Some(total / count as f64)
        },
        success: successful.len() as f64 / matrix.len() as f64,
        learning_time: if successful.is_empty() {
            None
        } else {
            Some(fraction_sum / successful.len() as f64)
        },
        successful,
    }
}

pub fn fom(robustness: f64, success: f64, learning_time: f64) -> f64 {
    robustness * (success * success) / learning_time
}

/// A random matrix in which some rows reach `r_max` at random points.
pub fn random_matrix(rng: &mut impl rand::Rng, reps: usize, t_max: usize, r_max: f64) -> Vec<Vec<f64>> {
    (0..reps)
        .map(|_| {
            let hit_at = if rng.gen_bool(0.6) {
                Some(rng.gen_range(0..t_max))
            } else {
                None
            };
            (0..t_max)
                .map(|t| match hit_at {
                    Some(h) if t >= h => {
                        if rng.gen_bool(0.8) {
                            r_max
                        } else {
                            rng.gen_range(0.0..r_max)
                        }
                    }
                    _ => rng.gen_range(0.0..r_max),
                })
                .collect()
        })
        .collect()
}
