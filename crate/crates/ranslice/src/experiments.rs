//! Multi-seed comparison harness: runs the heuristic and the baselines
//! over resale-gain profiles and seeds, and aggregates the deltas.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Config, ConfigError, ResaleProfile};
use crate::model::MvnoId;
use crate::sim::{run_simulation, Algorithm, Scenario, ScenarioOverrides, SimMetrics};

/// One (profile, algorithm, seed) run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub profile: String,
    pub algorithm: Algorithm,
    pub seed: u64,
    pub mno_revenue: f64,
    pub mno_cost: f64,
    pub mno_profit: f64,
    pub mvno_revenue_total: f64,
    pub mvno_revenue: BTreeMap<MvnoId, f64>,
    pub accepted_bid_sum: f64,
    pub accepted_requests: u32,
    pub acceptance_ratio: f64,
}

impl CompareRow {
    fn from_metrics(
        profile: String,
        algorithm: Algorithm,
        seed: u64,
        metrics: &SimMetrics,
    ) -> Self {
        Self {
            profile,
            algorithm,
            seed,
            mno_revenue: metrics.mno_revenue,
            mno_cost: metrics.mno_cost,
            mno_profit: metrics.mno_profit,
            mvno_revenue_total: metrics.mvno_revenue_total(),
            mvno_revenue: metrics.mvno_revenue.clone(),
            accepted_bid_sum: metrics.accepted_bid_sum,
            accepted_requests: metrics.accepted_requests,
            acceptance_ratio: metrics.acceptance_ratio,
        }
    }
}

/// Seed-mean of one (profile, algorithm) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareAggregate {
    pub profile: String,
    pub algorithm: Algorithm,
    pub seeds: u32,
    pub mean_mno_revenue: f64,
    pub mean_mno_cost: f64,
    pub mean_mno_profit: f64,
    pub mean_mvno_revenue_total: f64,
    pub mean_mvno_revenue: BTreeMap<MvnoId, f64>,
    pub mean_accepted_bid_sum: f64,
}

/// Heuristic-vs-baseline gaps per profile, as percentages of the
/// heuristic's mean: `(heuristic - baseline) / heuristic * 100`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineDelta {
    pub profile: String,
    pub baseline: Algorithm,
    pub mno_revenue_delta_pct: f64,
    pub mno_cost_delta_pct: f64,
    pub mvno_revenue_delta_pct: f64,
    pub accepted_bid_sum_delta_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub rows: Vec<CompareRow>,
    pub aggregates: Vec<CompareAggregate>,
    pub deltas: Vec<BaselineDelta>,
}

impl CompareReport {
    pub fn aggregate(&self, profile: &str, algorithm: Algorithm) -> Option<&CompareAggregate> {
        self.aggregates
            .iter()
            .find(|a| a.profile == profile && a.algorithm == algorithm)
    }

    pub fn delta(&self, profile: &str, baseline: Algorithm) -> Option<&BaselineDelta> {
        self.deltas
            .iter()
            .find(|d| d.profile == profile && d.baseline == baseline)
    }
}

pub fn delta_pct(heuristic: f64, baseline: f64) -> f64 {
    if heuristic == 0.0 {
        0.0
    } else {
        (heuristic - baseline) / heuristic * 100.0
    }
}

/// Runs every (profile, algorithm, seed) combination, fanning seeds out
/// across threads, and aggregates the results in deterministic order.
pub fn run_compare(
    config: &Config,
    profiles: &[ResaleProfile],
    algorithms: &[Algorithm],
    seeds: &[u64],
    dynamic: Option<bool>,
) -> Result<CompareReport, ConfigError> {
    let mut jobs: Vec<(ResaleProfile, Algorithm, u64)> = Vec::new();
    for &profile in profiles {
        for &algorithm in algorithms {
            for &seed in seeds {
                jobs.push((profile, algorithm, seed));
            }
        }
    }
    // Validate up front so worker threads cannot hit config errors.
    for &profile in profiles {
        let overrides = ScenarioOverrides {
            resale_profile: Some(profile),
            dynamic,
            ..Default::default()
        };
        Scenario::from_config(config, &overrides)?;
    }

    let rows: Vec<CompareRow> = jobs
        .into_par_iter()
        .map(|(profile, algorithm, seed)| {
            let overrides = ScenarioOverrides {
                seed: Some(seed),
                resale_profile: Some(profile),
                dynamic,
                algorithm: Some(algorithm),
                ..Default::default()
            };
            let scenario =
                Scenario::from_config(config, &overrides).expect("validated above");
            let metrics = run_simulation(&scenario);
            CompareRow::from_metrics(profile.label().into(), algorithm, seed, &metrics)
        })
        .collect();

    let mut aggregates = Vec::new();
    for &profile in profiles {
        for &algorithm in algorithms {
            let cell: Vec<&CompareRow> = rows
                .iter()
                .filter(|r| r.profile == profile.label() && r.algorithm == algorithm)
                .collect();
            if cell.is_empty() {
                continue;
            }
            let n = cell.len() as f64;
            let mut mean_mvno: BTreeMap<MvnoId, f64> = BTreeMap::new();
            for row in &cell {
                for (v, x) in &row.mvno_revenue {
                    *mean_mvno.entry(*v).or_insert(0.0) += x / n;
                }
            }
            aggregates.push(CompareAggregate {
                profile: profile.label().into(),
                algorithm,
                seeds: cell.len() as u32,
                mean_mno_revenue: cell.iter().map(|r| r.mno_revenue).sum::<f64>() / n,
                mean_mno_cost: cell.iter().map(|r| r.mno_cost).sum::<f64>() / n,
                mean_mno_profit: cell.iter().map(|r| r.mno_profit).sum::<f64>() / n,
                mean_mvno_revenue_total: cell.iter().map(|r| r.mvno_revenue_total).sum::<f64>()
                    / n,
                mean_mvno_revenue: mean_mvno,
                mean_accepted_bid_sum: cell.iter().map(|r| r.accepted_bid_sum).sum::<f64>() / n,
            });
        }
    }

    let mut deltas = Vec::new();
    for &profile in profiles {
        let Some(h) = aggregates
            .iter()
            .find(|a| a.profile == profile.label() && a.algorithm == Algorithm::Heuristic)
        else {
            continue;
        };
        for &algorithm in algorithms {
            if algorithm == Algorithm::Heuristic {
                continue;
            }
            let Some(b) = aggregates
                .iter()
                .find(|a| a.profile == profile.label() && a.algorithm == algorithm)
            else {
                continue;
            };
            deltas.push(BaselineDelta {
                profile: profile.label().into(),
                baseline: algorithm,
                mno_revenue_delta_pct: delta_pct(h.mean_mno_revenue, b.mean_mno_revenue),
                mno_cost_delta_pct: delta_pct(h.mean_mno_cost, b.mean_mno_cost),
                mvno_revenue_delta_pct: delta_pct(
                    h.mean_mvno_revenue_total,
                    b.mean_mvno_revenue_total,
                ),
                accepted_bid_sum_delta_pct: delta_pct(
                    h.mean_accepted_bid_sum,
                    b.mean_accepted_bid_sum,
                ),
            });
        }
    }

    Ok(CompareReport {
        rows,
        aggregates,
        deltas,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compare_is_deterministic_across_thread_schedules() {
        let config = Config::default();
        let seeds = [1, 2];
        let a = run_compare(
            &config,
            &[ResaleProfile::R1],
            &[Algorithm::Heuristic, Algorithm::Baseline2],
            &seeds,
            Some(false),
        )
        .unwrap();
        let b = run_compare(
            &config,
            &[ResaleProfile::R1],
            &[Algorithm::Heuristic, Algorithm::Baseline2],
            &seeds,
            Some(false),
        )
        .unwrap();
        assert_eq!(a, b);
        assert_eq!(a.rows.len(), 4);
        assert_eq!(a.aggregates.len(), 2);
        assert_eq!(a.deltas.len(), 1);
    }

    #[test]
    fn delta_pct_matches_the_reporting_convention() {
        assert_eq!(delta_pct(200.0, 150.0), 25.0);
        assert_eq!(delta_pct(0.0, 10.0), 0.0);
    }
}
