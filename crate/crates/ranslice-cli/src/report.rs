//! CSV rendering of run and comparison results. All numbers render with
//! six significant digits, and files are byte-identical across repeated
//! runs of the same configuration and seed.

use std::fmt::Write as _;

use ranslice::experiments::CompareReport;
use ranslice::model::MvnoId;
use ranslice::sim::{Algorithm, Scenario, SimMetrics};
use sha2::{Digest, Sha256};

/// Formats a float with six significant digits, fixed-point.
pub fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exponent = x.abs().log10().floor() as i32;
    let decimals = 5 - exponent;
    if decimals >= 0 {
        format!("{:.*}", decimals.min(17) as usize, x)
    } else {
        let scale = 10f64.powi(-decimals);
        format!("{:.0}", (x / scale).round() * scale)
    }
}

/// One finished run, ready to persist.
pub struct RunReport {
    pub digest: String,
    pub seed: u64,
    pub profile: String,
    pub algorithm: Algorithm,
    pub dynamic: bool,
    pub timeslots: u32,
    pub mvno_ids: Vec<MvnoId>,
    pub metrics: SimMetrics,
}

impl RunReport {
    pub fn new(scenario: &Scenario, config_toml: &str, metrics: SimMetrics) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(config_toml.as_bytes());
        hasher.update(scenario.seed.to_le_bytes());
        hasher.update(scenario.horizon.to_le_bytes());
        hasher.update(scenario.algorithm.label().as_bytes());
        hasher.update([scenario.dynamic as u8]);
        hasher.update(scenario.resale_label.as_bytes());
        let digest = hex(&hasher.finalize());
        Self {
            digest,
            seed: scenario.seed,
            profile: scenario.resale_label.clone(),
            algorithm: scenario.algorithm,
            dynamic: scenario.dynamic,
            timeslots: scenario.horizon,
            mvno_ids: scenario.mvnos.iter().map(|m| m.id).collect(),
            metrics,
        }
    }

    /// Per-slot quantities, one row per timeslot.
    pub fn per_slot_csv(&self) -> String {
        let mut out = String::from(
            "t,mno_revenue,mno_cost,mno_profit,accepted_requests,accepted_bid_sum,power_w,\
             lower_charges,upper_charges,pending_requests",
        );
        for v in &self.mvno_ids {
            write!(out, ",mvno_revenue_{}", v.0).unwrap();
        }
        out.push('\n');
        for slot in &self.metrics.per_slot {
            write!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                slot.t,
                sig6(slot.mno_revenue),
                sig6(slot.mno_cost),
                sig6(slot.mno_profit),
                slot.accepted_requests,
                sig6(slot.accepted_bid_sum),
                sig6(slot.power_w),
                sig6(slot.lower_charges),
                sig6(slot.upper_charges),
                slot.pending_requests,
            )
            .unwrap();
            for v in &self.mvno_ids {
                write!(out, ",{}", sig6(slot.mvno_revenue[v])).unwrap();
            }
            out.push('\n');
        }
        out
    }

    /// One-row run summary.
    pub fn summary_csv(&self) -> String {
        let mut out = String::from(
            "digest,seed,profile,algorithm,dynamic,timeslots,total_requests,accepted_requests,\
             acceptance_ratio,mno_revenue,mno_cost,mno_profit,accepted_bid_sum,lower_charges,\
             upper_charges",
        );
        for v in &self.mvno_ids {
            write!(out, ",mvno_revenue_{}", v.0).unwrap();
        }
        out.push('\n');
        let m = &self.metrics;
        write!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.digest,
            self.seed,
            self.profile,
            self.algorithm.label(),
            self.dynamic,
            self.timeslots,
            m.total_requests,
            m.accepted_requests,
            sig6(m.acceptance_ratio),
            sig6(m.mno_revenue),
            sig6(m.mno_cost),
            sig6(m.mno_profit),
            sig6(m.accepted_bid_sum),
            sig6(m.lower_charges),
            sig6(m.upper_charges),
        )
        .unwrap();
        for v in &self.mvno_ids {
            write!(out, ",{}", sig6(m.mvno_revenue[v])).unwrap();
        }
        out.push('\n');
        out
    }
}

/// Comparison results: one `seed` row per run, one `mean` row per
/// (profile, algorithm), one `delta_pct` row per (profile, baseline) with
/// gaps as percentages of the heuristic mean.
pub fn compare_csv(report: &CompareReport) -> String {
    let mut out = String::from(
        "kind,profile,algorithm,seed,mno_revenue,mno_cost,mno_profit,mvno_revenue_total,\
         accepted_bid_sum,accepted_requests,mno_revenue_delta_pct,mno_cost_delta_pct,\
         mvno_revenue_delta_pct,accepted_bid_sum_delta_pct\n",
    );
    for r in &report.rows {
        writeln!(
            out,
            "seed,{},{},{},{},{},{},{},{},{},,,,",
            r.profile,
            r.algorithm.label(),
            r.seed,
            sig6(r.mno_revenue),
            sig6(r.mno_cost),
            sig6(r.mno_profit),
            sig6(r.mvno_revenue_total),
            sig6(r.accepted_bid_sum),
            r.accepted_requests,
        )
        .unwrap();
    }
    for a in &report.aggregates {
        writeln!(
            out,
            "mean,{},{},,{},{},{},{},{},,,,,",
            a.profile,
            a.algorithm.label(),
            sig6(a.mean_mno_revenue),
            sig6(a.mean_mno_cost),
            sig6(a.mean_mno_profit),
            sig6(a.mean_mvno_revenue_total),
            sig6(a.mean_accepted_bid_sum),
        )
        .unwrap();
    }
    for d in &report.deltas {
        writeln!(
            out,
            "delta_pct,{},{},,,,,,,,{},{},{},{}",
            d.profile,
            d.baseline.label(),
            sig6(d.mno_revenue_delta_pct),
            sig6(d.mno_cost_delta_pct),
            sig6(d.mvno_revenue_delta_pct),
            sig6(d.accepted_bid_sum_delta_pct),
        )
        .unwrap();
    }
    out
}

fn hex(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        write!(s, "{b:02x}").unwrap();
    }
    s
}
