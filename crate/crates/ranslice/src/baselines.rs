//! The two comparison policies for the lower level: a prior hierarchical
//! scheme with single-minded users and sorted admission (B1), and plain
//! unsorted first-fit admission (B2). Both pin every user to one MVNO up
//! front and score themselves by the sum of accepted user bids.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::lower::{
    owner_mvno, user_rank_metric, CarriedLoad, LowerAllocation, LowerAssignment, CAP_EPS,
};
use crate::model::{compatible, MvnoId, Request, RequestId, Slice, SliceId};

/// Which comparison policy to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BaselineKind {
    B1,
    B2,
}

impl BaselineKind {
    pub fn label(&self) -> &'static str {
        match self {
            BaselineKind::B1 => "baseline1",
            BaselineKind::B2 => "baseline2",
        }
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// Pins every request to one MVNO, uniformly by a seeded hash of the
/// request id. The pinning is part of the instance, not of the policy:
/// both baselines receive it as input.
pub fn pin_requests(
    seed: u64,
    requests: &[Request],
    mvnos: &[MvnoId],
) -> BTreeMap<RequestId, MvnoId> {
    assert!(!mvnos.is_empty(), "pinning needs at least one MVNO");
    requests
        .iter()
        .map(|r| {
            let h = splitmix64(seed ^ splitmix64(r.id.0));
            (r.id, mvnos[(h % mvnos.len() as u64) as usize])
        })
        .collect()
}

/// Shared first-fit admission: each MVNO serves only its pinned requests,
/// in the order given, packing each into its own smallest fitting slice.
fn admit_pinned(
    ordered_requests: &[&Request],
    slices: &[Slice],
    pinning: &BTreeMap<RequestId, MvnoId>,
    t: u32,
    carried: &CarriedLoad,
    bounds: &BTreeMap<MvnoId, f64>,
) -> LowerAllocation {
    let mut occupancy: BTreeMap<SliceId, f64> = BTreeMap::new();
    let mut mvno_load: BTreeMap<MvnoId, f64> = BTreeMap::new();
    for s in slices {
        occupancy.insert(s.id, carried.slice(s.id));
        if let Some(v) = owner_mvno(s) {
            mvno_load.entry(v).or_insert_with(|| carried.mvno(v));
        }
    }

    let mut by_owner: BTreeMap<MvnoId, Vec<&Slice>> = BTreeMap::new();
    for s in slices {
        if let Some(v) = owner_mvno(s) {
            by_owner.entry(v).or_default().push(s);
        }
    }
    for owned in by_owner.values_mut() {
        owned.sort_by(|a, b| {
            a.capacity_gbps
                .total_cmp(&b.capacity_gbps)
                .then(a.id.cmp(&b.id))
        });
    }

    let mut assignments = Vec::new();
    let mut surplus = 0.0;
    for r in ordered_requests {
        let Some(v) = pinning.get(&r.id) else { continue };
        let Some(owned) = by_owner.get(v) else { continue };
        let bound = bounds.get(v).copied().unwrap_or(f64::INFINITY);
        if mvno_load[v] + r.traffic_gbps > bound + CAP_EPS {
            continue;
        }
        for s in owned {
            if !compatible(r, s) {
                continue;
            }
            if occupancy[&s.id] + r.traffic_gbps > s.capacity_gbps + CAP_EPS {
                continue;
            }
            *occupancy.get_mut(&s.id).unwrap() += r.traffic_gbps;
            *mvno_load.get_mut(v).unwrap() += r.traffic_gbps;
            // No counter-bid side in the baselines; the objective is the
            // accepted-bid sum, which the surplus field then equals.
            surplus += r.bid;
            assignments.push(LowerAssignment {
                request: r.id,
                mvno: *v,
                slice: s.id,
                timeslot: t,
                traffic_gbps: r.traffic_gbps,
                bid: r.bid,
                counter_bid: 0.0,
            });
            break;
        }
    }

    LowerAllocation {
        timeslot: t,
        assignments,
        occupancy_gbps: occupancy,
        carried: carried.clone(),
        charges: BTreeMap::new(),
        surplus,
    }
}

/// Prior hierarchical policy: per-MVNO admission of pinned requests in
/// rank order, first fit into that MVNO's slices only.
pub fn run_baseline1(
    requests: &[Request],
    slices: &[Slice],
    pinning: &BTreeMap<RequestId, MvnoId>,
    t: u32,
    carried: &CarriedLoad,
    bounds: &BTreeMap<MvnoId, f64>,
) -> LowerAllocation {
    let mut ordered: Vec<&Request> = requests.iter().collect();
    ordered.sort_by(|a, b| {
        user_rank_metric(b)
            .total_cmp(&user_rank_metric(a))
            .then(a.id.cmp(&b.id))
    });
    admit_pinned(&ordered, slices, pinning, t, carried, bounds)
}

/// Unsorted policy: pinned requests admitted in input order, first fit.
pub fn run_baseline2(
    requests: &[Request],
    slices: &[Slice],
    pinning: &BTreeMap<RequestId, MvnoId>,
    t: u32,
    carried: &CarriedLoad,
    bounds: &BTreeMap<MvnoId, f64>,
) -> LowerAllocation {
    let ordered: Vec<&Request> = requests.iter().collect();
    admit_pinned(&ordered, slices, pinning, t, carried, bounds)
}
