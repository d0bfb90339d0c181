//! The lower-level market: users bid for capacity, MVNOs quote
//! counter-prices, and a greedy pair-bid clearing matches the
//! highest-ranked users to the cheapest compatible offers.
//!
//! Requests and slices are classified by (origin node, service type);
//! within a class, requests are ranked by `bid / sqrt(traffic)` and slices
//! by ascending capacity. A request is matched to the fitting slice whose
//! owner quotes the lowest counter-bid, provided the pair surplus
//! `bid - counter_bid` is nonnegative; a pair that would lower the
//! objective is rejected even when capacity is free. The objective is the
//! total surplus over all matched pairs.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    compatible, CounterBidPolicy, MvnoId, MvnoProfile, NodeId, Request, RequestId, ServiceTypeId,
    Slice, SliceId, SliceOwner,
};

pub(crate) const CAP_EPS: f64 = 1e-9;

/// Errors from counter-bid generation.
#[derive(Debug, Error, PartialEq)]
pub enum LowerError {
    #[error("resale gain of 1 leaves no margin to mark up")]
    FullResaleGain,
}

/// A price quoted by one MVNO to one request at one timeslot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterBid {
    pub mvno: MvnoId,
    pub request: RequestId,
    pub timeslot: u32,
    pub price: f64,
}

/// Lookup table of counter-bids for one clearing round. A missing entry
/// means the MVNO declines to serve that request.
pub type CounterBidTable = BTreeMap<(MvnoId, RequestId), f64>;

/// Collects [`CounterBid`]s into the lookup table used by the clearing.
pub fn counter_bid_table<'a>(bids: impl IntoIterator<Item = &'a CounterBid>) -> CounterBidTable {
    bids.into_iter()
        .map(|b| ((b.mvno, b.request), b.price))
        .collect()
}

/// Per-MVNO aggregate traffic bounds, extracted from profiles.
pub fn mvno_bounds(mvnos: &[MvnoProfile]) -> BTreeMap<MvnoId, f64> {
    mvnos.iter().map(|v| (v.id, v.capacity_bound_gbps)).collect()
}

/// Ranking metric for requests: `bid / sqrt(traffic)`.
///
/// Traffic is strictly positive by [`Request`] construction, so the value
/// is always finite.
pub fn user_rank_metric(request: &Request) -> f64 {
    request.bid / request.traffic_gbps.sqrt()
}

/// Quotes one counter-bid under the MVNO's policy.
///
/// `Flat` quotes the configured price for every request; `CostMarkup`
/// quotes `unit_cost * traffic / (1 - resale_gain)`.
pub fn generate_counter_bid(
    policy: &CounterBidPolicy,
    mvno: &MvnoProfile,
    request: &Request,
    t: u32,
) -> Result<CounterBid, LowerError> {
    let price = match policy {
        CounterBidPolicy::Flat { price } => *price,
        CounterBidPolicy::CostMarkup { unit_cost } => {
            let margin = 1.0 - mvno.resale_gain;
            if margin <= 0.0 {
                return Err(LowerError::FullResaleGain);
            }
            unit_cost * request.traffic_gbps / margin
        }
    };
    Ok(CounterBid {
        mvno: mvno.id,
        request: request.id,
        timeslot: t,
        price,
    })
}

/// Occupancy carried into a clearing from earlier slots: per-slice load and
/// per-MVNO aggregate load.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CarriedLoad {
    pub slice_occupancy_gbps: BTreeMap<SliceId, f64>,
    pub mvno_load_gbps: BTreeMap<MvnoId, f64>,
}

impl CarriedLoad {
    pub fn slice(&self, s: SliceId) -> f64 {
        self.slice_occupancy_gbps.get(&s).copied().unwrap_or(0.0)
    }

    pub fn mvno(&self, v: MvnoId) -> f64 {
        self.mvno_load_gbps.get(&v).copied().unwrap_or(0.0)
    }
}

/// One matched pair in a cleared lower-level round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerAssignment {
    pub request: RequestId,
    pub mvno: MvnoId,
    pub slice: SliceId,
    pub timeslot: u32,
    pub traffic_gbps: f64,
    pub bid: f64,
    pub counter_bid: f64,
}

/// Result of one lower-level clearing round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerAllocation {
    pub timeslot: u32,
    pub assignments: Vec<LowerAssignment>,
    /// Final per-slice occupancy including carried load.
    pub occupancy_gbps: BTreeMap<SliceId, f64>,
    /// The load that was already present before this round.
    pub carried: CarriedLoad,
    /// Final charge per newly admitted request, filled by the pricing step.
    pub charges: BTreeMap<RequestId, f64>,
    /// Total surplus of the matched pairs.
    pub surplus: f64,
}

impl LowerAllocation {
    pub fn is_accepted(&self, k: RequestId) -> bool {
        self.assignments.iter().any(|a| a.request == k)
    }

    pub fn assignment(&self, k: RequestId) -> Option<&LowerAssignment> {
        self.assignments.iter().find(|a| a.request == k)
    }

    /// Sum of accepted user bids, the cross-algorithm evaluation metric.
    pub fn accepted_bid_sum(&self) -> f64 {
        self.assignments.iter().map(|a| a.bid).sum()
    }

    /// Accepted bid sum restricted to one serving MVNO.
    pub fn accepted_bid_sum_for(&self, v: MvnoId) -> f64 {
        self.assignments
            .iter()
            .filter(|a| a.mvno == v)
            .map(|a| a.bid)
            .sum()
    }
}

pub(crate) fn owner_mvno(slice: &Slice) -> Option<MvnoId> {
    match slice.owner {
        SliceOwner::Mvno(v) => Some(v),
        SliceOwner::Mno => None,
    }
}

/// One market class: the requests and slices sharing an (origin node,
/// service type) pair.
pub(crate) type MarketClasses<'a> =
    BTreeMap<(NodeId, ServiceTypeId), (Vec<&'a Request>, Vec<&'a Slice>)>;

/// Classifies requests and MVNO-owned slices by (origin node, service type).
pub(crate) fn classify<'a>(requests: &'a [Request], slices: &'a [Slice]) -> MarketClasses<'a> {
    let mut classes: MarketClasses<'a> = BTreeMap::new();
    for r in requests {
        classes
            .entry((r.origin, r.service_type))
            .or_default()
            .0
            .push(r);
    }
    for s in slices {
        if owner_mvno(s).is_none() {
            continue;
        }
        if let Some(entry) = classes.get_mut(&(s.origin, s.service_type)) {
            entry.1.push(s);
        }
    }
    classes
}

/// Greedy pair-bid clearing over an empty market: no carried load, no
/// per-MVNO bounds.
pub fn run_lower_greedy(
    requests: &[Request],
    slices: &[Slice],
    counter_bids: &CounterBidTable,
    t: u32,
) -> LowerAllocation {
    run_lower_greedy_full(
        requests,
        slices,
        counter_bids,
        t,
        &CarriedLoad::default(),
        &BTreeMap::new(),
    )
}

/// Greedy pair-bid clearing on top of carried occupancy and per-MVNO
/// aggregate bounds (a missing bound means unbounded).
///
/// Only MVNO-owned slices participate. Requests that find no admissible
/// pair are rejected silently; rejection is an outcome, not an error.
pub fn run_lower_greedy_full(
    requests: &[Request],
    slices: &[Slice],
    counter_bids: &CounterBidTable,
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

    let mut assignments = Vec::new();
    let mut surplus = 0.0;
    for (_, (mut reqs, mut class_slices)) in classify(requests, slices) {
        reqs.sort_by(|a, b| {
            user_rank_metric(b)
                .total_cmp(&user_rank_metric(a))
                .then(a.id.cmp(&b.id))
        });
        class_slices.sort_by(|a, b| {
            a.capacity_gbps
                .total_cmp(&b.capacity_gbps)
                .then(a.id.cmp(&b.id))
        });

        for r in reqs {
            // Admissible offers: fits the slice, fits the owner's bound,
            // has a quote, and keeps the pair surplus nonnegative. Among
            // them take the cheapest quote; ties fall back to the scan
            // order (ascending capacity, then slice id).
            let mut chosen: Option<(f64, &Slice, MvnoId)> = None;
            for s in &class_slices {
                let v = owner_mvno(s).unwrap();
                if occupancy[&s.id] + r.traffic_gbps > s.capacity_gbps + CAP_EPS {
                    continue;
                }
                let bound = bounds.get(&v).copied().unwrap_or(f64::INFINITY);
                if mvno_load[&v] + r.traffic_gbps > bound + CAP_EPS {
                    continue;
                }
                let Some(&beta) = counter_bids.get(&(v, r.id)) else {
                    continue;
                };
                if r.bid - beta < 0.0 {
                    continue;
                }
                if chosen.as_ref().is_none_or(|(best, _, _)| beta < *best) {
                    chosen = Some((beta, s, v));
                }
            }
            if let Some((beta, s, v)) = chosen {
                *occupancy.get_mut(&s.id).unwrap() += r.traffic_gbps;
                *mvno_load.get_mut(&v).unwrap() += r.traffic_gbps;
                surplus += r.bid - beta;
                assignments.push(LowerAssignment {
                    request: r.id,
                    mvno: v,
                    slice: s.id,
                    timeslot: t,
                    traffic_gbps: r.traffic_gbps,
                    bid: r.bid,
                    counter_bid: beta,
                });
            }
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

/// Re-checks the four constraint families on a finished allocation:
/// single-slice admission, origin/type compatibility, slice capacity, and
/// per-MVNO aggregate bounds.
pub fn validate_lower(
    alloc: &LowerAllocation,
    requests: &[Request],
    slices: &[Slice],
    mvnos: &[MvnoProfile],
) -> bool {
    let req_by_id: BTreeMap<RequestId, &Request> = requests.iter().map(|r| (r.id, r)).collect();
    let slice_by_id: BTreeMap<SliceId, &Slice> = slices.iter().map(|s| (s.id, s)).collect();

    let mut per_slice: BTreeMap<SliceId, f64> = BTreeMap::new();
    let mut per_mvno: BTreeMap<MvnoId, f64> = BTreeMap::new();
    let mut seen: Vec<RequestId> = Vec::new();

    for a in &alloc.assignments {
        // Each accepted request appears in exactly one record per slot.
        if seen.contains(&a.request) {
            return false;
        }
        seen.push(a.request);

        let (Some(r), Some(s)) = (req_by_id.get(&a.request), slice_by_id.get(&a.slice)) else {
            return false;
        };
        if !compatible(r, s) {
            return false;
        }
        if owner_mvno(s) != Some(a.mvno) {
            return false;
        }
        *per_slice.entry(a.slice).or_insert(0.0) += a.traffic_gbps;
        *per_mvno.entry(a.mvno).or_insert(0.0) += a.traffic_gbps;
    }

    for (sid, new_load) in &per_slice {
        let s = slice_by_id[sid];
        if alloc.carried.slice(*sid) + new_load > s.capacity_gbps + 1e-6 {
            return false;
        }
    }
    for v in mvnos {
        let new_load = per_mvno.get(&v.id).copied().unwrap_or(0.0);
        if alloc.carried.mvno(v.id) + new_load > v.capacity_bound_gbps + 1e-6 {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CounterBidPolicy, ServiceTypeId};

    fn request(id: u64, bid: f64, traffic: f64) -> Request {
        Request::new(RequestId(id), NodeId(0), ServiceTypeId(0), traffic, bid, 0, 9).unwrap()
    }

    fn slice(id: u64, owner: u16, cap: f64) -> Slice {
        Slice::new(
            SliceId(id),
            NodeId(0),
            ServiceTypeId(0),
            cap,
            SliceOwner::Mvno(MvnoId(owner)),
            0.0,
        )
        .unwrap()
    }

    fn flat_table(requests: &[Request], quotes: &[(u16, f64)]) -> CounterBidTable {
        let mut table = CounterBidTable::new();
        for r in requests {
            for (v, price) in quotes {
                table.insert((MvnoId(*v), r.id), *price);
            }
        }
        table
    }

    #[test]
    fn rank_metric_examples() {
        assert_eq!(user_rank_metric(&request(0, 200.0, 4.0)), 100.0);
        assert_eq!(user_rank_metric(&request(0, 0.0, 1.0)), 0.0);
        let narrow = user_rank_metric(&request(0, 300.0, 1.0));
        let wide = user_rank_metric(&request(0, 300.0, 4.0));
        assert!(narrow > wide);
        assert_eq!(wide, 150.0);
    }

    #[test]
    fn counter_bid_modes() {
        let flat = MvnoProfile::new(
            MvnoId(0),
            "a",
            0.1,
            100.0,
            CounterBidPolicy::Flat { price: 115.0 },
        )
        .unwrap();
        let quote =
            generate_counter_bid(&flat.counter_bid_policy, &flat, &request(1, 50.0, 2.0), 0)
                .unwrap();
        assert_eq!(quote.price, 115.0);

        let markup = MvnoProfile::new(
            MvnoId(1),
            "b",
            0.1,
            100.0,
            CounterBidPolicy::CostMarkup { unit_cost: 9.0 },
        )
        .unwrap();
        let quote = generate_counter_bid(
            &markup.counter_bid_policy,
            &markup,
            &request(1, 50.0, 10.0),
            0,
        )
        .unwrap();
        assert_eq!(quote.price, 100.0); // 90 / 0.9

        let free = generate_counter_bid(
            &CounterBidPolicy::CostMarkup { unit_cost: 0.0 },
            &markup,
            &request(1, 50.0, 10.0),
            0,
        )
        .unwrap();
        assert_eq!(free.price, 0.0);

        // A full resale gain leaves no margin to divide by. Profiles built
        // through the constructor cannot reach this, so forge one.
        let forged = MvnoProfile {
            resale_gain: 1.0,
            ..markup.clone()
        };
        assert_eq!(
            generate_counter_bid(&forged.counter_bid_policy, &forged, &request(1, 5.0, 1.0), 0),
            Err(LowerError::FullResaleGain)
        );
    }

    /// The worked two-MVNO example: one 1 Gbps slice each, users bidding
    /// 100/200/300, flat quotes of 115 and 135.
    #[test]
    fn pair_bid_worked_example() {
        let requests = vec![
            request(1, 100.0, 1.0),
            request(2, 200.0, 1.0),
            request(3, 300.0, 1.0),
        ];
        let slices = vec![slice(1, 1, 1.0), slice(2, 2, 1.0)];
        let table = flat_table(&requests, &[(1, 115.0), (2, 135.0)]);

        let alloc = run_lower_greedy(&requests, &slices, &table, 0);

        let a3 = alloc.assignment(RequestId(3)).unwrap();
        assert_eq!(a3.mvno, MvnoId(1));
        let a2 = alloc.assignment(RequestId(2)).unwrap();
        assert_eq!(a2.mvno, MvnoId(2));
        assert!(!alloc.is_accepted(RequestId(1)));
        assert_eq!(alloc.surplus, (300.0 - 115.0) + (200.0 - 135.0));
        assert_eq!(alloc.accepted_bid_sum(), 500.0);
    }

    #[test]
    fn no_supply_means_empty_allocation() {
        let requests = vec![request(1, 100.0, 1.0)];
        let alloc = run_lower_greedy(&requests, &[], &CounterBidTable::new(), 0);
        assert!(alloc.assignments.is_empty());
        assert_eq!(alloc.surplus, 0.0);
    }

    #[test]
    fn negative_margin_pairs_are_rejected() {
        let requests = vec![request(1, 100.0, 1.0)];
        let slices = vec![slice(1, 1, 10.0)];
        let table = flat_table(&requests, &[(1, 120.0)]);
        let alloc = run_lower_greedy(&requests, &slices, &table, 0);
        assert!(alloc.assignments.is_empty());
    }

    #[test]
    fn missing_quote_means_no_offer() {
        let requests = vec![request(1, 100.0, 1.0)];
        let slices = vec![slice(1, 1, 10.0)];
        let alloc = run_lower_greedy(&requests, &slices, &CounterBidTable::new(), 0);
        assert!(alloc.assignments.is_empty());
    }

    #[test]
    fn carried_load_reduces_room() {
        let requests = vec![request(1, 2.0, 2.0)];
        let slices = vec![slice(1, 1, 3.0)];
        let table = flat_table(&requests, &[(1, 0.0)]);
        let mut carried = CarriedLoad::default();
        carried.slice_occupancy_gbps.insert(SliceId(1), 2.0);
        carried.mvno_load_gbps.insert(MvnoId(1), 2.0);
        let alloc =
            run_lower_greedy_full(&requests, &slices, &table, 0, &carried, &BTreeMap::new());
        assert!(alloc.assignments.is_empty());
        assert_eq!(alloc.occupancy_gbps[&SliceId(1)], 2.0);
    }

    #[test]
    fn mvno_bound_is_aggregate_over_slices() {
        // Two slices of the same MVNO, plenty of slice capacity, but the
        // aggregate bound allows only one of the two requests.
        let requests = vec![request(1, 50.0, 3.0), request(2, 40.0, 3.0)];
        let slices = vec![slice(1, 1, 10.0), slice(2, 1, 10.0)];
        let table = flat_table(&requests, &[(1, 0.0)]);
        let bounds: BTreeMap<MvnoId, f64> = [(MvnoId(1), 4.0)].into();
        let alloc = run_lower_greedy_full(
            &requests,
            &slices,
            &table,
            0,
            &CarriedLoad::default(),
            &bounds,
        );
        assert_eq!(alloc.assignments.len(), 1);
        assert_eq!(alloc.assignments[0].request, RequestId(1));
    }

    #[test]
    fn validation_accepts_clean_and_rejects_planted_violation() {
        let requests = vec![
            request(1, 100.0, 1.0),
            request(2, 200.0, 1.0),
            request(3, 300.0, 1.0),
        ];
        let slices = vec![slice(1, 1, 1.0), slice(2, 2, 1.0)];
        let mvnos = vec![
            MvnoProfile::new(MvnoId(1), "a", 0.1, 100.0, CounterBidPolicy::Flat { price: 115.0 })
                .unwrap(),
            MvnoProfile::new(MvnoId(2), "b", 0.1, 100.0, CounterBidPolicy::Flat { price: 135.0 })
                .unwrap(),
        ];
        let table = flat_table(&requests, &[(1, 115.0), (2, 135.0)]);
        let mut alloc = run_lower_greedy(&requests, &slices, &table, 0);
        assert!(validate_lower(&alloc, &requests, &slices, &mvnos));

        // Empty allocation is vacuously valid.
        let empty = run_lower_greedy(&[], &slices, &table, 0);
        assert!(validate_lower(&empty, &requests, &slices, &mvnos));

        // Plant an over-capacity assignment.
        alloc.assignments.push(LowerAssignment {
            request: RequestId(1),
            mvno: MvnoId(1),
            slice: SliceId(1),
            timeslot: 0,
            traffic_gbps: 5.0,
            bid: 100.0,
            counter_bid: 0.0,
        });
        assert!(!validate_lower(&alloc, &requests, &slices, &mvnos));
    }

    #[test]
    fn clearing_is_deterministic() {
        let requests: Vec<Request> = (0..20)
            .map(|i| request(i, 10.0 + (i as f64 * 7.3) % 90.0, 0.5 + (i as f64 * 1.7) % 4.0))
            .collect();
        let slices = vec![slice(1, 1, 5.0), slice(2, 2, 8.0), slice(3, 1, 3.0)];
        let table = flat_table(&requests, &[(1, 12.0), (2, 9.0)]);
        let a = run_lower_greedy(&requests, &slices, &table, 0);
        let b = run_lower_greedy(&requests, &slices, &table, 0);
        assert_eq!(a, b);
    }
}
