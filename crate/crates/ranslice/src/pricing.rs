//! Winner charging: externality prices computed by re-clearing without the
//! winner, floored by a per-service base access price.
//!
//! The price a winner pays is the value the other bidders lose because the
//! winner is present: the sum of the others' realized bid values when the
//! winner is removed, minus the same sum when the winner participates. The
//! re-clearing uses whichever solver cleared the round in the first place
//! (greedy in production, exact in oracle tests), and the final charge is
//! `max(base_price, externality)`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lower::{run_lower_greedy_full, CarriedLoad, CounterBidTable, LowerAllocation};
use crate::model::{MvnoId, MvnoProfile, Request, RequestId, Slice};
use crate::net::{NetworkGraph, PlacementEngine};
use crate::upper::{run_upper_greedy_with_base, BidId, NbWeights, UpperBid, UpperOutcome};

#[derive(Debug, Error, PartialEq)]
pub enum PricingError {
    #[error("bidder is not a winner of this round")]
    WinnerNotAccepted,
}

/// Final charge of one winner: the externality price, the floor, and their
/// maximum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Charge<B> {
    pub bidder: B,
    pub q_vcg: f64,
    pub q_base: f64,
    pub q_final: f64,
}

impl<B> Charge<B> {
    pub fn new(bidder: B, q_vcg: f64, q_base: f64) -> Self {
        Self {
            bidder,
            q_vcg,
            q_base,
            q_final: final_charge(q_vcg, q_base),
        }
    }
}

/// `max(q_base, q_vcg)`: the externality price, never below the floor.
pub fn final_charge(q_vcg: f64, q_base: f64) -> f64 {
    q_vcg.max(q_base)
}

/// Externality price of `winner` under a clearing function.
///
/// `clear(None)` must return each accepted bidder's realized value in the
/// full round; `clear(Some(w))` the same with `w` removed from the market.
/// Negative differences (possible under the greedy's tie-breaks) clamp to
/// zero.
pub fn vcg_price<B, F>(winner: B, clear: F) -> Result<f64, PricingError>
where
    B: Ord + Copy + std::fmt::Debug,
    F: Fn(Option<B>) -> BTreeMap<B, f64>,
{
    let with_winner = clear(None);
    if !with_winner.contains_key(&winner) {
        return Err(PricingError::WinnerNotAccepted);
    }
    let without_winner = clear(Some(winner));

    let others_without: f64 = without_winner
        .iter()
        .filter(|(b, _)| **b != winner)
        .map(|(_, v)| v)
        .sum();
    let others_with: f64 = with_winner
        .iter()
        .filter(|(b, _)| **b != winner)
        .map(|(_, v)| v)
        .sum();

    let price = others_without - others_with;
    if price < 0.0 {
        log::debug!(
            "negative externality {price} for winner {winner:?} clamped to 0"
        );
        return Ok(0.0);
    }
    Ok(price)
}

/// Realized-value map of a lower-level allocation: accepted request id to
/// its bid.
pub fn lower_value_map(alloc: &LowerAllocation) -> BTreeMap<RequestId, f64> {
    alloc
        .assignments
        .iter()
        .map(|a| (a.request, a.bid))
        .collect()
}

/// Realized-value map of an upper-level outcome: accepted bid id to its
/// value.
pub fn upper_value_map(outcome: &UpperOutcome) -> BTreeMap<BidId, f64> {
    outcome.accepted.iter().map(|b| (b.id, b.value)).collect()
}

/// Prices every winner of a greedy lower-level round. `base_price_of`
/// supplies the floor per request (typically the per-service base price).
#[allow(clippy::too_many_arguments)]
pub fn price_lower_winners(
    alloc: &LowerAllocation,
    requests: &[Request],
    slices: &[Slice],
    counter_bids: &CounterBidTable,
    carried: &CarriedLoad,
    mvnos: &[MvnoProfile],
    base_price_of: impl Fn(&Request) -> f64,
) -> Vec<Charge<RequestId>> {
    let bounds: BTreeMap<MvnoId, f64> = crate::lower::mvno_bounds(mvnos);
    let clear = |excluded: Option<RequestId>| {
        let kept: Vec<Request> = requests
            .iter()
            .filter(|r| Some(r.id) != excluded)
            .cloned()
            .collect();
        let out =
            run_lower_greedy_full(&kept, slices, counter_bids, alloc.timeslot, carried, &bounds);
        lower_value_map(&out)
    };

    let mut charges = Vec::new();
    for a in &alloc.assignments {
        let request = requests
            .iter()
            .find(|r| r.id == a.request)
            .expect("accepted request exists in the market");
        let q_vcg = vcg_price(a.request, clear).expect("assignment is a winner");
        charges.push(Charge::new(a.request, q_vcg, base_price_of(request)));
    }
    charges
}

/// Prices every winner of a greedy upper-level round.
#[allow(clippy::too_many_arguments)]
pub fn price_upper_winners(
    outcome: &UpperOutcome,
    graph: &NetworkGraph,
    base: &PlacementEngine,
    bids: &[UpperBid],
    weights: &NbWeights,
    ec_per_kwh: f64,
    slot_duration_h: f64,
    base_price_of: impl Fn(&UpperBid) -> f64,
) -> Vec<Charge<BidId>> {
    let clear = |excluded: Option<BidId>| {
        let kept: Vec<UpperBid> = bids
            .iter()
            .filter(|b| Some(b.id) != excluded)
            .cloned()
            .collect();
        let out = run_upper_greedy_with_base(
            graph,
            base,
            &kept,
            weights,
            ec_per_kwh,
            slot_duration_h,
        );
        upper_value_map(&out)
    };

    let mut charges = Vec::new();
    for won in &outcome.accepted {
        let q_vcg = vcg_price(won.id, clear).expect("bid is a winner");
        charges.push(Charge::new(won.id, q_vcg, base_price_of(won)));
    }
    charges
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lower::run_lower_greedy;
    use crate::model::{NodeId, ServiceTypeId, SliceId, SliceOwner};

    fn request(id: u64, bid: f64) -> Request {
        Request::new(RequestId(id), NodeId(0), ServiceTypeId(0), 1.0, bid, 0, 0).unwrap()
    }

    fn slice(id: u64, cap: f64) -> Slice {
        Slice::new(
            SliceId(id),
            NodeId(0),
            ServiceTypeId(0),
            cap,
            SliceOwner::Mvno(MvnoId(1)),
            0.0,
        )
        .unwrap()
    }

    fn zero_quotes(requests: &[Request]) -> CounterBidTable {
        requests
            .iter()
            .map(|r| ((MvnoId(1), r.id), 0.0))
            .collect()
    }

    #[test]
    fn final_charge_is_the_max() {
        assert_eq!(final_charge(0.0, 135.0), 135.0);
        assert_eq!(final_charge(200.0, 135.0), 200.0);
        assert_eq!(final_charge(135.0, 135.0), 135.0);
    }

    #[test]
    fn lone_bidder_pays_no_externality() {
        let requests = vec![request(1, 100.0)];
        let slices = vec![slice(1, 10.0)];
        let quotes = zero_quotes(&requests);
        let clear = |excluded: Option<RequestId>| {
            let kept: Vec<Request> = requests
                .iter()
                .filter(|r| Some(r.id) != excluded)
                .cloned()
                .collect();
            lower_value_map(&run_lower_greedy(&kept, &slices, &quotes, 0))
        };
        assert_eq!(vcg_price(RequestId(1), clear).unwrap(), 0.0);
    }

    #[test]
    fn losing_bidder_cannot_be_priced() {
        let requests = vec![request(1, 100.0), request(2, 60.0)];
        let slices = vec![slice(1, 1.0)];
        let quotes = zero_quotes(&requests);
        let clear = |excluded: Option<RequestId>| {
            let kept: Vec<Request> = requests
                .iter()
                .filter(|r| Some(r.id) != excluded)
                .cloned()
                .collect();
            lower_value_map(&run_lower_greedy(&kept, &slices, &quotes, 0))
        };
        assert_eq!(
            vcg_price(RequestId(2), clear),
            Err(PricingError::WinnerNotAccepted)
        );
    }

    #[test]
    fn displaced_bid_sets_the_price() {
        // One unit of capacity, bids 300 and 200: the winner pays 200.
        let requests = vec![request(1, 300.0), request(2, 200.0)];
        let slices = vec![slice(1, 1.0)];
        let quotes = zero_quotes(&requests);
        let clear = |excluded: Option<RequestId>| {
            let kept: Vec<Request> = requests
                .iter()
                .filter(|r| Some(r.id) != excluded)
                .cloned()
                .collect();
            lower_value_map(&run_lower_greedy(&kept, &slices, &quotes, 0))
        };
        assert_eq!(vcg_price(RequestId(1), clear).unwrap(), 200.0);
    }

    #[test]
    fn plentiful_capacity_prices_at_the_floor() {
        // Nobody displaces anybody: every externality price is zero and
        // every final charge is the base access price.
        let requests: Vec<Request> = (0..5).map(|i| request(i, 50.0 + i as f64)).collect();
        let slices = vec![slice(1, 1000.0)];
        let quotes = zero_quotes(&requests);
        let mvnos = vec![MvnoProfile::new(
            MvnoId(1),
            "v",
            0.1,
            10_000.0,
            crate::model::CounterBidPolicy::Flat { price: 0.0 },
        )
        .unwrap()];
        let alloc = run_lower_greedy(&requests, &slices, &quotes, 0);
        assert_eq!(alloc.assignments.len(), 5);
        let charges = price_lower_winners(
            &alloc,
            &requests,
            &slices,
            &quotes,
            &CarriedLoad::default(),
            &mvnos,
            |_| 7.0,
        );
        for c in charges {
            assert_eq!(c.q_vcg, 0.0);
            assert_eq!(c.q_final, 7.0);
        }
    }

    #[test]
    fn charges_respect_the_floor() {
        let requests = vec![request(1, 300.0)];
        let slices = vec![slice(1, 10.0)];
        let quotes = zero_quotes(&requests);
        let mvnos = vec![MvnoProfile::new(
            MvnoId(1),
            "v",
            0.1,
            100.0,
            crate::model::CounterBidPolicy::Flat { price: 0.0 },
        )
        .unwrap()];
        let alloc = run_lower_greedy(&requests, &slices, &quotes, 0);
        let charges = price_lower_winners(
            &alloc,
            &requests,
            &slices,
            &quotes,
            &CarriedLoad::default(),
            &mvnos,
            |_| 135.0,
        );
        assert_eq!(charges.len(), 1);
        assert_eq!(charges[0].q_vcg, 0.0);
        assert_eq!(charges[0].q_final, 135.0);
    }
}
