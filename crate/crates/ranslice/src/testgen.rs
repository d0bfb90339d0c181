//! Deterministic random-instance generators for verification: the
//! `oracle-check` command and the acceptance suite sample markets through
//! these, so the distributions live in one place.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::lower::CounterBidTable;
use crate::model::{
    CounterBidPolicy, MvnoId, MvnoProfile, NodeId, Request, RequestId, ServiceTypeId, Slice,
    SliceId, SliceOwner,
};
use crate::net::SliceSpec;
use crate::upper::{BidId, UpperBid, XorGroupId};

/// A self-contained lower-level market instance.
#[derive(Debug, Clone)]
pub struct LowerInstance {
    pub requests: Vec<Request>,
    pub slices: Vec<Slice>,
    pub mvnos: Vec<MvnoProfile>,
    pub counter_bids: CounterBidTable,
    pub bounds: BTreeMap<MvnoId, f64>,
}

/// Samples a lower-level instance with up to `max_requests` requests and
/// `max_slices` slices. With `zero_beta` every quote is 0, which reduces
/// the double market to a one-sided auction.
pub fn random_lower_instance(
    rng: &mut ChaCha8Rng,
    max_requests: usize,
    max_slices: usize,
    zero_beta: bool,
) -> LowerInstance {
    let n_requests = rng.gen_range(1..=max_requests.max(1));
    let n_slices = rng.gen_range(1..=max_slices.max(1));
    let n_mvnos = rng.gen_range(1..=3u16);
    let n_nodes = rng.gen_range(1..=3u16);
    let n_types = rng.gen_range(1..=2u16);

    let mvnos: Vec<MvnoProfile> = (0..n_mvnos)
        .map(|i| {
            let bound = if rng.gen_bool(0.3) {
                rng.gen_range(2.0..20.0)
            } else {
                1e9
            };
            MvnoProfile::new(
                MvnoId(i),
                format!("v{i}"),
                rng.gen_range(0.0..0.4),
                bound,
                CounterBidPolicy::Flat { price: 0.0 },
            )
            .unwrap()
        })
        .collect();
    let bounds: BTreeMap<MvnoId, f64> =
        mvnos.iter().map(|m| (m.id, m.capacity_bound_gbps)).collect();

    let requests: Vec<Request> = (0..n_requests)
        .map(|i| {
            let traffic = rng.gen_range(0.5..4.0);
            let unit_price = rng.gen_range(5.0..30.0);
            Request::new(
                RequestId(i as u64),
                NodeId(rng.gen_range(0..n_nodes)),
                ServiceTypeId(rng.gen_range(0..n_types)),
                traffic,
                unit_price * traffic,
                0,
                0,
            )
            .unwrap()
        })
        .collect();

    let slices: Vec<Slice> = (0..n_slices)
        .map(|i| {
            Slice::new(
                SliceId(i as u64),
                NodeId(rng.gen_range(0..n_nodes)),
                ServiceTypeId(rng.gen_range(0..n_types)),
                rng.gen_range(1.0..8.0),
                SliceOwner::Mvno(MvnoId(rng.gen_range(0..n_mvnos))),
                0.0,
            )
            .unwrap()
        })
        .collect();

    let mut counter_bids = CounterBidTable::new();
    for v in &mvnos {
        for r in &requests {
            // An occasional missing quote exercises the decline path.
            if !zero_beta && rng.gen_bool(0.1) {
                continue;
            }
            let price = if zero_beta {
                0.0
            } else {
                rng.gen_range(0.0..40.0)
            };
            counter_bids.insert((v.id, r.id), price);
        }
    }

    LowerInstance {
        requests,
        slices,
        mvnos,
        counter_bids,
        bounds,
    }
}

/// Upper-level bid set over the default 10-node substrate. Groups are
/// drawn from a small pool so several bids usually share one.
pub fn random_upper_bids(rng: &mut ChaCha8Rng, max_bids: usize, node_count: u16) -> Vec<UpperBid> {
    let n_bids = rng.gen_range(1..=max_bids.max(1));
    let n_groups = (n_bids / 2).max(1) as u64;
    (0..n_bids)
        .map(|i| {
            let bundle_size = rng.gen_range(1..=2);
            let bundle: Vec<SliceSpec> = (0..bundle_size)
                .map(|_| SliceSpec {
                    origin: NodeId(rng.gen_range(0..node_count)),
                    service_type: ServiceTypeId(rng.gen_range(0..2)),
                    traffic_gbps: rng.gen_range(0.5..5.0),
                    latency_budget_ms: if rng.gen_bool(0.5) { 10.0 } else { 2.0 },
                })
                .collect();
            let value = rng.gen_range(1.0..100.0) * bundle_size as f64;
            UpperBid::new(
                BidId(i as u64),
                MvnoId(rng.gen_range(0..3)),
                value,
                bundle,
                XorGroupId(rng.gen_range(0..n_groups)),
            )
            .unwrap()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn instances_are_reproducible() {
        let mut a = ChaCha8Rng::seed_from_u64(5);
        let mut b = ChaCha8Rng::seed_from_u64(5);
        let ia = random_lower_instance(&mut a, 10, 5, false);
        let ib = random_lower_instance(&mut b, 10, 5, false);
        assert_eq!(ia.requests, ib.requests);
        assert_eq!(ia.slices, ib.slices);
        assert_eq!(ia.counter_bids, ib.counter_bids);
    }

    #[test]
    fn zero_beta_instances_quote_everyone() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let inst = random_lower_instance(&mut rng, 8, 4, true);
        assert_eq!(
            inst.counter_bids.len(),
            inst.mvnos.len() * inst.requests.len()
        );
        assert!(inst.counter_bids.values().all(|b| *b == 0.0));
    }
}
