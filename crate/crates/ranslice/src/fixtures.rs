//! A built-in miniature market used as an executable walkthrough of the
//! pair-bid mechanism and the base-price floor: two MVNOs with one 1 Gbps
//! slice each, three users bidding 100, 200 and 300, flat counter-bids of
//! 115 and 135, and a base access price of 135.

use crate::lower::{
    counter_bid_table, run_lower_greedy, CounterBid, CounterBidTable, LowerAllocation,
};
use crate::model::{
    CounterBidPolicy, MvnoId, MvnoProfile, NodeId, Request, RequestId, ServiceCatalog,
    ServiceTypeId, Slice, SliceId, SliceOwner,
};
use crate::pricing::{price_lower_winners, Charge};

/// Base access price of the walkthrough market.
pub const WALKTHROUGH_BASE_PRICE: f64 = 135.0;

/// The walkthrough market: requests, slices, MVNO profiles, and quotes.
pub struct WalkthroughMarket {
    pub services: ServiceCatalog,
    pub requests: Vec<Request>,
    pub slices: Vec<Slice>,
    pub mvnos: Vec<MvnoProfile>,
    pub counter_bids: CounterBidTable,
    pub base_price: f64,
}

/// Cleared walkthrough: the matching plus the final user charges.
pub struct WalkthroughOutcome {
    pub market: WalkthroughMarket,
    pub allocation: LowerAllocation,
    pub charges: Vec<Charge<RequestId>>,
}

/// Builds the walkthrough market.
pub fn walkthrough_market() -> WalkthroughMarket {
    let services = ServiceCatalog::default_classes();
    let ty = ServiceTypeId(0);
    let node = NodeId(0);

    let requests: Vec<Request> = [(1u64, 100.0), (2, 200.0), (3, 300.0)]
        .into_iter()
        .map(|(id, bid)| Request::new(RequestId(id), node, ty, 1.0, bid, 0, 0).unwrap())
        .collect();

    let mvnos = vec![
        MvnoProfile::new(
            MvnoId(1),
            "mvno1",
            0.10,
            10.0,
            CounterBidPolicy::Flat { price: 115.0 },
        )
        .unwrap(),
        MvnoProfile::new(
            MvnoId(2),
            "mvno2",
            0.10,
            10.0,
            CounterBidPolicy::Flat { price: 135.0 },
        )
        .unwrap(),
    ];

    let slices = vec![
        Slice::new(
            SliceId(1),
            node,
            ty,
            1.0,
            SliceOwner::Mvno(MvnoId(1)),
            WALKTHROUGH_BASE_PRICE,
        )
        .unwrap(),
        Slice::new(
            SliceId(2),
            node,
            ty,
            1.0,
            SliceOwner::Mvno(MvnoId(2)),
            WALKTHROUGH_BASE_PRICE,
        )
        .unwrap(),
    ];

    let quotes: Vec<CounterBid> = requests
        .iter()
        .flat_map(|r| {
            [
                CounterBid {
                    mvno: MvnoId(1),
                    request: r.id,
                    timeslot: 0,
                    price: 115.0,
                },
                CounterBid {
                    mvno: MvnoId(2),
                    request: r.id,
                    timeslot: 0,
                    price: 135.0,
                },
            ]
        })
        .collect();

    WalkthroughMarket {
        services,
        requests,
        slices,
        mvnos,
        counter_bids: counter_bid_table(&quotes),
        base_price: WALKTHROUGH_BASE_PRICE,
    }
}

/// Clears the walkthrough market with the greedy pair-bid mechanism and
/// prices the winners.
pub fn run_walkthrough() -> WalkthroughOutcome {
    let market = walkthrough_market();
    let allocation = run_lower_greedy(&market.requests, &market.slices, &market.counter_bids, 0);
    let charges = price_lower_winners(
        &allocation,
        &market.requests,
        &market.slices,
        &market.counter_bids,
        &Default::default(),
        &market.mvnos,
        |_| market.base_price,
    );
    WalkthroughOutcome {
        market,
        allocation,
        charges,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lower::validate_lower;
    use crate::oracle::{solve_lower_exact, OracleLimits};

    #[test]
    fn walkthrough_matches_the_narrative() {
        let out = run_walkthrough();
        // User 3 takes the cheaper MVNO 1, user 2 falls to MVNO 2, user 1
        // is left out; surplus is (300-115) + (200-135) = 250.
        let a3 = out.allocation.assignment(RequestId(3)).unwrap();
        assert_eq!(a3.mvno, MvnoId(1));
        let a2 = out.allocation.assignment(RequestId(2)).unwrap();
        assert_eq!(a2.mvno, MvnoId(2));
        assert!(!out.allocation.is_accepted(RequestId(1)));
        assert_eq!(out.allocation.surplus, 250.0);

        // Both externality prices sit below the floor, so both winners pay
        // the 135 base access price.
        assert_eq!(out.charges.len(), 2);
        for charge in &out.charges {
            assert_eq!(charge.q_final, 135.0);
            assert!(charge.q_vcg <= 135.0);
        }
    }

    #[test]
    fn walkthrough_is_feasible_and_optimal() {
        let out = run_walkthrough();
        assert!(validate_lower(
            &out.allocation,
            &out.market.requests,
            &out.market.slices,
            &out.market.mvnos,
        ));
        let exact = solve_lower_exact(
            &out.market.requests,
            &out.market.slices,
            &out.market.counter_bids,
            0,
            &OracleLimits::default(),
        )
        .unwrap();
        assert_eq!(exact.surplus, out.allocation.surplus);
    }
}
