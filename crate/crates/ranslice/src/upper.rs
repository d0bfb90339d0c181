//! The upper-level market: MVNOs value slice bundles by the marginal
//! resale revenue they would unlock, submit XOR-grouped bids per capacity
//! variant, and the operator clears them greedily by normalized benefit
//! subject to placement feasibility.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lower::{
    run_lower_greedy_full, CarriedLoad, CounterBidTable, LowerAllocation,
};
use crate::model::{
    is_active, MvnoId, MvnoProfile, NodeId, Request, ServiceCatalog, ServiceTypeId, Slice,
    SliceId, SliceOwner,
};
use crate::net::{compute_energy_cost, NetworkGraph, Placement, PlacementEngine, SliceSpec};

/// Identifier of an upper-level bid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BidId(pub u64);

/// XOR exclusivity group. At most one bid per group can win a clearing
/// round. Groups are shared across bidders: every bid targeting the same
/// (origin node, service type) slot competes in one group, so the operator
/// sells that slice once per round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct XorGroupId(pub u64);

/// Deterministic group id for the slice sold at `(node, service_type)`.
pub fn xor_group_for(node: NodeId, service_type: ServiceTypeId) -> XorGroupId {
    XorGroupId(((node.0 as u64) << 16) | service_type.0 as u64)
}

#[derive(Debug, Error, PartialEq)]
pub enum UpperError {
    #[error("bid bundle must contain at least one slice")]
    EmptyBundle,
    #[error("bid value must be nonnegative, got {0}")]
    NegativeValue(f64),
    #[error("bundle traffic and latency must be positive")]
    BadBundleEntry,
    #[error("normalized-benefit weights must be nonnegative and not both zero")]
    BadWeights,
    #[error("normalized-benefit radicand is not positive")]
    ZeroRadicand,
}

/// One MVNO bundle bid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpperBid {
    pub id: BidId,
    pub mvno: MvnoId,
    pub value: f64,
    pub bundle: Vec<SliceSpec>,
    pub xor_group: XorGroupId,
}

impl UpperBid {
    pub fn new(
        id: BidId,
        mvno: MvnoId,
        value: f64,
        bundle: Vec<SliceSpec>,
        xor_group: XorGroupId,
    ) -> Result<Self, UpperError> {
        if bundle.is_empty() {
            return Err(UpperError::EmptyBundle);
        }
        if value.is_nan() || value < 0.0 {
            return Err(UpperError::NegativeValue(value));
        }
        if bundle
            .iter()
            .any(|s| s.traffic_gbps <= 0.0 || s.latency_budget_ms <= 0.0)
        {
            return Err(UpperError::BadBundleEntry);
        }
        Ok(Self {
            id,
            mvno,
            value,
            bundle,
            xor_group,
        })
    }

    /// Number of slices requested by this bid.
    pub fn bundle_size(&self) -> usize {
        self.bundle.len()
    }
}

/// Weights of the normalized-benefit ranking, with the reference scales
/// that make both terms dimensionless.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NbWeights {
    pub w1: f64,
    pub w2: f64,
    pub lambda_ref_gbps: f64,
    pub t_ref_ms: f64,
}

impl Default for NbWeights {
    fn default() -> Self {
        Self {
            w1: 1.0,
            w2: 1.0,
            lambda_ref_gbps: 1.0,
            t_ref_ms: 1.0,
        }
    }
}

impl NbWeights {
    pub fn new(w1: f64, w2: f64) -> Result<Self, UpperError> {
        if w1.is_nan() || w2.is_nan() || w1 < 0.0 || w2 < 0.0 || w1 + w2 <= 0.0 {
            return Err(UpperError::BadWeights);
        }
        Ok(Self {
            w1,
            w2,
            ..Self::default()
        })
    }
}

/// Normalized benefit of a bid: value over the square root of a weighted
/// mix of mean bundle traffic and inverse mean latency tolerance.
///
/// Bids asking for less bandwidth or tolerating more delay rank higher at
/// equal value, and raising the value raises the rank linearly.
pub fn normalized_benefit(bid: &UpperBid, weights: &NbWeights) -> Result<f64, UpperError> {
    let r = bid.bundle.len() as f64;
    if bid.bundle.is_empty() {
        return Err(UpperError::EmptyBundle);
    }
    let mean_lambda =
        bid.bundle.iter().map(|s| s.traffic_gbps).sum::<f64>() / r / weights.lambda_ref_gbps;
    let mean_latency =
        bid.bundle.iter().map(|s| s.latency_budget_ms).sum::<f64>() / r / weights.t_ref_ms;
    let radicand = weights.w1 * mean_lambda + weights.w2 / mean_latency;
    if radicand.is_nan() || radicand <= 0.0 {
        return Err(UpperError::ZeroRadicand);
    }
    Ok(bid.value / radicand.sqrt())
}

/// Revenue (sum of accepted user bids) an MVNO would earn serving `demand`
/// alone with the given slices, under its own quotes and bound.
fn solo_revenue(
    mvno: &MvnoProfile,
    demand: &[Request],
    slices: &[Slice],
    counter_bids: &CounterBidTable,
    carried: &CarriedLoad,
    t: u32,
) -> f64 {
    let bounds = [(mvno.id, mvno.capacity_bound_gbps)].into();
    let alloc: LowerAllocation =
        run_lower_greedy_full(demand, slices, counter_bids, t, carried, &bounds);
    alloc.accepted_bid_sum()
}

/// Marginal value of acquiring `candidate` on top of `held`: the revenue
/// delta between serving the demand snapshot with and without the
/// candidate slices, scaled by the retained margin `1 - resale_gain` and
/// floored at zero.
pub fn mvno_bid_value(
    mvno: &MvnoProfile,
    demand: &[Request],
    held: &[Slice],
    candidate: &[Slice],
    counter_bids: &CounterBidTable,
    carried: &CarriedLoad,
    t: u32,
) -> f64 {
    let r2 = solo_revenue(mvno, demand, held, counter_bids, carried, t);
    let mut with_candidate: Vec<Slice> = held.to_vec();
    with_candidate.extend(candidate.iter().cloned());
    let r1 = solo_revenue(mvno, demand, &with_candidate, counter_bids, carried, t);
    ((r1 - r2) * (1.0 - mvno.resale_gain)).max(0.0)
}

/// Scratch id for valuation-only candidate slices; never minted.
pub(crate) const CANDIDATE_SLICE_ID: SliceId = SliceId(u64::MAX);

/// Generates one bidder's XOR bid set from an arbitrary revenue model.
///
/// `revenue_of(slices)` must return the revenue the bidder would realize
/// serving its demand with exactly `slices`; the bid value for a candidate
/// is the revenue delta over `held`, scaled by the retained margin. This
/// is the shared skeleton for the pair-bid bidder and the baselines, which
/// differ only in the revenue model.
#[allow(clippy::too_many_arguments)]
pub fn generate_xor_bids_with<F>(
    mvno: &MvnoProfile,
    demand: &[Request],
    held: &[Slice],
    variants_gbps: &[f64],
    services: &ServiceCatalog,
    next_bid_id: &mut u64,
    mut revenue_of: F,
) -> Vec<UpperBid>
where
    F: FnMut(&[Slice]) -> f64,
{
    let pairs: BTreeSet<(NodeId, ServiceTypeId)> =
        demand.iter().map(|r| (r.origin, r.service_type)).collect();
    let r2 = revenue_of(held);

    let mut bids = Vec::new();
    for (node, service_type) in pairs {
        let Some(latency) = services.latency_budget_ms(service_type) else {
            continue;
        };
        for &capacity in variants_gbps {
            let candidate = Slice::new(
                CANDIDATE_SLICE_ID,
                node,
                service_type,
                capacity,
                SliceOwner::Mvno(mvno.id),
                0.0,
            )
            .expect("variant capacities are validated by config");
            let mut with_candidate: Vec<Slice> = held.to_vec();
            with_candidate.push(candidate);
            let r1 = revenue_of(&with_candidate);
            let value = ((r1 - r2) * (1.0 - mvno.resale_gain)).max(0.0);
            if value <= 0.0 {
                continue;
            }
            let bid = UpperBid::new(
                BidId(*next_bid_id),
                mvno.id,
                value,
                vec![SliceSpec {
                    origin: node,
                    service_type,
                    traffic_gbps: capacity,
                    latency_budget_ms: latency,
                }],
                xor_group_for(node, service_type),
            )
            .expect("generated bids are well-formed");
            *next_bid_id += 1;
            bids.push(bid);
        }
    }
    bids
}

/// Generates one MVNO's XOR bid set for a clearing round, valuing bundles
/// with the pair-bid greedy.
///
/// For every (origin node, service type) with active unserved demand, one
/// bid per capacity variant is emitted, all in that pair's shared XOR
/// group. Zero-valued bids are not submitted.
#[allow(clippy::too_many_arguments)]
pub fn generate_xor_bids(
    mvno: &MvnoProfile,
    demand: &[Request],
    held: &[Slice],
    variants_gbps: &[f64],
    services: &ServiceCatalog,
    counter_bids: &CounterBidTable,
    carried: &CarriedLoad,
    t: u32,
    next_bid_id: &mut u64,
) -> Vec<UpperBid> {
    let active: Vec<Request> = demand
        .iter()
        .filter(|r| is_active(r, t))
        .cloned()
        .collect();
    generate_xor_bids_with(
        mvno,
        &active,
        held,
        variants_gbps,
        services,
        next_bid_id,
        |slices| solo_revenue(mvno, &active, slices, counter_bids, carried, t),
    )
}

/// Cleared upper-level round.
#[derive(Debug, Clone, PartialEq)]
pub struct UpperOutcome {
    /// Winning bids, in acceptance order.
    pub accepted: Vec<UpperBid>,
    /// Placement of carried plus newly accepted bundles.
    pub placement: Placement,
    /// Sum of accepted bid values this round.
    pub revenue: f64,
    /// Electricity cost of the full placement for one slot.
    pub energy_cost: f64,
    /// `revenue - energy_cost`.
    pub profit: f64,
}

impl UpperOutcome {
    pub fn is_accepted(&self, id: BidId) -> bool {
        self.accepted.iter().any(|b| b.id == id)
    }
}

/// Greedy clearing of the upper-level round over an empty substrate.
pub fn run_upper_greedy(
    graph: &NetworkGraph,
    bids: &[UpperBid],
    weights: &NbWeights,
    ec_per_kwh: f64,
    slot_duration_h: f64,
) -> UpperOutcome {
    let base = PlacementEngine::new(graph);
    run_upper_greedy_with_base(graph, &base, bids, weights, ec_per_kwh, slot_duration_h)
}

/// Greedy clearing on top of an existing placement (the slices already
/// sold and still leased).
///
/// Bids are ranked by normalized benefit (ties: higher value, then lower
/// id). Each is tentatively placed on top of the running state; bids whose
/// bundle does not fit, or whose XOR group already has a winner, are
/// skipped. The reported energy cost covers the whole placement, carried
/// slices included.
pub fn run_upper_greedy_with_base(
    graph: &NetworkGraph,
    base: &PlacementEngine,
    bids: &[UpperBid],
    weights: &NbWeights,
    ec_per_kwh: f64,
    slot_duration_h: f64,
) -> UpperOutcome {
    let mut ranked: Vec<(f64, &UpperBid)> = bids
        .iter()
        .filter_map(|b| normalized_benefit(b, weights).ok().map(|nb| (nb, b)))
        .collect();
    ranked.sort_by(|(nb_a, a), (nb_b, b)| {
        nb_b.total_cmp(nb_a)
            .then(b.value.total_cmp(&a.value))
            .then(a.id.cmp(&b.id))
    });

    let mut engine = base.clone();
    let mut won_groups: BTreeSet<XorGroupId> = BTreeSet::new();
    let mut accepted: Vec<UpperBid> = Vec::new();
    for (_, bid) in ranked {
        if won_groups.contains(&bid.xor_group) {
            continue;
        }
        let mut trial = engine.clone();
        if bid
            .bundle
            .iter()
            .all(|spec| trial.place(graph, spec).is_ok())
        {
            engine = trial;
            won_groups.insert(bid.xor_group);
            accepted.push(bid.clone());
        }
    }

    let placement = engine.snapshot(graph, true, None);
    let revenue: f64 = accepted.iter().map(|b| b.value).sum();
    let energy_cost = compute_energy_cost(&placement, ec_per_kwh, slot_duration_h)
        .expect("greedy placement is feasible by construction");
    UpperOutcome {
        accepted,
        placement,
        revenue,
        energy_cost,
        profit: revenue - energy_cost,
    }
}
