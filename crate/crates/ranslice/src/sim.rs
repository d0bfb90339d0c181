//! The timeslotted simulation loop: requests arrive and depart, the
//! operator auctions fresh capacity to MVNOs every slot, MVNOs resell it
//! to users, and charges and power bills accumulate into metrics.
//!
//! Per slot, in order: (1) departed requests release their capacity,
//! (2) MVNOs value and bid for new slices out of the unserved demand
//! snapshot, (3) the upper round clears and winners are charged, (4) MVNOs
//! quote counter-bids, (5) the lower round clears and admitted users are
//! charged, (6) metrics accumulate. Admitted requests keep their slice
//! until they depart; nothing is migrated or preempted.

use std::collections::BTreeMap;

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::baselines::{pin_requests, run_baseline1, run_baseline2};
use crate::config::{Config, ConfigError, CounterCostMode, DurationConfig, ResaleProfile};
use crate::lower::{
    generate_counter_bid, mvno_bounds, run_lower_greedy_full, CarriedLoad, CounterBidTable,
    LowerAllocation,
};
use crate::model::{
    is_active, MvnoId, MvnoProfile, NodeId, Request, RequestId, ServiceCatalog, ServiceTypeId,
    Slice, SliceId, SliceOwner,
};
use crate::net::{NetworkGraph, PlacementEngine};
use crate::pricing::{price_lower_winners, price_upper_winners, Charge};
use crate::upper::{
    generate_xor_bids_with, run_upper_greedy_with_base, NbWeights, UpperBid,
};

/// Which clearing policy drives the lower level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Algorithm {
    /// The pair-bid heuristic with dynamic request handling.
    Heuristic,
    /// Single-minded users, rank-sorted admission, no dynamics.
    Baseline1,
    /// Single-minded users, arrival-order admission.
    Baseline2,
}

impl Algorithm {
    pub fn label(&self) -> &'static str {
        match self {
            Algorithm::Heuristic => "heuristic",
            Algorithm::Baseline1 => "baseline1",
            Algorithm::Baseline2 => "baseline2",
        }
    }
}

impl From<crate::baselines::BaselineKind> for Algorithm {
    fn from(kind: crate::baselines::BaselineKind) -> Self {
        match kind {
            crate::baselines::BaselineKind::B1 => Algorithm::Baseline1,
            crate::baselines::BaselineKind::B2 => Algorithm::Baseline2,
        }
    }
}

/// Resolved request-duration rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DurationRule {
    /// Every request spans the rest of the horizon.
    Static,
    /// Uniform extra slots in `[lo, hi]`.
    Uniform { lo: u32, hi: u32 },
}

/// Resolved request generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequestGenParams {
    pub per_slot: u32,
    pub traffic_gbps: (f64, f64),
    pub unit_price: (f64, f64),
    pub duration: DurationRule,
    pub type_mix: Vec<(ServiceTypeId, f64)>,
}

/// A fully resolved run: config plus overrides, ready to execute.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub seed: u64,
    pub horizon: u32,
    pub algorithm: Algorithm,
    pub graph: NetworkGraph,
    pub services: ServiceCatalog,
    pub mvnos: Vec<MvnoProfile>,
    pub request_gen: RequestGenParams,
    pub variants_gbps: Vec<f64>,
    pub upper_base: BTreeMap<ServiceTypeId, f64>,
    pub lower_base: BTreeMap<ServiceTypeId, f64>,
    pub weights: NbWeights,
    pub counter_cost_mode: CounterCostMode,
    pub per_slot_payment: bool,
    /// `None`: slices stay open until the horizon.
    pub lease_slots: Option<u32>,
    pub resale_label: String,
    pub dynamic: bool,
}

/// Optional command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct ScenarioOverrides {
    pub seed: Option<u64>,
    pub horizon: Option<u32>,
    pub resale_profile: Option<ResaleProfile>,
    pub dynamic: Option<bool>,
    pub algorithm: Option<Algorithm>,
}

impl Scenario {
    pub fn from_config(
        config: &Config,
        overrides: &ScenarioOverrides,
    ) -> Result<Self, ConfigError> {
        let mut config = config.clone();
        if let Some(p) = overrides.resale_profile {
            config.sim.resale_profile = Some(p);
        }
        config.validate()?;

        let graph = crate::net::build_graph(&config.graph)?;
        let services = config.service_catalog()?;
        let mvnos = config.mvno_profiles()?;
        let (upper_base, lower_base) = config.base_prices()?;
        let weights = config.nb_weights()?;
        let type_mix = config.resolved_type_mix()?;

        let dynamic = overrides.dynamic.unwrap_or(match config.request_gen.duration {
            DurationConfig::Keyword(_) => false,
            DurationConfig::Uniform { .. } => true,
        });
        let duration = if dynamic {
            match config.request_gen.duration {
                DurationConfig::Uniform { lo, hi } => DurationRule::Uniform { lo, hi },
                DurationConfig::Keyword(_) => DurationRule::Uniform {
                    lo: config.request_gen.dynamic_duration.lo,
                    hi: config.request_gen.dynamic_duration.hi,
                },
            }
        } else {
            DurationRule::Static
        };

        Ok(Scenario {
            seed: overrides.seed.unwrap_or(config.sim.seed),
            horizon: overrides.horizon.unwrap_or(config.sim.horizon),
            algorithm: overrides.algorithm.unwrap_or(Algorithm::Heuristic),
            graph,
            services,
            mvnos,
            request_gen: RequestGenParams {
                per_slot: config.request_gen.per_slot,
                traffic_gbps: (
                    config.request_gen.traffic_gbps.lo,
                    config.request_gen.traffic_gbps.hi,
                ),
                unit_price: (
                    config.request_gen.unit_price.lo,
                    config.request_gen.unit_price.hi,
                ),
                duration,
                type_mix,
            },
            variants_gbps: config.catalog.variants_gbps.clone(),
            upper_base,
            lower_base,
            weights,
            counter_cost_mode: config.sim.counter_cost_mode,
            per_slot_payment: config.sim.per_slot_payment,
            lease_slots: (config.sim.lease_slots > 0).then_some(config.sim.lease_slots),
            resale_label: config
                .sim
                .resale_profile
                .map(|p| p.label().to_string())
                .unwrap_or_else(|| "custom".into()),
            dynamic,
        })
    }
}

const DURATION_STREAM_SALT: u64 = 0x9e3779b97f4a7c15;

/// Deterministically generates the full request schedule of a scenario.
///
/// Arrivals draw from the main stream; durations draw from a separate
/// stream, so switching a scenario between static and dynamic durations
/// keeps every other request attribute identical.
pub fn generate_requests(scenario: &Scenario) -> Vec<Request> {
    let gen = &scenario.request_gen;
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    let mut duration_rng = ChaCha8Rng::seed_from_u64(scenario.seed ^ DURATION_STREAM_SALT);
    let type_weights =
        WeightedIndex::new(gen.type_mix.iter().map(|(_, p)| *p)).expect("validated mix");
    let node_count = scenario.graph.node_count() as u16;

    let mut requests = Vec::with_capacity((scenario.horizon * gen.per_slot) as usize);
    let mut next_id = 0u64;
    for t in 0..scenario.horizon {
        for _ in 0..gen.per_slot {
            let origin = NodeId(rng.gen_range(0..node_count));
            let service_type = gen.type_mix[type_weights.sample(&mut rng)].0;
            let traffic = rng.gen_range(gen.traffic_gbps.0..=gen.traffic_gbps.1);
            let unit_price = rng.gen_range(gen.unit_price.0..=gen.unit_price.1);
            let extra = duration_rng.gen_range(0..=u32::MAX >> 1);
            let departure = match gen.duration {
                DurationRule::Static => scenario.horizon - 1,
                DurationRule::Uniform { lo, hi } => {
                    let d = lo + extra % (hi - lo + 1);
                    (t + d).min(scenario.horizon - 1)
                }
            };
            requests.push(
                Request::new(
                    RequestId(next_id),
                    origin,
                    service_type,
                    traffic,
                    unit_price * traffic,
                    t,
                    departure,
                )
                .expect("generated requests are valid"),
            );
            next_id += 1;
        }
    }
    requests
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ReqStatus {
    Pending,
    Served { mvno: MvnoId, slice: SliceId },
    Departed { served: bool },
}

#[derive(Debug, Clone, Default)]
struct MvnoLedger {
    paid_upper: f64,
    acquired_gbps: f64,
    lower_revenue: f64,
}

/// Mutable state of one running simulation.
#[derive(Debug, Clone)]
pub struct SimState {
    t: u32,
    requests: Vec<Request>,
    status: Vec<ReqStatus>,
    pinning: BTreeMap<RequestId, MvnoId>,
    slices: Vec<Slice>,
    slice_won_at: BTreeMap<SliceId, u32>,
    engine: PlacementEngine,
    occupancy: BTreeMap<SliceId, f64>,
    mvno_load: BTreeMap<MvnoId, f64>,
    ledgers: BTreeMap<MvnoId, MvnoLedger>,
    next_slice_id: u64,
    next_bid_id: u64,
}

impl SimState {
    /// Requests must be the generator's schedule: ids equal to positions.
    pub fn new(scenario: &Scenario, requests: Vec<Request>) -> Self {
        assert!(
            requests.iter().enumerate().all(|(i, r)| r.id.0 == i as u64),
            "request ids must match their schedule positions"
        );
        let mvno_ids: Vec<MvnoId> = scenario.mvnos.iter().map(|m| m.id).collect();
        let pinning = pin_requests(scenario.seed, &requests, &mvno_ids);
        let status = vec![ReqStatus::Pending; requests.len()];
        let ledgers = mvno_ids
            .iter()
            .map(|v| (*v, MvnoLedger::default()))
            .collect();
        let mvno_load = mvno_ids.iter().map(|v| (*v, 0.0)).collect();
        SimState {
            t: 0,
            requests,
            status,
            pinning,
            slices: Vec::new(),
            slice_won_at: BTreeMap::new(),
            engine: PlacementEngine::new(&scenario.graph),
            occupancy: BTreeMap::new(),
            mvno_load,
            ledgers,
            next_slice_id: 0,
            next_bid_id: 0,
        }
    }

    fn request(&self, id: RequestId) -> &Request {
        &self.requests[id.0 as usize]
    }

    /// Slices an MVNO currently holds that are still open to admissions.
    fn open_slices(&self, scenario: &Scenario) -> Vec<Slice> {
        self.slices
            .iter()
            .filter(|s| match scenario.lease_slots {
                Some(lease) => self.slice_won_at[&s.id] + lease > self.t,
                None => true,
            })
            .cloned()
            .collect()
    }

    fn held_by(&self, open: &[Slice], v: MvnoId) -> Vec<Slice> {
        open.iter()
            .filter(|s| s.owner == SliceOwner::Mvno(v))
            .cloned()
            .collect()
    }

    fn carried(&self) -> CarriedLoad {
        CarriedLoad {
            slice_occupancy_gbps: self.occupancy.clone(),
            mvno_load_gbps: self.mvno_load.clone(),
        }
    }

    fn unit_cost(&self, scenario: &Scenario, v: &MvnoProfile) -> f64 {
        match scenario.counter_cost_mode {
            CounterCostMode::Fixed => match v.counter_bid_policy {
                crate::model::CounterBidPolicy::CostMarkup { unit_cost } => unit_cost,
                crate::model::CounterBidPolicy::Flat { .. } => 0.0,
            },
            CounterCostMode::Amortized => {
                let ledger = &self.ledgers[&v.id];
                if ledger.acquired_gbps > 0.0 {
                    ledger.paid_upper / ledger.acquired_gbps
                } else {
                    0.0
                }
            }
        }
    }

    /// Quotes of every MVNO for every pending request, under the current
    /// cost state.
    fn quote_table(&self, scenario: &Scenario, pending: &[Request]) -> CounterBidTable {
        let mut table = CounterBidTable::new();
        for v in &scenario.mvnos {
            let policy = match (scenario.counter_cost_mode, v.counter_bid_policy) {
                (
                    CounterCostMode::Amortized,
                    crate::model::CounterBidPolicy::CostMarkup { .. },
                ) => crate::model::CounterBidPolicy::CostMarkup {
                    unit_cost: self.unit_cost(scenario, v),
                },
                (_, policy) => policy,
            };
            for r in pending {
                let quote = generate_counter_bid(&policy, v, r, self.t)
                    .expect("resale gain < 1 by construction");
                table.insert((v.id, r.id), quote.price);
            }
        }
        table
    }

    /// Consistency audit: recorded occupancy must equal the sum of active
    /// served traffic, and the placement must revalidate.
    pub fn audit(&self, scenario: &Scenario) -> bool {
        let mut per_slice: BTreeMap<SliceId, f64> = BTreeMap::new();
        let mut per_mvno: BTreeMap<MvnoId, f64> = BTreeMap::new();
        for (idx, status) in self.status.iter().enumerate() {
            if let ReqStatus::Served { mvno, slice } = status {
                per_slice
                    .entry(*slice)
                    .and_modify(|x| *x += self.requests[idx].traffic_gbps)
                    .or_insert(self.requests[idx].traffic_gbps);
                per_mvno
                    .entry(*mvno)
                    .and_modify(|x| *x += self.requests[idx].traffic_gbps)
                    .or_insert(self.requests[idx].traffic_gbps);
            }
        }
        for s in &self.slices {
            let recorded = self.occupancy.get(&s.id).copied().unwrap_or(0.0);
            let derived = per_slice.get(&s.id).copied().unwrap_or(0.0);
            if (recorded - derived).abs() > 1e-6 || recorded > s.capacity_gbps + 1e-6 {
                return false;
            }
        }
        for (v, load) in &self.mvno_load {
            let derived = per_mvno.get(v).copied().unwrap_or(0.0);
            if (load - derived).abs() > 1e-6 {
                return false;
            }
        }
        self.engine.validate(&scenario.graph)
    }
}

/// Metrics of one timeslot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotMetrics {
    pub t: u32,
    /// Sum of accepted upper-level bid values this slot.
    pub mno_revenue: f64,
    /// Electricity bill of the full placement for this slot.
    pub mno_cost: f64,
    pub mno_profit: f64,
    /// Accepted user bids recognized this slot, per serving MVNO.
    pub mvno_revenue: BTreeMap<MvnoId, f64>,
    /// Requests admitted this slot.
    pub accepted_requests: u32,
    pub accepted_bid_sum: f64,
    /// Total power draw at the end of the slot, watts.
    pub power_w: f64,
    pub lower_charges: f64,
    pub upper_charges: f64,
    /// Unserved active demand at the start of the clearing.
    pub pending_requests: u32,
}

/// Aggregated metrics of a full run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimMetrics {
    pub per_slot: Vec<SlotMetrics>,
    pub total_requests: u32,
    pub accepted_requests: u32,
    pub acceptance_ratio: f64,
    pub mno_revenue: f64,
    pub mno_cost: f64,
    pub mno_profit: f64,
    pub accepted_bid_sum: f64,
    pub mvno_revenue: BTreeMap<MvnoId, f64>,
    pub lower_charges: f64,
    pub upper_charges: f64,
}

impl SimMetrics {
    pub fn mvno_revenue_total(&self) -> f64 {
        self.mvno_revenue.values().sum()
    }
}

/// Advances the state by one timeslot and reports the slot's metrics.
pub fn step_timeslot(scenario: &Scenario, state: &mut SimState, t: u32) -> SlotMetrics {
    state.t = t;
    let ignore_departures = scenario.algorithm == Algorithm::Baseline1;

    // (1) Release capacity of departed requests; expire unserved windows.
    if !ignore_departures {
        for idx in 0..state.requests.len() {
            let r = &state.requests[idx];
            if r.departure >= t {
                continue;
            }
            match state.status[idx] {
                ReqStatus::Served { mvno, slice } => {
                    let occ = state.occupancy.get_mut(&slice).unwrap();
                    *occ = (*occ - r.traffic_gbps).max(0.0);
                    let load = state.mvno_load.get_mut(&mvno).unwrap();
                    *load = (*load - r.traffic_gbps).max(0.0);
                    state.status[idx] = ReqStatus::Departed { served: true };
                }
                ReqStatus::Pending => {
                    state.status[idx] = ReqStatus::Departed { served: false };
                }
                ReqStatus::Departed { .. } => {}
            }
        }
    }

    // (2) Demand snapshot: active, still unserved requests.
    let pending: Vec<Request> = state
        .requests
        .iter()
        .enumerate()
        .filter(|(idx, r)| {
            state.status[*idx] == ReqStatus::Pending
                && if ignore_departures {
                    r.arrival <= t
                } else {
                    is_active(r, t)
                }
        })
        .map(|(_, r)| r.clone())
        .collect();

    // (3) Upper round: valuation, bids, clearing, charging, minting.
    let carried = state.carried();
    let open = state.open_slices(scenario);
    let bounds = mvno_bounds(&scenario.mvnos);
    let valuation_quotes = state.quote_table(scenario, &pending);

    let mut bids: Vec<UpperBid> = Vec::new();
    for v in &scenario.mvnos {
        let held = state.held_by(&open, v.id);
        let demand_v: Vec<Request> = match scenario.algorithm {
            Algorithm::Heuristic => pending.clone(),
            _ => pending
                .iter()
                .filter(|r| state.pinning.get(&r.id) == Some(&v.id))
                .cloned()
                .collect(),
        };
        let v_bounds: BTreeMap<MvnoId, f64> = [(v.id, v.capacity_bound_gbps)].into();
        let revenue_of = |slices: &[Slice]| -> f64 {
            match scenario.algorithm {
                Algorithm::Heuristic => run_lower_greedy_full(
                    &demand_v,
                    slices,
                    &valuation_quotes,
                    t,
                    &carried,
                    &v_bounds,
                )
                .accepted_bid_sum(),
                Algorithm::Baseline1 => {
                    run_baseline1(&demand_v, slices, &state.pinning, t, &carried, &v_bounds)
                        .accepted_bid_sum()
                }
                Algorithm::Baseline2 => {
                    run_baseline2(&demand_v, slices, &state.pinning, t, &carried, &v_bounds)
                        .accepted_bid_sum()
                }
            }
        };
        bids.extend(generate_xor_bids_with(
            v,
            &demand_v,
            &held,
            &scenario.variants_gbps,
            &scenario.services,
            &mut state.next_bid_id,
            revenue_of,
        ));
    }

    let ec = scenario.graph.electricity_cost_per_kwh;
    let slot_h = scenario.graph.slot_duration_h;
    let outcome =
        run_upper_greedy_with_base(&scenario.graph, &state.engine, &bids, &scenario.weights, ec, slot_h);
    let upper_charges: Vec<Charge<crate::upper::BidId>> = price_upper_winners(
        &outcome,
        &scenario.graph,
        &state.engine,
        &bids,
        &scenario.weights,
        ec,
        slot_h,
        |bid| {
            bid.bundle
                .iter()
                .map(|s| scenario.upper_base[&s.service_type])
                .sum()
        },
    );

    for won in &outcome.accepted {
        let charge = upper_charges
            .iter()
            .find(|c| c.bidder == won.id)
            .expect("every winner is charged");
        let ledger = state.ledgers.get_mut(&won.mvno).unwrap();
        ledger.paid_upper += charge.q_final;
        for spec in &won.bundle {
            let slice = Slice::new(
                SliceId(state.next_slice_id),
                spec.origin,
                spec.service_type,
                spec.traffic_gbps,
                SliceOwner::Mvno(won.mvno),
                scenario.lower_base[&spec.service_type],
            )
            .expect("minted slices are valid");
            state.next_slice_id += 1;
            state
                .engine
                .place(&scenario.graph, spec)
                .expect("winner bundles were placed during clearing");
            state.occupancy.insert(slice.id, 0.0);
            state.slice_won_at.insert(slice.id, t);
            state.slices.push(slice);
            ledger.acquired_gbps += spec.traffic_gbps;
        }
    }
    debug_assert_eq!(state.engine.p_net_w(&scenario.graph), outcome.placement.p_net_w);

    // (4)+(5) Lower round over the refreshed slice inventory and costs.
    let open = state.open_slices(scenario);
    let carried = state.carried();
    let clearing_quotes = state.quote_table(scenario, &pending);
    let alloc: LowerAllocation = match scenario.algorithm {
        Algorithm::Heuristic => {
            run_lower_greedy_full(&pending, &open, &clearing_quotes, t, &carried, &bounds)
        }
        Algorithm::Baseline1 => {
            run_baseline1(&pending, &open, &state.pinning, t, &carried, &bounds)
        }
        Algorithm::Baseline2 => {
            run_baseline2(&pending, &open, &state.pinning, t, &carried, &bounds)
        }
    };
    let lower_charges: Vec<Charge<RequestId>> = match scenario.algorithm {
        Algorithm::Heuristic => price_lower_winners(
            &alloc,
            &pending,
            &open,
            &clearing_quotes,
            &carried,
            &scenario.mvnos,
            |r| scenario.lower_base[&r.service_type],
        ),
        // The baselines ship no pair-bid machinery; admitted users pay the
        // base access price of their service class.
        _ => alloc
            .assignments
            .iter()
            .map(|a| {
                Charge::new(
                    a.request,
                    0.0,
                    scenario.lower_base[&state.request(a.request).service_type],
                )
            })
            .collect(),
    };

    for a in &alloc.assignments {
        let idx = a.request.0 as usize;
        debug_assert_eq!(state.status[idx], ReqStatus::Pending);
        state.status[idx] = ReqStatus::Served {
            mvno: a.mvno,
            slice: a.slice,
        };
        *state.occupancy.get_mut(&a.slice).unwrap() += a.traffic_gbps;
        *state.mvno_load.get_mut(&a.mvno).unwrap() += a.traffic_gbps;
        state.ledgers.get_mut(&a.mvno).unwrap().lower_revenue += a.bid;
    }

    // (6) Metrics.
    let mut mvno_revenue: BTreeMap<MvnoId, f64> =
        scenario.mvnos.iter().map(|m| (m.id, 0.0)).collect();
    let mut accepted_bid_sum = 0.0;
    if scenario.per_slot_payment {
        for (idx, status) in state.status.iter().enumerate() {
            if let ReqStatus::Served { mvno, .. } = status {
                let r = &state.requests[idx];
                if ignore_departures || is_active(r, t) {
                    *mvno_revenue.get_mut(mvno).unwrap() += r.bid;
                    accepted_bid_sum += r.bid;
                }
            }
        }
    } else {
        for a in &alloc.assignments {
            *mvno_revenue.get_mut(&a.mvno).unwrap() += a.bid;
            accepted_bid_sum += a.bid;
        }
    }

    let power_w =
        state.engine.p_net_w(&scenario.graph) + state.engine.p_node_w(&scenario.graph);
    let mno_cost = state.engine.energy_cost(&scenario.graph);
    SlotMetrics {
        t,
        mno_revenue: outcome.revenue,
        mno_cost,
        mno_profit: outcome.revenue - mno_cost,
        mvno_revenue,
        accepted_requests: alloc.assignments.len() as u32,
        accepted_bid_sum,
        power_w,
        lower_charges: lower_charges.iter().map(|c| c.q_final).sum(),
        upper_charges: upper_charges.iter().map(|c| c.q_final).sum(),
        pending_requests: pending.len() as u32,
    }
}

/// Runs a scenario end to end.
pub fn run_simulation(scenario: &Scenario) -> SimMetrics {
    let requests = generate_requests(scenario);
    let total_requests = requests.len() as u32;
    let mut state = SimState::new(scenario, requests);

    let mut per_slot = Vec::with_capacity(scenario.horizon as usize);
    for t in 0..scenario.horizon {
        per_slot.push(step_timeslot(scenario, &mut state, t));
    }
    assert!(
        state.audit(scenario),
        "capacity ledger drifted during the run"
    );

    let accepted_requests: u32 = state
        .status
        .iter()
        .filter(|s| {
            matches!(
                s,
                ReqStatus::Served { .. } | ReqStatus::Departed { served: true }
            )
        })
        .count() as u32;
    let mut mvno_revenue: BTreeMap<MvnoId, f64> =
        scenario.mvnos.iter().map(|m| (m.id, 0.0)).collect();
    for slot in &per_slot {
        for (v, x) in &slot.mvno_revenue {
            *mvno_revenue.get_mut(v).unwrap() += x;
        }
    }

    SimMetrics {
        total_requests,
        accepted_requests,
        acceptance_ratio: if total_requests > 0 {
            accepted_requests as f64 / total_requests as f64
        } else {
            0.0
        },
        mno_revenue: per_slot.iter().map(|s| s.mno_revenue).sum(),
        mno_cost: per_slot.iter().map(|s| s.mno_cost).sum(),
        mno_profit: per_slot.iter().map(|s| s.mno_profit).sum(),
        accepted_bid_sum: per_slot.iter().map(|s| s.accepted_bid_sum).sum(),
        mvno_revenue,
        lower_charges: per_slot.iter().map(|s| s.lower_charges).sum(),
        upper_charges: per_slot.iter().map(|s| s.upper_charges).sum(),
        per_slot,
    }
}
