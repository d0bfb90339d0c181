//! Exact solvers for both market levels on desk-scale instances. They are
//! the ground truth that the greedy heuristics are measured against; they
//! are not built for production sizes.
//!
//! The optimal objective value is the contract of both solvers. Among
//! equally optimal solutions a deterministic one is returned (the first in
//! depth-first order over a fixed choice encoding), but callers must not
//! rely on the specific assignment.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::lower::{owner_mvno, CarriedLoad, CounterBidTable, LowerAllocation, LowerAssignment};
use crate::model::{MvnoId, Request, Slice, SliceId};
use crate::net::{compute_energy_cost, NetworkGraph, PlacementEngine};
use crate::upper::{normalized_benefit, NbWeights, UpperBid, UpperOutcome, XorGroupId};

const CAP_EPS: f64 = 1e-9;

/// Instance-size guards for the exact solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleLimits {
    pub max_requests: usize,
    pub max_slices: usize,
    pub max_bids: usize,
    pub time_budget: Duration,
}

impl Default for OracleLimits {
    fn default() -> Self {
        Self {
            max_requests: 10,
            max_slices: 5,
            max_bids: 12,
            time_budget: Duration::from_secs(10),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("instance has {got} requests, limit is {limit}")]
    TooManyRequests { got: usize, limit: usize },
    #[error("instance has {got} slices, limit is {limit}")]
    TooManySlices { got: usize, limit: usize },
    #[error("instance has {got} bids, limit is {limit}")]
    TooManyBids { got: usize, limit: usize },
    #[error("time budget exhausted before the search finished")]
    TimeBudget,
}

struct LowerSearch<'a> {
    requests: Vec<&'a Request>,
    slices: Vec<&'a Slice>,
    /// Per request: admissible (slice index, owner, beta) in slice-id order.
    options: Vec<Vec<(usize, MvnoId, f64)>>,
    /// Per request: best admissible surplus, for the bound.
    best_surplus: Vec<f64>,
    bounds: &'a BTreeMap<MvnoId, f64>,
    deadline: Instant,
    // Mutable search state.
    occupancy: Vec<f64>,
    mvno_load: BTreeMap<MvnoId, f64>,
    choice: Vec<Option<usize>>,
    surplus: f64,
    best: f64,
    best_choice: Vec<Option<usize>>,
    found: bool,
}

impl<'a> LowerSearch<'a> {
    /// Admissible upper bound on the surplus still reachable from request
    /// `from` on: per (origin, type) class, a fractional knapsack of the
    /// remaining requests' best surpluses into the class's residual
    /// capacity. Per-MVNO bounds and per-slice packing are relaxed.
    fn bound(&self, from: usize) -> f64 {
        let mut per_class: BTreeMap<(u16, u16), Vec<(f64, f64)>> = BTreeMap::new();
        for (i, r) in self.requests.iter().enumerate().skip(from) {
            if self.best_surplus[i] <= 0.0 || self.options[i].is_empty() {
                continue;
            }
            per_class
                .entry((r.origin.0, r.service_type.0))
                .or_default()
                .push((self.best_surplus[i], r.traffic_gbps));
        }
        let mut total = 0.0;
        for ((node, ty), mut items) in per_class {
            let mut cap: f64 = self
                .slices
                .iter()
                .enumerate()
                .filter(|(_, s)| s.origin.0 == node && s.service_type.0 == ty)
                .map(|(idx, s)| (s.capacity_gbps - self.occupancy[idx]).max(0.0))
                .sum();
            items.sort_by(|a, b| (b.0 / b.1).total_cmp(&(a.0 / a.1)));
            for (surplus, traffic) in items {
                if cap <= 0.0 {
                    break;
                }
                let frac = (cap / traffic).min(1.0);
                total += surplus * frac;
                cap -= traffic * frac;
            }
        }
        total
    }

    fn dfs(&mut self, i: usize) -> Result<(), OracleError> {
        if Instant::now() > self.deadline {
            return Err(OracleError::TimeBudget);
        }
        if i == self.requests.len() {
            if !self.found || self.surplus > self.best {
                self.best = self.surplus;
                self.best_choice = self.choice.clone();
                self.found = true;
            }
            return Ok(());
        }
        if self.found && self.surplus + self.bound(i) <= self.best {
            return Ok(());
        }

        let r = self.requests[i];
        let options = self.options[i].clone();
        for (slice_idx, owner, beta) in options {
            let s = self.slices[slice_idx];
            if self.occupancy[slice_idx] + r.traffic_gbps > s.capacity_gbps + CAP_EPS {
                continue;
            }
            let bound = self.bounds.get(&owner).copied().unwrap_or(f64::INFINITY);
            let load = self.mvno_load.get(&owner).copied().unwrap_or(0.0);
            if load + r.traffic_gbps > bound + CAP_EPS {
                continue;
            }
            self.occupancy[slice_idx] += r.traffic_gbps;
            *self.mvno_load.entry(owner).or_insert(0.0) += r.traffic_gbps;
            self.surplus += r.bid - beta;
            self.choice[i] = Some(slice_idx);
            self.dfs(i + 1)?;
            self.choice[i] = None;
            self.surplus -= r.bid - beta;
            *self.mvno_load.get_mut(&owner).unwrap() -= r.traffic_gbps;
            self.occupancy[slice_idx] -= r.traffic_gbps;
        }
        // Rejection branch last.
        self.dfs(i + 1)
    }
}

/// Exact lower-level clearing: maximizes the total pair surplus subject to
/// single-admission, compatibility, slice capacity, and per-MVNO bounds.
pub fn solve_lower_exact(
    requests: &[Request],
    slices: &[Slice],
    counter_bids: &CounterBidTable,
    t: u32,
    limits: &OracleLimits,
) -> Result<LowerAllocation, OracleError> {
    solve_lower_exact_full(
        requests,
        slices,
        counter_bids,
        t,
        &CarriedLoad::default(),
        &BTreeMap::new(),
        limits,
    )
}

/// Exact lower-level clearing over carried occupancy and explicit bounds.
pub fn solve_lower_exact_full(
    requests: &[Request],
    slices: &[Slice],
    counter_bids: &CounterBidTable,
    t: u32,
    carried: &CarriedLoad,
    bounds: &BTreeMap<MvnoId, f64>,
    limits: &OracleLimits,
) -> Result<LowerAllocation, OracleError> {
    if requests.len() > limits.max_requests {
        return Err(OracleError::TooManyRequests {
            got: requests.len(),
            limit: limits.max_requests,
        });
    }
    if slices.len() > limits.max_slices {
        return Err(OracleError::TooManySlices {
            got: slices.len(),
            limit: limits.max_slices,
        });
    }

    let mut sorted_requests: Vec<&Request> = requests.iter().collect();
    sorted_requests.sort_by_key(|r| r.id);
    let mut sorted_slices: Vec<&Slice> = slices.iter().collect();
    sorted_slices.sort_by_key(|s| s.id);

    // Pairs with negative surplus can never appear in an optimum: dropping
    // one frees capacity and raises the objective.
    let options: Vec<Vec<(usize, MvnoId, f64)>> = sorted_requests
        .iter()
        .map(|r| {
            sorted_slices
                .iter()
                .enumerate()
                .filter_map(|(idx, s)| {
                    let owner = owner_mvno(s)?;
                    if !crate::model::compatible(r, s) {
                        return None;
                    }
                    let beta = *counter_bids.get(&(owner, r.id))?;
                    if r.bid - beta < 0.0 {
                        return None;
                    }
                    Some((idx, owner, beta))
                })
                .collect()
        })
        .collect();
    let best_surplus: Vec<f64> = sorted_requests
        .iter()
        .zip(&options)
        .map(|(r, opts)| {
            opts.iter()
                .map(|(_, _, beta)| r.bid - beta)
                .fold(0.0, f64::max)
        })
        .collect();

    let occupancy: Vec<f64> = sorted_slices.iter().map(|s| carried.slice(s.id)).collect();
    let mut mvno_load: BTreeMap<MvnoId, f64> = BTreeMap::new();
    for s in &sorted_slices {
        if let Some(v) = owner_mvno(s) {
            mvno_load.entry(v).or_insert_with(|| carried.mvno(v));
        }
    }

    let n = sorted_requests.len();
    let mut search = LowerSearch {
        requests: sorted_requests,
        slices: sorted_slices,
        options,
        best_surplus,
        bounds,
        deadline: Instant::now() + limits.time_budget,
        occupancy,
        mvno_load,
        choice: vec![None; n],
        surplus: 0.0,
        best: f64::NEG_INFINITY,
        best_choice: vec![None; n],
        found: false,
    };
    search.dfs(0)?;

    let mut occupancy: BTreeMap<SliceId, f64> = search
        .slices
        .iter()
        .map(|s| (s.id, carried.slice(s.id)))
        .collect();
    let mut assignments = Vec::new();
    let mut surplus = 0.0;
    for (i, choice) in search.best_choice.iter().enumerate() {
        let Some(slice_idx) = choice else { continue };
        let r = search.requests[i];
        let s = search.slices[*slice_idx];
        let owner = owner_mvno(s).unwrap();
        let beta = counter_bids[&(owner, r.id)];
        *occupancy.get_mut(&s.id).unwrap() += r.traffic_gbps;
        surplus += r.bid - beta;
        assignments.push(LowerAssignment {
            request: r.id,
            mvno: owner,
            slice: s.id,
            timeslot: t,
            traffic_gbps: r.traffic_gbps,
            bid: r.bid,
            counter_bid: beta,
        });
    }
    Ok(LowerAllocation {
        timeslot: t,
        assignments,
        occupancy_gbps: occupancy,
        carried: carried.clone(),
        charges: BTreeMap::new(),
        surplus,
    })
}

/// Exact upper-level clearing: enumerates every XOR-consistent bid subset,
/// keeps the placement-feasible ones, and returns the profit maximizer.
///
/// Feasibility of a candidate set is evaluated with bundles placed in
/// normalized-benefit ranking order, matching how the greedy would place
/// the same set.
pub fn solve_upper_exact(
    graph: &NetworkGraph,
    bids: &[UpperBid],
    weights: &NbWeights,
    ec_per_kwh: f64,
    slot_duration_h: f64,
    limits: &OracleLimits,
) -> Result<UpperOutcome, OracleError> {
    solve_upper_exact_with_base(
        graph,
        &PlacementEngine::new(graph),
        bids,
        weights,
        ec_per_kwh,
        slot_duration_h,
        limits,
    )
}

/// Exact upper-level clearing on top of an existing placement.
#[allow(clippy::too_many_arguments)]
pub fn solve_upper_exact_with_base(
    graph: &NetworkGraph,
    base: &PlacementEngine,
    bids: &[UpperBid],
    weights: &NbWeights,
    ec_per_kwh: f64,
    slot_duration_h: f64,
    limits: &OracleLimits,
) -> Result<UpperOutcome, OracleError> {
    if bids.len() > limits.max_bids {
        return Err(OracleError::TooManyBids {
            got: bids.len(),
            limit: limits.max_bids,
        });
    }
    let deadline = Instant::now() + limits.time_budget;

    let mut groups: BTreeMap<XorGroupId, Vec<&UpperBid>> = BTreeMap::new();
    for b in bids {
        groups.entry(b.xor_group).or_default().push(b);
    }
    for members in groups.values_mut() {
        members.sort_by_key(|b| b.id);
    }
    let group_list: Vec<Vec<&UpperBid>> = groups.into_values().collect();

    let rank_key = |b: &UpperBid| {
        let nb = normalized_benefit(b, weights).unwrap_or(f64::NEG_INFINITY);
        (nb, b.value, b.id)
    };
    let place_in_rank_order = |chosen: &[&UpperBid]| -> Option<PlacementEngine> {
        let mut ordered: Vec<&&UpperBid> = chosen.iter().collect();
        ordered.sort_by(|a, b| {
            let (nb_a, va, ia) = rank_key(a);
            let (nb_b, vb, ib) = rank_key(b);
            nb_b.total_cmp(&nb_a).then(vb.total_cmp(&va)).then(ia.cmp(&ib))
        });
        let mut engine = base.clone();
        for bid in ordered {
            for spec in &bid.bundle {
                if engine.place(graph, spec).is_err() {
                    return None;
                }
            }
        }
        Some(engine)
    };

    let mut best: Option<(f64, Vec<&UpperBid>, PlacementEngine)> = None;
    let mut chosen: Vec<&UpperBid> = Vec::new();

    fn enumerate<'a>(
        group_list: &[Vec<&'a UpperBid>],
        gi: usize,
        chosen: &mut Vec<&'a UpperBid>,
        place: &impl Fn(&[&'a UpperBid]) -> Option<PlacementEngine>,
        score: &impl Fn(&PlacementEngine, &[&'a UpperBid]) -> f64,
        best: &mut Option<(f64, Vec<&'a UpperBid>, PlacementEngine)>,
        deadline: Instant,
    ) -> Result<(), OracleError> {
        if Instant::now() > deadline {
            return Err(OracleError::TimeBudget);
        }
        if gi == group_list.len() {
            if let Some(engine) = place(chosen) {
                let profit = score(&engine, chosen);
                if best.as_ref().is_none_or(|(p, _, _)| profit > *p) {
                    *best = Some((profit, chosen.clone(), engine));
                }
            }
            return Ok(());
        }
        // Skip this group entirely, then try each member.
        enumerate(group_list, gi + 1, chosen, place, score, best, deadline)?;
        for bid in &group_list[gi] {
            chosen.push(bid);
            // Infeasible prefixes cannot become feasible by adding more
            // slices; placing checks the full set anyway, so just recurse.
            enumerate(group_list, gi + 1, chosen, place, score, best, deadline)?;
            chosen.pop();
        }
        Ok(())
    }

    let score = |engine: &PlacementEngine, chosen: &[&UpperBid]| {
        let revenue: f64 = chosen.iter().map(|b| b.value).sum();
        revenue - engine.energy_cost(graph)
    };
    enumerate(
        &group_list,
        0,
        &mut chosen,
        &place_in_rank_order,
        &score,
        &mut best,
        deadline,
    )?;

    let (_, winners, engine) = best.expect("the empty set is always feasible");
    let placement = engine.snapshot(graph, true, None);
    let revenue: f64 = winners.iter().map(|b| b.value).sum();
    let energy_cost = compute_energy_cost(&placement, ec_per_kwh, slot_duration_h)
        .expect("feasible by construction");
    let mut accepted: Vec<UpperBid> = winners.into_iter().cloned().collect();
    accepted.sort_by_key(|b| b.id);
    Ok(UpperOutcome {
        accepted,
        placement,
        revenue,
        energy_cost,
        profit: revenue - energy_cost,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lower::run_lower_greedy;
    use crate::model::{NodeId, RequestId, ServiceTypeId, SliceOwner};
    use crate::net::{build_graph, GraphConfig, SliceSpec};
    use crate::upper::BidId;

    fn request(id: u64, bid: f64, traffic: f64) -> Request {
        Request::new(RequestId(id), NodeId(0), ServiceTypeId(0), traffic, bid, 0, 0).unwrap()
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

    fn quotes(requests: &[Request], per_mvno: &[(u16, f64)]) -> CounterBidTable {
        let mut t = CounterBidTable::new();
        for r in requests {
            for (v, p) in per_mvno {
                t.insert((MvnoId(*v), r.id), *p);
            }
        }
        t
    }

    /// Brute force over every assignment vector, no pruning. This is the
    /// independent check that the branch-and-bound cannot drift from.
    fn enumerate_lower_best(
        requests: &[Request],
        slices: &[Slice],
        table: &CounterBidTable,
    ) -> f64 {
        fn recurse(
            requests: &[Request],
            slices: &[Slice],
            table: &CounterBidTable,
            i: usize,
            occupancy: &mut Vec<f64>,
        ) -> f64 {
            if i == requests.len() {
                return 0.0;
            }
            let r = &requests[i];
            let mut best = recurse(requests, slices, table, i + 1, occupancy);
            for (idx, s) in slices.iter().enumerate() {
                if !crate::model::compatible(r, s) {
                    continue;
                }
                let Some(v) = owner_mvno(s) else { continue };
                let Some(&beta) = table.get(&(v, r.id)) else {
                    continue;
                };
                if occupancy[idx] + r.traffic_gbps > s.capacity_gbps + 1e-9 {
                    continue;
                }
                occupancy[idx] += r.traffic_gbps;
                let value = r.bid - beta + recurse(requests, slices, table, i + 1, occupancy);
                occupancy[idx] -= r.traffic_gbps;
                best = best.max(value);
            }
            best
        }
        let mut occupancy = vec![0.0; slices.len()];
        recurse(requests, slices, table, 0, &mut occupancy)
    }

    #[test]
    fn worked_example_optimum_matches_greedy() {
        let requests = vec![
            request(1, 100.0, 1.0),
            request(2, 200.0, 1.0),
            request(3, 300.0, 1.0),
        ];
        let slices = vec![slice(1, 1, 1.0), slice(2, 2, 1.0)];
        let table = quotes(&requests, &[(1, 115.0), (2, 135.0)]);
        let exact =
            solve_lower_exact(&requests, &slices, &table, 0, &OracleLimits::default()).unwrap();
        assert_eq!(exact.surplus, 250.0);
        assert_eq!(
            enumerate_lower_best(&requests, &slices, &table),
            250.0
        );
        let greedy = run_lower_greedy(&requests, &slices, &table, 0);
        assert_eq!(greedy.surplus, exact.surplus);
    }

    #[test]
    fn single_pair_is_taken() {
        let requests = vec![request(1, 100.0, 1.0)];
        let slices = vec![slice(1, 1, 1.0)];
        let table = quotes(&requests, &[(1, 40.0)]);
        let exact =
            solve_lower_exact(&requests, &slices, &table, 0, &OracleLimits::default()).unwrap();
        assert_eq!(exact.surplus, 60.0);
        assert_eq!(exact.assignments.len(), 1);
    }

    #[test]
    fn knapsack_instance_picks_the_best_subset() {
        // One slice of capacity 2, three unit requests with bids 5/7/9 and
        // free quotes: the best feasible subset is {7, 9} = 16, confirmed
        // by the no-pruning enumeration.
        let requests = vec![
            request(1, 5.0, 1.0),
            request(2, 7.0, 1.0),
            request(3, 9.0, 1.0),
        ];
        let slices = vec![slice(1, 1, 2.0)];
        let table = quotes(&requests, &[(1, 0.0)]);
        assert_eq!(enumerate_lower_best(&requests, &slices, &table), 16.0);
        let exact =
            solve_lower_exact(&requests, &slices, &table, 0, &OracleLimits::default()).unwrap();
        assert_eq!(exact.surplus, 16.0);
    }

    #[test]
    fn limits_are_enforced() {
        let requests: Vec<Request> = (0..20).map(|i| request(i, 10.0, 1.0)).collect();
        let slices = vec![slice(1, 1, 5.0)];
        let table = quotes(&requests, &[(1, 0.0)]);
        assert!(matches!(
            solve_lower_exact(&requests, &slices, &table, 0, &OracleLimits::default()),
            Err(OracleError::TooManyRequests { .. })
        ));
    }

    #[test]
    fn upper_oracle_handles_empty_and_unprofitable_bids() {
        let g = build_graph(&GraphConfig::default()).unwrap();
        let limits = OracleLimits::default();
        let out =
            solve_upper_exact(&g, &[], &NbWeights::default(), 0.3, 1.0, &limits).unwrap();
        assert_eq!(out.profit, 0.0);
        assert!(out.accepted.is_empty());

        // A bid whose value is below its energy cost is left unsold.
        let spec = SliceSpec {
            origin: NodeId(1),
            service_type: ServiceTypeId(0),
            traffic_gbps: 1.0,
            latency_budget_ms: 10.0,
        };
        let cheap = UpperBid::new(
            BidId(1),
            MvnoId(0),
            0.05,
            vec![spec],
            XorGroupId(1),
        )
        .unwrap();
        let out =
            solve_upper_exact(&g, &[cheap], &NbWeights::default(), 0.3, 1.0, &limits).unwrap();
        assert!(out.accepted.is_empty());
        assert_eq!(out.profit, 0.0);
    }

    #[test]
    fn xor_exclusive_values_pick_the_larger() {
        let g = build_graph(&GraphConfig::default()).unwrap();
        let spec = SliceSpec {
            origin: NodeId(0),
            service_type: ServiceTypeId(0),
            traffic_gbps: 1.0,
            latency_budget_ms: 10.0,
        };
        let a = UpperBid::new(BidId(1), MvnoId(0), 100.0, vec![spec.clone()], XorGroupId(9))
            .unwrap();
        let b = UpperBid::new(BidId(2), MvnoId(1), 80.0, vec![spec], XorGroupId(9)).unwrap();
        let out = solve_upper_exact(
            &g,
            &[a, b],
            &NbWeights::default(),
            0.3,
            1.0,
            &OracleLimits::default(),
        )
        .unwrap();
        assert_eq!(out.accepted.len(), 1);
        assert_eq!(out.accepted[0].id, BidId(1));
    }

    #[test]
    fn upper_limit_is_enforced(){
        let g = build_graph(&GraphConfig::default()).unwrap();
        let spec = SliceSpec {
            origin: NodeId(0),
            service_type: ServiceTypeId(0),
            traffic_gbps: 1.0,
            latency_budget_ms: 10.0,
        };
        let bids: Vec<UpperBid> = (0..13)
            .map(|i| {
                UpperBid::new(BidId(i), MvnoId(0), 10.0, vec![spec.clone()], XorGroupId(i))
                    .unwrap()
            })
            .collect();
        assert!(matches!(
            solve_upper_exact(
                &g,
                &bids,
                &NbWeights::default(),
                0.3,
                1.0,
                &OracleLimits::default()
            ),
            Err(OracleError::TooManyBids { .. })
        ));
    }

    #[test]
    fn objective_is_permutation_invariant() {
        let requests = vec![
            request(1, 12.0, 1.5),
            request(2, 30.0, 2.0),
            request(3, 9.0, 0.5),
            request(4, 22.0, 1.0),
        ];
        let slices = vec![slice(1, 1, 2.5), slice(2, 2, 2.0)];
        let table = quotes(&requests, &[(1, 4.0), (2, 6.0)]);
        let forward =
            solve_lower_exact(&requests, &slices, &table, 0, &OracleLimits::default()).unwrap();
        let mut shuffled = requests.clone();
        shuffled.reverse();
        let backward =
            solve_lower_exact(&shuffled, &slices, &table, 0, &OracleLimits::default()).unwrap();
        assert_eq!(forward.surplus, backward.surplus);
    }
}
