//! Domain types shared by every other module: service classes, user
//! requests, sellable slices, MVNO profiles, and the discrete timeline.
//!
//! All types here are plain immutable values. Constructors validate their
//! invariants and return [`ModelError`] on violation, so a constructed value
//! can be trusted downstream.

use serde::{Deserialize, Serialize};
use std::fmt;

use thiserror::Error;

/// Identifier of a substrate node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub u16);

/// Identifier of a user request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RequestId(pub u64);

/// Identifier of a network slice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SliceId(pub u64);

/// Identifier of an MVNO.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MvnoId(pub u16);

/// Identifier of a service class in a [`ServiceCatalog`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ServiceTypeId(pub u16);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

impl fmt::Display for RequestId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "k{}", self.0)
    }
}

impl fmt::Display for SliceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

impl fmt::Display for MvnoId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

/// Validation failure raised by a domain-type constructor.
#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("latency budget must be positive, got {0} ms")]
    NonPositiveLatency(f64),
    #[error("duplicate service type id {0:?}")]
    DuplicateServiceType(ServiceTypeId),
    #[error("unknown service type {0}")]
    UnknownServiceType(String),
    #[error("traffic demand must be positive, got {0} Gbps")]
    NonPositiveTraffic(f64),
    #[error("bid must be nonnegative, got {0}")]
    NegativeBid(f64),
    #[error("arrival slot {arrival} is after departure slot {departure}")]
    InvertedWindow { arrival: u32, departure: u32 },
    #[error("slice capacity must be positive, got {0} Gbps")]
    NonPositiveCapacity(f64),
    #[error("base price must be nonnegative, got {0}")]
    NegativeBasePrice(f64),
    #[error("resale gain must lie in [0, 1), got {0}")]
    ResaleGainOutOfRange(f64),
    #[error("MVNO capacity bound must be positive, got {0} Gbps")]
    NonPositiveCapacityBound(f64),
    #[error("counter-bid prices must be nonnegative, got {0}")]
    NegativeCounterPrice(f64),
    #[error("timeslot {t} is outside horizon {horizon}")]
    SlotOutOfHorizon { t: u32, horizon: u32 },
    #[error("value {0} is not finite")]
    NotFinite(f64),
}

fn finite(x: f64) -> Result<f64, ModelError> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(ModelError::NotFinite(x))
    }
}

/// A service class such as eMBB or uRLLC: a latency budget plus a display
/// tag used by reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceType {
    pub id: ServiceTypeId,
    pub name: String,
    pub latency_budget_ms: f64,
    pub color_label: String,
}

impl ServiceType {
    pub fn new(
        id: ServiceTypeId,
        name: impl Into<String>,
        latency_budget_ms: f64,
        color_label: impl Into<String>,
    ) -> Result<Self, ModelError> {
        if finite(latency_budget_ms)? <= 0.0 {
            return Err(ModelError::NonPositiveLatency(latency_budget_ms));
        }
        Ok(Self {
            id,
            name: name.into(),
            latency_budget_ms,
            color_label: color_label.into(),
        })
    }
}

/// The set of service classes known to a scenario, indexed by [`ServiceTypeId`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceCatalog {
    types: Vec<ServiceType>,
}

impl ServiceCatalog {
    /// Builds a catalog, rejecting duplicate ids.
    pub fn new(types: Vec<ServiceType>) -> Result<Self, ModelError> {
        for (i, a) in types.iter().enumerate() {
            if types[..i].iter().any(|b| b.id == a.id) {
                return Err(ModelError::DuplicateServiceType(a.id));
            }
        }
        Ok(Self { types })
    }

    /// Default catalog: eMBB at 10 ms and uRLLC at 1 ms.
    pub fn default_classes() -> Self {
        Self::new(vec![
            ServiceType::new(ServiceTypeId(0), "eMBB", 10.0, "green").unwrap(),
            ServiceType::new(ServiceTypeId(1), "uRLLC", 1.0, "red").unwrap(),
        ])
        .unwrap()
    }

    pub fn get(&self, id: ServiceTypeId) -> Option<&ServiceType> {
        self.types.iter().find(|t| t.id == id)
    }

    pub fn by_name(&self, name: &str) -> Option<&ServiceType> {
        self.types.iter().find(|t| t.name == name)
    }

    pub fn latency_budget_ms(&self, id: ServiceTypeId) -> Option<f64> {
        self.get(id).map(|t| t.latency_budget_ms)
    }

    pub fn iter(&self) -> impl Iterator<Item = &ServiceType> {
        self.types.iter()
    }

    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }
}

/// One user demand: where it originates, what class it needs, how much
/// traffic it carries, what the user offers to pay, and when it is active.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub id: RequestId,
    pub origin: NodeId,
    pub service_type: ServiceTypeId,
    pub traffic_gbps: f64,
    pub bid: f64,
    /// First active timeslot (inclusive).
    pub arrival: u32,
    /// Last active timeslot (inclusive).
    pub departure: u32,
}

impl Request {
    pub fn new(
        id: RequestId,
        origin: NodeId,
        service_type: ServiceTypeId,
        traffic_gbps: f64,
        bid: f64,
        arrival: u32,
        departure: u32,
    ) -> Result<Self, ModelError> {
        if finite(traffic_gbps)? <= 0.0 {
            return Err(ModelError::NonPositiveTraffic(traffic_gbps));
        }
        if finite(bid)? < 0.0 {
            return Err(ModelError::NegativeBid(bid));
        }
        if arrival > departure {
            return Err(ModelError::InvertedWindow {
                arrival,
                departure,
            });
        }
        Ok(Self {
            id,
            origin,
            service_type,
            traffic_gbps,
            bid,
            arrival,
            departure,
        })
    }
}

/// Returns whether `request` is active at slot `t`, i.e. `arrival <= t <= departure`.
pub fn is_active(request: &Request, t: u32) -> bool {
    request.arrival <= t && t <= request.departure
}

/// Who currently holds a slice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SliceOwner {
    /// Unsold, still in the operator's inventory.
    Mno,
    Mvno(MvnoId),
}

/// A sellable capacity unit: origin node, service class, capacity, owner,
/// and the floor price applied when charging its buyers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Slice {
    pub id: SliceId,
    pub origin: NodeId,
    pub service_type: ServiceTypeId,
    pub capacity_gbps: f64,
    pub owner: SliceOwner,
    pub base_price: f64,
}

impl Slice {
    pub fn new(
        id: SliceId,
        origin: NodeId,
        service_type: ServiceTypeId,
        capacity_gbps: f64,
        owner: SliceOwner,
        base_price: f64,
    ) -> Result<Self, ModelError> {
        if finite(capacity_gbps)? <= 0.0 {
            return Err(ModelError::NonPositiveCapacity(capacity_gbps));
        }
        if finite(base_price)? < 0.0 {
            return Err(ModelError::NegativeBasePrice(base_price));
        }
        Ok(Self {
            id,
            origin,
            service_type,
            capacity_gbps,
            owner,
            base_price,
        })
    }
}

/// Returns whether `slice` can serve `request`: origin node and service
/// type must both match.
pub fn compatible(request: &Request, slice: &Slice) -> bool {
    slice.origin == request.origin && slice.service_type == request.service_type
}

/// How an MVNO quotes counter-prices to users in the pair-bid market.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CounterBidPolicy {
    /// One fixed price per request, independent of its size.
    Flat { price: f64 },
    /// Price proportional to traffic: `unit_cost * traffic / (1 - resale_gain)`.
    CostMarkup { unit_cost: f64 },
}

impl CounterBidPolicy {
    pub fn validate(&self) -> Result<(), ModelError> {
        let p = match self {
            CounterBidPolicy::Flat { price } => *price,
            CounterBidPolicy::CostMarkup { unit_cost } => *unit_cost,
        };
        if finite(p)? < 0.0 {
            return Err(ModelError::NegativeCounterPrice(p));
        }
        Ok(())
    }
}

/// Resale behaviour of one MVNO: which fraction of user payments it keeps,
/// how much total traffic it may carry, and how it quotes counter-bids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MvnoProfile {
    pub id: MvnoId,
    pub name: String,
    /// Fraction of user payments retained as profit, in `[0, 1)`.
    pub resale_gain: f64,
    /// Aggregate traffic bound over all slices held by this MVNO (Gbps).
    pub capacity_bound_gbps: f64,
    pub counter_bid_policy: CounterBidPolicy,
}

impl MvnoProfile {
    pub fn new(
        id: MvnoId,
        name: impl Into<String>,
        resale_gain: f64,
        capacity_bound_gbps: f64,
        counter_bid_policy: CounterBidPolicy,
    ) -> Result<Self, ModelError> {
        if !(0.0..1.0).contains(&finite(resale_gain)?) {
            return Err(ModelError::ResaleGainOutOfRange(resale_gain));
        }
        if finite(capacity_bound_gbps)? <= 0.0 {
            return Err(ModelError::NonPositiveCapacityBound(capacity_bound_gbps));
        }
        counter_bid_policy.validate()?;
        Ok(Self {
            id,
            name: name.into(),
            resale_gain,
            capacity_bound_gbps,
            counter_bid_policy,
        })
    }
}

/// A slot index bound to its horizon. Slots are dimensionless epochs; any
/// wall-clock duration attached to them is a billing label, not a model
/// property.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeslotIndex {
    pub t: u32,
    pub horizon: u32,
}

impl TimeslotIndex {
    pub fn new(t: u32, horizon: u32) -> Result<Self, ModelError> {
        if t >= horizon {
            return Err(ModelError::SlotOutOfHorizon { t, horizon });
        }
        Ok(Self { t, horizon })
    }
}
