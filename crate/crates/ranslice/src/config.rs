//! Scenario configuration: a versioned, human-editable TOML schema that
//! fully determines a run together with the seed.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    CounterBidPolicy, ModelError, MvnoId, MvnoProfile, ServiceCatalog, ServiceType, ServiceTypeId,
};
use crate::net::{GraphConfig, NetError};
use crate::upper::{NbWeights, UpperError};

pub const SCHEMA_VERSION: u32 = 1;

/// Base access price per service class.
pub type BasePriceTable = BTreeMap<ServiceTypeId, f64>;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("failed to parse config: {0}")]
    Parse(String),
    #[error("unsupported schema_version {0}, expected {SCHEMA_VERSION}")]
    SchemaVersion(u32),
    #[error("config invalid: {0}")]
    Invalid(String),
    #[error("unknown service type '{0}' referenced by {1}")]
    UnknownService(String, &'static str),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Upper(#[from] UpperError),
}

/// One service class entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceConfig {
    pub name: String,
    pub latency_budget_ms: f64,
    #[serde(default)]
    pub color: String,
}

/// Counter-bid policy, tagged by mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum CounterBidConfig {
    Flat { price: f64 },
    CostMarkup { unit_cost: f64 },
}

impl From<CounterBidConfig> for CounterBidPolicy {
    fn from(c: CounterBidConfig) -> Self {
        match c {
            CounterBidConfig::Flat { price } => CounterBidPolicy::Flat { price },
            CounterBidConfig::CostMarkup { unit_cost } => {
                CounterBidPolicy::CostMarkup { unit_cost }
            }
        }
    }
}

/// One MVNO entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MvnoConfig {
    pub name: String,
    pub resale_gain: f64,
    pub capacity_bound_gbps: f64,
    pub counter_bid: CounterBidConfig,
}

/// Closed range for uniform sampling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
}

/// Closed integer range of slot counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotRange {
    pub lo: u32,
    pub hi: u32,
}

/// How long requests stay, in slots past their arrival.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DurationConfig {
    /// `"static"`: every request spans the rest of the horizon.
    Keyword(StaticKeyword),
    /// Uniform over `[lo, hi]` additional slots.
    Uniform { lo: u32, hi: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StaticKeyword {
    Static,
}

/// Request generator parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequestGenConfig {
    pub per_slot: u32,
    pub traffic_gbps: Range,
    /// User bids are `unit_price * traffic`.
    pub unit_price: Range,
    pub duration: DurationConfig,
    /// Duration used when a run is switched to dynamic mode.
    pub dynamic_duration: SlotRange,
    /// (service name, probability) pairs; probabilities must sum to 1.
    pub type_mix: Vec<(String, f64)>,
}

impl Default for RequestGenConfig {
    fn default() -> Self {
        Self {
            per_slot: 12,
            traffic_gbps: Range { lo: 0.5, hi: 5.0 },
            unit_price: Range { lo: 10.0, hi: 30.0 },
            duration: DurationConfig::Keyword(StaticKeyword::Static),
            dynamic_duration: SlotRange { lo: 1, hi: 5 },
            type_mix: vec![("eMBB".into(), 0.5), ("uRLLC".into(), 0.5)],
        }
    }
}

/// What the operator offers each round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogConfig {
    /// Capacity variants offered per (node, service type) with demand.
    pub variants_gbps: Vec<f64>,
}

impl Default for CatalogConfig {
    fn default() -> Self {
        Self {
            variants_gbps: vec![1.0, 2.0, 5.0, 10.0],
        }
    }
}

/// Base access prices per service name, per market level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PricingConfig {
    pub upper_base: Vec<(String, f64)>,
    pub lower_base: Vec<(String, f64)>,
}

impl Default for PricingConfig {
    fn default() -> Self {
        Self {
            upper_base: vec![("eMBB".into(), 5.0), ("uRLLC".into(), 5.0)],
            lower_base: vec![("eMBB".into(), 2.0), ("uRLLC".into(), 2.0)],
        }
    }
}

/// Normalized-benefit weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightsConfig {
    pub w1: f64,
    pub w2: f64,
    pub lambda_ref_gbps: f64,
    pub t_ref_ms: f64,
}

impl Default for WeightsConfig {
    fn default() -> Self {
        Self {
            w1: 1.0,
            w2: 1.0,
            lambda_ref_gbps: 1.0,
            t_ref_ms: 1.0,
        }
    }
}

/// Where the `CostMarkup` unit cost comes from each slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CounterCostMode {
    /// The configured `unit_cost` as-is.
    Fixed,
    /// The MVNO's cumulative upper-level payments per acquired Gbps.
    Amortized,
}

/// Simulation-level knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub horizon: u32,
    pub seed: u64,
    /// Resale-gain preset applied to the MVNOs in order; `none` keeps the
    /// per-MVNO `resale_gain` values.
    pub resale_profile: Option<ResaleProfile>,
    pub counter_cost_mode: CounterCostMode,
    /// When true, a served request's bid is recognized every active slot
    /// instead of once at admission.
    pub per_slot_payment: bool,
    /// Slots a sold slice stays open to new admissions; 0 means until the
    /// end of the horizon.
    pub lease_slots: u32,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            horizon: 10,
            seed: 1,
            resale_profile: Some(ResaleProfile::R1),
            counter_cost_mode: CounterCostMode::Fixed,
            per_slot_payment: false,
            lease_slots: 0,
        }
    }
}

/// The three shipped resale-gain presets for a three-MVNO market.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ResaleProfile {
    R1,
    R2,
    R3,
}

impl ResaleProfile {
    pub fn gains(&self) -> [f64; 3] {
        match self {
            ResaleProfile::R1 => [0.05, 0.10, 0.15],
            ResaleProfile::R2 => [0.15, 0.10, 0.05],
            ResaleProfile::R3 => [0.10, 0.20, 0.30],
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            ResaleProfile::R1 => "R1",
            ResaleProfile::R2 => "R2",
            ResaleProfile::R3 => "R3",
        }
    }
}

impl std::str::FromStr for ResaleProfile {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "R1" => Ok(ResaleProfile::R1),
            "R2" => Ok(ResaleProfile::R2),
            "R3" => Ok(ResaleProfile::R3),
            other => Err(format!("unknown resale profile '{other}'")),
        }
    }
}

/// The full scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    pub schema_version: u32,
    pub graph: GraphConfig,
    pub services: Vec<ServiceConfig>,
    pub mvnos: Vec<MvnoConfig>,
    pub request_gen: RequestGenConfig,
    pub catalog: CatalogConfig,
    pub pricing: PricingConfig,
    pub weights: WeightsConfig,
    pub sim: SimConfig,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            graph: GraphConfig::default(),
            services: vec![
                ServiceConfig {
                    name: "eMBB".into(),
                    latency_budget_ms: 10.0,
                    color: "green".into(),
                },
                ServiceConfig {
                    name: "uRLLC".into(),
                    latency_budget_ms: 1.0,
                    color: "red".into(),
                },
            ],
            mvnos: (1..=3)
                .map(|i| MvnoConfig {
                    name: format!("mvno{i}"),
                    resale_gain: 0.05 * i as f64,
                    capacity_bound_gbps: 200.0,
                    counter_bid: CounterBidConfig::CostMarkup { unit_cost: 2.0 },
                })
                .collect(),
            request_gen: RequestGenConfig::default(),
            catalog: CatalogConfig::default(),
            pricing: PricingConfig::default(),
            weights: WeightsConfig::default(),
            sim: SimConfig::default(),
        }
    }
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let config: Config =
            toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(ConfigError::SchemaVersion(self.schema_version));
        }
        if self.services.is_empty() {
            return Err(ConfigError::Invalid("at least one service type".into()));
        }
        if self.mvnos.is_empty() {
            return Err(ConfigError::Invalid("at least one MVNO".into()));
        }
        if self.sim.horizon < 1 {
            return Err(ConfigError::Invalid("horizon must be >= 1".into()));
        }
        if self.request_gen.traffic_gbps.lo <= 0.0
            || self.request_gen.traffic_gbps.hi < self.request_gen.traffic_gbps.lo
        {
            return Err(ConfigError::Invalid(
                "traffic range needs 0 < lo <= hi".into(),
            ));
        }
        if self.request_gen.unit_price.lo < 0.0
            || self.request_gen.unit_price.hi < self.request_gen.unit_price.lo
        {
            return Err(ConfigError::Invalid(
                "unit price range needs 0 <= lo <= hi".into(),
            ));
        }
        let mix_sum: f64 = self.request_gen.type_mix.iter().map(|(_, p)| p).sum();
        if (mix_sum - 1.0).abs() > 1e-9 || self.request_gen.type_mix.iter().any(|(_, p)| *p < 0.0)
        {
            return Err(ConfigError::Invalid("type_mix must sum to 1".into()));
        }
        if self.catalog.variants_gbps.is_empty()
            || self.catalog.variants_gbps.iter().any(|v| *v <= 0.0)
        {
            return Err(ConfigError::Invalid(
                "catalog needs positive capacity variants".into(),
            ));
        }
        if self.sim.resale_profile.is_some() && self.mvnos.len() != 3 {
            return Err(ConfigError::Invalid(
                "resale profiles apply to exactly 3 MVNOs".into(),
            ));
        }
        // Cross-references and value invariants resolve in the builders.
        self.service_catalog()?;
        self.mvno_profiles()?;
        self.nb_weights()?;
        self.base_prices()?;
        Ok(())
    }

    /// Builds the service catalog, assigning ids in declaration order.
    pub fn service_catalog(&self) -> Result<ServiceCatalog, ConfigError> {
        let mut types = Vec::new();
        for (i, s) in self.services.iter().enumerate() {
            types.push(ServiceType::new(
                ServiceTypeId(i as u16),
                s.name.clone(),
                s.latency_budget_ms,
                s.color.clone(),
            )?);
        }
        Ok(ServiceCatalog::new(types)?)
    }

    /// Builds MVNO profiles, applying the resale profile when set.
    pub fn mvno_profiles(&self) -> Result<Vec<MvnoProfile>, ConfigError> {
        let gains: Option<[f64; 3]> = self.sim.resale_profile.map(|p| p.gains());
        self.mvnos
            .iter()
            .enumerate()
            .map(|(i, m)| {
                let gain = match gains {
                    Some(g) => g[i],
                    None => m.resale_gain,
                };
                Ok(MvnoProfile::new(
                    MvnoId(i as u16),
                    m.name.clone(),
                    gain,
                    m.capacity_bound_gbps,
                    m.counter_bid.into(),
                )?)
            })
            .collect()
    }

    pub fn nb_weights(&self) -> Result<NbWeights, ConfigError> {
        let mut w = NbWeights::new(self.weights.w1, self.weights.w2)?;
        if self.weights.lambda_ref_gbps <= 0.0 || self.weights.t_ref_ms <= 0.0 {
            return Err(ConfigError::Invalid(
                "reference scales must be positive".into(),
            ));
        }
        w.lambda_ref_gbps = self.weights.lambda_ref_gbps;
        w.t_ref_ms = self.weights.t_ref_ms;
        Ok(w)
    }

    /// Resolves the two per-service base-price tables (upper, lower).
    pub fn base_prices(&self) -> Result<(BasePriceTable, BasePriceTable), ConfigError> {
        let catalog = self.service_catalog()?;
        let resolve = |entries: &[(String, f64)],
                       what: &'static str|
         -> Result<BasePriceTable, ConfigError> {
            let mut table = BTreeMap::new();
            for (name, price) in entries {
                let ty = catalog
                    .by_name(name)
                    .ok_or_else(|| ConfigError::UnknownService(name.clone(), what))?;
                if *price < 0.0 {
                    return Err(ConfigError::Invalid(format!(
                        "base price for {name} must be nonnegative"
                    )));
                }
                table.insert(ty.id, *price);
            }
            // Unlisted services default to a zero floor.
            for ty in catalog.iter() {
                table.entry(ty.id).or_insert(0.0);
            }
            Ok(table)
        };
        Ok((
            resolve(&self.pricing.upper_base, "pricing.upper_base")?,
            resolve(&self.pricing.lower_base, "pricing.lower_base")?,
        ))
    }

    /// Resolves the request-type mix to service ids.
    pub fn resolved_type_mix(&self) -> Result<Vec<(ServiceTypeId, f64)>, ConfigError> {
        let catalog = self.service_catalog()?;
        self.request_gen
            .type_mix
            .iter()
            .map(|(name, p)| {
                catalog
                    .by_name(name)
                    .map(|ty| (ty.id, *p))
                    .ok_or_else(|| ConfigError::UnknownService(name.clone(), "type_mix"))
            })
            .collect()
    }
}
