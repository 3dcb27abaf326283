//! Route and situation feature model.
//!
//! A route in a situation is described by a 59-dimensional feature vector:
//!
//! - components `0..36`: binary mode-weather indicators. Indicator
//!   `mode_index * 6 + weather_index` is 1 exactly when the route uses that
//!   transport mode and the situation is in that weather state. Their
//!   weighted sum is the mode/weather alternative-specific constant of the
//!   route utility.
//! - components `36..59`: quantitative route features (distances, times,
//!   costs, counts), in the order listed in [`quant::NAMES`].
//!
//! The total route utility is the plain dot product of the feature vector
//! with a 59-dimensional user profile. The layout is frozen; the JSON wire
//! format for a feature vector is an array of 59 numbers. See
//! `docs/feature-schema.md` for the full index table.

use std::collections::BTreeSet;
use std::ops::Deref;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of transport modes.
pub const NUM_MODES: usize = 6;
/// Number of weather states (precipitation x temperature band).
pub const NUM_WEATHER_STATES: usize = 6;
/// Number of mode-weather indicator components.
pub const NUM_INDICATORS: usize = NUM_MODES * NUM_WEATHER_STATES;
/// Number of quantitative route features.
pub const NUM_QUANTITATIVE: usize = 23;
/// Total feature-vector dimension.
pub const FEATURE_DIM: usize = NUM_INDICATORS + NUM_QUANTITATIVE;

/// Transport modes, in frozen index order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    CarDriving,
    CarSharing,
    Cycling,
    BikeSharing,
    Walking,
    PublicTransport,
}

impl Mode {
    pub const ALL: [Mode; NUM_MODES] = [
        Mode::CarDriving,
        Mode::CarSharing,
        Mode::Cycling,
        Mode::BikeSharing,
        Mode::Walking,
        Mode::PublicTransport,
    ];

    pub fn index(self) -> usize {
        match self {
            Mode::CarDriving => 0,
            Mode::CarSharing => 1,
            Mode::Cycling => 2,
            Mode::BikeSharing => 3,
            Mode::Walking => 4,
            Mode::PublicTransport => 5,
        }
    }

}

/// Binary precipitation forecast.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precipitation {
    /// No precipitation chance.
    None,
    /// High chance of rainfall or snowfall.
    High,
}

impl Precipitation {
    pub fn index(self) -> usize {
        match self {
            Precipitation::None => 0,
            Precipitation::High => 1,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Precipitation::None => Precipitation::High,
            Precipitation::High => Precipitation::None,
        }
    }
}

/// Temperature band. The bands are abstract categorical labels; no numeric
/// cutoffs are attached to them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TemperatureBand {
    Low,
    Medium,
    High,
}

impl TemperatureBand {
    pub const ALL: [TemperatureBand; 3] =
        [TemperatureBand::Low, TemperatureBand::Medium, TemperatureBand::High];

    pub fn index(self) -> usize {
        match self {
            TemperatureBand::Low => 0,
            TemperatureBand::Medium => 1,
            TemperatureBand::High => 2,
        }
    }
}

/// Environmental conditions of one choice situation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Situation {
    pub precipitation: Precipitation,
    pub temperature: TemperatureBand,
}

impl Situation {
    pub fn new(precipitation: Precipitation, temperature: TemperatureBand) -> Self {
        Situation {
            precipitation,
            temperature,
        }
    }

    /// Index of this situation among the six weather states
    /// (`precipitation * 3 + temperature`).
    pub fn weather_index(self) -> usize {
        self.precipitation.index() * 3 + self.temperature.index()
    }

    /// Same temperature band, opposite precipitation forecast.
    pub fn with_flipped_precipitation(self) -> Self {
        Situation {
            precipitation: self.precipitation.flipped(),
            temperature: self.temperature,
        }
    }

    /// All six weather states, in weather-index order.
    pub fn all() -> impl Iterator<Item = Situation> {
        [Precipitation::None, Precipitation::High]
            .into_iter()
            .flat_map(|p| TemperatureBand::ALL.into_iter().map(move |t| Situation::new(p, t)))
    }
}

/// Frozen indices of the quantitative features, relative to the quantitative
/// block (add [`NUM_INDICATORS`] for the absolute feature-vector index).
pub mod quant {
    // Distance features (km).
    pub const CAR_DISTANCE: usize = 0;
    pub const CAR_MAIN_ROAD_DISTANCE: usize = 1;
    pub const WALK_DISTANCE: usize = 2;
    pub const BIKE_DISTANCE: usize = 3;
    pub const BIKE_INFRASTRUCTURE_DISTANCE: usize = 4;
    // Time features (minutes).
    pub const WALK_TIME: usize = 5;
    pub const BIKE_TIME: usize = 6;
    pub const DRIVE_TIME: usize = 7;
    pub const PT_ACCESS_WALK_TIME: usize = 8;
    pub const PT_EGRESS_WALK_TIME: usize = 9;
    pub const PT_WAIT_TIME: usize = 10;
    pub const BUS_TIME: usize = 11;
    pub const TRAM_TIME: usize = 12;
    pub const METRO_TIME: usize = 13;
    pub const SWITCH_OR_PARK_TIME: usize = 14;
    // Cost features (euros).
    pub const DRIVING_COST: usize = 15;
    pub const PARKING_COST: usize = 16;
    pub const PT_RIDE_COST: usize = 17;
    // Miscellaneous features.
    pub const MODE_CHANGES: usize = 18;
    pub const BIKE_UPHILL_GAP: usize = 19;
    pub const BUS_STOPS: usize = 20;
    pub const TRAM_STOPS: usize = 21;
    pub const METRO_STOPS: usize = 22;

    /// Human-readable names, in index order.
    pub const NAMES: [&str; super::NUM_QUANTITATIVE] = [
        "car_distance_km",
        "car_main_road_distance_km",
        "walk_distance_km",
        "bike_distance_km",
        "bike_infrastructure_distance_km",
        "walk_time_min",
        "bike_time_min",
        "drive_time_min",
        "pt_access_walk_time_min",
        "pt_egress_walk_time_min",
        "pt_wait_time_min",
        "bus_time_min",
        "tram_time_min",
        "metro_time_min",
        "switch_or_park_time_min",
        "driving_cost_eur",
        "parking_cost_eur",
        "pt_ride_cost_eur",
        "mode_changes",
        "bike_uphill_gap_m",
        "bus_stops",
        "tram_stops",
        "metro_stops",
    ];
}

/// Modes that must be present in a route for a quantitative feature to be
/// non-zero, or `None` when the feature applies to any route.
fn required_modes(index: usize) -> Option<&'static [Mode]> {
    const CAR: &[Mode] = &[Mode::CarDriving, Mode::CarSharing];
    const BIKE: &[Mode] = &[Mode::Cycling, Mode::BikeSharing];
    const WALK: &[Mode] = &[Mode::Walking];
    const PT: &[Mode] = &[Mode::PublicTransport];
    match index {
        quant::CAR_DISTANCE
        | quant::CAR_MAIN_ROAD_DISTANCE
        | quant::DRIVE_TIME
        | quant::DRIVING_COST
        | quant::PARKING_COST => Some(CAR),
        quant::WALK_DISTANCE | quant::WALK_TIME => Some(WALK),
        quant::BIKE_DISTANCE
        | quant::BIKE_INFRASTRUCTURE_DISTANCE
        | quant::BIKE_TIME
        | quant::BIKE_UPHILL_GAP => Some(BIKE),
        quant::PT_ACCESS_WALK_TIME
        | quant::PT_EGRESS_WALK_TIME
        | quant::PT_WAIT_TIME
        | quant::BUS_TIME
        | quant::TRAM_TIME
        | quant::METRO_TIME
        | quant::PT_RIDE_COST
        | quant::BUS_STOPS
        | quant::TRAM_STOPS
        | quant::METRO_STOPS => Some(PT),
        _ => None,
    }
}

/// Attribute values of one edge, one entry per basis cost function.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeAttributes {
    values: Vec<f64>,
}

impl EdgeAttributes {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::config(
                "edge attributes must be finite and non-negative",
            ));
        }
        Ok(EdgeAttributes { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// A set of scalar basis cost functions mapping an edge attribute to a
/// non-negative cost contribution. Defaults to the identity in every
/// component; arbitrary non-linear functions are accepted.
pub struct BasisFunctions {
    functions: Vec<Box<dyn Fn(f64) -> f64 + Send + Sync>>,
}

impl BasisFunctions {
    pub fn new(functions: Vec<Box<dyn Fn(f64) -> f64 + Send + Sync>>) -> Self {
        BasisFunctions { functions }
    }

    /// `m` identity basis functions (linear edge costs).
    pub fn identity(m: usize) -> Self {
        BasisFunctions {
            functions: (0..m)
                .map(|_| Box::new(|z: f64| z) as Box<dyn Fn(f64) -> f64 + Send + Sync>)
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn apply(&self, j: usize, z: f64) -> f64 {
        (self.functions[j])(z)
    }
}

/// Description of a route: which modes it uses and its quantitative features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteDescriptor {
    modes: BTreeSet<Mode>,
    quantitative: Vec<f64>,
}

impl RouteDescriptor {
    pub fn new(modes: BTreeSet<Mode>, quantitative: Vec<f64>) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::config("a route must use at least one mode"));
        }
        if quantitative.len() != NUM_QUANTITATIVE {
            return Err(Error::dimension(
                "route quantitative features",
                NUM_QUANTITATIVE,
                quantitative.len(),
            ));
        }
        for (j, &value) in quantitative.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::config(format!(
                    "quantitative feature '{}' must be finite and non-negative, got {value}",
                    quant::NAMES[j]
                )));
            }
            if value > 0.0 {
                if let Some(required) = required_modes(j) {
                    if !required.iter().any(|m| modes.contains(m)) {
                        return Err(Error::config(format!(
                            "feature '{}' is non-zero but none of its modes are used",
                            quant::NAMES[j]
                        )));
                    }
                }
            }
        }
        Ok(RouteDescriptor {
            modes,
            quantitative,
        })
    }

    pub fn modes(&self) -> &BTreeSet<Mode> {
        &self.modes
    }

    pub fn quantitative(&self) -> &[f64] {
        &self.quantitative
    }
}

/// 59-dimensional description of one route in one situation.
///
/// Serialized as a JSON array of 59 numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(components: Vec<f64>) -> Result<Self> {
        if components.len() != FEATURE_DIM {
            return Err(Error::dimension(
                "feature vector",
                FEATURE_DIM,
                components.len(),
            ));
        }
        if components.iter().any(|c| !c.is_finite()) {
            return Err(Error::config("feature vector has non-finite components"));
        }
        let ones = components[..NUM_INDICATORS]
            .iter()
            .try_fold(0usize, |acc, &c| {
                if c == 0.0 {
                    Ok(acc)
                } else if c == 1.0 {
                    Ok(acc + 1)
                } else {
                    Err(Error::config(format!(
                        "indicator components must be 0 or 1, got {c}"
                    )))
                }
            })?;
        if ones > NUM_MODES {
            return Err(Error::config(format!(
                "at most {NUM_MODES} indicators may be set, got {ones}"
            )));
        }
        Ok(FeatureVector(components))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn indicators(&self) -> &[f64] {
        &self.0[..NUM_INDICATORS]
    }

    pub fn quantitative(&self) -> &[f64] {
        &self.0[NUM_INDICATORS..]
    }

    /// Difference vector `self - other`, the representation of a comparison.
    pub fn difference(&self, other: &FeatureVector) -> DVector<f64> {
        DVector::from_iterator(
            FEATURE_DIM,
            self.0.iter().zip(&other.0).map(|(a, b)| a - b),
        )
    }
}

impl TryFrom<Vec<f64>> for FeatureVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        FeatureVector::new(v)
    }
}

impl From<FeatureVector> for Vec<f64> {
    fn from(fv: FeatureVector) -> Vec<f64> {
        fv.0
    }
}

impl Deref for FeatureVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// A weight vector over features: the ground-truth profile of a simulated
/// user, or a point estimate produced by inference.
///
/// The dimension is not pinned here so that the estimators can be exercised
/// on low-dimensional synthetic problems; profiles used against
/// [`FeatureVector`]s must have dimension [`FEATURE_DIM`], which
/// [`route_utility`] enforces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct UserProfile(Vec<f64>);

impl UserProfile {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::config("profile weights must be finite"));
        }
        Ok(UserProfile(weights))
    }

    pub fn zeros(dim: usize) -> Self {
        UserProfile(vec![0.0; dim])
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

impl TryFrom<Vec<f64>> for UserProfile {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        UserProfile::new(v)
    }
}

impl From<UserProfile> for Vec<f64> {
    fn from(p: UserProfile) -> Vec<f64> {
        p.0
    }
}

impl Deref for UserProfile {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Cost of a single edge: the weighted sum of the basis functions applied
/// to the edge attributes.
pub fn edge_cost(edge: &EdgeAttributes, weights: &[f64], basis: &BasisFunctions) -> Result<f64> {
    if edge.len() != basis.len() {
        return Err(Error::dimension("edge attributes", basis.len(), edge.len()));
    }
    if weights.len() != basis.len() {
        return Err(Error::dimension("edge-cost weights", basis.len(), weights.len()));
    }
    Ok(edge
        .values()
        .iter()
        .enumerate()
        .map(|(j, &z)| weights[j] * basis.apply(j, z))
        .sum())
}

/// Accumulates per-edge attributes into route-level quantitative features:
/// component `j` is the sum over edges of `c_j(z_{i,j})`.
pub fn route_quantitative_from_edges(
    edges: &[EdgeAttributes],
    basis: &BasisFunctions,
) -> Result<Vec<f64>> {
    let mut accumulated = vec![0.0; basis.len()];
    for edge in edges {
        if edge.len() != basis.len() {
            return Err(Error::dimension("edge attributes", basis.len(), edge.len()));
        }
        for (j, &z) in edge.values().iter().enumerate() {
            accumulated[j] += basis.apply(j, z);
        }
    }
    Ok(accumulated)
}

/// The 36 mode-weather indicators of a route in a situation.
///
/// Indicator `(mode, weather)` is 1 exactly when the route uses `mode` and
/// the situation is in that weather state; indicators of every other weather
/// state are 0.
pub fn mode_weather_features(
    route: &RouteDescriptor,
    situation: Situation,
) -> [f64; NUM_INDICATORS] {
    let mut indicators = [0.0; NUM_INDICATORS];
    let weather = situation.weather_index();
    for mode in route.modes() {
        indicators[mode.index() * NUM_WEATHER_STATES + weather] = 1.0;
    }
    indicators
}

/// Assembles the full 59-dimensional feature vector of a route in a
/// situation.
pub fn feature_vector(route: &RouteDescriptor, situation: Situation) -> FeatureVector {
    let mut components = Vec::with_capacity(FEATURE_DIM);
    components.extend_from_slice(&mode_weather_features(route, situation));
    components.extend_from_slice(route.quantitative());
    FeatureVector::new(components).expect("route descriptor invariants imply a valid vector")
}

/// Total route utility: the dot product of profile weights and features
/// (mode-weather constant plus weighted quantitative features).
pub fn route_utility(fv: &FeatureVector, profile: &UserProfile) -> Result<f64> {
    if profile.dim() != FEATURE_DIM {
        return Err(Error::dimension("profile", FEATURE_DIM, profile.dim()));
    }
    Ok(fv.iter().zip(profile.iter()).map(|(f, w)| f * w).sum())
}

/// Expands a ranked triple of routes (best to worst) into the three binary
/// comparisons it implies, as difference vectors `preferred - rejected`:
/// `(1st,2nd)`, `(1st,3rd)`, `(2nd,3rd)`.
pub fn comparisons_from_ranking(ranked: [&FeatureVector; 3]) -> Result<[DVector<f64>; 3]> {
    for (i, a) in ranked.iter().enumerate() {
        for b in ranked.iter().skip(i + 1) {
            if a == b {
                return Err(Error::config(
                    "ranked routes must have distinct feature vectors",
                ));
            }
        }
    }
    Ok([
        ranked[0].difference(ranked[1]),
        ranked[0].difference(ranked[2]),
        ranked[1].difference(ranked[2]),
    ])
}
