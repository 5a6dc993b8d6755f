//! Scenario files: a TOML schema with explicit unit suffixes, validation,
//! and the two built-in presets.
//!
//! Quantities carry their unit in the string (`"46 dBm"`, `"[1, 0, 0] km"`)
//! and are converted to SI linear values at load time. Serializing a
//! [`Scenario`] writes SI values with enough digits to reload it exactly.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::GameKind;
use crate::netmodel::{noise_power, BaseStation, BsKind, Position, Radio, User};
use crate::units::{format_quantity, format_vector, parse_quantity, parse_vector, Dimension, UnitError};

pub const PRESET_NAMES: [&str; 2] = ["homogeneous-paper", "heterogeneous-paper"];

const HOMOGENEOUS_PAPER: &str = include_str!("../scenarios/homogeneous-paper.toml");
const HETEROGENEOUS_PAPER: &str = include_str!("../scenarios/heterogeneous-paper.toml");

/// Tolerance on Σ p = 1 for declared initial strategies.
pub const SIMPLEX_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("{path}: {source}")]
    Unit {
        path: String,
        #[source]
        source: UnitError,
    },
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ScenarioError> {
    Err(ScenarioError::Invalid(msg.into()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsDefaults {
    pub beta: f64,
    pub delta: f64,
    pub step: f64,
    pub horizon: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub kind: GameKind,
    pub base_stations: Vec<BaseStation>,
    /// For the homogeneous game: a single entry standing for the whole group.
    pub users: Vec<User>,
    /// Covered BS ids per user, in user order; this is also the choice order.
    pub coverage: Vec<Vec<String>>,
    /// Declared initial strategy per user; `None` means uniform over coverage.
    pub initial: Vec<Option<Vec<f64>>>,
    pub dynamics: DynamicsDefaults,
}

impl Scenario {
    pub fn station_index(&self, id: &str) -> Option<usize> {
        self.base_stations.iter().position(|b| b.id == id)
    }

    pub fn user_index(&self, id: &str) -> Option<usize> {
        self.users.iter().position(|u| u.id == id)
    }

    /// Co-channel group id → member BS ids, in declaration order.
    pub fn cochannel_sets(&self) -> BTreeMap<String, Vec<String>> {
        let mut sets: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for bs in &self.base_stations {
            if let Some(g) = bs.cochannel_group() {
                sets.entry(g.to_string()).or_default().push(bs.id.clone());
            }
        }
        sets
    }

    /// Initial strategy of user `i`, uniform over its coverage unless declared.
    pub fn initial_strategy(&self, i: usize) -> Vec<f64> {
        match &self.initial[i] {
            Some(p) => p.clone(),
            None => {
                let n = self.coverage[i].len();
                vec![1.0 / n as f64; n]
            }
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let mut ids = HashSet::new();
        for bs in &self.base_stations {
            if !ids.insert(bs.id.as_str()) {
                return invalid(format!("duplicate base station id {:?}", bs.id));
            }
            bs.validate().map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        }
        let mut user_ids = HashSet::new();
        for u in &self.users {
            if !user_ids.insert(u.id.as_str()) {
                return invalid(format!("duplicate user id {:?}", u.id));
            }
            u.position
                .validate()
                .map_err(|e| ScenarioError::Invalid(format!("user {}: {e}", u.id)))?;
        }
        if self.users.is_empty() {
            return invalid("at least one user is required");
        }
        if self.coverage.len() != self.users.len() || self.initial.len() != self.users.len() {
            return invalid("coverage and initial strategies must list every user");
        }
        for (i, user) in self.users.iter().enumerate() {
            let cov = &self.coverage[i];
            if cov.is_empty() {
                return invalid(format!("user {} is covered by no base station", user.id));
            }
            let mut seen = HashSet::new();
            for id in cov {
                let Some(b) = self.station_index(id) else {
                    return invalid(format!("user {}: coverage references unknown base station {id:?}", user.id));
                };
                if !seen.insert(id) {
                    return invalid(format!("user {}: base station {id:?} listed twice in coverage", user.id));
                }
                match user.net_value(id) {
                    Some(v) if v.is_finite() => {}
                    _ => return invalid(format!("user {}: missing or non-finite net value for {id:?}", user.id)),
                }
                let bs = &self.base_stations[b];
                if bs.kind() == BsKind::UavMmWave && !(bs.position.z > user.position.z) {
                    return invalid(format!("user {}: UAV {id} is not above the user", user.id));
                }
            }
            for (id, _) in &user.net_values {
                if !cov.contains(id) {
                    return invalid(format!("user {}: net value for {id:?}, which does not cover the user", user.id));
                }
            }
            for (id, angle) in &user.beam_offsets {
                match self.station_index(id).map(|b| self.base_stations[b].kind()) {
                    Some(BsKind::MmWave) if angle.is_finite() => {}
                    _ => return invalid(format!("user {}: beam offset for {id:?} needs a mmWave BS and a finite angle", user.id)),
                }
            }
            if let Some(p) = &self.initial[i] {
                if p.len() != cov.len() {
                    return invalid(format!(
                        "user {}: initial strategy has {} entries for {} covered BSs",
                        user.id,
                        p.len(),
                        cov.len()
                    ));
                }
                if p.iter().any(|v| !(0.0..=1.0).contains(v)) {
                    return invalid(format!("user {}: initial probabilities must lie in [0, 1]", user.id));
                }
                let sum: f64 = p.iter().sum();
                if (sum - 1.0).abs() > SIMPLEX_TOL {
                    return invalid(format!("user {}: initial strategy sums to {sum}, not 1", user.id));
                }
            }
        }
        if let GameKind::Homogeneous { group_size } = self.kind {
            if group_size == 0 {
                return invalid("group_size must be at least 1");
            }
            if self.users.len() != 1 {
                return invalid("a homogeneous scenario describes exactly one user group");
            }
            for kind in [BsKind::Uhf, BsKind::MmWave, BsKind::UavMmWave] {
                let n = self.base_stations.iter().filter(|b| b.kind() == kind).count();
                if n != 1 {
                    return invalid(format!("a homogeneous scenario needs exactly one {} BS, found {n}", kind.label()));
                }
            }
            if self.coverage[0].len() != self.base_stations.len() {
                return invalid("the homogeneous group must be covered by all three BSs");
            }
        }
        let d = &self.dynamics;
        if !(d.beta > 0.0 && d.beta < 2.0) {
            return invalid(format!("dynamics.beta {} outside (0, 2)", d.beta));
        }
        if !d.delta.is_finite() {
            return invalid("dynamics.delta must be finite");
        }
        if !(d.step > 0.0 && d.step.is_finite()) || !(d.horizon > 0.0 && d.horizon.is_finite()) {
            return invalid("dynamics.step and dynamics.horizon must be positive");
        }
        Ok(())
    }

    /// Writes the scenario back to the TOML schema using SI units.
    pub fn to_toml(&self) -> String {
        let raw = RawScenario::from_scenario(self);
        toml::to_string(&raw).expect("scenario serializes")
    }
}

/// Geometric coverage of `user`: the nearest UHF BS, every mmWave BS within
/// its LOS radius, and every UAV whose downward cone contains the user.
/// Presets pin the result of this rule rather than calling it at load.
pub fn derive_coverage(stations: &[BaseStation], user: &User) -> Vec<String> {
    let mut covered = Vec::new();
    let nearest_uhf = stations
        .iter()
        .filter(|b| b.kind() == BsKind::Uhf)
        .min_by(|a, b| a.position.distance(&user.position).total_cmp(&b.position.distance(&user.position)));
    if let Some(b) = nearest_uhf {
        covered.push(b.id.clone());
    }
    for b in stations {
        let inside = match &b.radio {
            Radio::MmWave { los_radius, .. } => b.position.distance(&user.position) <= *los_radius,
            Radio::UavMmWave { half_beamwidth, .. } => {
                crate::netmodel::uav_antenna_gain(&b.position, &user.position, *half_beamwidth, 1.0).is_ok_and(|g| g > 0.0)
            }
            Radio::Uhf { .. } => false,
        };
        if inside {
            covered.push(b.id.clone());
        }
    }
    covered
}

/// Scenario plus the exact bytes it was parsed from.
#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub scenario: Scenario,
    /// Preset name or file path.
    pub origin: String,
    pub source: Vec<u8>,
}

/// Source text of a built-in preset.
pub fn preset_source(name: &str) -> Option<&'static str> {
    match name {
        "homogeneous-paper" => Some(HOMOGENEOUS_PAPER),
        "heterogeneous-paper" => Some(HETEROGENEOUS_PAPER),
        _ => None,
    }
}

/// Loads a preset by name, otherwise reads `name_or_path` as a file.
pub fn load_scenario(name_or_path: &str) -> Result<LoadedScenario, ScenarioError> {
    let source = match preset_source(name_or_path) {
        Some(text) => text.as_bytes().to_vec(),
        None => std::fs::read(Path::new(name_or_path)).map_err(|source| ScenarioError::Io {
            path: name_or_path.to_string(),
            source,
        })?,
    };
    let text = std::str::from_utf8(&source).map_err(|e| ScenarioError::Schema(format!("not UTF-8: {e}")))?;
    let scenario = parse_scenario(text)?;
    Ok(LoadedScenario {
        scenario,
        origin: name_or_path.to_string(),
        source,
    })
}

/// Parses and validates scenario TOML text.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let raw: RawScenario = toml::from_str(text).map_err(|e| ScenarioError::Schema(e.to_string()))?;
    let scenario = raw.into_scenario()?;
    scenario.validate()?;
    Ok(scenario)
}

// ---- on-disk schema ----

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: String,
    game: RawGame,
    dynamics: RawDynamics,
    #[serde(rename = "base_station")]
    base_stations: Vec<RawStation>,
    #[serde(rename = "user")]
    users: Vec<RawUser>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGame {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    group_size: Option<u32>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDynamics {
    beta: f64,
    delta: f64,
    step: String,
    horizon: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
enum RawStation {
    #[serde(rename = "uhf")]
    Uhf {
        id: String,
        position: String,
        tx_power: String,
        bandwidth: String,
        carrier_freq: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        noise_power: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        noise_figure: Option<String>,
        path_loss_exponent: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cochannel_group: Option<String>,
    },
    #[serde(rename = "mmwave")]
    MmWave {
        id: String,
        position: String,
        tx_power: String,
        bandwidth: String,
        carrier_freq: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        noise_power: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        noise_figure: Option<String>,
        main_lobe_gain: String,
        side_lobe_gain: String,
        /// full main-lobe width θ^S_m
        beamwidth: String,
        los_area_fraction: f64,
        los_radius: String,
        exponent_los: f64,
        exponent_nlos: f64,
    },
    #[serde(rename = "uav")]
    Uav {
        id: String,
        position: String,
        tx_power: String,
        bandwidth: String,
        carrier_freq: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        noise_power: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        noise_figure: Option<String>,
        gain: String,
        /// full half-power beamwidth θ^S_a
        beamwidth: String,
        env_b: f64,
        env_c: f64,
        path_loss_exponent: f64,
    },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawUser {
    id: String,
    position: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    uhf_antenna_gain: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    coverage: Option<Vec<String>>,
    net_values: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    initial: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    beam_offsets: BTreeMap<String, String>,
}

struct Field {
    path: String,
}

impl Field {
    fn new(path: String) -> Self {
        Self { path }
    }

    fn scalar(&self, key: &str, input: &str, dim: Dimension) -> Result<f64, ScenarioError> {
        parse_quantity(input, dim).map_err(|source| ScenarioError::Unit {
            path: format!("{}.{key}", self.path),
            source,
        })
    }

    fn position(&self, input: &str) -> Result<Position, ScenarioError> {
        let v = parse_vector(input, Dimension::Length).map_err(|source| ScenarioError::Unit {
            path: format!("{}.position", self.path),
            source,
        })?;
        Position::from_slice(&v)
            .ok_or_else(|| ScenarioError::Schema(format!("{}.position: expected 3 components, got {}", self.path, v.len())))
    }
}

struct CommonFields {
    id: String,
    position: Position,
    tx_power: f64,
    bandwidth: f64,
    carrier_freq: f64,
    noise_power: f64,
}

#[allow(clippy::too_many_arguments)]
fn common_fields(
    f: &Field,
    id: &str,
    position: &str,
    tx_power: &str,
    bandwidth: &str,
    carrier_freq: &str,
    noise: &Option<String>,
    figure: &Option<String>,
) -> Result<CommonFields, ScenarioError> {
    let bandwidth = f.scalar("bandwidth", bandwidth, Dimension::Frequency)?;
    let noise_power = match (noise, figure) {
        (Some(p), None) => f.scalar("noise_power", p, Dimension::Power)?,
        (None, Some(nf)) => {
            let nf = f.scalar("noise_figure", nf, Dimension::Gain)?;
            noise_power(bandwidth, crate::units::linear_to_db(nf))
                .map_err(|e| ScenarioError::Invalid(format!("{}: {e}", f.path)))?
        }
        _ => {
            return Err(ScenarioError::Schema(format!(
                "{}: exactly one of noise_power and noise_figure is required",
                f.path
            )))
        }
    };
    Ok(CommonFields {
        id: id.to_string(),
        position: f.position(position)?,
        tx_power: f.scalar("tx_power", tx_power, Dimension::Power)?,
        bandwidth,
        carrier_freq: f.scalar("carrier_freq", carrier_freq, Dimension::Frequency)?,
        noise_power,
    })
}

impl RawStation {
    fn into_station(self, index: usize) -> Result<BaseStation, ScenarioError> {
        let f = Field::new(format!("base_station[{index}]"));
        let (common, radio) = match &self {
            RawStation::Uhf {
                id,
                position,
                tx_power,
                bandwidth,
                carrier_freq,
                noise_power,
                noise_figure,
                path_loss_exponent,
                cochannel_group,
            } => (
                common_fields(&f, id, position, tx_power, bandwidth, carrier_freq, noise_power, noise_figure)?,
                Radio::Uhf {
                    path_loss_exponent: *path_loss_exponent,
                    cochannel_group: cochannel_group.clone(),
                },
            ),
            RawStation::MmWave {
                id,
                position,
                tx_power,
                bandwidth,
                carrier_freq,
                noise_power,
                noise_figure,
                main_lobe_gain,
                side_lobe_gain,
                beamwidth,
                los_area_fraction,
                los_radius,
                exponent_los,
                exponent_nlos,
            } => (
                common_fields(&f, id, position, tx_power, bandwidth, carrier_freq, noise_power, noise_figure)?,
                Radio::MmWave {
                    main_lobe_gain: f.scalar("main_lobe_gain", main_lobe_gain, Dimension::Gain)?,
                    side_lobe_gain: f.scalar("side_lobe_gain", side_lobe_gain, Dimension::Gain)?,
                    half_beamwidth: f.scalar("beamwidth", beamwidth, Dimension::Angle)? / 2.0,
                    los_area_fraction: *los_area_fraction,
                    los_radius: f.scalar("los_radius", los_radius, Dimension::Length)?,
                    exponent_los: *exponent_los,
                    exponent_nlos: *exponent_nlos,
                },
            ),
            RawStation::Uav {
                id,
                position,
                tx_power,
                bandwidth,
                carrier_freq,
                noise_power,
                noise_figure,
                gain,
                beamwidth,
                env_b,
                env_c,
                path_loss_exponent,
            } => (
                common_fields(&f, id, position, tx_power, bandwidth, carrier_freq, noise_power, noise_figure)?,
                Radio::UavMmWave {
                    gain: f.scalar("gain", gain, Dimension::Gain)?,
                    half_beamwidth: f.scalar("beamwidth", beamwidth, Dimension::Angle)? / 2.0,
                    env_b: *env_b,
                    env_c: *env_c,
                    path_loss_exponent: *path_loss_exponent,
                },
            ),
        };
        Ok(BaseStation {
            id: common.id,
            position: common.position,
            tx_power: common.tx_power,
            bandwidth: common.bandwidth,
            carrier_freq: common.carrier_freq,
            noise_power: common.noise_power,
            radio,
        })
    }

    fn from_station(bs: &BaseStation) -> Self {
        let id = bs.id.clone();
        let p = &bs.position;
        let position = format_vector(&[p.x, p.y, p.z], Dimension::Length);
        let tx_power = format_quantity(bs.tx_power, Dimension::Power);
        let bandwidth = format_quantity(bs.bandwidth, Dimension::Frequency);
        let carrier_freq = format_quantity(bs.carrier_freq, Dimension::Frequency);
        let noise_power = Some(format_quantity(bs.noise_power, Dimension::Power));
        match &bs.radio {
            Radio::Uhf {
                path_loss_exponent,
                cochannel_group,
            } => RawStation::Uhf {
                id,
                position,
                tx_power,
                bandwidth,
                carrier_freq,
                noise_power,
                noise_figure: None,
                path_loss_exponent: *path_loss_exponent,
                cochannel_group: cochannel_group.clone(),
            },
            Radio::MmWave {
                main_lobe_gain,
                side_lobe_gain,
                half_beamwidth,
                los_area_fraction,
                los_radius,
                exponent_los,
                exponent_nlos,
            } => RawStation::MmWave {
                id,
                position,
                tx_power,
                bandwidth,
                carrier_freq,
                noise_power,
                noise_figure: None,
                main_lobe_gain: format_quantity(*main_lobe_gain, Dimension::Gain),
                side_lobe_gain: format_quantity(*side_lobe_gain, Dimension::Gain),
                beamwidth: format_quantity(2.0 * half_beamwidth, Dimension::Angle),
                los_area_fraction: *los_area_fraction,
                los_radius: format_quantity(*los_radius, Dimension::Length),
                exponent_los: *exponent_los,
                exponent_nlos: *exponent_nlos,
            },
            Radio::UavMmWave {
                gain,
                half_beamwidth,
                env_b,
                env_c,
                path_loss_exponent,
            } => RawStation::Uav {
                id,
                position,
                tx_power,
                bandwidth,
                carrier_freq,
                noise_power,
                noise_figure: None,
                gain: format_quantity(*gain, Dimension::Gain),
                beamwidth: format_quantity(2.0 * half_beamwidth, Dimension::Angle),
                env_b: *env_b,
                env_c: *env_c,
                path_loss_exponent: *path_loss_exponent,
            },
        }
    }
}

impl RawScenario {
    fn into_scenario(self) -> Result<Scenario, ScenarioError> {
        let kind = match (self.game.kind.as_str(), self.game.group_size) {
            ("homogeneous", Some(n)) => GameKind::Homogeneous { group_size: n },
            ("homogeneous", None) => return Err(ScenarioError::Schema("game.group_size is required for a homogeneous game".into())),
            ("heterogeneous", None) => GameKind::Heterogeneous,
            ("heterogeneous", Some(_)) => return Err(ScenarioError::Schema("game.group_size only applies to a homogeneous game".into())),
            (other, _) => return Err(ScenarioError::Schema(format!("game.kind {other:?} is not homogeneous or heterogeneous"))),
        };
        let dyn_field = Field::new("dynamics".into());
        let dynamics = DynamicsDefaults {
            beta: self.dynamics.beta,
            delta: self.dynamics.delta,
            step: dyn_field.scalar("step", &self.dynamics.step, Dimension::Time)?,
            horizon: dyn_field.scalar("horizon", &self.dynamics.horizon, Dimension::Time)?,
        };
        let base_stations = self
            .base_stations
            .into_iter()
            .enumerate()
            .map(|(i, s)| s.into_station(i))
            .collect::<Result<Vec<_>, _>>()?;
        let mut users = Vec::new();
        let mut coverage = Vec::new();
        let mut initial = Vec::new();
        for (i, u) in self.users.into_iter().enumerate() {
            let f = Field::new(format!("user[{i}]"));
            let uhf_antenna_gain = match &u.uhf_antenna_gain {
                Some(g) => f.scalar("uhf_antenna_gain", g, Dimension::Gain)?,
                None => 1.0,
            };
            let beam_offsets = u
                .beam_offsets
                .iter()
                .map(|(id, a)| Ok((id.clone(), f.scalar(&format!("beam_offsets.{id}"), a, Dimension::Angle)?)))
                .collect::<Result<Vec<_>, ScenarioError>>()?;
            let mut user = User {
                id: u.id,
                position: f.position(&u.position)?,
                uhf_antenna_gain,
                beam_offsets,
                net_values: Vec::new(),
            };
            let cov = u.coverage.unwrap_or_else(|| derive_coverage(&base_stations, &user));
            // net values follow coverage order; extras are reported by validation
            user.net_values = cov.iter().filter_map(|id| u.net_values.get(id).map(|&v| (id.clone(), v))).collect();
            for (id, &v) in &u.net_values {
                if !cov.contains(id) {
                    user.net_values.push((id.clone(), v));
                }
            }
            users.push(user);
            coverage.push(cov);
            initial.push(u.initial);
        }
        Ok(Scenario {
            name: self.name,
            kind,
            base_stations,
            users,
            coverage,
            initial,
            dynamics,
        })
    }

    fn from_scenario(s: &Scenario) -> Self {
        let game = match s.kind {
            GameKind::Homogeneous { group_size } => RawGame {
                kind: "homogeneous".into(),
                group_size: Some(group_size),
            },
            GameKind::Heterogeneous => RawGame {
                kind: "heterogeneous".into(),
                group_size: None,
            },
        };
        let users = s
            .users
            .iter()
            .enumerate()
            .map(|(i, u)| RawUser {
                id: u.id.clone(),
                position: format_vector(&[u.position.x, u.position.y, u.position.z], Dimension::Length),
                uhf_antenna_gain: Some(format_quantity(u.uhf_antenna_gain, Dimension::Gain)),
                coverage: Some(s.coverage[i].clone()),
                net_values: u.net_values.iter().cloned().collect(),
                initial: s.initial[i].clone(),
                beam_offsets: u
                    .beam_offsets
                    .iter()
                    .map(|(id, a)| (id.clone(), format_quantity(*a, Dimension::Angle)))
                    .collect(),
            })
            .collect();
        RawScenario {
            name: s.name.clone(),
            game,
            dynamics: RawDynamics {
                beta: s.dynamics.beta,
                delta: s.dynamics.delta,
                step: format_quantity(s.dynamics.step, Dimension::Time),
                horizon: format_quantity(s.dynamics.horizon, Dimension::Time),
            },
            base_stations: s.base_stations.iter().map(RawStation::from_station).collect(),
            users,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{db_to_linear, dbm_to_watts};
    use approx::assert_relative_eq;

    fn homogeneous() -> Scenario {
        load_scenario("homogeneous-paper").unwrap().scenario
    }

    fn heterogeneous() -> Scenario {
        load_scenario("heterogeneous-paper").unwrap().scenario
    }

    #[test]
    fn homogeneous_preset_fidelity() {
        let s = homogeneous();
        assert_eq!(s.kind, GameKind::Homogeneous { group_size: 10 });
        let pos = |id: &str| s.base_stations[s.station_index(id).unwrap()].position;
        assert_eq!(pos("U1"), Position::new(1000.0, 0.0, 0.0));
        assert_eq!(pos("M1"), Position::new(0.0, 0.0, 0.0));
        assert_eq!(pos("A1"), Position::new(0.0, 100.0, 20.0));
        assert_eq!(s.users[0].position, Position::new(0.0, 100.0, 0.0));
        assert_eq!(s.dynamics.delta, 2.0);
        let g = &s.users[0];
        assert_eq!(g.net_value("U1"), Some(1e-7));
        assert_eq!(g.net_value("M1"), Some(1.5e-9));
        assert_eq!(g.net_value("A1"), Some(1e-9));
        assert_eq!(g.uhf_antenna_gain, 1.0);

        let u = &s.base_stations[0];
        assert_relative_eq!(u.tx_power, dbm_to_watts(46.0), max_relative = 1e-15);
        assert_eq!(u.bandwidth, 20e6);
        assert_eq!(u.carrier_freq, 1.8e9);
        assert_relative_eq!(u.noise_power, noise_power(20e6, 10.0).unwrap(), max_relative = 1e-14);
        assert_eq!(
            u.radio,
            Radio::Uhf {
                path_loss_exponent: 2.7,
                cochannel_group: None
            }
        );
        let m = &s.base_stations[1];
        assert_relative_eq!(m.tx_power, 1.0, max_relative = 1e-15);
        assert_eq!((m.bandwidth, m.carrier_freq), (1e9, 70e9));
        match &m.radio {
            Radio::MmWave {
                main_lobe_gain,
                side_lobe_gain,
                los_area_fraction,
                los_radius,
                exponent_los,
                exponent_nlos,
                ..
            } => {
                assert_relative_eq!(*main_lobe_gain, db_to_linear(18.0), max_relative = 1e-15);
                assert_relative_eq!(*side_lobe_gain, db_to_linear(-2.0), max_relative = 1e-15);
                assert_eq!((*los_area_fraction, *los_radius), (0.081, 250.0));
                assert_eq!((*exponent_los, *exponent_nlos), (2.0, 4.0));
            }
            other => panic!("unexpected radio {other:?}"),
        }
        let a = &s.base_stations[2];
        assert_relative_eq!(a.tx_power, dbm_to_watts(23.0), max_relative = 1e-15);
        match &a.radio {
            Radio::UavMmWave {
                gain,
                half_beamwidth,
                env_b,
                env_c,
                ..
            } => {
                assert_relative_eq!(*gain, db_to_linear(18.0), max_relative = 1e-15);
                assert_relative_eq!(*half_beamwidth, 22.5f64.to_radians(), max_relative = 1e-15);
                assert_eq!((*env_b, *env_c), (1.5, 1.0));
            }
            other => panic!("unexpected radio {other:?}"),
        }
        assert_eq!(s.initial_strategy(0), vec![1.0 / 3.0; 3]);
    }

    #[test]
    fn heterogeneous_preset_fidelity() {
        let s = heterogeneous();
        assert_eq!(s.kind, GameKind::Heterogeneous);
        let count = |k: BsKind| s.base_stations.iter().filter(|b| b.kind() == k).count();
        assert_eq!((count(BsKind::Uhf), count(BsKind::MmWave), count(BsKind::UavMmWave)), (2, 2, 4));
        assert_eq!(s.users.len(), 16);
        assert_eq!(s.users[0].position, Position::new(0.0, 120.0, 0.0));
        assert_eq!(s.users[10].position, Position::new(20.0, 7100.0, 0.0));
        assert_eq!(s.users[15].position, Position::new(-20.0, 6900.0, 0.0));
        let pos = |id: &str| s.base_stations[s.station_index(id).unwrap()].position;
        assert_eq!(pos("U2"), Position::new(1000.0, 7000.0, 0.0));
        assert_eq!(pos("A2"), Position::new(0.0, -100.0, 20.0));
        assert_eq!(pos("A4"), Position::new(0.0, 6900.0, 20.0));
        for u in &s.users {
            for (id, v) in &u.net_values {
                let expected = if id.starts_with('U') { 1e-7 / 3.0 } else { 1e-9 };
                assert_eq!(*v, expected, "user {} BS {id}", u.id);
            }
        }
        assert_eq!(s.dynamics.delta, 2.0);
        assert_eq!(s.cochannel_sets()["g1"], vec!["U1".to_string(), "U2".to_string()]);
        assert_eq!(s.coverage[0], vec!["U1", "M1"]);
        assert_eq!(s.coverage[12], vec!["U2", "M2"]);
    }

    #[test]
    fn pinned_coverage_matches_geometry() {
        for name in PRESET_NAMES {
            let s = load_scenario(name).unwrap().scenario;
            for (i, user) in s.users.iter().enumerate() {
                assert_eq!(s.coverage[i], derive_coverage(&s.base_stations, user), "{name} user {}", user.id);
            }
        }
    }

    #[test]
    fn round_trip_is_identity() {
        for name in PRESET_NAMES {
            let s = load_scenario(name).unwrap().scenario;
            let text = s.to_toml();
            let back = parse_scenario(&text).unwrap();
            assert_eq!(s, back, "{name}");
        }
    }

    #[test]
    fn rejects_bad_initial_strategy() {
        let text = HOMOGENEOUS_PAPER.replace(
            "coverage = [\"U1\", \"M1\", \"A1\"]",
            "coverage = [\"U1\", \"M1\", \"A1\"]\ninitial = [0.3, 0.3, 0.3]",
        );
        let err = parse_scenario(&text).unwrap_err();
        assert!(err.to_string().contains("sums to"), "{err}");
    }

    #[test]
    fn schema_errors_name_the_field() {
        let text = HOMOGENEOUS_PAPER.replace("tx_power = \"30 dBm\"", "tx_power = \"30 GHz\"");
        let err = parse_scenario(&text).unwrap_err();
        assert!(err.to_string().contains("base_station[1].tx_power"), "{err}");

        let text = HOMOGENEOUS_PAPER.replace("los_area_fraction = 0.081\n", "");
        let err = parse_scenario(&text).unwrap_err();
        assert!(err.to_string().contains("los_area_fraction"), "{err}");

        let text = HOMOGENEOUS_PAPER.replace("env_b = 1.5", "env_b = 1.5\nlos_radius = \"1 m\"");
        assert!(matches!(parse_scenario(&text), Err(ScenarioError::Schema(_))));
    }

    #[test]
    fn omitted_coverage_is_derived() {
        let text = HOMOGENEOUS_PAPER.replace("coverage = [\"U1\", \"M1\", \"A1\"]\n", "");
        let s = parse_scenario(&text).unwrap();
        assert_eq!(s.coverage[0], vec!["U1", "M1", "A1"]);
        assert_eq!(s, parse_scenario(HOMOGENEOUS_PAPER).unwrap());
    }

    #[test]
    fn rejects_unknown_coverage_and_missing_file() {
        let text = HOMOGENEOUS_PAPER.replace("coverage = [\"U1\", \"M1\", \"A1\"]", "coverage = [\"U1\", \"M1\", \"X9\"]");
        assert!(matches!(parse_scenario(&text), Err(ScenarioError::Invalid(_))));
        assert!(matches!(load_scenario("/nonexistent/scenario.toml"), Err(ScenarioError::Io { .. })));
    }
}
