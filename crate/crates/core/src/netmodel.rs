//! Geometry, propagation, antenna and fading models for UHF, mmWave and
//! UAV-mounted mmWave base stations.
//!
//! All quantities are SI linear: watts, hertz, metres, radians.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::Exp1;
use thiserror::Error;

use crate::units::dbm_to_watts;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Thermal noise density in dBm/Hz.
pub const THERMAL_NOISE_DBM_PER_HZ: f64 = -174.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetError {
    #[error("carrier frequency must be positive, got {0} Hz")]
    NonPositiveFrequency(f64),
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Position {
    pub x: f64,
    pub y: f64,
    /// altitude
    pub z: f64,
}

impl Position {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn from_slice(v: &[f64]) -> Option<Self> {
        match *v {
            [x, y, z] => Some(Self { x, y, z }),
            _ => None,
        }
    }

    pub fn distance(&self, other: &Position) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2) + (self.z - other.z).powi(2)).sqrt()
    }

    /// Distance between the ground projections.
    pub fn ground_distance(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn validate(&self) -> Result<(), NetError> {
        if !(self.x.is_finite() && self.y.is_finite() && self.z.is_finite()) {
            return Err(NetError::InvalidParameter(format!("non-finite position {self:?}")));
        }
        if self.z < 0.0 {
            return Err(NetError::InvalidParameter(format!("negative altitude {}", self.z)));
        }
        Ok(())
    }
}

/// Technology-specific parameters of a base station.
#[derive(Debug, Clone, PartialEq)]
pub enum Radio {
    Uhf {
        path_loss_exponent: f64,
        cochannel_group: Option<String>,
    },
    MmWave {
        main_lobe_gain: f64,
        side_lobe_gain: f64,
        /// θ^S_m / 2
        half_beamwidth: f64,
        /// C
        los_area_fraction: f64,
        /// D
        los_radius: f64,
        exponent_los: f64,
        exponent_nlos: f64,
    },
    UavMmWave {
        gain: f64,
        /// θ^S_a / 2, inside (0, π/2)
        half_beamwidth: f64,
        env_b: f64,
        env_c: f64,
        path_loss_exponent: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BsKind {
    Uhf,
    MmWave,
    UavMmWave,
}

impl BsKind {
    pub fn label(self) -> &'static str {
        match self {
            BsKind::Uhf => "uhf",
            BsKind::MmWave => "mmwave",
            BsKind::UavMmWave => "uav",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaseStation {
    pub id: String,
    pub position: Position,
    pub tx_power: f64,
    pub bandwidth: f64,
    pub carrier_freq: f64,
    pub noise_power: f64,
    pub radio: Radio,
}

impl BaseStation {
    pub fn kind(&self) -> BsKind {
        match self.radio {
            Radio::Uhf { .. } => BsKind::Uhf,
            Radio::MmWave { .. } => BsKind::MmWave,
            Radio::UavMmWave { .. } => BsKind::UavMmWave,
        }
    }

    pub fn cochannel_group(&self) -> Option<&str> {
        match &self.radio {
            Radio::Uhf { cochannel_group, .. } => cochannel_group.as_deref(),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), NetError> {
        let bad = |msg: String| Err(NetError::InvalidParameter(format!("base station {}: {msg}", self.id)));
        self.position.validate()?;
        if !(self.tx_power > 0.0 && self.tx_power.is_finite()) {
            return bad(format!("tx_power must be positive, got {}", self.tx_power));
        }
        if !(self.bandwidth > 0.0 && self.bandwidth.is_finite()) {
            return bad(format!("bandwidth must be positive, got {}", self.bandwidth));
        }
        if !(self.carrier_freq > 0.0 && self.carrier_freq.is_finite()) {
            return bad(format!("carrier_freq must be positive, got {}", self.carrier_freq));
        }
        if !(self.noise_power > 0.0 && self.noise_power.is_finite()) {
            return bad(format!("noise_power must be positive, got {}", self.noise_power));
        }
        match &self.radio {
            Radio::Uhf { path_loss_exponent, .. } => {
                if !(*path_loss_exponent > 0.0) {
                    return bad("path_loss_exponent must be positive".into());
                }
            }
            Radio::MmWave {
                main_lobe_gain,
                side_lobe_gain,
                half_beamwidth,
                los_area_fraction,
                los_radius,
                exponent_los,
                exponent_nlos,
            } => {
                if !(*main_lobe_gain >= 0.0 && *side_lobe_gain >= 0.0) {
                    return bad("antenna gains must be non-negative".into());
                }
                if !(*half_beamwidth > 0.0 && *half_beamwidth <= PI) {
                    return bad(format!("half_beamwidth {half_beamwidth} outside (0, π]"));
                }
                if !(0.0..=1.0).contains(los_area_fraction) {
                    return bad(format!("los_area_fraction {los_area_fraction} outside [0, 1]"));
                }
                if !(*los_radius >= 0.0) {
                    return bad("los_radius must be non-negative".into());
                }
                if !(*exponent_los > 0.0 && *exponent_nlos > 0.0) {
                    return bad("path-loss exponents must be positive".into());
                }
            }
            Radio::UavMmWave {
                gain,
                half_beamwidth,
                env_b,
                env_c,
                path_loss_exponent,
            } => {
                if !(*gain >= 0.0) {
                    return bad("gain must be non-negative".into());
                }
                if !(*half_beamwidth > 0.0 && *half_beamwidth < PI / 2.0) {
                    return bad(format!("half_beamwidth {half_beamwidth} outside (0, π/2)"));
                }
                if !(env_b.is_finite() && env_c.is_finite()) {
                    return bad("environment constants must be finite".into());
                }
                if !(*path_loss_exponent > 0.0) {
                    return bad("path_loss_exponent must be positive".into());
                }
            }
        }
        Ok(())
    }
}

/// A receiving user. Users are omnidirectional; `uhf_antenna_gain` is G_u.
#[derive(Debug, Clone, PartialEq)]
pub struct User {
    pub id: String,
    pub position: Position,
    pub uhf_antenna_gain: f64,
    /// Angle off the best mmWave beam, per mmWave BS id; missing means aligned.
    pub beam_offsets: Vec<(String, f64)>,
    /// λ − φ, utility per bit, per BS id.
    pub net_values: Vec<(String, f64)>,
}

impl User {
    pub fn net_value(&self, bs_id: &str) -> Option<f64> {
        self.net_values.iter().find(|(id, _)| id == bs_id).map(|&(_, v)| v)
    }

    pub fn beam_offset(&self, bs_id: &str) -> f64 {
        self.beam_offsets
            .iter()
            .find(|(id, _)| id == bs_id)
            .map_or(0.0, |&(_, a)| a)
    }
}

/// Small-scale fading gains indexed by (base station, user) position in
/// the scenario lists.
#[derive(Debug, Clone, PartialEq)]
pub struct FadingDraw {
    users: usize,
    gains: Vec<f64>,
}

impl FadingDraw {
    /// h = 1 on every link (no-fading baseline).
    pub fn unit(stations: usize, users: usize) -> Self {
        Self {
            users,
            gains: vec![1.0; stations * users],
        }
    }

    pub fn from_gains(stations: usize, users: usize, gains: Vec<f64>) -> Result<Self, NetError> {
        if gains.len() != stations * users {
            return Err(NetError::InvalidParameter(format!(
                "{} gains for {stations}x{users} links",
                gains.len()
            )));
        }
        if gains.iter().any(|g| !(*g >= 0.0)) {
            return Err(NetError::InvalidParameter("fading gains must be non-negative".into()));
        }
        Ok(Self { users, gains })
    }

    pub fn gain(&self, station: usize, user: usize) -> f64 {
        self.gains[station * self.users + user]
    }

    pub fn gains(&self) -> &[f64] {
        &self.gains
    }
}

/// ρ = (c / 4πf)², the free-space loss at 1 m.
pub fn near_field_loss(freq: f64) -> Result<f64, NetError> {
    if !(freq > 0.0) {
        return Err(NetError::NonPositiveFrequency(freq));
    }
    Ok((SPEED_OF_LIGHT / (4.0 * PI * freq)).powi(2))
}

pub fn path_loss(dist: f64, exponent: f64) -> Result<f64, NetError> {
    if !(dist > 0.0) {
        return Err(NetError::DegenerateGeometry(format!(
            "link distance must be positive, got {dist} m"
        )));
    }
    Ok(dist.powf(exponent))
}

/// Step LOS model: C within radius D (inclusive), 0 beyond.
pub fn mmwave_los_probability(r: f64, los_area_fraction: f64, los_radius: f64) -> f64 {
    if r <= los_radius {
        los_area_fraction
    } else {
        0.0
    }
}

/// Logistic LOS model on the elevation angle in degrees.
pub fn uav_los_probability(r_2d: f64, altitude: f64, env_b: f64, env_c: f64) -> f64 {
    let elevation = altitude.atan2(r_2d).to_degrees();
    1.0 / (1.0 + env_b * (-env_c * (elevation - env_b)).exp())
}

pub fn mmwave_antenna_gain(theta: f64, main_beamwidth: f64, main_gain: f64, side_gain: f64) -> f64 {
    if theta.abs() <= main_beamwidth / 2.0 {
        main_gain
    } else {
        side_gain
    }
}

/// Downward cone antenna: `gain` when the user's ground distance is within
/// `H·tan(half_beamwidth)`, H being the altitude difference, otherwise 0.
pub fn uav_antenna_gain(bs: &Position, user: &Position, half_beamwidth: f64, gain: f64) -> Result<f64, NetError> {
    let height = bs.z - user.z;
    if !(height > 0.0) {
        return Err(NetError::DegenerateGeometry(format!(
            "UAV at altitude {} is not above the user at {}",
            bs.z, user.z
        )));
    }
    Ok(if bs.ground_distance(user) <= height * half_beamwidth.tan() {
        gain
    } else {
        0.0
    })
}

/// Received downlink power in watts for fading gain `fading`.
///
/// mmWave and UAV links carry the LOS probability as a multiplicative
/// expectation rather than a sampled blockage state.
pub fn received_power(bs: &BaseStation, user: &User, fading: f64) -> Result<f64, NetError> {
    if !(fading >= 0.0) {
        return Err(NetError::InvalidParameter(format!("fading gain must be non-negative, got {fading}")));
    }
    let dist = bs.position.distance(&user.position);
    let rho = near_field_loss(bs.carrier_freq)?;
    let base = bs.tx_power * fading * rho;
    let power = match &bs.radio {
        Radio::Uhf { path_loss_exponent, .. } => {
            base * user.uhf_antenna_gain / path_loss(dist, *path_loss_exponent)?
        }
        Radio::MmWave {
            main_lobe_gain,
            side_lobe_gain,
            half_beamwidth,
            los_area_fraction,
            los_radius,
            exponent_los,
            exponent_nlos,
        } => {
            let p_los = mmwave_los_probability(dist, *los_area_fraction, *los_radius);
            let gain = mmwave_antenna_gain(
                user.beam_offset(&bs.id),
                2.0 * half_beamwidth,
                *main_lobe_gain,
                *side_lobe_gain,
            );
            let exponent = if dist <= *los_radius { exponent_los } else { exponent_nlos };
            p_los * base * gain / path_loss(dist, *exponent)?
        }
        Radio::UavMmWave {
            gain,
            half_beamwidth,
            env_b,
            env_c,
            path_loss_exponent,
        } => {
            let height = bs.position.z - user.position.z;
            let p_los = uav_los_probability(bs.position.ground_distance(&user.position), height, *env_b, *env_c);
            let g = uav_antenna_gain(&bs.position, &user.position, *half_beamwidth, *gain)?;
            p_los * base * g / path_loss(dist, *path_loss_exponent)?
        }
    };
    Ok(power)
}

/// Thermal noise −174 dBm/Hz + 10·log10(W) + NF, in watts.
pub fn noise_power(bandwidth: f64, noise_figure_db: f64) -> Result<f64, NetError> {
    if !(bandwidth > 0.0) {
        return Err(NetError::InvalidParameter(format!("bandwidth must be positive, got {bandwidth}")));
    }
    Ok(dbm_to_watts(THERMAL_NOISE_DBM_PER_HZ + 10.0 * bandwidth.log10() + noise_figure_db))
}

/// i.i.d. Exp(1) gains for every (station, user) link.
pub fn sample_fading<R: Rng + ?Sized>(rng: &mut R, stations: usize, users: usize) -> FadingDraw {
    let gains = (0..stations * users).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    FadingDraw { users, gains }
}

/// signal / (Σ interference + noise).
pub fn sinr(signal: f64, interference: &[f64], noise: f64) -> f64 {
    let total: f64 = interference.iter().sum();
    signal / (total + noise)
}
