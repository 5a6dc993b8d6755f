//! Utilities and replicator fields for the homogeneous-group game and the
//! heterogeneous multi-user game.
//!
//! A strategy state is flattened block by block in scenario user order,
//! each block listing its choices in coverage order. [`GameModel`]
//! precomputes every link power once; evaluating the field is then pure
//! arithmetic over the flat state.

use thiserror::Error;

use crate::netmodel::{received_power, BsKind, FadingDraw, NetError};
use crate::scenarios::Scenario;

/// Regularisation of the shared-bandwidth denominators Σx and N·y.
pub const SHARE_EPSILON: f64 = 1e-12;

/// Largest co-channel interferer set handled by subset enumeration.
pub const MAX_INTERFERERS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GameKind {
    Homogeneous { group_size: u32 },
    Heterogeneous,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GameError {
    #[error("operation needs a homogeneous scenario")]
    NotHomogeneous,
    #[error("{count} co-channel interferers exceed the enumeration limit of {MAX_INTERFERERS}")]
    TooManyInterferers { count: usize },
    #[error("state has {got} components, layout expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("unknown owner {0:?}")]
    UnknownOwner(String),
    #[error("fading draw covers {got} links, scenario has {expected}")]
    FadingMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Net(#[from] NetError),
}

/// One owner's mixed strategy over its covered BSs.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexBlock {
    pub owner: String,
    pub choices: Vec<String>,
    pub probs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrategyState {
    pub blocks: Vec<SimplexBlock>,
    pub time: f64,
}

impl StrategyState {
    pub fn flatten(&self) -> Vec<f64> {
        self.blocks.iter().flat_map(|b| b.probs.iter().copied()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockLayout {
    pub owner: String,
    pub choices: Vec<String>,
    pub kinds: Vec<BsKind>,
    pub offset: usize,
}

impl BlockLayout {
    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.choices.len()
    }
}

/// Flattening order of a strategy state.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub blocks: Vec<BlockLayout>,
    pub dim: usize,
}

impl Layout {
    pub fn block_index(&self, owner: &str) -> Option<usize> {
        self.blocks.iter().position(|b| b.owner == owner)
    }

    pub fn state(&self, flat: &[f64], time: f64) -> Result<StrategyState, GameError> {
        if flat.len() != self.dim {
            return Err(GameError::DimensionMismatch {
                expected: self.dim,
                got: flat.len(),
            });
        }
        let blocks = self
            .blocks
            .iter()
            .map(|b| SimplexBlock {
                owner: b.owner.clone(),
                choices: b.choices.clone(),
                probs: flat[b.range()].to_vec(),
            })
            .collect();
        Ok(StrategyState { blocks, time })
    }

    /// Column names `x.{owner}.{choice}` in flat order.
    pub fn column_names(&self) -> Vec<String> {
        self.blocks
            .iter()
            .flat_map(|b| b.choices.iter().map(move |c| format!("x.{}.{}", b.owner, c)))
            .collect()
    }
}

#[derive(Debug, Clone)]
struct Choice {
    station: usize,
    user: usize,
    kind: BsKind,
    net_value: f64,
    /// received power at h = 1
    unit_power: f64,
    /// co-channel UHF interferers: (station, unit power at this user)
    interferers: Vec<(usize, f64)>,
}

/// A scenario compiled into flat arrays for fast field evaluation.
#[derive(Debug, Clone)]
pub struct GameModel {
    kind: GameKind,
    layout: Layout,
    choices: Vec<Choice>,
    /// flat indices x_{w,j} of the users covered by each station
    members: Vec<Vec<usize>>,
    bandwidth: Vec<f64>,
    noise: Vec<f64>,
    stations: usize,
    users: usize,
}

/// Expected UHF rate under random co-channel activity.
///
/// `interferers` holds (received power P_w, silence probability q_w) per
/// co-channel BS. The sum runs over every active subset S with weight
/// ∏_{w∈S}(1−q_w)·∏_{w∉S} q_w.
pub fn expected_uhf_rate(
    bandwidth: f64,
    share: f64,
    signal: f64,
    noise: f64,
    interferers: &[(f64, f64)],
) -> Result<f64, GameError> {
    let n = interferers.len();
    if n > MAX_INTERFERERS {
        return Err(GameError::TooManyInterferers { count: n });
    }
    let mut expectation = 0.0;
    for mask in 0u32..(1u32 << n) {
        let mut weight = 1.0;
        let mut interference = 0.0;
        for (k, &(power, silent)) in interferers.iter().enumerate() {
            if mask & (1 << k) != 0 {
                weight *= 1.0 - silent;
                interference += power;
            } else {
                weight *= silent;
            }
        }
        if weight != 0.0 {
            expectation += weight * (signal / (interference + noise)).ln_1p();
        }
    }
    Ok(bandwidth * share * expectation / std::f64::consts::LN_2)
}

impl GameModel {
    pub fn compile(scenario: &Scenario) -> Result<Self, GameError> {
        let stations = scenario.base_stations.len();
        let mut blocks = Vec::new();
        let mut choices = Vec::new();
        let mut members = vec![Vec::new(); stations];
        let cochannel = scenario.cochannel_sets();
        for (u, user) in scenario.users.iter().enumerate() {
            let offset = choices.len();
            let cov = &scenario.coverage[u];
            let mut kinds = Vec::new();
            for id in cov {
                let s = scenario.station_index(id).expect("coverage validated");
                let bs = &scenario.base_stations[s];
                let mut interferers = Vec::new();
                if let Some(group) = bs.cochannel_group() {
                    for other in &cochannel[group] {
                        if other != id {
                            let w = scenario.station_index(other).expect("group member exists");
                            interferers.push((w, received_power(&scenario.base_stations[w], user, 1.0)?));
                        }
                    }
                }
                if interferers.len() > MAX_INTERFERERS {
                    return Err(GameError::TooManyInterferers {
                        count: interferers.len(),
                    });
                }
                members[s].push(choices.len());
                kinds.push(bs.kind());
                choices.push(Choice {
                    station: s,
                    user: u,
                    kind: bs.kind(),
                    net_value: user.net_value(id).expect("net value validated"),
                    unit_power: received_power(bs, user, 1.0)?,
                    interferers,
                });
            }
            blocks.push(BlockLayout {
                owner: user.id.clone(),
                choices: cov.clone(),
                kinds,
                offset,
            });
        }
        let dim = choices.len();
        Ok(Self {
            kind: scenario.kind,
            layout: Layout { blocks, dim },
            choices,
            members,
            bandwidth: scenario.base_stations.iter().map(|b| b.bandwidth).collect(),
            noise: scenario.base_stations.iter().map(|b| b.noise_power).collect(),
            stations,
            users: scenario.users.len(),
        })
    }

    pub fn kind(&self) -> GameKind {
        self.kind
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn dim(&self) -> usize {
        self.layout.dim
    }

    /// (stations, users) shape expected of a [`FadingDraw`].
    pub fn fading_shape(&self) -> (usize, usize) {
        (self.stations, self.users)
    }

    pub fn check_fading(&self, fading: &FadingDraw) -> Result<(), GameError> {
        let expected = self.stations * self.users;
        if fading.gains().len() != expected {
            return Err(GameError::FadingMismatch {
                expected,
                got: fading.gains().len(),
            });
        }
        Ok(())
    }

    fn check_dim(&self, x: &[f64]) -> Result<(), GameError> {
        if x.len() != self.layout.dim {
            return Err(GameError::DimensionMismatch {
                expected: self.layout.dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    fn gain(fading: Option<&FadingDraw>, station: usize, user: usize) -> f64 {
        fading.map_or(1.0, |f| f.gain(station, user))
    }

    /// Per-choice expected rates in bit/s, same layout as the state.
    pub fn rates(&self, x: &[f64], fading: Option<&FadingDraw>, out: &mut [f64]) -> Result<(), GameError> {
        self.check_dim(x)?;
        if let Some(f) = fading {
            self.check_fading(f)?;
        }
        match self.kind {
            GameKind::Homogeneous { group_size } => {
                let n = group_size as f64;
                for (k, c) in self.choices.iter().enumerate() {
                    let snr = c.unit_power * Self::gain(fading, c.station, c.user) / self.noise[c.station];
                    out[k] = self.bandwidth[c.station] / (n * x[k]).max(SHARE_EPSILON) * snr.log2_1p();
                }
            }
            GameKind::Heterogeneous => {
                for (k, c) in self.choices.iter().enumerate() {
                    let s = c.station;
                    let load: f64 = self.members[s].iter().map(|&j| x[j]).sum();
                    let share = x[k] / load.max(SHARE_EPSILON);
                    let signal = c.unit_power * Self::gain(fading, s, c.user);
                    out[k] = if c.interferers.is_empty() {
                        self.bandwidth[s] * share * (signal / self.noise[s]).log2_1p()
                    } else {
                        let terms: Vec<(f64, f64)> = c
                            .interferers
                            .iter()
                            .map(|&(w, p)| {
                                let silent: f64 = self.members[w].iter().map(|&j| 1.0 - x[j]).product();
                                (p * Self::gain(fading, w, c.user), silent)
                            })
                            .collect();
                        expected_uhf_rate(self.bandwidth[s], share, signal, self.noise[s], &terms)?
                    };
                }
            }
        }
        Ok(())
    }

    /// Per-choice utilities λ^φ·R.
    pub fn utilities(&self, x: &[f64], fading: Option<&FadingDraw>, out: &mut [f64]) -> Result<(), GameError> {
        self.rates(x, fading, out)?;
        for (u, c) in out.iter_mut().zip(&self.choices) {
            *u *= c.net_value;
        }
        Ok(())
    }

    /// Block averages Σ_w x_w·U_w, one per owner.
    pub fn averages(&self, x: &[f64], utilities: &[f64]) -> Vec<f64> {
        self.layout
            .blocks
            .iter()
            .map(|b| b.range().map(|k| x[k] * utilities[k]).sum())
            .collect()
    }

    /// Replicator field e^{−δ}·x_w·(U_w − Ū).
    pub fn replicator_field(
        &self,
        x: &[f64],
        delta: f64,
        fading: Option<&FadingDraw>,
        out: &mut [f64],
    ) -> Result<(), GameError> {
        let mut u = vec![0.0; x.len()];
        self.utilities(x, fading, &mut u)?;
        let gain = (-delta).exp();
        for b in &self.layout.blocks {
            let avg: f64 = b.range().map(|k| x[k] * u[k]).sum();
            for k in b.range() {
                out[k] = gain * x[k] * (u[k] - avg);
            }
        }
        Ok(())
    }

    /// Interior equilibrium of the homogeneous game without fading:
    /// y*_w ∝ λ_w·W_w·log₂(1 + SNR_w).
    pub fn homogeneous_equilibrium(&self) -> Result<Vec<f64>, GameError> {
        if !matches!(self.kind, GameKind::Homogeneous { .. }) {
            return Err(GameError::NotHomogeneous);
        }
        let weights: Vec<f64> = self
            .choices
            .iter()
            .map(|c| c.net_value * self.bandwidth[c.station] * (c.unit_power / self.noise[c.station]).log2_1p())
            .collect();
        let total: f64 = weights.iter().sum();
        Ok(weights.iter().map(|w| w / total).collect())
    }

    /// Unit-fading SNR of each choice, in flat order.
    pub fn snr(&self) -> Vec<f64> {
        self.choices.iter().map(|c| c.unit_power / self.noise[c.station]).collect()
    }

    /// Flat indices of the choices of kind `kind`, in block order.
    pub fn choices_of_kind(&self, kind: BsKind) -> Vec<usize> {
        self.choices
            .iter()
            .enumerate()
            .filter(|(_, c)| c.kind == kind)
            .map(|(k, _)| k)
            .collect()
    }
}

trait Log2OnePlus {
    fn log2_1p(self) -> f64;
}

impl Log2OnePlus for f64 {
    fn log2_1p(self) -> f64 {
        self.ln_1p() / std::f64::consts::LN_2
    }
}
