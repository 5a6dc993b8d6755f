//! Classical and Caputo-fractional replicator dynamics for network
//! selection among UHF, mmWave and UAV-mounted mmWave base stations.

pub mod cli;
pub mod dynamics;
pub mod fraccalc;
pub mod game;
pub mod netmodel;
pub mod scenarios;
pub mod units;
