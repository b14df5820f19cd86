//! Engine and analysis toolkit for a propose/justify/vote lawmaking game
//! played by language-model agents.
//!
//! - [`protocol`]: game configuration, round loop, tally and scoring
//! - [`agent`]: agent contract, scripted agents, HTTP chat backend
//! - [`ledger`]: JSON run logs and the flat analysis table
//! - [`metrics`]: voting-behaviour metrics and vote graphs
//! - [`themes`]: theme coding pipeline
//! - [`analysis`]: win tables, regression inputs and metric matrices
//! - [`fixtures`], [`testing`]: synthetic data and a stub chat server

pub mod agent;
pub mod analysis;
pub mod fixtures;
pub mod ids;
pub mod ledger;
pub mod metrics;
pub mod protocol;
pub mod testing;
pub mod themes;

pub use ids::{mentions_identifier, AgentId, ModelId};
