//! Simulation library for two-agent rendezvous on labelled lines.

pub mod numerics;
pub mod line;
pub mod colouring;
pub mod agents;
pub mod simulator;
pub mod bounds;
pub mod exec;
pub mod sweep;
pub mod verify;
