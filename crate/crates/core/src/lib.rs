//! Crypto-Hermitian spectral machinery for time-dependent non-Hermitian
//! matrix models: spectral flow through exceptional points, physical metric
//! reconstruction, Dyson maps, Coriolis generators and Heisenberg-picture
//! evolution.

pub mod dynamics;
pub mod flow;
pub mod io;
pub mod matrixkit;
pub mod metric;
pub mod models;
