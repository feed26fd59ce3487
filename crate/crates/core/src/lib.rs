pub mod assets;
pub mod cli;
pub mod collinearity;
pub mod config;
pub mod extraction;
pub mod field;
pub mod fixtures;
pub mod focus;
pub mod geometry;
pub mod metrics;
pub mod render;
