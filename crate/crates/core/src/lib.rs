//! Collective dephasing of multi-qubit states, genuine multipartite
//! entanglement via PPT-mixture witnesses, and Bell-type nonlocality tests.

pub mod channel;
pub mod entanglement;
pub mod error;
pub mod linalg;
pub mod nonlocality;
pub mod parallel;
pub mod sdp;
pub mod states;
pub mod sweep;
pub mod tolerance;

pub use error::{Error, Result};

/// `points` evenly spaced values from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..points)
            .map(|k| {
                if k == points - 1 {
                    stop
                } else {
                    start + (stop - start) * k as f64 / (points - 1) as f64
                }
            })
            .collect(),
    }
}
