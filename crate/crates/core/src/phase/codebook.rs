use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::channel::C64;
use crate::error::{domain, Result};

/// Uniform discrete phase set with `2^bits` entries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseCodebook {
    bits: u32,
}

impl PhaseCodebook {
    pub fn new(bits: u32) -> Result<Self> {
        if bits == 0 || bits > 16 {
            return domain(format!("phase bit depth must be in 1..=16, got {bits}"));
        }
        Ok(Self { bits })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn size(&self) -> usize {
        1usize << self.bits
    }

    pub fn phase(&self, i: usize) -> f64 {
        2.0 * PI * i as f64 / self.size() as f64
    }

    pub fn phases(&self) -> Vec<f64> {
        (0..self.size()).map(|i| self.phase(i)).collect()
    }

    pub fn phasor(&self, i: usize) -> C64 {
        C64::from_polar(1.0, self.phase(i))
    }
}

/// IRS configuration stored as codebook indices, one per element.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PhaseConfig {
    pub indices: Vec<usize>,
}

impl PhaseConfig {
    pub fn zeros(m: usize) -> Self {
        Self { indices: vec![0; m] }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn phases(&self, cb: &PhaseCodebook) -> Vec<f64> {
        self.indices.iter().map(|&i| cb.phase(i)).collect()
    }

    pub fn phasors(&self, cb: &PhaseCodebook) -> Vec<C64> {
        self.indices.iter().map(|&i| cb.phasor(i)).collect()
    }
}
