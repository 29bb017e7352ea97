//! Velocity statistics, flow and cyclic block frequencies of a configuration.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{BinaryString, Configuration};

/// Number of cars at each velocity `0..=m`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VelocityHistogram {
    pub counts: Vec<u64>,
    pub cars: u64,
    pub lattice_size: u64,
}

impl VelocityHistogram {
    pub fn max_speed(&self) -> u32 {
        (self.counts.len() - 1) as u32
    }

    /// `sum_k k * N_k`, i.e. total distance travelled in one step.
    pub fn displacement(&self) -> u64 {
        self.counts
            .iter()
            .enumerate()
            .map(|(k, &n)| k as u64 * n)
            .sum()
    }
}

/// One row of a simulated time series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowSample {
    pub t: u64,
    pub mean_velocity: f64,
    pub flow: f64,
    /// Empirical frequency of `0^(m+1)`.
    pub block_prob: f64,
}

impl FlowSample {
    pub fn measure(config: &Configuration, m: u32, t: u64) -> Self {
        let stats = GapStats::collect(config, m);
        let len = config.len() as f64;
        Self {
            t,
            mean_velocity: if stats.cars == 0 {
                0.0
            } else {
                stats.displacement as f64 / stats.cars as f64
            },
            flow: stats.displacement as f64 / len,
            block_prob: stats.zero_blocks as f64 / len,
        }
    }
}

/// Counts gathered in one pass over the gaps of a ring.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct GapStats {
    cars: u64,
    displacement: u64,
    /// Cyclic windows equal to `0^(m+1)`.
    zero_blocks: u64,
}

impl GapStats {
    fn collect(config: &Configuration, m: u32) -> Self {
        assert!(m >= 1, "maximum speed must be at least 1");
        let m = m as u64;
        let mut stats = Self {
            cars: 0,
            displacement: 0,
            zero_blocks: 0,
        };
        for (_, gap) in config.gaps() {
            let gap = gap as u64;
            stats.cars += 1;
            stats.displacement += gap.min(m);
            stats.zero_blocks += gap.saturating_sub(m);
        }
        if stats.cars == 0 {
            stats.zero_blocks = config.len() as u64;
        }
        stats
    }
}

pub fn velocity_histogram(config: &Configuration, m: u32) -> VelocityHistogram {
    assert!(m >= 1, "maximum speed must be at least 1");
    let mut counts = vec![0u64; m as usize + 1];
    let mut cars = 0;
    for (_, gap) in config.gaps() {
        counts[gap.min(m as usize)] += 1;
        cars += 1;
    }
    VelocityHistogram {
        counts,
        cars,
        lattice_size: config.len() as u64,
    }
}

/// Average velocity of the cars; undefined on an empty ring.
pub fn mean_velocity(config: &Configuration, m: u32) -> Result<f64> {
    let hist = velocity_histogram(config, m);
    if hist.cars == 0 {
        return Err(Error::UndefinedDensity);
    }
    Ok(hist.displacement() as f64 / hist.cars as f64)
}

/// Number of cyclic positions at which `block` occurs.
pub fn block_count(config: &Configuration, block: &BinaryString) -> usize {
    let len = config.len();
    let symbols = block.symbols();
    assert!(symbols.len() <= len, "block longer than the ring");
    (0..len)
        .filter(|&start| {
            symbols
                .iter()
                .enumerate()
                .all(|(k, &s)| config.get((start + k) % len) == (s == 1))
        })
        .count()
}

/// Occurrences of `block` over all `L` cyclic windows, divided by `L`.
pub fn block_frequency(config: &Configuration, block: &BinaryString) -> f64 {
    block_count(config, block) as f64 / config.len() as f64
}

/// `ρ · v̄`, zero for an empty ring.
pub fn flow(config: &Configuration, m: u32) -> f64 {
    velocity_histogram(config, m).displacement() as f64 / config.len() as f64
}

/// Write a series as CSV with columns `t,mean_velocity,flow,block_prob`.
pub fn write_flow_csv<W: Write>(out: &mut W, samples: &[FlowSample]) -> io::Result<()> {
    writeln!(out, "t,mean_velocity,flow,block_prob")?;
    for s in samples {
        writeln!(
            out,
            "{},{},{},{}",
            s.t, s.mean_velocity, s.flow, s.block_prob
        )?;
    }
    Ok(())
}
