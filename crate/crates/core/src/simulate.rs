//! Seeded simulation runs over one or more independent replicas.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::lattice::{
    init_bernoulli_with, init_fixed_count_with, rng_for, step_into, Configuration,
};
use crate::measure::FlowSample;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "init")]
pub enum InitialCondition {
    /// Every site occupied independently with probability `density`.
    Bernoulli { density: f64 },
    /// Exactly `cars` cars on a uniform random subset of sites.
    FixedCount { cars: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationSpec {
    pub max_speed: u32,
    pub lattice_size: usize,
    pub initial: InitialCondition,
    pub steps: u64,
    pub seed: u64,
    pub replicas: usize,
}

impl SimulationSpec {
    pub fn validate(&self) -> Result<()> {
        if self.max_speed == 0 {
            return Err(invalid("maximum speed must be at least 1"));
        }
        if self.lattice_size == 0 {
            return Err(invalid("lattice size must be at least 1"));
        }
        if self.replicas == 0 {
            return Err(invalid("at least one replica is required"));
        }
        match self.initial {
            InitialCondition::Bernoulli { density } if !(0.0..=1.0).contains(&density) => {
                Err(invalid(format!("density {density} outside [0, 1]")))
            }
            InitialCondition::FixedCount { cars } if cars > self.lattice_size => Err(invalid(
                format!("{cars} cars do not fit on {} sites", self.lattice_size),
            )),
            _ => Ok(()),
        }
    }

    /// Initial configuration of replica `index`.
    pub fn initial_configuration(&self, index: usize) -> Result<Configuration> {
        self.validate()?;
        let mut rng = rng_for(self.seed, index as u64);
        match self.initial {
            InitialCondition::Bernoulli { density } => {
                Ok(init_bernoulli_with(self.lattice_size, density, &mut rng))
            }
            InitialCondition::FixedCount { cars } => {
                init_fixed_count_with(self.lattice_size, cars, &mut rng)
            }
        }
    }
}

/// Time series of one replica; `samples[t]` is measured after `t` steps.
#[derive(Debug, Clone, PartialEq)]
pub struct Replica {
    pub index: usize,
    /// Realized `N / L`.
    pub density: f64,
    pub samples: Vec<FlowSample>,
}

pub fn run_replica(spec: &SimulationSpec, index: usize) -> Result<Replica> {
    let mut config = spec.initial_configuration(index)?;
    let mut scratch = config.clone();
    let m = spec.max_speed;
    let mut samples = Vec::with_capacity(spec.steps as usize + 1);
    samples.push(FlowSample::measure(&config, m, 0));
    for t in 1..=spec.steps {
        step_into(&config, m, &mut scratch);
        std::mem::swap(&mut config, &mut scratch);
        samples.push(FlowSample::measure(&config, m, t));
    }
    Ok(Replica {
        index,
        density: config.density(),
        samples,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub spec: SimulationSpec,
    pub replicas: Vec<Replica>,
}

/// Mean and standard error of the mean across replicas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn from_values(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let stderr = if values.len() < 2 {
            0.0
        } else {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        };
        Self { mean, stderr }
    }
}

/// Runs every replica. Replica `k` draws from stream `k` of the seed, so the
/// output is independent of thread count.
pub fn run(spec: &SimulationSpec) -> Result<Ensemble> {
    spec.validate()?;
    let replicas = (0..spec.replicas)
        .into_par_iter()
        .map(|k| run_replica(spec, k))
        .collect::<Result<Vec<_>>>()?;
    Ok(Ensemble {
        spec: *spec,
        replicas,
    })
}

impl Ensemble {
    pub fn steps(&self) -> usize {
        self.replicas[0].samples.len()
    }

    fn column(&self, t: usize, f: impl Fn(&FlowSample) -> f64) -> Vec<f64> {
        self.replicas.iter().map(|r| f(&r.samples[t])).collect()
    }

    pub fn flow(&self, t: usize) -> Estimate {
        Estimate::from_values(&self.column(t, |s| s.flow))
    }

    pub fn block_prob(&self, t: usize) -> Estimate {
        Estimate::from_values(&self.column(t, |s| s.block_prob))
    }

    pub fn mean_velocity(&self, t: usize) -> Estimate {
        Estimate::from_values(&self.column(t, |s| s.mean_velocity))
    }

    /// Single replica: `t,mean_velocity,flow,block_prob`. Several replicas add
    /// `flow_stderr,block_prob_stderr` and one `flow_r<k>` column per replica;
    /// the leading columns are then replica means.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        if self.replicas.len() == 1 {
            return crate::measure::write_flow_csv(out, &self.replicas[0].samples);
        }
        write!(
            out,
            "t,mean_velocity,flow,block_prob,flow_stderr,block_prob_stderr"
        )?;
        for r in &self.replicas {
            write!(out, ",flow_r{}", r.index)?;
        }
        writeln!(out)?;
        for t in 0..self.steps() {
            let (v, f, b) = (self.mean_velocity(t), self.flow(t), self.block_prob(t));
            write!(
                out,
                "{},{},{},{},{},{}",
                t, v.mean, f.mean, b.mean, f.stderr, b.stderr
            )?;
            for r in &self.replicas {
                write!(out, ",{}", r.samples[t].flow)?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(initial: InitialCondition, replicas: usize) -> SimulationSpec {
        SimulationSpec {
            max_speed: 2,
            lattice_size: 200,
            initial,
            steps: 20,
            seed: 11,
            replicas,
        }
    }

    #[test]
    fn empty_ring_has_zero_flow() {
        let s = SimulationSpec {
            lattice_size: 8,
            ..spec(InitialCondition::Bernoulli { density: 0.0 }, 1)
        };
        let e = run(&s).unwrap();
        assert!(e.replicas[0].samples.iter().all(|x| x.flow == 0.0));
        assert_eq!(e.replicas[0].samples.len(), 21);
    }

    #[test]
    fn replicas_are_reproducible_and_distinct() {
        let s = spec(InitialCondition::FixedCount { cars: 60 }, 4);
        let a = run(&s).unwrap();
        assert_eq!(a, run(&s).unwrap());
        assert_ne!(a.replicas[0].samples, a.replicas[1].samples);
        assert!(a.replicas.iter().all(|r| r.density == 0.3));
        // replica k does not depend on how many replicas run
        let single = run_replica(&s, 2).unwrap();
        assert_eq!(single, a.replicas[2]);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(run(&spec(InitialCondition::FixedCount { cars: 201 }, 1)).is_err());
        assert!(run(&spec(InitialCondition::Bernoulli { density: -0.1 }, 1)).is_err());
        assert!(run(&spec(InitialCondition::Bernoulli { density: 0.1 }, 0)).is_err());
    }

    #[test]
    fn estimate() {
        let e = Estimate::from_values(&[1.0, 2.0, 3.0]);
        assert_eq!(e.mean, 2.0);
        assert!((e.stderr - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(Estimate::from_values(&[5.0]).stderr, 0.0);
    }

    #[test]
    fn multi_replica_csv_columns() {
        let e = run(&SimulationSpec {
            steps: 2,
            ..spec(InitialCondition::FixedCount { cars: 50 }, 3)
        })
        .unwrap();
        let mut buf = Vec::new();
        e.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "t,mean_velocity,flow,block_prob,flow_stderr,block_prob_stderr,flow_r0,flow_r1,flow_r2"
        );
        assert_eq!(lines.count(), 3);
    }
}
