//! The four subcommands. Each renders into a byte buffer so that output is
//! produced whole or not at all.

use std::io::Write;

use fi_traffic::grid::{check_densities, parse_grid, parse_rational, to_f64};
use fi_traffic::preimage::{count_admissible, enumerate_preimages_bruteforce};
use fi_traffic::simulate::{run, InitialCondition, SimulationSpec};
use fi_traffic::verify::{run_suite, VerifyOptions};
use fi_traffic::{AnalyticPoint, BigRational, Error, Horizon, VERSION};
use serde_json::json;

use crate::config::{Init, Mode, RunConfig};

/// Bad parameters or an infeasible request; nothing is written.
#[derive(Debug)]
pub struct Failure(pub String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure(e.to_string())
    }
}

pub struct Output {
    pub bytes: Vec<u8>,
    /// A check the command performs did not hold; the output is still written.
    pub failed: Option<String>,
}

impl Output {
    fn ok(bytes: Vec<u8>) -> Self {
        Self {
            bytes,
            failed: None,
        }
    }
}

fn header(out: &mut Vec<u8>, command: &str, cfg: &RunConfig) {
    writeln!(out, "# fi-traffic {VERSION}").unwrap();
    writeln!(out, "# command: {command}").unwrap();
    writeln!(out, "# config: {}", cfg.echo()).unwrap();
}

fn density(text: &str) -> Result<BigRational, Failure> {
    let rho = parse_rational(text)?;
    check_densities(std::slice::from_ref(&rho))?;
    Ok(rho)
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure(msg.into())
}

pub fn simulate(cfg: &RunConfig) -> Result<Output, Failure> {
    let len = cfg
        .lattice_size
        .ok_or_else(|| usage("simulate needs --L"))?;
    let initial = match (cfg.init.unwrap(), &cfg.rho, cfg.cars) {
        (_, Some(_), Some(_)) => return Err(usage("give either --rho or --cars, not both")),
        (Init::Bernoulli, Some(rho), None) => InitialCondition::Bernoulli {
            density: to_f64(&[density(rho)?])[0],
        },
        (Init::Bernoulli, None, Some(_)) => {
            return Err(usage("--cars needs --init fixed"));
        }
        (Init::Fixed, Some(rho), None) => {
            let rho = to_f64(&[density(rho)?])[0];
            InitialCondition::FixedCount {
                cars: (rho * len as f64).round() as usize,
            }
        }
        (Init::Fixed, None, Some(cars)) => InitialCondition::FixedCount { cars },
        (_, None, None) => return Err(usage("simulate needs --rho or --cars")),
    };
    let spec = SimulationSpec {
        max_speed: cfg.m.unwrap(),
        lattice_size: len,
        initial,
        steps: cfg.steps.unwrap(),
        seed: cfg.seed.unwrap(),
        replicas: cfg.replicas.unwrap(),
    };
    spec.validate()?;
    let ensemble = run(&spec)?;
    let mut out = Vec::new();
    header(&mut out, "simulate", cfg);
    ensemble.write_csv(&mut out)?;
    Ok(Output::ok(out))
}

fn parse_times(text: &str) -> Result<Vec<Horizon>, Failure> {
    text.split(',')
        .map(|t| t.parse::<Horizon>().map_err(Failure::from))
        .collect()
}

/// Rows of `t,rho,p_block,flow`, over a density grid at each of `--times`
/// or over `t = 0..=steps` at a single `--rho`.
pub fn exact(cfg: &RunConfig) -> Result<Output, Failure> {
    let m = cfg.m.unwrap();
    if m == 0 {
        return Err(usage("maximum speed must be at least 1"));
    }
    let rows: Vec<(Horizon, BigRational)> = match (&cfg.grid, &cfg.rho) {
        (Some(_), Some(_)) => return Err(usage("give either --grid or --rho, not both")),
        (Some(grid), None) => {
            let grid = parse_grid(grid)?;
            check_densities(&grid)?;
            let times = match &cfg.times {
                Some(times) => parse_times(times)?,
                None => vec![Horizon::Finite(cfg.steps.unwrap() as usize)],
            };
            times
                .iter()
                .flat_map(|&t| grid.iter().map(move |rho| (t, rho.clone())))
                .collect()
        }
        (None, Some(rho)) => {
            if cfg.times.is_some() {
                return Err(usage(
                    "--times applies to grid tabulation; use --steps with --rho",
                ));
            }
            let rho = density(rho)?;
            (0..=cfg.steps.unwrap() as usize)
                .map(|t| (Horizon::Finite(t), rho.clone()))
                .collect()
        }
        (None, None) => return Err(usage("exact needs --grid or --rho")),
    };
    let exact = cfg.mode == Some(Mode::Exact);
    let points: Vec<AnalyticPoint> = rows
        .iter()
        .map(|(t, rho)| {
            if exact {
                AnalyticPoint::evaluate_exact(m, *t, rho)
            } else {
                AnalyticPoint::evaluate(m, *t, to_f64(std::slice::from_ref(rho))[0])
            }
        })
        .collect();

    let mut out = Vec::new();
    header(&mut out, "exact", cfg);
    if exact {
        writeln!(out, "t,rho,p_block,flow,rho_exact,p_block_exact,flow_exact")?;
    } else {
        writeln!(out, "t,rho,p_block,flow")?;
    }
    for p in &points {
        write!(out, "{},{},{},{}", p.t, p.rho, p.p_block, p.flow)?;
        if let Some(e) = &p.exact {
            write!(out, ",{},{},{}", e.rho, e.p_block, e.flow)?;
        }
        writeln!(out)?;
    }
    Ok(Output::ok(out))
}

pub fn preimages(cfg: &RunConfig) -> Result<Output, Failure> {
    let m = cfg.m.unwrap();
    if m == 0 {
        return Err(usage("maximum speed must be at least 1"));
    }
    let n = cfg.steps.unwrap() as usize;
    let formula = count_admissible(m, n);
    let mut doc = json!({
        "version": VERSION,
        "command": "preimages",
        "config": serde_json::to_value(cfg).expect("configuration serializes"),
        "formula": formula.to_json(),
    });
    let mut failed = None;
    if cfg.oracle.unwrap() {
        let oracle = match enumerate_preimages_bruteforce(m, n) {
            Ok(oracle) => oracle,
            Err(e @ Error::ResourceLimit(_)) => {
                return Err(usage(format!("oracle infeasible for m={m}, n={n}: {e}")))
            }
            Err(e) => return Err(e.into()),
        };
        let equal = oracle == formula;
        doc["oracle"] = oracle.to_json();
        doc["verdict"] = json!(if equal { "equal" } else { "different" });
        if !equal {
            failed = Some(format!("oracle and formula counts differ for m={m}, n={n}"));
        }
    }
    let mut out = serde_json::to_vec_pretty(&doc).expect("document serializes");
    out.push(b'\n');
    Ok(Output { bytes: out, failed })
}

pub fn verify(cfg: &RunConfig) -> Result<Output, Failure> {
    let report = run_suite(&VerifyOptions {
        quick: cfg.quick.unwrap(),
        seed: cfg.seed.unwrap(),
        ..VerifyOptions::default()
    });
    let mut out = Vec::new();
    header(&mut out, "verify", cfg);
    writeln!(out, "{report}")?;
    let failed = (!report.all_passed()).then(|| {
        let names: Vec<_> = report.failures().map(|c| c.name).collect();
        format!("verification failed: {}", names.join(", "))
    });
    Ok(Output { bytes: out, failed })
}
