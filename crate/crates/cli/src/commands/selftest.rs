use std::fmt::Write as _;

use coherence_core::distill::{fidelity_distill, one_shot_distillable};
use coherence_core::linalg::haar_random_pure;
use coherence_core::monotones::theta;
use coherence_core::pure_state::{one_shot_pure_m, split_dual_value, split_primal_value};
use coherence_core::sampling::substream;
use coherence_core::transforms::sio_pure_protocol;
use coherence_core::{m_distillation_norm, OperationClass, StateVector};
use rayon::prelude::*;
use serde::Serialize;

use super::Output;
use crate::args::{SelftestArgs, SELFTEST_SEED};
use crate::error::{CliError, CliResult};
use crate::format::{emit, json, sig12};
use crate::state_file::StateFile;

pub const DIMENSIONS: std::ops::RangeInclusive<usize> = 2..=8;
pub const EPSILONS: [f64; 2] = [0.0, 0.1];

/// Names of the checks, in table order.
pub const CHECKS: [&str; 7] = [
    "theta-vs-closed-form",
    "norm-vs-split-oracles",
    "fidelity-vs-theta-hat",
    "fidelity-vs-closed-form",
    "protocol-fidelity",
    "one-shot-m-eps-0",
    "one-shot-m-eps-0.1",
];

/// One evaluated check: the deviation between two routes, or the error that
/// prevented the comparison (deviation `+∞`).
#[derive(Clone, Debug)]
struct Outcome {
    deviation: f64,
    error: Option<String>,
}

fn outcome(r: coherence_core::Result<f64>) -> Outcome {
    match r {
        Ok(deviation) => Outcome { deviation, error: None },
        Err(e) => Outcome { deviation: f64::INFINITY, error: Some(e.to_string()) },
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Query {
    pub check: &'static str,
    pub dim: usize,
    pub index: usize,
    /// Distillation target `m`; the theta check evaluates `Θ_{m−1}`. Absent
    /// for the one-shot checks, which search over `m`.
    pub m: Option<u64>,
    pub epsilon: Option<f64>,
    pub deviation: f64,
    pub tolerance: f64,
    pub error: Option<String>,
}

/// A failing instance, serialized for reproduction.
#[derive(Clone, Debug, Serialize)]
pub struct FailureDump {
    pub state: StateFile,
    pub query: Query,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckRow {
    pub check: &'static str,
    pub instances: usize,
    pub failures: usize,
    /// Largest deviation over the instances; `null` when a comparison errored.
    pub max_deviation: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SelftestReport {
    pub seed: u64,
    pub tolerance: f64,
    pub states_per_dim: usize,
    pub rows: Vec<CheckRow>,
    pub passed: bool,
    pub first_failure: Option<FailureDump>,
}

/// Target dimension exercised for corpus state `index` of dimension `d`,
/// cycling through 2..=d.
fn target_m(d: usize, index: usize) -> u64 {
    (2 + index % (d - 1)) as u64
}

fn run_checks(psi: &StateVector, m: u64) -> Vec<Outcome> {
    let mu = m as usize;
    let rho = psi.projector();
    let (norm, closed_fidelity) = match m_distillation_norm(psi, mu) {
        Ok(n) => (n.clone(), n.value * n.value / m as f64),
        Err(e) => return failed_everywhere(&e.to_string()),
    };
    let mut out = vec![
        outcome(theta(&rho, (m - 1) as f64).map(|t| (t.value - (norm.value * norm.value - 1.0)).abs())),
        {
            let ks = 1..=norm.m;
            let upper = ks.clone().map(|k| split_primal_value(psi, mu, k)).fold(f64::INFINITY, f64::min);
            let lower = ks.filter_map(|k| split_dual_value(psi, mu, k)).fold(f64::NEG_INFINITY, f64::max);
            Outcome { deviation: (upper - norm.value).abs().max((lower - norm.value).abs()), error: None }
        },
    ];
    match fidelity_distill(&rho, m, OperationClass::Mio) {
        Ok(f) => {
            out.push(Outcome { deviation: f.route_difference, error: None });
            out.push(Outcome { deviation: (f.fidelity - closed_fidelity).abs(), error: None });
        }
        Err(e) => {
            let o = outcome(Err(e));
            out.extend([o.clone(), o]);
        }
    }
    out.push(outcome(sio_pure_protocol(psi, mu).map(|p| (p.fidelity_achieved - closed_fidelity).abs())));
    for eps in EPSILONS {
        out.push(outcome(
            one_shot_distillable(&rho, eps, OperationClass::Mio)
                .map(|r| (r.m as f64 - one_shot_pure_m(psi, eps) as f64).abs()),
        ));
    }
    out
}

fn failed_everywhere(message: &str) -> Vec<Outcome> {
    vec![Outcome { deviation: f64::INFINITY, error: Some(message.to_string()) }; CHECKS.len()]
}

fn query_m(check: usize, m: u64) -> (Option<u64>, Option<f64>) {
    match check {
        5 => (None, Some(EPSILONS[0])),
        6 => (None, Some(EPSILONS[1])),
        _ => (Some(m), None),
    }
}

pub fn evaluate(args: &SelftestArgs, seed: Option<u64>) -> CliResult<SelftestReport> {
    if args.tolerance.is_nan() || args.tolerance < 0.0 {
        return Err(CliError::Input(format!("tolerance must be nonnegative, got {}", args.tolerance)));
    }
    let seed = seed.unwrap_or(SELFTEST_SEED);
    let corpus: Vec<(usize, usize)> =
        DIMENSIONS.flat_map(|d| (0..args.states_per_dim).map(move |i| (d, i))).collect();
    let state = |d: usize, i: usize| haar_random_pure(d, &mut substream(seed, ((d as u64) << 32) | i as u64));
    let results: Vec<Vec<Outcome>> =
        corpus.par_iter().map(|&(d, i)| run_checks(&state(d, i), target_m(d, i))).collect();

    let pass = |o: &Outcome| o.error.is_none() && o.deviation <= args.tolerance;
    let rows = CHECKS
        .iter()
        .enumerate()
        .map(|(c, &check)| {
            let column = results.iter().map(|r| &r[c]);
            let failures = column.clone().filter(|o| !pass(o)).count();
            CheckRow {
                check,
                instances: results.len(),
                failures,
                max_deviation: column.map(|o| o.deviation).fold(0.0, f64::max),
                passed: failures == 0,
            }
        })
        .collect::<Vec<_>>();
    let first_failure = corpus.iter().zip(&results).find_map(|(&(d, i), r)| {
        let c = r.iter().position(|o| !pass(o))?;
        let (m, epsilon) = query_m(c, target_m(d, i));
        Some(FailureDump {
            state: StateFile::from_pure(&state(d, i)),
            query: Query {
                check: CHECKS[c],
                dim: d,
                index: i,
                m,
                epsilon,
                deviation: r[c].deviation,
                tolerance: args.tolerance,
                error: r[c].error.clone(),
            },
        })
    });
    Ok(SelftestReport {
        seed,
        tolerance: args.tolerance,
        states_per_dim: args.states_per_dim,
        passed: rows.iter().all(|r| r.passed),
        rows,
        first_failure,
    })
}

pub fn table(r: &SelftestReport) -> String {
    let mut s = format!("{:<26} {:>9} {:>8} {:>18}  result\n", "check", "instances", "failures", "max deviation");
    for row in &r.rows {
        let _ = writeln!(
            s,
            "{:<26} {:>9} {:>8} {:>18}  {}",
            row.check,
            row.instances,
            row.failures,
            sig12(row.max_deviation),
            if row.passed { "PASS" } else { "FAIL" }
        );
    }
    s
}

/// Prints the table (or the JSON report); on failure writes the first failing
/// instance to `--out`, or to stderr without it, and exits with code 1.
pub fn run(args: &SelftestArgs, seed: Option<u64>, out: &Output) -> CliResult<()> {
    let r = evaluate(args, seed)?;
    if out.json {
        emit(None, &json(&r)?)?;
    } else {
        emit(None, &table(&r))?;
    }
    let Some(dump) = &r.first_failure else {
        return Ok(());
    };
    let text = json(dump)?;
    match out.path {
        Some(p) => emit(Some(p), &text)?,
        None => eprint!("{text}"),
    }
    let failing: Vec<&str> = r.rows.iter().filter(|x| !x.passed).map(|x| x.check).collect();
    Err(CliError::SelftestFailed(format!("failing checks: {}", failing.join(", "))))
}
