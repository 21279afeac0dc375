use coherence_core::distill::{asymptotic_rate_scan, pure_relative_entropy};
use coherence_core::RatePoint;
use serde::Serialize;

use super::Output;
use crate::args::RateScanArgs;
use crate::error::{CliError, CliResult};
use crate::format::{csv_document, sig12};
use crate::state_file::{load_state, LoadedState};

pub const HEADER: [&str; 3] = ["n", "rate_per_copy", "C_r_reference"];

#[derive(Debug, Serialize)]
pub struct RateScanOutput {
    pub epsilon: f64,
    /// Relative entropy of coherence of one copy, the asymptotic rate.
    pub c_r_reference: f64,
    pub points: Vec<RatePoint>,
}

pub fn evaluate(args: &RateScanArgs) -> CliResult<RateScanOutput> {
    let LoadedState::Pure(psi) = load_state(&args.state_file)? else {
        return Err(CliError::Input("rate-scan needs a pure state".into()));
    };
    Ok(RateScanOutput {
        epsilon: args.epsilon,
        c_r_reference: pure_relative_entropy(&psi)?,
        points: asymptotic_rate_scan(&psi, args.epsilon, args.n_max)?,
    })
}

pub fn csv(r: &RateScanOutput) -> CliResult<String> {
    let rows = r.points.iter().map(|p| vec![p.n.to_string(), sig12(p.rate_per_copy), sig12(r.c_r_reference)]);
    csv_document(&HEADER, rows)
}

pub fn run(args: &RateScanArgs, out: &Output) -> CliResult<()> {
    let r = evaluate(args)?;
    if out.json {
        out.write_json(&r)
    } else {
        out.write_text(&csv(&r)?)
    }
}
