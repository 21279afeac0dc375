use coherence_core::monotones::{
    modified_trace_distance, relative_entropy_of_coherence, robustness, theta, theta_hat,
    trace_distance_of_coherence,
};
use coherence_core::MonotoneResult;
use serde::Serialize;

use super::{key_values, Output};
use crate::args::{MonotoneArgs, Variant};
use crate::error::{CliError, CliResult};
use crate::format::sig12;
use crate::state_file::load_state;

#[derive(Debug, Serialize)]
pub struct MonotoneReport {
    pub variant: &'static str,
    pub m: Option<f64>,
    pub value: f64,
    /// Largest relative duality gap over the solves; absent for closed forms.
    pub gap: Option<f64>,
    pub route_difference: Option<f64>,
    /// Interval `[lower, upper]` the witness spectrum must lie in.
    pub witness_bounds: Option<[f64; 2]>,
    /// `max(0, lower − λ_min, λ_max − upper)` of the returned witness.
    pub witness_bound_violation: Option<f64>,
    /// Violation of the witness diagonal condition: `max(0, max W_ii)` for
    /// Θ-type witnesses, `max |W_ii|` for Θ̂.
    pub diagonal_residual: Option<f64>,
}

enum DiagonalRule {
    NonPositive,
    Zero,
    Free,
}

fn report(
    variant: Variant,
    m: Option<f64>,
    r: &MonotoneResult,
    bounds: [f64; 2],
    rule: DiagonalRule,
) -> CliResult<MonotoneReport> {
    let lo = r.witness.min_eigenvalue()?;
    let hi = r.witness.max_eigenvalue()?;
    let diag = r.witness.diagonal_entries();
    let diagonal_residual = match rule {
        DiagonalRule::NonPositive => Some(diag.iter().fold(0.0f64, |a, &w| a.max(w))),
        DiagonalRule::Zero => Some(diag.iter().fold(0.0f64, |a, &w| a.max(w.abs()))),
        DiagonalRule::Free => None,
    };
    Ok(MonotoneReport {
        variant: variant.name(),
        m,
        value: r.value,
        gap: Some(r.gap),
        route_difference: Some(r.route_difference),
        witness_bounds: Some(bounds),
        witness_bound_violation: Some(0.0f64.max(bounds[0] - lo).max(hi - bounds[1])),
        diagonal_residual,
    })
}

pub fn evaluate(args: &MonotoneArgs) -> CliResult<MonotoneReport> {
    let rho = load_state(&args.state_file)?.density();
    let d = rho.dim() as f64;
    let need_m = || {
        args.m.ok_or_else(|| CliError::Input(format!("--variant {} requires --m", args.variant.name())))
    };
    match args.variant {
        Variant::Theta => {
            let m = need_m()?;
            report(args.variant, Some(m), &theta(&rho, m)?, [-1.0, m], DiagonalRule::NonPositive)
        }
        Variant::ThetaHat => {
            let m = need_m()?;
            report(args.variant, Some(m), &theta_hat(&rho, m)?, [-1.0, m], DiagonalRule::Zero)
        }
        Variant::Robustness => {
            report(args.variant, None, &robustness(&rho)?, [-1.0, d - 1.0], DiagonalRule::NonPositive)
        }
        Variant::ModTrace => {
            report(args.variant, None, &modified_trace_distance(&rho)?, [-1.0, 1.0], DiagonalRule::NonPositive)
        }
        Variant::Trace => {
            report(args.variant, None, &trace_distance_of_coherence(&rho)?, [-1.0, 1.0], DiagonalRule::Free)
        }
        Variant::RelEnt => Ok(MonotoneReport {
            variant: args.variant.name(),
            m: None,
            value: relative_entropy_of_coherence(&rho)?,
            gap: None,
            route_difference: None,
            witness_bounds: None,
            witness_bound_violation: None,
            diagonal_residual: None,
        }),
    }
}

fn render(r: &MonotoneReport) -> String {
    let mut pairs = vec![("variant", r.variant.to_string())];
    if let Some(m) = r.m {
        pairs.push(("m", sig12(m)));
    }
    pairs.push(("value", sig12(r.value)));
    let present = |pairs: &mut Vec<(&str, String)>, fields: &[(&'static str, Option<f64>)]| {
        pairs.extend(fields.iter().filter_map(|&(k, v)| v.map(|v| (k, sig12(v)))));
    };
    present(&mut pairs, &[("duality_gap", r.gap), ("route_difference", r.route_difference)]);
    if let Some([lo, hi]) = r.witness_bounds {
        pairs.push(("witness_bounds", format!("[{}, {}]", sig12(lo), sig12(hi))));
    }
    present(
        &mut pairs,
        &[("witness_bound_violation", r.witness_bound_violation), ("diagonal_residual", r.diagonal_residual)],
    );
    key_values(&pairs)
}

pub fn run(args: &MonotoneArgs, out: &Output) -> CliResult<()> {
    let r = evaluate(args)?;
    out.write(&r, || render(&r))
}
