use coherence_core::distill::{one_shot_distillable, one_shot_distillable_pure};
use coherence_core::pure_state::one_shot_pure_m;
use coherence_core::transforms::sio_pure_protocol;
use coherence_core::{OperationClass, Route};
use serde::Serialize;

use super::{key_values, Output};
use crate::args::DistillArgs;
use crate::error::{CliError, CliResult};
use crate::format::sig12;
use crate::state_file::{load_state, LoadedState, StateKind};

#[derive(Debug, Serialize)]
pub struct DistillOutput {
    pub kind: StateKind,
    pub class: OperationClass,
    pub epsilon: f64,
    pub m: u64,
    /// `log₂ m`.
    pub rate_bits: f64,
    /// Best fidelity with Ψ_m achieved at `m`.
    pub fidelity: f64,
    pub route: Route,
    /// `−log₂ k − log₂ m ≥ 0`, the slack between the optimum and its floor.
    pub delta: f64,
    /// Closed-form `m` for pure inputs; absent for mixed inputs.
    pub closed_form_m: Option<u64>,
}

pub fn evaluate(args: &DistillArgs) -> CliResult<DistillOutput> {
    let state = load_state(&args.state_file)?;
    let class = OperationClass::from(args.class);
    let eps = args.epsilon;
    let (report, closed_form_m, fidelity) = match &state {
        LoadedState::Pure(psi) if !class.supports_mixed() => {
            let r = one_shot_distillable_pure(psi, eps, class)?;
            // the fidelity actually reached by the explicit SIO protocol
            let f = sio_pure_protocol(psi, r.m as usize)?.fidelity_achieved;
            (r, None, f)
        }
        LoadedState::Pure(psi) => {
            let r = one_shot_distillable(&psi.projector(), eps, class)?;
            let closed = one_shot_pure_m(psi, eps);
            if closed != r.m {
                return Err(CliError::Solver(format!("SDP gives m = {} but the closed form gives m = {closed}", r.m)));
            }
            let f = r.fidelity;
            (r, Some(closed), f)
        }
        LoadedState::Mixed(_) if !class.supports_mixed() => {
            return Err(CliError::Unsupported(format!(
                "class {} is only available for pure states",
                serde_json::to_value(class)?.as_str().unwrap_or("?")
            )));
        }
        LoadedState::Mixed(rho) => {
            let r = one_shot_distillable(rho, eps, class)?;
            let f = r.fidelity;
            (r, None, f)
        }
    };
    Ok(DistillOutput {
        kind: state.kind(),
        class,
        epsilon: eps,
        m: report.m,
        rate_bits: report.log2_m,
        fidelity,
        route: report.route,
        delta: report.delta,
        closed_form_m,
    })
}

fn render(r: &DistillOutput) -> String {
    key_values(&[
        ("m", r.m.to_string()),
        ("rate_bits", sig12(r.rate_bits)),
        ("fidelity", sig12(r.fidelity)),
        ("route", format!("{:?}", r.route)),
        ("delta", sig12(r.delta)),
    ])
}

pub fn run(args: &DistillArgs, out: &Output) -> CliResult<()> {
    let r = evaluate(args)?;
    out.write(&r, || render(&r))
}
