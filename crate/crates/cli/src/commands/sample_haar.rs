use std::path::PathBuf;

use coherence_core::sampling::{haar_record, HaarRecord, HaarSummary};
use rayon::prelude::*;
use serde::Serialize;

use super::Output;
use crate::args::SampleHaarArgs;
use crate::error::CliResult;
use crate::experiment::ExperimentSpec;
use crate::format::{csv_document, sig12};

pub const HEADER: [&str; 4] = ["sample_index", "max_prob", "zero_error_bits", "fidelity_at_2"];

/// Master seed when neither `--seed` nor a spec provides one.
pub const DEFAULT_SEED: u64 = 0;

#[derive(Debug, Serialize)]
pub struct SampleOutput {
    pub seed: u64,
    pub summary: HaarSummary,
    pub records: Vec<HaarRecord>,
}

/// Resolves the experiment; `--seed` overrides the seed of a spec file.
pub fn experiment(args: &SampleHaarArgs, seed: Option<u64>) -> CliResult<(ExperimentSpec, Option<PathBuf>)> {
    let spec = match &args.spec {
        Some(path) => {
            let mut spec = ExperimentSpec::read(path)?;
            if let Some(s) = seed {
                spec.seed = s;
            }
            spec
        }
        None => {
            let spec = ExperimentSpec {
                dimension: args.dim.unwrap_or(0),
                sample_count: args.samples.unwrap_or(0),
                seed: seed.unwrap_or(DEFAULT_SEED),
                epsilon_grid: Vec::new(),
                m_grid: Vec::new(),
                output: None,
            };
            spec.validate()?;
            spec
        }
    };
    let output = spec.output.clone();
    Ok((spec, output))
}

/// Records in index order; each depends only on the seed and its index.
pub fn sample(spec: &ExperimentSpec) -> CliResult<SampleOutput> {
    let records = (0..spec.sample_count)
        .into_par_iter()
        .map(|i| haar_record(spec.dimension, spec.seed, i))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SampleOutput { seed: spec.seed, summary: HaarSummary::from_records(spec.dimension, &records), records })
}

pub fn csv(r: &SampleOutput) -> CliResult<String> {
    let rows = r.records.iter().map(|x| {
        vec![x.sample_index.to_string(), sig12(x.max_prob), sig12(x.zero_error_bits), sig12(x.fidelity_at_2)]
    });
    csv_document(&HEADER, rows)
}

pub fn summary_text(s: &HaarSummary) -> String {
    format!(
        "d = {}, N = {}: fraction with a zero-error bit {} (Haar expectation {}, standard error {})\n",
        s.dim,
        s.samples,
        sig12(s.fraction),
        sig12(s.expected),
        sig12(s.standard_error)
    )
}

pub fn run(args: &SampleHaarArgs, seed: Option<u64>, out: &Output) -> CliResult<()> {
    let (spec, spec_output) = experiment(args, seed)?;
    let r = sample(&spec)?;
    let out = Output { path: out.path.or(spec_output.as_deref()), ..*out };
    if out.json {
        return out.write_json(&r);
    }
    out.write_text(&csv(&r)?)?;
    eprint!("{}", summary_text(&r.summary));
    Ok(())
}

