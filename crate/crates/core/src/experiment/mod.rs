//! Batch runner: TOML experiment configs, seeded reproducible runs and
//! result files.

mod config;
mod plots;
mod run;

pub use config::{
    ExperimentConfig, ExperimentKind, GridConfig, ReadingChoice, ScanSection, SolveSection, SpaceSpec, StressSection,
    Tolerances,
};
pub use run::{catalog_table, output_dir, run_experiment, verify_config, RunOutcome, OUT_ENV, SCHEMA_VERSION};

use std::path::Path;

use crate::error::Result;

/// Small configs covering every experiment kind; seconds in total.
const QUICK: &[(&str, &str)] = &[
    (
        "fbm",
        "kind = \"simulate-fbm\"\nhurst = 0.3\nseed = 1\nn_paths = 400\n[grid]\nstep = 0.015625\nleft = 8.0\n[tolerance]\ndecomposition = 1e-11\n",
    ),
    (
        "itw-const",
        "kind = \"verify-ito-tanaka\"\nhurst = 0.3\nseed = 2\nn_paths = 8\nfield = \"const\"\n[grid]\nstep = 0.015625\nleft = 4.0\nprobes = [[0.0], [0.7]]\n[tolerance]\nabsolute = 1e-12\n",
    ),
    (
        "itw-sin",
        "kind = \"verify-ito-tanaka\"\nhurst = 0.7\nseed = 3\nn_paths = 40\nfield = \"sin:omega=1\"\n[grid]\nstep = 0.0078125\nleft = 4.0\nprobes = [[0.0], [0.7]]\n[tolerance]\nrelative = 0.05\n",
    ),
    (
        "clark-ocone",
        "kind = \"clark-ocone\"\nseed = 4\nn_paths = 2000\nfunctional = \"b2\"\n[grid]\nstep = 0.00390625\n[tolerance]\nrelative = 0.1\norder = [0.5, 0.1]\nabsolute = 1e-12\n",
    ),
    (
        "euler",
        "kind = \"euler-crosscheck\"\nhurst = 0.7\nseed = 5\nn_paths = 2\nfield = \"poly:c=0,-1\"\n[grid]\nstep = 0.000244140625\nleft = 8.0\n[solve]\ny0 = 1.0\n",
    ),
    (
        "solve",
        "kind = \"solve-sde\"\nhurst = 0.3\nseed = 6\nn_paths = 2\nfield = \"sin:freq=1\"\n[grid]\nstep = 0.001953125\nleft = 8.0\npoints = 160\n",
    ),
];

pub fn quick_suite() -> Result<Vec<(&'static str, ExperimentConfig)>> {
    QUICK
        .iter()
        .map(|(name, text)| Ok((*name, ExperimentConfig::from_toml(text)?)))
        .collect()
}

/// Runs the smoke suite with outputs under `root/<name>`.
pub fn run_quick(root: &Path, workers: usize) -> Result<Vec<(&'static str, Result<RunOutcome>)>> {
    Ok(quick_suite()?
        .into_iter()
        .map(|(name, mut cfg)| {
            cfg.output = Some(root.join(name));
            cfg.workers = workers;
            (name, run_experiment(&cfg))
        })
        .collect())
}
