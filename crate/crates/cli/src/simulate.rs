//! `simulate` and `analyze`.

use swapsim_core::analysis::{CellCounts, SelectionFilter};
use swapsim_core::classical::Marker;
use swapsim_core::measure::BsmOutcome;
use swapsim_core::protocol::{run_batch, ExperimentConfig};
use swapsim_core::records::write_jsonl;

use crate::args::{AnalyzeArgs, ExperimentArgs, SelectArg, SimulateArgs};
use crate::error::CliResult;
use crate::io::{emit, manifest_path, read_records, write_atomic, RunManifest, ARTIFACT_VERSION};

pub(crate) fn experiment_config(trials: u64, seed: u64, e: &ExperimentArgs) -> CliResult<ExperimentConfig> {
    let config = ExperimentConfig::new(trials, seed)
        .with_angles(e.angles)?
        .with_ordering(e.ordering.into())
        .with_bsm_mode(e.bsm_mode.into())
        .with_visibility(e.visibility);
    config.validate()?;
    Ok(config)
}

pub fn simulate(args: SimulateArgs) -> CliResult<()> {
    crate::configure_threads(args.threads)?;
    let config = match &args.from_manifest {
        Some(path) => {
            let config = RunManifest::load(path)?.config;
            config.validate()?;
            config
        }
        None => {
            let trials = args.trials.expect("clap requires --trials without --from-manifest");
            experiment_config(trials, args.seed.seed, &args.experiment)?
        }
    };
    let records = run_batch(&config)?;
    write_atomic(&args.out, |w| write_jsonl(w, &records))?;

    let manifest_out = manifest_path(&args.out);
    let manifest = RunManifest {
        artifact_version: ARTIFACT_VERSION.to_string(),
        command: "simulate".to_string(),
        seed: config.seed,
        start_counter: 0,
        end_counter: config.trials,
        records_path: args.out.clone(),
        manifest_path: manifest_out.clone(),
        record_count: records.len() as u64,
        config,
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    write_atomic(&manifest_out, |w| w.write_all(text.as_bytes()))
}

pub(crate) fn selection(select: SelectArg) -> SelectionFilter {
    let label = match select {
        SelectArg::None => return SelectionFilter::None,
        SelectArg::PsiMinus => BsmOutcome::PsiMinus.label(),
        SelectArg::PsiPlus => BsmOutcome::PsiPlus.label(),
        SelectArg::PhiMinus => BsmOutcome::PhiMinus.label(),
        SelectArg::PhiPlus => BsmOutcome::PhiPlus.label(),
        SelectArg::Other => BsmOutcome::Other.label(),
        SelectArg::MarkerPlus => Marker::Plus.label(),
        SelectArg::MarkerMinus => Marker::Minus.label(),
    };
    SelectionFilter::Label(label.to_string())
}

pub fn analyze(args: AnalyzeArgs) -> CliResult<()> {
    crate::configure_threads(args.threads)?;
    let records = read_records(&args.input)?;
    let filter = selection(args.select);
    let report = CellCounts::accumulate(&records, &filter).chsh(&filter)?;
    emit(args.out.as_deref(), &(report.to_json() + "\n"))
}
