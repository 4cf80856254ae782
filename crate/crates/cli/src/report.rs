//! `report`: stage entanglement, CHSH per selection and correlation scans.

use std::fmt::Write as _;

use serde::Serialize;
use swapsim_core::analysis::{CellCounts, SelectionFilter};
use swapsim_core::format::{fmt12, round12};
use swapsim_core::measure::{AnalyzerAngle, BsmOutcome};
use swapsim_core::protocol::{
    exact_correlation, exact_joint_distribution, run_batch, stage_entanglement_report, ExperimentConfig,
};
use swapsim_core::SimError;

use crate::args::{FormatArg, ReportArgs};
use crate::error::{CliError, CliResult};
use crate::io::emit;
use crate::simulate::experiment_config;

#[derive(Debug, Serialize)]
struct StageRow {
    stage: String,
    probability: f64,
    concurrence: f64,
    negativity: f64,
    purity: f64,
}

#[derive(Debug, Serialize)]
struct ChshRow {
    filter: String,
    /// Fraction of trials passing the filter.
    weight: f64,
    /// E(a,b), E(a,b'), E(a',b), E(a',b').
    correlations: [f64; 4],
    s: f64,
    /// Absent for exact tables.
    #[serde(skip_serializing_if = "Option::is_none")]
    s_std_err: Option<f64>,
}

#[derive(Debug, Serialize)]
struct ReportDoc {
    source: &'static str,
    config: ExperimentConfig,
    stages: Vec<StageRow>,
    chsh: Vec<ChshRow>,
}

const SETTINGS: [(u8, u8); 4] = [(0, 0), (0, 1), (1, 0), (1, 1)];

fn conditions(config: &ExperimentConfig) -> Vec<Option<BsmOutcome>> {
    std::iter::once(None)
        .chain(BsmOutcome::outcomes(config.bsm_mode).iter().copied().map(Some))
        .collect()
}

fn exact_rows(config: &ExperimentConfig) -> CliResult<Vec<ChshRow>> {
    let table = exact_joint_distribution(config)?;
    let mut rows = Vec::new();
    for cond in conditions(config) {
        let weight = cond.map_or(1.0, |c| table.bsm_marginal(c));
        let (Some(s), Some(corr)) = (
            table.chsh(cond),
            SETTINGS
                .iter()
                .map(|&(i, j)| table.correlation(i, j, cond))
                .collect::<Option<Vec<_>>>(),
        ) else {
            continue;
        };
        rows.push(ChshRow {
            filter: filter_for(cond).describe(),
            weight: round12(weight),
            correlations: [corr[0], corr[1], corr[2], corr[3]].map(round12),
            s: round12(s),
            s_std_err: None,
        });
    }
    Ok(rows)
}

fn filter_for(cond: Option<BsmOutcome>) -> SelectionFilter {
    cond.map_or(SelectionFilter::None, SelectionFilter::bsm_equals)
}

fn sampled_rows(config: &ExperimentConfig) -> CliResult<Vec<ChshRow>> {
    let records = run_batch(config)?;
    let mut rows = Vec::new();
    for cond in conditions(config) {
        let filter = filter_for(cond);
        let counts = CellCounts::accumulate(&records, &filter);
        let report = match counts.chsh(&filter) {
            Ok(r) => r,
            // an outcome never seen in a small run is simply not listed
            Err(SimError::InsufficientData { .. }) if cond.is_some() => continue,
            Err(e) => return Err(e.into()),
        };
        let weight = report.kept as f64 / report.total.max(1) as f64;
        rows.push(ChshRow {
            filter: filter.describe(),
            weight: round12(weight),
            correlations: report.correlations().map(|c| round12(c.e_value)),
            s: round12(report.s),
            s_std_err: Some(round12(report.s_std_err)),
        });
    }
    Ok(rows)
}

fn stage_rows(config: &ExperimentConfig) -> CliResult<Vec<StageRow>> {
    Ok(stage_entanglement_report(config)?
        .into_iter()
        .map(|s| StageRow {
            stage: s.stage.to_string(),
            probability: round12(s.probability),
            concurrence: round12(s.metrics.concurrence),
            negativity: round12(s.metrics.negativity),
            purity: round12(s.metrics.purity),
        })
        .collect())
}

fn render_text(doc: &ReportDoc) -> String {
    let c = &doc.config;
    let mut out = String::new();
    let angles = c.angle_degrees().map(fmt12).join(",");
    let _ = writeln!(out, "swapsim report ({})", doc.source);
    let _ = writeln!(
        out,
        "ordering={} bsm-mode={} angles={} visibility={}",
        c.ordering,
        c.bsm_mode.label(),
        angles,
        fmt12(c.visibility)
    );
    if doc.source == "sampled" {
        let _ = writeln!(out, "trials={} seed={}", c.trials, c.seed);
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "entanglement of photons 0 and 3 (exact):");
    for s in &doc.stages {
        let _ = writeln!(
            out,
            "  {:<22} p={:<14} concurrence={:<14} negativity={:<14} purity={}",
            s.stage,
            fmt12(s.probability),
            fmt12(s.concurrence),
            fmt12(s.negativity),
            fmt12(s.purity)
        );
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "CHSH by selection:");
    for r in &doc.chsh {
        let e = r.correlations.map(fmt12).join(", ");
        let err = r.s_std_err.map(|v| format!(" +/- {}", fmt12(v))).unwrap_or_default();
        let _ = writeln!(
            out,
            "  {:<16} weight={:<14} E=[{}] S={}{}",
            r.filter,
            fmt12(r.weight),
            e,
            fmt12(r.s),
            err
        );
    }
    out
}

fn scan_csv(args: &ReportArgs, config: &ExperimentConfig) -> CliResult<String> {
    if !(args.scan_step > 0.0) || !args.scan_max.is_finite() || args.scan_max < 0.0 {
        return Err(CliError::Usage("--scan-step must be positive and --scan-max non-negative".into()));
    }
    let steps = (args.scan_max / args.scan_step + 1e-9).floor() as u64;
    let alpha = config.angles0[0];
    let mut out = String::from("delta_deg,e_psi_minus,e_unconditional\n");
    for i in 0..=steps {
        let delta_deg = i as f64 * args.scan_step;
        let delta = AnalyzerAngle::from_degrees(alpha.degrees() + delta_deg)?;
        let (e_psi, e_all) = if args.exact {
            let at = |cond| exact_correlation(alpha, delta, config.ordering, config.bsm_mode, config.visibility, cond);
            (at(Some(BsmOutcome::PsiMinus))?, at(None)?)
        } else {
            let point = ExperimentConfig {
                angles3: [delta, AnalyzerAngle::from_degrees(delta.degrees() + 45.0)?],
                ..config.clone()
            };
            let records = run_batch(&point)?;
            let e = |filter: SelectionFilter| -> CliResult<f64> {
                Ok(CellCounts::accumulate(&records, &filter).correlation(0, 0)?.e_value)
            };
            (e(SelectionFilter::bsm_equals(BsmOutcome::PsiMinus))?, e(SelectionFilter::None)?)
        };
        let _ = writeln!(out, "{},{},{}", fmt12(delta_deg), fmt12(e_psi), fmt12(e_all));
    }
    Ok(out)
}

pub fn report(args: ReportArgs) -> CliResult<()> {
    crate::configure_threads(args.threads)?;
    let config = experiment_config(args.trials, args.seed.seed, &args.experiment)?;
    if args.scan {
        let csv = scan_csv(&args, &config)?;
        return emit(args.out.as_deref(), &csv);
    }
    let doc = ReportDoc {
        source: if args.exact { "exact" } else { "sampled" },
        stages: stage_rows(&config)?,
        chsh: if args.exact { exact_rows(&config)? } else { sampled_rows(&config)? },
        config,
    };
    let text = match args.format {
        FormatArg::Text => render_text(&doc),
        FormatArg::Json => serde_json::to_string_pretty(&doc).expect("report serializes") + "\n",
    };
    emit(args.out.as_deref(), &text)
}
