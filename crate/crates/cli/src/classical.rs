//! `classical generate | discard | blind-check`.

use serde::Serialize;
use swapsim_core::analysis::{CellCounts, ChshReport, SelectionFilter};
use swapsim_core::classical::{
    apply_discard, pr_box_rule, quantum_mimic_rule, random_marker_models, run_lhv, settings_blind_check,
    ClassicalConfig, HiddenVariableModel,
};
use swapsim_core::format::serialize_f64;
use swapsim_core::measure::AnalyzerAngle;
use swapsim_core::records::{write_jsonl, write_lines, RecordLine};

use crate::args::{BlindCheckArgs, DiscardArgs, GenerateArgs, RuleArg};
use crate::error::{CliError, CliResult};
use crate::io::{emit, read_records, write_atomic};

fn model_by_name(name: &str, seed: u64) -> CliResult<HiddenVariableModel> {
    if let Some(m) = HiddenVariableModel::by_name(name) {
        return Ok(m);
    }
    name.strip_prefix("random-fourier-")
        .and_then(|k| k.parse::<u64>().ok())
        .map(|k| HiddenVariableModel::random_fourier(seed, k))
        .ok_or_else(|| {
            CliError::Usage(format!(
                "unknown model {name:?}; expected sign, uniform, constant or random-fourier-<k>"
            ))
        })
}

pub fn generate(args: GenerateArgs) -> CliResult<()> {
    crate::configure_threads(args.threads)?;
    let model = model_by_name(&args.model, args.seed.seed)?;
    let config = ClassicalConfig::new(args.trials, args.seed.seed).with_angles(args.angles)?;
    let records = run_lhv(&model, &config)?;
    match &args.out {
        Some(path) => write_atomic(path, |w| write_jsonl(w, &records)),
        None => {
            let out = std::io::BufWriter::new(std::io::stdout().lock());
            write_jsonl(out, &records).map_err(|e| CliError::io("stdout", e))
        }
    }
}

/// Recovers `[a, a', b, b']` from the records' setting columns.
fn angles_from_records(records: &[RecordLine]) -> CliResult<[f64; 4]> {
    let mut seen: [Option<f64>; 4] = [None; 4];
    for r in records {
        for (slot, deg) in [
            (r.setting0_index as usize, r.setting0_deg),
            (2 + r.setting3_index as usize, r.setting3_deg),
        ] {
            match seen[slot] {
                None => seen[slot] = Some(deg),
                Some(prev) if (prev - deg).abs() > 1e-9 => {
                    return Err(CliError::Io(format!(
                        "trial {}: setting angle {deg} disagrees with earlier {prev}",
                        r.trial_id
                    )))
                }
                Some(_) => {}
            }
        }
    }
    const NAMES: [&str; 4] = ["a", "a'", "b", "b'"];
    let mut out = [0.0; 4];
    for (i, v) in seen.iter().enumerate() {
        out[i] = v.ok_or_else(|| CliError::InsufficientData(format!("no records with setting {}", NAMES[i])))?;
    }
    Ok(out)
}

#[derive(Serialize)]
struct DiscardReport {
    rule: String,
    #[serde(serialize_with = "serialize_f64")]
    keep_fraction: f64,
    #[serde(flatten)]
    chsh: ChshReport,
}

pub fn discard(args: DiscardArgs) -> CliResult<()> {
    crate::configure_threads(args.threads)?;
    let records = read_records(&args.input)?;
    let degrees = match args.angles {
        Some(a) => a,
        None => angles_from_records(&records)?,
    };
    let [a, a2, b, b2] = degrees.map(AnalyzerAngle::from_degrees);
    let angles = [a?, a2?, b?, b2?];
    let rule = match args.rule {
        RuleArg::PrBox => pr_box_rule(angles),
        RuleArg::QuantumMimic => quantum_mimic_rule(angles),
    };
    let (kept, keep_fraction) = apply_discard(&records, &rule, args.seed.seed);
    if let Some(path) = &args.records_out {
        write_atomic(path, |w| write_lines(w, &kept))?;
    }
    let filter = SelectionFilter::None;
    let mut chsh = CellCounts::accumulate(&kept, &filter).chsh(&filter)?;
    // denominators refer to the file as read, not to the survivors
    chsh.total = records.len() as u64;
    let report = DiscardReport {
        rule: rule.name().to_string(),
        keep_fraction,
        chsh,
    };
    let text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    emit(args.out.as_deref(), &text)
}

pub fn blind_check(args: BlindCheckArgs) -> CliResult<()> {
    crate::configure_threads(args.threads)?;
    if args.models == 0 {
        return Err(CliError::Usage("--models must be at least 1".into()));
    }
    let config = ClassicalConfig::new(args.trials, args.seed.seed).with_angles(args.angles)?;
    let models = random_marker_models(args.models, args.seed.seed);
    let report = settings_blind_check(&models, &config)?;
    let text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    emit(args.out.as_deref(), &text)?;
    if report.all_within_bound {
        Ok(())
    } else {
        Err(CliError::BoundViolated("a post-selected |S| exceeded 2 + 5 standard errors".into()))
    }
}
