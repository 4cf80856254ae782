//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`) so the summary lines are always
//! printed. Exit status is nonzero if any criterion fails.

use std::f64::consts::SQRT_2;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use swapsim_core::analysis::{chsh, CellCounts, ChshReport, SelectionFilter};
use swapsim_core::classical::{
    apply_discard, pr_box_rule, quantum_mimic_rule, random_marker_models, run_lhv,
    settings_blind_check, ClassicalConfig, HiddenVariableModel,
};
use swapsim_core::entanglement::metrics;
use swapsim_core::measure::{
    outcome_distribution, polarization_observable, AnalyzerAngle, BsmMode, BsmOutcome,
    MeasurementSpec, Outcome,
};
use swapsim_core::protocol::{
    exact_joint_distribution, run_batch, run_trial, stage_entanglement_report, ExperimentConfig,
    JointKey, Ordering, Stage,
};
use swapsim_core::qstate::{
    partial_trace, prepare_swap_input, tensor, to_density, DensityMatrix, PureState,
};
use swapsim_core::rng::RandomSource;

const N: u64 = 1_000_000;
const SIGMAS: f64 = 5.0;
const EXACT_TOL: f64 = 1e-12;
const METRIC_TOL: f64 = 1e-9;
const PROPERTY_CASES: u32 = 100;

struct Verdict {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn combine(parts: Vec<Verdict>) -> Verdict {
    let pass = parts.iter().all(|v| v.pass);
    let detail = parts
        .iter()
        .map(|v| format!("{}{}", if v.pass { "" } else { "FAILED " }, v.detail))
        .collect::<Vec<_>>()
        .join("; ");
    Verdict { pass, detail }
}

fn tsirelson() -> f64 {
    2.0 * SQRT_2
}

fn single_thread<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .expect("thread pool")
        .install(f)
}

fn criterion_1() -> Verdict {
    let mut parts = Vec::new();
    let table = outcome_distribution(
        &prepare_swap_input(),
        &[MeasurementSpec::Bell {
            qubits: (1, 2),
            mode: BsmMode::Full,
        }],
    )
    .unwrap();
    let worst = BsmOutcome::outcomes(BsmMode::Full)
        .iter()
        .map(|o| (table.probability(&[Outcome::Bell(*o)]) - 0.25).abs())
        .fold(0.0, f64::max);
    parts.push(check(worst <= EXACT_TOL, format!("exact max |p−0.25| = {worst:.1e}")));

    let start = Instant::now();
    let recs = single_thread(|| run_batch(&ExperimentConfig::new(N, 101)).unwrap());
    let elapsed = start.elapsed();
    let sigma = (0.25 * 0.75 / N as f64).sqrt();
    let mut worst_z: f64 = 0.0;
    for o in BsmOutcome::outcomes(BsmMode::Full) {
        let f = recs.iter().filter(|r| r.bsm == *o).count() as f64 / N as f64;
        worst_z = worst_z.max((f - 0.25).abs() / sigma);
    }
    parts.push(check(worst_z <= SIGMAS, format!("max deviation {worst_z:.2}σ at N=1e6")));
    parts.push(check(
        elapsed < Duration::from_secs(60),
        format!("single-threaded runtime {:.1}s", elapsed.as_secs_f64()),
    ));
    combine(parts)
}

fn within(report: &ChshReport, target: f64) -> bool {
    (report.s_abs - target).abs() <= SIGMAS * report.s_std_err
}

fn criterion_2() -> Verdict {
    let config = ExperimentConfig::new(N, 202);
    let exact = exact_joint_distribution(&config).unwrap().chsh(Some(BsmOutcome::PsiMinus)).unwrap();
    let recs = run_batch(&config).unwrap();
    let report = chsh(&recs, &SelectionFilter::bsm_equals(BsmOutcome::PsiMinus)).unwrap();
    combine(vec![
        check(
            (exact.abs() - tsirelson()).abs() <= METRIC_TOL,
            format!("exact |S| = {:.9}", exact.abs()),
        ),
        check(
            within(&report, tsirelson()),
            format!(
                "empirical |S| = {:.4} ± {:.4} (kept {} of {})",
                report.s_abs, report.s_std_err, report.kept, report.total
            ),
        ),
    ])
}

fn criterion_3() -> Verdict {
    let config = ExperimentConfig::new(N, 303);
    let table = exact_joint_distribution(&config).unwrap();
    let worst = (0..2u8)
        .flat_map(|i| (0..2u8).map(move |j| (i, j)))
        .map(|(i, j)| table.correlation(i, j, None).unwrap().abs())
        .fold(0.0, f64::max);
    let recs = run_batch(&config).unwrap();
    let report = chsh(&recs, &SelectionFilter::None).unwrap();
    combine(vec![
        check(worst <= EXACT_TOL, format!("exact max |E| = {worst:.1e}")),
        check(
            report.s_abs < SIGMAS * report.s_std_err,
            format!("empirical |S| = {:.4}, 5σ = {:.4}", report.s_abs, SIGMAS * report.s_std_err),
        ),
    ])
}

fn criterion_4() -> Verdict {
    let mut parts = Vec::new();
    for mode in [BsmMode::Full, BsmMode::Partial] {
        let base = ExperimentConfig::new(N, 404).with_bsm_mode(mode);
        let a = exact_joint_distribution(&base.clone().with_ordering(Ordering::BsmFirst)).unwrap();
        let b = exact_joint_distribution(&base.clone().with_ordering(Ordering::PolarizationsFirst)).unwrap();
        let d = a.max_abs_diff(&b);
        parts.push(check(d <= EXACT_TOL, format!("{} exact tables differ by {d:.1e}", mode.label())));
    }
    let base = ExperimentConfig::new(N, 404);
    let exact = exact_joint_distribution(&base).unwrap();
    let count = |ordering| {
        let recs = run_batch(&base.clone().with_ordering(ordering)).unwrap();
        let mut counts = std::collections::BTreeMap::<JointKey, u64>::new();
        for r in &recs {
            *counts.entry(JointKey::of(r)).or_default() += 1;
        }
        counts
    };
    let first = count(Ordering::BsmFirst);
    let later = count(Ordering::PolarizationsFirst);
    let mut worst_z: f64 = 0.0;
    for (key, &p) in exact.cells() {
        let f1 = first.get(key).copied().unwrap_or(0) as f64 / N as f64;
        let f2 = later.get(key).copied().unwrap_or(0) as f64 / N as f64;
        let sigma = (2.0 * p * (1.0 - p) / N as f64).sqrt();
        let z = if sigma > 0.0 { (f1 - f2).abs() / sigma } else if f1 == f2 { 0.0 } else { f64::INFINITY };
        worst_z = worst_z.max(z);
    }
    parts.push(check(
        worst_z <= SIGMAS,
        format!("empirical per-cell max {worst_z:.2}σ over {} cells", exact.cells().len()),
    ));
    combine(parts)
}

fn criterion_5() -> Verdict {
    let full = stage_entanglement_report(&ExperimentConfig::new(1, 0)).unwrap();
    let pre = &full[0];
    let quarter = DensityMatrix::maximally_mixed(2).unwrap();
    let mut parts = vec![check(
        pre.stage == Stage::PreBsm && pre.rho03.max_abs_diff(&quarter) <= EXACT_TOL && pre.metrics.concurrence.abs() <= METRIC_TOL,
        format!("pre-BSM C = {:.1e}", pre.metrics.concurrence),
    )];
    let post: Vec<_> = full.iter().filter(|s| matches!(s.stage, Stage::PostBsm(_))).collect();
    let worst = post
        .iter()
        .map(|s| (s.metrics.concurrence - 1.0).abs())
        .fold(0.0, f64::max);
    parts.push(check(
        post.len() == 4 && worst <= METRIC_TOL,
        format!("post-BSM (4 outcomes) max |C−1| = {worst:.1e}"),
    ));
    let partial = stage_entanglement_report(&ExperimentConfig::new(1, 0).with_bsm_mode(BsmMode::Partial)).unwrap();
    let other = partial.iter().find(|s| s.stage == Stage::PostBsm(BsmOutcome::Other));
    parts.push(match other {
        Some(s) => check(
            s.metrics.concurrence.abs() <= METRIC_TOL,
            format!("partial-mode other C = {:.1e}", s.metrics.concurrence),
        ),
        None => check(false, "partial-mode other snapshot missing"),
    });
    combine(parts)
}

fn criterion_6() -> Verdict {
    let config = ClassicalConfig::new(N, 606);
    let recs = run_lhv(&HiddenVariableModel::uniform(), &config).unwrap();
    let (kept, fraction) = apply_discard(&recs, &pr_box_rule(config.angles()), 1);
    let pr = chsh(&kept, &SelectionFilter::None).unwrap();
    let sigma = (0.25 / N as f64).sqrt();
    let (mimic_kept, mimic_fraction) = apply_discard(&recs, &quantum_mimic_rule(config.angles()), 2);
    let mimic = chsh(&mimic_kept, &SelectionFilter::None).unwrap();
    combine(vec![
        check(pr.s_abs == 4.0, format!("pr-box |S| = {}", pr.s_abs)),
        check(
            (fraction - 0.5).abs() <= SIGMAS * sigma,
            format!("pr-box keep fraction {fraction:.5}"),
        ),
        check(
            within(&mimic, tsirelson()),
            format!(
                "quantum-mimic |S| = {:.4} ± {:.4}, keep fraction {mimic_fraction:.5}",
                mimic.s_abs, mimic.s_std_err
            ),
        ),
    ])
}

fn criterion_7() -> Verdict {
    let start = Instant::now();
    let mut models = random_marker_models(20, 707);
    models.push(HiddenVariableModel::sign());
    models.push(HiddenVariableModel::constant(1, 1));
    let report = settings_blind_check(&models, &ClassicalConfig::new(N, 717)).unwrap();
    let elapsed = start.elapsed();
    let worst = report
        .models
        .iter()
        .flat_map(|m| &m.labels)
        .map(|l| (l.s_abs - 2.0) / l.s_std_err.max(f64::MIN_POSITIVE))
        .fold(f64::NEG_INFINITY, f64::max);
    let max_s = report.models.iter().map(|m| m.max_s_abs).fold(0.0, f64::max);
    combine(vec![
        check(
            report.all_within_bound,
            format!(
                "{} models, max post-selected |S| = {max_s:.4}, worst (|S|−2)/σ = {worst:.2}",
                report.models.len()
            ),
        ),
        check(
            elapsed < Duration::from_secs(600),
            format!("runtime {:.1}s", elapsed.as_secs_f64()),
        ),
    ])
}

fn run_property<S: Strategy>(name: &str, strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Verdict {
    let mut runner = TestRunner::new(Config {
        cases: PROPERTY_CASES,
        failure_persistence: None,
        ..Config::default()
    });
    match runner.run(&strategy, test) {
        Ok(()) => check(true, format!("{name} ({PROPERTY_CASES} cases)")),
        Err(e) => check(false, format!("{name}: {e}")),
    }
}

fn state_of(n: usize) -> impl Strategy<Value = PureState> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1 << n).prop_filter_map("nonzero", move |v| {
        PureState::normalized(n, v.into_iter().map(|(r, i)| Complex64::new(r, i)).collect()).ok()
    })
}

fn criterion_8() -> Verdict {
    let mut parts = Vec::new();
    parts.push(run_property("normalization", (state_of(2), state_of(2)), |(a, b)| {
        let t = tensor(&a, &b).unwrap();
        prop_assert!((t.norm_sqr() - 1.0).abs() <= EXACT_TOL);
        let rho = to_density(&t);
        prop_assert!((rho.trace() - 1.0).abs() <= EXACT_TOL);
        prop_assert!(rho.hermiticity_error() <= EXACT_TOL);
        Ok(())
    }));
    parts.push(run_property("projector completeness", -360.0f64..360.0, |theta| {
        let (p, m) = polarization_observable(AnalyzerAngle::from_degrees(theta).unwrap());
        prop_assert!((p + m - nalgebra::Matrix2::identity()).norm() <= EXACT_TOL);
        prop_assert!((p * p - p).norm() <= EXACT_TOL);
        Ok(())
    }));
    parts.push(run_property("partial-trace consistency", (state_of(2), state_of(2)), |(a, b)| {
        let rho = to_density(&tensor(&a, &b).unwrap());
        let ra = partial_trace(&rho, &[0, 1]).unwrap();
        let rb = partial_trace(&rho, &[2, 3]).unwrap();
        prop_assert!(ra.max_abs_diff(&to_density(&a)) <= EXACT_TOL);
        prop_assert!(rb.max_abs_diff(&to_density(&b)) <= EXACT_TOL);
        Ok(())
    }));
    let unitary = (0.0f64..6.3, 0.0f64..6.3, 0.0f64..1.58).prop_map(|(p1, p2, t)| {
        let a = Complex64::from_polar(t.cos(), p1);
        let b = Complex64::from_polar(t.sin(), p2);
        DMatrix::from_row_slice(2, 2, &[a, -b.conj(), b, a.conj()])
    });
    parts.push(run_property(
        "local-unitary invariance",
        (state_of(2), state_of(2), 0.0f64..1.0, unitary.clone(), unitary),
        |(s1, s2, w, u, v)| {
            let rho = DensityMatrix::mixture(&[(w, to_density(&s1)), (1.0 - w, to_density(&s2))]).unwrap();
            let rotated = rho.conjugate_by(&u.kronecker(&v)).unwrap();
            let (m0, m1) = (metrics(&rho).unwrap(), metrics(&rotated).unwrap());
            prop_assert!((m0.concurrence - m1.concurrence).abs() <= METRIC_TOL);
            prop_assert!((m0.negativity - m1.negativity).abs() <= METRIC_TOL);
            Ok(())
        },
    ));
    parts.push(run_property("mergeable aggregation", (any::<u64>(), 0usize..500), |(seed, cut)| {
        let recs = run_batch(&ExperimentConfig::new(500, seed)).unwrap();
        let f = SelectionFilter::bsm_equals(BsmOutcome::PsiMinus);
        let whole = CellCounts::accumulate(&recs, &f);
        let merged = CellCounts::accumulate(&recs[cut..], &f).merge(&CellCounts::accumulate(&recs[..cut], &f));
        prop_assert_eq!(whole, merged);
        Ok(())
    }));
    parts.push(run_property("seed determinism", (any::<u64>(), any::<u64>()), |(seed, id)| {
        let config = ExperimentConfig::new(1, seed);
        prop_assert_eq!(run_trial(&config, id).unwrap(), run_trial(&config, id).unwrap());
        let (mut a, mut b) = (RandomSource::new(seed, id), RandomSource::new(seed, id));
        prop_assert_eq!(a.next_u64(), b.next_u64());
        Ok(())
    }));
    combine(parts)
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 8] = [
        ("swapping statistics", criterion_1),
        ("post-selected CHSH", criterion_2),
        ("no unconditional violation", criterion_3),
        ("order invariance", criterion_4),
        ("no retroactive entanglement", criterion_5),
        ("classical discarding", criterion_6),
        ("settings-blind LHV bound", criterion_7),
        ("property suites", criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = run();
        let status = if v.pass { "PASS" } else { "FAIL" };
        if !v.pass {
            failed += 1;
        }
        println!(
            "criterion {} [{status}] {name}: {} ({:.1}s)",
            i + 1,
            v.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
