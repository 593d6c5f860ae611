//! One PASS/FAIL line per acceptance criterion. Runs without the libtest
//! harness so the lines always reach the terminal; exits nonzero when any
//! criterion fails.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use fmrnn::config::RunConfig;
use fmrnn::io::{
    decode_checkpoint, decode_features, encode_checkpoint, encode_features, encode_text, load_dataset, save_dataset,
    FeatureFormat, FormatError,
};
use fmrnn_core::checks::{
    gradient_suite, param_count_report, pooling_disagreement, pooling_oracle, segmentation_oracle, GRAD_EPS,
    GRAD_POINTS, GRAD_TOLERANCE,
};
use fmrnn_core::data::{
    avg_correlation_vs_stepsize, correlation_matrix, synth_generate, FeatureSequence, Split, SynthSpec,
};
use fmrnn_core::engine::{bimodal_gan_probe, train_classifier, train_forecaster, ProbeConfig, PROBE_MODES};
use fmrnn_core::featmap::{ForecastMode, ForecasterModel, ReadoutKind};
use fmrnn_core::models::Checkpoint;
use fmrnn_core::numcore::{Matrix, Rng};
use fmrnn_core::pipeline::{evaluate, AnticipationConfig, Pooling};

const GRADIENT_BUDGET: Duration = Duration::from_secs(60);
const TABLE5_BUDGET: Duration = Duration::from_secs(600);
const PROBE_BUDGET: Duration = Duration::from_secs(120);
/// accuracy points, as a fraction
const LINEAR_GAP: f64 = 0.02;
const FIG4_GAIN: f64 = 0.02;
const PROBE_L2_BAND: f64 = 0.2;
const COPY_TOLERANCE: f64 = 1e-9;

#[derive(Default)]
struct Report {
    failed: Vec<&'static str>,
}

impl Report {
    fn record(&mut self, name: &'static str, pass: bool, detail: String) {
        println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            self.failed.push(name);
        }
    }

    fn error(&mut self, name: &'static str, e: impl std::fmt::Display) {
        self.record(name, false, format!("error: {e}"));
    }
}

fn main() -> ExitCode {
    let mut r = Report::default();
    gradient_suite_criterion(&mut r);
    parameter_counts(&mut r);
    segmentation(&mut r);
    pooling(&mut r);
    if let Err(e) = table5_and_fig4(&mut r) {
        r.error("table5-ordering", e);
    }
    bimodal_probe(&mut r);
    appendix_b(&mut r);
    if let Err(e) = determinism(&mut r) {
        r.error("determinism", e);
    }
    formats(&mut r);
    if r.failed.is_empty() {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed {}", r.failed.join(", "));
        ExitCode::FAILURE
    }
}

fn gradient_suite_criterion(r: &mut Report) {
    let t = Instant::now();
    let outcomes = gradient_suite(None);
    let took = t.elapsed();
    let worst = outcomes
        .iter()
        .max_by(|a, b| a.max_rel_error.total_cmp(&b.max_rel_error))
        .unwrap();
    let failing: Vec<&str> = outcomes.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    let points = outcomes.iter().all(|c| c.points >= GRAD_POINTS);
    let skipped: usize = outcomes.iter().map(|c| c.skipped).sum();
    r.record(
        "gradient-suite",
        failing.is_empty() && points && took < GRADIENT_BUDGET,
        format!(
            "{} checks x {GRAD_POINTS} points, worst rel error {:.2e} ({}) < {GRAD_TOLERANCE:e} at eps {GRAD_EPS:e}; \
             {skipped} ill-conditioned draws skipped; failing {failing:?}; {:.1}s < {}s",
            outcomes.len(),
            worst.max_rel_error,
            worst.name,
            took.as_secs_f64(),
            GRADIENT_BUDGET.as_secs()
        ),
    );
}

fn parameter_counts(r: &mut Report) {
    match param_count_report() {
        Ok(c) => {
            // independent closed forms: 4 gates, each with input, recurrent
            // and bias weights
            let vanilla = |d: usize, h: usize| 4 * (h * d + h * h + h);
            let scalar = |h: usize| vanilla(1, h);
            let pass = c.shared_cell_d128 == scalar(4)
                && c.shared_cell_d2048 == scalar(4)
                && c.shared_cell_d128 == 96
                && c.vanilla_cell == vanilla(2048, 512)
                && c.vanilla_cell == 5_244_928
                && c.ratio() > 5e4
                && c.shared_formula == 20
                && c.vanilla_formula == 20_971_520;
            r.record(
                "parameter-sharing",
                pass,
                format!(
                    "scalar cell {} (d=128) / {} (d=2048), formula 4(H+1)={}; vanilla {}, formula {}; ratio {:.0}",
                    c.shared_cell_d128,
                    c.shared_cell_d2048,
                    c.shared_formula,
                    c.vanilla_cell,
                    c.vanilla_formula,
                    c.ratio()
                ),
            );
        }
        Err(e) => r.error("parameter-sharing", e),
    }
}

fn segmentation(r: &mut Report) {
    match segmentation_oracle(100, 2024) {
        Ok(f) => r.record("segmentation-oracle", f == 0, format!("{f} of 100 random (d, D, S) differ bitwise")),
        Err(e) => r.error("segmentation-oracle", e),
    }
}

fn pooling(r: &mut Report) {
    match (pooling_oracle(1000, 2024), pooling_disagreement()) {
        (Ok(f), Ok((avg, max))) => r.record(
            "pooling-oracle",
            f == 0 && avg == 1 && max == 0,
            format!("{f} of 1000 stacks differ; disagreement case: average -> {avg}, max -> {max}"),
        ),
        (Err(e), _) | (_, Err(e)) => r.error("pooling-oracle", e),
    }
}

fn desk_config() -> anyhow::Result<RunConfig> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/desk.toml");
    RunConfig::load(&path)
}

fn split(spec: &SynthSpec, data: &[FeatureSequence], which: Split) -> Vec<FeatureSequence> {
    data.iter()
        .zip(spec.split_assignments())
        .filter(|(_, s)| *s == which)
        .map(|(v, _)| v.clone())
        .collect()
}

fn table5_and_fig4(r: &mut Report) -> anyhow::Result<()> {
    let t = Instant::now();
    let cfg = desk_config()?;
    let spec = cfg.synth_spec();
    assert_eq!(
        (spec.classes, spec.feature_dim, spec.block, spec.frames, spec.videos_per_class),
        (4, 64, 8, 30, 50),
        "desk dataset shape"
    );
    let data = synth_generate(&spec)?;
    let train = split(&spec, &data, Split::Train);
    let test = split(&spec, &data, Split::Test);
    let dim = spec.feature_dim;
    let classifier = train_classifier(&train, &cfg.classifier_config(dim, spec.classes), &cfg.classifier_train(dim))?
        .classifier;
    let anticipation = cfg.anticipation();

    let mut accuracy = Vec::new();
    let mut full_model: Option<ForecasterModel> = None;
    for (mode, readout) in [
        (ForecastMode::Linear, ReadoutKind::Linear),
        (cfg.forecaster.mode, ReadoutKind::Linear),
        (cfg.forecaster.mode, ReadoutKind::Rbf),
    ] {
        let mut tc = cfg.forecaster_train(dim);
        tc.w_adv = 0.0;
        tc.forecaster.mode = mode;
        tc.forecaster.readout = readout;
        let model = train_forecaster(&train, &tc)?.forecaster;
        accuracy.push(evaluate(&test, Some(&model), &classifier, &anticipation)?.accuracy);
        full_model = Some(model);
    }
    let took = t.elapsed();
    let (lin, fm, rbf) = (accuracy[0], accuracy[1], accuracy[2]);
    r.record(
        "table5-ordering",
        lin < fm && fm <= rbf && fm - lin >= LINEAR_GAP && took < TABLE5_BUDGET,
        format!(
            "test accuracy (r={}, p={}, {} pooling, {} videos): linear {:.3} < fm-rnn {:.3} <= fm-rnn+rbf {:.3}; \
             linear gap {:+.3} >= {LINEAR_GAP}; {:.0}s < {}s",
            anticipation.observe_fraction,
            anticipation.predict_fraction,
            anticipation.pooling,
            test.len(),
            lin,
            fm,
            rbf,
            fm - lin,
            took.as_secs_f64(),
            TABLE5_BUDGET.as_secs()
        ),
    );

    let model = full_model.expect("three models trained");
    let mut curve = Vec::new();
    for i in 0..=5 {
        let p = i as f64 / 10.0;
        let at = AnticipationConfig {
            predict_fraction: p,
            pooling: Pooling::None,
            ..anticipation
        };
        curve.push((p, evaluate(&test, Some(&model), &classifier, &at)?.accuracy));
    }
    let gain = curve[5].1 - curve[0].1;
    let shown: Vec<String> = curve.iter().map(|(p, a)| format!("{p}:{a:.3}")).collect();
    r.record(
        "fig4-trend",
        gain >= FIG4_GAIN,
        format!(
            "no-pooling accuracy vs p with fm-rnn+rbf [{}]; p=0.5 minus p=0 = {gain:+.3} >= {FIG4_GAIN}",
            shown.join(" ")
        ),
    );
    Ok(())
}

fn bimodal_probe(r: &mut Report) {
    let t = Instant::now();
    let (v1, v2) = PROBE_MODES;
    match bimodal_gan_probe(v1, v2, &ProbeConfig::default()) {
        Ok(p) => {
            let took = t.elapsed();
            let half = (v1 - v2).abs() / 2.0;
            let pass = (p.l2_only_distance - half).abs() <= PROBE_L2_BAND * half
                && p.gan_distance < p.l2_only_distance
                && took < PROBE_BUDGET;
            r.record(
                "bimodal-probe",
                pass,
                format!(
                    "modes {v1}/{v2}: L2-only distance {:.4} within {PROBE_L2_BAND} of {half}; adversarial {:.4} < L2-only; {:.0}s < {}s",
                    p.l2_only_distance,
                    p.gan_distance,
                    took.as_secs_f64(),
                    PROBE_BUDGET.as_secs()
                ),
            );
        }
        Err(e) => r.error("bimodal-probe", e),
    }
}

fn appendix_b(r: &mut Report) {
    let run = || -> anyhow::Result<(f64, f64, f64)> {
        let spec = desk_config()?.synth_spec();
        let data = synth_generate(&spec)?;
        let b = spec.block;
        let curve = avg_correlation_vs_stepsize(&data, &[b, 4 * b])?;

        let mut rng = Rng::new(3);
        let rows: Vec<Vec<f64>> = (0..200)
            .map(|_| {
                let a = rng.gaussian_vec(4);
                let mut row = a.clone();
                row.extend_from_slice(&a);
                row.extend(rng.gaussian_vec(8));
                row
            })
            .collect();
        let copy = FeatureSequence::new("copy", 0, Matrix::from_rows(&rows)?)?;
        let c = correlation_matrix(&[copy], 4)?;
        Ok((curve[0].1, curve[1].1, c.get(0, 1)))
    };
    match run() {
        Ok((at_b, at_4b, copied)) => r.record(
            "appendix-b-trend",
            at_b > at_4b && (copied - 1.0).abs() <= COPY_TOLERANCE,
            format!("mean |corr| at D=B {at_b:.4} > at D=4B {at_4b:.4}; copied block {copied:.12} (tol {COPY_TOLERANCE:e})"),
        ),
        Err(e) => r.error("appendix-b-trend", e),
    }
}

const PIPELINE_CONFIG: &str = r#"
seed = 21
[synth]
classes = 3
feature_dim = 16
frames = 12
videos_per_class = 6
block = 4
[forecaster]
mode = "flattened"
readout = "rbf"
feature_step = 8
stride = 4
hidden = 3
kernels = 4
[train]
w_adv = 1.0
lr = 0.01
epochs = 2
batch = 16
[classifier]
hidden = [8]
kernels = 4
lr = 0.1
epochs = 2
batch = 32
[anticipation]
observe_frac = 0.25
predict_frac = 0.5
"#;

fn pipeline_run(dir: &Path) -> anyhow::Result<()> {
    fs::write(dir.join("run.toml"), PIPELINE_CONFIG)?;
    let steps: [&[&str]; 3] = [
        &["gen-synthetic", "--config", "run.toml", "--out", "data"],
        &["train", "--config", "run.toml", "--data", "data/manifest.json", "--out", "out"],
        &["evaluate", "--config", "run.toml", "--data", "data/manifest.json", "--out", "out", "--p-series", "0,0.25,0.5"],
    ];
    for args in steps {
        let out = Command::new(env!("CARGO_BIN_EXE_fmrnn"))
            .current_dir(dir)
            .env("SOURCE_DATE_EPOCH", "1600000000")
            .args(args)
            .output()?;
        if !out.status.success() {
            anyhow::bail!("{args:?}: {}", String::from_utf8_lossy(&out.stderr).trim());
        }
    }
    Ok(())
}

fn files_under(root: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p.strip_prefix(root).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

fn determinism(r: &mut Report) -> anyhow::Result<()> {
    let a = tempfile::tempdir()?;
    let b = tempfile::tempdir()?;
    pipeline_run(a.path())?;
    pipeline_run(b.path())?;
    let files = files_under(a.path());
    let differing: Vec<String> = files
        .iter()
        .filter(|f| fs::read(a.path().join(f)).ok() != fs::read(b.path().join(f)).ok())
        .map(|f| f.display().to_string())
        .collect();
    let key = ["out/forecaster.ckpt", "out/classifier.ckpt", "out/discriminator.ckpt", "out/metrics.jsonl", "out/loss.jsonl"];
    let present = key.iter().all(|k| files.contains(&PathBuf::from(k)));
    r.record(
        "determinism",
        differing.is_empty() && present && files == files_under(b.path()),
        format!(
            "gen-synthetic -> train -> evaluate twice: {} files compared (checkpoints, metrics, loss log, features), differing {differing:?}",
            files.len()
        ),
    );
    Ok(())
}

fn formats(r: &mut Report) {
    let mut problems: Vec<String> = Vec::new();
    let mut check = |ok: bool, what: &str| {
        if !ok {
            problems.push(what.to_string());
        }
    };
    let p = Path::new("probe.bin");

    // f32-representable values survive both feature formats exactly
    let mut rng = Rng::new(8);
    let values: Vec<f64> = rng.gaussian_vec(7 * 5).iter().map(|v| *v as f32 as f64).collect();
    let m = Matrix::from_vec(7, 5, values).unwrap();
    check(decode_features(p, &encode_features(&m)).ok().as_ref() == Some(&m), "binary feature round trip");
    check(decode_features(p, encode_text(&m).as_bytes()).ok().as_ref() == Some(&m), "text feature round trip");

    // checkpoints of every kind survive bit-exactly
    let spec = SynthSpec {
        classes: 2,
        feature_dim: 8,
        frames: 6,
        videos_per_class: 4,
        block: 4,
        ..SynthSpec::default()
    };
    let data = synth_generate(&spec).unwrap();
    let mut cfg = RunConfig::default();
    cfg.forecaster.feature_step = 4;
    cfg.forecaster.stride = 2;
    cfg.train.epochs = 1;
    cfg.classifier.hidden = vec![4];
    cfg.classifier.kernels = 3;
    cfg.classifier.epochs = 1;
    let run = train_forecaster(&data, &cfg.forecaster_train(8)).unwrap();
    let clf = train_classifier(&data, &cfg.classifier_config(8, 2), &cfg.classifier_train(8)).unwrap().classifier;
    let ckpts = [
        Checkpoint::from_forecaster(&run.forecaster),
        Checkpoint::from_discriminator(run.discriminator.as_ref().unwrap()),
        Checkpoint::from_classifier(&clf),
    ];
    for c in &ckpts {
        let bytes = encode_checkpoint(c);
        let back = decode_checkpoint(p, &bytes);
        check(back.as_ref().ok() == Some(c), "checkpoint round trip");
        check(back.map(|b| encode_checkpoint(&b) == bytes).unwrap_or(false), "checkpoint re-encode");
    }

    // malformed inputs
    let bytes = encode_features(&m);
    check(
        matches!(decode_features(p, &bytes[..bytes.len() - 1]), Err(FormatError::Truncated { .. })),
        "truncated feature file",
    );
    let mut magic = bytes.clone();
    magic[..4].copy_from_slice(&[0xff, 0xfe, 0, 1]);
    check(matches!(decode_features(p, &magic), Err(FormatError::BadMagic { .. })), "feature bad magic");
    check(
        matches!(decode_features(p, b"1.0,2.0\n3.0\n"), Err(FormatError::Parse { line: 2, .. })),
        "ragged text rows",
    );
    let ck = encode_checkpoint(&ckpts[0]);
    check(
        matches!(decode_checkpoint(p, &ck[..ck.len() - 8]), Err(FormatError::Truncated { .. })),
        "truncated checkpoint",
    );
    check(matches!(decode_checkpoint(p, b"NOPE\n"), Err(FormatError::BadMagic { .. })), "checkpoint bad magic");
    check(
        decode_checkpoint(p, &ck).unwrap().into_classifier().is_err(),
        "checkpoint kind mismatch",
    );

    // dataset-level errors name the file, the video and the row
    let dir = tempfile::tempdir().unwrap();
    let names = vec!["a".to_string(), "b".to_string()];
    let splits = spec.split_assignments();
    let manifest = save_dataset(dir.path(), "fmt", &names, &data, &splits, FeatureFormat::Binary).unwrap();
    check(
        load_dataset(&manifest).map(|d| d.videos == as_f32(&data)).unwrap_or(false),
        "dataset round trip",
    );
    let text = fs::read_to_string(&manifest).unwrap();
    fs::write(&manifest, text.replacen("\"frames\": 6", "\"frames\": 7", 1)).unwrap();
    check(
        matches!(load_dataset(&manifest), Err(FormatError::HeaderMismatch { field: "T", header: 6, manifest: 7, .. })),
        "manifest/header mismatch",
    );
    fs::write(&manifest, &text).unwrap();
    let mut poisoned = data[1].frames.clone();
    poisoned.set(3, 2, f64::NAN);
    let vid = &data[1].video_id;
    fmrnn::io::write_features(&dir.path().join(format!("features/{vid}.fmf")), &poisoned, FeatureFormat::Binary).unwrap();
    check(
        matches!(load_dataset(&manifest), Err(FormatError::NonFinite { ref video_id, row: 3, .. }) if video_id == vid),
        "non-finite value named",
    );
    fs::remove_file(dir.path().join(format!("features/{vid}.fmf"))).unwrap();
    check(
        matches!(load_dataset(&manifest), Err(FormatError::Io { ref path, .. }) if path.ends_with(format!("{vid}.fmf"))),
        "missing feature file named",
    );

    r.record(
        "format-round-trips",
        problems.is_empty(),
        format!("feature (binary, text), checkpoint (3 kinds) and dataset round trips plus 9 malformed-input paths; problems {problems:?}"),
    );
}

fn as_f32(data: &[FeatureSequence]) -> Vec<FeatureSequence> {
    data.iter()
        .map(|v| {
            let vals: Vec<f64> = v.frames.as_slice().iter().map(|x| *x as f32 as f64).collect();
            FeatureSequence::new(v.video_id.clone(), v.label, Matrix::from_vec(v.len(), v.dim(), vals).unwrap()).unwrap()
        })
        .collect()
}
