use std::time::Instant;

use anyhow::Result;
use fmrnn_core::checks::{
    gradient_suite, param_count_report, pooling_disagreement, pooling_oracle, segmentation_oracle, GRAD_EPS,
    GRAD_TOLERANCE,
};
use fmrnn_core::engine::{bimodal_gan_probe, ProbeConfig, PROBE_MODES};

use super::Outcome;
use crate::config::RunConfig;
use crate::metrics::MetricsRecord;

#[derive(Debug, Clone, Default)]
pub struct VerifyOptions {
    /// scale the analytic gradient of this check to prove the suite notices
    pub corrupt_gradient: Option<String>,
    pub skip_probe: bool,
}

/// Gradient suite, parameter counts, segmentation and pooling oracles and
/// the bimodal probe. Failures are listed in `Outcome::failures`.
pub fn verify(cfg: &RunConfig, opts: &VerifyOptions) -> Result<Outcome> {
    cfg.persist()?;
    let mut out = Outcome::new(MetricsRecord::new("verify", cfg));
    let check = |out: &mut Outcome, name: &str, ok: bool, detail: String| {
        out.say(format!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" }));
        out.record.scalar(&format!("pass/{name}"), if ok { 1.0 } else { 0.0 });
        if !ok {
            out.failures.push(name.to_string());
        }
    };

    let t = Instant::now();
    for c in gradient_suite(opts.corrupt_gradient.as_deref()) {
        let detail = match &c.error {
            Some(e) => format!("could not run: {e}"),
            None => format!(
                "max rel error {:.2e} (tol {GRAD_TOLERANCE:e}, eps {GRAD_EPS:e}) at {}, {} points, {} ill-conditioned draws skipped",
                c.max_rel_error, c.worst_param, c.points, c.skipped
            ),
        };
        out.record.scalar(&format!("grad/{}", c.name), c.max_rel_error);
        check(&mut out, &format!("grad/{}", c.name), c.passed, detail);
    }
    out.say(format!("gradient suite took {:.1}s", t.elapsed().as_secs_f64()));

    let r = param_count_report()?;
    let ok = r.shared_cell_d128 == 96
        && r.shared_cell_d2048 == 96
        && r.vanilla_cell == 5_244_928
        && r.ratio() > 5e4;
    check(
        &mut out,
        "param-count",
        ok,
        format!(
            "scalar cell {} at d=128 and {} at d=2048 (formula 4(H+1) = {}); vanilla {} (formula {}); ratio {:.0}",
            r.shared_cell_d128, r.shared_cell_d2048, r.shared_formula, r.vanilla_cell, r.vanilla_formula, r.ratio()
        ),
    );

    let seg = segmentation_oracle(100, cfg.seed)?;
    check(&mut out, "segmentation-oracle", seg == 0, format!("{seg} of 100 plans differ"));
    let pool = pooling_oracle(1000, cfg.seed)?;
    let (avg, max) = pooling_disagreement()?;
    check(
        &mut out,
        "pooling-oracle",
        pool == 0 && avg != max,
        format!("{pool} of 1000 stacks differ; disagreement case average -> {avg}, max -> {max}"),
    );

    if !opts.skip_probe {
        let t = Instant::now();
        let (v1, v2) = PROBE_MODES;
        let p = bimodal_gan_probe(v1, v2, &ProbeConfig::default())?;
        let half = (v1 - v2).abs() / 2.0;
        let ok = (p.l2_only_distance - half).abs() <= 0.2 * half && p.gan_distance < p.l2_only_distance;
        out.record.scalar("probe/l2_only_distance", p.l2_only_distance);
        out.record.scalar("probe/gan_distance", p.gan_distance);
        check(
            &mut out,
            "bimodal-probe",
            ok,
            format!(
                "mean distance to nearest mode: L2-only {:.4} (half gap {half}), adversarial {:.4}; {:.1}s",
                p.l2_only_distance,
                p.gan_distance,
                t.elapsed().as_secs_f64()
            ),
        );
    }
    out.record.scalar("failures", out.failures.len() as f64);
    out.finish(cfg)
}
