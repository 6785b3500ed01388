//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;
mod support;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use gaitxai::data::{generate_synthetic, write_trials, SyntheticSpec};
use gaitxai::eval::{overlap_score, read_regions, zero_rule, EvalReport, RegionSet};
use gaitxai::lrp::{LrpConfig, LrpRule};
use gaitxai::spm::{cohens_d_curve, permutation_threshold, rft_threshold, spm_two_sample, two_sample_t_curve, CurveGroup, SpmConfig};
use gaitxai::{ChannelId, Sex};
use gaitxai_oracles::stats;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use support::{check_report, snapshot, step};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || format!("took {:.2} s, limit {:.0} s", elapsed.as_secs_f64(), limit.as_secs_f64()))
}

fn scratch() -> &'static Path {
    static DIR: OnceLock<tempfile::TempDir> = OnceLock::new();
    DIR.get_or_init(|| tempfile::tempdir().expect("temp dir")).path()
}

fn read_report(out: &Path) -> Result<EvalReport, String> {
    let text = std::fs::read_to_string(out.join("report.json")).map_err(|e| e.to_string())?;
    serde_json::from_str(&text).map_err(|e| e.to_string())
}

fn load(path: &Path) -> Result<RegionSet, String> {
    let file = std::fs::File::open(path).map_err(|e| format!("{}: {e}", path.display()))?;
    read_regions(std::io::BufReader::new(file)).map_err(|e| e.to_string())
}

/// 34 female and 28 male subjects with five trials each.
fn zero_rule_baseline() -> Outcome {
    let start = Instant::now();
    let spec = SyntheticSpec { n_subjects_per_class: 34, ..SyntheticSpec::default() };
    let full = generate_synthetic(&spec, 1).map_err(|e| e.to_string())?;
    let males: Vec<String> = full.subjects().iter().filter(|s| s.1 == Sex::Male).take(28).map(|s| s.0.to_string()).collect();
    let ds = full.filter(|t| t.sex == Sex::Female || males.contains(&t.subject_id)).map_err(|e| e.to_string())?;
    let z = zero_rule(&ds).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure(ds.trials().len() == 310 && (z - 0.548387).abs() < 1e-6, || format!("{} trials, zero-rule {z}", ds.trials().len()))?;
    within(elapsed, Duration::from_secs(1))?;

    let out = scratch().join("zero_rule");
    let mut bytes = Vec::new();
    write_trials(&ds, &mut bytes).map_err(|e| e.to_string())?;
    std::fs::create_dir_all(&out).map_err(|e| e.to_string())?;
    std::fs::write(out.join("dataset.csv"), bytes).map_err(|e| e.to_string())?;
    let cli = Instant::now();
    let text = step("train", &out, &["--set", "train.epochs=0"]);
    ensure(text.contains("zero-rule baseline: 54.8%"), || format!("report text lacks 54.8%:\n{text}"))?;
    Ok(format!(
        "zero_rule = {z:.6} (170/310) in {:.3} s; `train` report prints 54.8% ({:.2} s)",
        elapsed.as_secs_f64(),
        cli.elapsed().as_secs_f64()
    ))
}

/// Output directory of the default-config synthetic run, shared with the recovery check.
fn default_run() -> &'static Path {
    static OUT: OnceLock<PathBuf> = OnceLock::new();
    OUT.get_or_init(|| {
        let out = scratch().join("default");
        step("synth", &out, &["--seed", "42"]);
        step("train", &out, &["--seed", "42"]);
        out
    })
}

fn cv_accuracy() -> Outcome {
    let start = Instant::now();
    let out = default_run();
    let elapsed = start.elapsed();
    let r = read_report(out)?;
    ensure(r.k == 10 && r.n_subjects == 40 && r.n_trials == 200, || format!("unexpected run shape {} folds, {} subjects", r.k, r.n_subjects))?;
    ensure(r.mean_accuracy >= 0.95 && r.mean_accuracy > r.zero_rule, || {
        format!("mean accuracy {:.4} vs zero-rule {:.4}", r.mean_accuracy, r.zero_rule)
    })?;
    within(elapsed, Duration::from_secs(300))?;
    Ok(format!(
        "10-fold mean accuracy {:.3} ± {:.3} > zero-rule {:.3}, {:.0} s",
        r.mean_accuracy,
        r.std_accuracy,
        r.zero_rule,
        elapsed.as_secs_f64()
    ))
}

fn gradient_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = common::rng(7);
    let (mut worst, mut checked, mut skipped) = (0.0f64, 0, 0);
    let graphs = 25;
    for g in 0..graphs {
        let model = common::random_model(common::random_graph(&mut rng), &mut rng);
        let x = common::random_input(model.graph.input_shape(), &mut rng);
        let (c, s, w) = common::gradient_check(&model, &x, g % 2, 1e-5);
        worst = worst.max(w);
        checked += c;
        skipped += s;
    }
    ensure(worst < 1e-4, || format!("worst relative error {worst:.3e}"))?;
    ensure(skipped * 100 <= checked, || format!("{skipped} of {checked} parameters sit on kinks"))?;
    within(start.elapsed(), Duration::from_secs(60))?;
    Ok(format!("{graphs} graphs, {checked} parameters, worst relative error {worst:.2e}"))
}

fn lrp_conservation() -> Outcome {
    let start = Instant::now();
    let mut rng = common::rng(2024);
    let exact = LrpConfig::uniform(LrpRule::Epsilon(0.0));
    let stabilized = LrpConfig::default();
    let (mut worst_exact, mut worst_eps) = (0.0f64, 0.0f64);
    let graphs = 30;
    for _ in 0..graphs {
        let model = common::random_zero_bias_model(common::random_graph(&mut rng), &mut rng);
        let x = common::random_input(model.graph.input_shape(), &mut rng);
        for target in 0..2 {
            let (res, score) = common::lrp_residual(&model, &x, target, &exact);
            worst_exact = worst_exact.max(res.abs() / score.abs().max(1.0));
            let (res, score) = common::lrp_residual(&model, &x, target, &stabilized);
            worst_eps = worst_eps.max(res.abs() / score.abs().max(1.0));
        }
    }
    ensure(worst_exact <= 1e-9, || format!("epsilon=0 residual {worst_exact:.3e}"))?;
    ensure(worst_eps <= 1e-4, || format!("epsilon=1e-6 residual {worst_eps:.3e}"))?;
    within(start.elapsed(), Duration::from_secs(60))?;
    Ok(format!("{graphs} zero-bias graphs: eps=0 worst {worst_exact:.1e}, eps=1e-6 worst {worst_eps:.1e} (relative to max(1,|logit|))"))
}

fn conv_dense_equivalence() -> Outcome {
    let mut rng = common::rng(31);
    let layers = 40;
    let worst = (0..layers).map(|_| common::conv_equivalence_error(&mut rng)).fold(0.0, f64::max);
    ensure(worst <= 1e-12, || format!("worst difference {worst:.3e}"))?;
    Ok(format!("{layers} conv layers x 3 rules, worst difference {worst:.1e}"))
}

fn normal_curves(rng: &mut ChaCha8Rng, n: usize, q: usize, shift: f64) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..q).map(|_| shift + rng.sample::<f64, _>(StandardNormal)).collect()).collect()
}

fn t_field_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    let (mut worst_t, mut worst_id) = (0.0f64, 0.0f64);
    let pairs = 100;
    for _ in 0..pairs {
        let (na, nb) = (rng.random_range(2..25), rng.random_range(2..25));
        let q = rng.random_range(1..60);
        let a = normal_curves(&mut rng, na, q, 0.0);
        let shift = rng.random_range(-1.0..1.0);
        let b = normal_curves(&mut rng, nb, q, shift);
        let (ga, gb) = (CurveGroup::new("A", a.clone()).unwrap(), CurveGroup::new("B", b.clone()).unwrap());
        let t = two_sample_t_curve(&ga, &gb).map_err(|e| e.to_string())?;
        let d = cohens_d_curve(&ga, &gb).map_err(|e| e.to_string())?;
        let factor = ((na * nb) as f64 / (na + nb) as f64).sqrt();
        for ((x, y), dx) in t.t.iter().zip(stats::textbook_t(&a, &b)).zip(&d.d) {
            worst_t = worst_t.max((x - y).abs() / y.abs().max(1.0));
            worst_id = worst_id.max((x - dx * factor).abs() / x.abs().max(1.0));
        }
    }
    ensure(worst_t <= 1e-12, || format!("t differs from the textbook formula by {worst_t:.3e}"))?;
    ensure(worst_id <= 1e-12, || format!("t = d*sqrt(nA nB/(nA+nB)) off by {worst_id:.3e}"))?;
    Ok(format!("{pairs} pairs: textbook t worst {worst_t:.1e}, identity worst {worst_id:.1e}"))
}

fn rft_vs_permutation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let a = CurveGroup::new("A", stats::smooth_gaussian_fields(30, 101, 10.0, &mut rng)).unwrap();
    let b = CurveGroup::new("B", stats::smooth_gaussian_fields(30, 101, 10.0, &mut rng)).unwrap();
    let spm = spm_two_sample(&a, &b, &SpmConfig::default()).map_err(|e| e.to_string())?;
    let perm = permutation_threshold(&a, &b, 0.05, 10_000, 1).map_err(|e| e.to_string())?.t_star;
    let rel = (spm.t_star - perm).abs() / perm;
    ensure(rel <= 0.1, || format!("rft {:.4} vs permutation {perm:.4} ({:.1}%)", spm.t_star, 100.0 * rel))?;

    let mut worst = 0.0f64;
    for &df in &[2.0, 5.0, 10.0, 28.0, 58.0, 198.0, 1000.0] {
        for &alpha in &[0.001, 0.01, 0.025, 0.05, 0.1, 0.25] {
            let t = rft_threshold(df, 0.0, alpha).map_err(|e| e.to_string())?;
            worst = worst.max((t - stats::t_upper_quantile(alpha, df)).abs());
        }
    }
    ensure(worst <= 1e-8, || format!("resels=0 threshold off the t quantile by {worst:.3e}"))?;
    Ok(format!(
        "fwhm est. {:.2}: rft {:.4} vs 10k permutations {perm:.4} ({:.1}%); resels=0 worst {worst:.1e}",
        spm.fwhm,
        spm.t_star,
        100.0 * rel
    ))
}

fn planted_recovery() -> Outcome {
    let out = default_run();
    let explained = step("explain", out, &[]);
    step("spm", out, &[]);
    step("report", out, &[]);
    let (lo, hi) = SyntheticSpec::default().window();
    let lv = ChannelId::parse("L_V").unwrap();
    let spm = load(&out.join("spm/clusters.csv"))?;
    let lrp = load(&out.join("relevance/lrp_regions.csv"))?;
    ensure(spm.intersects(lv, lo, hi), || "no SPM cluster meets the planted window".into())?;
    ensure(lrp.intersects(lv, lo, hi), || "no relevance region meets the planted window".into())?;
    let overlap = overlap_score(&lrp, &spm).overall;
    ensure(overlap > 0.0, || "LRP and SPM regions do not overlap".into())?;
    check_report(out)?;
    let peak = explained.lines().find(|l| l.starts_with("total relevance peak")).unwrap_or("").to_string();
    Ok(format!("SPM and LRP regions meet L_V {lo}-{hi}; overlap {overlap:.3}; {peak}"))
}

fn determinism() -> Outcome {
    let quick = ["--set", "train.epochs=5", "--set", "cv.k=4", "--set", "synth.subjects=8", "--seed", "3"];
    let mut runs = Vec::new();
    for name in ["det_a", "det_b"] {
        let out = scratch().join(name);
        for cmd in ["synth", "train", "explain", "spm", "report"] {
            step(cmd, &out, &quick);
        }
        runs.push(snapshot(&out));
    }
    let (a, b) = (&runs[0], &runs[1]);
    ensure(a.keys().eq(b.keys()), || "the two runs wrote different file sets".into())?;
    let differing: Vec<String> = a.iter().filter(|(k, v)| b.get(*k) != Some(v)).map(|(k, _)| k.display().to_string()).collect();
    ensure(differing.is_empty(), || format!("bytes differ in {}", differing.join(", ")))?;
    Ok(format!("synth/train/explain/spm/report rerun: {} files byte-identical", a.len()))
}

fn vertical_only_ablation() -> Outcome {
    let out = scratch().join("v_only");
    let args = ["--set", "input.components=V", "--set", "train.epochs=40", "--set", "cv.k=5", "--set", "synth.subjects=10"];
    for cmd in ["synth", "train", "explain", "spm", "report"] {
        step(cmd, &out, &args);
    }
    let r = read_report(&out)?;
    ensure(r.config.get("input.components").map(String::as_str) == Some("V"), || "report does not echo components=V".into())?;
    ensure(r.mean_accuracy > r.zero_rule, || format!("accuracy {:.3} not above zero-rule", r.mean_accuracy))?;
    let mean = std::fs::read_to_string(out.join("relevance/mean.csv")).map_err(|e| e.to_string())?;
    ensure(mean.lines().skip(1).all(|l| l.starts_with("L_V,") || l.starts_with("R_V,")), || {
        "relevance covers non-vertical channels".into()
    })?;
    check_report(&out)?;
    Ok(format!("V-only input (1 x 202): accuracy {:.3}, report valid", r.mean_accuracy))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("zero-rule baseline", zero_rule_baseline),
        ("synthetic CV accuracy", cv_accuracy),
        ("gradient oracle", gradient_oracle),
        ("LRP conservation", lrp_conservation),
        ("conv/dense LRP equivalence", conv_dense_equivalence),
        ("t-field oracle", t_field_oracle),
        ("RFT vs permutation", rft_vs_permutation),
        ("planted-feature recovery", planted_recovery),
        ("determinism", determinism),
        ("GRF_V-only ablation", vertical_only_ablation),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or(p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS [{:>2}] {name}: {detail} ({secs:.1} s)", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL [{:>2}] {name}: {why} ({secs:.1} s)", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
