use std::path::Path;

use super::*;
use crate::env::EnvKind;
use crate::experiment::ExperimentSpec;
use crate::orchestrator::ModeFlags;

fn tiny(out: &Path, name: &str) -> ExperimentSpec {
    let mut spec = ExperimentSpec {
        name: name.into(),
        total_iterations: 3,
        steps_per_agent: 30,
        seeds: vec![0, 1],
        eval_episodes: 2,
        hidden: vec![8],
        output_dir: out.to_path_buf(),
        ..ExperimentSpec::default()
    };
    spec.env.horizon = 30;
    spec
}

fn read(path: impl AsRef<Path>) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn experiment_writes_one_row_per_iteration_and_seed() {
    let dir = tempfile::tempdir().unwrap();
    let spec = tiny(dir.path(), "rows");
    let report = run_experiment(&spec).unwrap();
    assert_eq!(report.cell_dir, dir.path().join("rows").join("SA_N1"));
    assert_eq!(report.failed().count(), 0);
    let mut total = 0;
    for seed in [0, 1] {
        let sd = seed_dir(&report.cell_dir, seed);
        let rows = read_metrics(sd.join("metrics.csv")).unwrap();
        assert_eq!(rows.iter().map(|r| r.iteration).collect::<Vec<_>>(), vec![0, 1, 2]);
        assert!(rows.windows(2).all(|w| w[0].env_steps_total <= w[1].env_steps_total));
        assert!(rows.iter().all(|r| r.mode == "SA" && r.seed == seed));
        total += rows.len();
        let ckpt = Checkpoint::load(sd.join("checkpoint.json")).unwrap();
        assert_eq!(ckpt.iterations, 3);
    }
    assert_eq!(total, 6);
    let echoed = ExperimentSpec::from_file(report.cell_dir.join("config.json")).unwrap();
    assert_eq!(echoed, spec.effective());
}

#[test]
fn rerun_reproduces_bytes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut spec = tiny(a.path(), "det");
    spec.flags = ModeFlags::SH_DECENT_NOI;
    spec.n_agents = 2;
    let ra = run_experiment(&spec).unwrap();
    spec.output_dir = b.path().to_path_buf();
    let rb = run_experiment(&spec).unwrap();
    for seed in [0, 1] {
        for file in ["metrics.csv", "checkpoint.json", "manifest.json"] {
            assert_eq!(
                read(seed_dir(&ra.cell_dir, seed).join(file)),
                read(seed_dir(&rb.cell_dir, seed).join(file)),
                "{file}"
            );
        }
    }
}

#[test]
fn resume_skips_completed_seeds_and_redoes_interrupted_ones() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = tiny(dir.path(), "resume");
    spec.seeds = vec![0];
    let first = run_experiment(&spec).unwrap();
    let manifest_path = seed_dir(&first.cell_dir, 0).join("manifest.json");
    let mut manifest: SeedManifest = serde_json::from_str(&read(&manifest_path)).unwrap();
    manifest.final_eval_mean = Some(12345.0);
    std::fs::write(&manifest_path, serde_json::to_string(&manifest).unwrap()).unwrap();

    // Seed 1 was "interrupted": a running manifest and a partial file.
    let sd1 = seed_dir(&first.cell_dir, 1);
    std::fs::create_dir_all(&sd1).unwrap();
    std::fs::write(sd1.join("metrics.csv"), format!("{METRICS_HEADER}\n")).unwrap();
    std::fs::write(
        sd1.join("manifest.json"),
        r#"{"seed":1,"status":"running","iterations_completed":0,"total_iterations":3,"final_eval_mean":null,"error":null}"#,
    )
    .unwrap();

    spec.seeds = vec![0, 1];
    let second = run_experiment(&spec).unwrap();
    assert_eq!(second.seeds[0].final_eval_mean, Some(12345.0));
    assert_eq!(second.seeds[1].status, SeedStatus::Completed);
    assert_eq!(read_metrics(sd1.join("metrics.csv")).unwrap().len(), 3);
}

#[test]
fn different_spec_in_same_directory_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = tiny(dir.path(), "clash");
    spec.seeds = vec![0];
    run_experiment(&spec).unwrap();
    spec.ppo.lr0 = 1e-3;
    assert!(run_experiment(&spec).is_err());
}

#[test]
fn diverging_seeds_are_recorded_as_failed() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = tiny(dir.path(), "boom");
    spec.env.f_max = 1e308;
    let report = run_experiment(&spec).unwrap();
    assert_eq!(report.failed().count(), 2);
    for m in &report.seeds {
        assert_eq!(m.status, SeedStatus::Failed);
        assert!(m.error.as_deref().unwrap().contains("divergence detected"));
        assert!(m.error.as_deref().unwrap().contains("iteration 0"));
    }
}

/// Independent re-derivation of a summary row from the raw files.
fn oracle(cell: &Path, seeds: &[u64], total: usize) -> (f64, f64) {
    let window = ((total as f64) * 0.1).ceil().max(1.0) as usize;
    let per_seed: Vec<f64> = seeds
        .iter()
        .map(|s| {
            let text = read(cell.join(format!("seed{s}")).join("metrics.csv"));
            let evals: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').nth(6).unwrap().parse().unwrap()).collect();
            evals[evals.len() - window..].iter().sum::<f64>() / window as f64
        })
        .collect();
    let n = per_seed.len() as f64;
    let mean = per_seed.iter().sum::<f64>() / n;
    let std = (per_seed.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    (mean, std)
}

#[test]
fn grid_collapses_single_agent_cells_and_aggregates_from_csv() {
    let dir = tempfile::tempdir().unwrap();
    let mut base = tiny(dir.path(), "grid");
    base.total_iterations = 12;
    base.seeds = vec![3, 1, 2];
    let modes = [ModeFlags::SH_DECENT, ModeFlags::SH_DECENT_COMP];
    let (summary, issues) = run_grid(&base, &modes, &[1, 2, 3]).unwrap();
    assert!(issues.0.is_empty(), "{issues:?}");
    assert_eq!(summary.rows.len(), 6);
    assert_eq!(summary.curves.len(), 5);
    let sa: Vec<_> = summary.rows.iter().filter(|r| r.run == "SA_N1").collect();
    assert_eq!(sa.len(), 2);
    assert_eq!(sa[0].mean, sa[1].mean);
    let root = dir.path().join("grid");
    for r in &summary.rows {
        let (mean, std) = oracle(&root.join(&r.run), &r.seeds, 12);
        assert!((r.mean - mean).abs() <= 1e-9 * mean.abs().max(1.0));
        assert!((r.std - std).abs() <= 1e-9 * std.abs().max(1.0));
        assert_eq!(r.n_effective, 3);
    }
    let loaded = GridSummary::load(root.join("summary.csv"), None).unwrap();
    assert_eq!(loaded, summary);

    let mut permuted = base.clone();
    permuted.seeds = vec![2, 3, 1];
    let again = summarize(&root, &permuted, &modes, &[1, 2, 3]).unwrap();
    for (a, b) in again.rows.iter().zip(&summary.rows) {
        assert_eq!((a.mean, a.std), (b.mean, b.std));
    }
}

#[test]
fn empty_grid_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let base = tiny(dir.path(), "empty");
    assert!(matches!(run_grid(&base, &[], &[1]), Err(crate::Error::EmptyGrid)));
    assert!(matches!(run_grid(&base, &[ModeFlags::SH_DECENT], &[]), Err(crate::Error::EmptyGrid)));
}

#[test]
fn report_has_one_band_per_mode_and_valid_xml() {
    let dir = tempfile::tempdir().unwrap();
    let mut base = tiny(dir.path(), "rep");
    base.env.kind = EnvKind::StaminaRacer;
    base.n_agents = 2;
    let modes = [ModeFlags::SH_DECENT, ModeFlags::SH_DECENT_COMP];
    let (summary, _) = run_grid(&base, &modes, &[2]).unwrap();
    let out = dir.path().join("rep");
    let files = emit_report(&summary, &out, "Race <&> test").unwrap();
    assert_eq!(files.len(), 2);
    let svg = read(&files[0]);
    let doc = roxmltree::Document::parse(&svg).unwrap();
    let bands = doc
        .descendants()
        .filter(|n| n.tag_name().name() == "polygon" && n.attribute("class") == Some("band"))
        .count();
    assert_eq!(bands, 2);
    let md = read(&files[1]);
    let score_rows = md
        .lines()
        .skip_while(|l| !l.starts_with("## Scores"))
        .filter(|l| l.starts_with("| StaminaRacer"))
        .count();
    // Two score rows, one by-mode row, one difference row.
    assert_eq!(score_rows, 2 + 1 + 1);
    assert!(md.contains("Difference against Sh-Decent"));
}

#[test]
fn escaping() {
    assert_eq!(xml_escape("a<b>&\"'"), "a&lt;b&gt;&amp;&quot;&apos;");
}
