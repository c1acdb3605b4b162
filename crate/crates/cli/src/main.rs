use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use sigbench::evaluation::{evaluate_task, rank_teams, run_protocol, EvaluationReport, Task};
use sigbench::features::Channel;
use sigbench::sigdata::{
    parse_comparison_file, parse_label_file, parse_score_file, parse_signature_file,
    write_score_file, ComparisonTask, PenState,
};
use sigbench::synth::generate_dataset;
use sigbench::verifiers::parse_pipeline_file;

#[derive(Parser)]
#[command(name = "sigbench")]
#[command(about = "Benchmark harness for on-line signature verification")]
struct Cli {
    #[command(subcommand)]
    command: Commands,
}

#[derive(Subcommand)]
enum Commands {
    /// Score a comparison file with a configured verifier pipeline
    Compare {
        /// Comparison file: `comparison_id,reference_path,questioned_path`
        comparisons: PathBuf,

        /// Pipeline configuration file (key = value lines)
        #[arg(long)]
        pipeline: PathBuf,

        /// Output score file
        #[arg(long)]
        out: PathBuf,

        /// Validate every input without writing anything
        #[arg(long)]
        dry_run: bool,
    },

    /// Evaluate a score file against ground-truth labels
    Eval {
        /// Score file: `comparison_id,score`
        scores: PathBuf,

        /// Label file: `comparison_id,genuine|impostor`
        labels: PathBuf,

        /// Benchmark task the scores belong to
        #[arg(long, value_parser = parse_task)]
        task: Task,

        /// Also write the FAR/FRR curve as CSV
        #[arg(long)]
        curve: Option<PathBuf>,

        /// Also write the machine-readable key-value report
        #[arg(long)]
        out: Option<PathBuf>,
    },

    /// Rank teams by medal points from a per-task EER table
    Rank {
        /// EER table: CSV rows `team,task,eer_percent`
        eers: PathBuf,

        /// Output ranking CSV (also printed to stdout)
        #[arg(long)]
        out: Option<PathBuf>,
    },

    /// Generate a deterministic synthetic dataset
    Synth {
        #[arg(long)]
        seed: u64,

        #[arg(long)]
        subjects: usize,

        /// Output directory
        #[arg(long)]
        out: PathBuf,
    },

    /// Print a parsed signature's summary
    Inspect { signature: PathBuf },
}

fn parse_task(value: &str) -> Result<Task, String> {
    value
        .parse::<u8>()
        .ok()
        .and_then(Task::from_number)
        .ok_or_else(|| format!("task must be 1, 2, or 3, got `{value}`"))
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Commands::Compare {
            comparisons,
            pipeline,
            out,
            dry_run,
        } => cmd_compare(&comparisons, &pipeline, &out, dry_run),
        Commands::Eval {
            scores,
            labels,
            task,
            curve,
            out,
        } => cmd_eval(&scores, &labels, task, curve.as_deref(), out.as_deref()),
        Commands::Rank { eers, out } => cmd_rank(&eers, out.as_deref()),
        Commands::Synth {
            seed,
            subjects,
            out,
        } => cmd_synth(seed, subjects, &out),
        Commands::Inspect { signature } => cmd_inspect(&signature),
    }
}

fn resolved_tasks(comparisons: &Path) -> Result<Vec<ComparisonTask>> {
    let tasks = parse_comparison_file(comparisons)
        .with_context(|| format!("parsing {}", comparisons.display()))?;
    let base = comparisons.parent().unwrap_or(Path::new("."));
    Ok(tasks.iter().map(|t| t.resolved_against(base)).collect())
}

fn cmd_compare(comparisons: &Path, pipeline: &Path, out: &Path, dry_run: bool) -> Result<()> {
    let tasks = resolved_tasks(comparisons)?;
    let config = parse_pipeline_file(pipeline)
        .with_context(|| format!("parsing {}", pipeline.display()))?;

    if dry_run {
        for task in &tasks {
            for path in [&task.reference_path, &task.questioned_path] {
                parse_signature_file(path).with_context(|| {
                    format!("comparison `{}`: {}", task.comparison_id, path.display())
                })?;
            }
        }
        println!(
            "dry run ok: {} comparisons, pipeline {}",
            tasks.len(),
            pipeline.display()
        );
        return Ok(());
    }

    let records = run_protocol(&tasks, &config)?;
    write_score_file(&records, out).with_context(|| format!("writing {}", out.display()))?;
    println!("wrote {} scores to {}", records.len(), out.display());
    Ok(())
}

fn report_lines(report: &EvaluationReport) -> String {
    format!(
        "task={}\neer_percent={:?}\nthreshold_at_eer={:?}\nn_genuine={}\nn_impostor={}\n",
        report.task, report.eer_percent, report.threshold_at_eer, report.n_genuine,
        report.n_impostor
    )
}

fn curve_csv(report: &EvaluationReport) -> String {
    let mut out = String::from("threshold,far,frr\n");
    for p in &report.curve {
        out.push_str(&format!("{:?},{:?},{:?}\n", p.threshold, p.far, p.frr));
    }
    out
}

fn cmd_eval(
    scores_path: &Path,
    labels_path: &Path,
    task: Task,
    curve: Option<&Path>,
    out: Option<&Path>,
) -> Result<()> {
    let scores = parse_score_file(scores_path)
        .with_context(|| format!("parsing {}", scores_path.display()))?;
    let labels = parse_label_file(labels_path)
        .with_context(|| format!("parsing {}", labels_path.display()))?;
    let report = evaluate_task(&scores, &labels, task)?;

    print!("{}", report_lines(&report));

    if let Some(path) = out {
        let mut kv = report_lines(&report);
        for p in &report.curve {
            kv.push_str(&format!("curve={:?},{:?},{:?}\n", p.threshold, p.far, p.frr));
        }
        fs::write(path, kv).with_context(|| format!("writing {}", path.display()))?;
    }
    if let Some(path) = curve {
        fs::write(path, curve_csv(&report))
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn cmd_rank(eers: &Path, out: Option<&Path>) -> Result<()> {
    let content =
        fs::read_to_string(eers).with_context(|| format!("reading {}", eers.display()))?;
    let mut table: BTreeMap<String, BTreeMap<Task, f64>> = BTreeMap::new();
    for (idx, raw) in content.lines().enumerate() {
        let line = idx + 1;
        let text = raw.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = text.split(',').collect();
        if fields.len() != 3 {
            bail!("{}:{line}: expected `team,task,eer_percent`", eers.display());
        }
        let task = parse_task(fields[1].trim())
            .map_err(|e| anyhow::anyhow!("{}:{line}: {e}", eers.display()))?;
        let eer: f64 = fields[2]
            .trim()
            .parse()
            .with_context(|| format!("{}:{line}: bad EER `{}`", eers.display(), fields[2]))?;
        table
            .entry(fields[0].trim().to_string())
            .or_default()
            .insert(task, eer);
    }

    let rows = rank_teams(&table);
    let mut csv = String::from("position,team,total_points\n");
    for (pos, row) in rows.iter().enumerate() {
        csv.push_str(&format!("{},{},{}\n", pos + 1, row.team, row.total_points));
    }
    print!("{csv}");
    if let Some(path) = out {
        fs::write(path, &csv).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn cmd_synth(seed: u64, subjects: usize, out: &Path) -> Result<()> {
    let manifest = generate_dataset(seed, subjects, out)?;
    println!(
        "generated {} signatures for {} subjects under {}",
        manifest.signature_files.len(),
        manifest.n_subjects,
        manifest.out_dir.display()
    );
    println!("comparisons: {}", manifest.comparisons_all.display());
    println!("  random-forgery split: {}", manifest.comparisons_random.display());
    println!("  skilled-forgery split: {}", manifest.comparisons_skilled.display());
    Ok(())
}

fn cmd_inspect(path: &Path) -> Result<()> {
    let sig =
        parse_signature_file(path).with_context(|| format!("parsing {}", path.display()))?;
    let meta = sig.meta();
    println!("file={}", path.display());
    println!("subject={}", meta.subject_id);
    println!("input={}", meta.input);
    println!("scenario={}", meta.scenario);
    println!("auth={}", meta.authenticity);
    if let Some(s) = meta.session {
        println!("session={s}");
    }
    println!("samples={}", sig.len());
    println!("duration_ms={}", sig.duration_ms());
    let minmax = |values: &[f64]| {
        values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        })
    };
    let (x_lo, x_hi) = minmax(&sig.xs());
    let (y_lo, y_hi) = minmax(&sig.ys());
    let (p_lo, p_hi) = minmax(&sig.pressures());
    println!("x_range={x_lo}..{x_hi}");
    println!("y_range={y_lo}..{y_hi}");
    println!("p_range={p_lo}..{p_hi}");
    let pen_up = sig
        .samples()
        .iter()
        .filter(|s| s.pen_state == PenState::Up)
        .count();
    println!("pen_up_samples={pen_up}");
    if let Ok(tf) = sigbench::features::time_functions(&sig) {
        let v = tf.channel(Channel::V);
        let mean_v = v.iter().sum::<f64>() / v.len() as f64;
        println!("mean_speed={mean_v:.6}");
    }
    Ok(())
}
