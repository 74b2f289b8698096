//! Command-line front end for the expressive rendering pipeline.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use serde::Serialize;

use espressivo::articulation::{articulation_table, dynamic_table};
use espressivo::expression::{
    classify, fit_expression_model, load_model, normalize_recording, save_model, RenderParams,
};
use espressivo::features::{extract_piece_features, load_features, save_features, NoteFeature};
use espressivo::manifest::{load_audio_path, load_corpus, load_score_path};
use espressivo::synth::DenormTable;
use espressivo::timing::TimingPlan;
use espressivo::{render_performance, write_wav};

#[derive(Parser)]
#[command(name = "espressivo", version, about = "Expressive violin performance rendering")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit an expression model from a corpus manifest.
    Fit {
        /// Manifest JSON; entry paths resolve against its directory.
        manifest: PathBuf,
        /// Where to write the model document.
        #[arg(long)]
        out: PathBuf,
    },
    /// Render a score under an expressive term.
    Render {
        /// Input score (.mid/.midi, .xml/.musicxml, or canonical .json).
        score: PathBuf,
        /// Expressive term to render with.
        #[arg(long)]
        emt: String,
        /// Fitted model document.
        #[arg(long)]
        model: PathBuf,
        /// Random seed; required so every run is reproducible.
        #[arg(long)]
        seed: u64,
        /// Output WAV path.
        #[arg(long)]
        out: PathBuf,
        /// Also write the sampled timing plan and per-note controls.
        #[arg(long)]
        dump_params: Option<PathBuf>,
        /// Also write the timing-rewritten score document.
        #[arg(long)]
        dump_score: Option<PathBuf>,
    },
    /// Extract the feature document for a score/audio pair.
    Extract {
        score: PathBuf,
        audio: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rank expressive terms by likelihood for a feature document.
    Classify {
        features: PathBuf,
        #[arg(long)]
        model: PathBuf,
    },
    /// Print the dynamic and articulation mapping tables.
    Tables,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Err(err) = run(Cli::parse()) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fit { manifest, out } => cmd_fit(&manifest, &out),
        Command::Render {
            score,
            emt,
            model,
            seed,
            out,
            dump_params,
            dump_score,
        } => cmd_render(&score, &emt, &model, seed, &out, dump_params.as_deref(), dump_score.as_deref()),
        Command::Extract { score, audio, out } => cmd_extract(&score, &audio, &out),
        Command::Classify { features, model } => cmd_classify(&features, &model),
        Command::Tables => cmd_tables(),
    }
}

fn cmd_fit(manifest_path: &Path, out: &Path) -> Result<()> {
    let corpus = load_corpus(manifest_path)?;
    let model = fit_expression_model(&corpus, DenormTable::default())?;
    fs::write(out, save_model(&model)).with_context(|| format!("writing {}", out.display()))?;

    println!("fitted {} expressive terms from {} recordings", model.emts.len(), corpus.len());
    println!("{:<14} {:<16} {:>8} {:>8}", "emt", "feature", "mean", "std");
    for (name, g) in &model.emts {
        println!("{:<14} {:<16} {:>8.4} {:>8.4}", name, "tempo", g.tempo.mean, g.tempo.std);
        for f in NoteFeature::ALL {
            let gauss = g.feature(f);
            println!("{:<14} {:<16} {:>8.4} {:>8.4}", name, f.name(), gauss.mean, gauss.std);
        }
    }
    println!("model written to {}", out.display());
    Ok(())
}

#[derive(Serialize)]
struct ParamsDump<'a> {
    version: u32,
    emt: &'a str,
    seed: u64,
    timing: &'a TimingPlan,
    params: &'a [RenderParams],
}

#[allow(clippy::too_many_arguments)]
fn cmd_render(
    score_path: &Path,
    emt: &str,
    model_path: &Path,
    seed: u64,
    out: &Path,
    dump_params: Option<&Path>,
    dump_score: Option<&Path>,
) -> Result<()> {
    let score = load_score_path(score_path)?;
    let model_bytes = fs::read(model_path).with_context(|| format!("reading {}", model_path.display()))?;
    let model = load_model(&model_bytes)?;

    let rendered = render_performance(&score, &model, emt, seed)?;

    fs::write(out, write_wav(&rendered.audio)).with_context(|| format!("writing {}", out.display()))?;
    if let Some(path) = dump_params {
        let dump = ParamsDump {
            version: 1,
            emt,
            seed,
            timing: &rendered.plan,
            params: &rendered.params,
        };
        fs::write(path, serde_json::to_string_pretty(&dump)?)
            .with_context(|| format!("writing {}", path.display()))?;
    }
    if let Some(path) = dump_score {
        fs::write(path, rendered.score.to_canonical_json())
            .with_context(|| format!("writing {}", path.display()))?;
    }
    println!(
        "rendered {} notes under {emt} to {} ({:.2} s)",
        rendered.score.len(),
        out.display(),
        rendered.audio.duration()
    );
    Ok(())
}

fn cmd_extract(score_path: &Path, audio_path: &Path, out: &Path) -> Result<()> {
    let score = load_score_path(score_path)?;
    let audio = load_audio_path(audio_path)?;
    let features = extract_piece_features(&score, &audio)?;
    fs::write(out, save_features(&features)).with_context(|| format!("writing {}", out.display()))?;
    println!("extracted {} notes to {}", features.notes.len(), out.display());
    Ok(())
}

fn cmd_classify(features_path: &Path, model_path: &Path) -> Result<()> {
    let text = fs::read_to_string(features_path)
        .with_context(|| format!("reading {}", features_path.display()))?;
    let features = load_features(&text)?;
    let model_bytes = fs::read(model_path).with_context(|| format!("reading {}", model_path.display()))?;
    let model = load_model(&model_bytes)?;
    let ranked = classify(&normalize_recording(&features), &model);
    println!("{:<14} {:>14}", "emt", "log-likelihood");
    for (name, ll) in ranked {
        println!("{name:<14} {ll:>14.3}");
    }
    Ok(())
}

fn cmd_tables() -> Result<()> {
    println!("dynamic marking -> volume");
    for (d, v) in dynamic_table() {
        println!("{} {:.3}", d.name(), v);
    }
    println!();
    println!("articulation -> attack");
    for (a, v) in articulation_table() {
        println!("{} {:.3}", a.name(), v);
    }
    Ok(())
}
