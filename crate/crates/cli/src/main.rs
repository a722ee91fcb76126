use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use pseudocap::config::RunConfig;
use pseudocap::data::{save, SplitBundle};
use pseudocap::error::Error;
use pseudocap::eval::{evaluate, pseudo_label_precision, MetricsReport};
use pseudocap::model::{read_checkpoint, write_checkpoint};
use pseudocap::pseudo::{read_assignments, write_assignments};
use pseudocap::trainer::{train_with, write_history_csv, Variant};

#[derive(Parser)]
#[command(name = "pseudocap", version, about = "Scarcely-paired captioning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the synthetic benchmark as JSONL.
    Generate(Common),
    /// Train one variant and write its run directory.
    Train(Common),
    /// Evaluate a run directory's checkpoint on the test split.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Checkpoint to evaluate; defaults to OUT/checkpoint.json.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Train every variant on one shared split and summarise them.
    Ablate(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    variant: Option<Variant>,
    #[arg(long)]
    beam: Option<usize>,
    /// Write into a non-empty output directory.
    #[arg(long)]
    force: bool,
}

impl Common {
    fn resolve(&self, default_config: Option<&Path>) -> Result<RunConfig> {
        let path = self.config.as_deref().or(default_config);
        let mut cfg = match path {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.train.seed = seed;
        }
        if let Some(v) = self.variant {
            cfg.train.variant = v;
        }
        if let Some(b) = self.beam {
            cfg.train.beam = b;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn prepare_dir(dir: &Path, force: bool) -> Result<()> {
    if dir.exists() {
        let occupied = fs::read_dir(dir)
            .with_context(|| format!("{}", dir.display()))?
            .next()
            .is_some();
        if occupied && !force {
            bail!(Error::Config(format!(
                "{} is not empty; pass --force to write into it",
                dir.display()
            )));
        }
    }
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(())
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn train_run(cfg: &RunConfig, bundle: &SplitBundle, dir: &Path) -> Result<Option<MetricsReport>> {
    write_file(&dir.join("config.cfg"), &cfg.to_text())?;
    let variant = cfg.train.variant;
    let outcome = train_with(&cfg.train, bundle, |row| {
        if let Some(m) = &row.metrics {
            eprintln!(
                "{variant} iter {}: bleu4 {:.4} token_f1 {:.4}",
                row.iteration + 1,
                m.bleu4,
                m.token_f1
            );
        }
    })?;
    write_checkpoint(&outcome.model, &dir.join("checkpoint.json"))?;
    let csv_path = dir.join("metrics.csv");
    let file = File::create(&csv_path).with_context(|| format!("creating {}", csv_path.display()))?;
    write_history_csv(BufWriter::new(file), &outcome.history)
        .with_context(|| format!("writing {}", csv_path.display()))?;
    let dump = dir.join("assignments.jsonl");
    let file = File::create(&dump).with_context(|| format!("creating {}", dump.display()))?;
    let mut out = BufWriter::new(file);
    write_assignments(&mut out, &outcome.assignments)
        .with_context(|| format!("writing {}", dump.display()))?;
    Ok(outcome.final_metrics().cloned())
}

fn generate(args: &Common) -> Result<()> {
    let mut cfg = args.resolve(None)?;
    if let Some(seed) = args.seed {
        cfg.gen.seed = seed;
    }
    prepare_dir(&args.out, args.force)?;
    let dataset = pseudocap::data::generate(&cfg.gen)?;
    let path = args.out.join("dataset.jsonl");
    save(&dataset, &path)?;
    println!("{} samples -> {}", dataset.len(), path.display());
    Ok(())
}

fn train(args: &Common) -> Result<()> {
    let cfg = args.resolve(None)?;
    prepare_dir(&args.out, args.force)?;
    let bundle = cfg.bundle()?;
    if let Some(m) = train_run(&cfg, &bundle, &args.out)? {
        println!("{}", m.to_json());
    }
    Ok(())
}

fn eval(args: &Common, checkpoint: Option<&Path>) -> Result<()> {
    let snapshot = args.out.join("config.cfg");
    let cfg = args.resolve(snapshot.exists().then_some(snapshot.as_path()))?;
    let ckpt = checkpoint.map_or_else(|| args.out.join("checkpoint.json"), Path::to_path_buf);
    let target = args.out.join("metrics.json");
    if target.exists() && !args.force {
        bail!(Error::Config(format!(
            "{} exists; pass --force to overwrite it",
            target.display()
        )));
    }
    let model = read_checkpoint(&ckpt)?;
    let bundle = cfg.bundle()?;
    let mut report = evaluate(&model, &bundle.test, cfg.train.beam)?;
    let dump = args.out.join("assignments.jsonl");
    let concepts = bundle.concept_map();
    if dump.exists() && concepts.values().all(Option::is_some) {
        let records = read_assignments(&dump)?;
        let (px, py) = pseudo_label_precision(&records, &concepts)?;
        report.pseudo_precision_x = px;
        report.pseudo_precision_y = py;
    }
    let json = report.to_json();
    write_file(&target, &json)?;
    println!("{json}");
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn ablate(args: &Common) -> Result<()> {
    let cfg = args.resolve(None)?;
    prepare_dir(&args.out, args.force)?;
    let bundle = cfg.bundle()?;
    let summary_path = args.out.join("summary.csv");
    let mut summary = csv::Writer::from_path(&summary_path)
        .with_context(|| format!("creating {}", summary_path.display()))?;
    summary.write_record([
        "variant",
        "bleu1",
        "bleu2",
        "bleu3",
        "bleu4",
        "token_f1",
        "pseudo_precision_x",
        "pseudo_precision_y",
    ])?;
    for variant in Variant::ALL {
        let mut run = cfg.clone();
        run.train.variant = variant;
        let dir = args.out.join(variant.as_str());
        prepare_dir(&dir, args.force)?;
        let m = train_run(&run, &bundle, &dir)?.unwrap_or_default();
        summary.write_record([
            variant.to_string(),
            m.bleu1.to_string(),
            m.bleu2.to_string(),
            m.bleu3.to_string(),
            m.bleu4.to_string(),
            m.token_f1.to_string(),
            fmt_opt(m.pseudo_precision_x),
            fmt_opt(m.pseudo_precision_y),
        ])?;
        summary.flush()?;
    }
    println!("summary -> {}", summary_path.display());
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(e) if e.is_numeric() => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Generate(a) => generate(a),
        Command::Train(a) => train(a),
        Command::Eval { common, checkpoint } => eval(common, checkpoint.as_deref()),
        Command::Ablate(a) => ablate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
