//! The `proxylabel` command line.
//!
//! Exit codes: 0 success, 1 data or parse error (including unreadable
//! files), 2 configuration or usage error, 3 runtime failure.

mod spec;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

pub use spec::{DatasetSource, ExperimentSpec, Study, StudySpec};

use crate::classifier::TrainConfig;
use crate::dataset::{load_csv, save_csv, synthetic_blobs, BlobSpec, Manifest};
use crate::error::{Error, Result};
use crate::protocol::{
    build_tables, format_log, format_series, labeled_fraction_series, read_log, run_grid, split_rng,
    ComparisonTable, Method, Pairing, RunResult, TTestConfig, Tails,
};
use crate::ssl::{run_ssl, run_supervised, Algorithm, SslConfig};

/// Environment variable naming the default output directory of `run`.
pub const OUT_DIR_ENV: &str = "PROXYLABEL_OUT";

#[derive(Debug, Parser)]
#[command(name = "proxylabel", version, about = "Proxy-label semi-supervised learning experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a dataset file and print its summary.
    Validate { data: PathBuf },
    /// Run every study of an experiment spec, writing run logs and tables.
    Run {
        spec: PathBuf,
        /// Parallel training runs.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long, env = OUT_DIR_ENV)]
        out: Option<PathBuf>,
    },
    /// Recompute tables from a run log without training.
    Report {
        log: PathBuf,
        /// Write `<name>-rate<r>.txt` and `.csv` here instead of printing.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        ttest: TTestArgs,
    },
    /// Train one configuration on one fold and print per-iteration accuracy.
    Train(TrainArgs),
    /// Write a Gaussian-blob dataset (and its manifest).
    Synth {
        out: PathBuf,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 64)]
        dim: usize,
        #[arg(long, default_value_t = 4)]
        classes: usize,
        #[arg(long, default_value_t = 4.0)]
        separation: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Args)]
pub struct TTestArgs {
    #[arg(long, default_value_t = 0.10)]
    alpha: f64,
    /// Use a one-tailed test.
    #[arg(long)]
    one_tailed: bool,
    /// Use Welch's independent-samples test instead of the paired test.
    #[arg(long)]
    independent: bool,
}

impl TTestArgs {
    fn config(&self) -> TTestConfig {
        TTestConfig {
            alpha: self.alpha,
            tails: if self.one_tailed { Tails::One } else { Tails::Two },
            pairing: if self.independent { Pairing::Independent } else { Pairing::Paired },
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    data: PathBuf,
    /// `supervised`, TBST, CBST, CT, TT or TTWD.
    #[arg(long, default_value = "supervised")]
    algorithm: String,
    #[arg(long, default_value_t = 0.9)]
    rate: f64,
    #[arg(long, default_value_t = 0)]
    fold: usize,
    #[arg(long, default_value_t = 3)]
    folds: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    epochs: usize,
    #[arg(long, default_value_t = 20)]
    max_iterations: usize,
}

/// Process exit code for an error.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Data(_) | Error::Parse { .. } | Error::Io { .. } => 1,
        Error::Config(_) => 2,
        Error::Run { source, .. } => exit_code(source).max(3),
        Error::Shape { .. } | Error::Argument(_) | Error::Protocol(_) => 3,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let stdout = std::io::stdout();
    match execute(cli.command, &mut stdout.lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn out_err(e: std::io::Error) -> Error {
    Error::io("<stdout>", e)
}

/// Runs a parsed command, writing human-readable output to `w`.
pub fn execute(command: Command, w: &mut dyn Write) -> Result<()> {
    match command {
        Command::Validate { data } => cmd_validate(&data, w),
        Command::Run { spec, jobs, out } => cmd_run(&spec, jobs, out.as_deref(), w),
        Command::Report { log, out, ttest } => cmd_report(&log, out.as_deref(), &ttest.config(), w),
        Command::Train(args) => cmd_train(&args, w),
        Command::Synth { out, samples, dim, classes, separation, seed } => {
            let name = out
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "blobs".into());
            let spec = BlobSpec { name, n_samples: samples, dim, n_classes: classes, separation, seed, ..Default::default() };
            let ds = synthetic_blobs(&spec)?;
            save_csv(&ds, &out)?;
            let manifest = Manifest::describe(&ds, "synthetic");
            manifest.save(&Manifest::companion_path(&out))?;
            writeln!(w, "wrote {} ({} samples, {} features, {} classes)", out.display(), samples, dim, classes)
                .map_err(out_err)
        }
    }
}

pub fn cmd_validate(data: &Path, w: &mut dyn Write) -> Result<()> {
    let ds = load_csv(data)?;
    let manifest_path = Manifest::companion_path(data);
    let task = if manifest_path.exists() {
        let m = Manifest::load(&manifest_path)?;
        m.check(&ds)?;
        m.task
    } else {
        "-".to_owned()
    };
    let counts: Vec<String> = ds.class_counts().iter().map(usize::to_string).collect();
    writeln!(
        w,
        "name: {}\nsamples: {}\nfeatures: {}\nclasses: {}\ntask: {}\nclass counts: {}",
        ds.name(),
        ds.n_samples(),
        ds.dim(),
        ds.n_classes(),
        task,
        counts.join(" ")
    )
    .map_err(out_err)
}

fn rate_label(rate: f64) -> String {
    rate.to_string()
}

/// Writes `<stem>-rate<r>.txt` and `<stem>-rate<r>.csv` for every table.
fn write_tables(tables: &[ComparisonTable], stem: &str, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for t in tables {
        let base = format!("{stem}-rate{}", rate_label(t.rate));
        for (ext, body) in [("txt", t.to_text()), ("csv", t.to_csv())] {
            // not with_extension: the rate itself contains a dot
            let path = dir.join(format!("{base}.{ext}"));
            std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
            written.push(path);
        }
    }
    Ok(written)
}

pub fn cmd_run(spec_path: &Path, jobs: usize, out: Option<&Path>, w: &mut dyn Write) -> Result<()> {
    let spec = ExperimentSpec::load(spec_path)?;
    let base_dir = spec_path.parent().unwrap_or(Path::new("."));
    let datasets = spec.load_datasets(base_dir)?;
    let studies = spec.studies(&datasets)?;
    let out_dir = match (out, &spec.out_dir) {
        (Some(o), _) => o.to_path_buf(),
        (None, Some(o)) => base_dir.join(o),
        (None, None) => PathBuf::from("results"),
    };
    std::fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;

    for study in &studies {
        let total = study.grid.jobs().len();
        writeln!(w, "study {}: {} runs", study.name, total).map_err(out_err)?;
        let done = std::sync::atomic::AtomicUsize::new(0);
        let results = run_grid(&study.grid, jobs, &|r: &RunResult| {
            let n = done.fetch_add(1, std::sync::atomic::Ordering::Relaxed) + 1;
            eprintln!("[{n}/{total}] {} -> {:.2}", r.key.describe(), r.max_test_acc);
        })?;
        let log = out_dir.join(format!("runs-{}.csv", study.name));
        std::fs::write(&log, format_log(&results)).map_err(|e| Error::io(&log, e))?;
        let tables = build_tables(&results, &spec.ttest)?;
        for t in &tables {
            write!(w, "{}", t.to_text()).map_err(out_err)?;
        }
        let mut written = write_tables(&tables, &study.name, &out_dir)?;
        if study.series {
            for ds in &study.grid.datasets {
                let path = out_dir.join(format!("{}-{}-series.csv", study.name, ds.name()));
                let series = labeled_fraction_series(&results, ds.name());
                std::fs::write(&path, format_series(&series)).map_err(|e| Error::io(&path, e))?;
                written.push(path);
            }
        }
        writeln!(w, "wrote {}", log.display()).map_err(out_err)?;
        for p in written {
            writeln!(w, "wrote {}", p.display()).map_err(out_err)?;
        }
    }
    Ok(())
}

/// `runs-<name>.csv` gives `<name>`; any other file its stem.
fn report_stem(log: &Path) -> String {
    let stem = log.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    stem.strip_prefix("runs-").map(str::to_owned).unwrap_or(stem)
}

pub fn cmd_report(log: &Path, out: Option<&Path>, ttest: &TTestConfig, w: &mut dyn Write) -> Result<()> {
    let results = read_log(log)?;
    if results.is_empty() {
        return Err(Error::Data(format!("{}: no runs in log", log.display())));
    }
    let tables = build_tables(&results, ttest)?;
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            for p in write_tables(&tables, &report_stem(log), dir)? {
                writeln!(w, "wrote {}", p.display()).map_err(out_err)?;
            }
        }
        None => {
            for t in &tables {
                write!(w, "{}", t.to_text()).map_err(out_err)?;
            }
        }
    }
    Ok(())
}

fn cmd_train(args: &TrainArgs, w: &mut dyn Write) -> Result<()> {
    let ds = load_csv(&args.data)?;
    let train = TrainConfig { epochs: args.epochs, ..Default::default() };
    let split_rng = split_rng(args.seed, ds.name(), 0);
    let split = crate::dataset::make_semi_split(&ds, args.rate, args.fold, args.folds, &split_rng)?;
    let method = if args.algorithm.eq_ignore_ascii_case("supervised") {
        Method::supervised()
    } else {
        let mut cfg = SslConfig::new(args.algorithm.parse::<Algorithm>()?);
        cfg.max_iterations = args.max_iterations;
        Method::Ssl(cfg)
    };
    let model_rng = crate::numerics::Rng::new(args.seed);
    let outcome = match &method {
        Method::Supervised { selection } => run_supervised(&ds, &split, &train, *selection, &model_rng)?,
        Method::Ssl(cfg) => run_ssl(&ds, &split, cfg, &train, &model_rng)?,
    };
    writeln!(
        w,
        "{} {} on {}: |D| = {}, |U| = {}, |test| = {}",
        method.algorithm_name(),
        method.variant(),
        ds.name(),
        split.labeled_idx.len(),
        split.unlabeled_idx.len(),
        split.test_idx.len()
    )
    .map_err(out_err)?;
    for (i, acc) in outcome.iteration_accuracy.iter().enumerate() {
        let labels = if i == 0 {
            String::new()
        } else {
            let counts: Vec<String> = outcome.pseudo_label_counts[i - 1].iter().map(usize::to_string).collect();
            format!("  pseudo-labels {}", counts.join("/"))
        };
        writeln!(w, "iteration {i:>2}: {:.2}%{labels}", 100.0 * acc).map_err(out_err)?;
    }
    writeln!(w, "max test accuracy: {:.2}%", 100.0 * outcome.max_test_accuracy).map_err(out_err)
}
