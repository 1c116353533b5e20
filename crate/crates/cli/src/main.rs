//! Command-line surface for the resolver: resolve dialogs, score output
//! against gold keys, compute the rules-disabled lower bound, and
//! compute inter-annotator agreement.
//!
//! Exit codes: 0 success, 1 usage error, 2 input/schema error,
//! 3 internal invariant violation.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use tempora_core::engine::{resolve_dialog, EngineConfig};
use tempora_core::eval::{
    self, kappa, pairwise_expert_kappa, AgreementTable, FieldCounts, PaMode,
};
use tempora_core::format::{
    emit_output, load_config, load_dialog, load_key, load_output, output_from_ailts, DialogFile,
    KeyFile, OutputFile,
};

#[derive(Parser)]
#[command(name = "tempora", version, about = "Temporal reference resolution for scheduling dialogs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Resolve the time expressions of one or more dialog files.
    Resolve(ResolveArgs),
    /// Score system output against gold keys, field by field.
    Evaluate(EvaluateArgs),
    /// Score the normalized input with all rules disabled (the lower bound).
    LowerBound(LowerBoundArgs),
    /// Inter-annotator agreement (kappa) over a labeled agreement table.
    Kappa(KappaArgs),
}

#[derive(Args)]
struct ResolveArgs {
    /// Dialog file(s) to resolve.
    #[arg(required = true)]
    dialogs: Vec<PathBuf>,
    /// Engine configuration file (JSON; missing fields take defaults).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Disable all resolution rules (lower-bound mode).
    #[arg(long)]
    no_rules: bool,
    /// Beam width for ambiguity resolution.
    #[arg(long)]
    beam: Option<usize>,
    /// Print per-utterance rule traces to stderr.
    #[arg(long)]
    trace: bool,
    /// Output file (single dialog) or directory (multiple dialogs).
    /// Defaults to stdout for a single dialog.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Resolve this many dialogs in parallel.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args)]
struct EvaluateArgs {
    /// System output file(s) produced by `resolve`.
    #[arg(long, required = true, num_args = 1..)]
    system: Vec<PathBuf>,
    /// Key file(s); matched to system files by dialog_id.
    #[arg(long, required = true, num_args = 1..)]
    key: Vec<PathBuf>,
    /// Print the full per-field table instead of the overall row.
    #[arg(long)]
    per_field: bool,
    /// Counts file from `lower-bound --output`, to fill the AccLB column.
    #[arg(long)]
    lower_bound_counts: Option<PathBuf>,
    /// Write machine-readable rows (JSON) here as well.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct LowerBoundArgs {
    /// Dialog file(s) to run with rules disabled.
    #[arg(required = true)]
    dialogs: Vec<PathBuf>,
    /// Key file(s); matched by dialog_id.
    #[arg(long, required = true, num_args = 1..)]
    key: Vec<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Print the full per-field table.
    #[arg(long)]
    per_field: bool,
    /// Write the per-field counts (JSON) here for later use in `evaluate`.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct KappaArgs {
    /// Agreement file: per-field items-by-raters label tables.
    table: PathBuf,
    /// Rater column to treat as the expert; adds the mean pairwise
    /// kappa of each coder against it.
    #[arg(long)]
    expert: Option<String>,
    /// Observed-agreement mode.
    #[arg(long, value_enum, default_value_t = ModeArg::Item)]
    mode: ModeArg,
    /// Write machine-readable rows (JSON) here as well.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Item,
    Pooled,
}

impl From<ModeArg> for PaMode {
    fn from(m: ModeArg) -> PaMode {
        match m {
            ModeArg::Item => PaMode::Item,
            ModeArg::Pooled => PaMode::Pooled,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let result = match cli.command {
        Command::Resolve(args) => cmd_resolve(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::LowerBound(args) => cmd_lower_bound(args),
        Command::Kappa(args) => cmd_kappa(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

/// Argument combinations clap cannot check on its own.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

impl std::error::Error for UsageError {}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        return 1;
    }
    match err.downcast_ref::<tempora_core::Error>() {
        Some(tempora_core::Error::Internal(_)) => 3,
        _ => 2,
    }
}

fn build_config(path: Option<&Path>, no_rules: bool, beam: Option<usize>) -> anyhow::Result<EngineConfig> {
    let mut config = match path {
        Some(p) => load_config(p).with_context(|| format!("loading config {}", p.display()))?,
        None => EngineConfig::default(),
    };
    if no_rules {
        config.rules_enabled = false;
    }
    if let Some(beam) = beam {
        config.beam = beam;
    }
    config.validate()?;
    Ok(config)
}

fn resolve_one(path: &Path, config: &EngineConfig, trace: bool) -> anyhow::Result<OutputFile> {
    let (dialog, warnings) =
        load_dialog(path).with_context(|| format!("loading dialog {}", path.display()))?;
    for w in warnings {
        eprintln!("warning: {}: {w}", path.display());
    }
    let ailts = resolve_dialog(&dialog, config)?;
    if trace {
        for ailt in &ailts {
            if ailt.suppressed {
                eprintln!("[{}] u{}: suppressed by tense filter", dialog.dialog_id, ailt.utterance_id);
                continue;
            }
            for (i, tu) in ailt.tus.iter().enumerate() {
                let rules: Vec<String> = tu
                    .rules
                    .iter()
                    .map(|t| match t.antecedent_utterance {
                        Some(u) => format!("{}<-u{}#{}", t.rule, u, t.antecedent_mention.unwrap_or(0)),
                        None => format!("{}", t.rule),
                    })
                    .collect();
                eprintln!(
                    "[{}] u{} tu{}: cf={:.3} rules=[{}] critics={:?}",
                    dialog.dialog_id,
                    ailt.utterance_id,
                    i,
                    tu.certainty,
                    rules.join(","),
                    tu.critics_fired,
                );
            }
        }
    }
    Ok(output_from_ailts(&dialog, &ailts))
}

fn cmd_resolve(args: ResolveArgs) -> anyhow::Result<()> {
    let config = build_config(args.config.as_deref(), args.no_rules, args.beam)?;
    if args.dialogs.len() > 1 {
        match &args.output {
            Some(dir) if dir.is_dir() => {}
            _ => {
                return Err(UsageError(
                    "resolving multiple dialogs requires --output pointing at a directory".into(),
                )
                .into())
            }
        }
    }

    let jobs = args.jobs.max(1);
    let results: Vec<anyhow::Result<(PathBuf, OutputFile)>> = if jobs == 1 || args.dialogs.len() == 1 {
        args.dialogs
            .iter()
            .map(|p| resolve_one(p, &config, args.trace).map(|o| (p.clone(), o)))
            .collect()
    } else {
        // one dialog per unit of work; sessions share no mutable state
        std::thread::scope(|scope| {
            let handles: Vec<_> = args
                .dialogs
                .chunks(args.dialogs.len().div_ceil(jobs))
                .map(|chunk| {
                    let config = &config;
                    let trace = args.trace;
                    scope.spawn(move || {
                        chunk
                            .iter()
                            .map(|p| resolve_one(p, config, trace).map(|o| (p.clone(), o)))
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect()
        })
    };

    for result in results {
        let (path, output) = result?;
        let text = emit_output(&output)?;
        match &args.output {
            None => print!("{text}"),
            Some(target) if target.is_dir() => {
                let stem = path.file_stem().unwrap_or_default().to_string_lossy();
                let dest = target.join(format!("{stem}.out.json"));
                std::fs::write(&dest, text)
                    .with_context(|| format!("writing {}", dest.display()))?;
            }
            Some(file) => {
                std::fs::write(file, text).with_context(|| format!("writing {}", file.display()))?;
            }
        }
    }
    Ok(())
}

fn load_pairs(
    system_paths: &[PathBuf],
    key_paths: &[PathBuf],
) -> anyhow::Result<Vec<(OutputFile, KeyFile)>> {
    let keys: Vec<KeyFile> = key_paths
        .iter()
        .map(|p| load_key(p).with_context(|| format!("loading key {}", p.display())))
        .collect::<anyhow::Result<_>>()?;
    system_paths
        .iter()
        .map(|p| {
            let output =
                load_output(p).with_context(|| format!("loading system output {}", p.display()))?;
            let key = keys
                .iter()
                .find(|k| k.dialog_id == output.dialog_id)
                .cloned()
                .ok_or_else(|| {
                    tempora_core::Error::schema(
                        p.display().to_string(),
                        format!("no key file with dialog_id {:?}", output.dialog_id),
                    )
                })?;
            Ok((output, key))
        })
        .collect()
}

fn emit_counts(
    counts: &FieldCounts,
    lower_bound: Option<&FieldCounts>,
    per_field: bool,
    output: Option<&Path>,
) -> anyhow::Result<()> {
    if per_field {
        print!("{}", eval::render_table(counts, lower_bound));
    } else {
        let rows = eval::table_rows(counts, lower_bound);
        let overall = rows.last().expect("overall row");
        let fmt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.3}"));
        println!(
            "overall: correct={} incorrect={} missing={} extra={} null={} acc={} prec={}",
            overall.correct,
            overall.incorrect,
            overall.missing,
            overall.extra,
            overall.null_agree,
            fmt(overall.accuracy),
            fmt(overall.precision),
        );
    }
    if let Some(path) = output {
        let rows = eval::table_rows(counts, lower_bound);
        let payload = serde_json::json!({ "counts": counts, "rows": rows });
        std::fs::write(path, serde_json::to_string_pretty(&payload)? + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

#[derive(Deserialize)]
struct CountsFile {
    counts: FieldCounts,
}

fn cmd_evaluate(args: EvaluateArgs) -> anyhow::Result<()> {
    let pairs = load_pairs(&args.system, &args.key)?;
    let counts = eval::score_corpus(&pairs)?;
    let lb = match &args.lower_bound_counts {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("loading lower-bound counts {}", path.display()))?;
            let file: CountsFile = serde_json::from_str(&text)?;
            Some(file.counts)
        }
        None => None,
    };
    emit_counts(&counts, lb.as_ref(), args.per_field, args.output.as_deref())
}

fn cmd_lower_bound(args: LowerBoundArgs) -> anyhow::Result<()> {
    let config = build_config(args.config.as_deref(), true, None)?;
    let keys: Vec<KeyFile> = args
        .key
        .iter()
        .map(|p| load_key(p).with_context(|| format!("loading key {}", p.display())))
        .collect::<anyhow::Result<_>>()?;
    let corpus: Vec<(DialogFile, KeyFile)> = args
        .dialogs
        .iter()
        .map(|p| {
            let (dialog, warnings) =
                load_dialog(p).with_context(|| format!("loading dialog {}", p.display()))?;
            for w in warnings {
                eprintln!("warning: {}: {w}", p.display());
            }
            let key = keys
                .iter()
                .find(|k| k.dialog_id == dialog.dialog_id)
                .cloned()
                .ok_or_else(|| {
                    tempora_core::Error::schema(
                        p.display().to_string(),
                        format!("no key file with dialog_id {:?}", dialog.dialog_id),
                    )
                })?;
            Ok((dialog, key))
        })
        .collect::<anyhow::Result<_>>()?;
    let counts = eval::lower_bound(&corpus, &config)?;
    emit_counts(&counts, None, args.per_field, args.output.as_deref())
}

/// Agreement file: one labeled table per field.
#[derive(Debug, Serialize, Deserialize)]
struct KappaFile {
    fields: Vec<NamedTable>,
}

#[derive(Debug, Serialize, Deserialize)]
struct NamedTable {
    field: String,
    #[serde(flatten)]
    table: AgreementTable,
}

#[derive(Debug, Serialize)]
struct KappaRow {
    field: String,
    pa: f64,
    pe: f64,
    kappa: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    kappa_avg: Option<f64>,
}

fn cmd_kappa(args: KappaArgs) -> anyhow::Result<()> {
    let text = std::fs::read_to_string(&args.table)
        .with_context(|| format!("loading agreement table {}", args.table.display()))?;
    let file: KappaFile = serde_json::from_str(&text)?;
    let mode: PaMode = args.mode.into();

    let mut rows = Vec::new();
    for named in &file.fields {
        let pa = eval::observed_agreement(&named.table, mode)?;
        let pe = eval::chance_agreement(&named.table)?;
        let k = kappa(&named.table, mode)?;
        let kappa_avg = match &args.expert {
            Some(expert) => Some(pairwise_expert_kappa(&named.table, expert)?),
            None => None,
        };
        rows.push(KappaRow { field: named.field.clone(), pa, pe, kappa: k, kappa_avg });
    }

    if args.expert.is_some() {
        println!("{:<20} {:>6} {:>6} {:>7} {:>10}", "Field", "Pa", "Pe", "kappa", "kappa_avg");
    } else {
        println!("{:<20} {:>6} {:>6} {:>7}", "Field", "Pa", "Pe", "kappa");
    }
    for row in &rows {
        match row.kappa_avg {
            Some(avg) => println!(
                "{:<20} {:>6.3} {:>6.3} {:>7.3} {:>10.3}",
                row.field, row.pa, row.pe, row.kappa, avg
            ),
            None => println!("{:<20} {:>6.3} {:>6.3} {:>7.3}", row.field, row.pa, row.pe, row.kappa),
        }
    }

    if let Some(path) = &args.output {
        std::fs::write(path, serde_json::to_string_pretty(&rows)? + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}
