//! Command-line entry point. `run` returns the process exit code: 0 on
//! success, 1 on data errors, 2 on usage errors.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use listwise_core::analytics::{
    age_usage_tests, detect_evasions, diff_snapshots, ks_two_sample, lifetime_cdf, reduce_list, EvasionConfig,
};
use listwise_core::ios::{export_ios, ExportOptions, DEFAULT_MAX_RULES};
use listwise_core::replay::{replay_with, usage_summary, ReplayOptions, RequestLog};
use listwise_core::{parse_list, FilterRule, Strategy, StrategyConfig, StrategyMode, SuffixTable};

use crate::formats::{
    format_hot_set, load_log, load_manifest, load_snapshot_dir, load_suffixes, read_hot_set, read_profile,
    read_text, write_profile, write_text, LoadSummary,
};
use crate::shared::MonotonicClock;
use crate::{bench, ios_json, report, synth};

#[derive(Debug, Parser)]
#[command(name = "listwise", version, about = "Filter-list replay, profiling, reduction and analytics")]
pub struct Cli {
    /// Public-suffix file; a small built-in table is used otherwise.
    #[arg(long, global = true, value_name = "PATH")]
    pub suffixes: Option<PathBuf>,
    /// Seed for generated workloads.
    #[arg(long, global = true, default_value_t = synth::DEFAULT_SEED)]
    pub seed: u64,
    /// Suppress warnings.
    #[arg(long, short, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify every line of a list and print per-kind counts and shares.
    Inspect {
        #[arg(long)]
        list: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replay a request log under a strategy.
    Replay(ReplayArgs),
    /// Replay a log against the full list and write per-rule match counts.
    Profile {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        list: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Usage-share summary and CDF.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Keep only the rules a usage profile used at least `min-count` times.
    Reduce {
        #[arg(long)]
        list: PathBuf,
        #[arg(long)]
        profile: PathBuf,
        #[arg(long, default_value_t = 1)]
        min_count: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Diff a directory of dated list snapshots.
    Snapshots {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Lifetime CDF of removed rules.
        #[arg(long)]
        cdf: Option<PathBuf>,
    },
    /// Two-sample Kolmogorov-Smirnov test.
    Ks(KsArgs),
    /// Find resources whose URL started changing after a rule began to block them.
    Evasions {
        #[arg(long)]
        snapshots: PathBuf,
        #[arg(long = "log", required = true)]
        logs: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = EvasionConfig::default().min_size_bytes)]
        min_size: u64,
        #[arg(long, default_value_t = EvasionConfig::default().min_persistence_days)]
        min_days: i64,
    },
    /// Translate a list into content-blocker JSON.
    ExportIos {
        #[arg(long)]
        list: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MAX_RULES)]
        max: usize,
        #[arg(long)]
        truncate: bool,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Time brute-force against indexed matching on a generated workload.
    Bench {
        /// Network rules in the generated list.
        #[arg(long, default_value_t = 32_000)]
        network: usize,
        #[arg(long, default_value_t = 4_000)]
        exceptions: usize,
        #[arg(long, default_value_t = 100_000)]
        requests: usize,
        /// Time the brute-force scan on every Nth request.
        #[arg(long, default_value_t = 20)]
        sample_every: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        timing: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    #[arg(long)]
    pub log: PathBuf,
    #[arg(long, required_unless_present = "manifest", conflicts_with = "manifest")]
    pub list: Option<PathBuf>,
    #[arg(
        long,
        default_value = "full",
        conflicts_with = "manifest",
        value_parser = ["full", "full-sync", "reduced", "reduced-sync", "hybrid"]
    )]
    pub mode: String,
    /// Rules matched synchronously in reduced and hybrid mode.
    #[arg(long, conflicts_with = "manifest")]
    pub hot: Option<PathBuf>,
    /// TOML file naming mode, list and hot set.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Deterministic report; stdout when absent.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Latency figures.
    #[arg(long)]
    pub timing: Option<PathBuf>,
    /// Final synchronous set, usable as `--hot` for a later run.
    #[arg(long)]
    pub hot_out: Option<PathBuf>,
    /// Replays of the log through the same strategy.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    pub passes: u32,
}

#[derive(Debug, Args)]
pub struct KsArgs {
    /// First sample, one number per line.
    #[arg(long, requires = "b", conflicts_with = "ages")]
    pub a: Option<PathBuf>,
    #[arg(long, requires = "a")]
    pub b: Option<PathBuf>,
    /// `AGE_DAYS USES` lines; compares each rule-age year with earlier years.
    #[arg(long, required_unless_present = "a")]
    pub ages: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

struct Context_ {
    suffixes: SuffixTable,
    quiet: bool,
    seed: u64,
}

impl Context_ {
    fn warn(&self, message: &str) {
        if !self.quiet {
            eprintln!("warning: {message}");
        }
    }

    fn log_warnings(&self, path: &Path, summary: &LoadSummary) {
        for warning in &summary.warnings {
            self.warn(&format!("{}: {warning}", path.display()));
        }
        if summary.malformed > 0 {
            self.warn(&format!(
                "{}: skipped {} malformed line(s), first at line {}",
                path.display(),
                summary.malformed,
                summary.problems[0].0
            ));
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => Ok(write_text(path, text)?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_list(path: &Path) -> anyhow::Result<Vec<FilterRule>> {
    Ok(parse_list(&read_text(path)?).0)
}

/// Usage-level checks that inputs exist and outputs have a directory,
/// before any work starts.
fn validate(inputs: &[&Path], outputs: &[&Path], dirs: &[&Path]) -> Result<(), String> {
    for path in inputs {
        if !path.is_file() {
            return Err(format!("{}: no such file", path.display()));
        }
    }
    for path in dirs {
        if !path.is_dir() {
            return Err(format!("{}: no such directory", path.display()));
        }
    }
    for path in outputs {
        let parent = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        if !parent.is_dir() {
            return Err(format!("{}: output directory does not exist", path.display()));
        }
        if path.is_dir() {
            return Err(format!("{}: is a directory", path.display()));
        }
    }
    Ok(())
}

fn paths_of(command: &Command, global_suffixes: Option<&Path>) -> (Vec<PathBuf>, Vec<PathBuf>, Vec<PathBuf>) {
    let mut inputs: Vec<PathBuf> = global_suffixes.map(Path::to_path_buf).into_iter().collect();
    let mut outputs = Vec::new();
    let mut dirs = Vec::new();
    let opt = |v: &mut Vec<PathBuf>, p: &Option<PathBuf>| v.extend(p.iter().cloned());
    match command {
        Command::Inspect { list, out } => {
            inputs.push(list.clone());
            opt(&mut outputs, out);
        }
        Command::Replay(a) => {
            inputs.push(a.log.clone());
            opt(&mut inputs, &a.list);
            opt(&mut inputs, &a.hot);
            opt(&mut inputs, &a.manifest);
            opt(&mut outputs, &a.report);
            opt(&mut outputs, &a.timing);
            opt(&mut outputs, &a.hot_out);
        }
        Command::Profile { log, list, out, summary } => {
            inputs.extend([log.clone(), list.clone()]);
            outputs.push(out.clone());
            opt(&mut outputs, summary);
        }
        Command::Reduce { list, profile, out, .. } => {
            inputs.extend([list.clone(), profile.clone()]);
            outputs.push(out.clone());
        }
        Command::Snapshots { dir, out, cdf } => {
            dirs.push(dir.clone());
            opt(&mut outputs, out);
            opt(&mut outputs, cdf);
        }
        Command::Ks(a) => {
            opt(&mut inputs, &a.a);
            opt(&mut inputs, &a.b);
            opt(&mut inputs, &a.ages);
            opt(&mut outputs, &a.out);
        }
        Command::Evasions { snapshots, logs, out, .. } => {
            dirs.push(snapshots.clone());
            inputs.extend(logs.iter().cloned());
            opt(&mut outputs, out);
        }
        Command::ExportIos { list, out, report, .. } => {
            inputs.push(list.clone());
            outputs.push(out.clone());
            opt(&mut outputs, report);
        }
        Command::Bench { out, timing, .. } => {
            opt(&mut outputs, out);
            opt(&mut outputs, timing);
        }
    }
    (inputs, outputs, dirs)
}

/// Parses `argv` (including the program name) and runs one subcommand.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() { 2 } else { 0 };
        }
    };
    let (inputs, outputs, dirs) = paths_of(&cli.command, cli.suffixes.as_deref());
    fn refs(v: &[PathBuf]) -> Vec<&Path> {
        v.iter().map(PathBuf::as_path).collect()
    }
    if let Err(message) = validate(&refs(&inputs), &refs(&outputs), &refs(&dirs)) {
        eprintln!("error: {message}");
        return 2;
    }
    match execute(cli) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err:#}");
            1
        }
    }
}

fn execute(cli: Cli) -> anyhow::Result<()> {
    let suffixes = match &cli.suffixes {
        Some(path) => load_suffixes(path)?,
        None => SuffixTable::builtin(),
    };
    let ctx = Context_ {
        suffixes,
        quiet: cli.quiet,
        seed: cli.seed,
    };
    match cli.command {
        Command::Inspect { list, out } => {
            let (_, stats) = parse_list(&read_text(&list)?);
            emit(out.as_deref(), &report::inspect_text(&stats))
        }
        Command::Replay(args) => run_replay(&ctx, args),
        Command::Profile { log, list, out, summary } => {
            let rules = load_list(&list)?;
            let log = read_log(&ctx, &log)?;
            let config = StrategyConfig {
                mode: StrategyMode::FullSync,
                full_rules: rules.clone(),
                hot_rule_ids: BTreeSet::new(),
            };
            let mut strategy = Strategy::new(config).map_err(|e| anyhow::anyhow!("{e}"))?;
            let result = replay_with(&log, &mut strategy, &ctx.suffixes, &listwise_core::replay::NoClock, ReplayOptions::default());
            write_text(&out, &write_profile(&result.rule_usage))?;
            if let Some(path) = summary {
                write_text(&path, &report::usage_text(&usage_summary(&result.rule_usage, &rules)))?;
            }
            Ok(())
        }
        Command::Reduce {
            list,
            profile,
            min_count,
            out,
        } => {
            let rules = load_list(&list)?;
            let profile = read_profile(&profile)?;
            let reduced = reduce_list(&rules, &profile, min_count).map_err(|e| anyhow::anyhow!("{e}"))?;
            if reduced.is_empty() {
                ctx.warn("no rule reached the minimum count; the reduced list is empty");
            }
            let mut text = String::new();
            for rule in &reduced {
                text.push_str(rule.raw());
                text.push('\n');
            }
            Ok(write_text(&out, &text)?)
        }
        Command::Snapshots { dir, out, cdf } => {
            let loaded = load_snapshot_dir(&dir)?;
            for path in &loaded.ignored {
                ctx.warn(&format!("{}: not a YYYY-MM-DD.txt snapshot, ignored", path.display()));
            }
            let diff = diff_snapshots(&loaded.series).map_err(|e| anyhow::anyhow!("{}: {e}", dir.display()))?;
            emit(out.as_deref(), &report::snapshots_text(&diff))?;
            if let Some(path) = cdf {
                let text = match lifetime_cdf(diff.removed_lifetimes()) {
                    Ok(ecdf) => report::cdf_table(ecdf.points()),
                    Err(_) => {
                        ctx.warn("no rule was removed; the lifetime CDF is empty");
                        report::cdf_table::<f64>(&[])
                    }
                };
                write_text(&path, &text)?;
            }
            Ok(())
        }
        Command::Ks(args) => run_ks(args),
        Command::Evasions {
            snapshots,
            logs,
            out,
            min_size,
            min_days,
        } => {
            let loaded = load_snapshot_dir(&snapshots)?;
            let logs = logs.iter().map(|p| read_log(&ctx, p)).collect::<anyhow::Result<Vec<_>>>()?;
            let config = EvasionConfig {
                min_size_bytes: min_size,
                min_persistence_days: min_days,
            };
            let found = detect_evasions(&loaded.series, &logs, &ctx.suffixes, &config);
            emit(out.as_deref(), &report::evasions_text(&found))
        }
        Command::ExportIos {
            list,
            out,
            max,
            truncate,
            report: report_path,
        } => {
            let rules = load_list(&list)?;
            let export = export_ios(&rules, ExportOptions { max_rules: max, truncate })
                .with_context(|| format!("{}: export failed", list.display()))?;
            if export.report.truncated > 0 {
                ctx.warn(&format!("dropped {} rule(s) over the limit of {max}", export.report.truncated));
            }
            write_text(&out, &ios_json::to_json(&export.rules))?;
            if let Some(path) = report_path {
                write_text(&path, &ios_json::export_report_text(&export))?;
            }
            Ok(())
        }
        Command::Bench {
            network,
            exceptions,
            requests,
            sample_every,
            out,
            timing,
        } => {
            let mut rng = synth::rng(ctx.seed);
            let list = synth::scale_list(&mut rng, network, exceptions, network / 2);
            let log = synth::scale_log(
                &mut rng,
                &list,
                synth::LogShape {
                    requests,
                    ..synth::LogShape::default()
                },
            );
            let (rules, _) = parse_list(&list.text);
            let result = bench::bench_matchers(&rules, &log, &ctx.suffixes, sample_every);
            let mut kv = report::KeyValues::new();
            kv.put("seed", ctx.seed)
                .put("rules", result.rules)
                .put("requests", log.len())
                .put("sampled", result.sampled)
                .put("disagreements", result.disagreements);
            emit(out.as_deref(), &kv.finish())?;
            let mut kv = report::KeyValues::new();
            kv.put("indexed_median_ns", result.indexed.median_ns)
                .put("indexed_p90_ns", result.indexed.p90_ns)
                .put("brute_median_ns", result.brute.median_ns)
                .put("brute_p90_ns", result.brute.p90_ns)
                .put("speedup", format!("{:.2}", result.speedup()));
            match timing {
                Some(path) => write_text(&path, &kv.finish())?,
                None if !ctx.quiet => eprint!("{}", kv.finish()),
                None => {}
            }
            if result.disagreements > 0 {
                bail!("indexed and brute-force matching disagreed on {} request(s)", result.disagreements);
            }
            Ok(())
        }
    }
}

fn read_log(ctx: &Context_, path: &Path) -> anyhow::Result<RequestLog> {
    let (log, summary) = load_log(path)?;
    ctx.log_warnings(path, &summary);
    Ok(log)
}

fn run_replay(ctx: &Context_, args: ReplayArgs) -> anyhow::Result<()> {
    let config = match &args.manifest {
        Some(path) => load_manifest(path)?,
        None => {
            let list = args.list.as_deref().expect("clap requires --list without --manifest");
            let mode = StrategyMode::parse(&args.mode)
                .with_context(|| format!("unknown mode {:?} (expected full, reduced or hybrid)", args.mode))?;
            let hot_rule_ids = match &args.hot {
                Some(path) => read_hot_set(path)?.into_iter().collect(),
                None => BTreeSet::new(),
            };
            StrategyConfig {
                mode,
                full_rules: load_list(list)?,
                hot_rule_ids,
            }
        }
    };
    if config.mode == StrategyMode::FullSync && !config.hot_rule_ids.is_empty() {
        ctx.warn("the hot set is ignored in full mode");
    }
    let log = read_log(ctx, &args.log)?;
    let full_rules = config.full_rules.iter().filter(|r| r.kind().is_matchable()).count();
    let mut strategy = Strategy::new(config).map_err(|e| anyhow::anyhow!("{e}"))?;
    let sync_rules = strategy.sync_index().len();
    let clock = MonotonicClock::new();
    let options = ReplayOptions {
        warmup: true,
        record_decisions: false,
    };
    let (mut text, mut timing) = (String::new(), String::new());
    for pass in 1..=args.passes {
        let result = replay_with(&log, &mut strategy, &ctx.suffixes, &clock, options);
        if args.passes > 1 {
            text.push_str(&format!("# pass {pass}\n"));
            timing.push_str(&format!("# pass {pass}\n"));
        }
        text.push_str(&report::replay_text(&result, full_rules, sync_rules));
        timing.push_str(&report::timing_text(&result));
        if result.malformed_requests > 0 {
            ctx.warn(&format!("{} request(s) had unparsable URLs", result.malformed_requests));
        }
    }
    emit(args.report.as_deref(), &text)?;
    if let Some(path) = &args.timing {
        write_text(path, &timing)?;
    }
    if let Some(path) = &args.hot_out {
        let ids = match strategy.hybrid() {
            Some(state) => state.hot_ids(),
            None => strategy
                .sync_index()
                .members()
                .into_iter()
                .map(|p| strategy.rules()[p].id().clone())
                .collect(),
        };
        write_text(path, &format_hot_set(&ids))?;
    }
    Ok(())
}

fn read_numbers(path: &Path) -> anyhow::Result<Vec<f64>> {
    let text = read_text(path)?;
    let mut values = Vec::new();
    for (index, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let value: f64 = line
            .parse()
            .ok()
            .filter(|v: &f64| !v.is_nan())
            .with_context(|| format!("{}:{}: not a number: {line:?}", path.display(), index + 1))?;
        values.push(value);
    }
    Ok(values)
}

fn read_ages(path: &Path) -> anyhow::Result<Vec<(i64, f64)>> {
    let text = read_text(path)?;
    let mut samples = Vec::new();
    for (index, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = || format!("{}:{}: expected AGE_DAYS USES, got {line:?}", path.display(), index + 1);
        let mut fields = line.split_whitespace();
        let (Some(age), Some(uses), None) = (fields.next(), fields.next(), fields.next()) else {
            bail!(bad());
        };
        let age: i64 = age.parse().with_context(bad)?;
        let uses: f64 = uses.parse().ok().filter(|v: &f64| !v.is_nan()).with_context(bad)?;
        samples.push((age, uses));
    }
    Ok(samples)
}

fn run_ks(args: KsArgs) -> anyhow::Result<()> {
    let text = match (&args.a, &args.b, &args.ages) {
        (Some(a), Some(b), _) => {
            let (xs, ys) = (read_numbers(a)?, read_numbers(b)?);
            let result = ks_two_sample(&xs, &ys)
                .map_err(|e| anyhow::anyhow!("{} / {}: {e}", a.display(), b.display()))?;
            report::ks_text(&result, xs.len(), ys.len())
        }
        (_, _, Some(ages)) => report::age_tests_text(&age_usage_tests(&read_ages(ages)?)),
        _ => unreachable!("clap enforces one input form"),
    };
    emit(args.out.as_deref(), &text)
}
