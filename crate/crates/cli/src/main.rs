//! `ogtt`: command-line front end for fitting, labelling, filtering and
//! classifying OGTT cohorts.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use log::warn;
use serde_json::json;

use ogtt_core::pipeline::{fit_all, records_to_csv_string, render_plot_csv, render_svg};
use ogtt_core::synth::{self, ClusterSpec, NoiseSpec};
use ogtt_core::{
    check_applicability, classify_record, filter_population, ingest_csv, run_pipeline, track,
    CohortReport, Error, OgttRecord, PipelineConfig, PlotFormat, SvmMode, SvmModel,
};

#[derive(Debug, Parser)]
#[command(
    name = "ogtt",
    version,
    about = "Glucose-tolerance indices from five-point OGTT records"
)]
struct Cli {
    /// `key = value` config file with fit, applicability and classifier settings.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Overrides the fit seed, and the cohort seed for `synth`.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Fail on the first malformed input row instead of skipping it.
    #[arg(long, global = true)]
    strict: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit the glucose curve to every record and print the parameters as JSON.
    Fit {
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Label every record with its ADA category (CSV).
    Ada {
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Fit every record and report its applicability verdict as JSON.
    Filter {
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Also write the applicable records to this CSV file.
        #[arg(long)]
        kept: Option<PathBuf>,
    },
    /// Train the classifier on a cohort and write the model as JSON.
    Train {
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Soft-margin constant; defaults to `svm_c` from the config.
        #[arg(long)]
        c: Option<f64>,
        /// Train on applicable records only.
        #[arg(long)]
        filter: bool,
    },
    /// Classify every record with a trained model (CSV).
    Predict {
        input: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run the full pipeline and write the JSON report.
    Report {
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Apply this model instead of training one.
        #[arg(long, conflicts_with = "c")]
        model: Option<PathBuf>,
        #[arg(long)]
        c: Option<f64>,
        /// Restrict classification to applicable records.
        #[arg(long)]
        filter: bool,
        /// Also write the SVG scatter plot.
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Also write the tidy plot CSV.
        #[arg(long)]
        plot_csv: Option<PathBuf>,
    },
    /// Generate a synthetic cohort CSV with known parameters.
    Synth {
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// JSON list of cluster specs; without it the reference cohort is generated.
        #[arg(long)]
        specs: Option<PathBuf>,
        /// Gaussian noise in mg/dl; the reference cohort defaults to 2.
        #[arg(long)]
        sigma: Option<f64>,
        /// Write the ground-truth parameters to this JSON file.
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Follow patients with several records through the index plane (JSON).
    Track {
        input: PathBuf,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Render a saved report as an SVG or CSV plot.
    Plot {
        report: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Svg)]
        format: Format,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Svg,
    Csv,
}

impl From<Format> for PlotFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Svg => PlotFormat::Svg,
            Format::Csv => PlotFormat::Csv,
        }
    }
}

fn read_text(path: &Path) -> Result<String> {
    Ok(std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
}

fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::io(p, e))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn load_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut config = match &cli.config {
        Some(path) => PipelineConfig::from_kv_str(&read_text(path)?)
            .with_context(|| format!("reading config {}", path.display()))?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.fit.seed = seed;
    }
    Ok(config)
}

fn load_records(path: &Path, strict: bool) -> Result<Vec<OgttRecord>> {
    let ingested = ingest_csv(path, strict)?;
    for e in &ingested.errors {
        warn!("{}: skipped {e}", path.display());
    }
    if ingested.records.is_empty() {
        return Err(Error::Input(format!("{} contains no valid records", path.display())).into());
    }
    Ok(ingested.records)
}

fn load_model(path: &Path) -> Result<SvmModel> {
    SvmModel::from_json(&read_text(path)?)
        .with_context(|| format!("reading model {}", path.display()))
}

fn pretty(value: &impl serde::Serialize) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

fn csv_row<S: Into<String>>(fields: impl IntoIterator<Item = S>) -> Vec<String> {
    fields.into_iter().map(Into::into).collect()
}

fn render_csv(rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.write_record(row)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn run(cli: Cli) -> Result<()> {
    let config = load_config(&cli)?;
    match &cli.command {
        Command::Fit { input, output } => {
            let records = load_records(input, cli.strict)?;
            let fits = fit_all(&records, &config.fit)?;
            let rows: Vec<_> = records
                .iter()
                .zip(&fits)
                .map(|(r, f)| json!({ "patient_id": r.patient_id, "seq": r.seq, "fit": f }))
                .collect();
            write_out(output.as_deref(), &pretty(&rows)?)
        }
        Command::Ada { input, output } => {
            let records = load_records(input, cli.strict)?;
            let mut rows = vec![csv_row(["patient_id", "g0", "g120", "category", "label"])];
            for r in &records {
                let label = classify_record(r)?;
                rows.push(csv_row([
                    r.patient_id.clone(),
                    r.fasting().to_string(),
                    r.two_hour().to_string(),
                    label.category.to_string(),
                    i8::from(label.binary).to_string(),
                ]));
            }
            let text = render_csv(&rows)?;
            write_out(output.as_deref(), &text)
        }
        Command::Filter {
            input,
            output,
            kept,
        } => {
            let records = load_records(input, cli.strict)?;
            let fits = fit_all(&records, &config.fit)?;
            let pairs: Vec<(OgttRecord, _)> = records.into_iter().zip(fits).collect();
            let outcome = filter_population(&pairs, &config.thresholds)?;
            let mut entries = Vec::with_capacity(pairs.len());
            for (r, f) in &pairs {
                let verdict = check_applicability(r, f, &config.thresholds)?;
                entries.push(json!({ "patient_id": r.patient_id, "omega": f.params.omega, "verdict": verdict }));
            }
            let body = json!({
                "kept": outcome.kept.len(),
                "rejected": outcome.rejected.len(),
                "kept_fraction": outcome.kept_fraction,
                "entries": entries,
            });
            if let Some(path) = kept {
                let records: Vec<OgttRecord> =
                    outcome.kept.iter().map(|((r, _), _)| r.clone()).collect();
                write_out(Some(path), &records_to_csv_string(&records)?)?;
            }
            write_out(output.as_deref(), &pretty(&body)?)
        }
        Command::Train {
            input,
            output,
            c,
            filter,
        } => {
            let records = load_records(input, cli.strict)?;
            let mode = SvmMode::Train {
                c: c.unwrap_or(config.svm_c),
            };
            let report = run_pipeline(&records, &config, &mode, *filter)?;
            let mut text = report.model.to_json()?;
            text.push('\n');
            write_out(output.as_deref(), &text)
        }
        Command::Predict {
            input,
            model,
            output,
        } => {
            let model = load_model(model)?;
            let records = load_records(input, cli.strict)?;
            let fits = fit_all(&records, &config.fit)?;
            let mut rows = vec![csv_row([
                "patient_id",
                "A",
                "alpha",
                "predicted",
                "distance",
                "converged",
            ])];
            for (r, f) in records.iter().zip(&fits) {
                let p = model.predict(f.params.a, f.params.alpha)?;
                rows.push(csv_row([
                    r.patient_id.clone(),
                    f.params.a.to_string(),
                    f.params.alpha.to_string(),
                    i8::from(p.label).to_string(),
                    p.signed_distance.to_string(),
                    f.converged.to_string(),
                ]));
            }
            let text = render_csv(&rows)?;
            write_out(output.as_deref(), &text)
        }
        Command::Report {
            input,
            output,
            model,
            c,
            filter,
            svg,
            plot_csv,
        } => {
            let records = load_records(input, cli.strict)?;
            let mode = match model {
                Some(path) => SvmMode::Load(load_model(path)?),
                None => SvmMode::Train {
                    c: c.unwrap_or(config.svm_c),
                },
            };
            let report = run_pipeline(&records, &config, &mode, *filter)?;
            if report.aggregates.non_converged > 0 {
                warn!(
                    "{} fit(s) did not converge and are excluded from the aggregates",
                    report.aggregates.non_converged
                );
            }
            if let Some(path) = svg {
                write_out(Some(path), &render_svg(&report)?)?;
            }
            if let Some(path) = plot_csv {
                write_out(Some(path), &render_plot_csv(&report)?)?;
            }
            write_out(output.as_deref(), &report.to_json()?)
        }
        Command::Synth {
            output,
            specs,
            sigma,
            truth,
        } => {
            let seed = cli.seed.unwrap_or(0);
            let cohort = match (specs, sigma) {
                (None, None) => synth::reference_cohort(seed)?,
                _ => {
                    let specs: Vec<ClusterSpec> = match specs {
                        Some(path) => serde_json::from_str(&read_text(path)?)
                            .map_err(Error::from)
                            .with_context(|| format!("reading cluster specs {}", path.display()))?,
                        None => synth::reference_specs(),
                    };
                    let noise = match sigma {
                        Some(s) if *s > 0.0 => {
                            NoiseSpec::gaussian(*s, synth::mix_seed(seed, u64::MAX))
                        }
                        Some(s) if *s < 0.0 => {
                            bail!(Error::Input(format!("sigma must be >= 0, got {s}")))
                        }
                        _ => NoiseSpec::NONE,
                    };
                    synth::generate_cohort(&specs, noise, seed)?
                }
            };
            if let Some(path) = truth {
                let mut text = synth::truth_json(&cohort)?;
                text.push('\n');
                write_out(Some(path), &text)?;
            }
            let records: Vec<OgttRecord> = cohort.into_iter().map(|s| s.record).collect();
            write_out(output.as_deref(), &records_to_csv_string(&records)?)
        }
        Command::Track {
            input,
            model,
            output,
        } => {
            let model = model.as_deref().map(load_model).transpose()?;
            let records = load_records(input, cli.strict)?;
            let outcome = track(&records, &config.fit, model.as_ref())?;
            for w in &outcome.warnings {
                warn!("{w}");
            }
            write_out(output.as_deref(), &pretty(&outcome.trajectories)?)
        }
        Command::Plot {
            report,
            output,
            format,
        } => {
            let report = CohortReport::from_json(&read_text(report)?)
                .with_context(|| format!("reading report {}", report.display()))?;
            ogtt_core::emit_plot(&report, output, (*format).into())?;
            Ok(())
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    err.chain()
        .find_map(|cause| cause.downcast_ref::<Error>())
        .map(|e| e.exit_code() as u8)
        .unwrap_or(2)
}

fn main() -> ExitCode {
    env_logger::Builder::new()
        .filter_level(log::LevelFilter::Warn)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
