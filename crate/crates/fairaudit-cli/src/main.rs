//! Command-line entry point.
//!
//! Exit codes: 0 every principle passes (or no assessment ran), 2 at
//! least one principle needs attention, 3 a required check failed and
//! blocked a principle, 1 execution error.

use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use fairaudit_cli::config::{AuditConfig, Stages};
use fairaudit_cli::interactive::prompt_answers;
use fairaudit_cli::run::{
    exit_code_for, load_answers, load_questionnaire_source, run_audit, AnswersDocument,
};
use fairaudit_core::checklist::evaluate_answers;

#[derive(Parser)]
#[command(
    name = "fairaudit",
    version,
    about = "Audit classifier prediction files for fairness, explainability, and re-identification risk"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Audit configuration document (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Override the config's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Answers document (input in batch mode, output in interactive mode).
    #[arg(long)]
    answers: Option<PathBuf>,
    /// Seed for seeded data-generation utilities; accepted everywhere,
    /// unused by the deterministic audit stages.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline (all stages enabled in the config).
    Audit {
        #[command(flatten)]
        common: CommonArgs,
        /// Restrict the run to the named stages (repeatable).
        #[arg(long)]
        stage: Vec<String>,
    },
    /// Fairness metrics only.
    Metrics(CommonArgs),
    /// Proxy-variable scan only.
    Proxy(CommonArgs),
    /// Re-identification risk scan only.
    Privacy(CommonArgs),
    /// Surrogate explanation only.
    Explain(CommonArgs),
    /// Reweighing and threshold optimization only.
    Mitigate(CommonArgs),
    /// Evaluate the questionnaire without computing metrics.
    Assess {
        #[command(flatten)]
        common: CommonArgs,
        /// Prompt for answers on the terminal instead of reading a file.
        #[arg(long)]
        interactive: bool,
    },
}

fn load_config(common: &CommonArgs) -> Result<AuditConfig> {
    let (mut config, _base) = AuditConfig::load(&common.config)?;
    if let Some(out) = &common.out {
        config.output_dir = out.clone();
    }
    if let Some(answers) = &common.answers {
        config.answers = Some(answers.clone());
    }
    Ok(config)
}

fn run_stages(common: &CommonArgs, stages: Stages) -> Result<i32> {
    let config = load_config(common)?;
    let outcome = run_audit(&config, stages)?;
    println!(
        "report written to `{}` (digest {})",
        config.output_dir.display(),
        outcome.report.digest()?
    );
    Ok(outcome.exit_code)
}

fn run_assess(common: &CommonArgs, interactive: bool) -> Result<i32> {
    let config = load_config(common)?;
    let (questionnaire, _) = load_questionnaire_source(&config.questionnaire)?;
    let answers = if interactive {
        let answers_path = config
            .answers
            .clone()
            .context("interactive mode needs --answers as the output path")?;
        let stdin = std::io::stdin();
        let mut input = stdin.lock();
        let mut output = std::io::stdout();
        match prompt_answers(&questionnaire, &mut input, &mut output)? {
            None => {
                writeln!(output, "aborted; nothing written")?;
                return Ok(1);
            }
            Some(collected) => {
                let doc = AnswersDocument {
                    questionnaire_id: questionnaire.id.clone(),
                    answers: collected.clone(),
                };
                std::fs::write(&answers_path, serde_json::to_string_pretty(&doc)?)
                    .with_context(|| format!("writing answers `{}`", answers_path.display()))?;
                collected
            }
        }
    } else {
        let answers_path = config
            .answers
            .clone()
            .context("batch mode needs an answers document (--answers or config)")?;
        let (doc, _) = load_answers(&answers_path)?;
        if doc.questionnaire_id != questionnaire.id {
            bail!(
                "answers are for questionnaire `{}` but `{}` is configured",
                doc.questionnaire_id,
                questionnaire.id
            );
        }
        doc.answers
    };
    let assessment = evaluate_answers(&questionnaire, &answers, &config.profile)?;
    std::fs::create_dir_all(&config.output_dir)?;
    let rendered = serde_json::to_string_pretty(&serde_json::to_value(&assessment)?)?;
    std::fs::write(config.output_dir.join("assessment.json"), rendered)
        .context("writing assessment.json")?;
    for (principle, verdict) in &assessment.verdicts {
        println!("{}: {}", principle.as_str(), verdict.as_str());
    }
    Ok(exit_code_for(&assessment.verdicts))
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Audit { common, stage } => {
            let stages = if stage.is_empty() {
                load_config(&common)?.stages
            } else {
                let mut s = Stages::none();
                for name in &stage {
                    let one = Stages::only(name)?;
                    s.metrics |= one.metrics;
                    s.proxy |= one.proxy;
                    s.privacy |= one.privacy;
                    s.explain |= one.explain;
                    s.mitigate |= one.mitigate;
                    s.assess |= one.assess;
                }
                s
            };
            run_stages(&common, stages)
        }
        Command::Metrics(common) => run_stages(&common, Stages::only("metrics")?),
        Command::Proxy(common) => run_stages(&common, Stages::only("proxy")?),
        Command::Privacy(common) => run_stages(&common, Stages::only("privacy")?),
        Command::Explain(common) => run_stages(&common, Stages::only("explain")?),
        Command::Mitigate(common) => run_stages(&common, Stages::only("mitigate")?),
        Command::Assess {
            common,
            interactive,
        } => run_assess(&common, interactive),
    }
}

fn main() {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::exit(1);
        }
    }
}
