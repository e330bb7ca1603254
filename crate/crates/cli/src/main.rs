use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use iemo::harness::{
    export, load_result, preset, run_campaign, Campaign, CampaignResult, Execution, ExportKind, RunOptions, PRESETS,
};
use iemo_service::SessionManager;

/// Exit status when some replications failed but the rest were written.
const PARTIAL: u8 = 2;

#[derive(Parser)]
#[command(
    name = "iemo",
    version,
    about = "Interactive EMO with a learned pairwise preference model"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a campaign described by a TOML file.
    Run {
        file: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run a named preset; without a name, list the presets.
    Preset {
        name: Option<String>,
        /// Print the preset as TOML instead of running it.
        #[arg(long)]
        print: bool,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run the ranking-quality study on synthetic sets.
    Ndcg {
        /// Objective counts, comma separated.
        #[arg(long, value_delimiter = ',')]
        m: Vec<usize>,
        /// Training pairs per replication.
        #[arg(long)]
        pairs: Option<usize>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Write plotting bundles for a finished campaign.
    Export {
        dir: PathBuf,
        #[arg(long, default_value = "population")]
        kind: ExportKind,
    },
    /// Rebuild and print the report of a campaign directory.
    Report { dir: PathBuf },
    /// Serve the /v1 session API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: std::net::SocketAddr,
        /// Session logs live here; existing sessions are recovered.
        #[arg(long, default_value = "runs/sessions")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct Overrides {
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Replications per cell (also for the studies).
    #[arg(long)]
    reps: Option<usize>,
    /// Worker threads; 1 runs serially, 0 uses every core.
    #[arg(long)]
    parallel: Option<usize>,
    /// Output directory; overrides IEMO_OUT and the campaign's own.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Overrides {
    fn apply(&self, campaign: &mut Campaign) {
        if let Some(seed) = self.seed {
            campaign.seed = seed;
        }
        if let Some(reps) = self.reps {
            campaign.replications = reps;
            if let Some(ndcg) = &mut campaign.ndcg {
                ndcg.replications = reps;
            }
        }
    }

    fn options(&self) -> RunOptions {
        RunOptions {
            output_dir: self.out.clone(),
            execution: self.parallel.map(Execution::from_workers),
        }
    }
}

fn execute(mut campaign: Campaign, overrides: &Overrides) -> Result<ExitCode> {
    overrides.apply(&mut campaign);
    let result = run_campaign(&campaign, &overrides.options())
        .with_context(|| format!("campaign `{}` failed", campaign.name))?;
    Ok(finish(&result))
}

fn finish(result: &CampaignResult) -> ExitCode {
    print!("{}", result.report.render_text());
    println!("results in {}", result.output_dir.display());
    if result.is_partial() {
        eprintln!("{} replications failed", result.failures().len());
        ExitCode::from(PARTIAL)
    } else {
        ExitCode::SUCCESS
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run { file, overrides } => execute(Campaign::load(&file)?, &overrides),
        Command::Preset { name: None, .. } => {
            for name in PRESETS {
                println!("{name}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Preset {
            name: Some(name),
            print,
            overrides,
        } => {
            let mut campaign = preset(&name)?;
            if print {
                overrides.apply(&mut campaign);
                print!("{}", campaign.to_toml_string()?);
                return Ok(ExitCode::SUCCESS);
            }
            execute(campaign, &overrides)
        }
        Command::Ndcg { m, pairs, overrides } => {
            let mut campaign = preset("ndcg-study")?;
            let study = campaign.ndcg.as_mut().context("ndcg preset without a study")?;
            if !m.is_empty() {
                study.m_list = m;
            }
            if let Some(p) = pairs {
                study.pairs = p;
            }
            execute(campaign, &overrides)
        }
        Command::Export { dir, kind } => {
            for path in export(&dir, kind)? {
                println!("{}", path.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Report { dir } => Ok(finish(&load_result(&dir)?)),
        Command::Serve { addr, out } => {
            let manager = Arc::new(
                SessionManager::open(&out).with_context(|| format!("cannot open session store {}", out.display()))?,
            );
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(iemo_service::serve(addr, manager))?;
            bail!("server stopped")
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
