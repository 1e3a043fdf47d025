use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mrac_rl::harness::{
    export_episode, export_table, run_benchmark, run_episode, run_selftest, ExportFormat,
    HarnessConfig, LoopConfig, Variant, VariantSpec,
};
use mrac_rl::plant::{companion_from_pendulum, Form, PlantState};
use mrac_rl::policy::{mlp_load, Policy};
use mrac_rl::srip::{sample_test_env, write_env_suite};
use mrac_rl::{Error, Result};

/// Adaptive inner loops for outer-loop policies on the set-point randomized
/// inverted pendulum.
#[derive(Parser)]
#[command(name = "mrac-rl", version)]
struct Cli {
    /// TOML configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single episode and print its summary.
    Episode {
        #[arg(long, default_value = "linear")]
        form: Form,
        /// `lqr` or `mlp:<path>`
        #[arg(long, default_value = "lqr")]
        policy: String,
        #[arg(long, default_value = "mrac100")]
        variant: Variant,
        #[arg(long, default_value_t = 0)]
        env_seed: u64,
        /// Initial state as `theta,theta_dot`
        #[arg(long, value_delimiter = ',', value_name = "THETA,THETA_DOT")]
        x0: Option<Vec<f64>>,
        /// Write the trajectory (.csv or .json)
        #[arg(long)]
        export: Option<PathBuf>,
    },
    /// Run every variant on a sampled environment suite.
    Bench {
        #[arg(long, default_value_t = 100)]
        n_envs: usize,
        #[arg(long, default_value_t = 0)]
        master_seed: u64,
        /// Comma separated `<policy>-<variant>` names, e.g. lqr-direct100,mlp-mrac100
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "lqr-direct100,lqr-mrac100,lqr-direct10,lqr-mrac10"
        )]
        variants: Vec<String>,
        /// Policy file used by `mlp-*` variants
        #[arg(long)]
        mlp: Option<PathBuf>,
        #[arg(long, default_value = "linear")]
        form: Form,
        /// Write the table (.csv or .json)
        #[arg(long)]
        export: Option<PathBuf>,
        /// Write the sampled environments as JSON lines
        #[arg(long)]
        env_suite: Option<PathBuf>,
    },
    /// Run quick internal consistency checks.
    Selftest,
}

fn load_config(path: Option<&PathBuf>) -> Result<HarnessConfig> {
    match path {
        Some(p) => HarnessConfig::load(p),
        None => Ok(HarnessConfig::default()),
    }
}

fn make_policy(spec: &str, cfg: &HarnessConfig, form: Form) -> Result<Policy> {
    if spec == "lqr" {
        let reference = companion_from_pendulum(&mrac_rl::plant::PlantParams::nominal(), form)?;
        return Ok(Policy::Lqr(cfg.lqr_policy(&reference)?));
    }
    match spec.strip_prefix("mlp:") {
        Some(path) => Ok(Policy::Mlp(mlp_load(path.as_ref())?)),
        None => Err(Error::Argument(format!(
            "unknown policy '{spec}' (expected lqr or mlp:<path>)"
        ))),
    }
}

fn run(cli: Cli) -> Result<bool> {
    let cfg = load_config(cli.config.as_ref())?;
    let options = cfg.episode_options()?;
    let rate = cfg.run.integration_rate_hz;
    match cli.command {
        Command::Episode {
            form,
            policy,
            variant,
            env_seed,
            x0,
            export,
        } => {
            let reference = companion_from_pendulum(&options.reference_params, form)?;
            let mut mcfg = cfg.mrac_config(&reference)?;
            mcfg.variant = form;
            let policy = make_policy(&policy, &cfg, form)?;
            let loop_cfg = LoopConfig::for_variant(variant, rate)?;
            let env = sample_test_env(env_seed, form);
            let x0 = PlantState::new(x0.unwrap_or_else(|| cfg.run.x0.clone()));
            let rec = run_episode(&env, &policy, &loop_cfg, Some(&mcfg), &x0, &options)?;
            let s = &rec.summary;
            println!(
                "env {env_seed} ({form}, m={:.4} l={:.4} b={:.4}) {variant} {}",
                env.params.m,
                env.params.l,
                env.params.b,
                policy.name()
            );
            println!("avg_cost {:.6}", s.avg_cost);
            println!("total_cost {:.6}", s.total_cost);
            println!("avg_e_theta_sq_deg2 {:.6}", s.avg_e_theta_sq_deg);
            println!("peak_abs_e_theta {:.6}", s.peak_abs_e_theta);
            if let Some(path) = export {
                export_episode(&rec, ExportFormat::from_path(&path)?, &path)?;
            }
            Ok(true)
        }
        Command::Bench {
            n_envs,
            master_seed,
            variants,
            mlp,
            form,
            export,
            env_suite,
        } => {
            let reference = companion_from_pendulum(&options.reference_params, form)?;
            let mut mcfg = cfg.mrac_config(&reference)?;
            mcfg.variant = form;
            let mlp = match &mlp {
                Some(p) => Some(mlp_load(p)?),
                None => None,
            };
            let mut specs = Vec::new();
            for name in &variants {
                let (kind, variant) = name.split_once('-').ok_or_else(|| {
                    Error::Argument(format!("variant '{name}' is not <policy>-<variant>"))
                })?;
                let policy = match kind {
                    "lqr" => make_policy("lqr", &cfg, form)?,
                    "mlp" => Policy::Mlp(mlp.clone().ok_or_else(|| {
                        Error::Argument(format!("variant '{name}' needs --mlp <path>"))
                    })?),
                    _ => return Err(Error::Argument(format!("unknown policy in '{name}'"))),
                };
                specs.push(VariantSpec {
                    name: name.clone(),
                    policy,
                    loop_cfg: LoopConfig::for_variant(variant.parse()?, rate)?,
                });
            }
            let x0 = PlantState::new(cfg.run.x0.clone());
            let table = run_benchmark(
                n_envs,
                &specs,
                master_seed,
                form,
                Some(&mcfg),
                &x0,
                &options,
            )?;
            println!(
                "{:<16} {:>9} {:>14} {:>10} {:>16} {:>10}",
                "variant", "completed", "avg_cost", "se", "e_theta_sq_deg2", "se"
            );
            let show = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.5}"));
            for r in &table.rows {
                println!(
                    "{:<16} {:>9} {:>14} {:>10} {:>16} {:>10}",
                    r.variant,
                    format!("{}/{}", r.n_completed, r.n_envs),
                    show(r.mean_avg_cost),
                    show(r.se_avg_cost),
                    show(r.mean_avg_e_theta_sq_deg),
                    show(r.se_avg_e_theta_sq_deg)
                );
            }
            if let Some(path) = export {
                export_table(&table, ExportFormat::from_path(&path)?, &path)?;
            }
            if let Some(path) = env_suite {
                let f = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
                write_env_suite(&table.envs, std::io::BufWriter::new(f))
                    .map_err(|e| Error::io(&path, e))?;
            }
            Ok(true)
        }
        Command::Selftest => {
            run_selftest(std::io::stdout().lock()).map_err(|e| Error::io("<stdout>", e))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
