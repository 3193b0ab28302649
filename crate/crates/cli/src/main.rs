use anyhow::{bail, Context, Result};
use bomca_core::config::{preset, OutputFormat, ScenarioConfig, PRESETS};
use bomca_core::experiments::{run_oracle, run_trajectories, run_transmission, run_wavefunction, selftest};
use bomca_core::io::{oracle_tables, trajectory_tables, transmission_table, wavefunction_tables, OutputWriter, Table};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "bomca", version, about = "Complex-action trajectory experiments for Gaussian wavepackets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// March the trajectory manifold and write dense complex paths.
    Trajectories(Common),
    /// Reconstruct ψ per truncation order next to the split-operator result.
    Wavefunction(Common),
    /// Sweep T(E) over the configured energies.
    Transmission(Common),
    /// Run the split-operator oracle alone.
    Oracle(Common),
    /// Quick engine and oracle checks.
    Selftest {
        #[arg(long, env = "BOMCA_THREADS")]
        threads: Option<usize>,
    },
    /// Print a preset as a config file.
    Preset { name: String },
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,
    /// Built-in scenario: fig1, fig2a, fig2b or fig3.
    #[arg(long)]
    preset: Option<String>,
    /// Output directory, overriding `output.directory`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, env = "BOMCA_THREADS")]
    threads: Option<usize>,
    /// Table format, overriding `output.formats`.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl Common {
    fn load(&self) -> Result<ScenarioConfig> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(path), None) => ScenarioConfig::load(path).with_context(|| format!("loading {}", path.display()))?,
            (None, Some(name)) => preset(name)?,
            _ => bail!("give exactly one of --config or --preset ({})", PRESETS.join(", ")),
        };
        if let Some(out) = &self.out {
            cfg.output.directory = out.clone();
        }
        if let Some(format) = self.format {
            cfg.output.formats = vec![match format {
                Format::Csv => OutputFormat::Csv,
                Format::Json => OutputFormat::Json,
            }];
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn init_threads(threads: Option<usize>) -> Result<()> {
    if let Some(n) = threads {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn write_all(cfg: &ScenarioConfig, command: &str, tables: &[Table], summary: Option<(&str, &serde_json::Value)>) -> Result<()> {
    let mut formats = cfg.output.formats.clone();
    formats.dedup();
    for format in formats {
        let mut w = OutputWriter::new(&cfg.output.directory, format, command, cfg)?;
        for t in tables {
            w.table(t)?;
        }
        if let Some((stem, value)) = summary {
            w.document(stem, stem, value)?;
        }
        for path in w.written() {
            eprintln!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<usize> {
    match cli.command {
        Command::Preset { name } => {
            print!("{}", preset(&name)?.to_toml());
            Ok(0)
        }
        Command::Selftest { threads } => {
            init_threads(threads)?;
            let checks = selftest();
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            Ok(checks.iter().filter(|c| !c.passed).count())
        }
        Command::Trajectories(args) => {
            let cfg = args.load()?;
            init_threads(args.threads)?;
            let runs = run_trajectories(&cfg)?;
            let dead: usize = runs.iter().map(|r| r.samples.iter().filter(|s| !s.is_ok()).count()).sum();
            for r in &runs {
                eprintln!("N = {}: {} samples, {} paths", r.order, r.samples.len(), r.paths.len());
            }
            write_all(&cfg, "trajectories", &trajectory_tables(&runs), None)?;
            Ok(dead)
        }
        Command::Wavefunction(args) => {
            let cfg = args.load()?;
            init_threads(args.threads)?;
            let run = run_wavefunction(&cfg)?;
            for w in &run.windows {
                for (order, r) in &w.orders {
                    match r {
                        Ok(o) => eprintln!(
                            "[{}, {}] N = {order}: L2 = {:.4e}, relative {:.4e}",
                            w.window.lo, w.window.hi, o.l2, o.relative_l2
                        ),
                        Err(e) => eprintln!("[{}, {}] N = {order}: {e}", w.window.lo, w.window.hi),
                    }
                }
            }
            let (tables, summary) = wavefunction_tables(&run);
            write_all(&cfg, "wavefunction", &tables, Some(("summary", &summary)))?;
            Ok(run.failures())
        }
        Command::Transmission(args) => {
            let cfg = args.load()?;
            init_threads(args.threads)?;
            let curve = run_transmission(&cfg)?;
            for e in &curve.entries {
                let orders: Vec<String> = e
                    .orders
                    .iter()
                    .map(|o| match (o.transmission, &o.error) {
                        (Some(t), _) => format!("N={} {t:.6e}", o.order),
                        (None, Some(err)) => format!("N={} failed ({err})", o.order),
                        (None, None) => format!("N={} failed", o.order),
                    })
                    .collect();
                let exact = e.exact.map_or("failed".to_string(), |t| format!("{t:.6e}"));
                eprintln!("E = {:6.2}  t_f = {:.2}  exact {exact}  {}", e.energy, e.t_f, orders.join("  "));
            }
            let summary = serde_json::to_value(&curve)?;
            write_all(&cfg, "transmission", &[transmission_table(&curve)], Some(("transmission_curve", &summary)))?;
            Ok(curve.failures())
        }
        Command::Oracle(args) => {
            let cfg = args.load()?;
            init_threads(args.threads)?;
            let runs = run_oracle(&cfg)?;
            let (tables, summary) = oracle_tables(&runs);
            write_all(&cfg, "oracle", &tables, Some(("oracle_summary", &summary)))?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(failures) => {
            eprintln!("{failures} failed point(s)");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
