use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pshlab::config::read_mu;
use pshlab::{exit, output, CliError, ScenarioConfig};
use pshlab_core::scenario::solve_center;
use pshlab_core::surface::io::parse_mesh;
use pshlab_core::variation::energy_stencil;
use pshlab_core::Stage;
use serde_json::json;

#[derive(Parser)]
#[command(name = "pshlab", version, about = "Discrete plurisubharmonicity certificates for harmonic-map energies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for the harmonic map at the base structure.
    Solve(Common),
    /// Solve the 13-node stencil and write the energy grid.
    Stencil(Common),
    /// Run the refinement study and certify the ledger.
    Certify(Common),
    /// Certify a batch of random directions sharing the centre solves.
    Sweep(Common),
    /// Check a JSON mesh document.
    ValidateMesh {
        file: PathBuf,
    },
    /// Print the effective configuration with every default spelled out.
    PrintConfig(Common),
}

#[derive(Args, Clone)]
struct Common {
    /// TOML scenario configuration; defaults apply when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Beltrami direction: a file, `zero`, `random:<seed>:<amp>` or `const:<re>:<im>`.
    #[arg(long)]
    mu: Option<String>,
    #[arg(long)]
    level: Option<usize>,
    /// Stencil spacing at the configured level.
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Concurrent scenarios in a sweep.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn config(&self) -> Result<ScenarioConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => ScenarioConfig::load(p)?,
            None => ScenarioConfig::default(),
        };
        if let Some(m) = &self.mu {
            cfg.scenario.mu = read_mu(m)?;
        }
        if let Some(l) = self.level {
            cfg.scenario.level = l;
        }
        if let Some(h) = self.h {
            cfg.scenario.h = Some(h);
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.output.dir = o.clone();
        }
        cfg.check()?;
        Ok(cfg)
    }
}

fn print_json(v: serde_json::Value) {
    println!("{}", serde_json::to_string(&v).expect("json value serializes"));
}

/// Writes the stencil nodes solved before a failure next to the other outputs.
fn keep_partial(cfg: &ScenarioConfig, e: CliError) -> CliError {
    if let Some(g) = e.partial_grid() {
        let path = cfg.output.dir.join("egrid.partial.csv");
        if output::ensure_dir(&cfg.output.dir).and_then(|_| output::write_grid(&path, g)).is_ok() {
            eprintln!("wrote {} solved stencil nodes to {}", g.nodes.len(), path.display());
        }
    }
    e
}

fn solve(cfg: &ScenarioConfig) -> Result<i32, CliError> {
    let spec = &cfg.scenario;
    let (map, report) = solve_center(spec, spec.level)?;
    output::ensure_dir(&cfg.output.dir)?;
    output::write_json(
        &cfg.output.dir.join("solve.json"),
        &json!({ "config_hash": cfg.hash(), "level": spec.level, "report": report, "map": map.points }),
    )?;
    print_json(json!({
        "level": spec.level,
        "energy": report.energy,
        "iterations": report.iterations,
        "grad_norm": report.grad_norm,
    }));
    Ok(exit::PASS)
}

fn stencil(cfg: &ScenarioConfig) -> Result<i32, CliError> {
    let spec = &cfg.scenario;
    let (center, _) = solve_center(spec, spec.level)?;
    let inst = spec.instance(spec.level).map_err(|e| e.at(Stage::Build))?;
    let h = spec.spacing(&inst.mu, spec.level);
    let grid = energy_stencil(&inst.family, &inst.lm, &inst.target, &center, h, &spec.solver)
        .map_err(|e| keep_partial(cfg, e.at(Stage::Stencil).into()))?;
    output::ensure_dir(&cfg.output.dir)?;
    output::write_grid(&cfg.output.dir.join("egrid.csv"), &grid)?;
    let (de, err) = pshlab_core::variation::laplacian_e_extrapolated(&grid).map_err(|e| e.at(Stage::Stencil))?;
    print_json(json!({ "h": h, "energy": grid.center().energy, "delta_e": de, "delta_e_error": err }));
    Ok(exit::PASS)
}

fn certify(cfg: &ScenarioConfig) -> Result<i32, CliError> {
    let (rec, grid) = pshlab::run_scenario(cfg).map_err(|e| keep_partial(cfg, e))?;
    output::write_run(&cfg.output.dir, "certificate", &rec, cfg.output.grid_csv.then_some(&grid))?;
    let c = &rec.certificate;
    print_json(json!({
        "verdict": if rec.passed() { "pass" } else { "fail" },
        "failures": rec.failures(),
        "delta_e": c.delta_e,
        "budget": c.budget,
        "digest": rec.digest(),
    }));
    Ok(if rec.passed() { exit::PASS } else { exit::CERTIFICATE })
}

fn sweep(cfg: &ScenarioConfig, jobs: usize) -> Result<i32, CliError> {
    let records = pshlab::sweep(cfg, jobs)?;
    let dir = &cfg.output.dir;
    output::ensure_dir(dir)?;
    for (k, r) in records.iter().enumerate() {
        output::write_json(&dir.join(format!("direction_{k}.json")), r)?;
    }
    let rows = pshlab::sweep_summary(&records);
    output::write_summary(&dir.join("summary.csv"), &rows)?;
    for r in &rows {
        println!("{:<24} ΔE {:>12.5e}  ε {:>10.3e}  {}", r.direction, r.delta_e, r.budget, r.verdict);
    }
    let failed: Vec<_> = rows.iter().filter(|r| r.verdict != "PASS").map(|r| r.direction.clone()).collect();
    print_json(json!({ "verdict": if failed.is_empty() { "pass" } else { "fail" }, "failures": failed }));
    Ok(if failed.is_empty() { exit::PASS } else { exit::CERTIFICATE })
}

fn validate_mesh(path: &Path) -> Result<i32, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    match parse_mesh(&text) {
        Ok(lm) => {
            print_json(json!({
                "valid": true,
                "vertices": lm.mesh.num_vertices,
                "faces": lm.mesh.num_faces(),
                "genus": lm.mesh.genus,
            }));
            Ok(exit::PASS)
        }
        Err(e) => {
            print_json(json!({ "valid": false, "error": e.to_string() }));
            Ok(exit::CONFIG)
        }
    }
}

fn run(cli: Cli) -> Result<i32, CliError> {
    let cap = pshlab::thread_cap()?;
    if let Some(n) = cap {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot start workers: {e}")))?;
    }
    match cli.command {
        Command::Solve(c) => solve(&c.config()?),
        Command::Stencil(c) => stencil(&c.config()?),
        Command::Certify(c) => certify(&c.config()?),
        Command::Sweep(c) => {
            let jobs = cap.map_or(c.jobs, |n| c.jobs.min(n));
            sweep(&c.config()?, jobs)
        }
        Command::ValidateMesh { file } => validate_mesh(&file),
        Command::PrintConfig(c) => {
            print!("{}", c.config()?.to_toml());
            Ok(exit::PASS)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            let stage = match &e {
                CliError::Run(r) => r.stage().map(|s| s.to_string()),
                _ => None,
            };
            print_json(json!({ "verdict": "error", "stage": stage, "error": e.to_string() }));
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
