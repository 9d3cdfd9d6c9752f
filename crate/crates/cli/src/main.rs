use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use nalgebra::Vector3;

use reflex_core::harness::experiment::{run_planner, ExperimentReport, Planner};
use reflex_core::harness::{load_scenario, run_experiment, ExperimentSpec};
use reflex_core::kinematics::load_robot;
use reflex_core::reachability::{build_link_reach_with_steps, ReachOptions};
use reflex_core::sdf_grid::shapes::{voxelize, Shape, ShapeSpec};
use reflex_core::sdf_grid::{construct_sdf_edt, gradient_field, io};
use reflex_core::Error;

#[derive(Parser)]
#[command(name = "reflex", version, about = "Reactive manipulator planning on chained local distance fields")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one episode of a scenario.
    Run(RunArgs),
    /// Run a batch experiment described by a JSON spec.
    Bench {
        #[arg(long)]
        spec: PathBuf,
        /// Overrides the spec's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build or query signed-distance grids.
    #[command(subcommand)]
    Sdf(SdfCommand),
    /// Build link reachability grids.
    #[command(subcommand)]
    Reach(ReachCommand),
    /// Serve a scenario over WebSocket.
    Serve {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, default_value = "reflex")]
    planner: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum SdfCommand {
    Build {
        /// Shape description (JSON).
        #[arg(long)]
        shape: PathBuf,
        #[arg(long)]
        res: f64,
        #[arg(long, default_value_t = 0.1)]
        padding: f64,
        /// Also store the gradient field.
        #[arg(long)]
        gradients: bool,
        #[arg(long)]
        out: PathBuf,
    },
    Query {
        #[arg(long)]
        grid: PathBuf,
        /// Point as `x,y,z`.
        #[arg(long, allow_hyphen_values = true)]
        point: String,
    },
}

#[derive(Subcommand)]
enum ReachCommand {
    Build {
        #[arg(long)]
        robot: PathBuf,
        /// 1-based link index.
        #[arg(long)]
        link: usize,
        #[arg(long, default_value_t = 0.04)]
        res: f64,
        /// Samples per joint; defaults to the sweep budget.
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Failures mapped to exit codes.
enum Failure {
    Scenario(anyhow::Error),
    Planner(anyhow::Error),
    Other(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        match e.downcast_ref::<Error>() {
            Some(Error::Scenario(_) | Error::Parse(_) | Error::Json(_) | Error::Io { .. }) => Failure::Scenario(e),
            Some(_) => Failure::Planner(e),
            None => Failure::Other(e),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        anyhow::Error::from(e).into()
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match dispatch(Cli::parse().command) {
        Ok(code) => code,
        Err(Failure::Scenario(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Planner(e)) => {
            eprintln!("planner failure: {e:#}");
            ExitCode::from(3)
        }
        Err(Failure::Other(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cmd: Command) -> Result<ExitCode, Failure> {
    match cmd {
        Command::Run(args) => run(args),
        Command::Bench { spec, out } => {
            let mut spec = ExperimentSpec::load(&spec)?;
            if out.is_some() {
                spec.output = out;
            }
            let report = run_experiment(&spec)?;
            print!("{}", report.table());
            Ok(ExitCode::SUCCESS)
        }
        Command::Sdf(SdfCommand::Build {
            shape,
            res,
            padding,
            gradients,
            out,
        }) => {
            let text = std::fs::read_to_string(&shape).with_context(|| shape.display().to_string())?;
            let spec: ShapeSpec = serde_json::from_str(&text).map_err(|e| Error::Scenario(format!("shape: {e}")))?;
            let shape = Shape::resolve(&spec, shape.parent().unwrap_or(Path::new(".")))?;
            let grid = shape.grid_spec(res, padding)?;
            let sdf = construct_sdf_edt(&voxelize(&shape, &grid))?;
            let grad = if gradients { Some(gradient_field(&sdf)?) } else { None };
            io::save(&out, &sdf, grad.as_ref())?;
            println!("wrote {} ({:?} voxels at {res} m)", out.display(), sdf.spec.dims);
            Ok(ExitCode::SUCCESS)
        }
        Command::Sdf(SdfCommand::Query { grid, point }) => {
            let p = parse_point(&point)?;
            let (sdf, grad) = io::load(&grid)?;
            print!("{}", sdf.query(&p));
            if let Some(g) = grad {
                let v = g.query(&p);
                print!(" {} {} {}", v.x, v.y, v.z);
            }
            println!();
            Ok(ExitCode::SUCCESS)
        }
        Command::Reach(ReachCommand::Build {
            robot,
            link,
            res,
            steps,
            out,
        }) => {
            let model = load_robot(&robot)?;
            if link == 0 || link > model.dof() {
                return Err(anyhow!(Error::Scenario(format!("link must be in 1..={}", model.dof()))).into());
            }
            let opts = ReachOptions {
                resolution: res,
                ..ReachOptions::default()
            };
            let lattice = match steps {
                Some(n) => vec![n.max(2); link],
                None => reflex_core::reachability::default_joint_steps(&model, link, &opts),
            };
            let reach = build_link_reach_with_steps(&model, link, &opts, &lattice)?;
            io::save(&out, &reach.sdf, None)?;
            println!(
                "wrote {} ({:?} voxels, sampling slack {:.4} m)",
                out.display(),
                reach.sdf.spec.dims,
                reach.sampling_slack
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Serve { scenario, port } => serve(&scenario, port),
    }
}

fn run(args: RunArgs) -> Result<ExitCode, Failure> {
    let planner: Planner = args.planner.parse()?;
    let sc = load_scenario(&args.scenario)?;
    let time_limit = sc.file.rrt.max_time;
    let ep = run_planner(&sc, planner, args.seed, time_limit)?;
    let r = &ep.result;
    println!(
        "{} seed {}: {} ({}), err {:.4} m / {:.4} rad, joint path {:.4}, ee path {:.4} m, min clearance {:.4} m, {:.2} ms",
        planner.name(),
        r.seed,
        if r.success { "success" } else { "failure" },
        r.outcome,
        r.final_err_pos,
        r.final_err_rot,
        r.joint_path_length,
        r.ee_path_length,
        r.min_clearance,
        ep.timing.solve_time * 1e3
    );
    if let Some(dir) = &args.out {
        let report = ExperimentReport::from_episodes(args.scenario.display().to_string(), vec![ep.clone()]);
        report.write(dir)?;
    }
    if r.success {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(3))
    }
}

fn serve(scenario: &Path, port: u16) -> Result<ExitCode, Failure> {
    let sc = load_scenario(scenario)?;
    let rt = tokio::runtime::Runtime::new().context("tokio runtime")?;
    rt.block_on(reflex_live::serve(sc, ([0, 0, 0, 0], port).into()))
        .context("live server")?;
    Ok(ExitCode::SUCCESS)
}

fn parse_point(s: &str) -> anyhow::Result<Vector3<f64>> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| Error::Scenario(format!("point `{s}`: {e}")))?;
    match v[..] {
        [x, y, z] => Ok(Vector3::new(x, y, z)),
        _ => Err(Error::Scenario(format!("point `{s}` needs three components")).into()),
    }
}
