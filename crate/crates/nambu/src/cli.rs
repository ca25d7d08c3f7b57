//! Command dispatch for the `nambu` binary.
//!
//! Exit codes: `0` success, `2` configuration/parse/usage errors, `3`
//! singular or out-of-domain evaluations, `4` a verification that ran to
//! completion and failed (checks, drift gates, or the top comparison).

use clap::{Parser, Subcommand, ValueEnum};
use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;

use nambu::actionangle::cartesian_to_spherical_aa;
use nambu::config::RunConfig;
use nambu::dynamics::{
    drift_report, integrate, read_states_csv, symmetric_top_analytic, top_precession_frequency,
    write_csv, write_jsonl, IntegratorSpec, Trajectory,
};
use nambu::error::{Error, Result};
use nambu::expr::Expression;
use nambu::field::ScalarField;
use nambu::nambu_bracket;
use nambu::reduction::{angular_momentum_map, hopf_map, MomentumMap};
use nambu::systems::builtin_system;
use nambu::verify::{run_suite, Suite};

#[derive(Parser)]
#[command(
    name = "nambu",
    version,
    about = "Determinant-bracket dynamics: brackets, reductions, flows, verification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the determinant bracket of `dim` fields at a point.
    Bracket(BracketArgs),
    /// Integrate a configured system and gate on invariant drift.
    Simulate(SimulateArgs),
    /// Run seeded randomized structural checks.
    Verify(VerifyArgs),
    /// Solve the free symmetric top two ways and compare.
    Top(TopArgs),
    /// Push phase-space points through a momentum map.
    Reduce(ReduceArgs),
}

#[derive(clap::Args)]
struct BracketArgs {
    /// Built-in system supplying the coordinate space.
    #[arg(long, conflicts_with = "config")]
    system: Option<String>,
    /// Run configuration supplying the coordinate space.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Field expression over the space; repeat once per dimension.
    #[arg(long = "field", required = true)]
    fields: Vec<String>,
    /// Comma-separated coordinates of the evaluation point.
    #[arg(long)]
    point: String,
    /// Expression parameter, as `name=value`; repeatable.
    #[arg(long = "param")]
    params: Vec<String>,
}

#[derive(clap::Args)]
struct SimulateArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Trajectory output path; overrides the configuration's `output`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
}

#[derive(clap::Args)]
struct VerifyArgs {
    /// One of: brackets, reductions, actionangle, all.
    #[arg(long, default_value = "all")]
    suite: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Random draws per check; must be positive.
    #[arg(long, default_value_t = 100)]
    samples: usize,
    /// Also write the report as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct TopArgs {
    /// Initial body angular momentum, comma-separated.
    #[arg(long, default_value = "1,0,1")]
    l0: String,
    /// Transverse moment of inertia.
    #[arg(long, default_value_t = 2.0)]
    i1: f64,
    /// Axial moment of inertia.
    #[arg(long, default_value_t = 1.0)]
    i3: f64,
    #[arg(long, default_value_t = 20.0)]
    t_end: f64,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
}

#[derive(clap::Args)]
struct ReduceArgs {
    #[arg(long, value_enum)]
    map: MapChoice,
    /// Single source point, comma-separated.
    #[arg(long, conflicts_with = "input")]
    point: Option<String>,
    /// CSV of source states (`t,<coordinates>` header, as `simulate` writes).
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
}

#[derive(Clone, Copy, ValueEnum)]
enum MapChoice {
    #[value(alias = "angular_momentum")]
    AngularMomentum,
    Hopf,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Csv,
    Jsonl,
}

/// Parses arguments, runs the command, and returns the process exit code.
pub fn run() -> i32 {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("NAMBU_LOG", "warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Bracket(args) => bracket_cmd(args),
        Command::Simulate(args) => simulate_cmd(args),
        Command::Verify(args) => verify_cmd(args),
        Command::Top(args) => top_cmd(args),
        Command::Reduce(args) => reduce_cmd(args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse { .. }
        | Error::Config(_)
        | Error::Io(_)
        | Error::InvalidArgument(_)
        | Error::Dimension { .. } => 2,
        Error::Singular(_) | Error::Domain(_) | Error::Integration { .. } => 3,
    }
}

fn parse_floats(text: &str, what: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|piece| {
            piece
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidArgument(format!("{what}: `{piece}` is not a number")))
        })
        .collect()
}

fn parse_params(pairs: &[String]) -> Result<BTreeMap<String, f64>> {
    let mut params = BTreeMap::new();
    for pair in pairs {
        let (name, value) = pair.split_once('=').ok_or_else(|| {
            Error::InvalidArgument(format!("parameter `{pair}` is not of the form name=value"))
        })?;
        let value: f64 = value.trim().parse().map_err(|_| {
            Error::InvalidArgument(format!("parameter `{name}`: `{value}` is not a number"))
        })?;
        params.insert(name.trim().to_string(), value);
    }
    Ok(params)
}

fn open_writer(path: &PathBuf) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

// ── bracket ─────────────────────────────────────────────────────────────────

fn bracket_cmd(args: BracketArgs) -> Result<i32> {
    let space = match (&args.system, &args.config) {
        (Some(name), None) => builtin_system(name, &BTreeMap::new())?.space().clone(),
        (None, Some(path)) => RunConfig::from_path(path)?.system.build()?.space().clone(),
        (None, None) => {
            return Err(Error::InvalidArgument(
                "give the coordinate space via --system or --config".to_string(),
            ))
        }
        (Some(_), Some(_)) => unreachable!("clap rejects the combination"),
    };
    let params = parse_params(&args.params)?;
    let fields: Result<Vec<ScalarField>> = args
        .fields
        .iter()
        .map(|src| {
            Ok(ScalarField::from_expression(Expression::parse(
                src, &space, &params,
            )?))
        })
        .collect();
    let fields = fields?;
    if fields.len() != space.dim() {
        return Err(Error::Dimension {
            expected: space.dim(),
            got: fields.len(),
        });
    }
    let point = parse_floats(&args.point, "--point")?;
    let refs: Vec<&ScalarField> = fields.iter().collect();
    let value = nambu_bracket(&refs, &point)?;
    println!("{value:.16e}");
    Ok(0)
}

// ── simulate ────────────────────────────────────────────────────────────────

fn simulate_cmd(args: SimulateArgs) -> Result<i32> {
    let config = RunConfig::from_path(&args.config)?;
    let system = config.system.build()?;
    let spec = config.integrator.to_spec()?;
    let x0 = config.resolve_initial_state(&system)?;
    log::info!(
        "integrating dim-{} system to t = {}",
        system.space().dim(),
        spec.t_end
    );
    let traj = integrate(&system.rhs(), &x0, &spec, system.invariants())?;

    let out = args
        .out
        .clone()
        .or_else(|| config.output.as_ref().map(PathBuf::from));
    if let Some(path) = &out {
        let mut w = open_writer(path)?;
        match args.format {
            OutputFormat::Csv => write_csv(&traj, &mut w)?,
            OutputFormat::Jsonl => write_jsonl(&traj, &mut w)?,
        }
        w.flush().map_err(|e| Error::Io(e.to_string()))?;
        log::info!("trajectory written to {}", path.display());
    }

    println!(
        "steps: {} accepted, {} rejected",
        traj.len().saturating_sub(1),
        traj.rejected_steps
    );
    print!("final state: t = {:.16e};", traj.final_time());
    for (name, value) in traj.coord_names.iter().zip(traj.final_state()) {
        print!(" {name} = {value:.16e};");
    }
    println!();
    let report = drift_report(&traj);
    for inv in &report.invariants {
        println!(
            "invariant {}: initial {:.16e}, max drift {:.3e}, final drift {:.3e}",
            inv.name, inv.initial, inv.max_abs_drift, inv.final_abs_drift
        );
    }
    let worst = report.max_drift();
    if worst > config.drift_tolerance {
        println!(
            "DRIFT EXCEEDED: max {worst:.3e} > tolerance {:.3e}",
            config.drift_tolerance
        );
        return Ok(4);
    }
    println!(
        "drift within tolerance: max {worst:.3e} <= {:.3e}",
        config.drift_tolerance
    );
    Ok(0)
}

// ── verify ──────────────────────────────────────────────────────────────────

fn verify_cmd(args: VerifyArgs) -> Result<i32> {
    let suite = Suite::parse(&args.suite)?;
    let report = run_suite(suite, args.seed, args.samples)?;
    if let Some(path) = &args.out {
        let mut w = open_writer(path)?;
        serde_json::to_writer_pretty(&mut w, &report).map_err(|e| Error::Io(e.to_string()))?;
        w.write_all(b"\n").map_err(|e| Error::Io(e.to_string()))?;
        w.flush().map_err(|e| Error::Io(e.to_string()))?;
    }
    print!("{}", report.render_table());
    Ok(if report.all_pass { 0 } else { 4 })
}

// ── top ─────────────────────────────────────────────────────────────────────

const TOP_TOLERANCE: f64 = 1e-5;

fn top_cmd(args: TopArgs) -> Result<i32> {
    let l0 = parse_floats(&args.l0, "--l0")?;
    if l0.len() != 3 {
        return Err(Error::Dimension {
            expected: 3,
            got: l0.len(),
        });
    }
    let l0 = [l0[0], l0[1], l0[2]];

    let mut params = BTreeMap::new();
    params.insert("I1".to_string(), args.i1);
    params.insert("I3".to_string(), args.i3);
    let system = builtin_system("symmetric_top", &params)?;
    let spec = IntegratorSpec::rk4(args.dt, args.t_end);
    spec.validate()?;
    let traj = integrate(&system.rhs(), &l0, &spec, system.invariants())?;

    let omega = top_precession_frequency(l0[2], args.i1, args.i3);
    println!("precession frequency: {omega:.16e}");

    let mut max_body_dev = 0.0f64;
    for (t, state) in traj.times.iter().zip(&traj.states) {
        let reference = symmetric_top_analytic(&l0, args.i1, args.i3, *t)?;
        for i in 0..3 {
            max_body_dev = max_body_dev.max((state[i] - reference[i]).abs());
        }
    }
    println!("max |numeric - analytic|: {max_body_dev:.3e}");

    let transverse = l0[0].hypot(l0[1]);
    let scale = transverse.max(l0[2].abs());
    if transverse <= 1e-12 * scale.max(1.0) {
        eprintln!(
            "warning: initial momentum lies on the symmetry axis; the chart \
             azimuth is undefined there, so the chart comparison is skipped"
        );
        let pass = max_body_dev < TOP_TOLERANCE;
        println!(
            "{} (tolerance {TOP_TOLERANCE:.1e})",
            if pass { "PASS" } else { "FAIL" }
        );
        return Ok(if pass { 0 } else { 4 });
    }

    let max_phase_dev = chart_phase_deviation(&traj, omega)?;
    println!("max |phi - (phi0 - omega t)|: {max_phase_dev:.3e}");

    let pass = max_body_dev < TOP_TOLERANCE && max_phase_dev < TOP_TOLERANCE;
    println!(
        "{} (tolerance {TOP_TOLERANCE:.1e})",
        if pass { "PASS" } else { "FAIL" }
    );
    Ok(if pass { 0 } else { 4 })
}

/// Charts every trajectory point, unwraps the azimuth, and returns how far
/// it strays from uniform precession `phi0 - omega t`. Also reports the
/// action and tilt drifts, which the chart says must vanish.
fn chart_phase_deviation(traj: &Trajectory, omega: f64) -> Result<f64> {
    let mut action_drift = 0.0f64;
    let mut mu_drift = 0.0f64;
    let mut phase_dev = 0.0f64;
    let mut first = None;
    let mut prev_phi = 0.0f64;
    let mut turns = 0.0f64;
    for (t, state) in traj.times.iter().zip(&traj.states) {
        let aa = cartesian_to_spherical_aa(&[state[0], state[1], state[2]])?;
        let (action0, mu0, phi0) = *first.get_or_insert((aa.action, aa.mu, aa.phi));
        action_drift = action_drift.max((aa.action - action0).abs());
        mu_drift = mu_drift.max((aa.mu - mu0).abs());
        // Unwrap: the azimuth moves by far less than a half turn per step.
        if aa.phi - prev_phi > std::f64::consts::PI {
            turns -= 1.0;
        } else if prev_phi - aa.phi > std::f64::consts::PI {
            turns += 1.0;
        }
        prev_phi = aa.phi;
        let unwrapped = aa.phi + turns * std::f64::consts::TAU;
        phase_dev = phase_dev.max((unwrapped - (phi0 - omega * t)).abs());
    }
    println!("chart action drift: {action_drift:.3e}");
    println!("chart tilt drift: {mu_drift:.3e}");
    Ok(phase_dev)
}

// ── reduce ──────────────────────────────────────────────────────────────────

fn reduce_cmd(args: ReduceArgs) -> Result<i32> {
    let map = match args.map {
        MapChoice::AngularMomentum => angular_momentum_map(),
        MapChoice::Hopf => hopf_map(),
    };
    match (&args.point, &args.input) {
        (Some(point), None) => {
            let z = parse_floats(point, "--point")?;
            let image = map.apply(&z)?;
            for (name, value) in map.target().names().iter().zip(&image) {
                println!("{name} = {value:.16e}");
            }
            Ok(0)
        }
        (None, Some(path)) => {
            let file =
                File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            let (names, rows) = read_states_csv(BufReader::new(file))?;
            let columns = resolve_source_columns(&map, &names)?;
            let mapped: Result<Vec<(f64, Vec<f64>)>> = rows
                .iter()
                .map(|(t, state)| {
                    let z: Vec<f64> = columns.iter().map(|&i| state[i]).collect();
                    Ok((*t, map.apply(&z)?))
                })
                .collect();
            let mapped = mapped?;
            match &args.out {
                Some(path) => {
                    let mut w = open_writer(path)?;
                    write_reduced(&map, &mapped, args.format, &mut w)?;
                    w.flush().map_err(|e| Error::Io(e.to_string()))?;
                }
                None => {
                    let stdout = std::io::stdout();
                    write_reduced(&map, &mapped, args.format, &mut stdout.lock())?;
                }
            }
            Ok(0)
        }
        _ => Err(Error::InvalidArgument(
            "give exactly one of --point or --in".to_string(),
        )),
    }
}

/// Picks the map's source coordinates out of the input columns: by name when
/// every coordinate appears (so `simulate` output with trailing invariant
/// columns feeds straight in), by position when the count matches exactly.
fn resolve_source_columns(map: &MomentumMap, names: &[String]) -> Result<Vec<usize>> {
    let source = map.source().names();
    let by_name: Option<Vec<usize>> = source
        .iter()
        .map(|want| names.iter().position(|have| have == want))
        .collect();
    if let Some(columns) = by_name {
        return Ok(columns);
    }
    if names.len() == source.len() {
        log::warn!(
            "input columns {names:?} differ from the map's source coordinates {source:?}; \
             mapping by position"
        );
        return Ok((0..names.len()).collect());
    }
    Err(Error::InvalidArgument(format!(
        "input columns {names:?} carry neither the source coordinates {source:?} \
         nor exactly {} positional columns",
        source.len()
    )))
}

fn write_reduced<W: Write>(
    map: &MomentumMap,
    rows: &[(f64, Vec<f64>)],
    format: OutputFormat,
    w: &mut W,
) -> Result<()> {
    let io_err = |e: std::io::Error| Error::Io(e.to_string());
    match format {
        OutputFormat::Csv => {
            write!(w, "t").map_err(io_err)?;
            for name in map.target().names() {
                write!(w, ",{name}").map_err(io_err)?;
            }
            writeln!(w).map_err(io_err)?;
            for (t, image) in rows {
                write!(w, "{t:.16e}").map_err(io_err)?;
                for value in image {
                    write!(w, ",{value:.16e}").map_err(io_err)?;
                }
                writeln!(w).map_err(io_err)?;
            }
        }
        OutputFormat::Jsonl => {
            for (t, image) in rows {
                let state = serde_json::json!({ "t": t, "state": image });
                writeln!(w, "{state}").map_err(io_err)?;
            }
        }
    }
    Ok(())
}
