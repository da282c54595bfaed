use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::{info, warn};

use phononet::analytics::{
    self, connectivity_matrix, position_sweep, single_mode_oracle, single_mode_params,
    single_mode_peak, write_curve_csv, write_matrix_csv, LeakPhases, PairProtocol, Sidecar,
    CLASSICAL_BOUND,
};
use phononet::config::{self, ParamPath};
use phononet::dynamics::simulate;
use phononet::model::{validate, NetworkConfig, ValidatedConfig};
use phononet::rates;
use phononet::units::{mhz, to_mhz};

/// Template used by `connectivity` when no `--config` is given.
const CONNECTIVITY_TEMPLATE: &str = include_str!("../../../configs/fig4a.toml");

#[derive(Parser)]
#[command(name = "phononet", version, about = "Phonon-network state-transfer simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a rate formula: `rates raman --omega-mhz 70 --delta-mhz 100 --gamma-mhz 2`
    Rates {
        /// Quantity name followed by `--key value` pairs
        #[arg(trailing_var_arg = true, allow_hyphen_values = true, required = true)]
        args: Vec<String>,
    },
    /// Integrate one scenario
    Simulate {
        config: PathBuf,
        #[command(flatten)]
        out: Output,
    },
    /// Run a scenario once per value of one numeric parameter
    Sweep(SweepArgs),
    /// Pairwise transfer fidelities of equally spaced centres
    Connectivity(ConnectivityArgs),
    /// Closed-form references
    #[command(subcommand)]
    Oracle(OracleCommand),
}

#[derive(Args)]
struct Output {
    /// CSV output; a `.meta.toml` sidecar is written next to it
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    config: PathBuf,
    /// Dotted parameter path, e.g. `nodes.r.position`
    #[arg(long)]
    param: String,
    #[arg(long, allow_hyphen_values = true)]
    from: f64,
    #[arg(long, allow_hyphen_values = true)]
    to: f64,
    /// Number of points, end points included; 0 gives an empty curve
    #[arg(long)]
    steps: usize,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct ConnectivityArgs {
    /// Template scenario; its first node is the prototype of every centre
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 49)]
    nodes: usize,
    #[arg(long, default_value_t = 10.0)]
    spacing_um: f64,
    /// Position of the first centre [default: half the spacing]
    #[arg(long)]
    offset_um: Option<f64>,
    /// Waveguide length [default: from the template]
    #[arg(long)]
    length_um: Option<f64>,
    /// Reflectivity of every branch [default: from the template]
    #[arg(long)]
    r: Option<f64>,
    /// Protocol time in units of 1/γ_max [default: from the template]
    #[arg(long)]
    tmax: Option<f64>,
    #[arg(long, default_value_t = 0.25)]
    gamma_max_mhz: f64,
    /// Emitter ramp time in units of 1/γ_max
    #[arg(long, default_value_t = 1.0)]
    tp: f64,
    #[command(flatten)]
    out: Output,
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Single-mode solution matching a two-node scenario
    SingleMode {
        config: PathBuf,
        /// End of the evaluation window [default: the scenario's t_max]
        #[arg(long)]
        tmax_us: Option<f64>,
        #[arg(long, default_value_t = 2000)]
        samples: usize,
        /// Also integrate the scenario and report the difference
        #[arg(long)]
        compare: bool,
        #[command(flatten)]
        out: Output,
    },
    /// Detuned-cavity fidelity estimates
    Estimate {
        #[arg(long)]
        r: f64,
        /// Dephasing time; omit for none
        #[arg(long)]
        t2_us: Option<f64>,
        #[arg(long, default_value_t = 0.25)]
        gamma_max_mhz: f64,
    },
    /// Longitudinal leak for displaced centres
    Leak {
        #[arg(long)]
        kt: f64,
        #[arg(long)]
        kl: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        dxe_nm: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        dxr_nm: f64,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Rates { args } => {
            let bundle = rates::query::run(&args)?;
            print!("{bundle}");
            Ok(())
        }
        Command::Simulate { config, out } => cmd_simulate(&config, out.output.as_deref()),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Connectivity(a) => cmd_connectivity(&a),
        Command::Oracle(o) => cmd_oracle(o),
    }
}

fn load(path: &Path) -> Result<(String, ValidatedConfig)> {
    let (text, cfg) =
        config::load_path(path).with_context(|| format!("loading {}", path.display()))?;
    let cfg = validate(&cfg).with_context(|| format!("validating {}", path.display()))?;
    for w in cfg.warnings() {
        warn!("{w}");
    }
    Ok((text, cfg))
}

/// Writes `body` to `path` and its sidecar next to it.
fn write_artifact(
    path: &Path,
    sidecar: &Sidecar,
    body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    body(&mut w).and_then(|_| w.flush()).with_context(|| format!("writing {}", path.display()))?;
    let meta = Sidecar::path_for(path);
    std::fs::write(&meta, sidecar.to_toml()).with_context(|| format!("writing {}", meta.display()))?;
    info!("wrote {} and {}", path.display(), meta.display());
    Ok(())
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

fn cmd_simulate(path: &Path, output: Option<&Path>) -> Result<()> {
    let (text, cfg) = load(path)?;
    let start = Instant::now();
    let traj = simulate(&cfg);
    let s = &traj.summary;
    let per_rate = cfg.config().gamma_max().map(|g| s.norm_residual / (s.t_final * g));
    println!(
        "F_peak = {:.6} at t_peak = {:.6} us; F_final = {:.6}; norm residual = {:.3e}{}",
        s.f_peak,
        s.t_peak,
        s.f_final,
        s.norm_residual,
        per_rate.map_or(String::new(), |r| format!(" ({r:.3e} per 1/gamma_max)")),
    );
    println!(
        "emitted = {:.6}; lost = {:.6}; back-reflected = {:.3e}; leaked = {:.3e}; {} steps of {:.4e} us in {:.2?}",
        s.emitted,
        s.lost,
        s.back_reflection,
        s.leak,
        traj.steps,
        traj.dt,
        start.elapsed()
    );
    if let Some(out) = output {
        let sidecar = Sidecar::new("trajectory", "t_us", "amplitudes")
            .param("command", "simulate")
            .param("config", path_str(path))
            .scenario(text);
        write_artifact(out, &sidecar, |w| traj.write_csv(w))?;
    }
    Ok(())
}

/// `n` evenly spaced values from `from` to `to`, both included.
fn linspace(from: f64, to: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![from],
        _ => (0..n)
            .map(|i| from + (to - from) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

fn cmd_sweep(a: &SweepArgs) -> Result<()> {
    let text = std::fs::read_to_string(&a.config)
        .with_context(|| format!("reading {}", a.config.display()))?;
    let doc = config::parse_document(&text).with_context(|| format!("parsing {}", a.config.display()))?;
    let param = ParamPath::parse(&a.param)?;
    let key = param.resolve(&doc)?.join(".");
    let values = linspace(a.from, a.to, a.steps);
    let start = Instant::now();
    let points = position_sweep(&doc, &param, &values)?;
    let above = points.iter().filter(|p| p.f_peak > CLASSICAL_BOUND).count();
    println!(
        "{} points of {key} in {:.2?}; {above} above F = 2/3",
        points.len(),
        start.elapsed()
    );
    if let Some(best) = points.iter().max_by(|x, y| x.f_peak.total_cmp(&y.f_peak)) {
        let worst = points.iter().min_by(|x, y| x.f_peak.total_cmp(&y.f_peak)).unwrap();
        println!(
            "best F_peak = {:.6} at {}; worst F_peak = {:.6} at {}",
            best.f_peak, best.value, worst.f_peak, worst.value
        );
    }
    if let Some(out) = a.out.output.as_deref() {
        let sidecar = Sidecar::new("sweep", &key, "f_peak")
            .param("command", "sweep")
            .param("config", path_str(&a.config))
            .param("param", key.clone())
            .param("from", a.from)
            .param("to", a.to)
            .param("steps", a.steps as i64)
            .scenario(text);
        write_artifact(out, &sidecar, |w| write_curve_csv(w, &key, &points))?;
    }
    Ok(())
}

fn connectivity_base(a: &ConnectivityArgs) -> Result<(String, NetworkConfig, Vec<f64>)> {
    let text = match &a.config {
        Some(p) => std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
        None => CONNECTIVITY_TEMPLATE.to_string(),
    };
    let mut base = config::from_str(&text).context("parsing connectivity template")?;
    if base.nodes.is_empty() {
        bail!("connectivity template needs one node as the prototype");
    }
    if a.nodes < 2 {
        bail!("--nodes must be at least 2 (got {})", a.nodes);
    }
    if !(a.spacing_um > 0.0) {
        bail!("--spacing-um must be positive (got {})", a.spacing_um);
    }
    if !(a.gamma_max_mhz > 0.0) {
        bail!("--gamma-max-mhz must be positive (got {})", a.gamma_max_mhz);
    }
    if let Some(l) = a.length_um {
        base.length = l;
    }
    if let Some(r) = a.r {
        for b in &mut base.branches {
            b.reflectivity = r;
        }
    }
    if let Some(t) = a.tmax {
        base.t_max = t / mhz(a.gamma_max_mhz);
    }
    let offset = a.offset_um.unwrap_or(a.spacing_um / 2.0);
    let positions: Vec<f64> = (0..a.nodes).map(|i| offset + i as f64 * a.spacing_um).collect();
    let last = positions[positions.len() - 1];
    if offset <= 0.0 || last >= base.length {
        bail!(
            "centres from {offset} um to {last} um do not fit inside a {} um waveguide",
            base.length
        );
    }
    Ok((text, base, positions))
}

fn cmd_connectivity(a: &ConnectivityArgs) -> Result<()> {
    let (text, base, positions) = connectivity_base(a)?;
    let gamma_max = mhz(a.gamma_max_mhz);
    let protocol = PairProtocol::dark_state(gamma_max, a.tp / gamma_max);
    let prototype = base.nodes[0].clone();
    let start = Instant::now();
    let m = connectivity_matrix(&base, &prototype, &positions, &protocol)?;
    let mut v: Vec<f64> = m.off_diagonal().collect();
    v.sort_by(f64::total_cmp);
    println!(
        "{n}x{n} matrix ({}) in {:.2?}; {:.1}% of pairs above F = 2/3",
        protocol.describe(),
        start.elapsed(),
        100.0 * m.fraction_above(CLASSICAL_BOUND),
        n = m.size,
    );
    println!(
        "F_peak min = {:.6}; median = {:.6}; max = {:.6}",
        v[0],
        v[v.len() / 2],
        v[v.len() - 1]
    );
    if let Some(out) = a.out.output.as_deref() {
        let sidecar = Sidecar::new("connectivity", "receiver", "emitter")
            .param("command", "connectivity")
            .param("config", a.config.as_deref().map_or("built-in".into(), path_str))
            .param("nodes", a.nodes as i64)
            .param("spacing_um", a.spacing_um)
            .param("positions_um", positions.clone())
            .param("length_um", base.length)
            .param("reflectivity", m.reflectivity.clone())
            .param("t_max_us", m.t_max)
            .param("gamma_max_mhz", a.gamma_max_mhz)
            .param("t_p_gamma_max", a.tp)
            .param("protocol", m.protocol.clone())
            .scenario(text);
        write_artifact(out, &sidecar, |w| write_matrix_csv(w, &m))?;
    }
    Ok(())
}

fn cmd_oracle(command: OracleCommand) -> Result<()> {
    match command {
        OracleCommand::SingleMode {
            config,
            tmax_us,
            samples,
            compare,
            out,
        } => {
            let (text, cfg) = load(&config)?;
            let p = single_mode_params(cfg.config())?;
            let t_max = tmax_us.unwrap_or(cfg.config().t_max);
            if samples == 0 {
                bail!("--samples must be positive");
            }
            let (peak, t_peak) = single_mode_peak(&p, t_max, samples);
            println!(
                "g/2pi = {:.6} MHz; delta/2pi = {:.6} MHz; kappa/2pi = {:.6} MHz; mode spacing/2pi = {:.6} MHz",
                to_mhz(p.g),
                to_mhz(p.delta),
                to_mhz(p.kappa),
                to_mhz(p.spacing)
            );
            println!(
                "oracle F_peak = {peak:.6} at t = {t_peak:.6} us; resonant estimate {:.6} at T_g = {:.6} us",
                analytics::resonant_fidelity_estimate(p.g, p.kappa),
                analytics::resonant_transfer_time(p.g)
            );
            if compare {
                let s = simulate(&cfg).summary;
                println!(
                    "simulated F_peak = {:.6} at t = {:.6} us; difference {:+.4}",
                    s.f_peak,
                    s.t_peak,
                    s.f_peak - peak
                );
            }
            if let Some(path) = out.output.as_deref() {
                let sidecar = Sidecar::new("single_mode", "t_us", "population")
                    .param("command", "oracle single-mode")
                    .param("config", path_str(&config))
                    .param("t_max_us", t_max)
                    .param("samples", samples as i64)
                    .scenario(text);
                write_artifact(path, &sidecar, |w| {
                    writeln!(w, "t_us,pop_e,pop_r,pop_p")?;
                    for i in 0..=samples {
                        let t = t_max * i as f64 / samples as f64;
                        let a = single_mode_oracle(p.g, p.delta, p.kappa, t);
                        writeln!(
                            w,
                            "{t},{},{},{}",
                            a.c_e.norm_sqr(),
                            a.c_r.norm_sqr(),
                            a.c_p.norm_sqr()
                        )?;
                    }
                    Ok(())
                })?;
            }
        }
        OracleCommand::Estimate {
            r,
            t2_us,
            gamma_max_mhz,
        } => {
            let t2 = t2_us.unwrap_or(f64::INFINITY);
            let f = analytics::fidelity_scaling(r, mhz(gamma_max_mhz), t2)?;
            println!("F = {f:.6} (R = {r}, T2* = {t2} us, gamma_max/2pi = {gamma_max_mhz} MHz)");
        }
        OracleCommand::Leak { kt, kl, dxe_nm, dxr_nm } => {
            let (dxe, dxr) = (dxe_nm * 1e-3, dxr_nm * 1e-3);
            let full = analytics::multimode_leak(&LeakPhases::displaced(kt, kl, dxe, dxr))?;
            println!("r_l = {full:.6e}");
            println!(
                "small-displacement forms: {:.6e} (stated), {:.6e} (leading order)",
                analytics::leak_small_displacement(kt, kl, dxe, dxr),
                analytics::leak_leading_order(kt, kl, dxe, dxr)
            );
        }
    }
    Ok(())
}
