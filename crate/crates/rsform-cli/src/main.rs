use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use rsform_cli::{parse_document, report, run_command, Backend, Command, Options};

#[derive(Parser)]
#[command(name = "rsform", version, about = "Formal reduction and parabolic curves of tangent-to-identity germs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Input document.
    #[arg(global = true)]
    document: Option<PathBuf>,
    /// Truncation order, overriding the document header.
    #[arg(long, global = true)]
    order: Option<u32>,
    /// Coefficient backend, overriding the document header.
    #[arg(long, global = true, value_enum)]
    backend: Option<BackendArg>,
    /// Picard stopping tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Contact parameter of the curve space.
    #[arg(long, global = true)]
    m: Option<u32>,
    /// Sector opening.
    #[arg(long, global = true)]
    eta: Option<f64>,
    /// Sector radius.
    #[arg(long, global = true)]
    delta: Option<f64>,
    /// Attracting direction, as an angle in the reduced coordinates.
    #[arg(long, global = true)]
    tau: Option<f64>,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for randomized samples.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Object to use when the document has several.
    #[arg(long, global = true)]
    object: Option<String>,
    /// Curve to use when the document has several.
    #[arg(long, global = true)]
    curve: Option<String>,
    /// Highest order for the asymptotic check.
    #[arg(long, global = true)]
    orders: Option<u32>,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Exact,
    Float,
}

#[derive(Subcommand)]
enum Cmd {
    /// Infinitesimal generator of the map.
    Log,
    /// Time-one map of the field.
    Exp,
    /// Inverse of the map.
    Invert,
    /// Invariance of the curve under the map or field.
    Invariance,
    /// Blow-up along a center through the curve.
    Blowup {
        /// Center variables, e.g. `0,1`; defaults to the origin.
        #[arg(long, value_delimiter = ',')]
        center: Option<Vec<usize>>,
    },
    /// Ramification `z_var = z̃_var^q`.
    Ramify {
        #[arg(long)]
        q: Option<u32>,
        #[arg(long)]
        var: Option<usize>,
    },
    /// Reduction of a linear system to principal form.
    Turrittin,
    /// Reduction of the map along the curve.
    Reduce,
    /// Saddle domain, attracting directions and placement.
    Analyze,
    /// Numerical parabolic curve.
    Construct,
    /// Replays a saved report against the document.
    Verify {
        /// Report written by `reduce`, `turrittin` or `construct`.
        #[arg(long)]
        cert: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut opts = Options {
        tol: cli.tol,
        m: cli.m,
        eta: cli.eta,
        delta: cli.delta,
        tau: cli.tau,
        seed: cli.seed,
        object: cli.object.clone(),
        curve: cli.curve.clone(),
        orders: cli.orders,
        ..Options::default()
    };
    let cmd = match &cli.cmd {
        Cmd::Log => Command::Log,
        Cmd::Exp => Command::Exp,
        Cmd::Invert => Command::Invert,
        Cmd::Invariance => Command::Invariance,
        Cmd::Blowup { center } => {
            opts.center = center.clone();
            Command::Blowup
        }
        Cmd::Ramify { q, var } => {
            opts.q = *q;
            opts.var = *var;
            Command::Ramify
        }
        Cmd::Turrittin => Command::Turrittin,
        Cmd::Reduce => Command::Reduce,
        Cmd::Analyze => Command::Analyze,
        Cmd::Construct => Command::Construct,
        Cmd::Verify { .. } => Command::Verify,
    };
    let Some(path) = cli.document.clone() else {
        eprintln!("error: an input document is required");
        return ExitCode::from(2);
    };
    let text = match std::fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            return ExitCode::from(2);
        }
    };
    let mut doc = match parse_document(&text, cli.order) {
        Ok(d) => d,
        Err(e) => {
            eprintln!("{}:{e}", path.display());
            return ExitCode::from(2);
        }
    };
    if let Some(b) = cli.backend {
        doc.backend = match b {
            BackendArg::Exact => Backend::Exact,
            BackendArg::Float => Backend::Float,
        };
    }
    if let Cmd::Verify { cert } = &cli.cmd {
        let saved = std::fs::read_to_string(cert)
            .map_err(|e| e.to_string())
            .and_then(|t| serde_json::from_str(&t).map_err(|e| e.to_string()));
        match saved {
            Ok(v) => opts.saved = Some(v),
            Err(e) => {
                eprintln!("error: cannot load {}: {e}", cert.display());
                return ExitCode::from(2);
            }
        }
    }
    let start = Instant::now();
    let result = run_command(cmd, &doc, &opts);
    eprintln!("{}: {:.3} s", cmd.name(), start.elapsed().as_secs_f64());
    let label = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let rep = report(cmd, &label, &doc, &opts, &result);
    let text = serde_json::to_string_pretty(&rep).expect("reports serialize") + "\n";
    match &cli.out {
        Some(p) => {
            if let Err(e) = std::fs::write(p, &text) {
                eprintln!("error: cannot write {}: {e}", p.display());
                return ExitCode::from(2);
            }
        }
        None => print!("{text}"),
    }
    match result {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error [{}]: {e}", e.code());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
