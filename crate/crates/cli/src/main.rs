//! `krein <scenario> [--param value]... --out DIR [--seed N]`
//!
//! Every run writes its artifacts and a `manifest.json` into `DIR`. Tolerances can be
//! overridden with `KREIN_TOL_<KEY>` environment variables.

mod scenarios;
mod svg;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use krein_core::{Error, Tolerances};
use serde::Serialize;
use serde_json::json;

use scenarios::{to_json, Outcome};

#[derive(Parser, Debug)]
#[command(name = "krein", version, about = "Spectra and Krein matrices of star-even operator pencils")]
struct Cli {
    #[command(subcommand)]
    scenario: Scenario,
}

#[derive(Args, Debug, Serialize)]
#[group(skip)]
struct Common {
    /// Output directory, created if missing
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand, Debug)]
enum Scenario {
    /// Spectrum, index census and Krein curves of a pencil file or a random pencil
    CoreDemo {
        #[command(flatten)]
        args: scenarios::CoreDemo,
        #[command(flatten)]
        common: Common,
    },
    /// Collision curves of the linearisation about the zero state
    Kdv5Dispersion {
        #[command(flatten)]
        args: scenarios::Kdv5Dispersion,
        #[command(flatten)]
        common: Common,
    },
    /// Small-amplitude periodic wave
    Kdv5Wave {
        #[command(flatten)]
        args: scenarios::Kdv5Wave,
        #[command(flatten)]
        common: Common,
    },
    /// Bloch scan of max Re λ over the Floquet exponent
    Kdv5Scan {
        #[command(flatten)]
        args: scenarios::Kdv5Scan,
        #[command(flatten)]
        common: Common,
    },
    /// Krein eigenvalue curves of the Bloch pencil for one or more amplitudes
    Kdv5Krein {
        #[command(flatten)]
        args: scenarios::Kdv5Krein,
        #[command(flatten)]
        common: Common,
    },
    /// Primary pulse of the bridge equation and its A_0 spectrum
    BridgePulse {
        #[command(flatten)]
        args: scenarios::BridgePulse,
        #[command(flatten)]
        common: Common,
    },
    /// Multi-pulses with small A_0 eigenvalues and interaction predictions
    BridgeMultipulse {
        #[command(flatten)]
        args: scenarios::MultipulseArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Quadratic pencil spectrum of multi-pulses with index census
    BridgeSpectrum {
        #[command(flatten)]
        args: scenarios::BridgeSpectrumArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Small-z structure of the multi-pulse Krein matrix
    BridgeKrein {
        #[command(flatten)]
        args: scenarios::BridgeKrein,
        #[command(flatten)]
        common: Common,
    },
}

impl Scenario {
    fn name(&self) -> &'static str {
        match self {
            Scenario::CoreDemo { .. } => "core-demo",
            Scenario::Kdv5Dispersion { .. } => "kdv5-dispersion",
            Scenario::Kdv5Wave { .. } => "kdv5-wave",
            Scenario::Kdv5Scan { .. } => "kdv5-scan",
            Scenario::Kdv5Krein { .. } => "kdv5-krein",
            Scenario::BridgePulse { .. } => "bridge-pulse",
            Scenario::BridgeMultipulse { .. } => "bridge-multipulse",
            Scenario::BridgeSpectrum { .. } => "bridge-spectrum",
            Scenario::BridgeKrein { .. } => "bridge-krein",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Scenario::CoreDemo { common, .. }
            | Scenario::Kdv5Dispersion { common, .. }
            | Scenario::Kdv5Wave { common, .. }
            | Scenario::Kdv5Scan { common, .. }
            | Scenario::Kdv5Krein { common, .. }
            | Scenario::BridgePulse { common, .. }
            | Scenario::BridgeMultipulse { common, .. }
            | Scenario::BridgeSpectrum { common, .. }
            | Scenario::BridgeKrein { common, .. } => common,
        }
    }

    fn parameters(&self) -> serde_json::Value {
        let v = match self {
            Scenario::CoreDemo { args, .. } => serde_json::to_value(args),
            Scenario::Kdv5Dispersion { args, .. } => serde_json::to_value(args),
            Scenario::Kdv5Wave { args, .. } => serde_json::to_value(args),
            Scenario::Kdv5Scan { args, .. } => serde_json::to_value(args),
            Scenario::Kdv5Krein { args, .. } => serde_json::to_value(args),
            Scenario::BridgePulse { args, .. } => serde_json::to_value(args),
            Scenario::BridgeMultipulse { args, .. } => serde_json::to_value(args),
            Scenario::BridgeSpectrum { args, .. } => serde_json::to_value(args),
            Scenario::BridgeKrein { args, .. } => serde_json::to_value(args),
        };
        v.unwrap_or(serde_json::Value::Null)
    }

    fn run(&self, tol: &Tolerances) -> krein_core::Result<Outcome> {
        match self {
            Scenario::CoreDemo { args, common } => scenarios::core_demo(args, common.seed, tol),
            Scenario::Kdv5Dispersion { args, .. } => scenarios::kdv5_dispersion(args, tol),
            Scenario::Kdv5Wave { args, .. } => scenarios::kdv5_wave(args),
            Scenario::Kdv5Scan { args, .. } => scenarios::kdv5_scan(args, tol),
            Scenario::Kdv5Krein { args, .. } => scenarios::kdv5_krein(args, tol),
            Scenario::BridgePulse { args, .. } => scenarios::bridge_pulse(args),
            Scenario::BridgeMultipulse { args, .. } => scenarios::bridge_multipulse(args),
            Scenario::BridgeSpectrum { args, .. } => scenarios::bridge_spectrum(args, tol),
            Scenario::BridgeKrein { args, .. } => scenarios::bridge_krein(args, tol),
        }
    }
}

fn write(dir: &Path, file: &str, contents: &str) -> std::io::Result<()> {
    std::fs::write(dir.join(file), contents)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let scenario = &cli.scenario;
    let common = scenario.common();
    if let Err(e) = std::fs::create_dir_all(&common.out) {
        eprintln!("cannot create {}: {e}", common.out.display());
        return ExitCode::from(2);
    }
    let tol = Tolerances::from_env("KREIN_TOL_");
    let result: Result<(Outcome, Tolerances), Error> = tol.and_then(|tol| scenario.run(&tol).map(|o| (o, tol)));
    let mut manifest = json!({
        "program": "krein",
        "version": env!("CARGO_PKG_VERSION"),
        "scenario": scenario.name(),
        "parameters": scenario.parameters(),
        "seed": common.seed,
    });
    let io = match result {
        Ok((outcome, tol)) => {
            let files: Vec<_> = outcome
                .artifacts
                .iter()
                .map(|a| json!({ "file": a.file, "description": a.description, "bytes": a.contents.len() }))
                .collect();
            manifest["tolerances"] = json!(tol);
            manifest["status"] = json!("ok");
            manifest["artifacts"] = json!(files);
            manifest["summary"] = outcome.summary.clone();
            let mut io = Ok(());
            for a in &outcome.artifacts {
                io = io.and(write(&common.out, &a.file, &a.contents));
            }
            println!("{}", serde_json::to_string_pretty(&outcome.summary).unwrap_or_default());
            io.and(write(&common.out, "manifest.json", &to_json(&manifest))).map(|_| ExitCode::SUCCESS)
        }
        Err(e) => {
            eprintln!("error: {e}");
            manifest["status"] = json!("error");
            manifest["artifacts"] = json!([{ "file": "error.json", "description": "structured solver error" }]);
            write(&common.out, "error.json", &to_json(&json!({ "scenario": scenario.name(), "message": e.to_string(), "error": e })))
                .and(write(&common.out, "manifest.json", &to_json(&manifest)))
                .map(|_| ExitCode::FAILURE)
        }
    };
    io.unwrap_or_else(|e| {
        eprintln!("cannot write to {}: {e}", common.out.display());
        ExitCode::from(2)
    })
}
