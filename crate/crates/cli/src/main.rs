//! `slh`: batch front-end for the Sturm-Liouville hierarchy workbench.
//!
//! Exit status: 0 success, 1 checks ran but failed, 2 configuration error,
//! 3 domain error, 4 numerical failure or a failed acceptance run.

mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;
use slh_core::{Error, ErrorClass};

use args::{Cli, Format};

fn exit_code(e: &Error) -> u8 {
    match e.class() {
        ErrorClass::Config => 2,
        ErrorClass::Domain => 3,
        ErrorClass::Numerical => 4,
    }
}

fn fail(cli: &Cli, e: &Error) -> ExitCode {
    if cli.format == Format::Json {
        let v = serde_json::json!({ "error": { "message": e.to_string(), "class": format!("{:?}", e.class()), "detail": format!("{e:?}") } });
        println!("{}", output::render_json(&v));
    }
    eprintln!("error: {e}");
    ExitCode::from(exit_code(e))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    let out = match commands::run(&cli.command) {
        Ok(o) => o,
        Err(e) => return fail(&cli, &e),
    };
    let doc = match output::render(&cli, &out) {
        Ok(d) => d,
        Err(e) => return fail(&cli, &e),
    };
    match &cli.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &doc) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return ExitCode::from(2);
            }
            if let Some(gp) = &cli.emit_gnuplot {
                let Some(csv) = &out.csv else {
                    return fail(&cli, &Error::UnsupportedFormat("gnuplot needs a CSV-producing command".into()));
                };
                let script = output::gnuplot_script(&path.display().to_string(), csv);
                if let Err(e) = std::fs::write(gp, script) {
                    eprintln!("error: cannot write {}: {e}", gp.display());
                    return ExitCode::from(2);
                }
            }
        }
        None => print!("{doc}"),
    }
    if out.failed {
        ExitCode::from(out.fail_code.unwrap_or(1))
    } else {
        ExitCode::SUCCESS
    }
}
