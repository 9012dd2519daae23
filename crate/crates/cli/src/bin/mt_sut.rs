//! Serves a built-in SUT (or one of its mutants) over the external SUT
//! protocol on stdin/stdout. Handy for testing external registration.

use std::io::{BufRead, Write};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::Parser;
use mt_core::input::Input;
use mt_core::sut::{Registry, SutOutcome};
use serde_json::{json, Value};

#[derive(Debug, Parser)]
#[command(name = "mt-sut")]
struct Args {
    /// Built-in SUT id.
    sut: String,
    #[arg(long)]
    mutant: Option<String>,
}

fn respond(registry: &Registry, args: &Args, line: &str) -> anyhow::Result<Value> {
    let req: Value = serde_json::from_str(line).context("malformed request")?;
    if req.get("hello").is_some() {
        let sut = registry.get(&args.sut).expect("checked at startup");
        return Ok(json!({"hello": true, "input_kind": sut.input_kind, "output_kind": sut.output_kind}));
    }
    let id = req.get("id").cloned().unwrap_or(Value::Null);
    let input: Input<f64> = match req.get("input").map(|v| serde_json::from_value(v.clone())) {
        Some(Ok(i)) => i,
        _ => return Ok(json!({"id": id, "error": "malformed input"})),
    };
    let target = registry.target(&args.sut, args.mutant.as_deref()).expect("checked at startup");
    Ok(match registry.invoke(target, &input) {
        Ok(SutOutcome::Value(v)) => json!({"id": id, "output": v}),
        Ok(SutOutcome::Failure(reason)) => json!({"id": id, "error": reason}),
        Err(e) => json!({"id": id, "error": e.to_string()}),
    })
}

fn run(args: Args) -> anyhow::Result<()> {
    let registry = Registry::builtin();
    registry
        .target(&args.sut, args.mutant.as_deref())
        .ok_or_else(|| anyhow!("unknown SUT or mutant `{}` {:?}", args.sut, args.mutant))?;
    let stdin = std::io::stdin();
    let mut out = std::io::stdout().lock();
    for line in stdin.lock().lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let reply = respond(&registry, &args, &line)?;
        writeln!(out, "{reply}")?;
        out.flush()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mt-sut: {e:#}");
            ExitCode::from(2)
        }
    }
}
