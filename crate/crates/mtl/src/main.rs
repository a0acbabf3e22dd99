use std::path::PathBuf;
use std::process::ExitCode;

use mtl::config::parse_config;
use mtl::driver::{run, CliCommand, RunOptions};

const USAGE: &str = "\
usage: mtl <growth|peripheral|suspend|verify> --config <file> [--out <dir>] [--json] [--dot]

commands:
  growth      classify the growth of every declared element
  peripheral  compute and verify the peripheral structure
  suspend     suspend the peripheral structure in the mapping torus
  verify      re-run the invariant suites on the configured objects

options:
  --config <file>  job configuration (required)
  --out <dir>      directory for report files (required except for verify)
  --json           echo the JSON reports to stdout
  --dot            also write DOT graphs of the peripheral entries
";

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => ExitCode::from(code),
        Err(message) => {
            eprintln!("mtl: {message}");
            ExitCode::from(2)
        }
    }
}

fn real_main() -> Result<u8, String> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.is_empty() || args[0] == "--help" || args[0] == "-h" {
        print!("{USAGE}");
        return Ok(if args.is_empty() { 2 } else { 0 });
    }
    let command = CliCommand::parse(&args[0])
        .ok_or_else(|| format!("unknown command '{}'\n{USAGE}", args[0]))?;

    let mut config_path: Option<PathBuf> = None;
    let mut opts = RunOptions::default();
    let mut i = 1;
    while i < args.len() {
        match args[i].as_str() {
            "--config" => {
                i += 1;
                config_path = Some(PathBuf::from(args.get(i).ok_or("--config needs a path")?));
            }
            "--out" => {
                i += 1;
                opts.out_dir = Some(PathBuf::from(args.get(i).ok_or("--out needs a path")?));
            }
            "--json" => opts.echo_json = true,
            "--dot" => opts.write_dot = true,
            other => return Err(format!("unknown option '{other}'\n{USAGE}")),
        }
        i += 1;
    }
    let config_path = config_path.ok_or(format!("--config is required\n{USAGE}"))?;
    if opts.out_dir.is_none() && command != CliCommand::Verify {
        return Err(format!("--out is required for this command\n{USAGE}"));
    }

    let text = std::fs::read_to_string(&config_path)
        .map_err(|e| format!("cannot read {}: {e}", config_path.display()))?;
    let config = parse_config(&text).map_err(|e| e.to_string())?;

    let outcome = run(command, &config, &opts).map_err(|e| e.to_string())?;
    for line in &outcome.summary {
        println!("{line}");
    }
    for path in &outcome.files {
        println!("wrote {}", path.display());
    }
    if opts.echo_json {
        for (_, content) in &outcome.json {
            print!("{content}");
        }
    }
    Ok(outcome.exit_code as u8)
}
