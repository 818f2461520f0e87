use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use locc_forge::cli::{self, Cli, EXIT_INVALID};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = cli::run(&cli);
    let text = serde_json::to_string_pretty(&out.json).expect("JSON values serialize");

    let mut code = out.exit_code;
    match &cli.common.output {
        Some(path) => {
            if let Err(e) = std::fs::write(path, text + "\n") {
                let err = locc_forge::Error::InvalidInput(format!("{}: {e}", path.display()));
                println!("{}", cli::error_json(&err));
                eprintln!("error: {err}");
                return ExitCode::from(EXIT_INVALID as u8);
            }
            eprintln!("wrote {}", path.display());
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            if writeln!(stdout, "{text}").is_err() {
                code = EXIT_INVALID;
            }
        }
    }
    eprintln!("{}", out.summary);
    ExitCode::from(code as u8)
}
