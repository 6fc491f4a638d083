//! Standalone QF_LIA solver with a z3-style command line: reads one
//! SMT-LIB2 file argument (or stdin when given `-`), prints `sat`/`unsat`
//! and, when the script asks for it, a `(define-fun ...)` model.

use std::io::Read;
use std::process::ExitCode;

use hlcmon::smtlite;

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let path = match args.iter().find(|a| !a.starts_with('-') || *a == "-") {
        Some(p) => p.clone(),
        None => {
            eprintln!("usage: hlcmon-solver FILE.smt2");
            return ExitCode::from(2);
        }
    };
    let text = if path == "-" {
        let mut buf = String::new();
        if let Err(e) = std::io::stdin().read_to_string(&mut buf) {
            eprintln!("error: reading stdin: {e}");
            return ExitCode::from(2);
        }
        buf
    } else {
        match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("error: reading {path}: {e}");
                return ExitCode::from(2);
            }
        }
    };
    let want_model = text.contains("(get-model)");
    match smtlite::solve_script(&text) {
        Ok(outcome) => {
            print!("{}", smtlite::render_outcome(&outcome, want_model));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
