use clap::Parser;

use edml_cli::{format_text, run_solve, run_trace_check, Cli, Command};

fn main() {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve { problem } => run_solve(&cli, problem).map(|o| (o, false)),
        Command::Degree { problem } => run_solve(&cli, problem).map(|o| (o, true)),
        Command::TraceCheck { problem, fiber } => {
            run_trace_check(&cli, problem, fiber).map(|o| (o, false))
        }
    };
    match result {
        Ok((outcome, degree_only)) => {
            if cli.json {
                let mut report = outcome.report.clone();
                if degree_only {
                    report.points.clear();
                }
                println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            } else {
                print!("{}", format_text(&outcome, degree_only));
            }
            std::process::exit(outcome.exit_code);
        }
        Err(e) => {
            eprintln!("error: {}", e.message);
            std::process::exit(e.exit_code);
        }
    }
}
