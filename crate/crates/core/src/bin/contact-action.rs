use std::process::ExitCode;

use contact_action::cli;

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "--help" || a == "-h") || args.is_empty() {
        println!("{}", cli::USAGE);
        return ExitCode::from(if args.is_empty() { 2 } else { 0 });
    }
    let env_out = std::env::var("CONTACT_ACTION_OUT").ok();
    match cli::run(&args, env_out.as_deref()) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
