use std::process::ExitCode;

fn main() -> ExitCode {
    let code = match qfn_cli::run_args(std::env::args_os()) {
        Ok(outcome) => {
            let text = serde_json::to_string_pretty(&outcome.report).expect("reports always serialise");
            println!("{text}");
            outcome.code
        }
        Err((text, code)) => {
            if code == 0 {
                print!("{text}");
            } else {
                eprint!("{text}");
            }
            code
        }
    };
    ExitCode::from(code as u8)
}
