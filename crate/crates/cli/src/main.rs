use std::process::ExitCode;

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let result = rnm_cli::run(&argv);
    if !result.payload.is_empty() {
        println!("{}", result.payload);
    }
    for line in &result.diagnostics {
        eprintln!("{line}");
    }
    ExitCode::from(result.exit_code.clamp(0, 255) as u8)
}
