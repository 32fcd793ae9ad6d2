use std::io;

fn main() {
    let stdout = io::stdout();
    let stderr = io::stderr();
    let code = scorpion_detect::cli::run_cli(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock());
    std::process::exit(code);
}
