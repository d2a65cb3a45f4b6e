use std::io::Write;

fn main() {
    let argv: Vec<String> = std::env::args().collect();
    let env = std::env::var("QFORGE_BUDGET").ok();
    let out = qforge_cli::dispatch(&argv, env.as_deref(), None);
    print!("{}", out.stdout);
    eprint!("{}", out.stderr);
    let _ = std::io::stdout().flush();
    std::process::exit(out.code);
}
