use clap::Parser;

fn main() {
    let cli = isacqcd::Cli::parse();
    if let Err(e) = isacqcd::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
