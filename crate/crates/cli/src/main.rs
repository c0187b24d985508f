use clap::Parser;

fn main() {
    let cli = bose_genfun_cli::Cli::parse();
    if let Err(e) = bose_genfun_cli::run(&cli) {
        eprintln!("bose-genfun: {e}");
        std::process::exit(e.exit_code());
    }
}
