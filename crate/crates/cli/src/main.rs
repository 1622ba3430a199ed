use clap::Parser;

fn main() {
    let cli = kme_cli::Cli::parse();
    std::process::exit(kme_cli::run(cli));
}
