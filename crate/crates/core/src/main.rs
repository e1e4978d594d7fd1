use clap::Parser;

fn main() {
    let cli = torsegeo::cli::Cli::parse();
    std::process::exit(torsegeo::cli::run(cli));
}
