use clap::Parser;

fn main() {
    let cli = hitrun::cli::Cli::parse();
    std::process::exit(hitrun::cli::run(cli));
}
