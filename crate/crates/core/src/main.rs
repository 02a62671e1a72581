use clap::Parser;

fn main() {
    std::process::exit(ultradiff::cli::run(ultradiff::cli::Cli::parse()));
}
