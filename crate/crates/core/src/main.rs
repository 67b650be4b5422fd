use clap::Parser;

fn main() {
    std::process::exit(aggobs::cli::main_with(aggobs::cli::Cli::parse()));
}
