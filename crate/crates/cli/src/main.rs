use clap::Parser;

fn main() {
    std::process::exit(dipolekit_cli::run(dipolekit_cli::Cli::parse()));
}
