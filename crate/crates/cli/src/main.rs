use clap::Parser;

fn main() {
    std::process::exit(selfadj_cli::main_with(selfadj_cli::Cli::parse()));
}
