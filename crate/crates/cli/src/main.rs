use clap::Parser;

fn main() {
    std::process::exit(formfit_cli::execute(formfit_cli::Cli::parse()));
}
