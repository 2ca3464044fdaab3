use clap::Parser;

fn main() {
    let cli = holonomy::cli::Cli::parse();
    std::process::exit(holonomy::cli::main_with(cli));
}
