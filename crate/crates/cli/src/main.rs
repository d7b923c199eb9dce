use clap::Parser;

fn main() {
    let args = quasidiff_cli::Args::parse();
    std::process::exit(quasidiff_cli::main_with(&args));
}
