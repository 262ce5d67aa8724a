use clap::Parser;

fn main() {
    let cli = torusdecay::Cli::parse();
    std::process::exit(torusdecay::run(&cli));
}
