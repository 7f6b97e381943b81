use clap::Parser;

fn main() {
    let cli = qcloudsim::cli::Cli::parse();
    std::process::exit(qcloudsim::cli::run(cli));
}
