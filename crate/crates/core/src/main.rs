use clap::Parser;

fn main() {
    let cli = nlsp::cli::Cli::parse();
    std::process::exit(nlsp::cli::run(cli));
}
