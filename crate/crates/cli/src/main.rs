use clap::Parser;

fn main() {
    let cli = thermodtn_cli::Cli::parse();
    std::process::exit(thermodtn_cli::run(cli));
}
