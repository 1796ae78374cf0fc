use clap::Parser;
use qmemcap::cli::{cmd_dispatch, RunConfig};

fn main() {
    let cfg = RunConfig::parse();
    std::process::exit(cmd_dispatch(&cfg));
}
