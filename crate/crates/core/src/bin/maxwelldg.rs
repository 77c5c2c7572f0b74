use std::process::ExitCode;

use clap::Parser;
use maxwell_dg::cli::{main_with, Args};

fn main() -> ExitCode {
    main_with(Args::parse())
}
