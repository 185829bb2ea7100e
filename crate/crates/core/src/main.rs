use std::process::ExitCode;

fn main() -> ExitCode {
    biased_density::cli::main()
}
