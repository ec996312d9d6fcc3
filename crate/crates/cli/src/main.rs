use clap::Parser;
use metaplectic_cli::error::{EXIT_CHECK_FAILED, EXIT_OK};
use metaplectic_cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    let code = match run(&cli) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            if outcome.passed {
                EXIT_OK
            } else {
                EXIT_CHECK_FAILED
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}
