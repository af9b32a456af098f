use cartan4::cli::{self, Cli};
use clap::Parser;

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // help and version requests are not usage errors
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                std::process::exit(cli::EXIT_OK);
            }
            let _ = e.print();
            std::process::exit(cli::EXIT_USAGE);
        }
    };
    std::process::exit(cli::run(cli));
}
