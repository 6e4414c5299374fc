use clap::error::ErrorKind;
use clap::Parser;
use treesurv::CliError;

fn main() {
    let cli = match treesurv::Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => e.exit(),
        Err(e) => {
            // Keep clap's message but on one line, like every other error.
            let text = e.render().to_string();
            let message = text
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with("For more information"))
                .collect::<Vec<_>>()
                .join(" ");
            let message = message.strip_prefix("error: ").unwrap_or(&message).to_string();
            eprintln!("{}", CliError::Usage(message).to_line());
            std::process::exit(2);
        }
    };
    if let Err(e) = treesurv::run(cli) {
        eprintln!("{}", e.to_line());
        std::process::exit(1);
    }
}
