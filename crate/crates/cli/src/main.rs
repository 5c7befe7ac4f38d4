use clap::Parser;

fn main() {
    let cli = match topicbp_cli::args::Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let failed = e.use_stderr();
            let _ = e.print();
            std::process::exit(if failed { 1 } else { 0 });
        }
    };
    if let Err(e) = topicbp_cli::dispatch(&cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
