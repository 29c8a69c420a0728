use std::process::ExitCode;

use clap::Parser;
use efce_cli::{run, Cli};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let flags = cli.command.flags();
    if flags.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(flags.threads).build_global() {
            log::error!("{e}");
            return ExitCode::FAILURE;
        }
    }
    let config = match flags.resolve() {
        Ok(c) => c,
        Err(e) => {
            log::error!("{e}");
            return ExitCode::from(2);
        }
    };
    let mode = cli.command.mode();
    let mut stdout = std::io::stdout().lock();
    match run(&config, mode, &mut stdout) {
        Ok(report) => {
            if mode == efce_cli::Mode::Solve {
                for s in &report.seeds {
                    log::info!(
                        "seed {}: payoffs {:?}, r* {:.3e}{}",
                        s.seed,
                        s.expected_utilities,
                        s.r_star,
                        s.oracle_max_regret.map_or(String::new(), |r| format!(", exact regret {r:.3e}"))
                    );
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            log::error!("{e}");
            ExitCode::FAILURE
        }
    }
}
