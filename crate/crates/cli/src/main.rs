//! Command-line front end. Failures print one machine-parsable line,
//! `error<TAB>code=N<TAB>kind=K<TAB>message=M`, to stderr.

mod args;
mod commands;
mod manifest;

use std::process::ExitCode;

use clap::Parser;
use gwas_select::Error;

use args::{Cli, Command};

const EXIT_USAGE: u8 = 2;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Argument(_) => EXIT_USAGE,
        Error::Io { .. } => 3,
        Error::Format(_) | Error::Size { .. } => 4,
        Error::Validation(_)
        | Error::RankDeficient { .. }
        | Error::DegenerateResponse(_)
        | Error::UndefinedStatistic { .. } => 5,
        Error::Infeasible(_) => 6,
        Error::EmptyResult(_) => 7,
    }
}

fn report(code: u8, kind: &str, message: &str) {
    let message = message.replace(['\t', '\n'], " ");
    eprintln!("error\tcode={code}\tkind={kind}\tmessage={message}");
}

fn threads(cmd: &Command) -> usize {
    match cmd {
        Command::Qc(a) => a.common.threads,
        Command::Assoc(a) => a.common.threads,
        Command::Select(a) => a.common.threads,
        Command::SimulateNull(a) => a.common.threads,
        Command::SimulateTrait(a) => a.common.threads,
        Command::Evaluate(a) => a.common.threads,
        Command::Bench(a) => a.common.threads,
        Command::Synth(a) => a.common.threads,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if !e.use_stderr() {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let _ = e.print();
            report(EXIT_USAGE, "usage", &e.kind().to_string());
            return ExitCode::from(EXIT_USAGE);
        }
    };
    if let Err(e) = rayon::ThreadPoolBuilder::new()
        .num_threads(threads(&cli.command))
        .build_global()
    {
        report(EXIT_USAGE, "argument", &e.to_string());
        return ExitCode::from(EXIT_USAGE);
    }
    let result = match &cli.command {
        Command::Qc(a) => commands::qc(a),
        Command::Assoc(a) => commands::assoc(a),
        Command::Select(a) => commands::select(a),
        Command::SimulateNull(a) => commands::simulate_null(a),
        Command::SimulateTrait(a) => commands::simulate_trait(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Bench(a) => commands::bench(a),
        Command::Synth(a) => commands::synth(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = exit_code(&e);
            report(code, e.kind(), &e.to_string());
            ExitCode::from(code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_by_error_kind() {
        let io = Error::Io {
            path: "x".into(),
            source: std::io::Error::other("boom"),
        };
        assert_eq!(exit_code(&io), 3);
        assert_eq!(exit_code(&Error::Format("f".into())), 4);
        assert_eq!(exit_code(&Error::Infeasible("i".into())), 6);
        assert_eq!(exit_code(&Error::EmptyResult("e".into())), 7);
        assert_eq!(exit_code(&Error::Argument("a".into())), EXIT_USAGE);
    }
}
