//! The `qforge` command line: argument parsing, report rendering, run
//! records and the manifest-driven suite runner.

mod commands;
pub mod suite;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Parser;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

pub use suite::{parse_manifest, run_suite, write_records, Step, StepRecord, SuiteResult, Verdict};

pub const EXIT_DECIDED: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Decided,
    Inconclusive,
    Error,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Decided => EXIT_DECIDED,
            Status::Inconclusive => EXIT_INCONCLUSIVE,
            Status::Error => EXIT_ERROR,
        }
    }
}

/// What a command found, in both renderings.
#[derive(Clone, Debug)]
pub struct Report {
    pub status: Status,
    pub text: String,
    pub json: Value,
}

impl Report {
    pub(crate) fn decided(text: impl Into<String>, json: Value) -> Self {
        Report {
            status: Status::Decided,
            text: text.into(),
            json,
        }
    }

    pub(crate) fn inconclusive(text: impl Into<String>, json: Value) -> Self {
        Report {
            status: Status::Inconclusive,
            text: text.into(),
            json,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budgets {
    /// Term depth for clone searches.
    pub depth: usize,
    /// Largest power examined by switchability and collapsibility checks.
    pub m: usize,
    pub jobs: usize,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            depth: qforge_core::clone::CloneBudget::default().depth,
            m: qforge_core::classify::SWITCH_M,
            jobs: 1,
        }
    }
}

impl Budgets {
    /// `depth=5,m=6,jobs=2`; unknown keys are an error.
    pub fn parse_env(text: &str) -> Result<Budgets, String> {
        let mut b = Budgets::default();
        for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| format!("QFORGE_BUDGET: expected key=value, found `{item}`"))?;
            let v: usize = value
                .trim()
                .parse()
                .map_err(|_| format!("QFORGE_BUDGET: `{value}` is not a number"))?;
            match key.trim() {
                "depth" => b.depth = v,
                "m" => b.m = v,
                "jobs" => b.jobs = v.max(1),
                other => return Err(format!("QFORGE_BUDGET: unknown key `{other}`")),
            }
        }
        Ok(b)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputHash {
    pub path: String,
    pub sha256: String,
}

/// One invocation, enough to replay it and compare.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub command: Vec<String>,
    pub inputs: Vec<InputHash>,
    pub status: Status,
    pub exit_code: i32,
    /// The command's JSON report: verdicts together with their witnesses.
    pub report: Value,
    pub budgets: Budgets,
    pub wall_ms: f64,
}

impl RunRecord {
    /// The record with its timing zeroed, for byte comparisons.
    pub fn scrubbed(&self) -> RunRecord {
        RunRecord {
            wall_ms: 0.0,
            ..self.clone()
        }
    }
}

/// Reads input files, remembering their hashes. Relative paths are taken
/// against `base` when one is set.
pub(crate) struct Ctx {
    pub budgets: Budgets,
    pub base: Option<PathBuf>,
    /// QFORGE_BUDGET as given, handed on to suite steps.
    pub env: Option<String>,
    inputs: Vec<InputHash>,
}

impl Ctx {
    pub fn read(&mut self, path: &Path) -> Result<String, String> {
        let full = match &self.base {
            Some(b) if path.is_relative() => b.join(path),
            _ => path.to_path_buf(),
        };
        let bytes = std::fs::read(&full).map_err(|e| format!("{}: {e}", full.display()))?;
        self.inputs.push(InputHash {
            path: path.display().to_string(),
            sha256: hex::encode(Sha256::digest(&bytes)),
        });
        String::from_utf8(bytes).map_err(|_| format!("{}: not UTF-8", full.display()))
    }
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
    pub record: RunRecord,
}

/// Runs one command line (`argv[0]` is the program name). `env_budget` is
/// the value of QFORGE_BUDGET, if set; `base` resolves relative input paths.
pub fn dispatch(argv: &[String], env_budget: Option<&str>, base: Option<&Path>) -> Outcome {
    let start = Instant::now();
    let mut budgets = Budgets::default();
    let mut ctx_inputs = Vec::new();
    let result: Result<Report, (i32, String, String)> = (|| {
        let cli = match commands::Cli::try_parse_from(argv) {
            Ok(c) => c,
            Err(e) => {
                let rendered = e.render().to_string();
                return Err(if e.use_stderr() {
                    (EXIT_ERROR, String::new(), rendered)
                } else {
                    (EXIT_DECIDED, rendered, String::new())
                });
            }
        };
        if let Some(env) = env_budget {
            budgets = Budgets::parse_env(env).map_err(|e| (EXIT_ERROR, String::new(), e))?;
        }
        cli.global.apply(&mut budgets);
        let mut ctx = Ctx {
            budgets,
            base: base.map(Path::to_path_buf),
            env: env_budget.map(str::to_string),
            inputs: Vec::new(),
        };
        let out = commands::run(&cli.command, &mut ctx);
        ctx_inputs = std::mem::take(&mut ctx.inputs);
        let json = cli.global.json;
        out.map(|mut r| {
            if json {
                r.text = serde_json::to_string_pretty(&r.json).expect("serializable") + "\n";
            }
            r
        })
        .map_err(|e| (EXIT_ERROR, String::new(), format!("error: {e}\n")))
    })();
    let (code, stdout, stderr, status, report) = match result {
        Ok(r) => (r.status.exit_code(), r.text, String::new(), r.status, r.json),
        Err((code, out, err)) => {
            let status = if code == EXIT_DECIDED {
                Status::Decided
            } else {
                Status::Error
            };
            let report = serde_json::json!({ "error": err.trim_end() });
            (code, out, err, status, report)
        }
    };
    let record = RunRecord {
        command: argv.iter().skip(1).cloned().collect(),
        inputs: ctx_inputs,
        status,
        exit_code: code,
        report,
        budgets,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    };
    Outcome {
        code,
        stdout,
        stderr,
        record,
    }
}

pub(crate) fn push_line(out: &mut String, line: impl AsRef<str>) {
    let _ = writeln!(out, "{}", line.as_ref());
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn env_budget() {
        let b = Budgets::parse_env(" depth=6, m=3 ,jobs=0").unwrap();
        assert_eq!((b.depth, b.m, b.jobs), (6, 3, 1));
        assert_eq!(Budgets::parse_env("").unwrap(), Budgets::default());
        assert!(Budgets::parse_env("depth").is_err());
        assert!(Budgets::parse_env("depth=x").is_err());
    }

    #[test]
    fn scrub_drops_only_timing() {
        let r = RunRecord {
            command: vec!["bench".into()],
            inputs: vec![],
            status: Status::Decided,
            exit_code: 0,
            report: serde_json::json!({}),
            budgets: Budgets::default(),
            wall_ms: 12.5,
        };
        let s = r.scrubbed();
        assert_eq!(s.wall_ms, 0.0);
        assert_eq!(s.command, r.command);
    }
}
