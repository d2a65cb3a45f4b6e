//! Manifest runner. A manifest is JSON lines of
//! `{"name": ..., "args": [...], "expect": {"status": ..., "fields": {...}}}`;
//! `fields` maps JSON pointers into the step's report to expected values.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::{dispatch, push_line, Ctx, Report, RunRecord, Status};

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Step {
    pub name: String,
    pub args: Vec<String>,
    #[serde(default)]
    pub expect: Expect,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expect {
    /// Defaults to `decided`.
    pub status: Option<Status>,
    #[serde(default)]
    pub fields: BTreeMap<String, Value>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StepRecord {
    pub name: String,
    pub result: Verdict,
    /// Expectations that did not hold.
    pub drift: Vec<String>,
    pub record: RunRecord,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SuiteResult {
    pub result: Verdict,
    pub steps: Vec<StepRecord>,
}

pub fn parse_manifest(text: &str) -> Result<Vec<Step>, String> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| format!("manifest line {}: {e}", i + 1)))
        .collect()
}

fn judge(step: &Step, record: &RunRecord) -> (Verdict, Vec<String>) {
    if record.status == Status::Inconclusive {
        return (Verdict::Inconclusive, Vec::new());
    }
    let mut drift = Vec::new();
    let want = step.expect.status.unwrap_or(Status::Decided);
    if record.status != want {
        drift.push(format!("status {:?}, expected {:?}", record.status, want));
    }
    for (pointer, value) in &step.expect.fields {
        match record.report.pointer(pointer) {
            Some(got) if got == value => {}
            Some(got) => drift.push(format!("{pointer} = {got}, expected {value}")),
            None => drift.push(format!("{pointer} missing, expected {value}")),
        }
    }
    let verdict = if drift.is_empty() { Verdict::Pass } else { Verdict::Fail };
    (verdict, drift)
}

/// Runs every step, up to `jobs` at a time. Relative paths in step arguments
/// are taken against the manifest's directory.
pub fn run_suite(manifest: &Path, env_budget: Option<&str>, jobs: usize) -> Result<SuiteResult, String> {
    let text = fs::read_to_string(manifest).map_err(|e| format!("{}: {e}", manifest.display()))?;
    let steps = parse_manifest(&text)?;
    let base = manifest.parent().map(Path::to_path_buf).unwrap_or_default();
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<StepRecord>>> = Mutex::new(vec![None; steps.len()]);
    std::thread::scope(|scope| {
        for _ in 0..jobs.max(1).min(steps.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(step) = steps.get(i) else { break };
                let argv: Vec<String> = std::iter::once("qforge".to_string()).chain(step.args.iter().cloned()).collect();
                let out = dispatch(&argv, env_budget, Some(&base));
                let (result, drift) = judge(step, &out.record);
                slots.lock().expect("not poisoned")[i] = Some(StepRecord {
                    name: step.name.clone(),
                    result,
                    drift,
                    record: out.record,
                });
            });
        }
    });
    let steps: Vec<StepRecord> = slots
        .into_inner()
        .expect("not poisoned")
        .into_iter()
        .map(|s| s.expect("every step ran"))
        .collect();
    let result = if steps.iter().any(|s| s.result == Verdict::Fail) {
        Verdict::Fail
    } else if steps.iter().any(|s| s.result == Verdict::Inconclusive) {
        Verdict::Inconclusive
    } else {
        Verdict::Pass
    };
    Ok(SuiteResult { result, steps })
}

pub fn write_records(path: &Path, result: &SuiteResult) -> Result<(), String> {
    let mut out = String::new();
    for s in &result.steps {
        out.push_str(&serde_json::to_string(s).expect("serializable"));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| format!("{}: {e}", path.display()))
}

pub(crate) fn suite_command(manifest: &Path, records: Option<&Path>, ctx: &mut Ctx) -> Result<Report, String> {
    let manifest = match &ctx.base {
        Some(b) if manifest.is_relative() => b.join(manifest),
        _ => manifest.to_path_buf(),
    };
    let result = run_suite(&manifest, ctx.env.as_deref(), ctx.budgets.jobs)?;
    if let Some(path) = records {
        write_records(path, &result)?;
    }
    let mut text = String::new();
    for s in &result.steps {
        let tag = match s.result {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Inconclusive => "INCONCLUSIVE",
        };
        push_line(&mut text, format!("{tag:<12} {}", s.name));
        for d in &s.drift {
            push_line(&mut text, format!("             {d}"));
        }
        if s.record.status == Status::Error {
            if let Some(e) = s.record.report.get("error") {
                push_line(&mut text, format!("             {}", e.as_str().unwrap_or_default()));
            }
        }
    }
    let verdict = serde_json::to_value(result.result).expect("serializable");
    push_line(&mut text, format!("suite: {} ({} steps)", verdict.as_str().unwrap_or_default(), result.steps.len()));
    let steps: Vec<Value> = result
        .steps
        .iter()
        .map(|s| json!({ "name": s.name, "result": s.result, "drift": s.drift }))
        .collect();
    Ok(Report {
        status: match result.result {
            Verdict::Pass => Status::Decided,
            Verdict::Inconclusive => Status::Inconclusive,
            Verdict::Fail => Status::Error,
        },
        text,
        json: json!({ "result": result.result, "steps": steps }),
    })
}
