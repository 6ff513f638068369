//! Runs a directory of scenarios in parallel and aggregates the results.

use super::{run_scenario, RunOptions, RunReport, ScenarioError, Status};
use rayon::prelude::*;
use serde::Serialize;
use std::path::{Path, PathBuf};

#[derive(Clone, Debug, Serialize)]
pub struct SuiteEntry {
    pub file: String,
    pub status: String,
    pub exit_code: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<RunReport>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub errors: usize,
    pub exit_code: i32,
    pub scenarios: Vec<SuiteEntry>,
}

impl SuiteReport {
    pub fn text(&self) -> String {
        let mut out = String::new();
        for e in &self.scenarios {
            let name = e.report.as_ref().map_or(e.file.as_str(), |r| r.scenario.as_str());
            out.push_str(&format!("{:<28} {:<12} {}\n", name, e.status, e.exit_code));
            if let Some(err) = &e.error {
                out.push_str(&format!("  {err}\n"));
            }
            for c in e.report.iter().flat_map(|r| &r.checks).filter(|c| !c.status.ok()) {
                out.push_str(&format!("  {} {}\n", c.name, c.status.as_str()));
            }
        }
        out.push_str(&format!(
            "total {}  passed {}  failed {}  errors {}\n",
            self.total, self.passed, self.failed, self.errors
        ));
        out
    }
}

/// Sorted `*.json` files directly inside `dir`.
pub fn scenario_files(dir: &Path) -> Result<Vec<PathBuf>, ScenarioError> {
    let rd = std::fs::read_dir(dir).map_err(|e| ScenarioError::Validation(format!("{}: {e}", dir.display())))?;
    let mut files: Vec<PathBuf> = rd
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(ScenarioError::Validation(format!("no scenario files in {}", dir.display())));
    }
    Ok(files)
}

fn entry(path: &Path, ro: &RunOptions) -> SuiteEntry {
    let file = path.file_name().map_or_else(String::new, |f| f.to_string_lossy().into_owned());
    match run_scenario(path, ro) {
        Ok(r) => SuiteEntry {
            file,
            status: r.status.as_str().into(),
            exit_code: r.exit_code(),
            error: None,
            report: Some(r),
        },
        Err(e) => SuiteEntry {
            file,
            status: "error".into(),
            exit_code: e.exit_code(),
            error: Some(e.to_string()),
            report: None,
        },
    }
}

/// Runs every scenario in `dir` on a pool of `jobs` threads.
///
/// Hard errors dominate the exit code; otherwise any failure gives 1.
pub fn run_suite(dir: &Path, jobs: usize, ro: &RunOptions) -> Result<SuiteReport, ScenarioError> {
    let files = scenario_files(dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| ScenarioError::Validation(e.to_string()))?;
    let scenarios: Vec<SuiteEntry> = pool.install(|| files.par_iter().map(|p| entry(p, ro)).collect());
    let passed = scenarios
        .iter()
        .filter(|e| e.report.as_ref().is_some_and(|r| r.exit_code() == 0))
        .count();
    let errors = scenarios.iter().filter(|e| e.report.is_none()).count();
    let failed = scenarios.len() - passed - errors;
    let hard = scenarios.iter().filter(|e| e.report.is_none()).map(|e| e.exit_code).max();
    let exit_code = hard.unwrap_or(if failed > 0 { 1 } else { 0 });
    Ok(SuiteReport {
        total: scenarios.len(),
        passed,
        failed,
        errors,
        exit_code,
        scenarios,
    })
}

/// Writes `suite.json` and `suite.txt` into `out`.
pub fn write_suite(report: &SuiteReport, out: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(out)?;
    let json = serde_json::to_string_pretty(report).expect("serializable");
    std::fs::write(out.join("suite.json"), json + "\n")?;
    std::fs::write(out.join("suite.txt"), report.text())
}

impl SuiteEntry {
    pub fn passed(&self) -> bool {
        self.report.as_ref().is_some_and(|r| r.status == Status::Pass)
    }
}
