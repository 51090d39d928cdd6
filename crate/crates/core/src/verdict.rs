//! Sandbox verdicts and their aggregation from per-test results.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ExecVerdict {
    Passed,
    WrongAnswer,
    TimeLimitExceeded,
    MemoryLimitExceeded,
    RuntimeError,
    CompilationError,
}

impl ExecVerdict {
    pub const ALL: [ExecVerdict; 6] = [
        ExecVerdict::Passed,
        ExecVerdict::WrongAnswer,
        ExecVerdict::TimeLimitExceeded,
        ExecVerdict::MemoryLimitExceeded,
        ExecVerdict::RuntimeError,
        ExecVerdict::CompilationError,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExecVerdict::Passed => "PASSED",
            ExecVerdict::WrongAnswer => "WRONG_ANSWER",
            ExecVerdict::TimeLimitExceeded => "TIME_LIMIT_EXCEEDED",
            ExecVerdict::MemoryLimitExceeded => "MEMORY_LIMIT_EXCEEDED",
            ExecVerdict::RuntimeError => "RUNTIME_ERROR",
            ExecVerdict::CompilationError => "COMPILATION_ERROR",
        }
    }

    pub fn is_passed(self) -> bool {
        self == ExecVerdict::Passed
    }
}

impl fmt::Display for ExecVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Result of running one test case.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TestStatus {
    Pass,
    WrongAnswer,
    TimeLimitExceeded,
    MemoryLimitExceeded,
    RuntimeError,
}

impl TestStatus {
    pub const ALL: [TestStatus; 5] = [
        TestStatus::Pass,
        TestStatus::WrongAnswer,
        TestStatus::TimeLimitExceeded,
        TestStatus::MemoryLimitExceeded,
        TestStatus::RuntimeError,
    ];

    /// Aggregation priority; higher wins. `Pass` never wins over a failure.
    fn severity(self) -> u8 {
        match self {
            TestStatus::Pass => 0,
            TestStatus::WrongAnswer => 1,
            TestStatus::RuntimeError => 2,
            TestStatus::MemoryLimitExceeded => 3,
            TestStatus::TimeLimitExceeded => 4,
        }
    }

    pub fn verdict(self) -> ExecVerdict {
        match self {
            TestStatus::Pass => ExecVerdict::Passed,
            TestStatus::WrongAnswer => ExecVerdict::WrongAnswer,
            TestStatus::TimeLimitExceeded => ExecVerdict::TimeLimitExceeded,
            TestStatus::MemoryLimitExceeded => ExecVerdict::MemoryLimitExceeded,
            TestStatus::RuntimeError => ExecVerdict::RuntimeError,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestResult {
    pub index: usize,
    pub status: TestStatus,
    /// Leading bytes of the program's stdout.
    pub actual_prefix: String,
    pub time_ms: u64,
}

/// Verdict of one submission.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecOutcome {
    pub verdict: ExecVerdict,
    /// Index of the first test whose status produced the verdict.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failing_test: Option<usize>,
    pub per_test: Vec<TestResult>,
    pub logs: String,
}

impl ExecOutcome {
    pub fn compilation_error(logs: impl Into<String>) -> Self {
        Self {
            verdict: ExecVerdict::CompilationError,
            failing_test: None,
            per_test: Vec::new(),
            logs: logs.into(),
        }
    }

    /// Aggregates per-test results of a compiled submission.
    pub fn from_tests(per_test: Vec<TestResult>, logs: String) -> Self {
        let statuses: Vec<_> = per_test.iter().map(|t| t.status).collect();
        let (verdict, failing) = classify(&statuses);
        Self {
            verdict,
            failing_test: failing.map(|i| per_test[i].index),
            per_test,
            logs,
        }
    }
}

/// Aggregates per-test statuses of a compiled program.
///
/// `PASSED` iff every status is `Pass`. Otherwise the most severe failing
/// status wins (TLE > MLE > RE > WA), reported with the position of its
/// first occurrence.
pub fn classify(statuses: &[TestStatus]) -> (ExecVerdict, Option<usize>) {
    let worst = statuses
        .iter()
        .enumerate()
        .filter(|(_, s)| **s != TestStatus::Pass)
        // max_by_key keeps the last maximum; reverse to keep the first
        .rev()
        .max_by_key(|(_, s)| s.severity());
    match worst {
        None => (ExecVerdict::Passed, None),
        Some((i, s)) => (s.verdict(), Some(i)),
    }
}

/// Judge comparison: trailing whitespace is ignored on every line, and
/// trailing blank lines are ignored at the end. Everything else is exact.
pub fn outputs_match(expected: &str, actual: &str) -> bool {
    normalized_lines(expected).eq(normalized_lines(actual))
}

fn normalized_lines(text: &str) -> impl Iterator<Item = &str> {
    let lines: Vec<&str> = text.lines().map(str::trim_end).collect();
    let keep = lines.iter().rposition(|l| !l.is_empty()).map_or(0, |i| i + 1);
    lines.into_iter().take(keep)
}
