//! Subprocess executor with wall-time and resident-memory limits.
//!
//! Not a security boundary: programs run as the current user with no
//! filesystem or network isolation.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{self, Read, Write};
use std::os::unix::process::CommandExt;
use std::path::Path;
use std::process::{Command, Stdio};
use std::sync::{Condvar, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{Sandbox, SandboxError, Submission};
use crate::text::truncate_bytes;
use crate::verdict::{outputs_match, ExecOutcome, TestResult, TestStatus};

const POLL_INTERVAL: Duration = Duration::from_millis(2);
const ACTUAL_PREFIX_BYTES: usize = 256;
const LOG_FIELD_BYTES: usize = 2048;

/// How to build and run one language. Commands are argv lists; `{src}`,
/// `{bin}` and `{dir}` expand to the source path, an output binary path and
/// the scratch directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LanguageConfig {
    pub source_file: String,
    #[serde(default)]
    pub compile_cmd: Option<Vec<String>>,
    pub run_cmd: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExecutorConfig {
    /// Used when a submission carries a zero time limit.
    pub time_limit_ms: u64,
    /// Used when a submission carries a zero memory limit.
    pub memory_limit_mb: u64,
    pub max_output_bytes: usize,
    pub compile_timeout_ms: u64,
    /// Maximum submissions judged at once.
    pub workers: usize,
    pub languages: BTreeMap<String, LanguageConfig>,
}

impl Default for ExecutorConfig {
    fn default() -> Self {
        let argv = |parts: &[&str]| parts.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        let mut languages = BTreeMap::new();
        languages.insert(
            "python".to_owned(),
            LanguageConfig {
                source_file: "main.py".into(),
                compile_cmd: Some(argv(&["python3", "-m", "py_compile", "{src}"])),
                run_cmd: argv(&["python3", "{src}"]),
            },
        );
        languages.insert(
            "c".to_owned(),
            LanguageConfig {
                source_file: "main.c".into(),
                compile_cmd: Some(argv(&["cc", "-O2", "-o", "{bin}", "{src}", "-lm"])),
                run_cmd: argv(&["{bin}"]),
            },
        );
        languages.insert(
            "cpp".to_owned(),
            LanguageConfig {
                source_file: "main.cpp".into(),
                compile_cmd: Some(argv(&["c++", "-O2", "-std=c++17", "-o", "{bin}", "{src}"])),
                run_cmd: argv(&["{bin}"]),
            },
        );
        Self {
            time_limit_ms: 2_000,
            memory_limit_mb: 256,
            max_output_bytes: 1 << 20,
            compile_timeout_ms: 30_000,
            workers: 4,
            languages,
        }
    }
}

/// Judges submissions by running them as local subprocesses.
#[derive(Debug)]
pub struct LocalExecutor {
    config: ExecutorConfig,
    compile_locks: BTreeMap<String, Mutex<()>>,
    permits: Semaphore,
}

impl LocalExecutor {
    pub fn new(config: ExecutorConfig) -> Self {
        let compile_locks = config.languages.keys().map(|k| (k.clone(), Mutex::new(()))).collect();
        let permits = Semaphore::new(config.workers.max(1));
        Self {
            config,
            compile_locks,
            permits,
        }
    }

    pub fn config(&self) -> &ExecutorConfig {
        &self.config
    }

    /// Whether resident memory can be observed, which MLE detection needs.
    pub fn memory_limit_enforced() -> bool {
        cfg!(target_os = "linux") && Path::new("/proc/self/status").exists()
    }

    /// Maps a fence label or language tag to a configured language name.
    pub fn resolve_language(&self, tag: &str) -> Option<&str> {
        let tag = tag.trim().to_ascii_lowercase();
        let canonical = match tag.as_str() {
            "py" | "python3" | "py3" => "python",
            "c++" | "cxx" | "cc" => "cpp",
            other => other,
        };
        self.config
            .languages
            .get_key_value(canonical)
            .map(|(k, _)| k.as_str())
    }

    fn judge(&self, submission: &Submission<'_>, language: &str) -> Result<ExecOutcome, SandboxError> {
        let lang = &self.config.languages[language];
        let dir = tempfile::tempdir().map_err(|e| infra("creating scratch directory", e))?;
        let src = dir.path().join(&lang.source_file);
        std::fs::write(&src, submission.source).map_err(|e| infra("writing source", e))?;
        let bin = dir.path().join("prog");
        let expand = |argv: &[String]| -> Vec<String> {
            argv.iter()
                .map(|a| {
                    a.replace("{src}", &src.to_string_lossy())
                        .replace("{bin}", &bin.to_string_lossy())
                        .replace("{dir}", &dir.path().to_string_lossy())
                })
                .collect()
        };

        if let Some(compile) = &lang.compile_cmd {
            let _guard = self.compile_locks[language].lock().unwrap();
            let limits = RunLimits {
                time: Duration::from_millis(self.config.compile_timeout_ms),
                memory_bytes: None,
                max_output: self.config.max_output_bytes,
            };
            let report = run_limited(&expand(compile), dir.path(), b"", &limits)
                .map_err(|e| infra(&format!("spawning compiler `{}`", compile[0]), e))?;
            if report.timed_out || !report.success() {
                let mut logs = String::from("compilation failed");
                if report.timed_out {
                    logs.push_str(" (compiler timed out)");
                }
                push_field(&mut logs, "stderr", &report.stderr);
                push_field(&mut logs, "stdout", &report.stdout);
                return Ok(ExecOutcome::compilation_error(logs));
            }
        }

        let time_ms = nonzero_or(submission.time_limit_ms, self.config.time_limit_ms);
        let memory_mb = nonzero_or(submission.memory_limit_mb, self.config.memory_limit_mb);
        let limits = RunLimits {
            time: Duration::from_millis(time_ms),
            memory_bytes: Self::memory_limit_enforced().then_some(memory_mb * 1024 * 1024),
            max_output: self.config.max_output_bytes,
        };
        if limits.memory_bytes.is_none() {
            log::warn!("resident memory is not observable on this platform; MLE will surface as RE");
        }

        let run = expand(&lang.run_cmd);
        let mut per_test = Vec::with_capacity(submission.tests.len());
        let mut logs = String::new();
        let mut detailed = false;
        for (index, test) in submission.tests.iter().enumerate() {
            let report = run_limited(&run, dir.path(), test.input.as_bytes(), &limits)
                .map_err(|e| infra(&format!("spawning `{}`", run[0]), e))?;
            let status = report.status(&test.expected_output, &limits);
            let actual = String::from_utf8_lossy(&report.stdout);
            if status != TestStatus::Pass {
                let _ = writeln!(logs, "test {index}: {}", status.verdict());
                if !detailed {
                    detailed = true;
                    match status {
                        TestStatus::TimeLimitExceeded => {
                            let _ = writeln!(logs, "time limit: {time_ms} ms");
                        }
                        TestStatus::MemoryLimitExceeded => {
                            let _ = writeln!(
                                logs,
                                "memory limit: {memory_mb} MB (peak {} kB)",
                                report.peak_rss_kb
                            );
                        }
                        _ => {}
                    }
                    if let Some(code) = report.exit_code {
                        let _ = writeln!(logs, "exit code: {code}");
                    }
                    if let Some(sig) = report.signal {
                        let _ = writeln!(logs, "killed by signal {sig}");
                    }
                    if report.output_truncated {
                        let _ = writeln!(logs, "output exceeded {} bytes", limits.max_output);
                    }
                    push_field(&mut logs, "input", test.input.as_bytes());
                    push_field(&mut logs, "expected", test.expected_output.as_bytes());
                    push_field(&mut logs, "actual", &report.stdout);
                    push_field(&mut logs, "stderr", &report.stderr);
                }
            }
            per_test.push(TestResult {
                index,
                status,
                actual_prefix: truncate_bytes(&actual, ACTUAL_PREFIX_BYTES).0.to_owned(),
                time_ms: report.elapsed.as_millis() as u64,
            });
        }
        Ok(ExecOutcome::from_tests(per_test, logs))
    }
}

impl Sandbox for LocalExecutor {
    fn execute(&self, submission: &Submission<'_>) -> Result<ExecOutcome, SandboxError> {
        if submission.source.trim().is_empty() {
            return Err(SandboxError::Usage("empty source".into()));
        }
        if submission.tests.is_empty() {
            return Err(SandboxError::Usage("no tests to run".into()));
        }
        let Some(language) = self.resolve_language(submission.language).map(str::to_owned) else {
            return Ok(ExecOutcome::compilation_error(format!(
                "unsupported language `{}`",
                submission.language
            )));
        };
        let _permit = self.permits.acquire();
        self.judge(submission, &language)
    }
}

fn nonzero_or(value: u64, fallback: u64) -> u64 {
    if value == 0 {
        fallback
    } else {
        value
    }
}

fn infra(what: &str, e: io::Error) -> SandboxError {
    SandboxError::Infrastructure(format!("{what}: {e}"))
}

fn push_field(logs: &mut String, name: &str, bytes: &[u8]) {
    if bytes.is_empty() {
        return;
    }
    let text = String::from_utf8_lossy(bytes);
    let (kept, cut) = truncate_bytes(&text, LOG_FIELD_BYTES);
    let _ = writeln!(logs, "{name}:\n{kept}{}", if cut { "\n[...]" } else { "" });
}

struct RunLimits {
    time: Duration,
    memory_bytes: Option<u64>,
    max_output: usize,
}

struct RunReport {
    exit_code: Option<i32>,
    signal: Option<i32>,
    stdout: Vec<u8>,
    stderr: Vec<u8>,
    elapsed: Duration,
    peak_rss_kb: u64,
    timed_out: bool,
    memory_exceeded: bool,
    output_truncated: bool,
}

impl RunReport {
    fn success(&self) -> bool {
        self.exit_code == Some(0)
    }

    fn status(&self, expected: &str, limits: &RunLimits) -> TestStatus {
        if self.timed_out || self.signal == Some(libc::SIGXCPU) || self.elapsed > limits.time {
            TestStatus::TimeLimitExceeded
        } else if self.memory_exceeded {
            TestStatus::MemoryLimitExceeded
        } else if !self.success() {
            TestStatus::RuntimeError
        } else if self.output_truncated || !outputs_match(expected, &String::from_utf8_lossy(&self.stdout)) {
            TestStatus::WrongAnswer
        } else {
            TestStatus::Pass
        }
    }
}

/// Runs `argv` to completion or until a limit trips, polling the child's
/// resident set size. The child leads its own process group so the whole
/// group is killed on a limit.
fn run_limited(argv: &[String], cwd: &Path, stdin: &[u8], limits: &RunLimits) -> io::Result<RunReport> {
    let (program, args) = argv
        .split_first()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "empty command"))?;
    let cpu_secs = limits.time.as_secs() + 2;
    let mut cmd = Command::new(program);
    cmd.args(args)
        .current_dir(cwd)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped());
    // SAFETY: only async-signal-safe libc calls between fork and exec.
    unsafe {
        cmd.pre_exec(move || {
            libc::setpgid(0, 0);
            let rl = libc::rlimit {
                rlim_cur: cpu_secs as libc::rlim_t,
                rlim_max: (cpu_secs + 1) as libc::rlim_t,
            };
            libc::setrlimit(libc::RLIMIT_CPU, &rl);
            Ok(())
        });
    }

    let start = Instant::now();
    let mut child = cmd.spawn()?;
    let pid = child.id() as libc::pid_t;

    let input = stdin.to_vec();
    let stdin_pipe = child.stdin.take();
    let writer = thread::spawn(move || {
        if let Some(mut pipe) = stdin_pipe {
            let _ = pipe.write_all(&input);
        }
    });
    let stdout = spawn_reader(child.stdout.take(), limits.max_output);
    let stderr = spawn_reader(child.stderr.take(), limits.max_output);

    let mut timed_out = false;
    let mut memory_exceeded = false;
    let mut killed = false;
    let (status, rusage) = loop {
        let mut status: libc::c_int = 0;
        // SAFETY: rusage is plain old data; wait4 fills it on success.
        let mut rusage: libc::rusage = unsafe { std::mem::zeroed() };
        let r = unsafe { libc::wait4(pid, &mut status, libc::WNOHANG, &mut rusage) };
        if r == pid {
            break (status, rusage);
        }
        if r < 0 {
            let err = io::Error::last_os_error();
            if err.kind() == io::ErrorKind::Interrupted {
                continue;
            }
            return Err(err);
        }
        if !killed {
            if start.elapsed() > limits.time {
                timed_out = true;
            } else if let Some(cap) = limits.memory_bytes {
                if resident_bytes(pid).is_some_and(|rss| rss > cap) {
                    memory_exceeded = true;
                }
            }
            if timed_out || memory_exceeded {
                // SAFETY: signalling our own child's process group.
                unsafe {
                    libc::killpg(pid, libc::SIGKILL);
                    libc::kill(pid, libc::SIGKILL);
                }
                killed = true;
            }
        }
        thread::sleep(POLL_INTERVAL);
    };
    let elapsed = start.elapsed();
    // reap stragglers that inherited the pipes
    unsafe {
        libc::killpg(pid, libc::SIGKILL);
    }

    let _ = writer.join();
    let (stdout, out_cut) = stdout.join().unwrap_or_default();
    let (stderr, _) = stderr.join().unwrap_or_default();

    let peak_rss_kb = rusage.ru_maxrss.max(0) as u64;
    if let Some(cap) = limits.memory_bytes {
        memory_exceeded |= peak_rss_kb * 1024 > cap;
    }
    let (exit_code, signal) = if libc::WIFEXITED(status) {
        (Some(libc::WEXITSTATUS(status)), None)
    } else if libc::WIFSIGNALED(status) {
        (None, Some(libc::WTERMSIG(status)))
    } else {
        (None, None)
    };

    Ok(RunReport {
        exit_code,
        signal,
        stdout,
        stderr,
        elapsed,
        peak_rss_kb,
        timed_out,
        memory_exceeded,
        output_truncated: out_cut,
    })
}

fn spawn_reader<R: Read + Send + 'static>(pipe: Option<R>, cap: usize) -> thread::JoinHandle<(Vec<u8>, bool)> {
    thread::spawn(move || {
        let mut kept = Vec::new();
        let mut truncated = false;
        let Some(mut pipe) = pipe else {
            return (kept, truncated);
        };
        let mut buf = [0u8; 8192];
        loop {
            match pipe.read(&mut buf) {
                Ok(0) => break,
                Ok(n) => {
                    let room = cap.saturating_sub(kept.len());
                    if n > room {
                        truncated = true;
                    }
                    kept.extend_from_slice(&buf[..n.min(room)]);
                }
                Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
                Err(_) => break,
            }
        }
        (kept, truncated)
    })
}

fn resident_bytes(pid: libc::pid_t) -> Option<u64> {
    let status = std::fs::read_to_string(format!("/proc/{pid}/status")).ok()?;
    let line = status.lines().find(|l| l.starts_with("VmRSS:"))?;
    let kb: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb * 1024)
}

#[derive(Debug)]
struct Semaphore {
    available: Mutex<usize>,
    freed: Condvar,
}

struct Permit<'a>(&'a Semaphore);

impl Semaphore {
    fn new(n: usize) -> Self {
        Self {
            available: Mutex::new(n),
            freed: Condvar::new(),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut n = self.available.lock().unwrap();
        while *n == 0 {
            n = self.freed.wait(n).unwrap();
        }
        *n -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.available.lock().unwrap() += 1;
        self.0.freed.notify_one();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn limits(ms: u64) -> RunLimits {
        RunLimits {
            time: Duration::from_millis(ms),
            memory_bytes: None,
            max_output: 16,
        }
    }

    fn sh(script: &str) -> Vec<String> {
        vec!["sh".into(), "-c".into(), script.into()]
    }

    #[test]
    fn captures_exit_and_output() {
        let dir = tempfile::tempdir().unwrap();
        let r = run_limited(&sh("cat; exit 3"), dir.path(), b"hello", &limits(5_000)).unwrap();
        assert_eq!(r.exit_code, Some(3));
        assert_eq!(r.stdout, b"hello");
        assert!(!r.timed_out);
    }

    #[test]
    fn output_is_capped() {
        let dir = tempfile::tempdir().unwrap();
        let r = run_limited(&sh("printf '%040d' 0"), dir.path(), b"", &limits(5_000)).unwrap();
        assert_eq!(r.stdout.len(), 16);
        assert!(r.output_truncated);
    }

    #[test]
    fn wall_clock_limit_kills_group() {
        let dir = tempfile::tempdir().unwrap();
        let started = Instant::now();
        let r = run_limited(&sh("sleep 5"), dir.path(), b"", &limits(200)).unwrap();
        assert!(r.timed_out);
        assert!(started.elapsed() < Duration::from_secs(3));
    }

    #[test]
    fn missing_program_is_spawn_error() {
        let dir = tempfile::tempdir().unwrap();
        let argv = vec!["/definitely/not/a/program".to_string()];
        assert!(run_limited(&argv, dir.path(), b"", &limits(100)).is_err());
    }

    #[test]
    fn language_aliases() {
        let exec = LocalExecutor::new(ExecutorConfig::default());
        assert_eq!(exec.resolve_language("py"), Some("python"));
        assert_eq!(exec.resolve_language("C++"), Some("cpp"));
        assert_eq!(exec.resolve_language("cobol"), None);
    }

    #[test]
    fn semaphore_bounds_concurrency() {
        let sem = Semaphore::new(1);
        let p = sem.acquire();
        assert_eq!(*sem.available.lock().unwrap(), 0);
        drop(p);
        assert_eq!(*sem.available.lock().unwrap(), 1);
    }
}
