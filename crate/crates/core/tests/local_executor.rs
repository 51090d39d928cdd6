use std::process::Command;

use layerflow_core::adapters::{ExecutorConfig, LocalExecutor, Sandbox, Submission};
use layerflow_core::verdict::TestStatus;
use layerflow_core::{ExecOutcome, ExecVerdict, TestCase};

fn case(input: &str, expected: &str) -> TestCase {
    TestCase {
        input: input.into(),
        expected_output: expected.into(),
    }
}

fn judge(language: &str, source: &str, tests: &[TestCase]) -> ExecOutcome {
    LocalExecutor::new(ExecutorConfig::default())
        .execute(&Submission {
            source,
            language,
            tests,
            time_limit_ms: 1000,
            memory_limit_mb: 128,
        })
        .unwrap()
}

fn have(tool: &str) -> bool {
    Command::new(tool).arg("--version").output().is_ok()
}

#[test]
fn trailing_whitespace_is_tolerated() {
    let out = judge("python", "print(input() + '   ')\nprint()", &[case("x\n", "x\n")]);
    assert_eq!(out.verdict, ExecVerdict::Passed, "{}", out.logs);
}

#[test]
fn first_failing_test_is_reported() {
    let tests = [case("1\n", "1\n"), case("2\n", "3\n"), case("4\n", "4\n")];
    let out = judge("python", "print(input())", &tests);
    assert_eq!(out.verdict, ExecVerdict::WrongAnswer);
    assert_eq!(out.failing_test, Some(1));
    let statuses: Vec<_> = out.per_test.iter().map(|t| t.status).collect();
    assert_eq!(statuses, [TestStatus::Pass, TestStatus::WrongAnswer, TestStatus::Pass]);
}

#[test]
fn severity_beats_order() {
    let tests = [case("0\n", "0\n"), case("1\n", "x\n"), case("2\n", "2\n")];
    let src = "n = int(input())\nif n == 2:\n    raise ValueError\nprint(n)";
    let out = judge("python", src, &tests);
    assert_eq!(out.verdict, ExecVerdict::RuntimeError);
    assert_eq!(out.failing_test, Some(2));
}

#[test]
fn unknown_language_is_a_compilation_error() {
    let out = judge("brainfuck", "+++", &[case("", "")]);
    assert_eq!(out.verdict, ExecVerdict::CompilationError);
    assert!(out.per_test.is_empty());
}

#[test]
fn language_tags_resolve() {
    let out = judge("py3", "print(input())", &[case("ok\n", "ok\n")]);
    assert_eq!(out.verdict, ExecVerdict::Passed, "{}", out.logs);
}

#[test]
fn compiled_c_program() {
    if !have("cc") {
        eprintln!("skipped: no C compiler");
        return;
    }
    let src = "#include <stdio.h>\nint main(void){int a,b;scanf(\"%d %d\",&a,&b);printf(\"%d\\n\",a+b);return 0;}";
    let out = judge("c", src, &[case("2 3\n", "5\n"), case("-1 1\n", "0\n")]);
    assert_eq!(out.verdict, ExecVerdict::Passed, "{}", out.logs);

    let broken = judge("c", "int main(void){ return }", &[case("", "")]);
    assert_eq!(broken.verdict, ExecVerdict::CompilationError);
    assert!(!broken.logs.is_empty());
}

#[test]
fn nonzero_exit_is_runtime_error() {
    let out = judge("python", "import sys\nprint(input())\nsys.exit(4)", &[case("a\n", "a\n")]);
    assert_eq!(out.verdict, ExecVerdict::RuntimeError);
}
