//! Builds a C program against the generated header and static library.

use std::path::{Path, PathBuf};
use std::process::Command;

fn static_lib() -> Option<PathBuf> {
    // target/<profile>/deps/<test binary> -> target/<profile>
    let exe = std::env::current_exe().ok()?;
    let profile_dir = exe.parent()?.parent()?;
    let lib = profile_dir.join("libcompact_coding_ffi.a");
    lib.exists().then_some(lib)
}

#[test]
fn c_program_links_and_runs() {
    let Some(lib) = static_lib() else {
        eprintln!("static library not built; skipping");
        return;
    };
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let out = tempfile_path("ccq_c_program");
    let status = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(dir.join("include"))
        .arg(dir.join("tests/c_program.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .arg("-o")
        .arg(&out)
        .status()
        .expect("cc runs");
    assert!(status.success());
    let run = Command::new(&out).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status.code());
    assert_eq!(String::from_utf8(run.stdout).unwrap().trim(), format!("{} 2 0", env!("CARGO_PKG_VERSION")));
    std::fs::remove_file(out).ok();
}

#[test]
fn header_compiles_as_cpp() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let status = Command::new("c++")
        .args(["-fsyntax-only", "-x", "c++", "-Wall", "-Werror"])
        .arg(dir.join("include/compact_coding.h"))
        .status()
        .expect("c++ runs");
    assert!(status.success());
}

fn tempfile_path(stem: &str) -> PathBuf {
    std::env::temp_dir().join(format!("{stem}_{}", std::process::id()))
}
