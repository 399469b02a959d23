use std::path::Path;
use std::process::Command;

const PROGRAM: &str = r#"
#include "softbody.h"
#include <stdio.h>

int main(void) {
    SoftbodySession *s = NULL;
    if (softbody_session_new("ring2d", &s) != SOFTBODY_STATUS_OK) {
        fprintf(stderr, "%s\n", softbody_last_error());
        return 1;
    }
    softbody_session_set_param(s, "ks.structural", 120.0);
    softbody_session_step(s, 10);
    size_t n = 0;
    softbody_session_particle_count(s, 0, &n);
    double xyz[3 * 64];
    SoftbodyStatus st = softbody_session_copy(s, 0, SOFTBODY_FIELD_POSITION, xyz, sizeof xyz / sizeof xyz[0]);
    char *json = NULL;
    softbody_session_snapshot(s, &json);
    softbody_string_free(json);
    softbody_session_free(s);
    return st == SOFTBODY_STATUS_OK ? 0 : 2;
}
"#;

fn compiler() -> Option<String> {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    Command::new(&cc).arg("--version").output().ok().filter(|o| o.status.success()).map(|_| cc)
}

#[test]
fn header_compiles_and_links_from_c() {
    let Some(cc) = compiler() else {
        eprintln!("no C compiler found, skipping");
        return;
    };
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    assert!(include.join("softbody.h").exists());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    std::fs::write(&src, PROGRAM).unwrap();
    for extra in [&["-x", "c", "-std=c99"][..], &["-x", "c++", "-std=c++11"][..]] {
        let out = Command::new(&cc)
            .args(extra)
            .args(["-Wall", "-Wextra", "-Werror", "-fsyntax-only", "-I"])
            .arg(&include)
            .arg(&src)
            .output()
            .unwrap();
        assert!(out.status.success(), "{extra:?}: {}", String::from_utf8_lossy(&out.stderr));
    }

    // cargo places the staticlib next to the deps directory holding this test binary
    let exe = std::env::current_exe().unwrap();
    let lib = exe.parent().and_then(Path::parent).unwrap().join("libsoftbody_ffi.a");
    if !lib.exists() {
        eprintln!("{} not built, skipping link check", lib.display());
        return;
    }
    let bin = dir.path().join("smoke");
    let out = Command::new(&cc)
        .args(["-std=c99", "-I"])
        .arg(&include)
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .output()
        .unwrap();
    assert!(out.status.success(), "link: {}", String::from_utf8_lossy(&out.stderr));
    let run = Command::new(&bin).output().unwrap();
    assert!(run.status.success(), "{:?}: {}", run.status, String::from_utf8_lossy(&run.stderr));
}
