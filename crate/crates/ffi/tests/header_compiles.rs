//! The generated header must be valid C and link against the static
//! library; skipped quietly when no C compiler is on the path.

use std::path::PathBuf;
use std::process::Command;

#[test]
fn generated_header_compiles_and_links() {
    let cc = ["cc", "gcc", "clang"]
        .iter()
        .find(|c| Command::new(c).arg("--version").output().is_ok());
    let Some(cc) = cc else {
        eprintln!("no C compiler found; skipping");
        return;
    };

    let crate_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header_dir = crate_dir.join("include");
    assert!(
        header_dir.join("binauth.h").exists(),
        "cbindgen header missing"
    );

    // The staticlib lands either in the profile dir (cargo build) or in
    // its deps dir (cargo test).
    let deps_dir = {
        let mut d = PathBuf::from(std::env::current_exe().unwrap());
        d.pop();
        d
    };
    let profile_dir = {
        let mut d = deps_dir.clone();
        d.pop();
        d
    };
    let lib = [&profile_dir, &deps_dir]
        .iter()
        .map(|d| d.join("libbinauth_ffi.a"))
        .find(|p| p.exists())
        .expect("staticlib not built in target dir");

    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    std::fs::write(
        &src,
        r#"
#include "binauth.h"
#include <assert.h>
#include <math.h>

int main(void) {
    BinauthModel *model = 0;
    assert(binauth_model_dsbs(0.1, &model) == BINAUTH_STATUS_OK);

    BinauthMetric *metric = 0;
    assert(binauth_metric_min_entropy(1.0, &metric) == BINAUTH_STATUS_OK);

    BinauthCode *code = 0;
    assert(binauth_code_sample(4, 2, 0.4, 0.4, 7, &code) == BINAUTH_STATUS_OK);

    uint8_t x[4] = {0, 1, 1, 0};
    uint32_t key = 0, helper = 0;
    assert(binauth_code_enroll(code, x, 4, &key, &helper) == BINAUTH_STATUS_OK);

    double fr = -1.0;
    assert(binauth_exact_fr(code, model, metric, &fr) == BINAUTH_STATUS_OK);
    assert(fr >= 0.0 && fr <= 1.0);

    BinauthExponent e;
    assert(binauth_secrecy_exponent(model, 0.4, 40, &e) == BINAUTH_STATUS_OK);
    assert(fabs(e.value - (0.6931471805599453 - 0.4)) < 5e-3);

    binauth_code_free(code);
    binauth_metric_free(metric);
    binauth_model_free(model);
    return 0;
}
"#,
    )
    .unwrap();
    let exe = dir.path().join("smoke");
    let out = Command::new(cc)
        .arg(&src)
        .arg("-I")
        .arg(&header_dir)
        .arg(lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .arg("-o")
        .arg(&exe)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "compile failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let run = Command::new(&exe).status().unwrap();
    assert!(run.success(), "smoke binary failed");
}
