use std::path::Path;
use std::process::Command;

const HEADER: &str = include_str!("../include/stablelab.h");

#[test]
fn header_declares_every_export() {
    let src = include_str!("../src/lib.rs");
    for line in src.lines() {
        if let Some(rest) = line
            .strip_prefix("pub unsafe extern \"C\" fn ")
            .or(line.strip_prefix("pub extern \"C\" fn "))
        {
            let name = rest.split('(').next().unwrap();
            assert!(
                HEADER.contains(&format!("{name}(")),
                "{name} missing from header"
            );
        }
    }
    for t in [
        "typedef struct SlGrid SlGrid",
        "typedef struct SlFunction SlFunction",
        "typedef struct SlKernel SlKernel",
        "SL_STATUS_OK = 0",
    ] {
        assert!(HEADER.contains(t), "{t}");
    }
}

#[test]
fn header_compiles_as_c() {
    let Ok(cc) = which_cc() else { return };
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let dir = tempfile::tempdir().unwrap();
    let main = dir.path().join("main.c");
    std::fs::write(&main, "#include \"stablelab.h\"\nint main(void) { SlGrid *g = 0; return sl_grid_new(1, 64, 6.28, &g) == SL_STATUS_OK ? 0 : 1; }\n").unwrap();
    let status = Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(&include)
        .arg(&main)
        .status()
        .unwrap();
    assert!(status.success());
}

fn which_cc() -> Result<&'static str, ()> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| Command::new(c).arg("--version").output().is_ok())
        .ok_or(())
}
