//! The generated header matches the exported symbols and compiles against
//! the static library from C.

use std::path::{Path, PathBuf};
use std::process::Command;

fn header() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include/vortgeo.h")
}

#[test]
fn header_declares_every_entry_point() {
    let h = std::fs::read_to_string(header()).expect("header generated by build.rs");
    let src = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("src/lib.rs")).unwrap();
    let exported: Vec<&str> = src
        .split("extern \"C\" fn ")
        .skip(1)
        .map(|s| s.split('(').next().unwrap())
        .collect();
    assert!(exported.len() >= 20);
    for name in exported {
        assert!(h.contains(&format!("{name}(")), "{name} missing from header");
    }
    for ty in ["typedef struct VgGrid VgGrid", "typedef struct VgField VgField", "typedef struct VgTrajectory VgTrajectory"] {
        assert!(h.contains(ty), "{ty}");
    }
    assert!(h.contains("VG_STATUS_OK = 0"));
}

fn target_dir() -> PathBuf {
    // target/<profile>/deps/<test binary>
    std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn c_program_links_and_runs() {
    let lib = target_dir().join("libvortgeo_ffi.a");
    if !lib.exists() {
        eprintln!("skipping: {} not built", lib.display());
        return;
    }
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("smoke.c");
    std::fs::write(
        &src,
        r#"
#include <stdio.h>
#include <string.h>
#include "vortgeo.h"

int main(void) {
    VgGrid *g = NULL;
    if (vg_grid_new(7, 6.283185307179586, 0.1, &g) != VG_STATUS_INVALID_GRID) return 1;
    if (strlen(vg_last_error()) == 0) return 2;
    if (vg_grid_new(8, 6.283185307179586, 0.1, &g) != VG_STATUS_OK) return 3;
    VgField *w = NULL;
    if (vg_scenario_generate(g, "{\"kind\":\"taylor_green_2d3d\"}", 1.0, &w) != VG_STATUS_OK) return 4;
    double m = 0.0;
    if (vg_field_max_norm(w, &m) != VG_STATUS_OK || !(m > 0.0)) return 5;
    double h = 0.0;
    if (vg_h_delta(0.5, &h) != VG_STATUS_OK) return 6;
    printf("%s %.6f %.6f\n", vg_version(), m, h);
    vg_field_free(w);
    vg_grid_free(g);
    return 0;
}
"#,
    )
    .unwrap();
    let exe = tmp.path().join("smoke");
    let out = Command::new(&cc)
        .arg(&src)
        .arg("-I")
        .arg(header().parent().unwrap())
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&exe)
        .output();
    let out = match out {
        Ok(o) => o,
        Err(e) => {
            eprintln!("skipping: no C compiler ({e})");
            return;
        }
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status.code());
    let text = String::from_utf8(run.stdout).unwrap();
    assert!(text.contains("0.409666"), "{text}");
}
