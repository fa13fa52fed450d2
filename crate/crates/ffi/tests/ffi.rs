use std::ffi::{c_char, CStr};
use std::path::Path;
use std::process::Command;
use std::ptr;

use pathwise_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 256];
    unsafe { pw_last_error_message(buf.as_mut_ptr(), buf.len()) };
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

fn driver_with_increment(inc: f64) -> *mut PwPath {
    let times: Vec<f64> = (0..=3 * 64).map(|k| k as f64 / 64.0).collect();
    let values: Vec<f64> = times.iter().map(|t| inc * (t - 1.0).clamp(0.0, 1.0)).collect();
    let mut p = ptr::null_mut();
    let s = unsafe { pw_path_from_nodes(times.as_ptr(), values.as_ptr(), times.len(), &mut p) };
    assert_eq!(s, PwStatus::Ok);
    p
}

#[test]
fn bes3_on_zero_driver_through_the_c_api() {
    let times = [0.0, 0.5, 1.0];
    let zeros = [0.0; 3];
    let mut d = ptr::null_mut();
    assert_eq!(unsafe { pw_path_from_nodes(times.as_ptr(), zeros.as_ptr(), 3, &mut d) }, PwStatus::Ok);
    let mut sol = ptr::null_mut();
    let spec = c"{\"variant\":\"bes3\",\"center\":0,\"side\":\"above\"}";
    let st = unsafe { pw_solve(spec.as_ptr(), d, 1.0, 0, 0.0, 1.0, f64::NAN, ptr::null(), &mut sol) };
    assert_eq!(st, PwStatus::Ok, "{}", last_error());

    let mut path = ptr::null_mut();
    assert_eq!(unsafe { pw_solution_path(sol, &mut path) }, PwStatus::Ok);
    let mut x1 = 0.0;
    assert_eq!(unsafe { pw_path_eval(path, 1.0, &mut x1) }, PwStatus::Ok);
    assert!((x1 - 3f64.sqrt()).abs() < 1e-6);

    let n = unsafe { pw_path_len(path) };
    let mut ts = vec![0.0; n];
    let mut xs = vec![0.0; n];
    assert_eq!(unsafe { pw_path_copy(path, ts.as_mut_ptr(), xs.as_mut_ptr(), n) }, PwStatus::Ok);
    assert_eq!(ts[n - 1], 1.0);
    assert_eq!(xs[n - 1], x1);

    let mut r = f64::NAN;
    assert_eq!(unsafe { pw_residual(spec.as_ptr(), path, d, 0.0, 1.0, ptr::null(), &mut r) }, PwStatus::Ok);
    assert!(r < 1e-3, "{r}");

    unsafe {
        pw_path_free(path);
        pw_solution_free(sol);
        pw_path_free(d);
    }
}

#[test]
fn invalid_branch_is_reported_by_code_and_message() {
    let d = driver_with_increment(0.5);
    let mut sol = ptr::null_mut();
    let st = unsafe { pw_construct_ce1(d, 2, ptr::null(), &mut sol) };
    assert_eq!(st, PwStatus::InvalidBranch);
    assert!(sol.is_null());
    assert!(last_error().starts_with("InvalidBranch"));
    let name = unsafe { CStr::from_ptr(pw_status_name(st)) };
    assert_eq!(name.to_str().unwrap(), "InvalidBranch");

    assert_eq!(unsafe { pw_construct_ce1(d, 1, ptr::null(), &mut sol) }, PwStatus::Ok);
    let mut needed = 0;
    assert_eq!(unsafe { pw_solution_sidecar_json(sol, ptr::null_mut(), 0, &mut needed) }, PwStatus::Ok);
    let mut buf = vec![0 as c_char; needed + 1];
    assert_eq!(unsafe { pw_solution_sidecar_json(sol, buf.as_mut_ptr(), buf.len(), &mut needed) }, PwStatus::Ok);
    let json = unsafe { CStr::from_ptr(buf.as_ptr()) }.to_str().unwrap();
    let v: serde_json::Value = serde_json::from_str(json).unwrap();
    assert_eq!(v["branch_log"][0]["label"], "C1");
    unsafe {
        pw_solution_free(sol);
        pw_path_free(d);
    }
}

#[test]
fn bad_arguments_map_to_codes() {
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { pw_path_brownian(-1.0, 10, 1, 0, &mut p) }, PwStatus::Usage);
    assert_eq!(unsafe { pw_path_brownian(1.0, 10, 1, 0, ptr::null_mut()) }, PwStatus::NullPointer);
    assert_eq!(unsafe { pw_path_brownian(4.0, 1024, 1, 0, &mut p) }, PwStatus::Ok);

    let mut sol = ptr::null_mut();
    assert_eq!(unsafe { pw_construct_ce2(p, 7, ptr::null(), &mut sol) }, PwStatus::Usage);
    assert_eq!(unsafe { pw_bridge(p, 3, 1.0, ptr::null(), &mut sol) }, PwStatus::Usage);
    let bad = c"{\"variant\":\"ce1\",\"y\":1}";
    let st = unsafe { pw_solve(bad.as_ptr(), p, 0.0, 0, 0.0, 1.0, f64::NAN, ptr::null(), &mut sol) };
    assert_eq!(st, PwStatus::Parse);

    let mut opts = pw_solve_options_default();
    opts.h_base = 0.0;
    assert_eq!(unsafe { pw_bridge(p, 0, 1.0, &opts, &mut sol) }, PwStatus::Usage);
    opts.h_base = 1.0 / 4096.0;
    assert_eq!(unsafe { pw_construct_ce2(p, 1, &opts, &mut sol) }, PwStatus::Ok, "{}", last_error());
    unsafe {
        pw_solution_free(sol);
        pw_path_free(p);
        pw_path_free(ptr::null_mut());
    }
}

#[test]
fn header_declares_the_api_and_compiles_as_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/pathwise.h");
    let text = std::fs::read_to_string(&header).expect("build script writes the header");
    for f in [
        "pw_last_error_message",
        "pw_status_name",
        "pw_path_brownian",
        "pw_path_from_nodes",
        "pw_path_free",
        "pw_solve",
        "pw_bridge",
        "pw_construct_ce1",
        "pw_construct_ce2",
        "pw_solution_sidecar_json",
        "pw_solution_free",
        "pw_residual",
        "typedef struct PwPath PwPath;",
        "PW_STATUS_INVALID_BRANCH = 7",
    ] {
        assert!(text.contains(f), "header lacks {f}");
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"pathwise.h\"\nint main(void) {\n  PwPath *d = 0;\n  PwSolution *s = 0;\n  \
         if (pw_path_brownian(3.0, 3072, 1, 0, &d) != PW_STATUS_OK) return 1;\n  \
         PwStatus st = pw_construct_ce1(d, 0, 0, &s);\n  pw_solution_free(s);\n  pw_path_free(d);\n  \
         return st == PW_STATUS_OK ? 0 : 1;\n}\n",
    )
    .unwrap();
    let Ok(status) = Command::new("cc")
        .arg("-fsyntax-only")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(header.parent().unwrap())
        .arg(&src)
        .status()
    else {
        eprintln!("no C compiler found; header syntax not checked");
        return;
    };
    assert!(status.success());
}
