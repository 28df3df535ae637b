use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use manetga_ffi::*;

fn scenario_text(name: &str) -> CString {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/scenarios").join(name);
    CString::new(std::fs::read_to_string(p).unwrap()).unwrap()
}

fn parse(text: &CString) -> *mut MgScenario {
    let mut sc = ptr::null_mut();
    assert_eq!(unsafe { mg_scenario_parse(text.as_ptr(), &mut sc) }, MgStatus::Ok);
    assert!(!sc.is_null());
    sc
}

fn take(s: *mut c_char) -> String {
    let out = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_string();
    unsafe { mg_string_free(s) };
    out
}

fn last_error() -> String {
    let p = mg_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn parse_error_reports_line() {
    let bad = CString::new("node 1 0 0\nfrobnicate\n").unwrap();
    let mut sc = ptr::null_mut();
    let st = unsafe { mg_scenario_parse(bad.as_ptr(), &mut sc) };
    assert_eq!(st, MgStatus::Scenario);
    assert!(sc.is_null());
    assert!(last_error().starts_with("line 2:"));
}

#[test]
fn null_arguments_are_rejected() {
    let mut sc = ptr::null_mut();
    assert_eq!(unsafe { mg_scenario_parse(ptr::null(), &mut sc) }, MgStatus::NullArgument);
    let mut r = ptr::null_mut();
    assert_eq!(unsafe { mg_simulate(ptr::null(), &mut r) }, MgStatus::NullArgument);
    assert!(unsafe { mg_report_delivery_ratio(ptr::null()) }.is_nan());
    assert_eq!(unsafe { mg_optimize_weights(ptr::null(), ptr::null_mut(), 0) }, 0);
    unsafe {
        mg_scenario_free(ptr::null_mut());
        mg_report_free(ptr::null_mut());
        mg_optimize_free(ptr::null_mut());
        mg_string_free(ptr::null_mut());
    }
}

#[test]
fn success_clears_last_error() {
    let bad = CString::new("bogus\n").unwrap();
    let mut sc = ptr::null_mut();
    unsafe { mg_scenario_parse(bad.as_ptr(), &mut sc) };
    assert!(!mg_last_error().is_null());
    let sc = parse(&scenario_text("square_failover.scn"));
    assert!(mg_last_error().is_null());
    unsafe { mg_scenario_free(sc) };
}

#[test]
fn simulate_matches_the_library() {
    let text = scenario_text("blackhole.scn");
    let sc = parse(&text);
    let expected = manetga::run(&manetga::parse_scenario(text.to_str().unwrap()).unwrap()).unwrap();
    for (defense, ratio) in [(false, 0.0), (true, 1.0)] {
        assert_eq!(unsafe { mg_scenario_set_defense(sc, defense) }, MgStatus::Ok);
        let mut r = ptr::null_mut();
        assert_eq!(unsafe { mg_simulate(sc, &mut r) }, MgStatus::Ok);
        assert_eq!(unsafe { mg_report_delivery_ratio(r) }, ratio);
        let mut s = ptr::null_mut();
        assert_eq!(unsafe { mg_report_summary_csv(r, &mut s) }, MgStatus::Ok);
        let summary = take(s);
        if !defense {
            assert_eq!(summary, manetga::report::summary_csv(&expected.report));
        }
        let mut log = ptr::null_mut();
        assert_eq!(unsafe { mg_report_events_log(r, &mut log) }, MgStatus::Ok);
        assert!(!take(log).is_empty());
        unsafe { mg_report_free(r) };
    }
    unsafe { mg_scenario_free(sc) };
}

#[test]
fn optimize_and_evaluate_agree() {
    let sc = parse(&scenario_text("square_optimize.scn"));
    let mut res = ptr::null_mut();
    assert_eq!(unsafe { mg_optimize(sc, &mut res) }, MgStatus::Ok);
    let best = unsafe { mg_optimize_fitness(res) };
    assert!((best - 1.0 / 18.0).abs() < 1e-12);

    let n = unsafe { mg_optimize_weights(res, ptr::null_mut(), 0) };
    let mut w = vec![0u32; n];
    assert_eq!(unsafe { mg_optimize_weights(res, w.as_mut_ptr(), n) }, n);
    let mut f = 0.0;
    assert_eq!(unsafe { mg_evaluate_weights(sc, w.as_ptr(), n, &mut f) }, MgStatus::Ok);
    assert_eq!(f, best);

    let mut p = ptr::null_mut();
    assert_eq!(unsafe { mg_optimize_paths_csv(res, &mut p) }, MgStatus::Ok);
    assert!(take(p).contains("1-2-4,1-3-4"));

    assert_eq!(
        unsafe { mg_evaluate_weights(sc, w.as_ptr(), n - 1, &mut f) },
        MgStatus::InvalidArgument
    );
    w[0] = 0;
    assert_eq!(unsafe { mg_evaluate_weights(sc, w.as_ptr(), n, &mut f) }, MgStatus::InvalidArgument);
    unsafe {
        mg_optimize_free(res);
        mg_scenario_free(sc);
    }
}

#[test]
fn optimize_without_demands_is_invalid() {
    let text = CString::new("node 1 0 0\nnode 2 1 0\nlink 1 2 5\n").unwrap();
    let sc = parse(&text);
    let mut res = ptr::null_mut();
    assert_eq!(unsafe { mg_optimize(sc, &mut res) }, MgStatus::InvalidArgument);
    assert!(res.is_null());
    unsafe { mg_scenario_free(sc) };
}

#[test]
fn render_round_trips() {
    let sc = parse(&scenario_text("linkspoof.scn"));
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { mg_scenario_render(sc, &mut s) }, MgStatus::Ok);
    let text = CString::new(take(s)).unwrap();
    let again = parse(&text);
    let (mut a, mut b) = (ptr::null_mut(), ptr::null_mut());
    unsafe {
        mg_simulate(sc, &mut a);
        mg_simulate(again, &mut b);
    }
    let (mut la, mut lb) = (ptr::null_mut(), ptr::null_mut());
    unsafe {
        mg_report_events_log(a, &mut la);
        mg_report_events_log(b, &mut lb);
    }
    assert_eq!(take(la), take(lb));
    unsafe {
        mg_report_free(a);
        mg_report_free(b);
        mg_scenario_free(sc);
        mg_scenario_free(again);
    }
}

#[test]
fn header_declares_the_api_and_compiles() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let header = std::fs::read_to_string(dir.join("manetga.h")).unwrap();
    for sym in [
        "mg_scenario_parse",
        "mg_simulate",
        "mg_optimize",
        "mg_evaluate_weights",
        "mg_last_error",
        "MG_STATUS_SCENARIO",
        "typedef struct MgScenario MgScenario",
    ] {
        assert!(header.contains(sym), "{sym}");
    }
    let Ok(cc) = Command::new("cc").arg("--version").output() else {
        eprintln!("no C compiler; skipping syntax check");
        return;
    };
    assert!(cc.status.success());
    let probe = tempfile_path("probe.c");
    std::fs::write(&probe, "#include \"manetga.h\"\nint main(void) { return mg_last_error() != 0; }\n").unwrap();
    let st = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(&dir)
        .arg(&probe)
        .status()
        .unwrap();
    assert!(st.success());
}

fn tempfile_path(name: &str) -> std::path::PathBuf {
    let d = std::env::temp_dir().join(format!("manetga-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d.join(name)
}

/// Link a C program against the static library and run it.
#[test]
fn c_client_links_and_runs() {
    if Command::new("cc").arg("--version").output().is_err() {
        eprintln!("no C compiler; skipping");
        return;
    }
    // The test binary lives in <target>/<profile>/deps.
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().unwrap().parent().unwrap();
    let lib = profile_dir.join("libmanetga_ffi.a");
    if !lib.is_file() {
        eprintln!("{} not built; skipping", lib.display());
        return;
    }
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let bin = tempfile_path("c_client");
    let st = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-I"])
        .arg(root.join("include"))
        .arg(root.join("tests/c_client.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(st.success(), "link failed");
    let out = Command::new(&bin).output().unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "exit {:?}: {stdout}", out.status.code());
    assert!(stdout.starts_with("ratio 1.000\ndelivery_ratio,"));
}
