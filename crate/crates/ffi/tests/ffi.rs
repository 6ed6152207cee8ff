use std::ffi::{CStr, CString};
use std::path::Path;
use std::ptr;

use netepi_ffi::*;

fn last_error() -> String {
    let p = netepi_last_error_message();
    assert!(!p.is_null(), "an error message was recorded");
    let s = unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string();
    unsafe { netepi_string_free(p) };
    s
}

fn er(n: usize, p: f64, seed: u64) -> *mut NetepiGraph {
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { netepi_graph_er(n, p, seed, &mut g) }, NetepiStatus::Ok);
    g
}

#[test]
fn complete_graph_counts_and_betweenness() {
    let g = er(4, 1.0, 1);
    unsafe {
        assert_eq!(netepi_graph_node_count(g), 4);
        assert_eq!(netepi_graph_edge_count(g), 6);
        let mut buf = [f64::NAN; 4];
        assert_eq!(netepi_graph_betweenness(g, buf.as_mut_ptr(), 4), NetepiStatus::Ok);
        assert_eq!(buf, [0.0; 4]);
        let mut small = [0.0; 2];
        assert_eq!(netepi_graph_betweenness(g, small.as_mut_ptr(), 2), NetepiStatus::BufferTooSmall);
        assert!(last_error().contains("4 nodes"));
        netepi_graph_free(g);
    }
}

#[test]
fn invalid_arguments_and_null_handles() {
    let mut g = ptr::null_mut();
    unsafe {
        assert_eq!(netepi_graph_er(10, 1.5, 0, &mut g), NetepiStatus::InvalidArgument);
        assert!(g.is_null());
        assert!(!last_error().is_empty());
        assert_eq!(netepi_graph_er(10, 0.5, 0, ptr::null_mut()), NetepiStatus::NullPointer);
        assert_eq!(netepi_graph_node_count(ptr::null()), 0);
        assert_eq!(netepi_graph_betweenness(ptr::null(), ptr::null_mut(), 0), NetepiStatus::NullPointer);
        netepi_graph_free(ptr::null_mut());
        netepi_string_free(ptr::null_mut());
    }
}

#[test]
fn sbm_and_rgg_handles() {
    let sizes = [5usize, 7];
    let probs = [1.0, 0.0, 0.0, 1.0];
    let mut g = ptr::null_mut();
    unsafe {
        assert_eq!(netepi_graph_sbm(sizes.as_ptr(), 2, probs.as_ptr(), 3, &mut g), NetepiStatus::Ok);
        assert_eq!(netepi_graph_node_count(g), 12);
        assert_eq!(netepi_graph_edge_count(g), 10 + 21);
        netepi_graph_free(g);
        let mut h = ptr::null_mut();
        assert_eq!(netepi_graph_rgg(10, 1.5, 3, &mut h), NetepiStatus::Ok);
        assert_eq!(netepi_graph_edge_count(h), 45);
        netepi_graph_free(h);
    }
}

#[test]
fn save_and_load_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let g = er(30, 0.1, 8);
    for name in ["g.csv", "g.json"] {
        let path = CString::new(dir.path().join(name).to_str().unwrap()).unwrap();
        let mut back = ptr::null_mut();
        unsafe {
            assert_eq!(netepi_graph_save(g, path.as_ptr()), NetepiStatus::Ok);
            assert_eq!(netepi_graph_load(path.as_ptr(), &mut back), NetepiStatus::Ok);
            assert_eq!(netepi_graph_edge_count(back), netepi_graph_edge_count(g));
            netepi_graph_free(back);
        }
    }
    let missing = CString::new(dir.path().join("nope.csv").to_str().unwrap()).unwrap();
    let mut out = ptr::null_mut();
    unsafe {
        assert_eq!(netepi_graph_load(missing.as_ptr(), &mut out), NetepiStatus::Io);
        netepi_graph_free(g);
    }
}

#[test]
fn ensemble_attack_rate_matches_deterministic_case() {
    // beta_u = gamma = 1 on a connected graph infects everyone.
    let g = er(12, 1.0, 0);
    let params = NetepiParams { beta_u: 1.0, beta_v: 0.0, gamma: 1.0, mu_d: 0.0, mu_n: 0.0, p_vacc: 0.0 };
    let none = NetepiStrategy { kind: NetepiStrategyKind::None, coverage: 0.0 };
    let infected = [0usize];
    let (mut mean, mut std) = (0.0, 0.0);
    unsafe {
        let s = netepi_ensemble_attack_rate(g, &params, &none, infected.as_ptr(), 1, 10, 5, 42, &mut mean, &mut std);
        assert_eq!(s, NetepiStatus::Ok);
        assert_eq!((mean, std), (1.0, 0.0));
        let all = NetepiStrategy { kind: NetepiStrategyKind::TargetedBetweenness, coverage: 1.0 };
        let s = netepi_ensemble_attack_rate(g, &params, &all, infected.as_ptr(), 1, 10, 5, 42, &mut mean, ptr::null_mut());
        assert_eq!(s, NetepiStatus::Ok);
        assert!((mean - 1.0 / 12.0).abs() < 1e-15);
        let bad = NetepiParams { gamma: 2.0, ..params };
        let s = netepi_ensemble_attack_rate(g, &bad, &none, infected.as_ptr(), 1, 10, 5, 42, &mut mean, ptr::null_mut());
        assert_eq!(s, NetepiStatus::InvalidArgument);
        netepi_graph_free(g);
    }
}

#[test]
fn run_scenario_from_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = CString::new(
        r#"{"graph":{"generator":"barbell","clique":4,"bridge":1},
            "epidemic":{"beta_u":0.5,"beta_v":0.0,"gamma":0.3,"mu_d":0.0,"mu_n":0.0,"p_vacc":0.0},
            "initial_infected":{"nodes":[0]},
            "strategies":[{"strategy":"none"},{"strategy":"targeted","coverage":0.1}],
            "t_max":20,"n_runs":4,"root_seed":1,
            "gcn":{"epochs":5,"hidden":4},
            "xai":{"ig_steps":4,"counterfactual_runs":2}}"#,
    )
    .unwrap();
    let out = CString::new(dir.path().join("run").to_str().unwrap()).unwrap();
    unsafe {
        assert_eq!(netepi_run_scenario(cfg.as_ptr(), out.as_ptr()), NetepiStatus::Ok);
    }
    assert!(dir.path().join("run").join("manifest.json").is_file());
    let bad = CString::new(r#"{"graph":1}"#).unwrap();
    unsafe {
        assert_eq!(netepi_run_scenario(bad.as_ptr(), out.as_ptr()), NetepiStatus::Config);
        assert_eq!(netepi_run_scenario(ptr::null(), out.as_ptr()), NetepiStatus::NullPointer);
    }
}

#[test]
fn errors_are_thread_local() {
    let mut g = ptr::null_mut();
    unsafe { netepi_graph_er(3, -1.0, 0, &mut g) };
    std::thread::spawn(|| assert!(netepi_last_error_message().is_null()))
        .join()
        .unwrap();
    assert!(!last_error().is_empty());
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(netepi_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_every_export_and_compiles() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include").join("netepi.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for sym in [
        "netepi_graph_er",
        "netepi_graph_sbm",
        "netepi_graph_rgg",
        "netepi_graph_load",
        "netepi_graph_save",
        "netepi_graph_node_count",
        "netepi_graph_edge_count",
        "netepi_graph_betweenness",
        "netepi_graph_free",
        "netepi_ensemble_attack_rate",
        "netepi_run_scenario",
        "netepi_last_error_message",
        "netepi_string_free",
        "netepi_version",
        "typedef struct NetepiGraph NetepiGraph;",
    ] {
        assert!(text.contains(sym), "header lacks {sym}");
    }
    // Syntax-check the header as C and C++ when a compiler is installed.
    for (compiler, lang) in [("cc", "c"), ("c++", "c++")] {
        let status = std::process::Command::new(compiler)
            .args(["-fsyntax-only", "-Wall", "-Werror", "-x", lang])
            .arg(&header)
            .status();
        if let Ok(status) = status {
            assert!(status.success(), "{compiler} rejects the header");
        }
    }
}
