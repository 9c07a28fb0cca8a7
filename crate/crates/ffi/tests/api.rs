use std::ffi::{CStr, CString};
use std::ptr;

use kymh_ffi::*;

fn last_error() -> String {
    let p = kymh_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn grid_lifecycle() {
    let g = kymh_grid_new(33);
    assert!(!g.is_null());
    unsafe {
        assert_eq!(kymh_grid_len(g), 33);
        let mut nodes = vec![0.0; 33];
        assert_eq!(kymh_grid_nodes(g, nodes.as_mut_ptr(), 33), KymhStatus::Ok);
        assert_eq!(nodes[0].abs(), 1.0);
        assert_eq!(kymh_grid_nodes(g, nodes.as_mut_ptr(), 32), KymhStatus::BufferTooSmall);
        assert_eq!(kymh_grid_nodes(g, ptr::null_mut(), 33), KymhStatus::NullPointer);
        kymh_grid_free(g);
        kymh_grid_free(ptr::null_mut());
        assert_eq!(kymh_grid_len(ptr::null()), 0);
    }
    assert!(kymh_grid_new(4).is_null());
    assert!(last_error().contains("odd"), "{}", last_error());
}

#[test]
fn futaki_entry_points_agree() {
    let (d, e) = ([2u32, 2], [1u32, 0]);
    let g = kymh_grid_new(257);
    let (mut closed, mut quad) = (0.0, 0.0);
    unsafe {
        assert_eq!(kymh_futaki_closed_form(d.as_ptr(), e.as_ptr(), 5.0, 1.0, &mut closed), KymhStatus::Ok);
        assert_eq!(kymh_futaki_quadrature(g, d.as_ptr(), e.as_ptr(), 5.0, 1.0, &mut quad), KymhStatus::Ok);
        kymh_grid_free(g);
    }
    assert!((closed - 4.0 * std::f64::consts::PI).abs() < 1e-12);
    assert!((quad - closed).abs() <= 1e-6 * closed);
    let bad = [3u32, 2];
    let status = unsafe { kymh_futaki_closed_form(bad.as_ptr(), e.as_ptr(), 5.0, 1.0, &mut closed) };
    assert_eq!(status, KymhStatus::InvalidArgument);
    assert!(last_error().contains("N1 <= N2"));
}

#[test]
fn vortex_solve_and_status_codes() {
    let g = kymh_grid_new(129);
    let mut v = vec![0.0; 129];
    let mut s = KymhSolveSummary::default();
    unsafe {
        let st = kymh_solve_vortex(g, 1, 0, 3.0, 1e-10, 15, v.as_mut_ptr(), 129, &mut s);
        assert_eq!(st, KymhStatus::Ok);
        assert!(s.converged && s.iterations <= 15 && s.residual_sup < 1e-10);
        let st = kymh_solve_vortex(g, 1, 0, 3.0, 1e-10, 1, v.as_mut_ptr(), 129, &mut s);
        assert_eq!(st, KymhStatus::NotConverged);
        let st = kymh_solve_vortex(g, 2, 0, 3.0, 1e-10, 15, v.as_mut_ptr(), 129, ptr::null_mut());
        assert_eq!(st, KymhStatus::Infeasible);
        let st = kymh_solve_vortex(ptr::null(), 1, 0, 3.0, 1e-10, 15, v.as_mut_ptr(), 129, &mut s);
        assert_eq!(st, KymhStatus::NullPointer);
        kymh_grid_free(g);
    }
}

#[test]
fn json_entry_points() {
    let cfg = CString::new(r#"{"degrees":[1],"exponents":[0],"tau":3,"alpha":0}"#).unwrap();
    let mut out = ptr::null_mut();
    unsafe {
        assert_eq!(kymh_stability_json(cfg.as_ptr(), &mut out), KymhStatus::Ok);
        let text = CStr::from_ptr(out).to_str().unwrap().to_owned();
        kymh_string_free(out);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["automorphisms"]["kind"], "non_reductive_borel");

        let bad = CString::new("{").unwrap();
        assert_eq!(kymh_stability_json(bad.as_ptr(), &mut out), KymhStatus::InvalidArgument);
        assert_eq!(kymh_stability_json(ptr::null(), &mut out), KymhStatus::NullPointer);

        let run = CString::new(
            r#"{"command":"solve-gravitating","degrees":[1],"exponents":[0],"tau":3,"schedule":[0]}"#,
        )
        .unwrap();
        let mut code = -1;
        assert_eq!(kymh_run_json(run.as_ptr(), false, &mut out, &mut code), KymhStatus::Ok);
        let text = CStr::from_ptr(out).to_str().unwrap().to_owned();
        kymh_string_free(out);
        assert_eq!(code, 2);
        assert!(text.contains("If φ has only one zero"));

        let usage = CString::new(r#"{"command":"futaki","n":128}"#).unwrap();
        assert_eq!(kymh_run_json(usage.as_ptr(), false, &mut out, &mut code), KymhStatus::InvalidArgument);
        assert_eq!(code, 1);
        assert!(last_error().contains("n must be odd"));
    }
}

#[test]
fn version_is_static() {
    let v = unsafe { CStr::from_ptr(kymh_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
