use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use subspace_ffi::*;

fn last_error() -> String {
    let p = subspace_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn instance(rows: &[f64], m: usize, n: usize, k: usize, p: f64) -> *mut SubspaceInstance {
    let mut inst = ptr::null_mut();
    let s = unsafe { subspace_instance_new(rows.as_ptr(), m, n, ptr::null(), ptr::null(), k, p, &mut inst) };
    assert_eq!(s, SubspaceStatus::Ok);
    inst
}

#[test]
fn p2_pipeline_matches_svd() {
    // Rows of A; A^T A = diag(1, 4) + ones, smallest eigenvalue (7 - sqrt(13)) / 2.
    let rows = [1.0, 0.0, 0.0, 2.0, 1.0, 1.0];
    let inst = instance(&rows, 3, 2, 1, 2.0);
    let want = ((7.0 - 13f64.sqrt()) / 2.0).sqrt();
    unsafe {
        let mut svd = 0.0;
        assert_eq!(subspace_svd_value(inst, &mut svd), SubspaceStatus::Ok);
        assert!((svd - want).abs() < 1e-12);

        let mut relax = ptr::null_mut();
        assert_eq!(subspace_solve(inst, ptr::null(), &mut relax), SubspaceStatus::Ok);
        let (mut value, mut iters, mut conv) = (0.0, 0usize, false);
        assert_eq!(
            subspace_relaxation_info(relax, &mut value, &mut iters, &mut conv),
            SubspaceStatus::Ok
        );
        assert!(conv && (value - want).abs() < 1e-6 * want);

        let mut x = [0.0; 4];
        assert_eq!(
            subspace_relaxation_matrix(relax, x.as_mut_ptr(), 3),
            SubspaceStatus::BufferTooSmall
        );
        assert_eq!(subspace_relaxation_matrix(relax, x.as_mut_ptr(), 4), SubspaceStatus::Ok);
        assert_eq!(x[1], x[2]);
        assert!((x[0] + x[3] - 1.0).abs() < 1e-8);

        let mut sol = ptr::null_mut();
        assert_eq!(subspace_round(inst, relax, 8, 3, &mut sol), SubspaceStatus::Ok);
        let (mut cost, mut best, mut r, mut c) = (0.0, 0usize, 0usize, 0usize);
        assert_eq!(
            subspace_solution_info(sol, &mut cost, &mut best, &mut r, &mut c),
            SubspaceStatus::Ok
        );
        assert_eq!((r, c), (2, 1));
        assert!(best < 8);
        let mut z = [0.0; 2];
        assert_eq!(subspace_solution_basis(sol, z.as_mut_ptr(), 2), SubspaceStatus::Ok);
        let mut again = 0.0;
        assert_eq!(subspace_cost_of(inst, z.as_ptr(), 2, &mut again), SubspaceStatus::Ok);
        assert!((again - cost).abs() < 1e-12 && (cost - want).abs() < 1e-6 * want);

        subspace_solution_free(sol);
        subspace_relaxation_free(relax);
        subspace_instance_free(inst);
    }
}

#[test]
fn errors_map_to_status_codes() {
    let rows = [1.0, 2.0];
    let mut inst = ptr::null_mut();
    unsafe {
        let s = subspace_instance_new(rows.as_ptr(), 1, 2, ptr::null(), ptr::null(), 2, 2.0, &mut inst);
        assert_eq!(s, SubspaceStatus::InvalidArgument);
        assert!(inst.is_null());
        assert!(last_error().contains("k must satisfy"));

        let s = subspace_instance_new(ptr::null(), 1, 2, ptr::null(), ptr::null(), 0, 2.0, &mut inst);
        assert_eq!(s, SubspaceStatus::NullPointer);

        let bad_w = [1.0, -1.0];
        let s = subspace_instance_new(rows.as_ptr(), 1, 2, ptr::null(), bad_w.as_ptr(), 0, 2.0, &mut inst);
        assert_eq!(s, SubspaceStatus::InvalidArgument);

        let mut g = 0.0;
        assert_eq!(subspace_gamma_p(0.5, &mut g), SubspaceStatus::InvalidArgument);
        assert_eq!(subspace_gamma_p(2.0, ptr::null_mut()), SubspaceStatus::NullPointer);

        let inst = instance(&rows, 1, 2, 0, 3.0);
        let z = [1.0, 0.0, 0.0, 1.0];
        let mut v = 0.0;
        assert_eq!(
            subspace_cost_of(inst, z.as_ptr(), 3, &mut v),
            SubspaceStatus::DimensionMismatch
        );
        let skew = [1.0, 1.0, 0.0, 1.0];
        assert_eq!(
            subspace_cost_of(inst, skew.as_ptr(), 4, &mut v),
            SubspaceStatus::DimensionMismatch
        );
        assert_eq!(subspace_cost_of(inst, z.as_ptr(), 4, &mut v), SubspaceStatus::Ok);
        assert!((v - 5f64.sqrt()).abs() < 1e-12);
        subspace_instance_free(inst);

        let missing = CString::new("/nonexistent/instance.json").unwrap();
        let mut loaded = ptr::null_mut();
        assert_eq!(
            subspace_instance_load(missing.as_ptr(), &mut loaded),
            SubspaceStatus::Io
        );
        assert!(loaded.is_null());

        subspace_instance_free(ptr::null_mut());
        subspace_relaxation_free(ptr::null_mut());
        subspace_solution_free(ptr::null_mut());
    }
}

#[test]
fn scalar_helpers() {
    let mut g = 0.0;
    let mut b = 0.0;
    unsafe {
        assert_eq!(subspace_gamma_p(4.0, &mut g), SubspaceStatus::Ok);
        assert!((g.powi(4) - 3.0).abs() < 1e-12);
        assert_eq!(subspace_expected_ratio_bound(4, 3, 4.0, &mut b), SubspaceStatus::Ok);
        assert!((b - g).abs() < 1e-12);
    }
    let v = unsafe { CStr::from_ptr(subspace_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
    let d = subspace_solver_options_default();
    assert!(d.max_iters > 0 && d.tol > 0.0 && d.tol < 1.0);
}

#[test]
fn load_round_trip_via_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("i.json");
    std::fs::write(
        &path,
        r#"{"m": 2, "n": 2, "k": 1, "p": 4.0, "rows": [[1.0, 0.0], [0.0, 3.0]]}"#,
    )
    .unwrap();
    let c = CString::new(path.to_str().unwrap()).unwrap();
    let mut inst = ptr::null_mut();
    unsafe {
        assert_eq!(subspace_instance_load(c.as_ptr(), &mut inst), SubspaceStatus::Ok);
        let (mut m, mut n, mut k, mut p) = (0, 0, 0, 0.0);
        assert_eq!(
            subspace_instance_shape(inst, &mut m, &mut n, &mut k, &mut p),
            SubspaceStatus::Ok
        );
        assert_eq!((m, n, k, p), (2, 2, 1, 4.0));
        subspace_instance_free(inst);
    }
}

fn target_dir() -> PathBuf {
    // tests run from <target>/<profile>/deps/
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn header_compiles_and_links_from_c() {
    let crate_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let staticlib = target_dir().join("libsubspace_ffi.a");
    assert!(staticlib.exists(), "missing {}", staticlib.display());
    let out = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("subspace_smoke");
    let status = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(crate_dir.join("include"))
        .arg(crate_dir.join("tests/c/smoke.c"))
        .arg(&staticlib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&out)
        .status()
        .expect("run cc");
    assert!(status.success());
    let run = Command::new(&out).output().unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(String::from_utf8_lossy(&run.stdout).starts_with("ok "));
}
