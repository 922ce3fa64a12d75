use std::ffi::CStr;
use std::ptr;

use insdvl_ffi::*;

const IDENTITY: [f64; 9] = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];

fn new_filter(mode: InsdvlMode) -> *mut InsdvlFilter {
    let mut h = ptr::null_mut();
    let v = [1.0, 0.0, 0.0];
    let s = unsafe { insdvl_filter_new(mode, 0.0, 0.5, v.as_ptr(), IDENTITY.as_ptr(), &mut h) };
    assert_eq!(s, InsdvlStatus::Ok);
    assert!(!h.is_null());
    h
}

fn last_error() -> String {
    let mut buf = [0 as std::ffi::c_char; 256];
    let n = unsafe { insdvl_last_error(buf.as_mut_ptr(), buf.len()) };
    let s = unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned();
    assert_eq!(s.len(), n.min(255));
    s
}

#[test]
fn filter_lifecycle_runs_and_shrinks_sigma() {
    for mode in [InsdvlMode::Baseline, InsdvlMode::Acceleration] {
        let h = new_filter(mode);
        let g = 9.80665;
        let f = [0.0, 0.0, -g];
        let w = [0.0, 0.0, 0.0];
        let v = [1.0, 0.0, 0.0];
        let mut s0 = [0.0; 12];
        unsafe { insdvl_filter_sigmas(h, s0.as_mut_ptr()) };
        for k in 1..=3000 {
            assert_eq!(
                unsafe { insdvl_filter_propagate(h, f.as_ptr(), w.as_ptr(), 0.01) },
                InsdvlStatus::Ok
            );
            if k % 100 == 0 {
                assert_eq!(unsafe { insdvl_filter_dvl_update(h, v.as_ptr()) }, InsdvlStatus::Ok);
            }
        }
        let mut t = 0.0;
        let mut s = [0.0; 12];
        let mut vel = [0.0; 3];
        let mut att = [0.0; 9];
        let mut bias = [0.0; 6];
        unsafe {
            assert_eq!(insdvl_filter_time(h, &mut t), InsdvlStatus::Ok);
            assert_eq!(insdvl_filter_sigmas(h, s.as_mut_ptr()), InsdvlStatus::Ok);
            assert_eq!(insdvl_filter_velocity(h, vel.as_mut_ptr()), InsdvlStatus::Ok);
            assert_eq!(insdvl_filter_attitude(h, att.as_mut_ptr()), InsdvlStatus::Ok);
            assert_eq!(insdvl_filter_bias(h, bias.as_mut_ptr()), InsdvlStatus::Ok);
            insdvl_filter_free(h);
        }
        assert!((t - 30.0).abs() < 1e-9);
        assert!(s[0] < 0.25 * s0[0], "{s:?}");
        assert!((vel[0] - 1.0).abs() < 0.05, "{vel:?}");
        assert!(att.iter().zip(IDENTITY).all(|(a, b)| (a - b).abs() < 0.05));
        assert!(bias.iter().all(|b| b.is_finite()));
    }
}

#[test]
fn null_pointers_are_reported() {
    let v = [0.0; 3];
    unsafe {
        assert_eq!(
            insdvl_filter_new(
                InsdvlMode::Baseline,
                0.0,
                0.5,
                v.as_ptr(),
                IDENTITY.as_ptr(),
                ptr::null_mut()
            ),
            InsdvlStatus::NullPointer
        );
        assert_eq!(
            insdvl_filter_dvl_update(ptr::null_mut(), v.as_ptr()),
            InsdvlStatus::NullPointer
        );
        let h = new_filter(InsdvlMode::Baseline);
        assert_eq!(insdvl_filter_sigmas(h, ptr::null_mut()), InsdvlStatus::NullPointer);
        assert!(last_error().contains("null"));
        insdvl_filter_free(h);
        insdvl_filter_free(ptr::null_mut());
    }
}

#[test]
fn invalid_arguments_map_to_codes() {
    let mut h = ptr::null_mut();
    let v = [0.0; 3];
    let bad = [2.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
    unsafe {
        let s = insdvl_filter_new(InsdvlMode::Baseline, 0.0, 0.5, v.as_ptr(), bad.as_ptr(), &mut h);
        assert_eq!(s, InsdvlStatus::InvalidArgument);
        assert!(h.is_null());
        let h = new_filter(InsdvlMode::Baseline);
        let f = [f64::NAN, 0.0, 0.0];
        assert_ne!(
            insdvl_filter_propagate(h, f.as_ptr(), v.as_ptr(), 0.01),
            InsdvlStatus::Ok
        );
        assert_eq!(
            insdvl_filter_propagate(h, v.as_ptr(), v.as_ptr(), -1.0),
            InsdvlStatus::InvalidArgument
        );
        insdvl_filter_free(h);
        let beams = [0.0; 4];
        let mut out = [0.0; 3];
        assert_eq!(
            insdvl_ls_velocity(0.0, beams.as_ptr(), out.as_mut_ptr()),
            InsdvlStatus::SingularMatrix
        );
    }
}

#[test]
fn beam_inversion_and_acceleration_helpers() {
    let pitch = 20f64.to_radians();
    let (sa, ca) = pitch.sin_cos();
    let v = [0.4, -0.3, 0.1];
    let beams: Vec<f64> = [45f64, 135.0, 225.0, 315.0]
        .iter()
        .map(|az| {
            let (sp, cp) = az.to_radians().sin_cos();
            sa * cp * v[0] + sa * sp * v[1] + ca * v[2]
        })
        .collect();
    let mut out = [0.0; 3];
    assert_eq!(
        unsafe { insdvl_ls_velocity(pitch, beams.as_ptr(), out.as_mut_ptr()) },
        InsdvlStatus::Ok
    );
    assert!(out.iter().zip(v).all(|(a, b)| (a - b).abs() < 1e-12));

    let times = [0.0, 1.0, 2.0];
    let vel = [0.0, 0.0, 0.0, 0.5, 1.0, -1.0, 1.0, 2.0, -2.0];
    let mut a = [0.0; 3];
    let s = unsafe { insdvl_extract_acceleration(times.as_ptr(), vel.as_ptr(), 3, a.as_mut_ptr()) };
    assert_eq!(s, InsdvlStatus::Ok);
    assert!((a[0] - 0.5).abs() < 1e-12 && (a[1] - 1.0).abs() < 1e-12 && (a[2] + 1.0).abs() < 1e-12);
    let s = unsafe { insdvl_extract_acceleration(times.as_ptr(), vel.as_ptr(), 1, a.as_mut_ptr()) };
    assert_ne!(s, InsdvlStatus::Ok);
}

#[test]
fn status_messages_are_static_strings() {
    for s in [InsdvlStatus::Ok, InsdvlStatus::NullPointer, InsdvlStatus::Internal] {
        let m = unsafe { CStr::from_ptr(insdvl_status_message(s)) };
        assert!(!m.to_bytes().is_empty());
    }
}

#[test]
fn header_declares_the_api() {
    let h = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/insdvl.h")).unwrap();
    for name in [
        "insdvl_filter_new",
        "insdvl_filter_free",
        "insdvl_filter_propagate",
        "insdvl_filter_dvl_update",
        "insdvl_filter_sigmas",
        "insdvl_ls_velocity",
        "insdvl_extract_acceleration",
        "insdvl_last_error",
        "typedef struct InsdvlFilter InsdvlFilter",
        "INSDVL_STATUS_OK = 0",
    ] {
        assert!(h.contains(name), "{name}");
    }
}

#[test]
fn header_compiles_as_c() {
    let Some(cc) = ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| std::process::Command::new(c).arg("--version").output().is_ok())
    else {
        eprintln!("no C compiler found; skipping header compile check");
        return;
    };
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("t.c");
    std::fs::write(
        &src,
        "#include \"insdvl.h\"\nint main(void) { InsdvlFilter *h = 0; insdvl_filter_free(h); return 0; }\n",
    )
    .unwrap();
    let out = std::process::Command::new(cc)
        .args([
            "-std=c99",
            "-Wall",
            "-Werror",
            "-fsyntax-only",
            "-I",
            concat!(env!("CARGO_MANIFEST_DIR"), "/include"),
        ])
        .arg(&src)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
