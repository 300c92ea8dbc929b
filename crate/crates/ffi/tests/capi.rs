use std::ffi::{CStr, CString};
use std::ptr;

use trotterprof_ffi::*;

fn last_error() -> String {
    let p = tp_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn preset(name: &str) -> *mut TpExperiment {
    let name = CString::new(name).unwrap();
    let mut exp = ptr::null_mut();
    assert_eq!(
        unsafe { tp_experiment_from_preset(name.as_ptr(), &mut exp) },
        TpStatus::Ok
    );
    assert!(!exp.is_null());
    exp
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(tp_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn curve_round_trip() {
    let exp = preset("tfim-suzuki4");
    unsafe {
        let mut curve = ptr::null_mut();
        assert_eq!(
            tp_experiment_run_error_curve(exp, TP_METHOD_EP, &mut curve),
            TpStatus::Ok
        );
        assert_eq!(tp_curve_len(curve), 20);
        let mut p = TpCurvePoint::default();
        assert_eq!(tp_curve_point(curve, 0, &mut p), TpStatus::Ok);
        assert!((p.t - 0.1).abs() < 1e-15);
        assert_eq!(p.abs_error, (p.estimate - p.exact).abs());
        let mut exact = 0.0;
        assert_eq!(
            tp_experiment_exact_value(exp, p.t, &mut exact),
            TpStatus::Ok
        );
        assert_eq!(exact, p.exact);
        let mut est = 0.0;
        assert_eq!(
            tp_experiment_mitigated_estimate(exp, p.t, &mut est),
            TpStatus::Ok
        );
        assert_eq!(est, p.estimate);

        let mut slope = 0.0;
        assert_eq!(tp_curve_slope(curve, 0.1, 1.0, &mut slope), TpStatus::Ok);
        assert!(slope > 6.0, "{slope}");

        assert_eq!(tp_curve_point(curve, 20, &mut p), TpStatus::InvalidArgument);
        assert!(last_error().contains("index 20"));
        tp_curve_free(curve);
        tp_experiment_free(exp);
    }
}

#[test]
fn weights_buffer_protocol() {
    let exp = preset("tfim-ruth3");
    unsafe {
        let mut len = 0;
        assert_eq!(
            tp_experiment_mpf_weights(exp, ptr::null_mut(), 0, &mut len),
            TpStatus::BufferTooSmall
        );
        assert_eq!(len, 2);
        let mut buf = vec![0.0; len];
        assert_eq!(
            tp_experiment_mpf_weights(exp, buf.as_mut_ptr(), buf.len(), &mut len),
            TpStatus::Ok
        );
        assert!((buf[0] + 1.0 / 7.0).abs() < 1e-15 && (buf[1] - 8.0 / 7.0).abs() < 1e-15);
        tp_experiment_free(exp);
    }
}

#[test]
fn error_codes() {
    unsafe {
        let mut exp = ptr::null_mut();
        let bad = CString::new("tfim-ruth9").unwrap();
        assert_eq!(
            tp_experiment_from_preset(bad.as_ptr(), &mut exp),
            TpStatus::ConfigError
        );
        assert!(exp.is_null());
        assert!(last_error().contains("tfim-ruth9"));

        let text = CString::new("partition = [[0]").unwrap();
        assert_eq!(
            tp_experiment_from_config(text.as_ptr(), &mut exp),
            TpStatus::ConfigError
        );
        assert!(last_error().contains("line"));

        assert_eq!(
            tp_experiment_from_preset(ptr::null(), &mut exp),
            TpStatus::NullPointer
        );
        assert_eq!(
            tp_experiment_from_preset(bad.as_ptr(), ptr::null_mut()),
            TpStatus::NullPointer
        );

        let exp = preset("xxz-ruth3");
        let mut curve = ptr::null_mut();
        assert_eq!(
            tp_experiment_run_error_curve(exp, 9, &mut curve),
            TpStatus::InvalidArgument
        );
        assert!(curve.is_null());
        let mut out = 0.0;
        assert_eq!(
            tp_experiment_mitigated_estimate(exp, 0.2, ptr::null_mut()),
            TpStatus::NullPointer
        );
        assert_eq!(
            tp_experiment_exact_value(ptr::null(), 0.2, &mut out),
            TpStatus::NullPointer
        );
        assert_eq!(tp_curve_len(ptr::null()), 0);
        tp_experiment_free(exp);
        tp_experiment_free(ptr::null_mut());
        tp_curve_free(ptr::null_mut());
    }
}

#[test]
fn success_clears_last_error() {
    let mut exp = ptr::null_mut();
    unsafe { tp_experiment_from_preset(ptr::null(), &mut exp) };
    assert!(!tp_last_error().is_null());
    let (mut num, mut den) = (0, 0);
    assert_eq!(
        unsafe { tp_critical_n(4, true, &mut num, &mut den) },
        TpStatus::Ok
    );
    assert!(tp_last_error().is_null());
    assert_eq!((num, den), (3, 2));
    assert_eq!(
        unsafe { tp_critical_n(3, false, &mut num, &mut den) },
        TpStatus::Ok
    );
    assert_eq!((num, den), (2, 1));
}

#[test]
fn shared_handle_across_threads() {
    struct Shared(*mut TpExperiment);
    unsafe impl Sync for Shared {}
    impl Shared {
        fn get(&self) -> *const TpExperiment {
            self.0
        }
    }
    let exp = Shared(preset("tfim-ruth3"));
    let values: Vec<f64> = std::thread::scope(|s| {
        let hs: Vec<_> = (0..4)
            .map(|_| {
                s.spawn(|| {
                    let mut v = 0.0;
                    assert_eq!(
                        unsafe { tp_experiment_mitigated_estimate(exp.get(), 0.3, &mut v) },
                        TpStatus::Ok
                    );
                    v
                })
            })
            .collect();
        hs.into_iter().map(|h| h.join().unwrap()).collect()
    });
    assert!(values.iter().all(|&v| v == values[0]));
    unsafe { tp_experiment_free(exp.0) };
}

#[test]
fn header_declares_every_export() {
    let header = include_str!("../include/trotterprof.h");
    for name in [
        "tp_version",
        "tp_last_error",
        "tp_experiment_from_preset",
        "tp_experiment_from_config",
        "tp_experiment_free",
        "tp_experiment_run_error_curve",
        "tp_experiment_mitigated_estimate",
        "tp_experiment_exact_value",
        "tp_experiment_mpf_weights",
        "tp_curve_len",
        "tp_curve_point",
        "tp_curve_slope",
        "tp_curve_free",
        "tp_critical_n",
        "TP_STATUS_BUFFER_TOO_SMALL",
        "TP_METHOD_MPF",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}
