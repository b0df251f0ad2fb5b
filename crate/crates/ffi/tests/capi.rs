use std::ffi::{CStr, CString};
use std::ptr;

use ffino::datagen::{generate_dataset, write_dataset, GenConfig, Target};
use ffino::model::{save_checkpoint, FfinoModel, ModelConfig};
use ffino_ffi::*;

const CASE_A: FfinoRelPerm = FfinoRelPerm {
    krw_max: 0.768,
    krg_max: 0.031,
    swi: 0.50,
    sgr: 0.03,
    m: 3.808,
    n: 1.052,
};

fn last_error() -> String {
    let p = ffino_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn mbc_endpoints_through_c_abi() {
    let (mut w, mut g) = (f64::NAN, f64::NAN);
    let s = unsafe { ffino_mbc_eval(&CASE_A, 1.0 - CASE_A.sgr, &mut w, &mut g) };
    assert_eq!(s, FfinoStatus::Ok);
    assert_eq!((w, g), (CASE_A.krw_max, 0.0));
}

#[test]
fn invalid_coefficients_set_message() {
    let mut bad = CASE_A;
    bad.swi = 0.99;
    let (mut w, mut g) = (0.0, 0.0);
    let s = unsafe { ffino_mbc_eval(&bad, 0.5, &mut w, &mut g) };
    assert_eq!(s, FfinoStatus::InvalidArgument);
    assert!(!last_error().is_empty());
}

#[test]
fn null_pointers_rejected() {
    let mut w = 0.0;
    assert_eq!(unsafe { ffino_mbc_eval(ptr::null(), 0.5, &mut w, &mut w) }, FfinoStatus::NullPointer);
    assert_eq!(unsafe { ffino_mbc_eval(&CASE_A, 0.5, ptr::null_mut(), &mut w) }, FfinoStatus::NullPointer);
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { ffino_dataset_open(ptr::null(), &mut h) }, FfinoStatus::NullPointer);
    assert!(h.is_null());
    unsafe {
        ffino_dataset_free(ptr::null_mut());
        ffino_model_free(ptr::null_mut());
    }
}

#[test]
fn welge_front_matches_library() {
    let (mut s, mut slope) = (0.0, 0.0);
    assert_eq!(unsafe { ffino_welge_front(&CASE_A, &mut s, &mut slope) }, FfinoStatus::Ok);
    let k = ffino::datagen::ToyConstants::default();
    let c = ffino::datagen::RelPermCoeffs::CASE_A;
    let w = ffino::datagen::welge_front(&c, k.mu_g, k.mu_w);
    assert_eq!((s, slope), (w.s_front, w.slope));
}

#[test]
fn metrics_identity_and_hand_case() {
    let y: Vec<f64> = (0..2 * 12 * 12).map(|i| (i as f64 * 0.37).sin() + 1.5).collect();
    let mut m = FfinoMetrics::default();
    assert_eq!(unsafe { ffino_metrics(y.as_ptr(), y.as_ptr(), 2, 12, 12, 0.01, &mut m) }, FfinoStatus::Ok);
    assert_eq!((m.r2, m.rmse, m.mre, m.empty_aoi), (1.0, 0.0, 0.0, 0));
    assert!((m.ssim - 1.0).abs() < 1e-12);

    let s = unsafe { ffino_metrics(y.as_ptr(), y.as_ptr(), 0, 12, 12, 0.01, &mut m) };
    assert_eq!(s, FfinoStatus::InvalidArgument);
}

#[test]
fn missing_file_is_io_error() {
    let p = CString::new("/nonexistent/data.fds").unwrap();
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { ffino_dataset_open(p.as_ptr(), &mut h) }, FfinoStatus::Io);
    assert!(last_error().contains("nonexistent"));
}

#[test]
fn dataset_and_model_handles() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = GenConfig {
        grid_nr: 16,
        grid_nz: 8,
        ..GenConfig::default()
    };
    let ds = generate_dataset(2, 5, &cfg).unwrap();
    let data = dir.path().join("d.fds");
    write_dataset(&data, &ds).unwrap();
    let mc = ModelConfig {
        width: 4,
        modes_r: 4,
        modes_z: 3,
        grid_nr: 16,
        grid_nz: 8,
        target: Target::Sg,
        ..ModelConfig::default()
    };
    let model = FfinoModel::<f32>::new(mc, 0).unwrap();
    let ckpt = dir.path().join("m.fck");
    save_checkpoint(&model, &ckpt).unwrap();

    let data_c = CString::new(data.to_str().unwrap()).unwrap();
    let ckpt_c = CString::new(ckpt.to_str().unwrap()).unwrap();
    let mut dh = ptr::null_mut();
    let mut mh = ptr::null_mut();
    unsafe {
        assert_eq!(ffino_dataset_open(data_c.as_ptr(), &mut dh), FfinoStatus::Ok);
        assert_eq!(ffino_model_load(ckpt_c.as_ptr(), &mut mh), FfinoStatus::Ok);
        let (mut n, mut nr, mut nz, mut steps) = (0, 0, 0, 0);
        assert_eq!(ffino_dataset_info(dh, &mut n, &mut nr, &mut nz, &mut steps), FfinoStatus::Ok);
        assert_eq!((n, nr, nz, steps), (2, 16, 8, 12));
        let mut count = 0;
        assert_eq!(ffino_model_param_count(mh, &mut count), FfinoStatus::Ok);
        assert_eq!(count, ffino::layers::Module::param_count(&model));

        let len = steps * nr * nz;
        let mut buf = vec![f64::NAN; len];
        assert_eq!(ffino_model_predict(mh, dh, 1, buf.as_mut_ptr(), len), FfinoStatus::Ok);
        let direct = ffino::eval::Predictor::predict(&model, &ds.samples[1], &ds.grid).unwrap();
        assert_eq!(buf, direct);

        assert_eq!(ffino_model_predict(mh, dh, 1, buf.as_mut_ptr(), len - 1), FfinoStatus::InvalidArgument);
        assert_eq!(ffino_model_predict(mh, dh, 9, buf.as_mut_ptr(), len), FfinoStatus::InvalidArgument);
        ffino_model_free(mh);
        ffino_dataset_free(dh);
    }
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(ffino_version()) };
    assert_eq!(v.to_str().unwrap(), ffino::VERSION);
}

#[test]
fn header_declares_exports() {
    let h = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/ffino.h")).unwrap();
    for f in [
        "ffino_last_error",
        "ffino_version",
        "ffino_mbc_eval",
        "ffino_welge_front",
        "ffino_dataset_open",
        "ffino_dataset_info",
        "ffino_dataset_free",
        "ffino_model_load",
        "ffino_model_param_count",
        "ffino_model_predict",
        "ffino_model_free",
        "ffino_metrics",
    ] {
        assert!(h.contains(&format!("{f}(")), "{f} missing from header");
    }
}
