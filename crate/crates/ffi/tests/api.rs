use std::ffi::{CStr, CString};
use std::ptr;

use compact_coding_ffi::*;

fn last_error() -> String {
    let p = ccq_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string()
}

fn config(toml: &str) -> *mut CcqConfig {
    let text = CString::new(toml).unwrap();
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { ccq_config_from_toml(text.as_ptr(), &mut cfg) }, CcqStatus::Ok);
    cfg
}

fn csv(res: *const CcqResults) -> String {
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { ccq_results_to_csv(res, &mut s) }, CcqStatus::Ok);
    let text = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_string();
    unsafe { ccq_string_free(s) };
    text
}

#[test]
fn run_and_read_rows() {
    let cfg = config("trials = 3\nsymbols_per_trial = 20\n");
    unsafe {
        assert_eq!(ccq_config_set_seed(cfg, 42), CcqStatus::Ok);
        let mut res = ptr::null_mut();
        assert_eq!(ccq_run(cfg, &mut res), CcqStatus::Ok);
        assert_eq!(ccq_results_len(res), 3);
        let mut row = std::mem::zeroed::<CcqRow>();
        assert_eq!(ccq_results_row(res, 2, &mut row), CcqStatus::Ok);
        assert_eq!(row.trial_id, 2);
        assert_eq!(row.protocol, CcqProtocol::ThreeStage);
        assert_eq!(row.symbols_sent, 20);
        assert_eq!(row.ber_total, 0.0);
        assert_eq!(row.bits_per_pulse, 3.0);

        assert_eq!(ccq_results_row(res, 3, &mut row), CcqStatus::OutOfRange);
        assert!(last_error().contains("row 3"));

        let text = csv(res);
        assert_eq!(text.lines().count(), 4);
        assert!(text.starts_with("trial_id,"));

        let mut json = ptr::null_mut();
        assert_eq!(ccq_results_to_json(res, &mut json), CcqStatus::Ok);
        assert!(CStr::from_ptr(json).to_str().unwrap().trim_start().starts_with('['));
        ccq_string_free(json);

        ccq_results_free(res);
        ccq_config_free(cfg);
    }
}

#[test]
fn same_seed_same_csv() {
    let cfg = config("trials = 4\nsymbols_per_trial = 30\ndetection = \"stochastic\"\n[channel]\neta = 0.5\n");
    unsafe {
        let (mut a, mut b) = (ptr::null_mut(), ptr::null_mut());
        assert_eq!(ccq_run(cfg, &mut a), CcqStatus::Ok);
        assert_eq!(ccq_run(cfg, &mut b), CcqStatus::Ok);
        assert_eq!(csv(a), csv(b));
        ccq_results_free(a);
        ccq_results_free(b);
        ccq_config_free(cfg);
    }
}

#[test]
fn set_param_and_validate() {
    let mut cfg = ptr::null_mut();
    unsafe {
        assert_eq!(ccq_config_default(&mut cfg), CcqStatus::Ok);
        let eta = CString::new("channel.eta").unwrap();
        assert_eq!(ccq_config_set_param(cfg, eta.as_ptr(), 0.5), CcqStatus::Ok);
        assert_eq!(ccq_config_validate(cfg), CcqStatus::Ok);
        assert_eq!(ccq_config_set_param(cfg, eta.as_ptr(), 2.0), CcqStatus::Ok);
        assert_eq!(ccq_config_validate(cfg), CcqStatus::Config);
        assert!(last_error().contains("eta"));

        let bogus = CString::new("channel.bogus").unwrap();
        assert_eq!(ccq_config_set_param(cfg, bogus.as_ptr(), 1.0), CcqStatus::Config);
        let mut res = ptr::null_mut();
        assert_eq!(ccq_run(cfg, &mut res), CcqStatus::Config);
        assert!(res.is_null());
        ccq_config_free(cfg);
    }
}

#[test]
fn bad_input_is_reported() {
    unsafe {
        let mut cfg = ptr::null_mut();
        let typo = CString::new("[channel]\netaa = 1\n").unwrap();
        assert_eq!(ccq_config_from_toml(typo.as_ptr(), &mut cfg), CcqStatus::Config);
        assert!(last_error().contains("etaa"));
        assert!(cfg.is_null());

        assert_eq!(ccq_config_from_toml(ptr::null(), &mut cfg), CcqStatus::NullPointer);
        let bytes = [0xffu8, 0];
        assert_eq!(ccq_config_from_toml(bytes.as_ptr().cast(), &mut cfg), CcqStatus::InvalidUtf8);
        assert_eq!(ccq_config_set_seed(ptr::null_mut(), 1), CcqStatus::NullPointer);
        assert_eq!(ccq_results_len(ptr::null()), 0);
        ccq_config_free(ptr::null_mut());
        ccq_results_free(ptr::null_mut());
        ccq_string_free(ptr::null_mut());

        // A successful call clears the previous message.
        assert_eq!(ccq_config_default(&mut cfg), CcqStatus::Ok);
        assert!(ccq_last_error().is_null());
        ccq_config_free(cfg);
    }
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(ccq_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}
