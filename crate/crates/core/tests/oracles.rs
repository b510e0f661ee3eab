mod support;

use cgm_hypo::windowing::{segment, Thresholds, WindowError, WindowSpec};
use support::*;

#[test]
fn cwt_fft_matches_direct_sum() {
    let e = cwt_oracle_error(100, 1);
    assert!(e < 1e-6, "{e:e}");
}

#[test]
fn conv_matches_loop_oracle() {
    let e = conv_oracle_error(40, 2);
    assert!(e < 1e-10, "{e:e}");
}

#[test]
fn dense_matches_loop_oracle() {
    let e = dense_oracle_error(40, 3);
    assert!(e < 1e-12, "{e:e}");
}

#[test]
fn gaf_matches_definition() {
    let e = gaf_oracle_error(50, 4);
    assert!(e < 1e-12, "{e:e}");
}

#[test]
fn window_counts() {
    let spec = WindowSpec::default();
    let th = Thresholds::default();
    assert_eq!(segment(&gapless_series(14 * 24, 1), &spec, &th).unwrap().len(), 289);
    assert_eq!(segment(&gapless_series(48, 2), &spec, &th).unwrap().len(), 1);
    assert!(matches!(
        segment(&gapless_series(47, 3), &spec, &th),
        Err(WindowError::SeriesTooShort { .. })
    ));
    assert_eq!(brute_force_windows(&gapless_series(14 * 24, 1), 70.0).len(), 289);
}

#[test]
fn segment_agrees_with_brute_force_on_random_gaps() {
    assert_eq!(window_pattern_mismatches(50, 9), 0);
}
