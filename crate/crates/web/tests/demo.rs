use asmg_web::{c_pi, log_permeability, residual_history, DemoParams, MAX_N};

fn params(q: u32) -> DemoParams {
    DemoParams::new(true, 16, 2, q, 3, 2, 1)
}

#[test]
fn field_spans_requested_contrast() {
    let v = log_permeability(&params(5)).unwrap();
    assert_eq!(v.len(), 256);
    let lo = v.iter().cloned().fold(f64::MAX, f64::min);
    let hi = v.iter().cloned().fold(f64::MIN, f64::max);
    assert!(lo.abs() < 1e-12, "{lo}");
    assert!(hi <= 5.0 + 1e-12 && hi > 0.0, "{hi}");

    let flat = log_permeability(&DemoParams::new(false, 16, 2, 0, 3, 1, 0)).unwrap();
    assert!(flat.iter().all(|&x| x == 0.0));
}

#[test]
fn history_reaches_tolerance() {
    let h = residual_history(&params(4), 1e-8).unwrap();
    assert_eq!(h[0], 1.0);
    assert!(h.len() > 1 && h.len() < 20, "{}", h.len());
    assert!(*h.last().unwrap() <= 1e-8);
    assert!(h.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
}

#[test]
fn history_is_deterministic() {
    assert_eq!(residual_history(&params(3), 1e-6).unwrap(), residual_history(&params(3), 1e-6).unwrap());
}

#[test]
fn c_pi_is_at_least_one() {
    let c = c_pi(&params(2)).unwrap();
    assert!((1.0..2.5).contains(&c), "{c}");
    // a single subdomain covers the whole grid, so the projection is exact
    let single = c_pi(&DemoParams::new(true, 8, 1, 4, 1, 1, 0)).unwrap();
    assert!((single - 1.0).abs() < 1e-8, "{single}");
}

#[test]
fn rejects_bad_parameters() {
    assert!(log_permeability(&DemoParams::new(true, 2 * MAX_N, 2, 1, 1, 1, 0)).is_err());
    assert!(residual_history(&DemoParams::new(true, 12, 2, 1, 1, 1, 0), 1e-8).is_err());
    assert!(residual_history(&params(2), 0.0).is_err());
    assert!(residual_history(&DemoParams::new(true, 16, 6, 1, 1, 1, 0), 1e-8).is_err());
}
