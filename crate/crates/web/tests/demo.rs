use porofem_web::{cantilever_field, compression_curve, manufactured_field, MAX_N};

#[test]
fn manufactured_field_has_one_value_per_triangle() {
    let f = manufactured_field(4, 1.0).unwrap();
    assert_eq!(f.vertices().len(), 2 * 25);
    assert_eq!(f.triangles().len(), 3 * 32);
    assert_eq!(f.pressure().len(), 32);
    assert!(f.triangles().iter().all(|&v| v < 25));
    assert!((f.time() - 0.25).abs() < 1e-12);
    assert!(f.oscillation().is_finite());
}

#[test]
fn stabilization_damps_cantilever_checkerboard() {
    let plain = cantilever_field(8, 0.0).unwrap();
    let stab = cantilever_field(8, 1.0).unwrap();
    assert!(stab.oscillation() < plain.oscillation());
}

#[test]
fn compression_curve_tracks_reference() {
    let c = compression_curve(2, 0.001).unwrap();
    assert_eq!(c.times().len(), c.analytic().len());
    assert_eq!(c.simulated().len() % 2, 0);
    assert!(c.cells() > 0);
    assert!(c.rmse() < 2e-3, "{}", c.rmse());
}

#[test]
fn out_of_range_inputs_are_rejected() {
    assert!(manufactured_field(0, 1.0).is_err());
    assert!(manufactured_field(MAX_N + 1, 1.0).is_err());
    assert!(cantilever_field(4, -1.0).is_err());
    assert!(cantilever_field(4, f64::NAN).is_err());
    assert!(compression_curve(0, 1.0).is_err());
}
