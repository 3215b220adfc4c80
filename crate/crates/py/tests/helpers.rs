use lassopath::{instance_from_rows, parse_algorithm};
use lassopath_core::{Algorithm, Error};

#[test]
fn rows_become_an_instance() {
    let inst = instance_from_rows(&[vec![1.0, 1.0, 1.0, 0.0], vec![0.0, 0.0, 0.0, 1.0]], &[2.0, 1.0]).unwrap();
    assert_eq!((inst.m(), inst.n()), (2, 4));
    assert_eq!(inst.t_max(), 2.0);
}

#[test]
fn ragged_rows_are_rejected() {
    let err = instance_from_rows(&[vec![1.0, 2.0], vec![1.0]], &[0.0, 0.0]).unwrap_err();
    assert!(matches!(err, Error::Dimension(_)));
}

#[test]
fn algorithm_names() {
    assert_eq!(parse_algorithm("looping").unwrap(), Algorithm::Looping);
    assert!(parse_algorithm("lars").is_err());
}
