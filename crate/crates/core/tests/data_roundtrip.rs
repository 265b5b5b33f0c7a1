use std::io::Write;

use drrp_core::{generate_synthetic, load_returns_csv, write_returns_csv, DrrpError};

#[test]
fn synthetic_panel_survives_a_file_round_trip() {
    let data = generate_synthetic(5, 30, 11).unwrap();
    let mut file = tempfile::NamedTempFile::new().unwrap();
    write_returns_csv(&data, &mut file).unwrap();
    file.flush().unwrap();
    let back = load_returns_csv(file.path()).unwrap();
    assert_eq!(back.n_assets(), 5);
    assert_eq!(back.n_scenarios(), 30);
    // {:e} is shortest round-trip formatting
    assert_eq!(back.returns(), data.returns());
}

#[test]
fn bad_cell_reports_row_and_column() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "date,a,b\n2020-01-03,0.01,0.02\n2020-01-10,0.01,oops\n").unwrap();
    match load_returns_csv(&path) {
        Err(DrrpError::Parse { row, column, .. }) => assert_eq!((row, column), (3, 3)),
        other => panic!("expected a parse error, got {other:?}"),
    }
}

#[test]
fn missing_file_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(load_returns_csv(dir.path().join("absent.csv")), Err(DrrpError::Io(_))));
}
