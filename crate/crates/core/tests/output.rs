use nlpme::grid::{make_grid, Field};
use nlpme::output::{
    csv_string, parse_csv, read_csv, sha256_hex, svg_string, write_csv, ArtifactWriter, Check,
    Figure, RunManifest, Series, Table,
};
use proptest::prelude::*;

fn figure() -> Figure {
    Figure {
        title: "decay <sup>".into(),
        x_label: "t".into(),
        y_label: "sup u".into(),
        log_x: true,
        log_y: true,
        series: vec![Series {
            label: "run".into(),
            x: vec![1.0, 2.0, 4.0, 0.0],
            y: vec![1.0, 0.5, 0.25, 3.0],
        }],
    }
}

#[test]
fn empty_series_gives_header_only() {
    let t = Table::series("t", &[], &[("sup", &[])]).unwrap();
    assert_eq!(csv_string(&t), "t,sup\n");
    assert_eq!(parse_csv("t,sup\n").unwrap(), t);
}

#[test]
fn field_table_has_one_line_per_node() {
    let g = make_grid(2.0, 32).unwrap();
    let u = Field::from_fn(&g, |x| x * x).unwrap();
    let text = csv_string(&Table::from_fields(&[("t=0".into(), &u)]).unwrap());
    assert_eq!(text.lines().count(), 33);
    assert!(text.starts_with("x,t=0\n"));
    assert!(Table::new(vec!["a".into()], vec![vec![1.0], vec![2.0]]).is_err());
}

#[test]
fn repeated_writes_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let t = Table::series("x", &[0.1, 0.2], &[("u", &[1.0 / 3.0, -2e-300])]).unwrap();
    let p = dir.path().join("a.csv");
    write_csv(&t, &p).unwrap();
    let first = std::fs::read(&p).unwrap();
    write_csv(&t, &p).unwrap();
    assert_eq!(std::fs::read(&p).unwrap(), first);
    assert_eq!(read_csv(&p).unwrap(), t);
    assert!(!dir.path().join("a.csv.tmp").exists());
}

#[test]
fn svg_is_deterministic_and_escaped() {
    let a = svg_string(&figure());
    assert_eq!(a, svg_string(&figure()));
    assert!(a.starts_with("<svg") || a.starts_with("<?xml"));
    assert!(a.contains("&lt;sup&gt;"));
}

#[test]
fn writer_records_digests_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let mut w = ArtifactWriter::new(&dir.path().join("run")).unwrap();
    let t = Table::series("t", &[0.0, 1.0], &[("m", &[1.0, 1.0])]).unwrap();
    w.csv("mass.csv", &t).unwrap();
    w.csv("mass.csv", &t).unwrap();
    w.svg("mass.svg", &figure()).unwrap();
    assert_eq!(w.files().len(), 2);
    let bytes = std::fs::read(w.dir().join("mass.csv")).unwrap();
    assert_eq!(w.files()[0].sha256, sha256_hex(&bytes));
    assert_eq!(w.files()[0].bytes, bytes.len());
    let manifest = RunManifest {
        experiment: "simulate".into(),
        version: "0".into(),
        config: "experiment = \"simulate\"".into(),
        wall_clock_secs: 0.5,
        checks: vec![
            Check::below("mass_drift", 1e-12, 1e-8),
            Check::holds("ok", false),
        ],
        files: w.files().to_vec(),
        error: None,
    };
    assert!(!manifest.success());
    assert!(manifest.check("mass_drift").unwrap().pass);
    w.finish(&manifest).unwrap();
    let text = std::fs::read_to_string(w.dir().join("manifest.txt")).unwrap();
    assert!(text.contains("status: fail"));
    assert!(text.contains("FAIL ok"));
    assert!(text.contains(&sha256_hex(&bytes)));
}

#[test]
fn sha256_of_empty_input() {
    assert_eq!(
        sha256_hex(b""),
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
    );
}

proptest! {
    #[test]
    fn csv_round_trips_exactly(rows in prop::collection::vec((any::<f64>(), any::<f64>()), 0..40)) {
        prop_assume!(rows.iter().all(|(a, b)| a.is_finite() && b.is_finite()));
        let x: Vec<f64> = rows.iter().map(|r| r.0).collect();
        let y: Vec<f64> = rows.iter().map(|r| r.1).collect();
        let t = Table::series("x", &x, &[("y", &y)]).unwrap();
        prop_assert_eq!(parse_csv(&csv_string(&t)).unwrap(), t);
    }
}
