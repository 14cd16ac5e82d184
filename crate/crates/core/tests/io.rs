use cocycle_lab::cocycle::lyapunov_sweep;
use cocycle_lab::io::{
    certificate_report, decay_table, eigen_table, lyapunov_table, read_eigenvectors, real, sample_table,
    write_eigenvectors, Table,
};
use cocycle_lab::model::{sample_realization, PotentialModel};
use cocycle_lab::projective::{certificate_radius, verify_no_common_point};
use cocycle_lab::spectrum::{build_operator, diagonalize, sule_report, DEFAULT_EPS_GRID, DEFAULT_FLOOR};

#[test]
fn reals_round_trip() {
    for x in [0.1, -2.5e-300, 1.0 / 3.0, 6.02e23, f64::MIN_POSITIVE, 0.0] {
        assert_eq!(real(x).parse::<f64>().unwrap(), x);
    }
}

#[test]
fn csv_tables_parse_back() {
    let model = PotentialModel::difference_example();
    let r = sample_realization(&model, 1, 1, 20).unwrap();
    let t = sample_table(&r);
    let text = t.to_csv_string().unwrap();
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(rd.headers().unwrap().iter().collect::<Vec<_>>(), vec!["n", "xi", "v"]);
    let rows: Vec<csv::StringRecord> = rd.records().map(|x| x.unwrap()).collect();
    assert_eq!(rows.len(), 20);
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(row[0].parse::<i64>().unwrap(), 1 + i as i64);
        assert_eq!(row[2].parse::<f64>().unwrap(), r.v()[i]);
    }
    let est = lyapunov_sweep(&model, &[0.5], 100, 2, 1).unwrap();
    assert_eq!(lyapunov_table(&est).header(), ["E", "n", "mean", "stderr", "realizations", "seed"]);
}

#[test]
fn eigen_and_decay_tables() {
    let model = PotentialModel::bernoulli_anderson(2.0);
    let r = sample_realization(&model, 2, 1, 60).unwrap();
    let es = diagonalize(&build_operator(&r, 1, 60).unwrap()).unwrap();
    let rep = sule_report(&es, (-1.0, 1.0), 0.1, &DEFAULT_EPS_GRID, DEFAULT_FLOOR);
    let t = eigen_table(&rep);
    assert_eq!(t.header(), ["index", "eigenvalue", "m_hat", "beta_hat", "r2"]);
    assert_eq!(t.rows().len(), rep.entries.len());
    let d = decay_table(&es, &[0, 5]);
    assert_eq!(d.rows().len(), 120);
    assert!(d.rows().iter().any(|row| row[2] == "0"));
}

#[test]
fn eigenvector_container_round_trip() {
    let model = PotentialModel::bernoulli_anderson(1.0);
    let r = sample_realization(&model, 3, 1, 25).unwrap();
    let es = diagonalize(&build_operator(&r, 1, 25).unwrap()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("v.bin");
    write_eigenvectors(&path, &es).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(&bytes[..8], b"EIGVEC01");
    assert_eq!(bytes.len(), 16 + 8 * 25 * 25);
    let (dim, data) = read_eigenvectors(&path).unwrap();
    assert_eq!(dim, 25);
    assert_eq!(data, es.vectors_row_major());
    std::fs::write(&path, b"NOTMAGIC").unwrap();
    assert!(read_eigenvectors(&path).is_err());
}

#[test]
fn certificate_report_is_toml() {
    let vs = vec![vec![0.0; 6], vec![1.0, 0.0, 0.0, 0.0, 0.0, 1.0], vec![-1.0, 0.0, 0.0, 0.0, 0.0, -1.0]];
    let cert = certificate_radius(&vs, 3).unwrap();
    let e = 1.5 * cert.radius;
    let text = certificate_report(&cert, &[(e, verify_no_common_point(&vs, e).unwrap())]).unwrap();
    let doc: toml::Value = toml::from_str(&text).unwrap();
    assert_eq!(doc["eps_table"].as_array().unwrap().len(), 3);
    assert_eq!(doc["verdicts"][0]["verdict"].as_str(), Some("no_common_structure"));
}

#[test]
fn table_writes_file() {
    let mut t = Table::new(&["a"]);
    t.push(vec!["x,y".into()]);
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("t.csv");
    t.write_csv(&p).unwrap();
    assert_eq!(std::fs::read_to_string(p).unwrap(), "a\n\"x,y\"\n");
}
