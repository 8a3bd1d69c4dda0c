//! CLI integration: schema stability, provenance columns, exit codes,
//! units conversion, and replay determinism at the library level.

use binauth::cli::{cmd_exponent, cmd_leakage, cmd_simulate, cmd_sweep, RunConfig, Units};

const BASE: &str = r#"
seed = 7
grid_resolution = 30

[source]
kind = "dsbs"
crossover = 0.1

[metric]
kind = "min_entropy"
beta = 2.0

[rates]
r_s = 0.3
r_w = [0.2, 0.4]

[simulation]
n = [3, 4, 5]
codes = 2
trials = 1500
"#;

fn csv_of(table: &binauth::cli::Table) -> String {
    let mut buf = Vec::new();
    table.write_csv(&mut buf).unwrap();
    String::from_utf8(buf).unwrap()
}

#[test]
fn exponent_schema_is_stable() {
    let cfg = RunConfig::from_toml(BASE).unwrap();
    let table = cmd_exponent(&cfg, Units::Nats).unwrap();
    let text = csv_of(&table);
    let header = text.lines().next().unwrap();
    assert_eq!(
        header,
        "schema,config_hash,seed,source,metric,kind,r_w,r_s,units,value,\
         grid_resolution,refined,converged"
    );
    // One row per (kind, rate pair): 5 kinds × 2 rate pairs.
    assert_eq!(text.lines().count(), 1 + 5 * 2);
    for line in text.lines().skip(1) {
        assert!(line.starts_with("exponent-v1,"));
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[2], "7", "seed column");
        assert_eq!(fields[1].len(), 16, "config hash is 16 hex chars");
        assert_eq!(fields[8], "nats");
    }
}

#[test]
fn simulate_schema_and_fit_columns() {
    let cfg = RunConfig::from_toml(BASE).unwrap();
    let table = cmd_simulate(&cfg, Units::Nats).unwrap();
    let text = csv_of(&table);
    let header = text.lines().next().unwrap();
    assert_eq!(
        header,
        "schema,config_hash,seed,source,metric,n,r_w,r_s,units,num_codes,\
         trials_per_code,fr_estimate,fr_lo,fr_hi,fa_estimate,fa_lo,fa_hi,\
         leakage,fr_slope,fr_slope_stderr"
    );
    // 3 blocklengths × 2 rate pairs.
    assert_eq!(text.lines().count(), 1 + 6);
    // fit_min_n defaults to 4, so only two usable points per rate group:
    // the slope columns stay empty.
    for line in text.lines().skip(1) {
        assert!(line.ends_with(",,"), "no slope with < 3 points: {line}");
    }
}

#[test]
fn simulate_fit_emitted_with_three_points() {
    let mut cfg = RunConfig::from_toml(BASE).unwrap();
    cfg.simulation.fit_min_n = 3;
    let table = cmd_simulate(&cfg, Units::Nats).unwrap();
    let text = csv_of(&table);
    for line in text.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        assert!(!fields[18].is_empty(), "slope missing: {line}");
        assert!(!fields[19].is_empty(), "stderr missing: {line}");
    }
}

#[test]
fn single_key_rate_zeroes_fr_column() {
    let cfg = RunConfig::from_toml(
        r#"
seed = 3
[source]
kind = "dsbs"
crossover = 0.1

[rates]
r_s = 0.0
r_w = 0.4

[simulation]
n = [3, 4]
codes = 2
trials = 500
"#,
    )
    .unwrap();
    let table = cmd_simulate(&cfg, Units::Nats).unwrap();
    let text = csv_of(&table);
    for line in text.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[11], "0", "fr_estimate must be zero: {line}");
        // Single key: the imposter always wins.
        assert_eq!(fields[14], "1", "fa_estimate must be one: {line}");
    }
}

#[test]
fn leakage_schema_and_reference_column() {
    let cfg = RunConfig::from_toml(BASE).unwrap();
    let table = cmd_leakage(&cfg, Units::Nats).unwrap();
    let text = csv_of(&table);
    assert_eq!(
        text.lines().next().unwrap(),
        "schema,config_hash,seed,source,n,r_w,r_s,units,code_index,leakage,\
         secrecy_exponent"
    );
    // rates × n × codes rows.
    assert_eq!(text.lines().count(), 1 + 2 * 3 * 2);
    for line in text.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        let leak: f64 = fields[9].parse().unwrap();
        assert!(leak >= 0.0);
        let e_sec: f64 = fields[10].parse().unwrap();
        assert!(e_sec >= 0.0);
    }
}

#[test]
fn sweep_emits_exponents_alongside_estimates() {
    let mut cfg = RunConfig::from_toml(BASE).unwrap();
    cfg.simulation.fit_min_n = 3;
    let table = cmd_sweep(&cfg, Units::Nats).unwrap();
    let text = csv_of(&table);
    assert_eq!(
        text.lines().next().unwrap(),
        "schema,config_hash,seed,source,metric,n,r_w,r_s,units,fr_estimate,\
         fr_lo,fr_hi,fa_estimate,fa_lo,fa_hi,leakage,fr_slope,fr_exponent,\
         fa_exponent,secrecy_exponent"
    );
    for line in text.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        assert!(!fields[16].is_empty(), "empirical slope present");
        let fr_exp: f64 = fields[17].parse().unwrap();
        let fa_exp: f64 = fields[18].parse().unwrap();
        let sec: f64 = fields[19].parse().unwrap();
        assert!(fr_exp >= 0.0 && fa_exp >= 0.0 && sec >= 0.0);
    }
}

#[test]
fn empty_rate_sweep_yields_header_only() {
    let cfg = RunConfig::from_toml(
        r#"
[source]
kind = "dsbs"
crossover = 0.1

[rates]
r_w = []
"#,
    )
    .unwrap();
    let table = cmd_exponent(&cfg, Units::Nats).unwrap();
    let text = csv_of(&table);
    assert_eq!(text.lines().count(), 1);
    assert!(table.is_empty());
}

#[test]
fn bits_units_scale_rate_columns() {
    let cfg = RunConfig::from_toml(BASE).unwrap();
    let nats = csv_of(&cmd_exponent(&cfg, Units::Nats).unwrap());
    let bits = csv_of(&cmd_exponent(&cfg, Units::Bits).unwrap());
    let ln2 = std::f64::consts::LN_2;
    for (a, b) in nats.lines().skip(1).zip(bits.lines().skip(1)) {
        let fa: Vec<&str> = a.split(',').collect();
        let fb: Vec<&str> = b.split(',').collect();
        assert_eq!(fb[8], "bits");
        for col in [6usize, 7, 9] {
            let va: f64 = fa[col].parse().unwrap();
            let vb: f64 = fb[col].parse().unwrap();
            assert!((vb - va / ln2).abs() < 1e-12, "column {col}: {va} vs {vb}");
        }
    }
}

#[test]
fn library_level_replays_are_byte_identical() {
    let cfg = RunConfig::from_toml(BASE).unwrap();
    let a = csv_of(&cmd_sweep(&cfg, Units::Nats).unwrap());
    let b = csv_of(&cmd_sweep(&cfg, Units::Nats).unwrap());
    assert_eq!(a, b);
}

#[test]
fn json_mirrors_csv_and_carries_argmin() {
    let cfg = RunConfig::from_toml(BASE).unwrap();
    let table = cmd_exponent(&cfg, Units::Nats).unwrap();
    let json = table.to_json();
    let csv = csv_of(&table);
    assert_eq!(
        json["rows"].as_array().unwrap().len(),
        csv.lines().count() - 1
    );
    let first = &json["rows"][0];
    assert!(first.get("argmin").is_some(), "exponent rows carry argmin");
    assert_eq!(first["units"], "nats");
}

#[test]
fn exit_codes_config_and_guard() {
    let bin = env!("CARGO_BIN_EXE_binauth");
    let dir = tempfile::tempdir().unwrap();

    // Missing config flag.
    let status = std::process::Command::new(bin)
        .arg("exponent")
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    // Malformed config.
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[source]\nkind = \"nope\"\n").unwrap();
    let status = std::process::Command::new(bin)
        .args(["exponent", "--config", bad.to_str().unwrap()])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    // Guard violation: blocklength far beyond the enumeration cap, caught
    // before any work starts.
    let guard = dir.path().join("guard.toml");
    std::fs::write(
        &guard,
        "[source]\nkind = \"dsbs\"\ncrossover = 0.1\n\n[simulation]\nn = [64]\n",
    )
    .unwrap();
    let status = std::process::Command::new(bin)
        .args(["simulate", "--config", guard.to_str().unwrap()])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(3));

    // Clean run exits 0 and writes both outputs.
    let good = dir.path().join("good.toml");
    std::fs::write(
        &good,
        r#"
seed = 5
grid_resolution = 20
[source]
kind = "dsbs"
crossover = 0.1
[rates]
r_s = 0.2
r_w = 0.3
[exponent]
kinds = ["fa_types"]
"#,
    )
    .unwrap();
    let csv = dir.path().join("out.csv");
    let json = dir.path().join("out.json");
    let status = std::process::Command::new(bin)
        .args([
            "exponent",
            "--config",
            good.to_str().unwrap(),
            "--out-csv",
            csv.to_str().unwrap(),
            "--out-json",
            json.to_str().unwrap(),
            "--units",
            "bits",
            "--threads",
            "1",
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert!(csv.exists() && json.exists());
    let parsed: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(parsed["schema"], "exponent-v1");
}

#[test]
fn exponent_sweep_rows_monotone_in_helper_rate() {
    // Nine-step helper-rate sweep: the random-coding FR exponent column is
    // non-decreasing.
    let cfg = RunConfig::from_toml(
        r#"
seed = 11
grid_resolution = 24

[source]
kind = "dsbs"
crossover = 0.1

[metric]
kind = "tempered"
beta = 1.0

[rates]
r_s = 0.3
r_w = [0.0, 0.0866, 0.1733, 0.2599, 0.3466, 0.4332, 0.5199, 0.6065, 0.6931]

[exponent]
kinds = ["fr_random"]
"#,
    )
    .unwrap();
    let table = cmd_exponent(&cfg, Units::Nats).unwrap();
    let text = csv_of(&table);
    assert_eq!(text.lines().count(), 1 + 9);
    let mut prev = -1.0f64;
    for line in text.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        let value: f64 = fields[9].parse().unwrap();
        assert!(value >= prev - 1e-9, "not monotone at {line}");
        prev = value;
    }
}
