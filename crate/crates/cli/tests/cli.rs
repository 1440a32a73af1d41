use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::process::{Command, Output, Stdio};

fn aeta() -> Command {
    Command::new(env!("CARGO_BIN_EXE_aeta"))
}

fn run(args: &[&str], out: &Path) -> Output {
    aeta().args(args).arg("--out").arg(out).output().unwrap()
}

fn summary(o: &Output) -> serde_json::Value {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn fig4_bob_is_error_free() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["figure", "fig4", "--m", "50", "--alpha2", "27", "--bits", "10000", "--seed", "7"], dir.path());
    assert_eq!(summary(&o)["bob_ber"], 0.0);
    let csv = std::fs::read_to_string(dir.path().join("fig4_5.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("symbol,party,vh_diff,true_bit,decided_bit"));
    let bob: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).filter(|f: &Vec<&str>| f[1] == "bob").collect();
    assert_eq!(bob.len(), 10_000);
    assert!(bob.iter().all(|f| f[3] == f[4]));
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("fig4_5.csv.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["seed"], 7);
    assert_eq!(meta["parameters"]["m"], 50);
}

#[test]
fn fig1_is_monotone() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["figure", "fig1", "--alpha2", "1", "--m-list", "2:130:4"], dir.path());
    summary(&o);
    let csv = std::fs::read_to_string(dir.path().join("fig1.csv")).unwrap();
    let pe: Vec<f64> = csv.lines().skip(1).map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert_eq!(pe.len(), 33);
    assert!((pe[0] - 0.00460).abs() < 1e-4);
    assert!(pe.windows(2).all(|w| w[1] >= w[0] - 1e-12));
}

#[test]
fn parameter_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["simulate", "--m", "49"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("M ≡ 2 (mod 4)"), "{err}");
    assert_eq!(err.lines().count(), 1);
    assert_eq!(run(&["simulate", "--t", "2"], dir.path()).status.code(), Some(2));
    assert_eq!(run(&["expand", "--key", "xyz"], dir.path()).status.code(), Some(2));
    assert_eq!(run(&["figure", "fig7", "--n-list", "1:0:1"], dir.path()).status.code(), Some(2));
}

#[test]
fn usage_and_capacity_codes() {
    assert_eq!(aeta().arg("bogus").output().unwrap().status.code(), Some(64));
    assert_eq!(aeta().args(["figure", "fig9"]).output().unwrap().status.code(), Some(64));
    assert_eq!(aeta().arg("--help").output().unwrap().status.code(), Some(0));
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["figure", "fig1", "--alpha2", "1000", "--m-list", "2"], dir.path());
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--heavy"));
    let o = run(&["attack", "kpa", "--key", "deadbeef"], dir.path());
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn outputs_are_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["figure", "fig7", "--n-list", "10,100,1000", "--trials", "2000", "--seed", "3", "--svg"];
    summary(&run(&args, a.path()));
    summary(&run(&args, b.path()));
    for f in ["fig7.csv", "fig7.svg"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        assert_eq!(x, std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let svg = std::fs::read_to_string(a.path().join("fig7.svg")).unwrap();
    assert!(svg.contains("<polyline") && svg.matches("<circle").count() == 3);
}

#[test]
fn every_figure_writes_its_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [(&[&str], &str, &str); 4] = [
        (&["figure", "fig5", "--bits", "200"], "fig4_5.csv", "symbol,party,vh_diff,true_bit,decided_bit"),
        (&["figure", "fig6c", "--trials", "10000"], "fig6c.csv", "phi_rad,variance_mc,variance_theory,stderr,trials"),
        (&["figure", "seqS", "--bits", "500"], "seqS.csv", "alice_basis,eve_basis"),
        (&["expand", "--bits", "20"], "running_key.csv", "symbol_index,basis_index"),
    ];
    for (args, file, header) in cases {
        summary(&run(args, dir.path()));
        let text = std::fs::read_to_string(dir.path().join(file)).unwrap();
        assert_eq!(text.lines().next(), Some(header), "{file}");
        assert!(dir.path().join(format!("{file}.meta.json")).exists());
    }
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(&cfg, "# small run\nm = 10\nalpha2 = 27\nbits = 300\nseed = 5\n").unwrap();
    let o = aeta()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .args(["--m", "50", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    let s = summary(&o);
    assert_eq!(s["m"], 50);
    assert_eq!(s["symbols"], 300);
    std::fs::write(&cfg, "mm = 3\n").unwrap();
    let o = aeta().args(["simulate", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn tx_tap_rx_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let common = ["--m", "50", "--alpha2", "54", "--t", "0.5", "--bits", "2000", "--seed", "11"];
    let tx = aeta().arg("tx").args(common).output().unwrap();
    assert!(tx.status.success());
    assert_eq!(tx.stdout.len(), 54 + 44 * 2000 + 6);

    let mut tap = aeta()
        .args(["tap", "--fraction", "0.5", "--out"])
        .arg(dir.path())
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    tap.stdin.take().unwrap().write_all(&tx.stdout).unwrap();
    let bob_stream = tap.wait_with_output().unwrap();
    assert!(bob_stream.status.success());

    let rx = |role: &str, input: &[u8], out: &Path| {
        let mut child = aeta()
            .args(["rx", "--role", role, "--seed", "11", "--out"])
            .arg(out)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .unwrap();
        child.stdin.take().unwrap().write_all(input).unwrap();
        summary(&child.wait_with_output().unwrap())
    };
    let bob = rx("bob", &bob_stream.stdout, dir.path());
    assert!(bob["ber_vs_seeded_bits"].as_f64().unwrap() < 0.01, "{bob}");
    let eve_stream = std::fs::read(dir.path().join("eve.aeta")).unwrap();
    let eve = rx("eve", &eve_stream, &dir.path().join("eve"));
    let ber = eve["ber_vs_seeded_bits"].as_f64().unwrap();
    assert!((0.4..0.6).contains(&ber), "{eve}");
    let again = rx("bob", &bob_stream.stdout, &dir.path().join("again"));
    assert_eq!(
        std::fs::read(dir.path().join("rx.csv")).unwrap(),
        std::fs::read(dir.path().join("again/rx.csv")).unwrap()
    );
    assert_eq!(again["ber_vs_seeded_bits"], bob["ber_vs_seeded_bits"]);
}

#[test]
fn tx_to_rx_over_tcp() {
    let dir = tempfile::tempdir().unwrap();
    let mut rx = aeta()
        .args(["rx", "--seed", "2", "--listen", "127.0.0.1:0", "--out"])
        .arg(dir.path())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(rx.stderr.as_mut().unwrap()).read_line(&mut line).unwrap();
    let addr = line.trim().rsplit(' ').next().unwrap().to_string();
    let tx = aeta()
        .args(["tx", "--bits", "500", "--seed", "2", "--connect", &addr])
        .output()
        .unwrap();
    assert!(tx.status.success(), "{}", String::from_utf8_lossy(&tx.stderr));
    let s = summary(&rx.wait_with_output().unwrap());
    assert_eq!(s["symbols"], 500);
    assert_eq!(s["ber_vs_seeded_bits"], 0.0);
}
