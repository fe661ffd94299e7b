use std::fs;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_diqkd-cc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn rows(csv: &str) -> Vec<Vec<f64>> {
    csv.lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn idmax_reports_both_routes() {
    let o = run(&["idmax", "--d", "2"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert_eq!(out.matches("2.828427124746").count(), 2, "{out}");
    let o = run(&["idmax", "--d", "3"]);
    assert!(stdout(&o).contains("2.87293"));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&["idmax", "--d", "1"]).status.code(), Some(1));
    assert_eq!(
        run(&["vcrit", "--d", "3", "--state", "cglmp", "--method", "analytic"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(run(&["table", "--d-min", "5", "--d-max", "3"]).status.code(), Some(1));
    assert_eq!(
        run(&["check-local", "--d", "3", "--vtilde", "1.5"]).status.code(),
        Some(1)
    );
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&[]).status.code(), Some(1));
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
}

#[test]
fn vcrit_prints_five_decimals() {
    assert_eq!(stdout(&run(&["vcrit", "--d", "4", "--state", "max"])), "0.81464\n");
    assert_eq!(stdout(&run(&["vcrit", "--d", "5", "--state", "cglmp"])), "0.81165\n");
    assert_eq!(stdout(&run(&["vcrit", "--d", "2", "--state", "cglmp"])), "0.82999\n");
    assert_eq!(
        stdout(&run(&["vcrit", "--d", "3", "--state", "max", "--method", "lp"])),
        "0.82043\n"
    );
}

#[test]
fn vcrit_appends_csv_rows() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("v.csv");
    let p = path.to_str().unwrap();
    assert!(run(&["vcrit", "--d", "2", "--state", "max", "--csv", p])
        .status
        .success());
    assert!(run(&["vcrit", "--d", "3", "--state", "cglmp", "--csv", p])
        .status
        .success());
    let text = fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "d,state,method,vcrit");
    assert!(lines[1].starts_with("2,max,analytic,0.82999"));
    assert!(lines[2].starts_with("3,cglmp,lp,0.82101"));
}

#[test]
fn table_header_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let o = run(&["table", "--d-min", "2", "--d-max", "4", "--out", p.to_str().unwrap()]);
        assert!(o.status.success());
    }
    let (ta, tb) = (fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    let text = String::from_utf8(ta).unwrap();
    assert!(text.starts_with("d,vcrit_max,vcrit_cglmp\n"));
    let r = rows(&text);
    assert_eq!(r.len(), 3);
    assert!((r[0][1] - 0.82999).abs() < 5e-5 && (r[1][2] - 0.82101).abs() < 5e-5);
}

#[test]
fn table_max_only_to_sixteen() {
    let o = run(&[
        "table", "--d-min", "2", "--d-max", "16", "--state", "max", "--method", "analytic",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 16);
    assert!(lines[1].starts_with("2,0.8299"));
    let last: Vec<&str> = lines[15].split(',').collect();
    assert_eq!(last[0], "16");
    assert!(last[1].parse::<f64>().unwrap() > 0.7539);
    assert_eq!(last[2], "");
}

#[test]
fn table_cap_breach_leaves_cell_empty() {
    let o = run(&["--strategy-cap", "100", "table", "--d-min", "2", "--d-max", "3"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.lines().nth(1).unwrap().split(',').all(|c| !c.is_empty()));
    assert!(text.lines().nth(2).unwrap().ends_with(','));
    assert!(String::from_utf8_lossy(&o.stderr).contains("exceed cap 100"));
}

#[test]
fn curve_files_and_properties() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("c.csv");
    let svg = dir.path().join("c.svg");
    let o = run(&[
        "curve",
        "--d",
        "3",
        "--state",
        "cglmp",
        "--v-min",
        "0.80",
        "--v-max",
        "1.0",
        "--steps",
        "101",
        "--csv",
        csv.to_str().unwrap(),
        "--svg",
        svg.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("V,qL,H_AE,H_AB,r_ub\n"));
    let r = rows(&text);
    assert_eq!(r.len(), 101);
    assert_eq!(r[0][0], 0.8);
    assert_eq!(r[100][0], 1.0);
    for w in r.windows(2) {
        assert!(w[1][1] <= w[0][1] + 1e-12, "qL must not increase");
    }
    // crossing bracket for the CGLMP-state critical visibility
    let at = |v: f64| r.iter().find(|row| (row[0] - v).abs() < 1e-9).unwrap()[4];
    assert!(at(0.820) < 0.0 && at(0.822) > 0.0);
    let image = fs::read_to_string(&svg).unwrap();
    assert!(image.starts_with("<svg") && image.len() < 5 * 1024);
}

#[test]
fn curve_reaches_one_dit_and_bits_rescale() {
    let dir = tempfile::tempdir().unwrap();
    let dits = dir.path().join("d.csv");
    let bits = dir.path().join("b.csv");
    let base = [
        "curve", "--d", "4", "--state", "max", "--v-min", "0.9", "--v-max", "1", "--steps", "3", "--csv",
    ];
    let mut a: Vec<&str> = base.to_vec();
    a.push(dits.to_str().unwrap());
    assert!(run(&a).status.success());
    let mut b: Vec<&str> = vec!["--unit", "bits"];
    b.extend(base);
    b.push(bits.to_str().unwrap());
    assert!(run(&b).status.success());
    let td = fs::read_to_string(&dits).unwrap();
    let tb = fs::read_to_string(&bits).unwrap();
    assert!(tb.starts_with("V,qL,H_AE_bits,H_AB_bits,r_ub_bits\n"));
    let (rd, rb) = (rows(&td), rows(&tb));
    assert_eq!(rd[2][4], 1.0);
    assert!((rb[2][4] - 2.0).abs() < 1e-12);
    for (x, y) in rd.iter().zip(&rb) {
        assert_eq!(x[1], y[1]);
        assert!((x[4] * 2.0 - y[4]).abs() < 1e-11);
    }
}

#[test]
fn unwritable_output_exits_two() {
    let o = run(&[
        "curve",
        "--d",
        "2",
        "--state",
        "max",
        "--v-min",
        "0.8",
        "--v-max",
        "1",
        "--steps",
        "3",
        "--csv",
        "/nonexistent-dir/x.csv",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn check_local_verdicts() {
    assert!(stdout(&run(&["check-local", "--d", "3", "--vtilde", "0.69615"])).starts_with("local"));
    assert!(stdout(&run(&["check-local", "--d", "3", "--vtilde", "0.70615"])).starts_with("nonlocal"));
    assert!(stdout(&run(&["check-local", "--d", "2", "--vtilde", "0"])).starts_with("local"));
}

#[test]
fn asymptotic_report() {
    let out = stdout(&run(&["asymptotic"]));
    assert!(out.contains("I_inf^max  = 2.970"));
    assert!(out.contains("V_crit^inf = 0.7538"));
    assert!(out.contains("I_inf^crit = 2.239"));
}

#[test]
fn thread_override_keeps_output_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let args = |p: &str| {
        vec![
            "curve".to_string(),
            "--d".into(),
            "3".into(),
            "--state".into(),
            "cglmp".into(),
            "--v-min".into(),
            "0.7".into(),
            "--v-max".into(),
            "1".into(),
            "--steps".into(),
            "16".into(),
            "--csv".into(),
            p.into(),
        ]
    };
    let one = Command::new(env!("CARGO_BIN_EXE_diqkd-cc"))
        .args(args(a.to_str().unwrap()))
        .env("DIQKD_CC_THREADS", "1")
        .output()
        .unwrap();
    let many = Command::new(env!("CARGO_BIN_EXE_diqkd-cc"))
        .args(args(b.to_str().unwrap()))
        .env("DIQKD_CC_THREADS", "4")
        .output()
        .unwrap();
    assert!(one.status.success() && many.status.success());
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}
