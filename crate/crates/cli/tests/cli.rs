use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mcv_core::sim::{generate_sample, Innovation};
use mcv_core::{Matrix64, RngStream};
use serde_json::Value;
use tempfile::TempDir;

fn mcv<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    Command::new(env!("CARGO_BIN_EXE_mcv")).args(args).output().expect("binary runs")
}

fn ok_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Normal data, `n` rows per group, with group `g` mean scaled by `shifts[g]`.
fn grouped_csv(dir: &TempDir, name: &str, shifts: &[f64], n: usize, seed: u64) -> PathBuf {
    let sigma = Matrix64::from_f64_rows(&[&[1.0, 0.3], &[0.3, 0.5]]).unwrap();
    let mut text = String::from("group,x,y\n");
    for (g, &s) in shifts.iter().enumerate() {
        let mut rng = RngStream::new(seed, g as u64).generator();
        let x = generate_sample(Innovation::Normal, &[2.0 * s, 1.5 * s], &sigma, n, &mut rng).unwrap();
        for i in 0..n {
            let r = x.values().row(i);
            text.push_str(&format!("g{},{},{}\n", g + 1, r[0], r[1]));
        }
    }
    write(dir, name, &text)
}

#[test]
fn estimate_univariate_values() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "one.csv", "group,x\na,1\na,2\na,3\n");
    let v = ok_json(&mcv(["estimate", p(&f), "--variant", "all"]));
    let rows = v["estimates"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    for r in rows {
        assert!((r["c"].as_f64().unwrap() - 0.408_248_290_463_863).abs() < 1e-12);
        assert!(r["c_lower"].as_f64().unwrap() < r["c"].as_f64().unwrap());
    }
    assert_eq!(v["data"]["sizes"], serde_json::json!([3]));
}

#[test]
fn estimate_degenerate_group_exits_3_and_names_group() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "z.csv", "group,x\nok,1\nok,2\nok,4\nflat,-1\nflat,1\nflat,0\n");
    let out = mcv(["estimate", p(&f)]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("group `flat`"));
}

#[test]
fn estimate_table_is_groups_by_variants() {
    let dir = TempDir::new().unwrap();
    let f = grouped_csv(&dir, "d.csv", &[1.0, 1.0, 0.8, 1.2], 25, 1);
    let table = dir.path().join("t.csv");
    ok_json(&mcv(["estimate", p(&f), "--table", p(&table)]));
    let text = std::fs::read_to_string(table).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "group,variant,n,c,b,var_c,var_b,c_lower,c_upper,b_lower,b_upper");
    assert_eq!(lines.count(), 16);
}

#[test]
fn input_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let f = grouped_csv(&dir, "d.csv", &[1.0, 1.0], 10, 2);
    let nogroup = write(&dir, "ng.csv", "x,y\n1,2\n");
    let ragged = write(&dir, "r.csv", "group,x\na,1,2\n");
    let one = write(&dir, "one.csv", "group,x\na,1\na,2\na,5\n");
    for args in [
        vec!["estimate", p(&nogroup)],
        vec!["estimate", p(&ragged)],
        vec!["estimate", "/nonexistent.csv"],
        vec!["test", p(&one)],
        vec!["test", p(&f), "--contrasts", "bogus"],
        vec!["test", p(&f), "--contrasts", "factorial:A"],
        vec!["test", p(&f), "--alpha", "1.5"],
        vec!["mct", p(&f), "--method", "permutation"],
        vec!["mct", p(&f), "--method", "asymptotic", "--mc-draws", "10"],
        vec!["simulate", "--preset", "nope"],
        vec!["simulate"],
    ] {
        let out = mcv(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let out =
        Command::new(env!("CARGO_BIN_EXE_mcv")).args(["estimate", p(&f)]).env("MCV_THREADS", "0").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn ksample_contrasts_are_the_centering_matrix() {
    let dir = TempDir::new().unwrap();
    let f = grouped_csv(&dir, "d.csv", &[1.0; 4], 20, 3);
    let v = ok_json(&mcv(["test", p(&f), "--method", "asymptotic"]));
    let h = &v["contrasts"]["matrix"];
    for i in 0..4 {
        for j in 0..4 {
            let expected = if i == j { 0.75 } else { -0.25 };
            assert!((h[i][j].as_f64().unwrap() - expected).abs() < 1e-15);
        }
    }
    assert_eq!(v["tests"][0]["rank"], 3);
}

#[test]
fn identical_groups_do_not_reject() {
    let dir = TempDir::new().unwrap();
    let mut text = String::from("group,x,y\n");
    for g in ["a", "b"] {
        for i in 0..15 {
            text.push_str(&format!("{g},{},{}\n", 3.0 + (i as f64).sin(), 2.0 + (i as f64 * 0.7).cos()));
        }
    }
    let f = write(&dir, "same.csv", &text);
    for method in ["asymptotic", "permutation", "bootstrap"] {
        let v = ok_json(&mcv(["test", p(&f), "--method", method, "--B", "199", "--target", "both"]));
        for t in v["tests"].as_array().unwrap() {
            assert!(t["statistic"].as_f64().unwrap() < 1e-12);
            assert_eq!(t["reject"], false);
            if method == "permutation" {
                assert_eq!(t["p_value"], 1.0);
            }
        }
    }
}

#[test]
fn permutation_size_over_seeds() {
    let dir = TempDir::new().unwrap();
    let mut rejections = 0;
    let runs = 40;
    for seed in 0..runs {
        let f = grouped_csv(&dir, &format!("d{seed}.csv"), &[1.0, 1.0], 20, 100 + seed);
        let v = ok_json(&mcv(["test", p(&f), "--method", "permutation", "--B", "199", "--seed", &seed.to_string()]));
        rejections += usize::from(v["tests"][0]["reject"].as_bool().unwrap());
    }
    // Binomial(40, 0.05) exceeds 7 with probability below 0.5%.
    assert!(rejections <= 7, "{rejections}");
}

#[test]
fn reports_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let f = grouped_csv(&dir, "d.csv", &[1.0, 0.9, 1.1], 20, 4);
    for args in [
        vec!["test", p(&f), "--method", "bootstrap", "--B", "99", "--variant", "all", "--target", "both"],
        vec!["mct", p(&f), "--method", "bootstrap", "--B", "99"],
        vec!["mct", p(&f), "--method", "asymptotic", "--mc-draws", "10000"],
        vec!["estimate", p(&f)],
    ] {
        let a = mcv(&args);
        let b = mcv(&args);
        assert!(a.status.success());
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
    let a = mcv(["test", p(&f), "--method", "bootstrap", "--B", "99", "--seed", "1"]);
    let b = mcv(["test", p(&f), "--method", "bootstrap", "--B", "99", "--seed", "2"]);
    assert_ne!(a.stdout, b.stdout);
}

#[test]
fn mct_table_columns_and_duality() {
    let dir = TempDir::new().unwrap();
    let f = grouped_csv(&dir, "d.csv", &[1.0, 1.0, 0.5], 30, 5);
    let table = dir.path().join("t2.csv");
    let v = ok_json(&mcv(["mct", p(&f), "--B", "200", "--target", "both", "--table", p(&table)]));
    let text = std::fs::read_to_string(&table).unwrap();
    assert_eq!(text.lines().next().unwrap(), "comparison,variant,target,method,estimate,lower,upper,significant");
    assert_eq!(text.lines().count(), 1 + 2 * 3);
    for m in v["mct"].as_array().unwrap() {
        for row in m["table"].as_array().unwrap() {
            let (lo, hi) = (row["lower"].as_f64().unwrap(), row["upper"].as_f64().unwrap());
            let excludes_zero = lo > 0.0 || hi < 0.0;
            assert_eq!(excludes_zero, row["significant"].as_bool().unwrap(), "{row}");
        }
    }
    assert_eq!(v["mct"][0]["table"][0]["comparison"], "2-1");
}

#[test]
fn single_contrast_asymptotic_mct_matches_z_interval() {
    let dir = TempDir::new().unwrap();
    let f = grouped_csv(&dir, "d.csv", &[1.0, 0.8], 40, 6);
    let v = ok_json(&mcv(["mct", p(&f), "--method", "asymptotic", "--mc-draws", "200000"]));
    let q = v["mct"][0]["critical_value"].as_f64().unwrap();
    // MC standard error of the 95% quantile of |Z| at 2·10⁵ draws is about 0.004.
    assert!((q - 1.959_964).abs() < 0.015, "{q}");
}

#[test]
fn factorial_and_csv_contrasts() {
    let dir = TempDir::new().unwrap();
    let f = grouped_csv(&dir, "d.csv", &[1.0, 1.0, 1.0, 1.0], 20, 7);
    let v = ok_json(&mcv(["test", p(&f), "--method", "asymptotic", "--layout", "2x2", "--contrasts", "factorial:A:B"]));
    assert_eq!(v["tests"][0]["rank"], 1);
    assert_eq!(v["inputs"]["layout"], "2x2");
    let grid = write(&dir, "h.csv", "-1,1,0,0\n0,0,-1,1\n");
    let v = ok_json(&mcv([
        "mct",
        p(&f),
        "--method",
        "asymptotic",
        "--mc-draws",
        "10000",
        "--contrasts",
        &format!("csv:{}", p(&grid)),
    ]));
    assert_eq!(v["mct"][0]["table"].as_array().unwrap().len(), 2);
    let bad = write(&dir, "bad.csv", "1,1,0,0\n");
    let out = mcv(["test", p(&f), "--contrasts", &format!("csv:{}", p(&bad))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bootstrap_intervals_usually_at_least_as_wide() {
    let dir = TempDir::new().unwrap();
    let runs = 20;
    let mut wider = 0;
    for seed in 0..runs {
        let f = grouped_csv(&dir, &format!("x{seed}.csv"), &[1.0, 1.0, 1.0], 50, 500 + seed);
        let boot = ok_json(&mcv(["mct", p(&f), "--method", "bootstrap", "--B", "1000", "--seed", &seed.to_string()]));
        let asy = ok_json(&mcv(["mct", p(&f), "--method", "asymptotic", "--seed", &seed.to_string()]));
        let width = |v: &Value| -> f64 {
            v["mct"][0]["table"]
                .as_array()
                .unwrap()
                .iter()
                .map(|r| r["upper"].as_f64().unwrap() - r["lower"].as_f64().unwrap())
                .sum()
        };
        wider += usize::from(width(&boot) >= width(&asy));
    }
    assert!(wider * 10 >= runs as usize * 9, "{wider}/{runs}");
}

#[test]
fn ilr_closed_forms_and_pipeline() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "c2.csv", &format!("group,a,b\ng,{},1\ng,2,2\n", std::f64::consts::E));
    let out = mcv(["ilr", p(&f)]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "group,z1");
    let z: f64 = lines[1].split(',').nth(1).unwrap().parse().unwrap();
    assert!((z - 0.5f64.sqrt()).abs() < 1e-12);
    assert_eq!(lines[2], "g,0");

    let mut comp = String::from("group,p1,p2,p3,p4,p5\n");
    for i in 0..30 {
        let t = i as f64;
        comp.push_str(&format!(
            "{},{},{},{},{},{}\n",
            if i % 2 == 0 { "A" } else { "B" },
            1.0 + 0.3 * t.sin(),
            2.0 + 0.2 * (1.3 * t).cos(),
            0.5 + 0.1 * (0.7 * t).sin(),
            3.0 + 0.4 * (2.1 * t).cos(),
            1.5 + 0.25 * (0.4 * t).sin()
        ));
    }
    let src = write(&dir, "comp.csv", &comp);
    let ilr = dir.path().join("ilr.csv");
    assert!(mcv(["ilr", p(&src), "--out", p(&ilr)]).status.success());
    let v = ok_json(&mcv(["estimate", p(&ilr)]));
    assert_eq!(v["data"]["d"], 4);
    assert_eq!(v["estimates"].as_array().unwrap().len(), 8);

    let bad = write(&dir, "bad.csv", "group,a,b\ng,1,0\n");
    assert_eq!(mcv(["ilr", p(&bad)]).status.code(), Some(2));
}

#[test]
fn simulate_config_errors_and_reproducibility() {
    let dir = TempDir::new().unwrap();
    let bad = write(&dir, "bad.cfg", "replicates = 0\n");
    assert_eq!(mcv(["simulate", "--config", p(&bad)]).status.code(), Some(2));
    let cfg = write(&dir, "s.cfg", "name = s\nd = 2\nk = 3\nn = 12\nreplicates = 10\nresamples = 19\nseed = 5\n");
    let a = mcv(["simulate", "--config", p(&cfg)]);
    let b = mcv(["simulate", "--config", p(&cfg)]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let c = mcv(["simulate", "--config", p(&cfg), "--seed", "6"]);
    assert_ne!(a.stdout, c.stdout);
    assert_eq!(mcv(["simulate", "--config", p(&cfg), "--replicates", "0"]).status.code(), Some(2));

    let report = dir.path().join("r.json");
    let out = mcv(["simulate", "--config", p(&cfg), "--report", p(&report)]);
    assert!(out.status.success());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(report).unwrap()).unwrap();
    assert_eq!(v["command"], "simulate");
    assert_eq!(v["simulations"][0]["tests"].as_array().unwrap().len(), 3);
}

#[test]
fn simulate_from_data_moments() {
    let dir = TempDir::new().unwrap();
    let f = grouped_csv(&dir, "d.csv", &[1.0, 0.6], 20, 8);
    let out = mcv(["simulate", "--mimic-data", p(&f), "--replicates", "8", "--B", "19"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().nth(1).unwrap().starts_with("d,mimic,"));
    let out = mcv(["simulate", "--mimic-data", p(&f), "--mimic-null", "--replicates", "8", "--B", "19"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("d-null,mimic,"));
    assert!(text.lines().nth(1).unwrap().contains(",true,"));
}
