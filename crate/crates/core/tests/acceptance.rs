//! Runs every config in `configs/acceptance/`, consolidates the results and
//! prints one PASS/FAIL line per acceptance criterion.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use stablelab::config::ExperimentConfig;
use stablelab::runner::{report, run_with_threads, threads_from_env, Check, Status};

/// Configs rerun under other thread counts for the determinism criterion.
const RERUN: &[&str] = &[
    "c01_lp",
    "c02_constant",
    "c03_sigma",
    "c04_beta_0",
    "c06_smooth",
    "c06_zvonkin",
    "c07_krylov",
    "c08_alpha15",
];

/// Wall-clock limits per criterion.
const RUNTIME: &[(u32, &str, f64)] = &[
    (1, "c01_lp", 10.0),
    (4, "c04_beta_m02", 300.0),
    (4, "c04_beta_0", 300.0),
    (5, "c05_alpha15", 600.0),
    (5, "c05_alpha08", 600.0),
];

fn configs() -> Vec<PathBuf> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/acceptance");
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "cfg"))
        .collect();
    v.sort();
    v
}

fn stem(p: &Path) -> String {
    p.file_stem().unwrap().to_string_lossy().into_owned()
}

fn load(path: &Path, out: &Path) -> ExperimentConfig {
    let mut cfg =
        ExperimentConfig::load(path, None).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    cfg.out = out.to_path_buf();
    cfg
}

fn files(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(
                    p.strip_prefix(dir).unwrap().to_path_buf(),
                    std::fs::read(&p).unwrap(),
                );
            }
        }
    }
    out
}

fn main() {
    let root = Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    let _ = std::fs::remove_dir_all(&root);
    let runs = root.join("runs");
    let threads = threads_from_env().unwrap();

    let mut times: BTreeMap<String, Duration> = BTreeMap::new();
    for path in configs() {
        let name = stem(&path);
        let start = Instant::now();
        let o = run_with_threads(&load(&path, &runs.join(&name)), threads)
            .unwrap_or_else(|e| panic!("{name}: {e}"));
        times.insert(name.clone(), start.elapsed());
        eprintln!(
            "{name}: {} in {:.1} s",
            o.status().label(),
            start.elapsed().as_secs_f64()
        );
        for line in o.lines() {
            eprintln!("  {line}");
        }
    }

    let index = report(&runs).unwrap();
    let index_bytes = std::fs::read(runs.join("index.json")).unwrap();
    report(&runs).unwrap();
    let idempotent = index_bytes == std::fs::read(runs.join("index.json")).unwrap();

    let mut per: BTreeMap<u32, (Status, Vec<String>)> = BTreeMap::new();
    for c in &index.summary.checks {
        per.insert(c.criterion.unwrap(), (c.status, Vec::new()));
    }
    let parsed: serde_json::Value = serde_json::from_slice(&index_bytes).unwrap();
    for e in parsed["experiments"].as_array().unwrap() {
        for c in e["summary"]["checks"].as_array().unwrap() {
            let Some(n) = c["criterion"].as_u64() else {
                continue;
            };
            let value = c["value"]
                .as_f64()
                .map(|v| format!("{v:.4e}"))
                .unwrap_or_else(|| "n/a".into());
            let entry = per.get_mut(&(n as u32)).unwrap();
            entry.1.push(format!(
                "{}/{}={value}",
                e["dir"].as_str().unwrap(),
                c["name"].as_str().unwrap()
            ));
        }
    }
    for &(n, name, limit) in RUNTIME {
        let secs = times[name].as_secs_f64();
        let c = Check::at_most("runtime-s", Some(n), secs, limit);
        let e = per.entry(n).or_insert((Status::Pass, Vec::new()));
        e.0 = Status::combine([e.0, c.status]);
        e.1.push(format!("{name} {secs:.1} s (limit {limit} s)"));
    }

    let mut mismatches = Vec::new();
    for name in RERUN {
        let path = configs().into_iter().find(|p| stem(p) == *name).unwrap();
        let reference = files(&runs.join(name));
        for (label, t) in [("threads-2", Some(2)), ("threads-3", Some(3))] {
            let dir = root.join(label).join(name);
            run_with_threads(&load(&path, &dir), t).unwrap();
            if files(&dir) != reference {
                mismatches.push(format!("{name}/{label}"));
            }
        }
    }
    let det = Status::of(mismatches.is_empty() && idempotent);
    let detail = if det == Status::Pass {
        format!(
            "{} configs byte-identical at default, 2 and 3 threads; report idempotent",
            RERUN.len()
        )
    } else {
        format!("mismatch {:?}; report idempotent {idempotent}", mismatches)
    };
    per.insert(11, (det, vec![detail]));

    let mut failed = Vec::new();
    for n in 1..=11 {
        let (status, detail) = per
            .get(&n)
            .cloned()
            .unwrap_or((Status::Fail, vec!["no checks recorded".into()]));
        println!("{} criterion {n}: {}", status.label(), detail.join("; "));
        if status != Status::Pass {
            failed.push(n);
        }
    }
    if !failed.is_empty() {
        eprintln!(
            "failing criteria {failed:?}; artifacts under {}",
            runs.display()
        );
        std::process::exit(1);
    }
    println!("acceptance: all 11 criteria passed");
}
