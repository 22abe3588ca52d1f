use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn harmonia(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_harmonia")).args(args).output().unwrap()
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn error_line(out: &Output) -> Value {
    let text = String::from_utf8(out.stderr.clone()).unwrap();
    let lines: Vec<&str> = text.lines().filter(|l| l.starts_with('{')).collect();
    assert_eq!(lines.len(), 1, "{text}");
    serde_json::from_str(lines[0]).unwrap()
}

fn write(dir: &Path, name: &str, value: Value) -> String {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string(&value).unwrap()).unwrap();
    path.to_str().unwrap().to_owned()
}

fn example_files(dir: &Path) -> (String, String, String) {
    let look = write(
        dir,
        "look.json",
        json!({"items": [{"role": "dress_costume", "color_id": 12}, {"role": "shoes_bags", "color_id": 1}]}),
    );
    let user = write(dir, "user.json", json!({"user_id": "x", "ratings": {"12": 0.8, "1": 0.5}}));
    let kb = write(
        dir,
        "kb.json",
        json!({"version": "1", "palettes": [
            {"id": 27, "member_count": 120, "entries": [{"id": 12, "w": 0.5}, {"id": 1, "w": 0.3}, {"id": 91, "w": 0.2}]},
            {"id": 30, "member_count": 80, "entries": [{"id": 70, "w": 1.0}]}
        ]}),
    );
    (look, user, kb)
}

#[test]
fn extract_uniform_red_gives_one_color() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("red.png");
    image::RgbImage::from_pixel(64, 64, image::Rgb([255, 0, 0])).save(&path).unwrap();
    let v = stdout_json(&harmonia(&["extract", path.to_str().unwrap()]));
    assert_eq!(v["entries"], json!([{"id": 6, "w": 1.0}]));
    assert_eq!(v["width"], 64);
}

#[test]
fn score_worked_example() {
    let dir = tempfile::tempdir().unwrap();
    let (look, user, kb) = example_files(dir.path());
    let v = stdout_json(&harmonia(&["score", "--look", &look, "--user", &user, "--kb", &kb]));
    assert!((v["value"].as_f64().unwrap() - 0.85).abs() < 1e-9);
    assert!((v["components"]["weighted_scp"].as_f64().unwrap() - 0.7).abs() < 1e-9);
    assert_eq!(v["matched_palette_id"], 27);
    let g = stdout_json(&harmonia(&["score", "--look", &look, "--guest", "--kb", &kb]));
    assert_eq!(g["value"], 1.0);
}

#[test]
fn rank_orders_by_predicted_preference() {
    let dir = tempfile::tempdir().unwrap();
    let (_, user, kb) = example_files(dir.path());
    let anchor = write(dir.path(), "anchor.json", json!({"items": [{"role": "dress_costume", "color_id": 12}]}));
    let item = |id: &str, color: u16, role: &str| {
        json!({"item_id": id, "role": role, "name": id, "descriptor": {"entries": [{"id": color, "w": 1.0}]}})
    };
    let catalog = write(
        dir.path(),
        "catalog.json",
        json!({"items": [item("far", 70, "shoes_bags"), item("match", 1, "shoes_bags"), item("ring", 91, "accessory")]}),
    );
    let v = stdout_json(&harmonia(&["rank", "--anchor", &anchor, "--catalog", &catalog, "--kb", &kb, "--user", &user]));
    let order: Vec<&str> = v.as_array().unwrap().iter().map(|r| r["item"]["item_id"].as_str().unwrap()).collect();
    assert_eq!(order, ["ring", "match", "far"]);
    assert!((v[1]["score"]["value"].as_f64().unwrap() - 0.85).abs() < 1e-9);
    let v = stdout_json(&harmonia(&["rank", "--anchor", &anchor, "--catalog", &catalog, "--kb", &kb, "--role", "accessory"]));
    assert_eq!(v.as_array().unwrap().len(), 1);
}

#[test]
fn eval_reports_worked_fixtures() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(
        dir.path(),
        "q.json",
        json!({"queries": [
            {"retrieved": 4, "relevant_retrieved": 2, "relevant_in_db": 8},
            {"retrieved": 4, "relevant_retrieved": 4, "relevant_in_db": 8}
        ]}),
    );
    let v = stdout_json(&harmonia(&["eval", "pr", "--fixtures", &f]));
    assert_eq!((v["precision"].as_f64(), v["recall"].as_f64(), v["relevance"].as_f64()), (Some(0.75), Some(0.375), Some(2.0)));
    let p = write(dir.path(), "p.json", json!({"pairs": [{"real": 0.8, "predicted": 0.7}, {"real": 0.6, "predicted": 0.9}]}));
    let v = stdout_json(&harmonia(&["eval", "diff", "--pairs", &p]));
    assert!((v["average_difference"].as_f64().unwrap() - 0.2).abs() < 1e-12);
    let out = harmonia(&["eval", "diff", "--pairs", &p, "--table"]);
    assert!(String::from_utf8(out.stdout).unwrap().trim_end().ends_with("D = 0.200000"));

    let zero = write(dir.path(), "z.json", json!({"queries": [{"retrieved": 3, "relevant_retrieved": 0, "relevant_in_db": 4}]}));
    let out = harmonia(&["eval", "pr", "--fixtures", &zero]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_line(&out)["error"], "data");
}

#[test]
fn gen_corpus_then_mine_recovers_planted_palettes_reproducibly() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    let corpus = corpus.to_str().unwrap();
    let gen = harmonia(&["gen-corpus", "--palettes", "8", "--images", "500", "--noise", "0.05", "--seed", "11", "--out", corpus]);
    assert!(gen.status.success());
    let manifest = format!("{corpus}/manifest.json");
    let first_manifest = fs::read(&manifest).unwrap();

    let kb1 = dir.path().join("kb1.json");
    let kb2 = dir.path().join("kb2.json");
    let run = |kb: &Path| {
        harmonia(&["mine", corpus, "--min-size", "10", "--out", kb.to_str().unwrap(), "--manifest", &manifest])
    };
    let a = run(&kb1);
    let b = run(&kb2);
    let stats = stdout_json(&a);
    assert!(stats["recovery"]["recovered"].as_u64().unwrap() >= 7, "{stats}");
    assert_eq!(stats["items_mined"], 500);
    assert!(stats.get("latency").is_none());
    assert_eq!(fs::read(&kb1).unwrap(), fs::read(&kb2).unwrap());
    let strip_kb = |o: &Output| {
        let mut v: Value = serde_json::from_slice(&o.stdout).unwrap();
        v.as_object_mut().unwrap().remove("kb");
        v
    };
    assert_eq!(strip_kb(&a), strip_kb(&b));

    let again = harmonia(&["gen-corpus", "--palettes", "8", "--images", "500", "--noise", "0.05", "--seed", "11", "--out", corpus]);
    assert_eq!(again.stdout, gen.stdout);
    assert_eq!(fs::read(&manifest).unwrap(), first_manifest);
}

#[test]
fn failures_exit_with_codes_and_one_json_line() {
    let dir = tempfile::tempdir().unwrap();
    let out = harmonia(&["extract", "/no/such/image.png"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_line(&out)["error"], "data");

    let out = harmonia(&["score", "--look", "x.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_line(&out)["error"], "usage");

    let (look, _, kb) = example_files(dir.path());
    let bad_user = write(dir.path(), "bad.json", json!({"user_id": "x", "ratings": {"12": 1.5}}));
    let out = harmonia(&["score", "--look", &look, "--user", &bad_user, "--kb", &kb]);
    assert_eq!(out.status.code(), Some(2));
    assert!(error_line(&out)["message"].as_str().unwrap().contains("1.5"));

    let unknown = write(dir.path(), "unknown.json", json!({"items": [{"role": "dress_costume", "color_id": 400}]}));
    let out = harmonia(&["score", "--look", &unknown, "--guest", "--kb", &kb]);
    assert_eq!(out.status.code(), Some(2));

    let out = harmonia(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
}
