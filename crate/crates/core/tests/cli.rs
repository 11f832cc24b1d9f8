use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ambi::corpus::{load_manifest, Featurizer};
use ambi::models::load_checkpoint;
use ambi::training::{parse_epoch_log, select_checkpoint, CLASS_NAMES};
use serde_json::Value;

fn ambi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ambi"))
        .args(args)
        .env_remove("AMBI_CACHE_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn synth(dir: &Path, scripts: usize) -> PathBuf {
    let o = ambi(&["synth", "--out", p(dir), "--scripts", &scripts.to_string()]);
    assert!(o.status.success(), "{o:?}");
    dir.join("manifest.tsv")
}

const SMALL: &[&str] = &["--n-fft", "512", "--n-mels", "32"];

#[test]
fn featurize_is_idempotent_and_lists_failures() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth(&dir.path().join("data"), 10);
    let cache = dir.path().join("cache");
    let mut args = vec!["featurize", "--manifest", p(&manifest), "--cache-dir", p(&cache)];
    args.extend_from_slice(SMALL);

    let first = ambi(&args);
    assert!(first.status.success(), "{first:?}");
    assert!(stdout(&first).contains("computed 20, cached 0, failed 0"));
    assert_eq!(fs::read_dir(&cache).unwrap().count(), 20);

    let again = ambi(&args);
    assert!(stdout(&again).contains("computed 0, cached 20, failed 0"));

    let m = load_manifest(&manifest).unwrap();
    let victim = &m.records[3];
    fs::write(m.audio_path(victim), b"not a wav").unwrap();
    let fresh = dir.path().join("cache2");
    let mut args = vec!["featurize", "--manifest", p(&manifest), "--cache-dir", p(&fresh)];
    args.extend_from_slice(SMALL);
    let broken = ambi(&args);
    assert_eq!(broken.status.code(), Some(1));
    let text = stdout(&broken);
    assert!(text.contains(&format!("failed {}", victim.id)), "{text}");
    assert!(text.contains("computed 19, cached 0, failed 1"), "{text}");
}

#[test]
fn cache_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth(&dir.path().join("data"), 2);
    let cache = dir.path().join("env_cache");
    let o = Command::new(env!("CARGO_BIN_EXE_ambi"))
        .args(["featurize", "--manifest", p(&manifest)])
        .args(SMALL)
        .env("AMBI_CACHE_DIR", &cache)
        .output()
        .unwrap();
    assert!(o.status.success(), "{o:?}");
    assert_eq!(fs::read_dir(&cache).unwrap().count(), 4);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad_combo = ambi(&["train", "--variant", "audio_bre", "--text-mode", "sparse"]);
    assert_eq!(bad_combo.status.code(), Some(2));
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "variant = \"mha_a\"\nunknown_key = 1\n").unwrap();
    assert_eq!(ambi(&["train", "--config", p(&cfg)]).status.code(), Some(2));
    let no_manifest = ambi(&["featurize", "--cache-dir", p(dir.path())]);
    assert_eq!(no_manifest.status.code(), Some(2));

    let manifest = synth(&dir.path().join("data"), 2);
    let missing = dir.path().join("nope.ckpt");
    let o = ambi(&["eval", "--checkpoint", p(&missing), "--manifest", p(&manifest)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nope.ckpt"));
}

fn train(data: &Path, out: &Path, extra: &[&str]) -> Output {
    let manifest = data.join("manifest.tsv");
    let mut args = vec!["train", "--manifest", p(&manifest), "--out", p(out)];
    args.extend_from_slice(SMALL);
    args.extend_from_slice(extra);
    ambi(&args)
}

#[test]
fn train_writes_log_report_and_selected_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    synth(&data, 12);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let extra = [
        "--variant",
        "mha_a",
        "--epochs",
        "4",
        "--batch-size",
        "8",
        "--seed",
        "5",
        "--hidden",
        "6",
        "--head-hidden",
        "16",
    ];
    let o = train(&data, &a, &extra);
    assert!(o.status.success(), "{o:?}");

    let log = parse_epoch_log(&fs::read_to_string(a.join("log.csv")).unwrap()).unwrap();
    assert_eq!(log.len(), 4);
    let want = select_checkpoint(&log).unwrap().epoch;
    assert!(
        stdout(&o).contains(&format!("selected epoch {want} of 4")),
        "{}",
        stdout(&o)
    );
    let (_, card) = load_checkpoint(&a.join("model.ckpt")).unwrap();
    assert_eq!(card.epoch, Some(want));
    assert_eq!(card.seed, Some(5));
    assert_eq!(card.train_ids.len() + card.test_ids.len(), 24);
    assert!(a.join("checkpoints/epoch_004.ckpt").exists());

    let confusion = fs::read_to_string(a.join("confusion.csv")).unwrap();
    assert_eq!(confusion.lines().count(), 8);
    let per_class = fs::read_to_string(a.join("per_class_f1.csv")).unwrap();
    assert_eq!(per_class.lines().count(), 8);

    assert!(train(&data, &b, &extra).status.success());
    for f in ["log.csv", "metrics.txt", "confusion.csv", "per_class_f1.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    assert_eq!(
        fs::read(a.join("model.ckpt")).unwrap(),
        fs::read(b.join("model.ckpt")).unwrap()
    );
}

fn accuracy(o: &Output) -> f64 {
    let text = stdout(o);
    let line = text.lines().find(|l| l.starts_with("accuracy")).expect("accuracy line");
    line.split_whitespace().last().unwrap().parse().unwrap()
}

#[test]
fn overfit_eval_alt_transcripts_and_predict() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let manifest = synth(&data, 16);
    let out = dir.path().join("run");
    let o = train(
        &data,
        &out,
        &[
            "--variant",
            "para_bre_att",
            "--epochs",
            "120",
            "--batch-size",
            "4",
            "--hidden",
            "12",
        ],
    );
    assert!(o.status.success(), "{o:?}");
    let ckpt = out.join("model.ckpt");

    let eval = |extra: &[&str]| {
        let mut args = vec!["eval", "--checkpoint", p(&ckpt), "--manifest", p(&manifest)];
        args.extend_from_slice(extra);
        let o = ambi(&args);
        assert!(o.status.success(), "{o:?}");
        accuracy(&o)
    };
    let train_acc = eval(&["--subset", "train"]);
    assert!(train_acc >= 0.95, "train accuracy {train_acc}");
    let clean = eval(&[]);
    let alt = eval(&["--use-alt-transcript"]);
    assert!(alt <= clean, "alt {alt} > clean {clean}");

    let report_dir = dir.path().join("report");
    eval(&["--out", p(&report_dir)]);
    assert!(report_dir.join("confusion.csv").exists());

    let (model, card) = load_checkpoint(&ckpt).unwrap();
    let m = load_manifest(&manifest).unwrap();
    let f = Featurizer::new(card.features.clone(), card.variant.text_mode(), None).unwrap();
    for r in m.records.iter().take(4) {
        let wav = m.audio_path(r);
        let o = ambi(&[
            "predict",
            "--checkpoint",
            p(&ckpt),
            "--wav",
            p(&wav),
            "--transcript",
            &r.transcript,
        ]);
        assert!(o.status.success(), "{o:?}");
        let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
        let probs: Vec<f64> = v["probabilities"]
            .as_array()
            .unwrap()
            .iter()
            .map(|c| c["prob"].as_f64().unwrap())
            .collect();
        assert_eq!(probs.len(), 7);
        assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);

        let (audio, _) = f.audio_file(&wav, None).unwrap();
        let text = f.text(&r.transcript).unwrap();
        let expected = model.predict(&audio, text.as_ref()).unwrap();
        assert_eq!(v["label"], CLASS_NAMES[expected.label]);
        assert_eq!(v["audio_valid_len"], audio.valid_len());
        for site in v["attention"].as_array().unwrap() {
            let n = site["weights"].as_array().unwrap().len();
            let want = if site["site"].as_str().unwrap().starts_with("audio") {
                audio.valid_len()
            } else {
                text.as_ref().unwrap().valid_len()
            };
            assert_eq!(n, want, "{site}");
        }
    }
}
