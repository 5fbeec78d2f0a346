use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gal_cli::eval::EvalReport;
use gal_cli::overlay::render_overlay;
use gal_core::{GeometricClass, LabelMap, Raster, NUM_CLASSES};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;

fn gal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gal"))
        .args(args)
        .output()
        .unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Every file under `dir`, sorted, with its contents.
fn tree(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((
                    p.strip_prefix(dir).unwrap().to_path_buf(),
                    fs::read(&p).unwrap(),
                ));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn synth_is_byte_identical_across_runs() {
    let t = TempDir::new().unwrap();
    let (a, b) = (t.path().join("a"), t.path().join("b"));
    for d in [&a, &b] {
        let o = gal(&["synth", "--seed", "9", "--count", "5", "--out", s(d)]);
        assert!(o.status.success());
    }
    let (ta, tb) = (tree(&a), tree(&b));
    assert_eq!(ta.len(), 20);
    assert_eq!(ta, tb);
}

#[test]
fn run_is_byte_identical_across_runs() {
    let t = TempDir::new().unwrap();
    let data = t.path().join("data");
    assert!(gal(&[
        "synth",
        "--seed",
        "4",
        "--count",
        "4",
        "--kinds",
        "occluded",
        "--out",
        s(&data)
    ])
    .status
    .success());
    let params = t.path().join("params.txt");
    fs::write(&params, "0.5 0.1 0.1 0.2 0.1 0.1\n").unwrap();
    let image = data.join("images/0003.ppm");
    let boxes = data.join("boxes/0003.txt");
    let mut outs = Vec::new();
    for k in 0..2 {
        let out = t.path().join(format!("out{k}"));
        let o = gal(&[
            "run",
            s(&image),
            "--boxes",
            s(&boxes),
            "--params",
            s(&params),
            "--out",
            s(&out),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        outs.push((o.stdout, tree(&out)));
    }
    assert_eq!(outs[0].1.len(), 5);
    assert_eq!(outs[0], outs[1]);
}

#[test]
fn missing_image_exits_with_input_error() {
    let t = TempDir::new().unwrap();
    let params = t.path().join("params.txt");
    fs::write(&params, "0.2 0.2 0.2 0.2 0.2 0.1\n").unwrap();
    let o = gal(&["run", s(&t.path().join("nope.ppm")), "--params", s(&params)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
}

#[test]
fn invalid_config_exits_with_config_error() {
    let t = TempDir::new().unwrap();
    let data = t.path().join("data");
    assert!(gal(&["synth", "--count", "1", "--out", s(&data)])
        .status
        .success());
    let image = data.join("images/0000.ppm");
    for text in ["no_such_key 1\n", "lsd_min_length fifteen\n"] {
        let cfg = t.path().join("bad.cfg");
        fs::write(&cfg, text).unwrap();
        let o = gal(&["run", s(&image), "--config", s(&cfg)]);
        assert_eq!(o.status.code(), Some(3), "{text}");
    }
    let params = t.path().join("params.txt");
    fs::write(&params, "0.2 0.2\n").unwrap();
    assert_eq!(
        gal(&["run", s(&image), "--params", s(&params)])
            .status
            .code(),
        Some(3)
    );
}

#[test]
fn synth_rejects_unknown_kinds() {
    let t = TempDir::new().unwrap();
    let o = gal(&["synth", "--kinds", "castle", "--out", s(t.path())]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn eval_of_truth_against_itself_is_perfect() {
    let t = TempDir::new().unwrap();
    assert!(gal(&["synth", "--count", "3", "--out", s(t.path())])
        .status
        .success());
    let truth = t.path().join("truth");
    let o = gal(&["eval", s(&truth), s(&truth)]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().any(|l| l == "overall 1.000000"), "{text}");
}

fn random_map(rng: &mut ChaCha8Rng, w: usize, h: usize) -> LabelMap {
    let codes: Vec<u8> = (0..w * h)
        .map(|_| rng.random_range(0..NUM_CLASSES as u8))
        .collect();
    LabelMap::new(w, h, codes).unwrap()
}

proptest! {
    #[test]
    fn confusion_matches_a_pixel_tally(seed in any::<u64>(), w in 1usize..20, h in 1usize..20) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (pred, truth) = (random_map(&mut rng, w, h), random_map(&mut rng, w, h));
        let mut r = EvalReport::default();
        let acc = r.add("x", &pred, &truth).unwrap();
        let mut tally = [[0u64; NUM_CLASSES]; NUM_CLASSES];
        for y in 0..h {
            for x in 0..w {
                tally[truth.class_of(y * w + x).index()][pred.class_of(y * w + x).index()] += 1;
            }
        }
        prop_assert_eq!(r.confusion, tally);
        let same = (0..w * h).filter(|&p| pred.class_of(p) == truth.class_of(p)).count();
        prop_assert_eq!(acc, same as f64 / (w * h) as f64);
        prop_assert_eq!(r.overall(), acc);
    }

    #[test]
    fn overlay_lies_between_image_and_palette(seed in any::<u64>(), w in 1usize..12, h in 1usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<f64> = (0..w * h * 3).map(|_| rng.random_range(0.0..=1.0)).collect();
        let img = Raster::new(w, h, 3, data).unwrap();
        let labels = random_map(&mut rng, w, h);
        let o = render_overlay(&img, &labels).unwrap();
        for p in 0..w * h {
            let (px, c, v) = (img.rgb_at(p), labels.class_of(p).color(), o.rgb_at(p));
            for k in 0..3 {
                let c = f64::from(c[k]) / 255.0;
                prop_assert!(v[k] >= px[k].min(c) - 1e-12 && v[k] <= px[k].max(c) + 1e-12);
            }
        }
    }
}

#[test]
fn overlay_of_palette_colors_is_idempotent() {
    let labels = LabelMap::new(7, 1, (0..7).collect()).unwrap();
    let data: Vec<f64> = GeometricClass::ALL
        .iter()
        .flat_map(|c| c.color().map(|v| f64::from(v) / 255.0))
        .collect();
    let img = Raster::new(7, 1, 3, data).unwrap();
    let o = render_overlay(&img, &labels).unwrap();
    for p in 0..7 {
        let (a, b) = (o.rgb_at(p), img.rgb_at(p));
        assert!((0..3).all(|k| (a[k] - b[k]).abs() < 1e-12));
    }
}
