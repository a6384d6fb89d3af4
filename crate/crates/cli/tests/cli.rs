mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::*;
use ctxcrf::graph::format::write_graph;
use ctxcrf::graph::{Edge, SuperpixelGraph, SuperpixelNode};
use ctxcrf::{
    CoOccurrenceTable, CrfModel, JointFeatureMap, Relation, UnaryFeatureMap, WeightVector,
};

fn ctxcrf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ctxcrf"))
        .args(args)
        .output()
        .unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// Small labelled corpus with features, ready for stats/train.
fn featured_corpus(dir: &Path, count: usize) {
    write_scene_corpus(dir, count, 64, 10);
    let (images, truth, sp, feat) = (
        dir.join("images"),
        dir.join("truth"),
        dir.join("sp"),
        dir.join("feat"),
    );
    let o = ctxcrf(&[
        "superpixels",
        "--images",
        s(&images),
        "--truth",
        s(&truth),
        "--out",
        s(&sp),
        "--classes",
        "3",
        "--target",
        "40",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = ctxcrf(&[
        "features",
        "--graphs",
        s(&sp),
        "--images",
        s(&images),
        "--out",
        s(&feat),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn help_exits_zero() {
    let o = ctxcrf(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    for sub in [
        "superpixels",
        "features",
        "stats",
        "train",
        "predict",
        "eval",
        "tune-alpha",
    ] {
        assert!(stdout(&o).contains(sub), "{sub} missing from help");
    }
}

#[test]
fn unknown_flag_is_usage_error() {
    assert_eq!(ctxcrf(&["train", "--bogus"]).status.code(), Some(1));
}

#[test]
fn empty_image_directory_is_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = ctxcrf(&[
        "superpixels",
        "--images",
        s(dir.path()),
        "--out",
        s(&out),
        "--classes",
        "3",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no images found"), "{}", stderr(&o));
}

#[test]
fn non_image_files_are_skipped() {
    let dir = tempfile::tempdir().unwrap();
    write_scene_corpus(dir.path(), 2, 48, 1);
    std::fs::write(dir.path().join("images/README.txt"), "not an image").unwrap();
    let out = dir.path().join("sp");
    let o = ctxcrf(&[
        "superpixels",
        "--images",
        s(&dir.path().join("images")),
        "--out",
        s(&out),
        "--classes",
        "3",
        "--target",
        "20",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let graphs = std::fs::read_dir(&out)
        .unwrap()
        .filter(|e| {
            e.as_ref()
                .unwrap()
                .path()
                .extension()
                .is_some_and(|x| x == "spgraph")
        })
        .count();
    assert_eq!(graphs, 2);
}

#[test]
fn unreadable_image_fails_only_that_image() {
    let dir = tempfile::tempdir().unwrap();
    write_scene_corpus(dir.path(), 2, 48, 1);
    std::fs::write(dir.path().join("images/broken.png"), "garbage").unwrap();
    let out = dir.path().join("sp");
    let o = ctxcrf(&[
        "superpixels",
        "--images",
        s(&dir.path().join("images")),
        "--out",
        s(&out),
        "--classes",
        "3",
        "--target",
        "20",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("broken"), "{}", stderr(&o));
    assert!(out.join("img000.spgraph").is_file() && out.join("img001.spgraph").is_file());
}

#[test]
fn non_positive_c_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("m.txt");
    for c in ["0", "-1"] {
        let o = ctxcrf(&[
            "train",
            "--graphs",
            s(dir.path()),
            "--out",
            s(&model),
            "--c",
            c,
        ]);
        assert_eq!(o.status.code(), Some(1), "--c {c}: {}", stderr(&o));
    }
}

#[test]
fn cooccur_mode_needs_table() {
    let dir = tempfile::tempdir().unwrap();
    let (graphs, model) = alpha_fixture(dir.path());
    let out = dir.path().join("pred");
    let o = ctxcrf(&[
        "predict",
        "--graphs",
        s(&graphs),
        "--model",
        s(&model),
        "--out",
        s(&out),
        "--pairwise-mode",
        "cooccur",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--cooccur"), "{}", stderr(&o));
}

#[test]
fn stats_requires_labels() {
    let dir = tempfile::tempdir().unwrap();
    write_scene_corpus(dir.path(), 1, 48, 2);
    let sp = dir.path().join("sp");
    assert!(ctxcrf(&[
        "superpixels",
        "--images",
        s(&dir.path().join("images")),
        "--out",
        s(&sp),
        "--classes",
        "3",
        "--target",
        "20"
    ])
    .status
    .success());
    let o = ctxcrf(&[
        "stats",
        "--graphs",
        s(&sp),
        "--out",
        s(&dir.path().join("t.cooccur")),
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

/// Two nodes of class 0 where the unary term mislabels the second one;
/// smoothing only wins once alpha * 0.6 exceeds the unary margin of 1.
fn alpha_fixture(dir: &Path) -> (std::path::PathBuf, std::path::PathBuf) {
    let node = |id: usize, x: f64| SuperpixelNode {
        id,
        centroid_row: 0.0,
        centroid_col: id as f64,
        area: 50,
        features: vec![x],
    };
    let graph = |truth: Vec<usize>| SuperpixelGraph {
        nodes: vec![node(0, 2.0), node(1, -1.0)],
        edges: vec![Edge {
            p: 0,
            q: 1,
            relation: Relation::LeftOf,
            boundary_length: 1.0,
            pairwise_features: vec![],
        }],
        feat_dim: 1,
        pfeat_dim: 0,
        num_classes: 2,
        ground_truth: Some(labeling(&truth)),
    };
    let graphs = dir.join("val");
    std::fs::create_dir_all(&graphs).unwrap();
    std::fs::write(graphs.join("a.spgraph"), write_graph(&graph(vec![0, 0]))).unwrap();

    let table = CoOccurrenceTable::build(&[graph(vec![0, 1]), graph(vec![0, 0])]).unwrap();
    std::fs::write(dir.join("t.cooccur"), table.write()).unwrap();

    let map = JointFeatureMap::new(UnaryFeatureMap::raw(2, 1));
    let w = WeightVector {
        unary: vec![0.0, 1.0],
        pairwise: vec![0.6; map.pairwise_dim(0)],
    };
    let model = dir.join("model.txt");
    CrfModel::new(map, w, 0).unwrap().save(&model).unwrap();
    (graphs, model)
}

#[test]
fn tune_alpha_picks_the_improving_value() {
    let dir = tempfile::tempdir().unwrap();
    let (graphs, model) = alpha_fixture(dir.path());
    let table = dir.path().join("t.cooccur");
    let tuned = dir.path().join("tuned.txt");
    let o = ctxcrf(&[
        "tune-alpha",
        "--graphs",
        s(&graphs),
        "--model",
        s(&model),
        "--cooccur",
        s(&table),
        "--algorithm",
        "exhaustive",
        "--out",
        s(&tuned),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("0.5,0.5") && text.contains("2,1"), "{text}");
    assert!(
        text.lines().last().unwrap().starts_with("best alpha 2 "),
        "{text}"
    );
    let m = CrfModel::load(&tuned).unwrap();
    assert_eq!(m.alpha, 2.0);
    assert!(dir.path().join("tuned.txt.config").is_file());
}

#[test]
fn tune_alpha_single_value_grid() {
    let dir = tempfile::tempdir().unwrap();
    let (graphs, model) = alpha_fixture(dir.path());
    let table = dir.path().join("t.cooccur");
    let o = ctxcrf(&[
        "tune-alpha",
        "--graphs",
        s(&graphs),
        "--model",
        s(&model),
        "--cooccur",
        s(&table),
        "--grid",
        "1.25",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("best alpha 1.25 "), "{}", stdout(&o));
}

#[test]
fn config_file_fills_unset_flags() {
    let dir = tempfile::tempdir().unwrap();
    write_scene_corpus(dir.path(), 1, 48, 3);
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# overrides\ntarget = 30\ncompactness = 20\n").unwrap();
    let out = dir.path().join("sp");
    let o = ctxcrf(&[
        "superpixels",
        "--config",
        s(&cfg),
        "--images",
        s(&dir.path().join("images")),
        "--out",
        s(&out),
        "--classes",
        "3",
        "--target",
        "25",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let resolved = std::fs::read_to_string(out.join("run.config")).unwrap();
    assert!(resolved.contains("target = 25\n"), "{resolved}");
    assert!(resolved.contains("compactness = 20\n"), "{resolved}");
    assert!(
        resolved.contains("iterations = 10  # default"),
        "{resolved}"
    );
}

#[test]
fn training_is_reproducible_and_logged() {
    let dir = tempfile::tempdir().unwrap();
    featured_corpus(dir.path(), 4);
    let feat = dir.path().join("feat");
    let (a, b) = (dir.path().join("a.txt"), dir.path().join("b.txt"));
    for m in [&a, &b] {
        let o = ctxcrf(&[
            "train",
            "--graphs",
            s(&feat),
            "--out",
            s(m),
            "--seed",
            "9",
            "--max-iterations",
            "15",
            "-j",
            "2",
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let log = std::fs::read_to_string(dir.path().join("a.txt.log.csv")).unwrap();
    assert!(log.starts_with("iteration,lower_bound,max_violation,xi,oracle,wall_time_s\n"));
    assert!(log.lines().count() >= 2);
    let resolved = std::fs::read_to_string(dir.path().join("a.txt.config")).unwrap();
    assert!(
        resolved.contains("seed = 9\n") && resolved.contains("c = 100  # default"),
        "{resolved}"
    );
}

#[test]
fn predict_and_eval_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    featured_corpus(dir.path(), 3);
    let (feat, sp) = (dir.path().join("feat"), dir.path().join("sp"));
    let model = dir.path().join("m.txt");
    assert!(ctxcrf(&[
        "train",
        "--graphs",
        s(&feat),
        "--out",
        s(&model),
        "--max-iterations",
        "10"
    ])
    .status
    .success());
    let pred = dir.path().join("pred");
    let o = ctxcrf(&[
        "predict",
        "--graphs",
        s(&feat),
        "--model",
        s(&model),
        "--out",
        s(&pred),
        "--rasters",
        s(&sp),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(pred.join("img000.spgraph").is_file() && pred.join("img000.pred.png").is_file());
    let metrics = dir.path().join("metrics");
    let o = ctxcrf(&[
        "eval",
        "--predictions",
        s(&pred),
        "--truth",
        s(&feat),
        "--rasters",
        s(&sp),
        "--pixel-truth",
        s(&dir.path().join("truth")),
        "--foreground",
        "2",
        "--out",
        s(&metrics),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(metrics.join("metrics.csv")).unwrap();
    assert!(csv.contains("Global,") && csv.contains("Average,"), "{csv}");
    assert!(metrics.join("metrics.txt").is_file());
}
