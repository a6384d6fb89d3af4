//! Subcommand implementations.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use ctxcrf::energy::PairwiseContext;
use ctxcrf::features::pairwise::{describe_regions, fill_appearance, fill_pairwise};
use ctxcrf::features::{
    train_linear_svm, PairwiseChannel, PairwiseFeatureSpec, Standardizer, SvmTrainConfig,
};
use ctxcrf::graph::format::{parse_graph, write_graph};
use ctxcrf::inference::map_inference;
use ctxcrf::ssvm::{train as ssvm_train, TrainingStatus};
use ctxcrf::superpixels::{build_skeleton, load_rgb, project_labels, slic_segment};
use ctxcrf::{
    Algorithm, CoOccurrenceTable, ConfusionMatrix, CrfModel, InferenceConfig, JointFeatureMap,
    LabelRaster, Labeling, LossSpec, PairwiseMode, SlicConfig, SsvmConfig, SuperpixelGraph,
    UnaryFeatureMap, VOID_LABEL,
};
use image::GrayImage;
use rayon::prelude::*;

use crate::{
    usage, EvalArgs, FeaturesArgs, InternalError, PartialFailure, PredictArgs, StatsArgs,
    SuperpixelsArgs, TrainArgs, TuneAlphaArgs,
};

const IMAGE_EXTENSIONS: [&str; 4] = ["png", "ppm", "pgm", "pnm"];
const RASTER_SUFFIX: &str = ".labels.png";

fn extension(path: &Path) -> Option<String> {
    path.extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in
        std::fs::read_dir(dir).with_context(|| format!("reading directory {}", dir.display()))?
    {
        let path = entry?.path();
        if path.is_file() {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

/// Image files of `dir`, sorted; other files are skipped with a warning.
fn image_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for path in sorted_entries(dir)? {
        match extension(&path) {
            Some(e) if IMAGE_EXTENSIONS.contains(&e.as_str()) => out.push(path),
            _ => log::warn!("skipping non-image file {}", path.display()),
        }
    }
    Ok(out)
}

fn find_image(dir: &Path, stem: &str) -> Result<PathBuf> {
    IMAGE_EXTENSIONS
        .iter()
        .map(|e| dir.join(format!("{stem}.{e}")))
        .find(|p| p.is_file())
        .ok_or_else(|| anyhow!("no image named {stem}.* in {}", dir.display()))
}

fn graph_files(dir: &Path) -> Result<Vec<PathBuf>> {
    Ok(sorted_entries(dir)?
        .into_iter()
        .filter(|p| extension(p).as_deref() == Some("spgraph"))
        .collect())
}

fn read_graph(path: &Path) -> Result<SuperpixelGraph> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let g = parse_graph(&text)
        .map_err(ctxcrf::Error::from)
        .with_context(|| format!("parsing {}", path.display()))?;
    g.validate()
        .with_context(|| format!("validating {}", path.display()))?;
    Ok(g)
}

/// All graphs of `dir` in file-name order.
fn load_graphs(dir: &Path) -> Result<Vec<(String, SuperpixelGraph)>> {
    let files = graph_files(dir)?;
    if files.is_empty() {
        bail!("no .spgraph files found in {}", dir.display());
    }
    files
        .par_iter()
        .map(|p| Ok((stem(p), read_graph(p)?)))
        .collect()
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Runs `f` on every item in parallel, reports failures on stderr and
/// returns the successes in input order.
fn per_file<T: Send + Sync, R: Send>(
    items: &[T],
    label: impl Fn(&T) -> String + Sync,
    f: impl Fn(&T) -> Result<R> + Sync,
) -> (Vec<R>, usize) {
    let results: Vec<Result<R>> = items.par_iter().map(&f).collect();
    let mut ok = Vec::new();
    let mut failed = 0;
    for (item, r) in items.iter().zip(results) {
        match r {
            Ok(v) => ok.push(v),
            Err(e) => {
                eprintln!("{}: {e:#}", label(item));
                failed += 1;
            }
        }
    }
    (ok, failed)
}

fn finish(failed: usize) -> Result<()> {
    if failed > 0 {
        return Err(PartialFailure(failed).into());
    }
    Ok(())
}

fn parse_algorithm(name: &str) -> Result<Algorithm> {
    Algorithm::from_name(name).ok_or_else(|| {
        usage(format!(
            "unknown algorithm {name:?} (exhaustive, icm, expansion)"
        ))
    })
}

fn parse_mode(name: &str) -> Result<PairwiseMode> {
    PairwiseMode::from_name(name).ok_or_else(|| {
        usage(format!(
            "unknown pairwise mode {name:?} (plain, mutex, cooccur)"
        ))
    })
}

fn parse_channels(spec: &str) -> Result<Vec<PairwiseChannel>> {
    match spec.trim() {
        "all" => Ok(PairwiseChannel::ALL.to_vec()),
        "none" | "" => Ok(Vec::new()),
        list => list
            .split(',')
            .map(|s| {
                PairwiseChannel::from_name(s.trim())
                    .ok_or_else(|| usage(format!("unknown pairwise channel {s:?}")))
            })
            .collect(),
    }
}

fn parse_grid(spec: &str, what: &str) -> Result<Vec<f64>> {
    let values: Vec<f64> = spec
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| usage(format!("{what}: cannot parse {s:?}")))
        })
        .collect::<Result<_>>()?;
    if values.is_empty() || values.iter().any(|v| !v.is_finite() || *v <= 0.0) {
        return Err(usage(format!("{what} values must be positive")));
    }
    Ok(values)
}

fn load_table(path: Option<&PathBuf>) -> Result<Option<CoOccurrenceTable>> {
    path.map(|p| {
        let text =
            std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        CoOccurrenceTable::parse(&text).with_context(|| format!("parsing {}", p.display()))
    })
    .transpose()
}

fn inference_config(
    algorithm: &str,
    max_sweeps: usize,
    restarts: usize,
    seed: u64,
) -> Result<InferenceConfig> {
    Ok(InferenceConfig {
        algorithm: parse_algorithm(algorithm)?,
        max_sweeps,
        restarts,
        seed,
        ..InferenceConfig::default()
    })
}

// ---------------------------------------------------------------- superpixels

fn load_class_map(path: &Path, width: u32, height: u32, num_classes: usize) -> Result<Vec<usize>> {
    let img = image::open(path)
        .with_context(|| format!("reading {}", path.display()))?
        .into_luma8();
    if img.dimensions() != (width, height) {
        bail!(
            "{} is {}x{}, image is {width}x{height}",
            path.display(),
            img.width(),
            img.height()
        );
    }
    img.into_raw()
        .into_iter()
        .map(|v| {
            let c = usize::from(v);
            if c == VOID_LABEL || c < num_classes {
                Ok(c)
            } else {
                Err(anyhow::Error::new(ctxcrf::Error::LabelOutOfRange {
                    label: c,
                    num_classes,
                }))
                .with_context(|| format!("in {}", path.display()))
            }
        })
        .collect()
}

pub fn superpixels(args: &SuperpixelsArgs, resolved: &str) -> Result<()> {
    if args.classes == 0 || args.classes >= VOID_LABEL {
        return Err(usage(format!("--classes must be in 1..{VOID_LABEL}")));
    }
    let slic = SlicConfig {
        target_count: args.target,
        compactness: args.compactness,
        max_iterations: args.iterations,
    };
    slic.validate()?;
    let images = image_files(&args.images)?;
    if images.is_empty() {
        return Err(ctxcrf::Error::InvalidGraph(format!(
            "no images found in {}",
            args.images.display()
        ))
        .into());
    }
    create_dir(&args.out)?;
    write_file(&args.out.join("run.config"), resolved)?;
    let (rows, failed) = per_file(
        &images,
        |p| p.display().to_string(),
        |path| {
            let img = load_rgb(path)?;
            let raster = slic_segment(&img, &slic)?;
            let mut g = build_skeleton(&raster, args.classes);
            let name = stem(path);
            let mut quantization = None;
            if let Some(dir) = &args.truth {
                let classes = load_class_map(
                    &find_image(dir, &name)?,
                    raster.width,
                    raster.height,
                    args.classes,
                )?;
                let (labels, mismatched) = project_labels(&raster, &classes, args.classes);
                let labeled = classes.iter().filter(|&&c| c != VOID_LABEL).count();
                g.ground_truth = Some(labels);
                quantization = Some((mismatched, labeled));
            }
            write_file(&args.out.join(format!("{name}.spgraph")), write_graph(&g))?;
            raster.save_png(&args.out.join(format!("{name}{RASTER_SUFFIX}")))?;
            log::info!("{name}: {} superpixels", g.num_nodes());
            Ok((name, g.num_nodes(), quantization))
        },
    );
    if args.truth.is_some() {
        let mut csv = String::from("image,superpixels,mismatched_pixels,labeled_pixels,error\n");
        let (mut total_mis, mut total_px) = (0u64, 0usize);
        for (name, n, q) in &rows {
            let (mis, px) = q.expect("truth given");
            total_mis += mis;
            total_px += px;
            csv.push_str(&format!(
                "{name},{n},{mis},{px},{}\n",
                mis as f64 / px.max(1) as f64
            ));
        }
        csv.push_str(&format!(
            "total,,{total_mis},{total_px},{}\n",
            total_mis as f64 / total_px.max(1) as f64
        ));
        write_file(&args.out.join("quantization.csv"), csv)?;
        eprintln!(
            "quantization error {:.4}% of labeled pixels",
            100.0 * total_mis as f64 / total_px.max(1) as f64
        );
    }
    finish(failed)
}

// ---------------------------------------------------------------- features

pub fn features(args: &FeaturesArgs, resolved: &str) -> Result<()> {
    let spec = PairwiseFeatureSpec {
        channels: parse_channels(&args.pairwise_channels)?,
        hist_bins: args.hist_bins,
        lbp_radius: args.lbp_radius,
    };
    if !spec.channels.is_empty() {
        spec.validate()?;
    } else if args.hist_bins == 0 || args.lbp_radius == 0 {
        return Err(usage("--hist-bins and --lbp-radius must be positive"));
    }
    let files = graph_files(&args.graphs)?;
    if files.is_empty() {
        bail!("no .spgraph files found in {}", args.graphs.display());
    }
    let rasters = args.rasters.clone().unwrap_or_else(|| args.graphs.clone());
    create_dir(&args.out)?;
    write_file(&args.out.join("run.config"), resolved)?;
    let (_, failed) = per_file(
        &files,
        |p| p.display().to_string(),
        |path| {
            let name = stem(path);
            let mut g = read_graph(path)?;
            let raster = LabelRaster::load_png(&rasters.join(format!("{name}{RASTER_SUFFIX}")))?;
            if raster.num_regions() != g.num_nodes() {
                bail!(
                    "raster has {} regions, graph has {} nodes",
                    raster.num_regions(),
                    g.num_nodes()
                );
            }
            let img = load_rgb(&find_image(&args.images, &name)?)?;
            let descriptors = describe_regions(&img, &raster, &spec)?;
            fill_appearance(&mut g, &descriptors)?;
            if spec.channels.is_empty() {
                g.edges.iter_mut().for_each(|e| e.pairwise_features.clear());
                g.pfeat_dim = 0;
            } else {
                fill_pairwise(&mut g, &descriptors, &spec)?;
            }
            write_file(&args.out.join(format!("{name}.spgraph")), write_graph(&g))
        },
    );
    finish(failed)
}

// ---------------------------------------------------------------- stats

pub fn stats(args: &StatsArgs, resolved: &str) -> Result<()> {
    let corpus: Vec<SuperpixelGraph> = load_graphs(&args.graphs)?
        .into_iter()
        .map(|(_, g)| g)
        .collect();
    let mut table = CoOccurrenceTable::build(&corpus)?;
    table.smoothing = args.smoothing;
    table
        .check_invariants()
        .map_err(|e| InternalError(format!("co-occurrence table: {e}")))?;
    write_file(&args.out, table.write())?;
    write_file(&sidecar(&args.out, ".config"), resolved)?;
    eprintln!("{} images, {} classes", corpus.len(), table.num_classes());
    Ok(())
}

// ---------------------------------------------------------------- train

struct Prepared {
    map: JointFeatureMap,
    loss: LossSpec,
    channels: Vec<PairwiseChannel>,
    pfeat_dim: usize,
}

fn prepare_training(args: &TrainArgs, corpus: &[SuperpixelGraph]) -> Result<Prepared> {
    let first = &corpus[0];
    let (k, d, pf) = (first.num_classes, first.feat_dim, first.pfeat_dim);
    if let Some((i, g)) = corpus
        .iter()
        .enumerate()
        .find(|(_, g)| (g.num_classes, g.feat_dim, g.pfeat_dim) != (k, d, pf))
    {
        return Err(ctxcrf::Error::InconsistentCorpus(format!(
            "graph {i} has (classes, feat_dim, pfeat_dim) = ({}, {}, {}), expected ({k}, {d}, {pf})",
            g.num_classes, g.feat_dim, g.pfeat_dim
        ))
        .into());
    }
    let mut truths = Vec::with_capacity(corpus.len());
    for (i, g) in corpus.iter().enumerate() {
        let y = g.ground_truth().map_err(|_| {
            ctxcrf::Error::InconsistentCorpus(format!("graph {i} has no ground truth"))
        })?;
        truths.push(y);
    }
    let standardizer = args.standardize.then(|| {
        Standardizer::fit(
            d,
            corpus
                .iter()
                .flat_map(|g| g.nodes.iter().map(|n| n.features.as_slice())),
        )
    });
    let use_svm = match args.unary_mode.as_str() {
        "auto" => k > 2,
        "raw" => false,
        "svm" => true,
        other => {
            return Err(usage(format!(
                "unknown unary mode {other:?} (auto, raw, svm)"
            )))
        }
    };
    let unary = if use_svm {
        let examples: Vec<(Vec<f64>, usize)> = corpus
            .iter()
            .zip(&truths)
            .flat_map(|(g, y)| {
                g.nodes
                    .iter()
                    .zip(y.as_slice())
                    .filter(|(_, &c)| c != VOID_LABEL)
                    .map(|(n, &c)| (n.features.clone(), c))
            })
            .map(|(x, c)| {
                (
                    standardizer
                        .as_ref()
                        .map_or_else(|| x.clone(), |s| s.apply(&x)),
                    c,
                )
            })
            .collect();
        let cfg = SvmTrainConfig {
            seed: args.seed,
            ..SvmTrainConfig::new(args.svm_reg)
        };
        UnaryFeatureMap::svm(train_linear_svm(&examples, k, &cfg)?)
    } else {
        UnaryFeatureMap::raw(k, d)
    };
    let unary = match standardizer {
        Some(s) => unary.with_standardizer(s),
        None => unary,
    };
    let map = JointFeatureMap {
        unary,
        relation_blocks: args.relation_blocks,
    };
    let loss = match args.loss.as_str() {
        "uniform" => LossSpec::uniform(k),
        "inverse-frequency" => LossSpec::inverse_frequency(corpus, k)?,
        other => {
            return Err(usage(format!(
                "unknown loss {other:?} (uniform, inverse-frequency)"
            )))
        }
    };
    let channels = match &args.pairwise_channels {
        Some(spec) => {
            let c = parse_channels(spec)?;
            if c.len() != pf {
                return Err(usage(format!(
                    "{} pairwise channels given, graphs have pfeat_dim {pf}",
                    c.len()
                )));
            }
            c
        }
        None if pf == PairwiseChannel::ALL.len() => PairwiseChannel::ALL.to_vec(),
        None => Vec::new(),
    };
    Ok(Prepared {
        map,
        loss,
        channels,
        pfeat_dim: pf,
    })
}

fn global_accuracy(
    graphs: &[SuperpixelGraph],
    model: &CrfModel,
    cfg: &InferenceConfig,
    table: Option<&CoOccurrenceTable>,
) -> Result<f64> {
    let partial: Vec<ConfusionMatrix> = graphs
        .par_iter()
        .map(|g| {
            model.check_graph(g)?;
            let (y, _) = map_inference(g, &model.w, &model.map, cfg, table)?;
            let mut cm = ConfusionMatrix::new(model.num_classes());
            cm.accumulate(g, &y)?;
            Ok(cm)
        })
        .collect::<Result<_>>()?;
    let mut cm = ConfusionMatrix::new(model.num_classes());
    for p in &partial {
        cm.merge(p)?;
    }
    Ok(cm.metrics(None)?.s_a)
}

pub fn train(args: &TrainArgs, resolved: &str) -> Result<()> {
    let corpus: Vec<SuperpixelGraph> = load_graphs(&args.graphs)?
        .into_iter()
        .map(|(_, g)| g)
        .collect();
    let prepared = prepare_training(args, &corpus)?;
    let inference = inference_config(&args.algorithm, args.max_sweeps, args.restarts, args.seed)?;
    let cfg = SsvmConfig {
        c: args.c,
        epsilon: args.epsilon,
        max_iterations: args.max_iterations,
        inference: inference.clone(),
        seed: args.seed,
    };

    let fit = |c: f64| -> Result<(CrfModel, ctxcrf::TrainingState)> {
        let (w, state) = ssvm_train(
            &corpus,
            &prepared.map,
            &prepared.loss,
            &SsvmConfig { c, ..cfg.clone() },
        )?;
        if !w.is_finite() {
            return Err(InternalError("training produced non-finite weights".into()).into());
        }
        let mut model = CrfModel::new(prepared.map.clone(), w, prepared.pfeat_dim)?;
        model.pairwise_channels = prepared.channels.clone();
        Ok((model, state))
    };

    let (model, state, chosen_c) = match &args.validation {
        None => {
            let (m, s) = fit(args.c)?;
            (m, s, args.c)
        }
        Some(dir) => {
            let grid = parse_grid(&args.c_grid, "--c-grid")?;
            let validation: Vec<SuperpixelGraph> =
                load_graphs(dir)?.into_iter().map(|(_, g)| g).collect();
            let mut best: Option<(f64, CrfModel, ctxcrf::TrainingState, f64)> = None;
            for &c in &grid {
                let (m, s) = fit(c)?;
                let acc = global_accuracy(&validation, &m, &inference, None)?;
                eprintln!("C {c}: validation S_a {acc:.6}");
                if best.as_ref().is_none_or(|b| acc > b.0) {
                    best = Some((acc, m, s, c));
                }
            }
            let (_, m, s, c) = best.expect("grid is non-empty");
            eprintln!("selected C {c}");
            (m, s, c)
        }
    };

    if state.status == TrainingStatus::MaxIterationsReached {
        eprintln!(
            "warning: training stopped at --max-iterations {} before reaching epsilon",
            args.max_iterations
        );
    }
    model.save(&args.out)?;
    let log_path = args
        .log
        .clone()
        .unwrap_or_else(|| sidecar(&args.out, ".log.csv"));
    write_file(&log_path, state.to_csv())?;
    let mut resolved = resolved.to_string();
    if args.validation.is_some() {
        resolved.push_str(&format!("# selected c = {chosen_c}\n"));
    }
    write_file(&sidecar(&args.out, ".config"), resolved)?;
    eprintln!(
        "trained on {} graphs: {} iterations, xi {:.6}, |w| {:.6}",
        corpus.len(),
        state.history.len(),
        state.xi,
        model.w.norm()
    );
    Ok(())
}

// ---------------------------------------------------------------- predict

fn prediction_image(raster: &LabelRaster, y: &Labeling) -> Result<GrayImage> {
    if raster.num_regions() != y.len() {
        bail!(
            "raster has {} regions, graph has {} nodes",
            raster.num_regions(),
            y.len()
        );
    }
    let data = raster
        .assignments
        .iter()
        .map(|&a| y[a as usize] as u8)
        .collect();
    Ok(GrayImage::from_raw(raster.width, raster.height, data).expect("buffer size matches raster"))
}

pub fn predict(args: &PredictArgs, resolved: &str) -> Result<()> {
    let model = CrfModel::load(&args.model)
        .with_context(|| format!("loading model {}", args.model.display()))?;
    let mode = match &args.pairwise_mode {
        Some(m) => parse_mode(m)?,
        None => model.pairwise_mode,
    };
    let table = load_table(args.cooccur.as_ref())?;
    if mode.needs_table() && table.is_none() {
        return Err(usage(format!(
            "--pairwise-mode {} requires --cooccur",
            mode.name()
        )));
    }
    if let Some(t) = &table {
        if t.num_classes() != model.num_classes() {
            return Err(ctxcrf::Error::DimensionMismatch {
                what: "co-occurrence classes",
                expected: model.num_classes(),
                found: t.num_classes(),
            }
            .into());
        }
    }
    let cfg = InferenceConfig {
        mode,
        alpha: args.alpha.unwrap_or(model.alpha),
        ..inference_config(&args.algorithm, args.max_sweeps, args.restarts, args.seed)?
    };
    PairwiseContext::new(cfg.mode, cfg.alpha, table.as_ref())?;
    let files = graph_files(&args.graphs)?;
    if files.is_empty() {
        bail!("no .spgraph files found in {}", args.graphs.display());
    }
    create_dir(&args.out)?;
    write_file(&args.out.join("run.config"), resolved)?;
    let (_, failed) = per_file(
        &files,
        |p| p.display().to_string(),
        |path| {
            let name = stem(path);
            let mut g = read_graph(path)?;
            model.check_graph(&g)?;
            let (y, _) = map_inference(&g, &model.w, &model.map, &cfg, table.as_ref())?;
            if let Some(dir) = &args.rasters {
                let raster = LabelRaster::load_png(&dir.join(format!("{name}{RASTER_SUFFIX}")))?;
                let out = args.out.join(format!("{name}.pred.png"));
                prediction_image(&raster, &y)?
                    .save(&out)
                    .with_context(|| format!("writing {}", out.display()))?;
            }
            g.ground_truth = Some(y);
            write_file(&args.out.join(format!("{name}.spgraph")), write_graph(&g))
        },
    );
    finish(failed)
}

// ---------------------------------------------------------------- eval

pub fn eval(args: &EvalArgs, resolved: &str) -> Result<()> {
    let predictions = load_graphs(&args.predictions)?;
    let k = predictions[0].1.num_classes;
    let names: Option<Vec<String>> = args
        .class_names
        .as_ref()
        .map(|s| s.split(',').map(|n| n.trim().to_string()).collect());
    if let Some(n) = &names {
        if n.len() != k {
            return Err(usage(format!(
                "{} class names given for {k} classes",
                n.len()
            )));
        }
    }
    let partial: Vec<ConfusionMatrix> = predictions
        .par_iter()
        .map(|(name, pred)| {
            let truth_path = args.truth.join(format!("{name}.spgraph"));
            let truth = read_graph(&truth_path)?;
            if truth.num_nodes() != pred.num_nodes() || truth.num_classes != pred.num_classes {
                bail!("{name}: prediction and ground truth graphs differ in size");
            }
            let y = pred
                .ground_truth()
                .with_context(|| format!("{name}: prediction has no labels"))?;
            let mut cm = ConfusionMatrix::new(k);
            match (&args.rasters, &args.pixel_truth) {
                (Some(rdir), Some(tdir)) => {
                    let raster =
                        LabelRaster::load_png(&rdir.join(format!("{name}{RASTER_SUFFIX}")))?;
                    let classes =
                        load_class_map(&find_image(tdir, name)?, raster.width, raster.height, k)?;
                    let bytes: Vec<u8> = classes.iter().map(|&c| c as u8).collect();
                    cm.accumulate_pixels(&raster, y, &bytes)?;
                }
                _ => cm.accumulate(&truth, y).with_context(|| name.to_string())?,
            }
            Ok(cm)
        })
        .collect::<Result<_>>()?;
    let mut cm = ConfusionMatrix::new(k);
    for p in &partial {
        cm.merge(p)?;
    }
    let report = cm.metrics(args.foreground)?;
    let text = report.to_text(names.as_deref());
    print!("{text}");
    if let Some(dir) = &args.out {
        create_dir(dir)?;
        write_file(&dir.join("metrics.txt"), &text)?;
        write_file(&dir.join("metrics.csv"), report.to_csv(names.as_deref()))?;
        write_file(&dir.join("run.config"), resolved)?;
    }
    Ok(())
}

// ---------------------------------------------------------------- tune-alpha

pub fn tune_alpha(args: &TuneAlphaArgs, resolved: &str) -> Result<()> {
    let grid = parse_grid(&args.grid, "--grid")?;
    let mode = parse_mode(&args.pairwise_mode)?;
    let mut model = CrfModel::load(&args.model)
        .with_context(|| format!("loading model {}", args.model.display()))?;
    let table = load_table(args.cooccur.as_ref())?;
    if mode.needs_table() && table.is_none() {
        return Err(usage(format!(
            "--pairwise-mode {} requires --cooccur",
            mode.name()
        )));
    }
    let graphs: Vec<SuperpixelGraph> = load_graphs(&args.graphs)?
        .into_iter()
        .map(|(_, g)| g)
        .collect();
    let base = inference_config(&args.algorithm, args.max_sweeps, args.restarts, args.seed)?;
    let mut best: Option<(f64, f64)> = None;
    println!("alpha,S_a");
    for &alpha in &grid {
        let cfg = InferenceConfig {
            mode,
            alpha,
            ..base.clone()
        };
        let s_a = global_accuracy(&graphs, &model, &cfg, table.as_ref())?;
        println!("{alpha},{s_a}");
        if best.is_none_or(|(_, b)| s_a > b) {
            best = Some((alpha, s_a));
        }
    }
    let (alpha, s_a) = best.expect("grid is non-empty");
    println!("best alpha {alpha} (S_a {s_a})");
    if let Some(out) = &args.out {
        model.alpha = alpha;
        model.pairwise_mode = mode;
        model.save(out)?;
        write_file(
            &sidecar(out, ".config"),
            format!("{resolved}# selected alpha = {alpha}\n"),
        )?;
    }
    Ok(())
}
