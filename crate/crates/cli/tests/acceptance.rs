//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits non-zero if any fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use maskwatch::data::{
    load_manifest, pseudo_label, save_manifest, split_manifest, Annotation, BBox, DetClass, Manifest, MaskClass, Split,
    SplitRatios,
};
use maskwatch::detect::{iou, nms, ScriptedDetector};
use maskwatch::eval::{map_at_iou, mean_ap, read_report, write_report, ConfusionMatrix, MetricsReport, Task};
use maskwatch::image::{save_image, Image};
use maskwatch::models::toy::solid_color_set;
use maskwatch::models::{
    accuracy, build_cnn, cross_entropy, distill, distill_loss, distill_loss_with_grad, load_model, save_model,
    train_classifier, ClassifierBackend, CnnSpec, DistillConfig, DistillWeights, TrainOptions,
};
use maskwatch::pipeline::{load_run_report, ClassSpace, FpsMeter, PipelineMode, RunReport};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_maskwatch"));
    cmd.env_remove("MASKWATCH_SEED");
    cmd
}

fn run_cli(args: &[&str]) -> Result<String, String> {
    let out = bin().args(args).output().map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "`maskwatch {}` exited with {}: {}",
            args.join(" "),
            out.status,
            String::from_utf8_lossy(&out.stderr).trim()
        ));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

fn p(path: &Path) -> &str {
    path.to_str().expect("utf-8 temp path")
}

// ---------------------------------------------------------------- oracles

fn corners(b: &BBox) -> (f64, f64, f64, f64) {
    (b.cx - b.w / 2.0, b.cy - b.h / 2.0, b.cx + b.w / 2.0, b.cy + b.h / 2.0)
}

fn oracle_iou(a: &BBox, b: &BBox) -> f64 {
    let (ax0, ay0, ax1, ay1) = corners(a);
    let (bx0, by0, bx1, by1) = corners(b);
    let iw = (ax1.min(bx1) - ax0.max(bx0)).max(0.0);
    let ih = (ay1.min(by1) - ay0.max(by0)).max(0.0);
    let inter = iw * ih;
    let union = (ax1 - ax0) * (ay1 - ay0) + (bx1 - bx0) * (by1 - by0) - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

/// Priority order: confidence descending, then input position.
fn priority(dets: &[BBox]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..dets.len()).collect();
    for i in 0..idx.len() {
        for j in 0..idx.len() - 1 - i {
            let (a, b) = (idx[j], idx[j + 1]);
            if dets[b].conf > dets[a].conf {
                idx.swap(j, j + 1);
            }
        }
    }
    idx
}

/// The unique subset in which a box is kept exactly when no kept box of
/// higher priority and the same class overlaps it beyond the threshold.
fn oracle_nms(dets: &[BBox], thr: f64) -> Vec<BBox> {
    let order = priority(dets);
    let rank: Vec<usize> = {
        let mut r = vec![0; dets.len()];
        for (k, &i) in order.iter().enumerate() {
            r[i] = k;
        }
        r
    };
    let mut found = None;
    for mask in 0u32..(1 << dets.len()) {
        let kept = |i: usize| mask >> i & 1 == 1;
        let consistent = (0..dets.len()).all(|i| {
            let blocked = (0..dets.len()).any(|j| {
                kept(j) && rank[j] < rank[i] && dets[j].cls == dets[i].cls && oracle_iou(&dets[j], &dets[i]) > thr
            });
            kept(i) == !blocked
        });
        if consistent {
            assert!(found.is_none(), "fixpoint is unique");
            found = Some(mask);
        }
    }
    let mask = found.expect("a fixpoint exists");
    order.into_iter().filter(|&i| mask >> i & 1 == 1).map(|i| dets[i]).collect()
}

/// AP for one class: each prefix of the ranked detections is matched from
/// scratch, and the envelope is taken point by point.
fn oracle_ap(dets: &[(String, BBox)], gts: &[(String, BBox)], cls: u32, thr: f64) -> Option<f64> {
    let truths: Vec<&(String, BBox)> = gts.iter().filter(|g| g.1.cls == cls).collect();
    if truths.is_empty() {
        return None;
    }
    let mine: Vec<&(String, BBox)> = dets.iter().filter(|d| d.1.cls == cls).collect();
    let boxes: Vec<BBox> = mine.iter().map(|d| d.1).collect();
    let order = priority(&boxes);
    let mut points = Vec::new();
    for k in 1..=order.len() {
        let mut used = vec![false; truths.len()];
        let mut tp = 0;
        for &i in &order[..k] {
            let mut best: Option<usize> = None;
            for g in 0..truths.len() {
                if used[g] || truths[g].0 != mine[i].0 {
                    continue;
                }
                let o = oracle_iou(&mine[i].1, &truths[g].1);
                if o >= thr && best.map_or(true, |b| o > oracle_iou(&mine[i].1, &truths[b].1)) {
                    best = Some(g);
                }
            }
            if let Some(g) = best {
                used[g] = true;
                tp += 1;
            }
        }
        points.push((tp as f64 / truths.len() as f64, tp as f64 / k as f64));
    }
    let mut ap = 0.0;
    let mut prev = 0.0;
    for (i, &(r, _)) in points.iter().enumerate() {
        let best = points[i..].iter().map(|q| q.1).fold(0.0, f64::max);
        ap += (r - prev) * best;
        prev = r;
    }
    Some(ap)
}

fn random_box(rng: &mut ChaCha8Rng, cls: u32, conf: f64) -> BBox {
    let w = rng.gen_range(0.05..0.5);
    let h = rng.gen_range(0.05..0.5);
    BBox::new(rng.gen_range(w / 2.0..1.0 - w / 2.0), rng.gen_range(h / 2.0..1.0 - h / 2.0), w, h, cls, conf)
}

fn jitter(rng: &mut ChaCha8Rng, b: &BBox, conf: f64) -> BBox {
    let s = 0.05;
    let cx = (b.cx + rng.gen_range(-s..s) * b.w).clamp(b.w / 2.0, 1.0 - b.w / 2.0);
    let cy = (b.cy + rng.gen_range(-s..s) * b.h).clamp(b.h / 2.0, 1.0 - b.h / 2.0);
    BBox::new(cx, cy, b.w, b.h, b.cls, conf)
}

// ------------------------------------------------------------- criteria

fn c1_map_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    let mut compared = 0;
    let instances = 1500;
    for _ in 0..instances {
        let images = rng.gen_range(1..=5);
        let mut gts = Vec::new();
        let mut dets = Vec::new();
        for img in 0..images {
            let id = format!("img{img}");
            let n_gt = rng.gen_range(0..=4);
            let mut truths = Vec::new();
            for _ in 0..n_gt {
                let cls = rng.gen_range(0..2);
                let b = random_box(&mut rng, cls, 1.0);
                truths.push(b);
                gts.push((id.clone(), b));
            }
            for _ in 0..rng.gen_range(0..=6) {
                // Confidences on a coarse grid so ties occur.
                let conf = f64::from(rng.gen_range(1..=10u32)) / 10.0;
                let d = if !truths.is_empty() && rng.gen_bool(0.6) {
                    let t = truths[rng.gen_range(0..truths.len())];
                    let mut d = jitter(&mut rng, &t, conf);
                    if rng.gen_bool(0.1) {
                        d.cls = 1 - d.cls;
                    }
                    d
                } else {
                    let cls = rng.gen_range(0..2);
                    random_box(&mut rng, cls, conf)
                };
                dets.push((id.clone(), d));
            }
        }
        let expected: Vec<Option<f64>> = (0..2).map(|c| oracle_ap(&dets, &gts, c, 0.5)).collect();
        match map_at_iou(&dets, &gts, &[0, 1], 0.5) {
            Ok(got) => {
                let oracle_mean = mean_ap(&expected).map_err(|e| e.to_string())?;
                for c in 0..2u32 {
                    match (got.per_class[&c], expected[c as usize]) {
                        (Some(a), Some(b)) => worst = worst.max((a - b).abs()),
                        (None, None) => {}
                        other => return Err(format!("class {c} presence differs: {other:?}")),
                    }
                }
                worst = worst.max((got.mean - oracle_mean).abs());
                compared += 1;
            }
            Err(_) => check(expected.iter().all(Option::is_none), "map_at_iou failed with ground truth present")?,
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(compared >= 1000, format!("only {compared} instances had ground truth"))?;
    check(worst < 1e-9, format!("max |diff| {worst:e}"))?;
    check(secs < 60.0, format!("took {secs:.1}s"))?;
    Ok(format!("{compared} instances, max |diff| {worst:e}, {secs:.2}s"))
}

fn c2_table_mean() -> Outcome {
    let mean = mean_ap(&[Some(0.894), Some(0.902)]).map_err(|e| e.to_string())?;
    check(mean == 0.898, format!("mean {mean}"))?;
    let mut report = MetricsReport::empty(Task::Detection);
    report.ap_per_class = vec![Some(0.894), Some(0.902)];
    report.map = Some(mean);
    report.validate().map_err(|e| e.to_string())?;
    Ok(format!("mean(0.894, 0.902) = {mean}"))
}

fn c3_nms_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let sets = 2000;
    for s in 0..sets {
        let n = rng.gen_range(0..=8);
        let mut dets: Vec<BBox> = Vec::new();
        for _ in 0..n {
            let conf = f64::from(rng.gen_range(1..=8u32)) / 8.0;
            let cls = rng.gen_range(0..2);
            let b = if !dets.is_empty() && rng.gen_bool(0.5) {
                let base = dets[rng.gen_range(0..dets.len())];
                BBox { cls, ..jitter(&mut rng, &base, conf) }
            } else {
                random_box(&mut rng, cls, conf)
            };
            dets.push(b);
        }
        let thr = [0.3, 0.45, 0.5, 0.7][s % 4];
        let got = nms(&dets, thr);
        let want = oracle_nms(&dets, thr);
        check(got == want, format!("set {s}: {got:?} vs {want:?}"))?;
    }
    Ok(format!("{sets} random sets of up to 8 boxes match exactly"))
}

fn c4_iou_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..2000 {
        let a = random_box(&mut rng, 0, 1.0);
        let b = random_box(&mut rng, 0, 1.0);
        check(iou(&a, &a) == 1.0, format!("iou(a, a) = {}", iou(&a, &a)))?;
        let (ab, ba) = (iou(&a, &b), iou(&b, &a));
        check(ab == ba, format!("asymmetric {ab} vs {ba}"))?;
        check((0.0..=1.0).contains(&ab), format!("out of range {ab}"))?;
        let (dx, dy) = (rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3));
        let shift = |x: &BBox| BBox { cx: x.cx + dx, cy: x.cy + dy, ..*x };
        let moved = iou(&shift(&a), &shift(&b));
        check((moved - ab).abs() < 1e-9, format!("translation changed {ab} to {moved}"))?;
    }
    let a = BBox::ground_truth(0, 0.5, 0.5, 0.2, 0.2);
    let b = BBox::ground_truth(0, 0.6, 0.5, 0.2, 0.2);
    let third = iou(&a, &b);
    check((third - 1.0 / 3.0).abs() < 1e-12, format!("half-offset case {third}"))?;
    Ok(format!("2000 random pairs; half-width offset gives {third:.12}"))
}

fn random_logits(rng: &mut ChaCha8Rng) -> [f64; 3] {
    std::array::from_fn(|_| rng.gen_range(-6.0..6.0))
}

fn c5a_alpha_one() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    let mut worst: f64 = 0.0;
    for _ in 0..500 {
        let n = rng.gen_range(1..16);
        let s: Vec<[f64; 3]> = (0..n).map(|_| random_logits(&mut rng)).collect();
        let t: Vec<[f64; 3]> = (0..n).map(|_| random_logits(&mut rng)).collect();
        let y: Vec<usize> = (0..n).map(|_| rng.gen_range(0..3)).collect();
        let w = DistillWeights {
            temperature: rng.gen_range(0.5..10.0),
            alpha: 1.0,
        };
        let d = distill_loss(&s, &t, &y, &w).map_err(|e| e.to_string())?;
        let ce = cross_entropy(&s, &y).map_err(|e| e.to_string())?;
        worst = worst.max((d - ce).abs());
    }
    check(worst < 1e-9, format!("max |diff| {worst:e}"))?;
    Ok(format!("500 random batches, max |diff| {worst:e}"))
}

fn c5b_gradient() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(52);
    let h = 1e-4;
    let mut worst: f64 = 0.0;
    for _ in 0..300 {
        let n = rng.gen_range(1..6);
        let s: Vec<[f64; 3]> = (0..n).map(|_| random_logits(&mut rng)).collect();
        let t: Vec<[f64; 3]> = (0..n).map(|_| random_logits(&mut rng)).collect();
        let y: Vec<usize> = (0..n).map(|_| rng.gen_range(0..3)).collect();
        let w = DistillWeights {
            temperature: rng.gen_range(1.0..8.0),
            alpha: rng.gen_range(0.0..1.0),
        };
        let (_, grad) = distill_loss_with_grad(&s, &t, &y, &w).map_err(|e| e.to_string())?;
        for i in 0..n {
            for k in 0..3 {
                let mut plus = s.clone();
                plus[i][k] += h;
                let mut minus = s.clone();
                minus[i][k] -= h;
                let lp = distill_loss(&plus, &t, &y, &w).map_err(|e| e.to_string())?;
                let lm = distill_loss(&minus, &t, &y, &w).map_err(|e| e.to_string())?;
                let numeric = (lp - lm) / (2.0 * h);
                let analytic = grad[i][k];
                let rel = (numeric - analytic).abs() / numeric.abs().max(analytic.abs()).max(1e-6);
                worst = worst.max(rel);
            }
        }
    }
    check(worst < 1e-4, format!("max relative error {worst:e}"))?;
    Ok(format!("300 random batches, h = 1e-4, max relative error {worst:e}"))
}

fn c5c_toy_distillation() -> Outcome {
    let start = Instant::now();
    let side = 128;
    let train = solid_color_set(240, side, 25.0, 100);
    let val = solid_color_set(30, side, 25.0, 101);
    let test = solid_color_set(30, side, 25.0, 102);

    let mut teacher = build_cnn(&CnnSpec::default(), 7).map_err(|e| e.to_string())?;
    let topts = TrainOptions {
        epochs: 50,
        lr: 0.01,
        batch_size: 16,
        seed: 8,
        stop_at_val_accuracy: Some(1.0),
        ..TrainOptions::default()
    };
    let treport = train_classifier(&mut teacher, &train, &val, None, &topts).map_err(|e| e.to_string())?;
    let teacher_acc = accuracy(&teacher, &test).map_err(|e| e.to_string())?;
    check(teacher_acc == 1.0, format!("teacher test accuracy {teacher_acc}"))?;

    let mut student = build_cnn(&CnnSpec::compact(4, 8, 16), 9).map_err(|e| e.to_string())?;
    let before = teacher.clone();
    let cfg = DistillConfig {
        epochs: 50,
        lr: 0.01,
        batch_size: 16,
        stop_at_val_accuracy: Some(1.0),
        ..DistillConfig::default()
    };
    let sreport = distill(&mut student, &teacher, &train, &val, None, &cfg, 10).map_err(|e| e.to_string())?;
    check(teacher == before, "teacher parameters changed")?;
    let student_acc = accuracy(&student, &test).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    check(sreport.epochs.len() <= 50, format!("{} epochs", sreport.epochs.len()))?;
    check(student_acc == 1.0, format!("student test accuracy {student_acc}"))?;
    check(secs < 300.0, format!("took {secs:.1}s"))?;
    Ok(format!(
        "300 images; teacher {} epochs, student {} epochs at ratio {:.4}; student test accuracy {student_acc}; {secs:.1}s",
        treport.epochs.len(),
        sreport.epochs.len(),
        sreport.parameter_ratio.unwrap_or(f64::NAN)
    ))
}

fn c6_overfit() -> Outcome {
    let train = solid_color_set(32, 128, 25.0, 60);
    let mut model = build_cnn(&CnnSpec::default(), 61).map_err(|e| e.to_string())?;
    let opts = TrainOptions {
        epochs: 50,
        lr: 0.01,
        batch_size: 8,
        seed: 62,
        stop_at_val_accuracy: Some(1.0),
        ..TrainOptions::default()
    };
    // The training set doubles as the monitored set: stop at the first perfect epoch.
    let report = train_classifier(&mut model, &train, &train, None, &opts).map_err(|e| e.to_string())?;
    let acc = accuracy(&model, &train).map_err(|e| e.to_string())?;
    check(report.epochs.len() <= 50, format!("{} epochs", report.epochs.len()))?;
    check(acc == 1.0, format!("train accuracy {acc}"))?;
    Ok(format!("train accuracy {acc} after {} epochs", report.epochs.len()))
}

fn c7_split(tmp: &Path) -> Outcome {
    let entries: Vec<(String, Annotation)> = (0..1000)
        .map(|i| (format!("img/{i:04}.png"), Annotation::Label(MaskClass::ALL[i % 3])))
        .collect();
    let ratios = SplitRatios::new(0.8, 0.1, 0.1).map_err(|e| e.to_string())?;
    let a = split_manifest(entries.clone(), &ratios, 11).map_err(|e| e.to_string())?;
    let b = split_manifest(entries.clone(), &ratios, 11).map_err(|e| e.to_string())?;
    check(a.split_counts() == (800, 100, 100), format!("sizes {:?}", a.split_counts()))?;
    check(a.to_jsonl() == b.to_jsonl(), "library split not repeatable")?;
    let mut seen: Vec<&str> = Vec::new();
    for split in [Split::Train, Split::Val, Split::Test] {
        seen.extend(a.entries_in(split).map(|e| e.path.as_str()));
    }
    seen.sort_unstable();
    let mut all: Vec<&str> = entries.iter().map(|e| e.0.as_str()).collect();
    all.sort_unstable();
    check(seen == all, "splits are not a partition")?;

    let input = tmp.join("c7_in.jsonl");
    save_manifest(&Manifest::new(0, a.entries().to_vec()).map_err(|e| e.to_string())?, &input)
        .map_err(|e| e.to_string())?;
    let (o1, o2) = (tmp.join("c7_a.jsonl"), tmp.join("c7_b.jsonl"));
    for out in [&o1, &o2] {
        run_cli(&["dataset", "split", "--manifest", p(&input), "--out", p(out), "--ratios", "0.8,0.1,0.1", "--seed", "7"])?;
    }
    let (x, y) = (std::fs::read(&o1).map_err(|e| e.to_string())?, std::fs::read(&o2).map_err(|e| e.to_string())?);
    check(x == y, "CLI outputs differ")?;
    let m = load_manifest(&o1).map_err(|e| e.to_string())?;
    check(m.split_counts() == (800, 100, 100), format!("CLI sizes {:?}", m.split_counts()))?;
    Ok("sizes (800, 100, 100), partition exact, library and CLI outputs byte-identical".into())
}

fn c8_pseudo_label(tmp: &Path) -> Outcome {
    let boxes = vec![
        BBox::new(0.2, 0.3, 0.2, 0.2, 0, 0.95),
        BBox::new(0.5, 0.6, 0.2, 0.2, 0, 0.9),
        BBox::new(0.8, 0.3, 0.2, 0.2, 0, 0.85),
    ];
    let det = ScriptedDetector::repeating("stub", boxes);
    let out = pseudo_label(&["frame.png"], &det, 0.9, DetClass::Negative, |_| Ok(Image::filled(8, 8, [0.0; 3])))
        .map_err(|e| e.to_string())?;
    check(out.labeled.len() == 1, format!("{} images kept", out.labeled.len()))?;
    let kept = &out.labeled[0].boxes;
    check(kept.len() == 1, format!("{} boxes kept", kept.len()))?;
    check(kept[0].conf == 1.0 && kept[0].cls == DetClass::Negative.id(), format!("{:?}", kept[0]))?;
    check((kept[0].cx - 0.2).abs() < 1e-12, "wrong box survived")?;

    let images = tmp.join("c8_images");
    std::fs::create_dir_all(&images).map_err(|e| e.to_string())?;
    save_image(&Image::filled(16, 16, [90.0; 3]), &images.join("a.png")).map_err(|e| e.to_string())?;
    let labels = tmp.join("c8_labels");
    run_cli(&[
        "dataset", "pseudo-label", "--images", p(&images), "--out", p(&labels), "--detector", "stub:graded",
        "--threshold", "0.9", "--class", "none",
    ])?;
    let text = std::fs::read_to_string(labels.join("a.txt")).map_err(|e| e.to_string())?;
    check(text.lines().count() == 1, format!("CLI label file:\n{text}"))?;
    check(text.starts_with("2 "), format!("CLI label class: {text}"))?;
    Ok("confidences {0.95, 0.9, 0.85} at threshold 0.9 keep one box with conf 1.0".into())
}

fn synthetic_video(dir: &Path, frames: usize) -> Result<(), String> {
    std::fs::create_dir_all(dir).map_err(|e| e.to_string())?;
    for i in 0..frames {
        let img = Image::from_fn(96, 72, |x, y| [(x * 2 + i * 10) as f32, (y * 3) as f32, 120.0]);
        save_image(&img, &dir.join(format!("frame_{i:03}.png"))).map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn c9_fps(tmp: &Path) -> Outcome {
    let mut meter = FpsMeter::new(16).map_err(|e| e.to_string())?;
    let mut est = None;
    for i in 0..10 {
        est = meter.update(i as f64 * 0.05).map_err(|e| e.to_string())?;
    }
    let est = est.ok_or("no estimate")?;
    check((est - 20.0).abs() < 1e-9, format!("meter gives {est}"))?;

    let video = tmp.join("c9_video");
    synthetic_video(&video, 10)?;
    let report_path = tmp.join("c9_report.json");
    run_cli(&[
        "run", "--pipeline", "single-shot", "--source", p(&video), "--out", p(&tmp.join("c9_out")), "--report",
        p(&report_path), "--detector", "stub:center", "--stub-delay-ms", "50",
    ])?;
    let report = load_run_report(&report_path).map_err(|e| e.to_string())?;
    check(report.frames == 10, format!("{} frames", report.frames))?;
    check((15.0..=20.0).contains(&report.mean_fps), format!("mean fps {}", report.mean_fps))?;
    Ok(format!("meter {est}; end-to-end run {:.3} fps over 10 frames", report.mean_fps))
}

fn c10_pipelines(tmp: &Path) -> Outcome {
    let video = tmp.join("c10_video");
    synthetic_video(&video, 6)?;
    let mut summary = Vec::new();
    for (mode, space) in [(PipelineMode::TwoStage, ClassSpace::Mask), (PipelineMode::SingleShot, ClassSpace::Det)] {
        let report_path = tmp.join(format!("c10_{mode}.json"));
        let mut args = vec![
            "run", "--pipeline", mode.name(), "--source", p(&video), "--report", p(&report_path), "--detector",
            "stub:center",
        ];
        if mode == PipelineMode::TwoStage {
            args.extend(["--classifier", "stub:incorrect"]);
        }
        run_cli(&args)?;
        let text = std::fs::read_to_string(&report_path).map_err(|e| e.to_string())?;
        let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
        for key in ["mode", "frames", "dropped", "mean_fps", "latency_ms_p50", "latency_ms_p95"] {
            check(value.get(key).is_some(), format!("{mode} report lacks `{key}`"))?;
        }
        let report: RunReport = load_run_report(&report_path).map_err(|e| e.to_string())?;
        check(report.mode == mode, format!("mode {}", report.mode))?;
        check(report.class_space == space, format!("{mode} class space {:?}", report.class_space))?;
        check(report.class_space.len() == [3, 2][usize::from(mode == PipelineMode::SingleShot)], "class count")?;
        summary.push(format!("{mode}: {} classes", report.class_space.len()));
    }
    Ok(summary.join(", "))
}

fn random_manifest(rng: &mut ChaCha8Rng) -> Manifest {
    let n = rng.gen_range(0..20);
    let entries = (0..n)
        .map(|i| {
            let annotation = if rng.gen_bool(0.5) {
                Annotation::Label(MaskClass::ALL[rng.gen_range(0..3)])
            } else {
                let n = rng.gen_range(0..4);
                Annotation::Boxes(
                    (0..n)
                        .map(|_| {
                            let cls = rng.gen_range(0..3);
                            random_box(rng, cls, 1.0)
                        })
                        .collect(),
                )
            };
            maskwatch::data::ManifestEntry {
                path: format!("dir {}/file_{i}.png", rng.gen_range(0..3)),
                split: [Split::Train, Split::Val, Split::Test][rng.gen_range(0..3)],
                annotation,
            }
        })
        .collect();
    Manifest::new(rng.gen(), entries).expect("valid random manifest")
}

fn random_report(rng: &mut ChaCha8Rng) -> MetricsReport {
    if rng.gen_bool(0.5) {
        let c = rng.gen_range(1..5);
        let counts: Vec<Vec<u64>> = (0..c).map(|_| (0..c).map(|_| rng.gen_range(0..20)).collect()).collect();
        let confusion = ConfusionMatrix::from_counts(counts).expect("square");
        let mut r = MetricsReport::empty(Task::Classification);
        r.per_class_accuracy = confusion.per_class_accuracy();
        r.total_accuracy = confusion.accuracy();
        r.confusion = Some(confusion);
        r.inferences_per_sec = rng.gen_bool(0.5).then(|| rng.gen_range(1.0..1e4));
        r.hardware = Some(format!("cpu-{}", rng.gen::<u16>()));
        r.notes = vec![format!("seed={}", rng.gen::<u32>())];
        r
    } else {
        let mut r = MetricsReport::empty(Task::Detection);
        r.ap_per_class = (0..rng.gen_range(1..4)).map(|_| rng.gen_bool(0.8).then(|| rng.gen::<f64>())).collect();
        if r.ap_per_class.iter().all(Option::is_none) {
            r.ap_per_class[0] = Some(rng.gen());
        }
        r.map = Some(mean_ap(&r.ap_per_class).expect("present"));
        r
    }
}

fn c11_round_trips(tmp: &Path) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let path = tmp.join("c11.bin");
    for i in 0..100 {
        let m = random_manifest(&mut rng);
        save_manifest(&m, &path).map_err(|e| e.to_string())?;
        check(load_manifest(&path).map_err(|e| e.to_string())? == m, format!("manifest {i} differs"))?;

        let r = random_report(&mut rng);
        write_report(&r, &path).map_err(|e| e.to_string())?;
        check(read_report(&path).map_err(|e| e.to_string())? == r, format!("report {i} differs"))?;
    }
    for i in 0..8 {
        let spec = CnnSpec::compact(rng.gen_range(1..6), rng.gen_range(1..6), rng.gen_range(2..12)).with_input_side(8 * rng.gen_range(1..5));
        let model = build_cnn(&spec, rng.gen()).map_err(|e| e.to_string())?;
        save_model(&model, &path).map_err(|e| e.to_string())?;
        let back = load_model(&path).map_err(|e| e.to_string())?;
        check(back == model, format!("model {i} differs"))?;
        let side = spec.input_side;
        let probe = vec![Image::from_fn(side, side, |x, y| [x as f32 * 9.0, y as f32 * 7.0, 50.0])];
        let (a, b) = (model.predict_logits(&probe).map_err(|e| e.to_string())?, back.predict_logits(&probe).map_err(|e| e.to_string())?);
        check(a == b, format!("model {i} logits differ"))?;
    }
    let default = build_cnn(&CnnSpec::default(), 5).map_err(|e| e.to_string())?;
    save_model(&default, &path).map_err(|e| e.to_string())?;
    check(load_model(&path).map_err(|e| e.to_string())? == default, "default model differs")?;
    Ok("100 manifests, 100 metrics reports, 9 models".into())
}

fn main() {
    let tmp = tempfile::tempdir().expect("temp dir");
    let t = tmp.path().to_path_buf();
    let criteria: Vec<(&str, Box<dyn Fn(&PathBuf) -> Outcome>)> = vec![
        ("1 mAP oracle equivalence", Box::new(|_| c1_map_oracle())),
        ("2 class-mean mAP convention", Box::new(|_| c2_table_mean())),
        ("3 NMS brute-force equivalence", Box::new(|_| c3_nms_oracle())),
        ("4 IoU properties", Box::new(|_| c4_iou_properties())),
        ("5a alpha=1 reduces to cross-entropy", Box::new(|_| c5a_alpha_one())),
        ("5b distillation gradient check", Box::new(|_| c5b_gradient())),
        ("5c toy-task distillation", Box::new(|_| c5c_toy_distillation())),
        ("6 vanilla CNN overfits 32 samples", Box::new(|_| c6_overfit())),
        ("7 split contract", Box::new(|t| c7_split(t))),
        ("8 pseudo-labeling contract", Box::new(|t| c8_pseudo_label(t))),
        ("9 FPS meter and paced run", Box::new(|t| c9_fps(t))),
        ("10 two-pipeline comparison", Box::new(|t| c10_pipelines(t))),
        ("11 round-trip integrity", Box::new(|t| c11_round_trips(t))),
    ];
    let mut failed = 0;
    for (name, f) in &criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| f(&t)))
            .unwrap_or_else(|_| Err("panicked".into()));
        let took = Duration::from_secs_f64(start.elapsed().as_secs_f64());
        match outcome {
            Ok(detail) => println!("PASS  criterion {name}: {detail} [{took:.2?}]"),
            Err(why) => {
                failed += 1;
                println!("FAIL  criterion {name}: {why} [{took:.2?}]");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
