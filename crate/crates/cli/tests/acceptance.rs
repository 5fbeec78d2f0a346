//! Acceptance run: every criterion once, one result line each.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use gal_cli::eval::EvalReport;
use gal_cli::pipeline::{builtin_pipeline, Pipeline};
use gal_cli::synth::{defocus_scene, generate_scenes, SceneKind, SyntheticScene};
use gal_core::crf::{build_problem, learn_params, total_energy, unary_costs, CrfParams, CrfSample};
use gal_core::gae::{
    contour_randomness, fit_trapezoids, gmm_refine, grab_cut, orientation_bins, validate_boundary,
    AttributeMaps, AttributeSet, BoundaryPolyline, BoundingBox, GaeDiagnostics, GmmParams,
    GrabCutParams, LineEvidence, LineKind, TrapezoidParams,
};
use gal_core::imageops::Plane;
use gal_core::lineworks::{edge_probability, EdgeParams, EvidenceMaps, LineSegment};
use gal_core::optim::{
    alpha_expansion, brute_force, max_flow, FlowNetwork, LabelingProblem, PairTerm,
};
use gal_core::segmentation::{build_graph, SegmentGraph, Segmentation, SegmentationMethod};
use gal_core::{ClassDistribution, Config, GeometricClass, LabelMap, Raster, NUM_CLASSES};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn secs(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}

// 1. max-flow

fn random_network(rng: &mut ChaCha8Rng) -> FlowNetwork {
    let n = rng.random_range(2..=12);
    let mut net = FlowNetwork::new(n, 0, n - 1).unwrap();
    for _ in 0..rng.random_range(0..=3 * n) {
        let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
        if a != b {
            net.add_arc(a, b, rng.random_range(0..=20) as f64).unwrap();
        }
    }
    net
}

fn exhaustive_min_cut(net: &FlowNetwork) -> f64 {
    let n = net.n_nodes();
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << (n - 2)) {
        let side: Vec<bool> = (0..n)
            .map(|v| v == 0 || (v != n - 1 && mask >> (v - 1) & 1 == 1))
            .collect();
        let c: f64 = net
            .arcs()
            .iter()
            .filter(|a| side[a.from] && !side[a.to])
            .map(|a| a.capacity)
            .sum();
        best = best.min(c);
    }
    best
}

fn max_flow_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let nets: Vec<FlowNetwork> = (0..500).map(|_| random_network(&mut rng)).collect();
    let t = Instant::now();
    let exact = nets
        .iter()
        .filter(|n| max_flow(n).flow == exhaustive_min_cut(n))
        .count();
    let el = t.elapsed();
    outcome(
        exact == 500 && el < Duration::from_secs(5),
        format!(
            "{exact}/500 equal to the enumerated min cut in {}",
            secs(el)
        ),
    )
}

// 2. alpha-expansion

fn random_potts(rng: &mut ChaCha8Rng) -> (LabelingProblem, f64) {
    let n = rng.random_range(1..=10);
    let l = 4;
    let unary: Vec<f64> = (0..n * l).map(|_| rng.random_range(0.0..5.0)).collect();
    let mut edges = Vec::new();
    let mut ws = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(0.35) {
                let w = rng.random_range(0.5..3.0);
                ws.push(w);
                let theta = (0..l * l)
                    .map(|k| if k / l == k % l { 0.0 } else { w })
                    .collect();
                edges.push(PairTerm { i, j, theta });
            }
        }
    }
    let c = if ws.is_empty() {
        1.0
    } else {
        ws.iter().cloned().fold(f64::MIN, f64::max) / ws.iter().cloned().fold(f64::MAX, f64::min)
    };
    (LabelingProblem::new(n, l, unary, edges, 1.0).unwrap(), c)
}

fn expansion_optimality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let problems: Vec<(LabelingProblem, f64)> = (0..200).map(|_| random_potts(&mut rng)).collect();
    let t = Instant::now();
    let (mut exact, mut bounded, mut monotone) = (0, 0, 0);
    for (p, c) in &problems {
        let r = alpha_expansion(p).unwrap();
        let (_, opt) = brute_force(p).unwrap();
        exact += usize::from((r.energy - opt).abs() <= 1e-9);
        bounded += usize::from(r.energy <= 2.0 * c * opt + 1e-9);
        let mut prev = r.initial_energy;
        let mono = r.trace.iter().all(|s| {
            let ok = s.energy <= prev;
            prev = s.energy;
            ok
        });
        monotone += usize::from(mono && r.truncations == 0);
    }
    let el = t.elapsed();
    outcome(
        exact >= 180 && bounded == 200 && monotone == 200 && el < Duration::from_secs(30),
        format!(
            "optimal on {exact}/200, within 2c on {bounded}/200, monotone on {monotone}/200 in {}",
            secs(el)
        ),
    )
}

// 3. energy oracle

const GW: usize = 12;
const GH: usize = 9;

fn random_graph(rng: &mut ChaCha8Rng) -> SegmentGraph {
    let bw = rng.random_range(2..=6);
    let bh = rng.random_range(2..=5);
    let raw: Vec<u32> = (0..GW * GH)
        .map(|p| ((p % GW) / bw + 10 * ((p / GW) / bh)) as u32)
        .collect();
    build_graph(&Segmentation::from_raw_labels(GW, GH, &raw, SegmentationMethod::Manual).unwrap())
}

fn random_dist(rng: &mut ChaCha8Rng) -> ClassDistribution {
    match rng.random_range(0..4) {
        0 => ClassDistribution::uniform(),
        1 => ClassDistribution::one_hot(GeometricClass::ALL[rng.random_range(0..NUM_CLASSES)]),
        _ => {
            let mut p = [0.0; NUM_CLASSES];
            for v in p.iter_mut() {
                *v = if rng.random_bool(0.2) {
                    0.0
                } else {
                    rng.random_range(0.0..1.0)
                };
            }
            p[rng.random_range(0..NUM_CLASSES)] += 0.1;
            ClassDistribution::normalize(p).unwrap()
        }
    }
}

fn random_table(rng: &mut ChaCha8Rng, n: usize) -> Option<Vec<Option<GeometricClass>>> {
    let planar = [
        GeometricClass::PlanarLeft,
        GeometricClass::PlanarCenter,
        GeometricClass::PlanarRight,
    ];
    rng.random_bool(0.5).then(|| {
        (0..n)
            .map(|_| rng.random_bool(0.6).then(|| planar[rng.random_range(0..3)]))
            .collect()
    })
}

fn random_maps(rng: &mut ChaCha8Rng, n: usize) -> AttributeMaps {
    let rows = |rng: &mut ChaCha8Rng| (0..n).map(|_| random_dist(rng)).collect::<Vec<_>>();
    AttributeMaps {
        initial: rows(rng),
        porous: rows(rng),
        solid: rows(rng),
        horizon: rows(rng),
        vertical: rows(rng),
        line_map: Plane::new(
            GW,
            GH,
            (0..GW * GH).map(|_| rng.random_range(0.0..=1.0)).collect(),
        ),
        line_term: rng.random_bool(0.7),
        vanishing: random_table(rng, n),
        planar: random_table(rng, n),
    }
}

fn random_params(rng: &mut ChaCha8Rng) -> CrfParams {
    let raw: [f64; 5] = std::array::from_fn(|_| rng.random_range(0.0..1.0));
    let s: f64 = raw.iter().sum();
    let mut w = raw.map(|v| v / s);
    w[0] = 1.0 - w[1..].iter().sum::<f64>();
    CrfParams::new(w, rng.random_range(0.01..1.0), 1e-6, 10.0).unwrap()
}

fn oracle_unary(maps: &AttributeMaps, u: usize, l: usize, p: &CrfParams) -> f64 {
    let comps = [
        &maps.initial,
        &maps.porous,
        &maps.solid,
        &maps.horizon,
        &maps.vertical,
    ];
    let dot: f64 = (0..5).map(|k| p.w[k] * comps[k][u].probs()[l]).sum();
    (-(dot.max(p.epsilon)).ln()).min(p.cap)
}

fn indicator(t: &Option<Vec<Option<GeometricClass>>>, u: usize, l: usize) -> Option<f64> {
    t.as_ref()
        .map(|t| f64::from(u8::from(t[u].map(|c| c.index()) == Some(l))))
}

fn oracle_pair(
    maps: &AttributeMaps,
    graph: &SegmentGraph,
    e: usize,
    a: usize,
    b: usize,
    p: &CrfParams,
) -> f64 {
    if a == b {
        return 0.0;
    }
    let edge = &graph.edges[e];
    let one_way = |a: usize, b: usize| {
        let mut s = 0.0;
        if maps.line_term {
            let sum: f64 = edge
                .boundary
                .iter()
                .map(|&(x, y)| maps.line_map.data[x].max(maps.line_map.data[y]))
                .sum();
            let mean = sum / edge.boundary.len() as f64;
            s += (-(mean.max(p.epsilon)).ln()).min(p.cap);
        }
        for t in [&maps.vanishing, &maps.planar] {
            if let (Some(x), Some(y)) = (indicator(t, edge.a, a), indicator(t, edge.b, b)) {
                s += -((x - y).abs().max(p.epsilon)).ln();
            }
        }
        s.min(p.cap)
    };
    (one_way(a, b) + one_way(b, a)) / 2.0
}

fn energy_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let t = Instant::now();
    let (mut unary_ok, mut energy_ok, mut rows_ok) = (0, 0, 0);
    for _ in 0..1000 {
        let g = random_graph(&mut rng);
        let n = g.n_segments();
        let maps = random_maps(&mut rng, n);
        let p = random_params(&mut rng);
        let u = unary_costs(&maps, &p).unwrap();
        let oracle: Vec<f64> = (0..n * NUM_CLASSES)
            .map(|i| oracle_unary(&maps, i / NUM_CLASSES, i % NUM_CLASSES, &p))
            .collect();
        unary_ok += usize::from(u.iter().zip(&oracle).all(|(a, b)| (a - b).abs() <= 1e-9));
        let problem = build_problem(&maps, &g, &p).unwrap();
        let labels: Vec<GeometricClass> = (0..n)
            .map(|_| GeometricClass::ALL[rng.random_range(0..NUM_CLASSES)])
            .collect();
        let mut expected: f64 = labels
            .iter()
            .enumerate()
            .map(|(i, l)| oracle[i * NUM_CLASSES + l.index()])
            .sum();
        for (e, edge) in g.edges.iter().enumerate() {
            expected += p.lambda
                * oracle_pair(
                    &maps,
                    &g,
                    e,
                    labels[edge.a].index(),
                    labels[edge.b].index(),
                    &p,
                );
        }
        energy_ok += usize::from((total_energy(&problem, &labels) - expected).abs() <= 1e-9);
        let sums_ok = (0..n).all(|i| {
            maps.components(i)
                .iter()
                .all(|c| (c.probs().iter().sum::<f64>() - 1.0).abs() <= 1e-6)
        });
        rows_ok += usize::from(sums_ok && maps.validate().is_ok());
    }
    let el = t.elapsed();
    outcome(
        unary_ok == 1000 && energy_ok == 1000 && rows_ok == 1000 && el < Duration::from_secs(5),
        format!(
            "unary {unary_ok}/1000, total energy {energy_ok}/1000, rows {rows_ok}/1000 in {}",
            secs(el)
        ),
    )
}

// 4. defocus-validated lines

fn fig4_confidences(seed: u64) -> (f64, f64, bool) {
    let (s, sky_row, _) = defocus_scene(seed);
    let ev = EvidenceMaps::compute(&s.image, &Config::default());
    let w = s.image.width();
    let le = LineEvidence::new(&ev, 2);
    let line = |kind, y: usize| BoundaryPolyline {
        kind,
        ys: vec![Some(y as f64); w],
        confidence: 0.0,
    };
    let sky = validate_boundary(&line(LineKind::Sky, sky_row), &le, 0.1);
    let spurious = validate_boundary(&line(LineKind::Ground, 200), &le, 0.1);
    (
        sky.polyline.confidence,
        spurious.polyline.confidence,
        spurious.accepted,
    )
}

fn defocus_lines() -> Outcome {
    let first = fig4_confidences(0);
    let again = fig4_confidences(0);
    let (sky, spurious, accepted) = first;
    outcome(
        sky >= 0.5 && spurious < 0.1 && !accepted && first == again,
        format!(
            "sky line {sky:.3}, spurious ground line {spurious:.3} (flag {}), repeat identical: {}",
            u8::from(accepted),
            first == again
        ),
    )
}

// 5. horizon

fn white_patch_flips() -> bool {
    let (w, h) = (60, 60);
    let inside = |x: usize, y: usize| (40..52).contains(&x) && (42..54).contains(&y);
    let data: Vec<f64> = (0..w * h)
        .flat_map(|p| {
            let (x, y) = (p % w, p / w);
            if y < 30 {
                [0.45, 0.6, 0.9]
            } else if (x / 6 + y / 6) % 3 == 0 || inside(x, y) {
                [0.95, 0.95, 0.95]
            } else {
                [0.4, 0.35, 0.3]
            }
        })
        .collect();
    let img = Raster::new(w, h, 3, data).unwrap();
    let raw: Vec<u32> = (0..w * h)
        .map(|p| {
            let (x, y) = (p % w, p / w);
            if y < 30 {
                0
            } else if inside(x, y) {
                2
            } else {
                1
            }
        })
        .collect();
    let g = build_graph(
        &Segmentation::from_raw_labels(w, h, &raw, SegmentationMethod::Manual).unwrap(),
    );
    let initial = vec![
        ClassDistribution::normalize([0.05, 0.0, 0.0, 0.0, 0.05, 0.0, 0.9]).unwrap(),
        ClassDistribution::normalize([0.9, 0.02, 0.02, 0.02, 0.02, 0.02, 0.0]).unwrap(),
        ClassDistribution::normalize([0.2, 0.05, 0.05, 0.05, 0.05, 0.1, 0.5]).unwrap(),
    ];
    let r = gmm_refine(&img, &g, &initial, 30.0, &GmmParams::default()).unwrap();
    let p = &r.p_horizon[2];
    r.unconfident == [2] && p.get(GeometricClass::Support) > p.get(GeometricClass::Sky)
}

fn horizon(pipeline: &Pipeline) -> Outcome {
    let scenes = generate_scenes(5, 50, &[SceneKind::HorizonOnly]).unwrap();
    let hits = scenes
        .par_iter()
        .filter(|s| {
            let o = pipeline
                .run(&s.image, &[], None, &AttributeSet::all())
                .unwrap();
            let truth = s.attributes.horizon_row.unwrap();
            o.gae
                .diagnostics
                .horizon_row
                .is_some_and(|r| (r - truth).abs() <= 2.0)
        })
        .count();
    let flips = white_patch_flips();
    outcome(
        hits >= 45 && flips,
        format!("{hits}/50 rows within 2 px, white patch goes to support: {flips}"),
    )
}

// 6. orientation

fn orientation_matches(s: &SyntheticScene, d: &GaeDiagnostics) -> bool {
    let pieces = d
        .trapezoids
        .as_ref()
        .map(|t| t.pieces.as_slice())
        .unwrap_or_default();
    s.attributes.surfaces.iter().all(|t| {
        let mid = (t.x0 + t.x1) / 2.0;
        pieces
            .iter()
            .find(|p| p.x0 <= mid && mid <= p.x1)
            .is_some_and(|p| p.orientation == t.orientation)
    })
}

fn mirror_segment(s: &LineSegment, w: usize) -> LineSegment {
    let m = w as f64 - 1.0;
    LineSegment::new(m - s.x1, s.y1, m - s.x2, s.y2)
}

/// Fit on the lines the pipeline used, then on their mirror image.
fn mirror_invariant(d: &GaeDiagnostics, segments: &[LineSegment], w: usize, h: usize) -> bool {
    let used = |v: &Option<gal_core::gae::ValidatedLine>, kind| match v {
        Some(v) if v.accepted => v.polyline.clone(),
        _ => BoundaryPolyline::empty(kind, w),
    };
    let (sky, ground) = (
        used(&d.sky, LineKind::Sky),
        used(&d.ground, LineKind::Ground),
    );
    let p = TrapezoidParams::default();
    let a = fit_trapezoids(&sky, &ground, segments, h, &p);
    let mirrored: Vec<LineSegment> = segments.iter().map(|s| mirror_segment(s, w)).collect();
    let b = fit_trapezoids(&sky.mirrored(), &ground.mirrored(), &mirrored, h, &p);
    let m = w as f64 - 1.0;
    a.pieces.len() == b.pieces.len()
        && a.pieces.iter().zip(b.pieces.iter().rev()).all(|(pa, pb)| {
            pa.orientation.mirrored() == pb.orientation
                && (pa.x0 - (m - pb.x1)).abs() < 1e-9
                && (pa.x1 - (m - pb.x0)).abs() < 1e-9
        })
}

fn orientation(pipeline: &Pipeline) -> Outcome {
    let mut counts = Vec::new();
    let mut mirror = 0;
    for kind in [SceneKind::CornerBuilding, SceneKind::Alley] {
        let scenes = generate_scenes(6, 20, &[kind]).unwrap();
        let r: Vec<(bool, bool)> = scenes
            .par_iter()
            .map(|s| {
                let o = pipeline
                    .run(&s.image, &s.attributes.boxes, None, &AttributeSet::all())
                    .unwrap();
                let d = &o.gae.diagnostics;
                let (w, h) = (s.image.width(), s.image.height());
                (
                    orientation_matches(s, d),
                    mirror_invariant(d, &o.evidence.segments, w, h),
                )
            })
            .collect();
        counts.push(r.iter().filter(|x| x.0).count());
        mirror += r.iter().filter(|x| x.1).count();
    }
    outcome(
        counts.iter().all(|&c| c >= 18) && mirror == 40,
        format!(
            "corner {}/20, alley {}/20, mirrored fit swaps labels exactly on {mirror}/40",
            counts[0], counts[1]
        ),
    )
}

// 7. grab-cut

fn grab_cut_check() -> Outcome {
    let (w, h) = (80, 60);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let inside = |x: usize, y: usize| (25..55).contains(&x) && (18..44).contains(&y);
    let data: Vec<f64> = (0..w * h)
        .flat_map(|p| {
            let v = if inside(p % w, p / w) { 0.15 } else { 0.92 } + rng.random_range(-0.03..0.03);
            [v, v, v]
        })
        .collect();
    let img = Raster::from_clamped(w, h, 3, data).unwrap();
    let m = grab_cut(
        &img,
        &BoundingBox {
            x: 20,
            y: 13,
            w: 40,
            h: 36,
        },
        &GrabCutParams::default(),
    )
    .unwrap();
    let (mut inter, mut union) = (0, 0);
    for p in 0..w * h {
        let t = inside(p % w, p / w);
        inter += usize::from(t && m.mask[p]);
        union += usize::from(t || m.mask[p]);
    }
    let iou = inter as f64 / union as f64;
    let monotone = m.energies.len() == 5 && m.energies.windows(2).all(|e| e[1] <= e[0] + 1e-9);
    outcome(
        iou >= 0.95 && monotone,
        format!(
            "IoU {iou:.4}, energy non-increasing over {} iterations: {monotone}",
            m.energies.len()
        ),
    )
}

// 8. porous

fn randomness_of(w: usize, h: usize, f: impl Fn(usize, usize) -> f64) -> f64 {
    let data: Vec<f64> = (0..w * h).flat_map(|p| [f(p % w, p / w); 3]).collect();
    let img = Raster::from_clamped(w, h, 3, data).unwrap();
    let gray = Plane::gray_of(&img);
    let edge = edge_probability(&gray, &EdgeParams::default());
    let bins = orientation_bins(&gray, 1.0);
    let region: Vec<usize> = (0..w * h).collect();
    contour_randomness(&region, w, h, &edge, &bins, 0.3, 2).unwrap()
}

fn porous() -> Outcome {
    let striped = randomness_of(64, 64, |x, _| if (x / 4) % 2 == 0 { 0.8 } else { 0.2 });
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let n: Vec<f64> = (0..64 * 64).map(|_| rng.random_range(0.0..1.0)).collect();
    let isotropic = randomness_of(64, 64, |x, y| n[y * 64 + x]);
    outcome(
        striped <= 0.2 && isotropic >= 0.9,
        format!("striped r = {striped:.3}, isotropic r = {isotropic:.3}"),
    )
}

// 9. end to end

fn end_to_end(pipeline: &Pipeline) -> Outcome {
    let scenes = generate_scenes(2024, 100, &SceneKind::ALL).unwrap();
    let t = Instant::now();
    pipeline
        .run(
            &scenes[3].image,
            &scenes[3].attributes.boxes,
            None,
            &AttributeSet::all(),
        )
        .unwrap();
    let single = t.elapsed();
    let maps: Vec<(LabelMap, LabelMap)> = scenes
        .par_iter()
        .map(|s| {
            let o = pipeline
                .run(&s.image, &s.attributes.boxes, None, &AttributeSet::all())
                .unwrap();
            (o.initial_map(), o.refinement.label_map)
        })
        .collect();
    let (mut ipl, mut full) = (EvalReport::default(), EvalReport::default());
    for (s, (i, f)) in scenes.iter().zip(&maps) {
        ipl.add("", i, &s.truth).unwrap();
        full.add("", f, &s.truth).unwrap();
    }
    let (a_ipl, a_full) = (ipl.overall(), full.overall());
    outcome(
        a_full >= 0.90 && a_full >= a_ipl && single < Duration::from_secs(5),
        format!(
            "accuracy {a_full:.4} refined vs {a_ipl:.4} initial over 100 scenes, one image {}",
            secs(single)
        ),
    )
}

// 10. learning

fn leaning(best: GeometricClass, second: GeometricClass, a: f64, b: f64) -> ClassDistribution {
    let mut p = [(1.0 - a - b) / 5.0; NUM_CLASSES];
    p[best.index()] = a;
    p[second.index()] = b;
    ClassDistribution::normalize(p).unwrap()
}

fn learning() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let corpus: Vec<(SegmentGraph, AttributeMaps, LabelMap)> = (0..12)
        .map(|_| {
            let g = random_graph(&mut rng);
            let truth: Vec<GeometricClass> = (0..g.n_segments())
                .map(|_| GeometricClass::ALL[rng.random_range(0..NUM_CLASSES)])
                .collect();
            let initial = truth
                .iter()
                .map(|&t| {
                    let other = GeometricClass::ALL
                        [(t.index() + rng.random_range(1..NUM_CLASSES)) % NUM_CLASSES];
                    if rng.random_bool(0.85) {
                        leaning(t, other, 0.7, 0.2)
                    } else {
                        leaning(other, t, 0.5, 0.3)
                    }
                })
                .collect();
            let mut maps = AttributeMaps::initial_only(initial, GW, GH);
            maps.line_term = true;
            let lm = gal_core::ipl::units_to_label_map(&g, &truth);
            (g, maps, lm)
        })
        .collect();
    let samples: Vec<CrfSample> = corpus
        .iter()
        .map(|(g, m, t)| CrfSample {
            maps: m,
            graph: g,
            truth: t,
        })
        .collect();
    let p = learn_params(&samples, &CrfParams::default(), 5, 10).unwrap();
    let lambda = CrfParams::from_config(&Config::default()).lambda;
    outcome(
        p.w[0] >= 0.8 && lambda == 0.1,
        format!("learned w0 = {:.3}, default lambda = {lambda}", p.w[0]),
    )
}

// 11. determinism

fn gal(args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_gal"))
        .args(args)
        .output()
        .is_ok_and(|o| o.status.success())
}

fn tree(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).into_iter().flatten().flatten() {
            let p = e.path();
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

fn determinism() -> Outcome {
    let t = tempfile::TempDir::new().unwrap();
    let root = t.path();
    let s = |p: &Path| p.to_str().unwrap().to_string();
    let mut ok = true;
    for d in ["synth_a", "synth_b"] {
        ok &= gal(&[
            "synth",
            "--seed",
            "11",
            "--count",
            "10",
            "--out",
            &s(&root.join(d)),
        ]);
    }
    let (sa, sb) = (tree(&root.join("synth_a")), tree(&root.join("synth_b")));
    let synth_same = ok && !sa.is_empty() && sa == sb;
    let image = root.join("synth_a/images/0004.ppm");
    let boxes = root.join("synth_a/boxes/0004.txt");
    for d in ["run_a", "run_b"] {
        ok &= gal(&[
            "run",
            &s(&image),
            "--boxes",
            &s(&boxes),
            "--out",
            &s(&root.join(d)),
        ]);
    }
    let (ra, rb) = (tree(&root.join("run_a")), tree(&root.join("run_b")));
    let run_same = ok && !ra.is_empty() && ra == rb;
    outcome(
        synth_same && run_same,
        format!(
            "synth {} files identical: {synth_same}, run {} files identical: {run_same}",
            sa.len(),
            ra.len()
        ),
    )
}

fn main() -> ExitCode {
    let t = Instant::now();
    let pipeline = builtin_pipeline(Config::default()).expect("built-in pipeline");
    println!("built-in pipeline ready in {}", secs(t.elapsed()));
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("max-flow oracle", Box::new(max_flow_oracle)),
        ("alpha-expansion optimality", Box::new(expansion_optimality)),
        ("unary and energy oracle", Box::new(energy_oracle)),
        ("defocus line validation", Box::new(defocus_lines)),
        ("horizon", Box::new(|| horizon(&pipeline))),
        ("orientation", Box::new(|| orientation(&pipeline))),
        ("grab-cut", Box::new(grab_cut_check)),
        ("porous and solid", Box::new(porous)),
        ("end to end", Box::new(|| end_to_end(&pipeline))),
        ("learning", Box::new(learning)),
        ("determinism", Box::new(determinism)),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = f();
        failed += usize::from(!o.pass);
        println!(
            "criterion {:>2} {} {name}: {} [{}]",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            secs(t.elapsed())
        );
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
