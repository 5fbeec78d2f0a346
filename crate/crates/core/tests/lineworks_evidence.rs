use gal_core::imageops::{gaussian_blur, Plane};
use gal_core::lineworks::{
    defocus_map, detect_segments, edge_probability, rasterize_segments, vertical_line_score,
    DefocusParams, EdgeParams, EvidenceMaps, LineSegment, LsdParams,
};
use gal_core::{Config, Raster};
use proptest::prelude::*;

fn dist_to_segment(px: f64, py: f64, s: &LineSegment) -> f64 {
    let (dx, dy) = (s.x2 - s.x1, s.y2 - s.y1);
    let t = (((px - s.x1) * dx + (py - s.y1) * dy) / (dx * dx + dy * dy)).clamp(0.0, 1.0);
    (px - s.x1 - t * dx).hypot(py - s.y1 - t * dy)
}

fn render_wireframe(w: usize, h: usize, segs: &[LineSegment]) -> Raster {
    let data = (0..w * h)
        .map(|p| {
            let (x, y) = ((p % w) as f64, (p / w) as f64);
            if segs.iter().any(|s| dist_to_segment(x, y, s) <= 1.0) {
                0.0
            } else {
                1.0
            }
        })
        .collect();
    Raster::new(w, h, 1, data).unwrap()
}

fn endpoint_error(a: &LineSegment, b: &LineSegment) -> f64 {
    let d = |x1: f64, y1: f64, x2: f64, y2: f64| (x1 - x2).hypot(y1 - y2);
    let same = d(a.x1, a.y1, b.x1, b.y1).max(d(a.x2, a.y2, b.x2, b.y2));
    let swapped = d(a.x1, a.y1, b.x2, b.y2).max(d(a.x2, a.y2, b.x1, b.y1));
    same.min(swapped)
}

#[test]
fn wireframe_segments_are_recovered() {
    let truth = [
        LineSegment::new(20.0, 20.0, 20.0, 120.0),
        LineSegment::new(50.0, 30.0, 170.0, 30.0),
        LineSegment::new(60.0, 60.0, 150.0, 130.0),
        LineSegment::new(40.0, 60.0, 40.0, 150.0),
        LineSegment::new(180.0, 140.0, 190.0, 50.0),
    ];
    let img = render_wireframe(210, 160, &truth);
    let found = detect_segments(&img, &LsdParams::default());
    let mut used = vec![false; found.len()];
    let mut recalled = 0;
    for t in &truth {
        let best = found
            .iter()
            .enumerate()
            .filter(|(i, _)| !used[*i])
            .map(|(i, f)| (i, endpoint_error(t, f)))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        if let Some((i, err)) = best {
            if err <= 3.0 {
                used[i] = true;
                recalled += 1;
            }
        }
    }
    assert!(recalled >= 4, "recalled {recalled}/5 from {found:?}");
}

#[test]
fn segments_are_sorted_and_consistent() {
    let truth = [
        LineSegment::new(10.0, 70.0, 90.0, 70.0),
        LineSegment::new(40.0, 10.0, 40.0, 60.0),
    ];
    let img = render_wireframe(100, 90, &truth);
    let found = detect_segments(&img, &LsdParams::default());
    assert!(!found.is_empty());
    for pair in found.windows(2) {
        assert!((pair[0].y1, pair[0].x1) <= (pair[1].y1, pair[1].x1));
    }
    for s in &found {
        assert!(s.length() > 0.0);
        assert!((0.0..180.0).contains(&s.angle()));
        assert!((s.y1, s.x1) <= (s.y2, s.x2));
    }
}

/// Sky, facade with windows and ground, all rendered without blur.
fn sharp_scene(w: usize, h: usize) -> Plane {
    Plane::new(
        w,
        h,
        (0..w * h)
            .map(|p| {
                let (x, y) = (p % w, p / w);
                if y < h / 3 {
                    0.85
                } else if y > 2 * h / 3 {
                    0.35
                } else if x % 20 < 8 && y % 16 < 8 {
                    0.15
                } else {
                    0.6
                }
            })
            .collect(),
    )
}

#[test]
fn sharp_scene_has_negligible_defocus_edges() {
    let g = sharp_scene(160, 120);
    let e = edge_probability(&g, &EdgeParams::default());
    let d = defocus_map(&g, &e, &DefocusParams::default());
    let max = d.max_value();
    assert!(max < 0.2, "defocus edge max {max}");
}

#[test]
fn blur_boundary_produces_defocus_ridge() {
    let (w, h) = (120, 140);
    let texture = Plane::new(
        w,
        h,
        (0..w * h)
            .map(|p| {
                let (x, y) = (p % w, p / w);
                if (x / 20 + y / 20) % 2 == 0 {
                    0.2
                } else {
                    0.8
                }
            })
            .collect(),
    );
    let blurred = gaussian_blur(&texture, 3.0);
    let split = h / 2;
    let mixed = Plane::new(
        w,
        h,
        (0..w * h)
            .map(|p| {
                if p / w < split {
                    texture.data[p]
                } else {
                    blurred.data[p]
                }
            })
            .collect(),
    );
    let e = edge_probability(&mixed, &EdgeParams::default());
    let d = defocus_map(&mixed, &e, &DefocusParams::default());
    // rows averaged over the central columns
    let row_mean: Vec<f64> = (0..h)
        .map(|y| (10..w - 10).map(|x| d.at(x, y)).sum::<f64>() / (w - 20) as f64)
        .collect();
    let (arg, _) =
        row_mean
            .iter()
            .enumerate()
            .skip(8)
            .take(h - 16)
            .fold(
                (0, f64::MIN),
                |a, (i, v)| if *v > a.1 { (i, *v) } else { a },
            );
    assert!(
        (arg as isize - split as isize).abs() <= 4,
        "ridge row {arg}"
    );
}

#[test]
fn line_map_is_the_rasterized_segment_list() {
    let truth = [LineSegment::new(10.0, 10.0, 10.0, 60.0)];
    let img = render_wireframe(60, 70, &truth);
    let maps = EvidenceMaps::compute(
        &Raster::from_clamped(60, 70, 1, img.data().to_vec()).unwrap(),
        &Config::default(),
    );
    assert_eq!(maps.line_map, rasterize_segments(&maps.segments, 60, 70));
    assert!(maps.line_map.data.iter().all(|v| *v == 0.0 || *v == 1.0));
    for p in [&maps.edge_map, &maps.defocus_edge_map] {
        assert!(p.data.iter().all(|v| (0.0..=1.0).contains(v)));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]
    #[test]
    fn evidence_maps_stay_in_unit_range(data in prop::collection::vec(0.0f64..=1.0, 24 * 20)) {
        let g = Plane::new(24, 20, data);
        let e = edge_probability(&g, &EdgeParams::default());
        let d = defocus_map(&g, &e, &DefocusParams::default());
        prop_assert!(e.data.iter().all(|v| (0.0..=1.0).contains(v)));
        prop_assert!(d.data.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn vertical_score_grows_with_more_segments(xs in prop::collection::vec(0usize..50, 1..12)) {
        let region: Vec<usize> = (0..50 * 50).collect();
        let mut segs = Vec::new();
        let mut prev = 0.0;
        for x in xs {
            segs.push(LineSegment::new(x as f64, 10.0, x as f64 + 0.5, 30.0));
            let s = vertical_line_score(&segs, &region, 50, 5.0).unwrap();
            prop_assert!(s >= prev);
            prop_assert!((0.0..=1.0).contains(&s));
            prev = s;
        }
    }

    #[test]
    fn vertical_score_is_translation_invariant(
        dx in 0usize..20, dy in 0usize..20, x0 in 0usize..10, len in 5usize..15
    ) {
        let w = 60;
        let region: Vec<usize> = (0..20).flat_map(|y| (0..20).map(move |x| y * w + x)).collect();
        let segs = vec![LineSegment::new((x0 + 3) as f64, 2.0, (x0 + 3) as f64, (2 + len) as f64)];
        let base = vertical_line_score(&segs, &region, w, 5.0).unwrap();
        let moved_region: Vec<usize> = region.iter().map(|p| p + dy * w + dx).collect();
        let moved: Vec<LineSegment> = segs.iter().map(|s| s.translated(dx as f64, dy as f64)).collect();
        prop_assert_eq!(base, vertical_line_score(&moved, &moved_region, w, 5.0).unwrap());
    }
}
