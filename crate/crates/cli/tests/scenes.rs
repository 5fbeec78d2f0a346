use std::sync::OnceLock;

use gal_cli::pipeline::{builtin_model, Pipeline, PipelineOutput};
use gal_cli::synth::{generate_scenes, occlusion_pair, SceneKind, SyntheticScene, HEIGHT, WIDTH};
use gal_core::gae::{AttributeSet, BoundaryPolyline, GlobalAttributeVector};
use gal_core::{Config, GeometricClass};
use rayon::prelude::*;

fn pipeline() -> &'static Pipeline {
    static P: OnceLock<Pipeline> = OnceLock::new();
    P.get_or_init(|| {
        let cfg = Config::default();
        let model = builtin_model(&cfg).unwrap();
        Pipeline::new(cfg, model, None).unwrap()
    })
}

fn run(s: &SyntheticScene, enabled: &AttributeSet) -> PipelineOutput {
    pipeline()
        .run(&s.image, &s.attributes.boxes, None, enabled)
        .unwrap()
}

fn polyline_is_valid(p: &BoundaryPolyline) -> bool {
    p.ys.len() == WIDTH
        && p.ys
            .iter()
            .flatten()
            .all(|y| (0.0..HEIGHT as f64).contains(y))
        && (0.0..=1.0).contains(&p.confidence)
}

fn payloads_are_valid(gav: &GlobalAttributeVector, n_units: usize) -> bool {
    let w = WIDTH as f64;
    let mut ok = true;
    if let Some(sg) = &gav.sky_ground {
        ok &= sg.sky.is_some() || sg.ground.is_some();
        ok &= sg.sky.iter().chain(&sg.ground).all(polyline_is_valid);
    }
    if let Some(h) = &gav.horizon {
        ok &= (0.0..HEIGHT as f64).contains(&h.row) && h.unconfident.iter().all(|&u| u < n_units);
    }
    if let Some(ps) = &gav.planar {
        ok &= !ps.is_empty();
        ok &= ps
            .iter()
            .all(|p| -0.5 <= p.x0 && p.x0 < p.x1 && p.x1 <= w - 0.5);
        ok &= ps.iter().all(|p| p.orientation.is_planar());
    }
    if let Some(v) = &gav.vertical {
        ok &= v.scores.len() == n_units && v.scores.iter().all(|b| (0.0..=1.0).contains(b));
    }
    if let Some(rs) = &gav.vanishing {
        let pieces = gav.planar.as_ref().map_or(0, |p| p.len());
        ok &= !rs.is_empty()
            && rs
                .iter()
                .all(|r| r.piece < pieces && !r.vanishing_point.inliers.is_empty());
    }
    if let Some(ms) = &gav.solid {
        ok &= !ms.is_empty()
            && ms
                .iter()
                .all(|m| m.mask.len() == WIDTH * HEIGHT && m.area() > 0);
    }
    if let Some(ps) = &gav.porous {
        ok &= !ps.is_empty();
        ok &= ps
            .iter()
            .all(|p| !p.units.is_empty() && p.units.iter().all(|&u| u < n_units));
        ok &= ps.iter().all(|p| (0.0..=1.0).contains(&p.score));
    }
    ok
}

#[test]
fn flags_agree_with_payloads_on_random_scenes() {
    let scenes = generate_scenes(31, 100, &SceneKind::ALL).unwrap();
    let bad: Vec<usize> = scenes
        .par_iter()
        .enumerate()
        .filter_map(|(i, s)| {
            let o = run(s, &AttributeSet::all());
            let n = o.initial.stack.fine.n_segments();
            o.gae.maps.validate().unwrap();
            (!payloads_are_valid(&o.gae.gav, n)).then_some(i)
        })
        .collect();
    assert!(bad.is_empty(), "invalid payloads on scenes {bad:?}");
}

#[test]
fn disabled_attributes_leave_uniform_rows_and_no_payload() {
    let scenes = generate_scenes(32, 10, &SceneKind::ALL).unwrap();
    for s in &scenes {
        let o = run(s, &AttributeSet::none());
        let m = &o.gae.maps;
        assert_eq!(o.gae.gav.flags(), [false; 7]);
        for rows in [&m.porous, &m.solid, &m.horizon, &m.vertical] {
            assert!(rows.iter().all(|r| r.is_uniform()));
        }
        assert!(!m.line_term && m.vanishing.is_none() && m.planar.is_none());
        for u in 0..m.n_units() {
            for c in m.components(u) {
                assert!((c.probs().iter().sum::<f64>() - 1.0).abs() < 1e-6);
            }
        }
    }
}

#[test]
fn sea_and_sky_scenes_only_flag_the_horizon() {
    let scenes = generate_scenes(33, 8, &[SceneKind::HorizonOnly]).unwrap();
    for s in &scenes {
        let o = run(s, &AttributeSet::all());
        assert_eq!(
            o.gae.gav.flags(),
            [false, true, false, false, false, false, false]
        );
    }
}

#[test]
fn corner_scenes_flag_lines_planes_and_vanishing_points() {
    let scenes = generate_scenes(34, 8, &[SceneKind::CornerBuilding]).unwrap();
    for s in &scenes {
        let f = run(s, &AttributeSet::all()).gae.gav.flags();
        assert!(f[0] && f[2] && f[3] && f[4], "{f:?}");
    }
}

#[test]
fn horizon_only_output_is_sky_and_support() {
    let scenes = generate_scenes(35, 5, &[SceneKind::HorizonOnly]).unwrap();
    for s in &scenes {
        let o = run(s, &AttributeSet::all());
        let allowed = [GeometricClass::Sky.code(), GeometricClass::Support.code()];
        assert!(o.label_map().codes().iter().all(|c| allowed.contains(c)));
    }
}

fn outside_porous(s: &SyntheticScene, x: usize) -> bool {
    s.attributes
        .porous
        .is_none_or(|(cx, _, rx, _)| (x as f64 + 0.5 - cx).abs() > rx + 2.0)
}

#[test]
fn removed_solid_masks_leave_the_boundary_lines_in_place() {
    for i in 0..8 {
        let (clean, occluded) = occlusion_pair(36, i);
        let a = run(&clean, &AttributeSet::all()).gae.diagnostics;
        let b = run(&occluded, &AttributeSet::all()).gae.diagnostics;
        for (la, lb) in [(&a.sky, &b.sky), (&a.ground, &b.ground)] {
            let (Some(la), Some(lb)) = (la, lb) else {
                assert_eq!(la.is_some(), lb.is_some(), "scene {i}");
                continue;
            };
            let (mut both, mut close) = (0, 0);
            for x in (0..WIDTH).filter(|&x| outside_porous(&occluded, x)) {
                if let (Some(u), Some(v)) = (la.polyline.ys[x], lb.polyline.ys[x]) {
                    both += 1;
                    close += usize::from((u - v).abs() <= 2.0);
                }
            }
            assert!(
                both > 0 && close as f64 >= 0.95 * both as f64,
                "scene {i}: {close}/{both}"
            );
        }
    }
}

#[test]
fn pipeline_is_deterministic() {
    let s = &generate_scenes(37, 2, &[SceneKind::Occluded]).unwrap()[1];
    let a = run(s, &AttributeSet::all());
    let b = run(s, &AttributeSet::all());
    assert_eq!(a.label_map(), b.label_map());
    assert_eq!(a.gae, b.gae);
    assert_eq!(a.refinement.expansion, b.refinement.expansion);
}

#[test]
fn occluded_render_matches_the_plain_generator() {
    for i in 0..4 {
        let (_, o) = occlusion_pair(38, i);
        let g = gal_cli::synth::generate_scene(38, i, SceneKind::Occluded);
        assert_eq!(o, g);
    }
}
