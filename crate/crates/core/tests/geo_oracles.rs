mod common;

use proptest::prelude::*;
use xfpt_core::geo::{
    bound_exponent, geodesic_euclidean, geodesic_grid, geodesic_lengths, geodesic_polygonal, DiffusivityGrid,
    GeodesicScene, Target,
};

use common::stencil_oracle;

fn disc(x: f64, y: f64, r: f64) -> Target {
    Target::Ball {
        center: vec![x, y],
        radius: r,
    }
}

#[test]
fn no_obstacles_reduce_to_straight_lines() {
    let scene = GeodesicScene::euclidean(vec![vec![0.0, 0.0]], vec![disc(3.0, 0.0, 1.0), disc(0.3, -4.0, 0.5)]);
    let l = geodesic_euclidean(&scene).unwrap();
    assert_eq!(l[0], 2.0);
    let poly = geodesic_polygonal(&scene).unwrap();
    for (a, b) in l.iter().zip(&poly) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn narrow_capture_and_concentric_distances() {
    let x0 = vec![0.1, 0.2, -0.3];
    let centers = [[0.5, 0.2, -0.3], [-0.4, 0.6, 0.1], [0.2, -0.7, 0.4]];
    let radii = [0.05, 0.08, 0.06];
    let scene = GeodesicScene::euclidean(
        vec![x0.clone()],
        centers
            .iter()
            .zip(radii)
            .map(|(c, r)| Target::Ball {
                center: c.to_vec(),
                radius: r,
            })
            .collect(),
    );
    let l = geodesic_euclidean(&scene).unwrap();
    for k in 0..3 {
        let d: f64 = centers[k].iter().zip(&x0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        assert!((l[k] - (d - radii[k])).abs() < 1e-15);
    }
    let shells = GeodesicScene::euclidean(
        vec![vec![1.5, 0.0, 0.0]],
        vec![
            Target::Ball {
                center: vec![0.0; 3],
                radius: 1.0,
            },
            Target::Exterior {
                center: vec![0.0; 3],
                radius: 2.0,
            },
        ],
    );
    assert_eq!(geodesic_euclidean(&shells).unwrap(), vec![0.5, 0.5]);
}

#[test]
fn start_inside_target_is_rejected() {
    let scene = GeodesicScene::euclidean(vec![vec![3.0, 0.0]], vec![disc(3.0, 0.0, 1.0)]);
    assert!(geodesic_euclidean(&scene).is_err());
}

fn blocked_scene(samples: usize) -> GeodesicScene {
    GeodesicScene {
        obstacles: vec![vec![[0.0, -1.0], [0.0, 0.5]]],
        boundary_samples: samples,
        ..GeodesicScene::euclidean(vec![vec![-1.0, 0.0]], vec![disc(2.0, 0.0, 0.5)])
    }
}

#[test]
fn blocked_segment_matches_hand_geometry_and_grid_oracle() {
    let l = geodesic_polygonal(&blocked_scene(256)).unwrap()[0];
    // Around the nearer wall end (0, 0.5), then straight to the disc.
    let hand = (1.0f64 + 0.25).sqrt() + ((4.0f64 + 0.25).sqrt() - 0.5);
    assert!((l - hand).abs() < 1e-12, "{l} vs {hand}");
    let oracle = stencil_oracle([-1.0, 0.0], &[([0.0, -1.0], [0.0, 0.5])], ([2.0, 0.0], 0.5), [-2.0, -2.0], [3.0, 2.0], 0.01);
    assert!((l / oracle - 1.0).abs() < 0.01, "{l} vs oracle {oracle}");
    assert!(l > 2.5);
}

#[test]
fn hidden_nearest_point_uses_samples_and_refines() {
    // A wall right in front of the target hides its nearest point from every vertex.
    let scene = |n| GeodesicScene {
        obstacles: vec![vec![[1.2, -0.9], [1.2, 0.9]], vec![[-0.5, 0.3], [0.2, 0.3], [0.2, 0.6], [-0.5, 0.6]]],
        boundary_samples: n,
        ..GeodesicScene::euclidean(vec![vec![-1.0, 0.0]], vec![disc(2.0, 0.0, 0.5)])
    };
    let a = geodesic_polygonal(&scene(256)).unwrap()[0];
    let b = geodesic_polygonal(&scene(512)).unwrap()[0];
    assert!((a / b - 1.0).abs() < 0.005, "{a} vs {b}");
    let oracle = stencil_oracle(
        [-1.0, 0.0],
        &[
            ([1.2, -0.9], [1.2, 0.9]),
            ([-0.5, 0.3], [0.2, 0.3]),
            ([0.2, 0.3], [0.2, 0.6]),
            ([0.2, 0.6], [-0.5, 0.6]),
            ([-0.5, 0.6], [-0.5, 0.3]),
        ],
        ([2.0, 0.0], 0.5),
        [-2.0, -2.0],
        [3.0, 2.0],
        0.01,
    );
    assert!((b / oracle - 1.0).abs() < 0.01, "{b} vs oracle {oracle}");
}

#[test]
fn disconnected_target_is_unreachable() {
    // Four overlapping thick walls enclosing the target.
    let rect = |x0: f64, y0: f64, x1: f64, y1: f64| vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1]];
    let scene = GeodesicScene {
        obstacles: vec![
            rect(0.9, 0.9, 3.1, 1.1),
            rect(0.9, -1.1, 3.1, -0.9),
            rect(0.9, -1.1, 1.1, 1.1),
            rect(2.9, -1.1, 3.1, 1.1),
        ],
        ..GeodesicScene::euclidean(vec![vec![-1.0, 0.0]], vec![disc(2.0, 0.0, 0.5)])
    };
    assert!(matches!(
        geodesic_polygonal(&scene),
        Err(xfpt_core::Error::Unreachable(0))
    ));
}

fn field_scene(h: f64, value: impl Fn(f64, f64) -> f64, target: Target, start: [f64; 2], size: [f64; 2]) -> GeodesicScene {
    let nx = (size[0] / h).round() as usize + 1;
    let ny = (size[1] / h).round() as usize + 1;
    let mut values = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            values.push(Some(value(i as f64 * h, j as f64 * h)));
        }
    }
    GeodesicScene {
        field: Some(DiffusivityGrid {
            origin: [0.0, 0.0],
            spacing: h,
            nx,
            ny,
            values,
        }),
        ..GeodesicScene::euclidean(vec![start.to_vec()], vec![target])
    }
}

#[test]
fn constant_field_within_octile_bound() {
    let h = 0.02;
    for &(tx, ty) in &[(1.6, 0.2), (1.4, 1.0), (0.9, 1.5)] {
        let scene = field_scene(h, |_, _| 1.0, disc(tx, ty, 0.1), [0.2, 0.2], [2.0, 2.0]);
        let l = geodesic_grid(&scene).unwrap()[0];
        let euc = ((tx - 0.2f64).powi(2) + (ty - 0.2f64).powi(2)).sqrt() - 0.1;
        // 8-connected paths overestimate by at most 1/cos(22.5 deg) - ... = 8.24%.
        assert!(l >= euc - h && l <= 1.0824 * euc + 2.0 * h, "{l} vs {euc}");
    }
}

#[test]
fn two_region_corridor() {
    let corridor = |h: f64| {
        let target = Target::Polygon {
            vertices: vec![[0.95, -1.0], [2.0, -1.0], [2.0, 1.0], [0.95, 1.0]],
        };
        let scene = field_scene(
            h,
            |x, _| if x < 0.5 { 1.0 } else { 0.25 },
            target,
            [0.05, 0.1],
            [1.0, 0.2],
        );
        geodesic_grid(&scene).unwrap()[0]
    };
    let analytic = 0.45 / 1.0 + 0.45 / 0.5;
    let coarse = corridor(0.01);
    let fine = corridor(0.005);
    assert!((coarse / analytic - 1.0).abs() < 0.01, "{coarse} vs {analytic}");
    assert!((fine / coarse - 1.0).abs() < 0.01);
    // Dispatch picks the grid mode.
    let scene = field_scene(0.01, |_, _| 1.0, disc(0.8, 0.1, 0.05), [0.1, 0.1], [1.0, 0.2]);
    assert_eq!(geodesic_lengths(&scene).unwrap(), geodesic_grid(&scene).unwrap());
}

#[test]
fn removed_nodes_act_as_obstacles() {
    let h = 0.02;
    let open = field_scene(h, |_, _| 1.0, disc(1.8, 1.0, 0.1), [0.2, 1.0], [2.0, 2.0]);
    let mut walled = open.clone();
    let g = walled.field.as_mut().unwrap();
    for j in 0..g.ny {
        let y = j as f64 * h;
        if y < 1.6 {
            g.values[j * g.nx + 50] = None;
        }
    }
    let a = geodesic_grid(&open).unwrap()[0];
    let b = geodesic_grid(&walled).unwrap()[0];
    assert!(b > a + 0.3, "{a} vs {b}");
}

#[test]
fn bound_exponent_examples() {
    assert_eq!(bound_exponent(1.0, 2.0, 1.0).unwrap().exponent, -3.0);
    let b = bound_exponent(0.45, 0.55, 1.0).unwrap();
    assert!((b.exponent - (1.0 - (11.0f64 / 9.0).powi(2))).abs() < 1e-15);
    assert!(bound_exponent(0.5, 0.4, 1.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn obstacles_never_shorten(wx in -0.5f64..1.5, y0 in -1.5f64..0.0, len in 0.2f64..2.0) {
        let plain = GeodesicScene::euclidean(vec![vec![-1.0, 0.0]], vec![disc(2.0, 0.0, 0.5)]);
        let euc = geodesic_euclidean(&plain).unwrap()[0];
        let walled = GeodesicScene {
            obstacles: vec![vec![[wx, y0], [wx, y0 + len]]],
            ..plain.clone()
        };
        let one = geodesic_polygonal(&walled).unwrap()[0];
        prop_assert!(one >= euc - 1e-12);
        let two = GeodesicScene {
            obstacles: vec![vec![[wx, y0], [wx, y0 + len]], vec![[wx - 0.3, 0.8], [wx + 0.3, 0.8], [wx, 1.2]]],
            ..plain
        };
        let both = geodesic_polygonal(&two).unwrap()[0];
        prop_assert!(both >= one - 1e-12);
    }

    #[test]
    fn triangle_inequality(wx in -0.5f64..1.5, mx in -1.5f64..3.0, my in -1.5f64..1.5) {
        let wall = vec![vec![[wx, -1.0], [wx, 0.7]]];
        let via = [mx, my];
        prop_assume!(((mx - 2.0).powi(2) + my * my).sqrt() > 0.55);
        let direct = geodesic_polygonal(&GeodesicScene {
            obstacles: wall.clone(),
            ..GeodesicScene::euclidean(vec![vec![-1.0, 0.0]], vec![disc(2.0, 0.0, 0.5)])
        }).unwrap()[0];
        // Start -> via, with a tiny disc at `via` as the target.
        let first = geodesic_polygonal(&GeodesicScene {
            obstacles: wall.clone(),
            ..GeodesicScene::euclidean(vec![vec![-1.0, 0.0]], vec![disc(via[0], via[1], 1e-9)])
        });
        let second = geodesic_polygonal(&GeodesicScene {
            obstacles: wall,
            ..GeodesicScene::euclidean(vec![via.to_vec()], vec![disc(2.0, 0.0, 0.5)])
        });
        if let (Ok(a), Ok(b)) = (first, second) {
            prop_assert!(direct <= a[0] + b[0] + 1e-8);
        }
    }
}
