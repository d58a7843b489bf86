use super::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn pt(id: &str, a: f64, alpha: f64, category: Category) -> IndexPoint {
    IndexPoint::new(id, a, alpha, category).unwrap()
}

/// Brute-force reference: coarse-to-fine grid over `w`, with the bias found
/// by evaluating the objective at every hinge kink.
pub(crate) fn grid_optimum(x: &[[f64; 2]], y: &[f64], c: f64) -> f64 {
    let objective = |w: [f64; 2]| {
        let eval = |b: f64| {
            0.5 * (w[0] * w[0] + w[1] * w[1])
                + c * x
                    .iter()
                    .zip(y)
                    .map(|(xi, yi)| (1.0 - yi * (w[0] * xi[0] + w[1] * xi[1] + b)).max(0.0))
                    .sum::<f64>()
        };
        x.iter()
            .zip(y)
            .map(|(xi, yi)| eval(yi - (w[0] * xi[0] + w[1] * xi[1])))
            .fold(f64::INFINITY, f64::min)
    };
    let (mut center, mut half) = ([0.0, 0.0], 20.0);
    let mut best = f64::INFINITY;
    for _ in 0..12 {
        let steps = 80;
        let mut best_w = center;
        for i in -steps..=steps {
            for j in -steps..=steps {
                let w = [
                    center[0] + half * i as f64 / steps as f64,
                    center[1] + half * j as f64 / steps as f64,
                ];
                let f = objective(w);
                if f < best {
                    best = f;
                    best_w = w;
                }
            }
        }
        center = best_w;
        half *= 0.1;
    }
    best
}

fn scaled_design(model: &SvmModel, points: &[IndexPoint]) -> (Vec<[f64; 2]>, Vec<f64>) {
    model.design(points)
}

fn symmetric_pair() -> Vec<IndexPoint> {
    // standardizes to (1, 1) and (-1, -1)
    vec![
        pt("n", 110.0, 0.03, Category::Ngt),
        pt("d", 90.0, 0.01, Category::T2dm),
    ]
}

#[test]
fn symmetric_two_points() {
    let model = train(&symmetric_pair(), 1e3, 1e-9).unwrap();
    assert!(
        (model.w[0] - 0.5).abs() < 1e-6 && (model.w[1] - 0.5).abs() < 1e-6,
        "{model:?}"
    );
    assert!(model.b.abs() < 1e-6);
    let pn = model.predict(110.0, 0.03).unwrap();
    let pd = model.predict(90.0, 0.01).unwrap();
    assert_eq!(pn.label, BinaryLabel::Normoglycemic);
    assert_eq!(pd.label, BinaryLabel::Dysglycemic);
    assert!((pn.signed_distance + pd.signed_distance).abs() < 1e-9);
    assert!((pn.signed_distance - 2f64.sqrt()).abs() < 1e-6);
}

#[test]
fn boundary_and_reflection() {
    let model = train(&symmetric_pair(), 1e3, 1e-9).unwrap();
    // exact line through the origin of scaled space
    let exact = SvmModel {
        w: [0.5, 0.5],
        b: 0.0,
        ..model.clone()
    };
    let on_line = exact.scaling.invert([0.7, -0.7]);
    let p = exact.predict(on_line[0], on_line[1]).unwrap();
    assert!(p.signed_distance.abs() < 1e-12);
    let zero = SvmModel {
        w: [1.0, 0.0],
        b: 0.0,
        ..model.clone()
    };
    let center = zero.scaling.invert([0.0, 0.3]);
    let p = zero.predict(center[0], center[1]).unwrap();
    assert_eq!(p.signed_distance, 0.0);
    assert_eq!(p.label, BinaryLabel::Normoglycemic);

    let far = exact.scaling.invert([5.0, 4.0]);
    assert_eq!(
        exact.predict(far[0], far[1]).unwrap().label,
        BinaryLabel::Normoglycemic
    );
    let u = [0.8, 1.3];
    let here = exact.scaling.invert(u);
    let there = exact.scaling.invert([-u[0], -u[1]]);
    let p1 = exact.predict(here[0], here[1]).unwrap();
    let p2 = exact.predict(there[0], there[1]).unwrap();
    assert_ne!(p1.label, p2.label);
    assert!((p1.signed_distance + p2.signed_distance).abs() < 1e-9);
}

#[test]
fn six_point_separable_matches_grid_oracle() {
    let points = vec![
        pt("1", 60.0, 0.030, Category::Ngt),
        pt("2", 75.0, 0.034, Category::Ngt),
        pt("3", 70.0, 0.024, Category::Ngt),
        pt("4", 180.0, 0.012, Category::Igt),
        pt("5", 210.0, 0.008, Category::T2dm),
        pt("6", 150.0, 0.015, Category::IfgIgt),
    ];
    for c in [0.1, 1.0, 10.0] {
        let model = train(&points, c, 1e-6).unwrap();
        let (x, y) = scaled_design(&model, &points);
        let oracle = grid_optimum(&x, &y, c);
        let got = model.objective(&points);
        assert!(got <= oracle * 1.001, "c={c}: {got} vs grid {oracle}");
        assert!(
            got >= oracle * (1.0 - 1e-3),
            "c={c}: {got} below grid {oracle}?"
        );
        let report = accuracy_report(&model, &points).unwrap();
        if c >= 1.0 {
            assert_eq!(report.overall, 1.0);
        }
    }
}

/// Best accuracy of any line on a small point set, by sweeping directions and
/// thresholds.
fn best_linear_accuracy(x: &[[f64; 2]], y: &[f64]) -> f64 {
    let mut best = 0usize;
    for k in 0..3600 {
        let theta = k as f64 * TAU / 3600.0;
        let d = [theta.cos(), theta.sin()];
        let mut proj: Vec<f64> = x.iter().map(|p| p[0] * d[0] + p[1] * d[1]).collect();
        proj.sort_by(f64::total_cmp);
        let mut cuts = vec![proj[0] - 1.0, proj[proj.len() - 1] + 1.0];
        cuts.extend(proj.windows(2).map(|w| 0.5 * (w[0] + w[1])));
        for t in cuts {
            let ok = x
                .iter()
                .zip(y)
                .filter(|(p, yi)| {
                    let s = p[0] * d[0] + p[1] * d[1] - t;
                    (s >= 0.0) == (**yi > 0.0)
                })
                .count();
            best = best.max(ok);
        }
    }
    best as f64 / x.len() as f64
}

#[test]
fn xor_like_set() {
    let points = vec![
        pt("1", 60.0, 0.010, Category::Ngt),
        pt("2", 200.0, 0.040, Category::Ngt),
        pt("3", 200.0, 0.010, Category::T2dm),
        pt("4", 80.0, 0.030, Category::Igt),
    ];
    // at small c the optimum trades accuracy for margin; c = 10 reaches the best line
    let model = train(&points, 10.0, 1e-6).unwrap();
    let (x, y) = scaled_design(&model, &points);
    assert_eq!(best_linear_accuracy(&x, &y), 0.75);
    assert!(model.hinge_loss(&points) > 0.0);
    let report = accuracy_report(&model, &points).unwrap();
    assert_eq!(report.overall, 0.75);
    assert!(model.objective(&points) <= grid_optimum(&x, &y, 10.0) * 1.001);
}

#[test]
fn training_errors() {
    let one_class = vec![
        pt("1", 60.0, 0.01, Category::Ngt),
        pt("2", 70.0, 0.02, Category::Ngt),
    ];
    assert!(matches!(
        train(&one_class, 1.0, 1e-6),
        Err(Error::Training(_))
    ));
    let identical = vec![
        pt("1", 60.0, 0.01, Category::Ngt),
        pt("2", 60.0, 0.01, Category::T2dm),
    ];
    assert!(matches!(
        train(&identical, 1.0, 1e-6),
        Err(Error::Training(_))
    ));
    assert!(train(&symmetric_pair(), 0.0, 1e-6).is_err());
    assert!(train(&symmetric_pair(), 1.0, 0.0).is_err());
    assert!(IndexPoint::new("x", -1.0, 0.01, Category::Ngt).is_err());
}

#[test]
fn invalid_model_rejected() {
    let mut model = train(&symmetric_pair(), 1.0, 1e-6).unwrap();
    model.w = [0.0, 0.0];
    assert!(matches!(model.predict(100.0, 0.02), Err(Error::Model(_))));
    let text = model.to_json().unwrap();
    assert!(SvmModel::from_json(&text).is_err());
}

#[test]
fn json_round_trip() {
    let model = train(&symmetric_pair(), 3.5, 1e-6).unwrap();
    let back = SvmModel::from_json(&model.to_json().unwrap()).unwrap();
    assert_eq!(back, model);
}

fn ten_points() -> Vec<IndexPoint> {
    vec![
        pt("n1", 60.0, 0.030, Category::Ngt),
        pt("n2", 65.0, 0.031, Category::Ngt),
        pt("n3", 70.0, 0.029, Category::Ngt),
        pt("n4", 200.0, 0.005, Category::Ngt), // planted: deep in the dysglycemic region
        pt("f1", 62.0, 0.028, Category::Ifg),  // planted: among the NGT points
        pt("g1", 190.0, 0.010, Category::Igt),
        pt("g2", 185.0, 0.011, Category::IfgIgt),
        pt("t1", 240.0, 0.004, Category::T2dm),
        pt("t2", 250.0, 0.003, Category::T2dm),
        pt("t3", 230.0, 0.006, Category::T2dm),
    ]
}

#[test]
fn ten_point_report_with_planted_errors() {
    let points = ten_points();
    // fixed separator: A below 120 mg/dl is normoglycemic
    let model = SvmModel {
        w: [-1.0, 0.0],
        b: 120.0,
        c: 1.0,
        scaling: FeatureScaling::IDENTITY,
    };
    let r = accuracy_report(&model, &points).unwrap();
    assert_eq!(r.total, 10);
    assert_eq!(r.correct, 8);
    assert_eq!(r.overall, 0.8);
    assert_eq!(
        r.confusion,
        ConfusionMatrix {
            normo_as_normo: 3,
            normo_as_dys: 1,
            dys_as_normo: 1,
            dys_as_dys: 5,
        }
    );
    assert_eq!(r.t2dm_as_normo, 0);
    let ifg = r
        .per_category
        .iter()
        .find(|c| c.category == Category::Ifg)
        .unwrap();
    assert_eq!((ifg.total, ifg.correct, ifg.accuracy), (1, 0, 0.0));
    let ngt = r
        .per_category
        .iter()
        .find(|c| c.category == Category::Ngt)
        .unwrap();
    assert_eq!(ngt.accuracy, 0.75);
}

#[test]
fn perfect_report_and_absent_groups() {
    let points: Vec<IndexPoint> = ten_points()
        .into_iter()
        .filter(|p| p.patient_id != "n4" && p.patient_id != "f1")
        .collect();
    let model = SvmModel {
        w: [-1.0, 0.0],
        b: 120.0,
        c: 1.0,
        scaling: FeatureScaling::IDENTITY,
    };
    let r = accuracy_report(&model, &points).unwrap();
    assert_eq!(r.overall, 1.0);
    assert!(r.per_category.iter().all(|c| c.accuracy == 1.0));
    assert!(r.per_category.iter().all(|c| c.category != Category::Ifg));
    assert_eq!(r.per_category.len(), 4);
    assert!(accuracy_report(&model, &[]).is_err());
}

fn at_angle(
    center: [f64; 2],
    deg: f64,
    radius: f64,
    category: Category,
    n: usize,
) -> Vec<IndexPoint> {
    let t = deg.to_radians();
    (0..n)
        .map(|i| {
            // small symmetric jitter that leaves the centroid in place
            let j = if i % 2 == 0 { 0.5 } else { -0.5 };
            pt(
                &format!("{category}-{i}"),
                center[0] + radius * t.cos() + j,
                center[1] + radius * t.sin() - j,
                category,
            )
        })
        .collect()
}

#[test]
fn constructed_angles() {
    let c = [100.0, 100.0];
    let mut points = at_angle(c, 90.0, 10.0, Category::Ngt, 4);
    points.extend(at_angle(c, 0.0, 10.0, Category::Igt, 4));
    points.extend(at_angle(c, -90.0, 10.0, Category::T2dm, 4));
    let pa = progression_angles(&points, Some(c), Some(&FeatureScaling::IDENTITY)).unwrap();
    let order: Vec<Category> = pa.categories.iter().map(|c| c.category).collect();
    assert_eq!(order, vec![Category::Ngt, Category::Igt, Category::T2dm]);
    assert!((pa.angle_of(Category::Ngt).unwrap() - PI / 2.0).abs() < 1e-12);
    assert!(pa.angle_of(Category::Igt).unwrap().abs() < 1e-12);
    assert_eq!(pa.ngt_igt_t2dm_clockwise(), Some(true));

    let mut ccw = at_angle(c, 90.0, 10.0, Category::Ngt, 4);
    ccw.extend(at_angle(c, -90.0, 10.0, Category::Igt, 4));
    ccw.extend(at_angle(c, 0.0, 10.0, Category::T2dm, 4));
    let pa = progression_angles(&ccw, Some(c), Some(&FeatureScaling::IDENTITY)).unwrap();
    assert_eq!(pa.ngt_igt_t2dm_clockwise(), Some(false));
}

#[test]
fn angles_need_two_categories() {
    let points = at_angle([100.0, 100.0], 10.0, 5.0, Category::Ngt, 3);
    assert!(progression_angles(&points, None, None).is_err());
}

#[test]
fn rotation_shifts_angles() {
    let c = [100.0, 100.0];
    let mut points = at_angle(c, 120.0, 20.0, Category::Ngt, 6);
    points.extend(at_angle(c, 30.0, 15.0, Category::Igt, 6));
    points.extend(at_angle(c, -60.0, 25.0, Category::T2dm, 6));
    let id = FeatureScaling::IDENTITY;
    let before = progression_angles(&points, Some(c), Some(&id)).unwrap();
    let rot = 0.7f64;
    let rotated: Vec<IndexPoint> = points
        .iter()
        .map(|p| {
            let (dx, dy) = (p.a - c[0], p.alpha - c[1]);
            pt(
                &p.patient_id,
                c[0] + dx * rot.cos() - dy * rot.sin(),
                c[1] + dx * rot.sin() + dy * rot.cos(),
                p.category,
            )
        })
        .collect();
    let after = progression_angles(&rotated, Some(c), Some(&id)).unwrap();
    for cat in [Category::Ngt, Category::Igt, Category::T2dm] {
        let shift = (after.angle_of(cat).unwrap() - before.angle_of(cat).unwrap()).rem_euclid(TAU);
        assert!((shift - rot).abs() < 1e-9, "{cat}: {shift}");
    }
}

fn random_instance(rng: &mut ChaCha8Rng, n: usize, separable: bool) -> Vec<IndexPoint> {
    loop {
        let mut points = Vec::new();
        for i in 0..n {
            let positive = i % 2 == 0;
            let (a, alpha) = if separable {
                if positive {
                    (rng.random_range(40.0..100.0), rng.random_range(0.02..0.05))
                } else {
                    (
                        rng.random_range(140.0..260.0),
                        rng.random_range(0.002..0.015),
                    )
                }
            } else {
                (rng.random_range(40.0..260.0), rng.random_range(0.002..0.05))
            };
            let cat = if positive {
                Category::Ngt
            } else {
                Category::T2dm
            };
            points.push(pt(&format!("p{i}"), a, alpha, cat));
        }
        if points.len() >= 2 {
            return points;
        }
    }
}

#[test]
fn seeded_small_instances_match_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for k in 0..10 {
        let n = 3 + k % 6;
        let points = random_instance(&mut rng, n, k % 2 == 0);
        let c = [0.3, 1.0, 5.0][k % 3];
        let Ok(model) = train(&points, c, 1e-6) else {
            continue;
        };
        let (x, y) = scaled_design(&model, &points);
        let oracle = grid_optimum(&x, &y, c);
        assert!(model.objective(&points) <= oracle * 1.001, "instance {k}");
    }
}

#[test]
fn trace_is_non_increasing() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let points = random_instance(&mut rng, 200, false);
    let (_, trace) = train_with_trace(&points, 1.0, 1e-8).unwrap();
    assert!(trace.objective.len() > 1);
    assert!(trace.objective.windows(2).all(|w| w[1] <= w[0]));
    let last = *trace.objective.last().unwrap();
    assert!(last - trace.dual_objective <= 1e-6 * last);
}

#[test]
fn deterministic_training() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let points = random_instance(&mut rng, 50, false);
    let a = train(&points, 1.0, 1e-6).unwrap();
    let b = train(&points, 1.0, 1e-6).unwrap();
    assert_eq!(a, b);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn affine_rescaling_keeps_labels(
        seed in 0u64..1000,
        sa in 0.1..10.0f64, oa in 0.0..50.0f64,
        sb in 0.1..10.0f64, ob in 0.0..0.5f64,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points = random_instance(&mut rng, 12, false);
        let moved: Vec<IndexPoint> = points
            .iter()
            .map(|p| pt(&p.patient_id, sa * p.a + oa, sb * p.alpha + ob, p.category))
            .collect();
        let (Ok(m1), Ok(m2)) = (train(&points, 1.0, 1e-9), train(&moved, 1.0, 1e-9)) else {
            return Ok(());
        };
        for _ in 0..20 {
            let (a, alpha) = (rng.random_range(40.0..260.0), rng.random_range(0.002..0.05));
            let s1 = m1.score(a, alpha);
            let s2 = m2.score(sa * a + oa, sb * alpha + ob);
            if s1.abs() > 1e-4 {
                prop_assert_eq!(s1 >= 0.0, s2 >= 0.0);
            }
        }
    }

    #[test]
    fn separable_large_c_is_perfect(seed in 0u64..1000, n in 2usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points = random_instance(&mut rng, n, true);
        let model = train(&points, 1e3, 1e-6).unwrap();
        prop_assert_eq!(accuracy_report(&model, &points).unwrap().overall, 1.0);
    }
}
