use protolines::classify::slap_influence;
use protolines::geometry::point_segment_distance;
use protolines::synth::{generate, preset};
use protolines::{accuracy, centroid_1nn, centroids, confusion_matrix, distill, Dataset, DistillOptions, FinderRegistry, PrototypeModel};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// First seed from `seed` on whose data the preset distills cleanly.
fn model_for(name: &str, seed: u64) -> (Dataset, PrototypeModel) {
    let reg = FinderRegistry::default();
    for s in seed..seed + 20 {
        let p = preset(name, None, s).unwrap();
        let ds = generate(&p.spec).unwrap();
        if let Ok(m) = distill(&ds, reg.get(p.method).unwrap(), &DistillOptions::new(p.lines)) {
            return (ds, m);
        }
    }
    panic!("no feasible seed for {name}");
}

fn random_points(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..2 * n).map(|_| rng.gen_range(-3.0..13.0)).collect()
}

#[test]
fn point_order_does_not_matter() {
    let (_, model) = model_for("regular1", 1);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let pts = random_points(&mut rng, 500);
    let pred = model.predict(&pts).unwrap();
    let mut order: Vec<usize> = (0..500).collect();
    order.shuffle(&mut rng);
    let shuffled: Vec<f64> = order.iter().flat_map(|&i| [pts[2 * i], pts[2 * i + 1]]).collect();
    let again = model.predict(&shuffled).unwrap();
    for (k, &i) in order.iter().enumerate() {
        assert_eq!(again[k], pred[i]);
    }
}

#[test]
fn line_order_does_not_matter() {
    let (_, model) = model_for("regular2", 3);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let pts = random_points(&mut rng, 2000);
    let pred = model.predict(&pts).unwrap();
    let mut permuted = model.clone();
    permuted.lines.reverse();
    assert_eq!(permuted.predict(&pts).unwrap(), pred);
}

#[test]
fn a_far_away_line_changes_nothing() {
    let (ds, model) = model_for("regular1", 5);
    let mut extended = model.clone();
    let mut far = model.lines[0].clone();
    let shift = vec![1e6, -1e6];
    far.layout.segment = far.layout.segment.translated(&shift).unwrap();
    far.p1.location.iter_mut().zip(&shift).for_each(|(a, b)| *a += b);
    far.p2.location.iter_mut().zip(&shift).for_each(|(a, b)| *a += b);
    extended.lines.push(far);
    assert_eq!(extended.predict_dataset(&ds).unwrap(), model.predict_dataset(&ds).unwrap());
}

#[test]
fn single_line_classes_occupy_ordered_intervals() {
    let (_, model) = model_for("regular5", 2);
    for line in &model.lines {
        let seg = &line.layout.segment;
        let mut last_rank = 0;
        for i in 0..=4000 {
            let p = seg.point_at(seg.length() * i as f64 / 4000.0);
            let s = slap_influence(&p, line.prototypes(), &line.layout.class_ids, model.class_count(), model.eps_opt());
            let class = s.argmax();
            let rank = line.layout.class_ids.iter().position(|&c| c == class).expect("class belongs to the line");
            assert!(rank >= last_rank, "class order reversed at step {i}");
            last_rank = rank;
        }
        assert_eq!(last_rank, line.layout.class_ids.len() - 1);
    }
}

#[test]
fn predictions_stay_on_the_nearest_line() {
    let (_, model) = model_for("regular2", 9);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let pts = random_points(&mut rng, 1000);
    for (p, c) in pts.chunks(2).zip(model.predict(&pts).unwrap()) {
        let line = &model.lines[model.nearest_line(p)];
        assert!(line.layout.class_ids.contains(&c));
        let d = point_segment_distance(p, &line.layout.segment);
        assert!(model.lines.iter().all(|l| point_segment_distance(p, &l.layout.segment) >= d));
    }
}

#[test]
fn round_trip_preserves_predictions() {
    let (ds, model) = model_for("regular1", 11);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    model.save(&path).unwrap();
    let loaded = PrototypeModel::load(&path).unwrap();
    assert_eq!(loaded, model);
    assert_eq!(loaded.predict_dataset(&ds).unwrap(), model.predict_dataset(&ds).unwrap());
}

#[test]
fn prototype_labels_are_distributions() {
    let (_, model) = model_for("regular1", 21);
    assert_eq!(model.prototype_count(), 2 * model.lines.len());
    for line in &model.lines {
        for p in line.prototypes() {
            let sum: f64 = p.label.iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
            assert!(p.label.iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
        assert_eq!(line.p1.location, line.layout.segment.a());
        assert_eq!(line.p2.location, line.layout.segment.b());
    }
}

#[test]
fn baseline_and_metrics() {
    let (ds, _) = model_for("regular1", 1);
    let cs = centroids(&ds);
    let pred = centroid_1nn(&cs, ds.points()).unwrap();
    // Each centroid classifies as its own class.
    let flat: Vec<f64> = cs.rows().concat();
    assert_eq!(centroid_1nn(&cs, &flat).unwrap(), (0..cs.len()).collect::<Vec<_>>());
    let acc = accuracy(&pred, ds.labels()).unwrap();
    let m = confusion_matrix(&pred, ds.labels(), ds.class_count());
    let diag: usize = (0..m.len()).map(|i| m[i][i]).sum();
    let total: usize = m.iter().flatten().sum();
    assert_eq!(total, ds.len());
    assert_eq!(acc, diag as f64 / total as f64);
    assert!(accuracy(&pred[1..], ds.labels()).is_err());
}

#[test]
fn uncovered_classes_are_never_predicted() {
    // Two tight pairs plus one centroid far off both regression lines.
    let rows: Vec<Vec<f64>> = [(0.0, 0.0), (4.0, 0.0), (2.0, 6.0), (20.0, 20.0), (24.0, 21.0)]
        .iter()
        .flat_map(|&(x, y)| (0..4).map(move |k| vec![x + 0.01 * k as f64, y - 0.01 * k as f64]))
        .collect();
    let labels: Vec<usize> = (0..5).flat_map(|c| [c; 4]).collect();
    let ds = Dataset::from_rows(&rows, labels).unwrap();
    let reg = FinderRegistry::default();
    let mut opts = DistillOptions::new(2);
    opts.find.eps_reg = 0.1;
    let model = distill(&ds, reg.get("rr").unwrap(), &opts).unwrap();
    assert!(!model.provenance.uncovered.is_empty());
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let pts: Vec<f64> = (0..4000).map(|_| rng.gen_range(-10.0..30.0)).collect();
    for c in model.predict(&pts).unwrap() {
        assert!(!model.provenance.uncovered.contains(&c));
    }
    let mut folded = opts.clone();
    folded.fold_uncovered = true;
    let model = distill(&ds, reg.get("rr").unwrap(), &folded).unwrap();
    assert!(model.provenance.uncovered.is_empty());
}
