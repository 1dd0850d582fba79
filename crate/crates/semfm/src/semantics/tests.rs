use nalgebra::{DMatrix, Point3};

use super::*;
use crate::mesh::primitives;

#[test]
fn aggregate_constant_embedding_everywhere() {
    let mesh = primitives::icosphere(1, 1.0);
    let positions: Vec<Point3<f64>> = mesh.vertices().to_vec();
    let embeddings = vec![vec![0.3, -0.7, 2.0]; positions.len()];
    let samples = LiftedSampleSet::new(positions, embeddings).unwrap();
    let pc = aggregate_samples(&mesh, &samples, 30, 0.5, 1).unwrap();
    for e in pc.embeddings() {
        for (a, b) in e.iter().zip(&[0.3, -0.7, 2.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn aggregate_keeps_separated_groups_pure() {
    // Two clusters of samples far apart; epsilon smaller than the gap.
    let mesh = {
        // Long strip along x: left half near x=0, right half near x=10.
        primitives::strip(10, 1.0, 0.5)
    };
    let mut positions = Vec::new();
    let mut embeddings = Vec::new();
    for v in mesh.vertices() {
        positions.push(*v);
        if v.x < 5.0 {
            embeddings.push(vec![1.0, 0.0]);
        } else {
            embeddings.push(vec![0.0, 1.0]);
        }
    }
    let samples = LiftedSampleSet::new(positions, embeddings).unwrap();
    let pc = aggregate_samples(&mesh, &samples, 40, 0.8, 7).unwrap();
    for (p, e) in pc.points().iter().zip(pc.embeddings()) {
        let expected = if p.x < 4.2 {
            Some(vec![1.0, 0.0])
        } else if p.x > 5.8 {
            Some(vec![0.0, 1.0])
        } else {
            None // mixing zone, either is fine
        };
        if let Some(expected) = expected {
            assert_eq!(e, &expected, "point at x = {}", p.x);
        }
    }
}

#[test]
fn aggregate_matches_brute_force_oracle() {
    let mesh = primitives::icosphere(2, 1.0); // 162 vertices
    let mut rng = crate::rng::Rng::new(77);
    let positions: Vec<Point3<f64>> = mesh
        .sample_surface(300, &mut rng)
        .iter()
        .map(|s| s.position)
        .collect();
    let embeddings: Vec<Vec<f64>> = (0..300)
        .map(|_| (0..5).map(|_| rng.normal()).collect())
        .collect();
    let samples = LiftedSampleSet::new(positions, embeddings).unwrap();
    let epsilon = 0.35;
    let pc = aggregate_samples(&mesh, &samples, 50, epsilon, 3).unwrap();

    // Exhaustive O(M * |samples|) radius scan.
    for (p, e) in pc.points().iter().zip(pc.embeddings()) {
        let mut acc = vec![0.0; 5];
        let mut count = 0usize;
        for (q, se) in samples.positions().iter().zip(samples.embeddings()) {
            if (p - q).norm() <= epsilon {
                for (a, b) in acc.iter_mut().zip(se) {
                    *a += b;
                }
                count += 1;
            }
        }
        assert!(count > 0, "oracle found an empty neighborhood");
        for a in &mut acc {
            *a /= count as f64;
        }
        for (x, y) in e.iter().zip(&acc) {
            assert!((x - y).abs() < 1e-10);
        }
    }
}

#[test]
fn aggregate_empty_neighborhood_takes_nearest_sample() {
    let mesh = primitives::icosphere(1, 1.0);
    // One sample only, tiny epsilon: everything inherits it.
    let samples = LiftedSampleSet::new(
        vec![Point3::new(0.0, 0.0, 1.0)],
        vec![vec![4.0, 5.0]],
    )
    .unwrap();
    let pc = aggregate_samples(&mesh, &samples, 10, 1e-6, 2).unwrap();
    for e in pc.embeddings() {
        assert_eq!(e, &vec![4.0, 5.0]);
    }
}

#[test]
fn aggregate_is_sample_order_invariant() {
    let mesh = primitives::icosphere(1, 1.0);
    let mut rng = crate::rng::Rng::new(5);
    let positions: Vec<Point3<f64>> = mesh
        .sample_surface(100, &mut rng)
        .iter()
        .map(|s| s.position)
        .collect();
    let embeddings: Vec<Vec<f64>> = (0..100)
        .map(|_| (0..3).map(|_| rng.normal()).collect())
        .collect();

    let forward = LiftedSampleSet::new(positions.clone(), embeddings.clone()).unwrap();
    let mut rev_pos = positions.clone();
    let mut rev_emb = embeddings.clone();
    rev_pos.reverse();
    rev_emb.reverse();
    let reversed = LiftedSampleSet::new(rev_pos, rev_emb).unwrap();

    let a = aggregate_samples(&mesh, &forward, 25, 0.4, 9).unwrap();
    let b = aggregate_samples(&mesh, &reversed, 25, 0.4, 9).unwrap();
    assert_eq!(a.points(), b.points());
    for (x, y) in a.embeddings().iter().zip(b.embeddings()) {
        for (p, q) in x.iter().zip(y) {
            assert!((p - q).abs() < 1e-12);
        }
    }
}

#[test]
fn aggregate_rejects_bad_input() {
    let mesh = primitives::tetrahedron(1.0);
    let samples = LiftedSampleSet::new(vec![Point3::origin()], vec![vec![1.0]]).unwrap();
    assert!(aggregate_samples(&mesh, &samples, 4, 0.0, 0).is_err());
    assert!(aggregate_samples(&mesh, &samples, 0, 0.5, 0).is_err());
    assert!(LiftedSampleSet::new(vec![], vec![]).is_err());
}

fn grid_cloud(side: usize, dim: usize, embed: impl Fn(usize) -> Vec<f64>) -> SemanticPointCloud {
    let mut points = Vec::new();
    let mut embeddings = Vec::new();
    for i in 0..side {
        for j in 0..side {
            points.push(Point3::new(i as f64, j as f64, 0.0));
            embeddings.push(embed(points.len() - 1));
        }
    }
    let _ = dim;
    SemanticPointCloud::new(points, embeddings).unwrap()
}

#[test]
fn graph_identical_embeddings_give_unit_weights() {
    let pc = grid_cloud(4, 2, |_| vec![0.5, 0.5]);
    let graph = build_semantic_graph(&pc, 3, SigmaMode::Median).unwrap();
    for (_, _, w) in graph.edges() {
        assert_eq!(w, 1.0);
    }
}

#[test]
fn graph_weight_formula_at_sigma_distance() {
    // Two points with embedding distance exactly sigma: weight e^-1.
    let pc = SemanticPointCloud::new(
        vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
        ],
        vec![vec![0.0, 0.0], vec![2.0, 0.0]],
    )
    .unwrap();
    let graph = build_semantic_graph(&pc, 1, SigmaMode::Explicit(2.0)).unwrap();
    let edges = graph.edges();
    assert_eq!(edges.len(), 1);
    assert!((edges[0].2 - (-1.0f64).exp()).abs() < 1e-12);
}

#[test]
fn graph_matches_dense_oracle() {
    let mut rng = crate::rng::Rng::new(13);
    let points: Vec<Point3<f64>> = (0..50)
        .map(|_| Point3::new(rng.normal(), rng.normal(), rng.normal()))
        .collect();
    let embeddings: Vec<Vec<f64>> = (0..50)
        .map(|_| (0..4).map(|_| rng.normal()).collect())
        .collect();
    let pc = SemanticPointCloud::new(points.clone(), embeddings.clone()).unwrap();
    let k_nn = 6;
    let sigma = 1.7;
    let graph = build_semantic_graph(&pc, k_nn, SigmaMode::Explicit(sigma)).unwrap();

    // Dense oracle: full pairwise distances, per-node top-k, union.
    let mut expected: std::collections::BTreeSet<(usize, usize)> = Default::default();
    for j in 0..50 {
        let mut others: Vec<usize> = (0..50).filter(|&l| l != j).collect();
        others.sort_by(|&a, &b| {
            (points[a] - points[j])
                .norm()
                .partial_cmp(&(points[b] - points[j]).norm())
                .unwrap()
                .then(a.cmp(&b))
        });
        for &l in others.iter().take(k_nn) {
            expected.insert((j.min(l), j.max(l)));
        }
    }
    let got: std::collections::BTreeSet<(usize, usize)> =
        graph.edges().iter().map(|&(a, b, _)| (a, b)).collect();
    assert_eq!(got, expected);

    for (a, b, w) in graph.edges() {
        let d2: f64 = embeddings[a]
            .iter()
            .zip(&embeddings[b])
            .map(|(x, y)| (x - y) * (x - y))
            .sum();
        assert!((w - (-d2 / (sigma * sigma)).exp()).abs() < 1e-14);
    }
}

#[test]
fn graph_weights_invariant_under_rigid_and_orthogonal_transforms() {
    let mut rng = crate::rng::Rng::new(21);
    let points: Vec<Point3<f64>> = (0..30)
        .map(|_| Point3::new(rng.normal(), rng.normal(), rng.normal()))
        .collect();
    let embeddings: Vec<Vec<f64>> = (0..30)
        .map(|_| (0..2).map(|_| rng.normal()).collect())
        .collect();

    // Rotate positions about z and reflect embeddings (orthogonal in 2D).
    let angle = 0.83f64;
    let rotated: Vec<Point3<f64>> = points
        .iter()
        .map(|p| {
            Point3::new(
                p.x * angle.cos() - p.y * angle.sin() + 5.0,
                p.x * angle.sin() + p.y * angle.cos() - 2.0,
                p.z,
            )
        })
        .collect();
    let reflected: Vec<Vec<f64>> = embeddings.iter().map(|e| vec![e[1], e[0]]).collect();

    let a = build_semantic_graph(
        &SemanticPointCloud::new(points, embeddings).unwrap(),
        4,
        SigmaMode::Median,
    )
    .unwrap();
    let b = build_semantic_graph(
        &SemanticPointCloud::new(rotated, reflected).unwrap(),
        4,
        SigmaMode::Median,
    )
    .unwrap();

    let ea = a.edges();
    let eb = b.edges();
    assert_eq!(ea.len(), eb.len());
    for ((i1, j1, w1), (i2, j2, w2)) in ea.iter().zip(&eb) {
        assert_eq!((i1, j1), (i2, j2));
        assert!((w1 - w2).abs() < 1e-9);
    }
}

#[test]
fn graph_rejects_large_k_nn() {
    let pc = grid_cloud(2, 2, |_| vec![0.0, 0.0]);
    assert!(build_semantic_graph(&pc, 4, SigmaMode::Median).is_err());
    assert!(build_semantic_graph(&pc, 3, SigmaMode::Median).is_ok());
}

#[test]
fn cluster_two_separated_groups_exactly() {
    // Embedding groups with inter-group weight below 1e-6.
    let mut points = Vec::new();
    let mut embeddings = Vec::new();
    for i in 0..12 {
        points.push(Point3::new(i as f64, 0.0, 0.0));
        if i < 6 {
            embeddings.push(vec![10.0, 0.0]);
        } else {
            embeddings.push(vec![0.0, 10.0]);
        }
    }
    let pc = SemanticPointCloud::new(points, embeddings).unwrap();
    // sigma small enough that cross-group weights vanish.
    let graph = build_semantic_graph(&pc, 3, SigmaMode::Explicit(2.0)).unwrap();
    let clusters = spectral_cluster(&pc, &graph, 2, 0).unwrap();
    // Relabeling pins the first point's cluster to 0.
    assert_eq!(&clusters.labels()[..6], &[0; 6]);
    assert_eq!(&clusters.labels()[6..], &[1; 6]);
}

#[test]
fn cluster_k_equals_m_gives_singletons() {
    let mut rng = crate::rng::Rng::new(2);
    let points: Vec<Point3<f64>> = (0..6)
        .map(|i| Point3::new(i as f64, 0.0, 0.0))
        .collect();
    let embeddings: Vec<Vec<f64>> = (0..6)
        .map(|_| (0..3).map(|_| rng.normal()).collect())
        .collect();
    let pc = SemanticPointCloud::new(points, embeddings).unwrap();
    let graph = build_semantic_graph(&pc, 2, SigmaMode::Median).unwrap();
    let clusters = spectral_cluster(&pc, &graph, 6, 11).unwrap();
    let labels = clusters.labels();
    assert_eq!(labels, &[0, 1, 2, 3, 4, 5]);
    assert!(clusters.sizes().iter().all(|&s| s == 1));
}

#[test]
fn cluster_is_deterministic_and_means_are_member_averages() {
    let mut rng = crate::rng::Rng::new(31);
    let points: Vec<Point3<f64>> = (0..40)
        .map(|_| Point3::new(rng.normal(), rng.normal(), rng.normal()))
        .collect();
    let embeddings: Vec<Vec<f64>> = (0..40)
        .map(|_| (0..4).map(|_| rng.normal()).collect())
        .collect();
    let pc = SemanticPointCloud::new(points, embeddings.clone()).unwrap();
    let graph = build_semantic_graph(&pc, 5, SigmaMode::Median).unwrap();
    let a = spectral_cluster(&pc, &graph, 4, 123).unwrap();
    let b = spectral_cluster(&pc, &graph, 4, 123).unwrap();
    assert_eq!(a, b);

    for c in 0..a.k() {
        let members: Vec<&Vec<f64>> = a
            .labels()
            .iter()
            .zip(&embeddings)
            .filter(|(&l, _)| l == c)
            .map(|(_, e)| e)
            .collect();
        assert_eq!(members.len(), a.sizes()[c]);
        for d in 0..4 {
            let mean: f64 = members.iter().map(|e| e[d]).sum::<f64>() / members.len() as f64;
            assert!((mean - a.means()[c][d]).abs() < 1e-8);
        }
    }
}

#[test]
fn cluster_rejects_bad_k() {
    let pc = grid_cloud(2, 2, |i| vec![i as f64, 0.0]);
    let graph = build_semantic_graph(&pc, 2, SigmaMode::Median).unwrap();
    assert!(spectral_cluster(&pc, &graph, 1, 0).is_err());
    assert!(spectral_cluster(&pc, &graph, 5, 0).is_err());
}

fn cluster_set_with_means(means: Vec<Vec<f64>>) -> ClusterSet {
    // One point per cluster makes the means exactly those embeddings.
    let k = means.len();
    ClusterSet::from_labels((0..k).collect(), k, &means).unwrap()
}

#[test]
fn similarity_identical_means_is_one() {
    let a = cluster_set_with_means(vec![vec![0.6, 0.8]]);
    let b = cluster_set_with_means(vec![vec![0.6, 0.8]]);
    let s = cluster_similarity(&a, &b).unwrap();
    assert!((s[(0, 0)] - 1.0).abs() < 1e-12);
}

#[test]
fn similarity_orthogonal_means_is_zero() {
    let a = cluster_set_with_means(vec![vec![1.0, 0.0]]);
    let b = cluster_set_with_means(vec![vec![0.0, 3.0]]);
    let s = cluster_similarity(&a, &b).unwrap();
    assert!(s[(0, 0)].abs() < 1e-12);
}

#[test]
fn similarity_self_diagonal_is_one() {
    let cs = cluster_set_with_means(vec![
        vec![1.0, 2.0, 3.0],
        vec![-1.0, 0.5, 0.0],
        vec![0.2, 0.2, 0.2],
    ]);
    let s = cluster_similarity(&cs, &cs).unwrap();
    for i in 0..3 {
        assert!((s[(i, i)] - 1.0).abs() < 1e-12);
    }
}

#[test]
fn similarity_zero_norm_mean_is_zero_with_warning() {
    let a = cluster_set_with_means(vec![vec![0.0, 0.0], vec![1.0, 0.0]]);
    let b = cluster_set_with_means(vec![vec![0.0, 1.0]]);
    let (s, warnings) = cluster_similarity_with_stats(&a, &b).unwrap();
    assert_eq!(warnings, 1);
    assert_eq!(s[(0, 0)], 0.0);
}

#[test]
fn anchors_reproduce_reference_scenario() {
    // 5x5 similarity whose two best mutually exclusive pairs are
    // (2 -> 1) at 0.89 and (3 -> 4) at 0.85.
    let mut s = DMatrix::from_element(5, 5, 0.1);
    s[(2, 1)] = 0.89;
    s[(3, 4)] = 0.85;
    s[(2, 4)] = 0.60; // competing pair that exclusivity must reject
    s[(3, 1)] = 0.55;
    let anchors = select_anchors(&s, 2).unwrap();
    let pairs = anchors.pairs();
    assert_eq!(pairs.len(), 2);
    assert_eq!((pairs[0].source_cluster, pairs[0].target_cluster), (2, 1));
    assert!((pairs[0].similarity - 0.89).abs() < 1e-12);
    assert_eq!((pairs[1].source_cluster, pairs[1].target_cluster), (3, 4));
    assert!((pairs[1].similarity - 0.85).abs() < 1e-12);
}

#[test]
fn anchors_single_entry() {
    let s = DMatrix::from_element(1, 1, 0.42);
    let anchors = select_anchors(&s, 1).unwrap();
    assert_eq!(anchors.len(), 1);
    assert_eq!(anchors.pairs()[0].source_cluster, 0);
    assert_eq!(anchors.pairs()[0].target_cluster, 0);
}

/// Independent oracle: recursively enumerate every injective alpha-assignment.
fn oracle_best_total(s: &DMatrix<f64>, alpha: usize) -> f64 {
    fn recurse(
        s: &DMatrix<f64>,
        alpha: usize,
        next_row: usize,
        used: &mut Vec<bool>,
        chosen: usize,
        total: f64,
        best: &mut f64,
    ) {
        if chosen == alpha {
            if total > *best {
                *best = total;
            }
            return;
        }
        if next_row >= s.nrows() {
            return;
        }
        // Skip this row.
        recurse(s, alpha, next_row + 1, used, chosen, total, best);
        // Or pair it with any free column.
        for c in 0..s.ncols() {
            if !used[c] {
                used[c] = true;
                recurse(
                    s,
                    alpha,
                    next_row + 1,
                    used,
                    chosen + 1,
                    total + s[(next_row, c)],
                    best,
                );
                used[c] = false;
            }
        }
    }
    let mut best = f64::NEG_INFINITY;
    let mut used = vec![false; s.ncols()];
    recurse(s, alpha, 0, &mut used, 0, 0.0, &mut best);
    best
}

#[test]
fn anchors_match_exhaustive_oracle_on_random_matrices() {
    let mut rng = crate::rng::Rng::new(404);
    for _ in 0..100 {
        let s = DMatrix::from_fn(5, 5, |_, _| rng.range(-1.0, 1.0));
        for alpha in 1..=3 {
            let got = select_anchors(&s, alpha).unwrap();
            assert!(got.is_one_to_one());
            assert_eq!(got.len(), alpha);
            let oracle = oracle_best_total(&s, alpha);
            assert!(
                (got.total_similarity() - oracle).abs() < 1e-12,
                "alpha {alpha}: {} vs oracle {oracle}",
                got.total_similarity()
            );
        }
    }
}

#[test]
fn anchors_total_similarity_monotone_in_alpha() {
    let mut rng = crate::rng::Rng::new(55);
    for _ in 0..20 {
        // Nonnegative entries: adding a pair can only help.
        let s = DMatrix::from_fn(6, 4, |_, _| rng.uniform());
        let mut prev = f64::NEG_INFINITY;
        for alpha in 1..=4 {
            let total = select_anchors(&s, alpha).unwrap().total_similarity();
            assert!(total >= prev - 1e-12);
            prev = total;
        }
    }
}

#[test]
fn anchors_sorted_by_descending_similarity() {
    let mut rng = crate::rng::Rng::new(66);
    let s = DMatrix::from_fn(5, 5, |_, _| rng.uniform());
    let anchors = select_anchors(&s, 3).unwrap();
    for w in anchors.pairs().windows(2) {
        assert!(w[0].similarity >= w[1].similarity);
    }
}

#[test]
fn anchors_reject_bad_sizes() {
    let s = DMatrix::from_element(5, 3, 0.5);
    assert!(select_anchors(&s, 4).is_err());
    assert!(select_anchors(&s, 0).is_err());
    let big = DMatrix::from_element(11, 11, 0.5);
    assert!(matches!(
        select_anchors(&big, 2),
        Err(crate::Error::UnsupportedSize(_))
    ));
}

#[test]
fn sample_set_json_round_trip() {
    let samples = LiftedSampleSet::new(
        vec![Point3::new(0.5, -1.0, 2.0), Point3::new(0.0, 0.0, 0.0)],
        vec![vec![1.0, 2.0, 3.0], vec![-0.5, 0.0, 0.25]],
    )
    .unwrap();
    let text = io::to_json(&samples);
    let parsed = io::from_json(&text).unwrap();
    assert_eq!(parsed.dim(), 3);
    assert_eq!(parsed.positions(), samples.positions());
    assert_eq!(parsed.embeddings(), samples.embeddings());
}

#[test]
fn sample_set_binary_round_trip() {
    let samples = LiftedSampleSet::new(
        vec![Point3::new(1.0, 2.0, 3.0), Point3::new(-1.0, 0.5, 0.0)],
        vec![vec![0.1, 0.2], vec![0.3, 0.4]],
    )
    .unwrap();
    let mut buf = Vec::new();
    io::write_binary(&samples, &mut buf).unwrap();
    let parsed = io::read_binary(buf.as_slice()).unwrap();
    assert_eq!(parsed.positions(), samples.positions());
    assert_eq!(parsed.embeddings(), samples.embeddings());
}

#[test]
fn sample_set_json_dimension_mismatch_rejected() {
    let text = r#"{"d": 4, "samples": [{"p": [0,0,0], "e": [1,2]}]}"#;
    assert!(io::from_json(text).is_err());
}
