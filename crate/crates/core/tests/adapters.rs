mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use relayout::index::{
    build_adapter, static_query, AdapterKind, AdapterOptions, ClusterProbe, FlatScan, IndexAdapter, PhysicalLayout,
    Zonemap,
};
use relayout::model::{AnnsQuery, PbfQuery, Predicate, Query};
use relayout::optimizer::{optimize, OptimizerConfig};
use relayout::query::{brute_force_knn, brute_force_pbf};
use relayout::workload::Workload;

fn random_box(rng: &mut ChaCha8Rng, d: usize) -> PbfQuery {
    let b: Vec<(f64, f64)> = (0..d)
        .map(|_| {
            let c: f64 = rng.random_range(-0.1..1.1);
            let w: f64 = rng.random_range(0.05..0.6);
            (c - w, c + w)
        })
        .collect();
    PbfQuery::from_box(&b).unwrap()
}

#[test]
fn exact_adapters_match_oracles() {
    let d = common::blobs(3000, 4, 6, 0.05, 1);
    let out = optimize(&d, &Workload::new(), &OptimizerConfig {
        partition_size: 50,
        ..Default::default()
    })
    .unwrap();
    let phys = PhysicalLayout::new(&d, &out.layout).unwrap();
    let flat = FlatScan::new(&phys);
    let zone = Zonemap::new(&phys);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..200 {
        let pbf = random_box(&mut rng, 4);
        let want = brute_force_pbf(&d, &pbf).unwrap();
        let zr = zone.query_range(&pbf).unwrap();
        assert_eq!(flat.query_range(&pbf).unwrap().ids(), want);
        assert_eq!(zr.ids(), want);
        let boxes = phys
            .partitions()
            .iter()
            .filter(|p| (0..4).all(|j| {
                let (lo, hi) = pbf.predicates()[j].interval();
                p.mins[j] <= hi && p.maxs[j] >= lo
            }))
            .count();
        assert_eq!(zr.accessed_partitions, boxes);

        let center: Vec<f64> = (0..4).map(|_| rng.random()).collect();
        let k = rng.random_range(1..40);
        let q = AnnsQuery::new(center.clone(), k).unwrap();
        let want = brute_force_knn(&d, &center, k).unwrap();
        let fr = flat.query_knn(&q).unwrap();
        assert_eq!(fr.hits, want.hits);
        assert_eq!(fr.accessed_partitions, phys.partitions().len());
        assert_eq!(zone.query_knn(&q).unwrap().hits, want.hits);
    }
}

#[test]
fn zonemap_extremes() {
    let d = common::uniform(1000, 3, 3);
    let phys = PhysicalLayout::shuffled(&d, 64, 0).unwrap();
    let zone = Zonemap::new(&phys);
    let miss = PbfQuery::from_box(&[(5.0, 6.0), (0.0, 1.0), (0.0, 1.0)]).unwrap();
    let r = zone.query_range(&miss).unwrap();
    assert_eq!(r.accessed_partitions, 0);
    assert!(r.ids().is_empty());
    let all = PbfQuery::new(vec![Predicate::Unconstrained; 3]).unwrap();
    let r = static_query(&zone, &Query::Pbf(all)).unwrap();
    assert_eq!(r.accessed_partitions, phys.partitions().len());
    assert_eq!(r.ids().len(), 1000);
}

#[test]
fn exhaustive_probe_is_exact() {
    let d = common::blobs(2000, 5, 8, 0.05, 4);
    let phys = PhysicalLayout::shuffled(&d, 50, 1).unwrap();
    let mut probe = ClusterProbe::with_kmeans(&phys, 12, 1, 7).unwrap();
    probe.set_n_probe(probe.centroid_count());
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let c: Vec<f64> = (0..5).map(|_| rng.random()).collect();
        let q = AnnsQuery::new(c.clone(), 10).unwrap();
        assert_eq!(probe.query_knn(&q).unwrap().hits, brute_force_knn(&d, &c, 10).unwrap().hits);
    }
    let pbf = PbfQuery::new(vec![Predicate::Unconstrained; 5]).unwrap();
    assert!(probe.query_range(&pbf).is_err());
}

#[test]
fn single_probe_on_separated_blobs() {
    let mut rows = Vec::new();
    for i in 0..200 {
        let base = if i % 2 == 0 { 0.0 } else { 100.0 };
        rows.push(vec![base + (i % 7) as f64 * 0.1, base + (i % 11) as f64 * 0.1]);
    }
    let d = relayout::model::Dataset::from_rows(&rows).unwrap();
    let phys = PhysicalLayout::shuffled(&d, 20, 2).unwrap();
    let assignment: Vec<usize> = (0..200).map(|i| i % 2).collect();
    let probe = ClusterProbe::from_assignment(&phys, &assignment, 1).unwrap();
    let q = AnnsQuery::new(vec![0.3, 0.5], 20).unwrap();
    let got = probe.query_knn(&q).unwrap();
    assert_eq!(got.hits, brute_force_knn(&d, &[0.3, 0.5], 20).unwrap().hits);
    assert_eq!(got.examined_points, 100);
}

#[test]
fn probe_recall_on_gaussian_mixture() {
    let d = common::blobs(10_000, 16, 10, 0.05, 6);
    let phys = PhysicalLayout::shuffled(&d, 100, 3).unwrap();
    let mut probe = ClusterProbe::with_kmeans(&phys, 10, 4, 8).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let queries: Vec<Vec<f64>> = (0..200).map(|_| d.row(rng.random_range(0..d.len())).to_vec()).collect();
    let truth: Vec<Vec<usize>> = queries.iter().map(|q| brute_force_knn(&d, q, 10).unwrap().ids()).collect();
    let mut prev = 0.0;
    for n_probe in [1, 2, 4, 8, 10] {
        probe.set_n_probe(n_probe);
        let mean = queries
            .iter()
            .zip(&truth)
            .map(|(q, t)| common::recall(&probe.query_knn(&AnnsQuery::new(q.clone(), 10).unwrap()).unwrap().ids(), t))
            .sum::<f64>()
            / queries.len() as f64;
        assert!(mean >= prev - 1e-12, "recall fell at n_probe {n_probe}");
        if n_probe == 4 {
            assert!(mean >= 0.9, "recall {mean}");
        }
        prev = mean;
    }
    assert_eq!(prev, 1.0);
}

#[test]
fn factory_builds_each_adapter() {
    let d = common::uniform(500, 2, 7);
    let phys = PhysicalLayout::shuffled(&d, 25, 4).unwrap();
    for kind in [AdapterKind::Flat, AdapterKind::Zonemap, AdapterKind::ClusterProbe] {
        let a = build_adapter(kind, &phys, &AdapterOptions::default()).unwrap();
        assert_eq!(a.name(), kind.as_str());
        assert_eq!(a.partition_count(), 20);
        let r = a.query_knn(&AnnsQuery::new(vec![0.5, 0.5], 5).unwrap()).unwrap();
        assert!(r.is_sorted() && r.ids().len() <= 5);
    }
}
