mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use relayout::dynamic::PartialLayout;
use relayout::index::{FlatScan, PhysicalLayout};
use relayout::model::AnnsQuery;
use relayout::query::{brute_force_knn, brute_force_knn_among, online_query, DEFAULT_EXPANSION};

#[test]
fn exact_hit_without_fallback() {
    let d = common::uniform(4000, 2, 1);
    let phys = PhysicalLayout::shuffled(&d, 50, 0).unwrap();
    let flat = FlatScan::new(&phys);
    // Anchor away from the point so neither cursor reaches an end.
    let l = PartialLayout::around(&d, &[0.5, 0.5], 0.5, 50, 0).unwrap();
    let target = (0..d.len())
        .find(|&i| {
            let r = d.row(i);
            let dis = ((r[0] - 0.5).powi(2) + (r[1] - 0.5).powi(2)).sqrt();
            (0.2..0.25).contains(&dis)
        })
        .unwrap();
    let q = AnnsQuery::new(d.row(target).to_vec(), 1).unwrap();
    let r = online_query(&l, &d, &flat, &q, DEFAULT_EXPANSION).unwrap();
    assert!(!r.used_fallback);
    assert_eq!(r.neighbors().unwrap()[0].id, target);
    assert_eq!(r.neighbors().unwrap()[0].distance, 0.0);
}

#[test]
fn boundary_touch_falls_back_exactly() {
    let d = common::uniform(3000, 3, 2);
    let phys = PhysicalLayout::shuffled(&d, 50, 0).unwrap();
    let flat = FlatScan::new(&phys);
    let l = PartialLayout::around(&d, &[0.1, 0.1, 0.1], 0.05, 50, 0).unwrap();
    let q = AnnsQuery::new(vec![0.9, 0.9, 0.9], 10).unwrap();
    let r = online_query(&l, &d, &flat, &q, DEFAULT_EXPANSION).unwrap();
    assert!(r.used_fallback);
    assert_eq!(r.hits, brute_force_knn(&d, q.center(), 10).unwrap().hits);
}

#[test]
fn whole_dataset_layout_is_exact() {
    let d = common::blobs(3000, 4, 5, 0.05, 3);
    let phys = PhysicalLayout::shuffled(&d, 50, 0).unwrap();
    let flat = FlatScan::new(&phys);
    let l = PartialLayout::around(&d, d.row(0), 1.0, 50, 0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..300 {
        let c: Vec<f64> = d.row(rng.random_range(0..d.len())).iter().map(|x| x + rng.random_range(-0.05..0.05)).collect();
        let k = rng.random_range(1..30);
        let q = AnnsQuery::new(c.clone(), k).unwrap();
        let r = online_query(&l, &d, &flat, &q, DEFAULT_EXPANSION).unwrap();
        assert_eq!(r.hits, brute_force_knn(&d, &c, k).unwrap().hits);
    }
}

#[test]
fn non_fallback_results_are_exact_over_members() {
    let d = common::uniform(5000, 2, 5);
    let phys = PhysicalLayout::shuffled(&d, 50, 0).unwrap();
    let flat = FlatScan::new(&phys);
    let l = PartialLayout::around(&d, &[0.5, 0.5], 0.3, 50, 0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut local = 0;
    for _ in 0..500 {
        let c = vec![rng.random_range(0.2..0.8), rng.random_range(0.2..0.8)];
        let k = rng.random_range(1..15);
        let q = AnnsQuery::new(c.clone(), k).unwrap();
        let r = online_query(&l, &d, &flat, &q, DEFAULT_EXPANSION).unwrap();
        assert!(r.ids().len() <= k && r.is_sorted());
        if r.used_fallback {
            assert_eq!(r.hits, brute_force_knn(&d, &c, k).unwrap().hits);
        } else {
            local += 1;
            assert_eq!(r.hits, brute_force_knn_among(&d, l.ids(), &c, k).unwrap().hits);
        }
    }
    assert!(local > 0);
}

#[test]
fn rejects_oversized_k() {
    let d = common::uniform(10, 2, 7);
    let phys = PhysicalLayout::shuffled(&d, 5, 0).unwrap();
    let l = PartialLayout::around(&d, &[0.5, 0.5], 1.0, 5, 0).unwrap();
    let q = AnnsQuery::new(vec![0.5, 0.5], 11).unwrap();
    assert!(online_query(&l, &d, &FlatScan::new(&phys), &q, 2).is_err());
}
