use super::*;
use crate::index::{build_index, materialize, BuildParams, KnnMode};
use crate::metrics::MetricKind;
use crate::oracle::compute_ground_truth;
use crate::testutil::gaussian;

#[test]
fn recall_examples() {
    assert!((recall_at_k(&[vec![1u32, 2, 4]], &[vec![1u32, 2, 3]], 3).unwrap() - 2.0 / 3.0).abs() < 1e-12);
    assert_eq!(recall_at_k(&[vec![5u32, 6]], &[vec![5u32, 6]], 2).unwrap(), 1.0);
    assert_eq!(recall_at_k(&[vec![7u32, 8]], &[vec![5u32, 6]], 2).unwrap(), 0.0);
    assert!(recall_at_k(&[vec![1u32]], &[vec![1u32]], 2).is_err());
    let r = recall_at_k(&[vec![1u32, 9], vec![3, 4]], &[vec![1u32, 2, 0], vec![3, 4, 0]], 2).unwrap();
    assert!((r - 0.75).abs() < 1e-12);
}

#[test]
fn csv_layout() {
    let rec = BenchRecord { ls: 100, alpha: 0.5, m: 2, r: 32, recall: 0.9, qps: 1000.0, dist_comps: 1234.5, hops: 50.0 };
    let mut out = Vec::new();
    write_csv(&mut out, &BenchConfig::default(), &[rec]).unwrap();
    let text = String::from_utf8(out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# {"));
    assert_eq!(lines[1], "ls,alpha,m,R,recall,qps,dist_comps,hops");
    assert_eq!(lines[2], "100,0.5,2,32,0.900000,1000.0,1234.50,50.00");
}

fn fixture() -> (crate::Dataset, crate::Dataset, SearchGraph, crate::oracle::GroundTruth) {
    let d = gaussian(2000, 12, 1);
    let q = gaussian(100, 12, 2);
    let p = BuildParams { k: 24, k1: 16, k2: 16, pool_size: 48, seed: 1, knn: KnnMode::Exact };
    let g = materialize(&build_index(&d, &p).unwrap(), 24, 0.5).unwrap();
    let gt = compute_ground_truth(&d, &q, 10, MetricKind::InnerProduct).unwrap();
    (d, q, g, gt)
}

#[test]
fn benchmark_sweep() {
    let (d, q, g, gt) = fixture();
    let cfg = BenchConfig { ls: vec![10, 20, 40, 80], k: 10, m: 1, reps: 3, ..BenchConfig::default() };
    let recs = run_benchmark(&g, &d, &q, &gt, &cfg).unwrap();
    assert_eq!(recs.len(), 4);
    for w in recs.windows(2) {
        assert!(w[1].recall >= w[0].recall - 0.005);
        assert!(w[1].dist_comps >= w[0].dist_comps);
    }
    assert!(recs.iter().all(|r| r.qps > 0.0 && r.r == 24 && r.alpha == 0.5));
    let again = run_benchmark(&g, &d, &q, &gt, &BenchConfig { threads: 1, ..cfg.clone() }).unwrap();
    for (a, b) in recs.iter().zip(&again) {
        assert_eq!((a.recall, a.dist_comps, a.hops), (b.recall, b.dist_comps, b.hops));
    }
    assert!(run_benchmark(&g, &d, &q, &gt, &BenchConfig { k: 20, ..cfg }).is_err());
}

#[test]
fn matched_recall_finds_smallest_pool() {
    let (d, q, g, gt) = fixture();
    let s = Searcher::new(&g, &d).unwrap();
    let base = SearchParams::new(10, 10).with_seed(3);
    let p = matched_recall(&s, &q, gt.rows(), &base, 0.95, 1000).unwrap().unwrap();
    assert!(p.recall >= 0.95);
    if p.ls > 10 {
        let below = run_panel(&s, &q, &SearchParams { pool_size: p.ls - 1, ..base }).unwrap();
        assert!(recall_at_k(&below.ids, gt.rows(), 10).unwrap() < 0.95);
    }
    assert!(matched_recall(&s, &q, gt.rows(), &base, 1.01, 64).unwrap().is_none());
}

#[test]
fn verify_suite_passes_on_gaussian() {
    let d = generate_synthetic(&SyntheticSpec::new(SyntheticKind::GaussianIid, 1000, 8, 5)).unwrap();
    let rep = verify_suite(&d, None, &VerifyConfig::default()).unwrap();
    assert!(rep.passed(), "{}", rep.to_table());
    assert!(rep.items.len() >= 10);
}

#[test]
fn verify_suite_reports_self_loop() {
    let d = gaussian(300, 6, 6);
    let mut idx = build_index(&d, &BuildParams { k: 16, k1: 8, k2: 8, pool_size: 32, seed: 6, knn: KnnMode::Exact }).unwrap();
    idx.euclid[5][0] = 5;
    let rep = verify_suite(&d, Some(&idx), &VerifyConfig { queries: 20, ..VerifyConfig::default() }).unwrap();
    assert!(!rep.passed());
    assert_eq!(rep.item("index invariants").unwrap().status, CheckStatus::Fail);
}

#[test]
fn verify_suite_tolerates_duplicates() {
    let base = gaussian(150, 6, 7).into_vec();
    let d = crate::Dataset::new(6, [base.clone(), base].concat()).unwrap();
    assert!(crate::stats::self_dominator_set(&d).is_empty());
    let rep = verify_suite(&d, None, &VerifyConfig { queries: 20, ..VerifyConfig::default() }).unwrap();
    assert!(rep.passed(), "{}", rep.to_table());
}
