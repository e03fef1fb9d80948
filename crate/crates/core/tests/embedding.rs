use approx::assert_relative_eq;
use h2s_core::embedding::{mds_only_embedding, optimize, Embedding, ObjectiveWeights, Termination};
use h2s_core::geometry::euclidean;
use h2s_core::SummaryStats;

fn grid_target() -> SummaryStats {
    // six classes spread over three orthogonal axes
    let centers: Vec<Vec<f64>> = (0..6)
        .map(|k| {
            let mut c = vec![0.0; 3];
            c[k % 3] = if k < 3 { 2.0 } else { -2.0 };
            c
        })
        .collect();
    let d = centers.iter().map(|a| centers.iter().map(|b| euclidean(a, b)).collect()).collect();
    SummaryStats::from_parts(vec![0.5, 0.8, 1.0, 1.2, 0.7, 0.9], d).unwrap()
}

#[test]
fn three_dimensional_embedding_of_a_three_dimensional_layout_is_exact() {
    let target = grid_target();
    let e = optimize(&target, 3, &ObjectiveWeights::default(), 1);
    assert!(e.converged);
    assert!(e.errors.max_relative_error < 1e-5, "{}", e.errors.max_relative_error);
}

#[test]
fn planar_embedding_trades_off_and_reports_errors() {
    let target = grid_target();
    let e = optimize(&target, 2, &ObjectiveWeights::default(), 1);
    let mds = mds_only_embedding(&target, 2);
    assert!(e.objective > 0.0);
    assert!(e.objective <= mds.objective);
    assert_eq!(e.centers.len(), 6);
    assert!(e.centers.iter().all(|c| c.len() == 2));
    assert!(e.radii.iter().all(|&r| r >= 0.0));
}

#[test]
fn embedding_serializes_losslessly() {
    let e = optimize(&grid_target(), 2, &ObjectiveWeights::new(2.0, 0.5).unwrap(), 4)
        .with_labels((0..6).map(|i| format!("c{i}")).collect())
        .unwrap();
    let back: Embedding = serde_json::from_str(&serde_json::to_string(&e).unwrap()).unwrap();
    assert_eq!(e, back);
}

#[test]
fn two_spheres_embed_exactly() {
    let target = SummaryStats::from_parts(vec![1.0, 2.0], vec![vec![0.0, 2.5], vec![2.5, 0.0]]).unwrap();
    let e = optimize(&target, 2, &ObjectiveWeights::default(), 0);
    assert_eq!(e.termination, Termination::Exact);
    assert_relative_eq!(e.achieved.margin(0, 1), -0.5, epsilon = 1e-9);
}

#[test]
fn weights_must_be_nonnegative_and_finite() {
    assert!(ObjectiveWeights::new(0.0, 1.0).is_ok());
    assert!(ObjectiveWeights::new(1.0, -1.0).is_err());
    assert!(ObjectiveWeights::new(f64::INFINITY, 1.0).is_err());
}
