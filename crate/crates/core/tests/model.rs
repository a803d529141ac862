use mippdpg::model::{build_block_model, validate_positivity, BlockModelSpec, LatentModel, Trajectory};
use ndarray::array;

#[test]
fn intensity_is_the_dot_product_of_positions() {
    let model = build_block_model(&BlockModelSpec::smooth_default(), 10, 3).unwrap();
    for &(i, j, l, t) in &[(0, 9, 2, 0.1), (4, 4, 0, 0.5), (7, 2, 1, 1.0)] {
        let x = model.position(i, t);
        let y = model.layer_position(l, j);
        let want: f64 = x.iter().zip(y.iter()).map(|(a, b)| a * b).sum();
        assert!((model.intensity_at(i, j, l, t).unwrap() - want).abs() < 1e-12);
    }
}

#[test]
fn intensity_is_linear_in_each_argument() {
    let traj = |v: Vec<f64>| Trajectory::Constant(v);
    let ys = array![[1.0, 2.0], [0.5, 0.5], [3.0, 1.0]];
    let a = LatentModel::new(vec![traj(vec![1.0, 1.0]), traj(vec![2.0, 0.0]), traj(vec![3.0, 1.0])], 1, ys.clone())
        .unwrap();
    // node 2 is the sum of nodes 0 and 1
    for j in 0..3 {
        let sum = a.intensity_at(0, j, 0, 0.3).unwrap() + a.intensity_at(1, j, 0, 0.3).unwrap();
        assert!((a.intensity_at(2, j, 0, 0.3).unwrap() - sum).abs() < 1e-14);
    }
    let doubled = LatentModel::new(
        vec![traj(vec![1.0, 1.0]), traj(vec![2.0, 0.0]), traj(vec![3.0, 1.0])],
        1,
        &ys * 2.0,
    )
    .unwrap();
    for i in 0..3 {
        assert!((doubled.intensity_at(i, 1, 0, 0.7).unwrap() - 2.0 * a.intensity_at(i, 1, 0, 0.7).unwrap()).abs() < 1e-14);
    }
}

#[test]
fn smooth_paths_close_up_over_the_window() {
    let model = build_block_model(&BlockModelSpec::smooth_default(), 10, 2).unwrap();
    for i in 0..10 {
        let (a, b) = (model.position(i, 1e-12), model.position(i, 1.0));
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-9);
        }
    }
}

#[test]
fn default_models_are_valid_and_negative_ones_are_not() {
    for spec in [BlockModelSpec::smooth_default(), BlockModelSpec::discontinuous_default()] {
        let model = build_block_model(&spec, 12, 3).unwrap();
        assert!(validate_positivity(&model, 200).unwrap().is_valid());
    }
    let bad = LatentModel::new(vec![Trajectory::Constant(vec![1.0, -2.0])], 1, array![[1.0, 1.0]]).unwrap();
    let rep = validate_positivity(&bad, 50).unwrap();
    assert!(!rep.is_valid());
    assert!(rep.first_violation.is_some());
}

#[test]
fn spec_round_trips_through_toml() {
    for spec in [BlockModelSpec::smooth_default(), BlockModelSpec::discontinuous_default(), BlockModelSpec::standin(4)] {
        let text = spec.to_toml().unwrap();
        assert_eq!(BlockModelSpec::from_toml(&text).unwrap(), spec);
    }
}
