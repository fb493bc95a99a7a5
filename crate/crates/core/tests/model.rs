mod common;

use common::*;
use hzreach::model::{load_model, save_model, ClosedLoopRnn, RnnLayer};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn relu(v: DVector<f64>) -> DVector<f64> {
    v.map(|x| x.max(0.0))
}

/// Direct matrix form of one closed-loop step.
fn step_oracle(m: &ClosedLoopRnn, x: &[f64], h: &[DVector<f64>]) -> (DVector<f64>, Vec<DVector<f64>>) {
    let mut below = DVector::from_column_slice(x);
    let mut next = Vec::new();
    for (k, l) in m.layers().iter().enumerate() {
        let hk = relu(&l.wh * &h[k] + &l.wx * &below + &l.vh);
        below = hk.clone();
        next.push(hk);
    }
    (relu(m.wy() * below + m.vy()), next)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn simulate_matches_matrix_oracle(seed in any::<u64>(), steps in 1usize..6) {
        let mut r = rng(seed);
        let m = random_rnn(&mut r, 2, &[3, 4], 1.2);
        let x1 = normal_vector(&mut r, 2, 1.0);
        let tr = m.simulate(x1.as_slice(), steps).unwrap();
        prop_assert_eq!(tr.states.len(), steps);
        let mut h: Vec<DVector<f64>> = m.layers().iter().map(|l| DVector::zeros(l.width())).collect();
        let mut x = x1.clone();
        for t in 1..steps {
            let (nx, nh) = step_oracle(&m, x.as_slice(), &h);
            prop_assert!(max_abs_diff(&tr.states[t], nx.as_slice()) < 1e-12);
            for l in 1..=2 {
                prop_assert!(max_abs_diff(tr.hidden_at(t, l).unwrap(), nh[l - 1].as_slice()) < 1e-12);
            }
            x = nx;
            h = nh;
        }
        prop_assert_eq!(m.state_at(x1.as_slice(), steps).unwrap(), tr.states[steps - 1].clone());
    }
}

#[test]
fn json_round_trip_and_files() {
    let m = random_rnn(&mut rng(9), 3, &[4, 2], 1.0);
    let back = ClosedLoopRnn::from_json(&m.to_json()).unwrap();
    assert_eq!(back, m);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    save_model(&m, &path).unwrap();
    assert_eq!(load_model(&path).unwrap(), m);
    assert!(load_model(&dir.path().join("missing.json")).is_err());
}

#[test]
fn fixtures_load() {
    let toy = load_model(&fixture_path("toy_4_8.json")).unwrap();
    assert_eq!((toy.state_dim(), toy.num_layers(), toy.width(1), toy.width(2)), (2, 2, 4, 8));
    let half = load_model(&fixture_path("half.json")).unwrap();
    assert_eq!(half.state_at(&[0.8], 3).unwrap(), vec![0.2]);
    assert_eq!(half.state_at(&[-0.8], 2).unwrap(), vec![0.0]);
}

#[test]
fn validation_names_the_bad_field() {
    let bad_wx = ClosedLoopRnn::new(
        vec![RnnLayer { wh: DMatrix::zeros(2, 2), wx: DMatrix::zeros(2, 3), vh: DVector::zeros(2) }],
        DMatrix::zeros(1, 2),
        DVector::zeros(1),
    );
    assert!(matches!(bad_wx, Err(hzreach::Error::Model { ref field, .. }) if field == "layers[0].Wx"));
    let bad_wy = ClosedLoopRnn::new(
        vec![RnnLayer { wh: DMatrix::zeros(2, 2), wx: DMatrix::zeros(2, 1), vh: DVector::zeros(2) }],
        DMatrix::zeros(1, 3),
        DVector::zeros(1),
    );
    assert!(matches!(bad_wy, Err(hzreach::Error::Model { ref field, .. }) if field == "Wy"));
    let text = half_system().to_json().replace("\"vy\"", "\"extra\": 1, \"vy\"");
    assert!(ClosedLoopRnn::from_json(&text).is_err());
    assert!(half_system().state_at(&[0.0, 1.0], 2).is_err());
}
