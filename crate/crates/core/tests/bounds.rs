mod common;

use common::*;
use hzreach::bounds::{count_unstable, propagate_intervals, LayerRef};
use hzreach::interval::IntervalVector;
use nalgebra::DVector;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Every simulated pre-activation lies in its table interval.
    #[test]
    fn table_encloses_simulation(seed in any::<u64>()) {
        let mut r = rng(seed);
        let m = random_rnn(&mut r, 2, &[3, 3], 1.0);
        let horizon = 4;
        let x = IntervalVector::new(vec![-1.0, -0.5], vec![0.5, 1.0]).unwrap();
        let tbl = propagate_intervals(&m, &x, horizon).unwrap();
        for p in grid(&x.lower, &x.upper, 5) {
            let tr = m.simulate(&p, horizon).unwrap();
            for t in 1..horizon {
                let mut below = DVector::from_vec(tr.states[t - 1].clone());
                for l in 1..=2 {
                    let layer = m.layer(l);
                    let prev = if t == 1 { DVector::zeros(layer.width()) } else { DVector::from_row_slice(tr.hidden_at(t - 1, l).unwrap()) };
                    let pre = &layer.wh * prev + &layer.wx * &below + &layer.vh;
                    prop_assert!(tbl.get(t, LayerRef::Hidden(l)).unwrap().contains(pre.as_slice(), 1e-9));
                    below = DVector::from_row_slice(tr.hidden_at(t, l).unwrap());
                }
                let pre = m.wy() * below + m.vy();
                prop_assert!(tbl.get(t, LayerRef::Output).unwrap().contains(pre.as_slice(), 1e-9));
            }
        }
    }
}

#[test]
fn unstable_counts_are_cumulative() {
    let m = random_rnn(&mut rng(5), 2, &[4], 1.0);
    let x = IntervalVector::new(vec![-1.0; 2], vec![1.0; 2]).unwrap();
    let tbl = propagate_intervals(&m, &x, 5).unwrap();
    let all = tbl.unstable();
    let mut prev = 0;
    for t in 1..=5 {
        let n = count_unstable(&tbl, t).unwrap();
        assert_eq!(n, all.iter().filter(|(id, _)| id.t < t).count());
        assert!(n >= prev);
        prev = n;
    }
    assert_eq!(count_unstable(&tbl, 1).unwrap(), 0);
    assert!(all.windows(2).all(|w| w[0].0 < w[1].0));
    assert!(all.iter().all(|(_, iv)| iv.is_unstable()));
}

#[test]
fn invalid_inputs_are_rejected() {
    let m = half_system();
    let x = IntervalVector::new(vec![0.0], vec![1.0]).unwrap();
    assert!(propagate_intervals(&m, &x, 1).is_err());
    let wrong = IntervalVector::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
    assert!(propagate_intervals(&m, &wrong, 3).is_err());
    assert!(IntervalVector::new(vec![1.0], vec![0.0]).is_err());
}
