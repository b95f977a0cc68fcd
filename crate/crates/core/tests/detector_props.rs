use isacqcd_core::codec::make_composition;
use isacqcd_core::detector::{FirstCrossings, LlrTable, NoResetCusum, ShiryaevRoberts, SubblockCusum};
use isacqcd_core::montecarlo::{estimate_wadd, ExperimentSpec};
use isacqcd_core::presets::{bibo_pair, bibo_sensing};
use proptest::prelude::*;

fn increments() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, 1..200)
}

fn run_cusum(eta: usize, incs: &[f64]) -> Vec<f64> {
    let mut w = SubblockCusum::new(eta);
    incs.iter().map(|&i| w.push(i)).collect()
}

proptest! {
    #[test]
    fn cusum_dominates_no_reset(eta in 0usize..10, incs in increments()) {
        let mut w = SubblockCusum::new(eta);
        let mut w2 = NoResetCusum::new(eta);
        for &i in &incs {
            let a = w.push(i);
            let b = w2.push(i);
            if w2.eligible() {
                prop_assert!(a >= b);
            }
        }
    }

    #[test]
    fn sr_dominates_exp_cusum(eta in 0usize..10, incs in increments()) {
        let mut w = SubblockCusum::new(eta);
        let mut r = ShiryaevRoberts::new(eta);
        for &i in &incs {
            let a = w.push(i);
            let lr = r.push(i);
            prop_assert!(lr >= a - 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn stops_monotone_in_threshold(eta in 0usize..6, incs in increments(), b1 in 0.0f64..20.0, gap in 0.0f64..20.0) {
        let b2 = b1 + gap;
        let mut first = FirstCrossings::new(&[b1, b2]);
        let mut w = SubblockCusum::new(eta);
        for &i in &incs {
            w.push(i);
            if w.crossed(f64::NEG_INFINITY) {
                first.observe(w.subblock(), w.statistic());
            }
        }
        let s = first.stops();
        match (s[0], s[1]) {
            (Some(a), Some(b)) => prop_assert!(a <= b),
            (None, Some(_)) => prop_assert!(false, "higher threshold crossed first"),
            _ => {}
        }
    }

    #[test]
    fn detector_is_a_pure_function_of_its_inputs(eta in 0usize..6, incs in increments()) {
        prop_assert_eq!(run_cusum(eta, &incs), run_cusum(eta, &incs));
    }
}

/// Σ over all echo sequences of p⁰(y|x)·exp(Λ^(s)(y|x)) for one subblock.
fn exp_llr_sum(table: &LlrTable, s: usize, xs: &[usize]) -> f64 {
    let base = bibo_sensing();
    let l = xs.len();
    (0..1usize << l)
        .map(|mask| {
            let ys: Vec<usize> = (0..l).map(|i| (mask >> i) & 1).collect();
            let p: f64 = xs.iter().zip(&ys).map(|(&x, &y)| base.prob(0, x, y)).product();
            p * table.subblock_llr(s, xs, &ys).exp()
        })
        .sum()
}

#[test]
fn subblock_increment_has_unit_exp_mean_before_change() {
    let family = bibo_sensing();
    let table = LlrTable::new(&family).unwrap();
    for p1 in [0.0, 0.25, 0.4356, 0.5, 1.0] {
        let comp = make_composition(&[1.0 - p1, p1], 8).unwrap();
        let xs = comp.multiset();
        for s in family.post_states() {
            assert!((exp_llr_sum(&table, s, &xs) - 1.0).abs() < 1e-12, "p1={p1} s={s}");
        }
    }
}

#[test]
fn worst_delay_not_below_any_point_and_thread_independent() {
    let jccs = isacqcd_core::codec::JccsConfig::from_distributions(8, 60, 3, 0.0, &[vec![0.0, 1.0], vec![1.0, 0.0]], 5).unwrap();
    let det = isacqcd_core::detector::DetectorConfig::with_threshold(4.0, 8, 3).unwrap();
    let mut spec = ExperimentSpec::new(bibo_pair(), jccs, det);
    spec.trials = 200;
    spec.nu_grid = vec![1, 40, 200];
    spec.adversarial_prefix = true;
    spec.threads = Some(1);
    let a = estimate_wadd(&spec, 1).unwrap();
    spec.threads = Some(3);
    let b = estimate_wadd(&spec, 1).unwrap();
    assert_eq!(format!("{a:?}"), format!("{b:?}"));
    let worst = a.points[a.worst].delay.estimate;
    assert!(a.points.iter().all(|p| p.delay.estimate <= worst));
    assert!(a.points.iter().all(|p| p.delay.censored_fraction < 0.01));
}
