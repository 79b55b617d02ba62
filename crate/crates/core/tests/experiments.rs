use csl_core::experiments::{phase_transition_grid, Decoder, ModelFamily, TrialSpec};

// 50-trial cells pooled over several master seeds; the margin stays 2/50
#[test]
fn saturation_makes_cosampl_recovery_easier() {
    let trials = 50;
    let masters = [77, 78, 79, 80];
    let m_grid = [50, 60, 70, 80];
    let probability = |a: f64| {
        let spec = TrialSpec::new(Decoder::Cosampl, ModelFamily::Saturated { fraction: a });
        let mut successes = vec![0usize; m_grid.len()];
        for &master in &masters {
            let r = phase_transition_grid(&spec, &[32], &m_grid, trials, master).unwrap();
            for (acc, c) in successes.iter_mut().zip(&r.cells) {
                *acc += c.successes();
            }
        }
        let total = (trials * masters.len()) as f64;
        successes.iter().map(|&k| k as f64 / total).collect::<Vec<_>>()
    };
    let curves: Vec<Vec<f64>> = [0.25, 0.5, 0.75].iter().map(|&a| probability(a)).collect();
    let slack = 2.0 / trials as f64;
    for (i, m) in m_grid.iter().enumerate() {
        for w in curves.windows(2) {
            assert!(w[0][i] <= w[1][i] + slack, "m = {m}: {curves:?}");
        }
    }
}

#[test]
fn cosampl_dominates_cosamp_on_unbalanced_levels() {
    let family = ModelFamily::Fractions {
        levels: csl_core::LevelStructure::new(vec![64, 128]).unwrap(),
        fractions: vec![1.0, 0.0],
    };
    let grid = |d| {
        let spec = TrialSpec::new(d, family.clone());
        phase_transition_grid(&spec, &[16, 32], &[40, 60, 80], 20, 5).unwrap()
    };
    let (plain, structured) = (grid(Decoder::Cosamp), grid(Decoder::Cosampl));
    for (p, s) in plain.cells.iter().zip(&structured.cells) {
        assert_eq!((p.s, p.m), (s.s, s.m));
        assert!(s.successes() + 2 >= p.successes(), "s = {}, m = {}", p.s, p.m);
    }
}
