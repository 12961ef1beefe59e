use cbjump::simulate::{ensemble, sample_path, stream, Sampler, SimConfig};
use cbjump::validate::{law_check, sim_defaults, Law};
use cbjump::{Levy, Mechanism};

fn atoms() -> Mechanism {
    Mechanism::new(0.0, 1.0, Levy::atoms(vec![(1.0, 1.0)]).unwrap()).unwrap()
}

fn config(mech: &Mechanism, dt: f64, n: usize, seed: u64) -> SimConfig {
    let mut c = sim_defaults(mech, 1.0, dt);
    c.n = n;
    c.seed = seed;
    c
}

#[test]
fn local_max_jump_at_two_step_sizes() {
    let m = atoms();
    for (dt, seed) in [(1e-2, 3), (1e-3, 4)] {
        let c = law_check(Law::LocalMaxJump { t: 1.0, r: 0.5 }, &m, 1.0, &config(&m, dt, 20_000, seed)).unwrap();
        assert!(c.law.pass, "dt {dt}: {:?}", c.law);
        assert!(c.size_bias.pass, "dt {dt}: {:?}", c.size_bias);
    }
}

#[test]
fn total_mass_under_step_halving() {
    let feller = Mechanism::new(0.0, 1.0, Levy::zero()).unwrap();
    let mut est = Vec::new();
    for (dt, seed) in [(1e-2, 5), (5e-3, 6)] {
        let c = law_check(Law::TotalMassLaplace { lambda: 1.0 }, &feller, 1.0, &config(&feller, dt, 20_000, seed)).unwrap();
        assert!(c.law.pass, "dt {dt}: {:?}", c.law);
        est.push(c.law.estimate);
    }
    let exact = (-1.0f64).exp();
    assert!((est[1] - exact).abs() < (est[0] - exact).abs() + 0.01);
}

#[test]
fn ensemble_does_not_depend_on_thread_count() {
    let m = Mechanism::stable(1.5, 1.0).unwrap();
    let mut c = config(&m, 1e-2, 200, 9);
    c.record_times = vec![0.5, 1.0];
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| ensemble(Sampler::Path, &m, 1.0, &c).unwrap())
    };
    assert_eq!(run(1), run(3));
    let single = sample_path(&m, 1.0, &c, &mut stream(c.seed, 17)).unwrap();
    assert_eq!(single.stats, run(2)[17]);
}

#[test]
fn subcritical_mean_with_coarse_steps() {
    let se = Mechanism::new(1.0, 0.0, Levy::exp_density(1.0, 1.0).unwrap()).unwrap();
    let c = law_check(Law::Mean { t: 1.0 }, &se, 1.0, &config(&se, 5e-2, 50_000, 7)).unwrap();
    let r = &c.law;
    assert!((r.estimate - (-1.0f64).exp()).abs() < 3.0 * r.std_error, "{r:?}");
}
