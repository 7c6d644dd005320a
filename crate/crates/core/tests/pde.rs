use ilw_core::ensemble::ensemble_field;
use ilw_core::pde::*;
use ilw_core::{build_profile, BurgersState, ProfileSpec, ScatteringData};

fn shock_window(profile: &ilw_core::AdmissibleProfile, t: f64) -> (f64, f64) {
    let (a, b) = fold_interval(profile, t).expect("past the catastrophe");
    let w = 0.5 * (b - a);
    (a - w, b + w)
}

fn maxima(field: &Field, a: f64, b: f64) -> Vec<f64> {
    (1..field.n_x - 1)
        .filter(|&j| {
            let x = field.x(j);
            let v = &field.values;
            x >= a && x <= b && v[j] > v[j - 1] && v[j] > v[j + 1]
        })
        .map(|j| field.x(j))
        .collect()
}

#[test]
fn reference_run_conserves_tracks_burgers_and_breaks() {
    let cfg = SimulationConfig::default();
    let profile = build_profile(&cfg.profile).unwrap();
    let traj = simulate(&cfg).unwrap();
    assert_eq!(traj.snapshots.len(), 4);

    let (mass, l2) = traj.drift();
    assert!(mass <= 1e-8, "mass drift {mass:e}");
    assert!(l2 <= 1e-6, "L2 drift {l2:e}");

    let snap = traj.snapshot(0.3).unwrap();
    let burgers = BurgersState::new(&profile, 0.3).unwrap();
    let ub: Vec<f64> = snap.grid().iter().map(|&x| burgers.eval(x).unwrap()).collect();
    let d = l2_distance(snap, &ub);
    assert!(d <= 0.1, "|u - u^B| = {d}");

    let (a, b) = shock_window(&profile, 1.5);
    let n = count_extrema(&traj.final_field, a, b);
    assert!(n >= 5, "{n} extrema in [{a}, {b}]");
}

#[test]
fn strang_splitting_is_second_order() {
    let run = |dt: f64| {
        let cfg = SimulationConfig {
            dt,
            t_end: 0.5,
            snapshots: vec![],
            ..Default::default()
        };
        simulate(&cfg).unwrap().final_field
    };
    let f: Vec<Field> = [4e-4, 2e-4, 1e-4].iter().map(|&dt| run(dt)).collect();
    let ratio = l2_distance(&f[0], &f[1].values) / l2_distance(&f[1], &f[2].values);
    assert!((ratio - 4.0).abs() <= 0.5, "ratio {ratio}");
}

#[test]
fn one_soliton_from_the_ensemble_translates() {
    let (eps, delta) = (0.1, 0.5);
    let data = ScatteringData::from_parts(eps, delta, &[0.8], &[0.0]).unwrap();
    let (l, n) = (30.0, 1024);
    let grid: Vec<f64> = (0..n).map(|j| -l / 2.0 + l * j as f64 / n as f64).collect();
    let u0 = ensemble_field(&data, &grid, 0.0, 128).unwrap();

    // run long enough for the hump to move by its full width at half maximum
    let peak = |u: &[f64]| {
        let j = (0..n).max_by(|&a, &b| u[a].total_cmp(&u[b])).unwrap();
        (grid[j], u[j])
    };
    let (x0, top) = peak(&u0);
    let above: Vec<f64> = (0..n).filter(|&j| u0[j] >= 0.5 * top).map(|j| grid[j]).collect();
    let fwhm = above.last().unwrap() - above[0];
    let t_end = 3.0;
    let u1 = ensemble_field(&data, &grid, t_end, 128).unwrap();
    let (x1, top1) = peak(&u1);
    assert!(x1 - x0 >= fwhm, "moved {} < width {fwhm}", x1 - x0);
    assert!((top1 - top).abs() < 1e-2 * top);

    let cfg = SimulationConfig {
        eps,
        delta,
        l,
        n_x: n,
        dt: 5e-4,
        t_end,
        snapshots: vec![],
        log_every: 1000,
        ..Default::default()
    };
    let field = Field::new(l, u0, 0.0, eps, delta).unwrap();
    let traj = simulate_from(&cfg, field).unwrap();
    let norm = (u1.iter().map(|v| v * v).sum::<f64>() * l / n as f64).sqrt();
    let err = l2_distance(&traj.final_field, &u1) / norm;
    assert!(err <= 1e-3, "shape error {err:e}");
}

#[test]
fn smaller_eps_shortens_the_oscillations() {
    let spacing = |eps: f64| {
        let cfg = SimulationConfig {
            eps,
            snapshots: vec![],
            ..Default::default()
        };
        let profile = build_profile(&cfg.profile).unwrap();
        let f = simulate(&cfg).unwrap().final_field;
        let (a, b) = shock_window(&profile, 1.5);
        let m = maxima(&f, a, b);
        assert!(m.len() >= 2, "eps {eps}: {m:?}");
        (m[m.len() - 1] - m[0]) / (m.len() - 1) as f64
    };
    let ratio = spacing(0.10) / spacing(0.05);
    assert!((1.5..=2.7).contains(&ratio), "wavelength ratio {ratio}");
}

#[test]
fn conserved_quantities_of_sech2() {
    let profile = build_profile(&ProfileSpec::sech2()).unwrap();
    let f = Field::from_profile(&profile, 12.0, 2000, 0.05, 1.0).unwrap();
    let (mass, l2) = conserved(&f);
    assert!((mass - 2.0 * 6f64.tanh()).abs() < 1e-8);
    // ∫_{-6}^{6} sech⁴ = 2(tanh 6 - tanh³6 / 3)
    let t6 = 6f64.tanh();
    assert!((l2 * l2 - 2.0 * (t6 - t6.powi(3) / 3.0)).abs() < 1e-8);
    let zero = Field::new(12.0, vec![0.0; 64], 0.0, 0.05, 1.0).unwrap();
    assert_eq!(conserved(&zero), (0.0, 0.0));
}
