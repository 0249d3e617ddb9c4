//! Worked examples for each public operation, checked against closed forms.

use guidewave::discretize::{laplacian_1d, weighted_norm, Absorption, DampingProfile, Discretization, Grid1D, ModeSlice, NormFlavor, StencilOrder};
use guidewave::evolve::{energy, run, shapes, ModeSystem, RunSpec, Schedule, WaveState};
use guidewave::fit::{fit_exponential, fit_power, predict_exponent, rational, PredictionInput, Theorem};
use guidewave::heat::{heat_apply, heat_weighted_norm, kernel, HeatDerivative, HeatFlavor, HeatNormQuery, HeatSolution, HeatWindow};
use guidewave::transverse::{eigenpair, BoundaryCondition, GuideField, ModeField, TransverseBasis};
use guidewave::{Complex64, Error};
use std::f64::consts::PI;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn line(x: f64, n: usize, a: DampingProfile<f64>, lambdas: Vec<f64>) -> ModeSystem<f64> {
    let disc = Discretization::new(Grid1D::<f64>::new(x, n).unwrap(), StencilOrder::Fourth, &Absorption::Profile(a)).unwrap();
    ModeSystem { disc, lambdas, mass2: 0.0, p0_mode: Some(0) }
}

fn a_one() -> DampingProfile<f64> {
    DampingProfile::Constant { value: 1.0 }
}

// transverse

#[test]
fn neumann_and_dirichlet_eigenpairs_on_pi() {
    let p = eigenpair(BoundaryCondition::Neumann, PI, 0).unwrap();
    assert_eq!(p.lambda, 0.0);
    assert!((p.eval(1.234) - PI.sqrt().recip()).abs() < 1e-15);
    let p = eigenpair(BoundaryCondition::Neumann, PI, 2).unwrap();
    assert!((p.lambda - 4.0).abs() < 1e-12);
    assert!((p.eval(0.7) - (2.0 / PI).sqrt() * (1.4f64).cos()).abs() < 1e-14);
    let p = eigenpair(BoundaryCondition::Dirichlet, PI, 1).unwrap();
    assert!((p.lambda - 1.0).abs() < 1e-12);
    assert!((p.eval(0.7) - (2.0 / PI).sqrt() * (0.7f64).sin()).abs() < 1e-14);
    assert!(matches!(eigenpair(BoundaryCondition::Dirichlet, PI, 0), Err(Error::ModeOutOfRange { .. })));
}

#[test]
fn gram_matrix_is_the_identity_up_to_64_modes() {
    for bc in [BoundaryCondition::Neumann, BoundaryCondition::Dirichlet] {
        for k in [1, 7, 32, 64] {
            let b = TransverseBasis::new(bc, PI, k, 8 * k + 1).unwrap();
            let mut worst = 0.0f64;
            for i in 0..k {
                for j in 0..k {
                    let g: f64 = b.sample(i).iter().zip(b.sample(j)).zip(&b.weights).map(|((a, c), w)| a * c * w).sum();
                    worst = worst.max((g - if i == j { 1.0 } else { 0.0 }).abs());
                }
            }
            assert!(worst <= 1e-10, "{bc:?}, K={k}: Gram deviation {worst:.2e}");
        }
    }
}

#[test]
fn mean_projection_examples() {
    let b = TransverseBasis::new(BoundaryCondition::Neumann, PI, 4, 64).unwrap();
    let xs: Vec<f64> = (0..20).map(|i| -1.0 + 0.1 * i as f64).collect();
    let f = GuideField::from_fn(&xs, &b.ys, |x, _| (x * x).exp());
    let p = b.project_p0(&f).unwrap();
    assert!(p.iter().zip(&xs).all(|(p, x)| rel(*p, (x * x).exp()) < 1e-13));
    let c = GuideField::from_fn(&xs, &b.ys, |_, y| y.cos());
    assert!(b.project_p0(&c).unwrap().iter().all(|v| v.abs() < 1e-13));
    let r = GuideField::from_fn(&xs, &b.ys, |x, y| (3.0 * x + y).sin() + x * y * y);
    let mean = b.project_p0(&r).unwrap();
    let perp = b.project_p0_perp(&r).unwrap();
    let h = 0.1;
    let whole = b.field_norm_sqr(&r, h);
    let split = mean.iter().map(|m| m * m).sum::<f64>() * h * PI + b.field_norm_sqr(&perp, h);
    assert!(rel(split, whole) < 1e-10);
    let d = TransverseBasis::new(BoundaryCondition::Dirichlet, PI, 4, 64).unwrap();
    assert!(matches!(d.project_p0(&GuideField::zeros(20, 64)), Err(Error::ProjectionUndefined)));
}

#[test]
fn mode_coefficients_of_a_basis_vector_and_parseval() {
    let b = TransverseBasis::new(BoundaryCondition::Neumann, PI, 6, 96).unwrap();
    let xs: Vec<f64> = (0..30).map(|i| -3.0 + 0.2 * i as f64).collect();
    let phi3 = eigenpair(BoundaryCondition::Neumann, PI, 3).unwrap();
    let f = GuideField::from_fn(&xs, &b.ys, |x, y| (-x * x).exp() * phi3.eval(y));
    let m = b.to_modes(&f).unwrap();
    for (k, row) in m.rows.iter().enumerate() {
        for (x, c) in xs.iter().zip(row) {
            let want = if k == 3 { (-x * x).exp() } else { 0.0 };
            assert!((c - want).abs() < 1e-13, "k={k}");
        }
    }
    assert!(b.to_modes(&GuideField::zeros(30, 96)).unwrap().rows.iter().flatten().all(|&v| v == 0.0));

    let b = TransverseBasis::new(BoundaryCondition::Neumann, PI, 32, 256).unwrap();
    let r = GuideField::from_fn(&xs, &b.ys, |x, y| (x * y).sin() * (-x * x).exp() + (2.0 * y).cos() / (1.0 + x * x));
    let modes = b.to_modes(&r).unwrap();
    let trunc = b.from_modes(&modes).unwrap();
    let h = 0.2;
    assert!(rel(modes.norm_sqr(h), b.field_norm_sqr(&trunc, h)) < 1e-10);
}

// discretization

#[test]
fn lowest_cap_mode_rayleigh_quotient() {
    for n in [99usize, 199] {
        let g = Grid1D::<f64>::new(5.0, n).unwrap();
        let l = laplacian_1d(&g, StencilOrder::Fourth);
        let u: Vec<f64> = g.xs.iter().map(|x| (PI * (x + 5.0) / 10.0).sin()).collect();
        let lu = l.mul_vec(&u);
        let rq = u.iter().zip(&lu).map(|(a, b)| a * b).sum::<f64>() / u.iter().map(|a| a * a).sum::<f64>();
        let exact = -(PI / 10.0).powi(2);
        assert!((rq - exact).abs() <= g.h * g.h * exact.abs(), "N={n}: {rq} vs {exact}");
    }
}

#[test]
fn constant_vector_is_annihilated_away_from_the_caps() {
    let g = Grid1D::<f64>::new(5.0, 50).unwrap();
    for order in [StencilOrder::Second, StencilOrder::Fourth] {
        let lu = laplacian_1d(&g, order).mul_vec(&vec![1.0; 50]);
        let r = order.reach();
        assert!(lu[r..50 - r].iter().all(|v| v.abs() < 1e-9), "{order:?}");
        assert!(lu[0].abs() > 1.0);
    }
}

#[test]
fn plane_wave_symbol_error_at_h_005() {
    let g = Grid1D::<f64>::new(10.0, 399).unwrap();
    assert!((g.h - 0.05).abs() < 1e-12);
    let l = laplacian_1d(&g, StencilOrder::Fourth);
    let (re, im): (Vec<f64>, Vec<f64>) = g.xs.iter().map(|&x| (x.cos(), x.sin())).unzip();
    let (lr, li) = (l.mul_vec(&re), l.mul_vec(&im));
    for i in 10..389 {
        let sym = Complex64::new(lr[i], li[i]) / Complex64::new(re[i], im[i]);
        assert!((sym + 1.0).norm() <= 1e-4, "node {i}: symbol {sym}");
    }
}

#[test]
fn mode_operator_examples() {
    let sys = line(10.0, 100, a_one(), vec![0.0]);
    let i = Complex64::new(0.0, 1.0);
    let op = sys.disc.mode_operator(0.0, 0.0, i);
    let l = &sys.disc.laplacian;
    for r in 0..100usize {
        for c in r.saturating_sub(2)..(r + 3).min(100) {
            let want = -l.get(r, c) + if r == c { 2.0 } else { 0.0 };
            assert!((op.matrix.get(r, c) - want).norm() < 1e-12);
            assert_eq!(op.matrix.get(r, c), op.matrix.get(c, r));
        }
    }
    let lam3 = eigenpair(BoundaryCondition::Neumann, PI, 3).unwrap().lambda;
    let op = sys.disc.mode_operator(lam3, 0.0, Complex64::new(0.0, 0.0));
    assert!((op.matrix.get(7, 7).re - (-l.get(7, 7) + 9.0)).abs() < 1e-9);
}

#[test]
fn weighted_norm_examples() {
    let g = Grid1D::<f64>::new(20.0, 799).unwrap();
    let n = g.n;
    let ones = vec![1.0; n];
    let m = [ModeSlice { lambda: 0.0, u: &ones, v: None }];
    let v = weighted_norm(&g, StencilOrder::Fourth, 0.0, NormFlavor::L2, &m).unwrap();
    assert!(rel(v, 40f64.sqrt()) < g.h);
    let inv: Vec<f64> = g.xs.iter().map(|x| (1.0 + x * x).sqrt().recip()).collect();
    let m = [ModeSlice { lambda: 0.0, u: &inv, v: None }];
    let v = weighted_norm(&g, StencilOrder::Fourth, 1.0, NormFlavor::L2, &m).unwrap();
    assert!(rel(v, 40f64.sqrt()) < g.h);
    // u = exp(-x^2/2): int (1+x^2)^2 e^{-x^2} = sqrt(pi) (1 + 1 + 3/4)
    let gauss = shapes::gaussian(&g.xs, 0.0, 2f64.sqrt(), 1.0);
    let m = [ModeSlice { lambda: 0.0, u: &gauss, v: None }];
    let v = weighted_norm(&g, StencilOrder::Fourth, 2.0, NormFlavor::L2, &m).unwrap();
    assert!(rel(v * v, PI.sqrt() * 2.75) < 1e-8);
    let zero = vec![0.0; n];
    let m = [ModeSlice { lambda: 0.0, u: &gauss, v: Some(&zero) }];
    let v = weighted_norm(&g, StencilOrder::Fourth, 0.0, NormFlavor::GradL2, &m).unwrap();
    // fourth-order stencil at h = 0.05
    assert!(rel(v * v, PI.sqrt() / 2.0) < 1e-5);
    assert!(weighted_norm(&g, StencilOrder::Fourth, 0.0, NormFlavor::GradL2, &[ModeSlice { lambda: 0.0, u: &gauss, v: None }]).is_err());
    assert!(matches!(
        weighted_norm(&g, StencilOrder::Fourth, 0.0, NormFlavor::L2, &[ModeSlice { lambda: 0.0, u: &gauss[1..], v: None }]),
        Err(Error::DimensionMismatch(_))
    ));
}

// evolution

fn gaussian_state(sys: &ModeSystem<f64>, modes: &[usize]) -> WaveState<f64> {
    let xs = &sys.disc.grid.xs;
    let n = xs.len();
    let mut u = ModeField::zeros(sys.modes(), n);
    let mut v = ModeField::zeros(sys.modes(), n);
    for &m in modes {
        u.rows[m] = shapes::gaussian(xs, 0.3, 1.5, 1.0);
        v.rows[m] = shapes::gaussian(xs, -0.5, 2.0, 0.7);
    }
    WaveState::new(u, v).unwrap()
}

fn spec(dt: f64, t_end: f64, radius: f64) -> RunSpec<f64> {
    RunSpec { dt, t_end, schedule: Schedule { t0: 0.1, ratio: 1.5 }, delta1: 0.6, local_radius: radius, keep_snapshots: false }
}

#[test]
fn energy_of_zero_and_of_a_single_mode() {
    let sys = line(20.0, 1599, a_one(), vec![0.0, 1.0]);
    let zero = WaveState::new(ModeField::zeros(2, 1599), ModeField::zeros(2, 1599)).unwrap();
    let e = energy(&sys, &zero, 0.0, 20.0).unwrap();
    assert!([e.total, e.local, e.weighted, e.grad_w, e.dtu_w, e.p0, e.p0_perp].iter().all(|&v| v == 0.0));

    let w = 2.0;
    let mut u = ModeField::zeros(2, 1599);
    u.rows[1] = shapes::gaussian(&sys.disc.grid.xs, 0.0, w, 1.0);
    let st = WaveState::new(u, ModeField::zeros(2, 1599)).unwrap();
    let e = energy(&sys, &st, 0.0, 20.0).unwrap();
    // g = exp(-x^2/w^2): ||g||^2 = w sqrt(pi/2), ||g'||^2 = sqrt(pi/2) / w
    let exact = (PI / 2.0).sqrt() / w + (PI / 2.0).sqrt() * w;
    assert!(rel(e.total, exact) < 1e-6, "{} vs {exact}", e.total);
    assert_eq!(e.p0, 0.0);
    assert!(rel(e.local, e.total) < 1e-10);
}

#[test]
fn conservative_run_keeps_its_energy() {
    let sys = line(15.0, 299, DampingProfile::Constant { value: 0.0 }, vec![0.0, 1.0, 4.0]);
    let out = run(&sys, &gaussian_state(&sys, &[0, 1, 2]), &spec(0.05, 40.0, 15.0)).unwrap();
    let e0 = out.records[0].total;
    for r in &out.records {
        assert!(rel(r.total, e0) < 1e-10, "t={}: drift {:.2e}", r.t, rel(r.total, e0));
    }
}

#[test]
fn mean_mode_data_has_no_transverse_energy() {
    let sys = line(15.0, 299, a_one(), vec![0.0, 1.0, 4.0]);
    let out = run(&sys, &gaussian_state(&sys, &[0]), &spec(0.05, 30.0, 5.0)).unwrap();
    assert!(out.records.iter().all(|r| r.p0_perp == 0.0));
    assert!(out.records.windows(2).all(|w| w[1].total <= w[0].total * (1.0 + 1e-14)));
}

#[test]
fn modes_do_not_leak() {
    let sys = line(15.0, 299, DampingProfile::Hole { radius: 2.0, width: 1.0, rho: 2.0, floor: 0.5 }, vec![0.0, 1.0, 4.0]);
    let init = gaussian_state(&sys, &[2]);
    let mut s = spec(0.05, 10.0, 5.0);
    s.keep_snapshots = true;
    let out = run(&sys, &init, &s).unwrap();
    let last = out.snapshots.last().unwrap();
    let scale = last.u.rows[2].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for m in [0, 1] {
        let leak = last.u.rows[m].iter().chain(&last.v.rows[m]).fold(0.0f64, |a, v| a.max(v.abs()));
        assert!(leak <= 1e-12 * scale, "mode {m}: leak {leak:.2e}");
    }
}

// heat

#[test]
fn spike_spreads_into_the_kernel() {
    let g = Grid1D::<f64>::new(20.0, 799).unwrap();
    let mut w0 = vec![0.0; 799];
    w0[399] = 1.0 / g.h;
    let v = heat_apply(&g, &w0, 1.0, HeatDerivative::None).unwrap();
    let err = g.xs.iter().zip(&v).map(|(&x, &v)| (v - kernel(1.0, x, HeatDerivative::None)).abs()).fold(0.0, f64::max);
    assert!(err <= 1e-4);
}

#[test]
fn heat_flow_conserves_mass_and_composes() {
    let g = Grid1D::<f64>::new(60.0, 2399).unwrap();
    let w0 = shapes::gaussian(&g.xs, 1.0, 1.3, 2.0);
    let sol = HeatSolution { grid: g.clone(), w0: w0.clone() };
    let one = sol.eval(1.5, HeatDerivative::None).unwrap();
    assert!(rel(one.iter().sum::<f64>() * g.h, sol.mass()) < 1e-8);
    let two = heat_apply(&g, &one, 2.5, HeatDerivative::None).unwrap();
    let direct = sol.eval(4.0, HeatDerivative::None).unwrap();
    let num: f64 = two.iter().zip(&direct).map(|(a, b)| (a - b).powi(2)).sum();
    let den: f64 = direct.iter().map(|b| b * b).sum();
    assert!((num / den).sqrt() < 1e-8);
}

#[test]
fn heat_derivatives_follow_the_closed_form() {
    let g = Grid1D::<f64>::new(60.0, 1199).unwrap();
    let w0: Vec<f64> = g.xs.iter().map(|x| (-x * x / 4.0).exp()).collect();
    let t = 2.0;
    let dx = heat_apply(&g, &w0, t, HeatDerivative::Dx).unwrap();
    for (x, d) in g.xs.iter().zip(&dx) {
        let exact = -x / (2.0 * (1.0 + t)) * (1.0f64 + t).powf(-0.5) * (-x * x / (4.0 * (1.0 + t))).exp();
        assert!((d - exact).abs() < 1e-10);
    }
    // v_t = v_xx
    let eps = 1e-3;
    let lap = heat_apply(&g, &w0, t, HeatDerivative::Laplacian).unwrap();
    let up = heat_apply(&g, &w0, t + eps, HeatDerivative::None).unwrap();
    let down = heat_apply(&g, &w0, t - eps, HeatDerivative::None).unwrap();
    let sup = lap.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for i in 0..g.n {
        assert!(((up[i] - down[i]) / (2.0 * eps) - lap[i]).abs() <= 1e-5 * sup);
    }
    assert!(heat_apply(&g, &w0, 0.0, HeatDerivative::None).is_err());
}

#[test]
fn unweighted_heat_propagator_is_a_contraction_of_norm_one() {
    for t in [1.0, 10.0] {
        let q = HeatNormQuery { t, flavor: HeatFlavor::Derivative { beta: 0, s: 0.0 }, s1: 0.0, s2: 0.0, kappa: 1.2 };
        let win = HeatWindow { factor: 60.0, min_half_width: 0.0, points: 2000 };
        let est = heat_weighted_norm::<f64>(&q, &win).unwrap();
        assert!(est.norm <= 1.0 + 1e-9 && est.norm > 0.998, "t={t}: {}", est.norm);
    }
}

// fitting

#[test]
fn fits_recover_synthetic_series() {
    let ts: Vec<f64> = (0..40).map(|j| 20.0 * 1.1f64.powi(j)).collect();
    let inv: Vec<f64> = ts.iter().map(|t| 1.0 / t).collect();
    let f = fit_power(&ts, &inv, (20.0, 500.0)).unwrap();
    assert!((f.exponent + 1.0).abs() < 1e-12 && f.stderr < 1e-12);
    let half: Vec<f64> = ts.iter().map(|t| 3.0 / t.sqrt()).collect();
    assert!((fit_power(&ts, &half, (20.0, 500.0)).unwrap().exponent + 0.5).abs() < 1e-12);
    let lin: Vec<f64> = (0..60).map(|j| j as f64 * 0.5).collect();
    let ex: Vec<f64> = lin.iter().map(|t| (-t / 4.0).exp()).collect();
    assert!((fit_exponential(&lin, &ex, (1.0, 25.0)).unwrap().exponent + 0.25).abs() < 1e-12);
}

#[test]
fn predictions_for_the_worked_examples() {
    let p = PredictionInput::zero(1);
    assert_eq!(predict_exponent(Theorem::EnergyGrad, &p).unwrap(), rational(-0.5).unwrap());
    let p = PredictionInput { s2: rational(0.5).unwrap(), ..PredictionInput::zero(1) };
    assert_eq!(predict_exponent(Theorem::EnergyDt, &p).unwrap(), rational(-1.25).unwrap());
    let p = PredictionInput { s: rational(1.5).unwrap(), ..PredictionInput::zero(1) };
    match predict_exponent(Theorem::EnergyGrad, &p) {
        Err(Error::Hypothesis(v)) => {
            assert!(v.iter().any(|s| s.contains("s <= 1")), "{v:?}");
            assert!(v.iter().any(|s| s.contains("min(d, rho)")), "{v:?}");
        }
        other => panic!("expected a hypothesis error, got {other:?}"),
    }
    let p = PredictionInput { smoothing: Some(2), ..PredictionInput::zero(1) };
    assert_eq!(predict_exponent(Theorem::DirichletHighFreq, &p).unwrap(), rational(-1.0).unwrap());
}
