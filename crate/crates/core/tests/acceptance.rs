//! Acceptance suite. Run with `cargo test --test acceptance`; prints one
//! PASS/FAIL line per criterion and exits non-zero if any fails.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod common;

use std::collections::BTreeSet;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use porophys_core::dataio::synth::{generate_synthetic, write_synthetic, SynthSpec};
use porophys_core::dataio::SetupConfig;
use porophys_core::evaluate::{
    cross_validate, kfold_split, run_comparison, AlgorithmLearner, Category, ComparisonConfig, ErrorMetric, Learner,
    Predictor, QualityGate,
};
use porophys_core::features::{aggregate_layers, Aggregator, Effect, ModelKind};
use porophys_core::geometry::{BuildSetup, LayerPoint};
use porophys_core::physics::{
    default_spot_area_mm2, energy_density, photon_budget, projection_area, radiation_pressure, units,
    PhysicalConstants, PointEffects, LIGHT_SPEED_C, PLANCK_H,
};
use porophys_core::pipge::{detect_regions, export_maps, EffectPorosityMap, InfluenceKind, RegionParams};
use porophys_core::regress::gpr::{GprHyper, GprModel, GprSelection};
use porophys_core::regress::kernel::KernelSpec;
use porophys_core::regress::linear::LinearModel;
use porophys_core::regress::svr::{dual_objective, solve_dual, SvrHyper, SvrModel};
use porophys_core::regress::{Algorithm, Hyperparameters, TrainedModel};
use porophys_core::{Dataset, PorosityTarget};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

const FORMULA_REL: f64 = 1e-12;
const IDENTITY_REL: f64 = 1e-9;
const LANDMARK_REL: f64 = 1e-6;
const QP_ORACLE: f64 = 1e-3;
const DUAL_BALANCE: f64 = 1e-12;
const TUBE_SLACK: f64 = 1e-6;
const GPR_INTERP: f64 = 1e-6;
const GPR_CLOSED_FORM: f64 = 1e-12;
const LINEAR_RECOVERY: f64 = 1e-9;
const GATE_DELTA: f64 = 1e-9;
const AGGREGATE_ABS: f64 = 1e-9;
const CLOSURE_EXACT: f64 = 0.01;
const CLOSURE_NOISY: f64 = 0.10;
const ROUND_TRIP_REL: f64 = 1e-12;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn within(limit: Duration, started: Instant) -> Result<(), String> {
    let t = started.elapsed();
    if t > limit {
        return Err(format!("took {:.2?}, limit {:?}", t, limit));
    }
    Ok(())
}

fn ac1_physics_oracles() -> Outcome {
    let started = Instant::now();
    let c = LIGHT_SPEED_C;
    let h = PLANCK_H;
    let k = PhysicalConstants::default();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    let mut worst_identity = 0.0f64;
    for _ in 0..10_000 {
        let w0 = rng.random_range(1.0..2000.0);
        let s0 = 10f64.powf(rng.random_range(-11.0..-6.0));
        let theta: f64 = rng.random_range(0.0..1.55);
        let lambda = 10f64.powf(rng.random_range(-7.0..-4.5));

        let s1 = s0 / theta.cos();
        let e = w0 / s1;
        let photon_e = h * c / lambda;
        let p0 = h / lambda;
        let n = w0 / photon_e;
        let fn_total = n * p0;
        let f = fn_total / s1;
        let (fv, fh) = (f * theta.cos(), f * theta.sin());

        let budget = photon_budget(w0, lambda, &k).unwrap();
        let p = radiation_pressure(w0, s0, theta, &k).unwrap();
        let le = energy_density(w0, s0, theta).unwrap();
        let pairs = [
            (projection_area(s0, theta).unwrap(), s1),
            (le, e),
            (budget.photon_energy_j, photon_e),
            (budget.photon_momentum, p0),
            (budget.photons_per_second, n),
            (budget.total_force_n, fn_total),
            (budget.total_force_n, w0 / c),
            (p.absolute, f),
            (p.vertical, fv),
            (p.horizontal, fh),
        ];
        for (got, want) in pairs {
            worst = worst.max(rel(got, want));
        }
        let other = photon_budget(w0, lambda * rng.random_range(0.1..10.0), &k).unwrap();
        ensure!(other.total_force_n == budget.total_force_n, "total force depends on wavelength");

        let pe = PointEffects::evaluate(w0, units::m2_to_mm2(s0), theta, &k).unwrap();
        worst = worst.max(rel(pe.power_intensity_w_mm2, e * 1e-6));
        worst = worst.max(rel(pe.projection_area_mm2, s1 * 1e6));

        let pyth = rel(p.vertical.powi(2) + p.horizontal.powi(2), p.absolute.powi(2));
        let ratio = rel(le / p.absolute, c);
        worst_identity = worst_identity.max(pyth).max(ratio);
    }
    ensure!(worst <= FORMULA_REL, "worst relative deviation {worst:e}");
    ensure!(worst_identity <= IDENTITY_REL, "identity deviation {worst_identity:e}");

    // incident angle from the plate geometry, against atan(r / (H - h))
    let mut setup = BuildSetup::dual_laser(247.0, 482.6, 450.0, 160.0, default_spot_area_mm2(), 1.07e-6, 40).unwrap();
    setup.set_parts(Vec::new()).unwrap();
    let mut worst_angle = 0.0f64;
    for i in 0..10_000 {
        let laser = &setup.lasers[i % setup.lasers.len()];
        let pt = LayerPoint {
            part_id: String::new(),
            layer_index: 0,
            x: rng.random_range(0.0..247.0),
            y: rng.random_range(0.0..482.6),
            h: rng.random_range(0.0..100.0),
        };
        let r = ((pt.x - laser.projection.x).powi(2) + (pt.y - laser.projection.y).powi(2)).sqrt();
        let want = (r / (450.0 - pt.h)).atan();
        let got = setup.incident_angle(laser, &pt).unwrap();
        worst_angle = worst_angle.max((got - want).abs() / want.abs().max(1e-300));
    }
    ensure!(worst_angle <= FORMULA_REL, "incident angle deviation {worst_angle:e}");
    within(Duration::from_secs(5), started)?;
    Ok(format!("10000 draws, worst rel {worst:.1e}, identities {worst_identity:.1e}"))
}

fn ac2_landmarks() -> Outcome {
    let k = PhysicalConstants::default();
    let s0 = units::mm2_to_m2(default_spot_area_mm2());
    let ratio = energy_density(160.0, s0, FRAC_PI_3).unwrap() / energy_density(160.0, s0, 0.0).unwrap();
    ensure!(rel(ratio, 0.5) <= FORMULA_REL, "60 degree ratio {ratio}");

    let steps = 10_000;
    let (mut best, mut arg) = (f64::NEG_INFINITY, 0.0);
    for i in 0..steps {
        let theta = FRAC_PI_2 * i as f64 / steps as f64;
        let fh = radiation_pressure(160.0, s0, theta, &k).unwrap().horizontal;
        if fh > best {
            best = fh;
            arg = theta;
        }
    }
    let step = FRAC_PI_2 / steps as f64;
    ensure!((arg - FRAC_PI_4).abs() <= step, "fh peaks at {arg}");

    let pe = PointEffects::evaluate(160.0, default_spot_area_mm2(), 0.0, &k).unwrap();
    // 160 / (c pi (25e-6)^2)
    let oracle = 271.812_477_894_458_6;
    ensure!(pe.radiation_pressure_pa == pe.vertical_pressure_pa, "f != fv at normal incidence");
    ensure!(pe.horizontal_pressure_pa == 0.0, "fh != 0 at normal incidence");
    ensure!(rel(pe.radiation_pressure_pa, oracle) <= LANDMARK_REL, "f = {}", pe.radiation_pressure_pa);
    Ok(format!("f(0) = {:.4} Pa, fh peak at {arg:.5} rad", pe.radiation_pressure_pa))
}

fn ac3_svr() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let kernels = [
        (KernelSpec::linear(), common::OracleKernel::Linear),
        (KernelSpec::gaussian(), common::OracleKernel::Gaussian),
        (KernelSpec::rbf(0.7).unwrap(), common::OracleKernel::Rbf(0.7)),
        (KernelSpec::polynomial(2).unwrap(), common::OracleKernel::Poly(2)),
    ];
    let (mut worst_obj, mut worst_pred) = (0.0f64, 0.0f64);
    for i in 0..100 {
        let n = rng.random_range(2..=10);
        let d = rng.random_range(1..=4);
        let x: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random()).collect()).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random()).collect();
        let c = [0.5, 1.0, 10.0][i % 3];
        let eps = rng.random_range(0.01..0.2);
        let (spec, oracle) = kernels[i % kernels.len()];
        let hyper = SvrHyper::new(c, eps, spec).unwrap().with_tolerance(1e-9);
        let sol = solve_dual(&x, &y, &hyper).unwrap();
        let balance: f64 = sol.coefficients().iter().sum();
        ensure!(balance.abs() <= DUAL_BALANCE, "case {i}: sum(alpha - alpha') = {balance:e}");
        ensure!(
            sol.alpha.iter().chain(&sol.alpha_star).all(|a| (0.0..=c).contains(a)),
            "case {i}: box bound violated"
        );
        let reference = common::solve(&x, &y, oracle, c, eps);
        worst_obj = worst_obj.max((dual_objective(&x, &y, &hyper, &sol) - reference.objective).abs());
        let model = SvrModel::fit(&x, &y, hyper).unwrap();
        for q in x.iter().cloned().chain((0..5).map(|_| (0..d).map(|_| rng.random()).collect())) {
            worst_pred = worst_pred.max((model.predict(&q).unwrap() - reference.predict(&q)).abs());
        }
    }
    ensure!(worst_obj <= QP_ORACLE, "objective gap {worst_obj:e}");
    ensure!(worst_pred <= QP_ORACLE, "prediction gap {worst_pred:e}");

    let mut worst_excess = f64::NEG_INFINITY;
    for _ in 0..10 {
        let (a, b) = (rng.random_range(-1.0..1.0), rng.random_range(-0.5..0.5));
        let eps = rng.random_range(0.01..0.2);
        let x: Vec<Vec<f64>> = (0..15).map(|i| vec![i as f64 / 14.0]).collect();
        let y: Vec<f64> = x.iter().map(|r| a * r[0] + b).collect();
        let model = SvrModel::fit(&x, &y, SvrHyper::new(100.0, eps, KernelSpec::linear()).unwrap()).unwrap();
        for (r, t) in x.iter().zip(&y) {
            worst_excess = worst_excess.max((model.predict(r).unwrap() - t).abs() - eps);
        }
    }
    ensure!(worst_excess <= TUBE_SLACK, "line residual exceeds tube by {worst_excess:e}");
    within(Duration::from_secs(30), started)?;
    Ok(format!("100 problems, objective gap {worst_obj:.1e}, prediction gap {worst_pred:.1e}"))
}

fn ac4_gpr() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let x: Vec<Vec<f64>> = (0..8).map(|_| (0..3).map(|_| rng.random()).collect()).collect();
    let y: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
    let m = GprModel::fit(&x, &y, GprHyper::new(1.0, 0.5, 0.0).unwrap()).map_err(|e| e.to_string())?;
    let interp = x.iter().zip(&y).map(|(r, t)| (m.predict_mean(r).unwrap() - t).abs()).fold(0.0, f64::max);
    ensure!(interp <= GPR_INTERP, "interpolation error {interp:e}");

    let one = GprModel::fit(&[vec![0.0]], &[1.0], GprHyper::new(1.0, 1.0, 0.1).unwrap()).unwrap();
    let mean: f64 = one.predict_mean(&[0.0]).unwrap();
    ensure!((mean - 1.0 / 1.1).abs() <= GPR_CLOSED_FORM, "one-point mean {mean}");

    let xs: Vec<Vec<f64>> = (0..30).map(|_| (0..3).map(|_| rng.random()).collect()).collect();
    let ys: Vec<f64> = xs.iter().map(|r| (3.0 * r[0]).sin() + r[1] * r[2]).collect();
    let fit = GprModel::fit_selected(&xs, &ys, &GprSelection::default()).unwrap();
    let sf = fit.hyper.signal_variance;
    for _ in 0..1000 {
        let q: Vec<f64> = (0..3).map(|_| rng.random_range(-0.5..1.5)).collect();
        let (_, var) = fit.predict(&q).unwrap();
        ensure!((0.0..=sf).contains(&var), "posterior variance {var}");
    }
    Ok(format!("interpolation {interp:.1e}, one-point {mean:.12}"))
}

fn ac5_linear() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let d = rng.random_range(1..=8);
        let n = d + 1 + rng.random_range(0..30);
        let w: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
        let b = rng.random_range(-1.0..1.0);
        let x: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random()).collect()).collect();
        let y: Vec<f64> = x.iter().map(|r| b + r.iter().zip(&w).map(|(a, c)| a * c).sum::<f64>()).collect();
        let m = LinearModel::fit(&x, &y).unwrap();
        worst = worst.max((m.intercept - b).abs());
        for (got, want) in m.weights.iter().zip(&w) {
            worst = worst.max((got - want).abs());
        }
        for (r, t) in x.iter().zip(&y) {
            worst = worst.max((m.predict(r).unwrap() - t).abs());
        }
    }
    ensure!(worst <= LINEAR_RECOVERY, "worst recovery error {worst:e}");
    Ok(format!("200 planted fits, worst {worst:.1e}"))
}

struct Lookup(Vec<(Vec<f64>, f64)>);

impl Predictor for Lookup {
    fn predict(&self, x: &[f64]) -> porophys_core::Result<f64> {
        Ok(self.0.iter().find(|(r, _)| r == x).map(|(_, y)| *y).expect("known row"))
    }
}

impl Learner for Lookup {
    fn fit(&self, _x: &[Vec<f64>], _y: &[f64]) -> porophys_core::Result<Box<dyn Predictor>> {
        Ok(Box::new(Lookup(self.0.clone())))
    }
}

fn ac6_cv() -> Outcome {
    let mut checked = 0;
    for n in 1..=50 {
        for k in 1..=10 {
            let folds = kfold_split(n, k, 11);
            if k < 2 || k > n {
                ensure!(folds.is_err(), "n={n} k={k} accepted");
                continue;
            }
            let folds = folds.unwrap();
            ensure!(folds.len() == k, "n={n} k={k}: {} folds", folds.len());
            let mut seen = BTreeSet::new();
            for f in &folds {
                let test: BTreeSet<usize> = f.test.iter().copied().collect();
                let train: BTreeSet<usize> = f.train.iter().copied().collect();
                ensure!(test.len() == f.test.len() && !test.is_empty(), "n={n} k={k}: bad test set");
                ensure!(test.is_disjoint(&train), "n={n} k={k}: leakage");
                ensure!(test.union(&train).copied().eq(0..n), "n={n} k={k}: fold not covering");
                ensure!(seen.is_disjoint(&test), "n={n} k={k}: overlapping test sets");
                seen.extend(test);
            }
            ensure!(seen.into_iter().eq(0..n), "n={n} k={k}: union of test sets");
            ensure!(kfold_split(n, k, 11).unwrap() == folds, "n={n} k={k}: not deterministic");
            checked += 1;
        }
    }
    ensure!(kfold_split(50, 5, 1).unwrap() != kfold_split(50, 5, 2).unwrap(), "seed has no effect");

    let rows: Vec<Vec<f64>> = (0..37).map(|i| vec![i as f64, (i * i) as f64]).collect();
    let y: Vec<f64> = (0..37).map(|i| 20.0 + (i as f64).sin()).collect();
    let oracle = Lookup(rows.iter().cloned().zip(y.iter().copied()).collect());
    for metric in [ErrorMetric::Absolute, ErrorMetric::Standard, ErrorMetric::Percentage] {
        let r = cross_validate(&rows, &y, &oracle, 5, metric, 9).unwrap();
        ensure!(r.mean_error == 0.0, "{} error {}", metric.name(), r.mean_error);
    }
    let learner = AlgorithmLearner { algorithm: Algorithm::SvrRbf, hyper: Hyperparameters::default() };
    let a = cross_validate(&rows, &y, &learner, 4, ErrorMetric::Percentage, 3).unwrap();
    let b = cross_validate(&rows, &y, &learner, 4, ErrorMetric::Percentage, 3).unwrap();
    ensure!(a == b, "same seed gives different reports");
    Ok(format!("{checked} valid (n, k) pairs partitioned"))
}

fn ac7_gate() -> Outcome {
    let g = QualityGate::default();
    let delta = GATE_DELTA;
    let cases = [
        (97.10 - delta, Category::Pass),
        (97.10, Category::Flag),
        (220.40 - delta, Category::Flag),
        (220.40, Category::Fail),
        (0.0, Category::Pass),
        (1e6, Category::Fail),
    ];
    for (d, want) in cases {
        let got = g.classify(d).map_err(|e| e.to_string())?;
        ensure!(got == want, "{d} -> {got}, expected {want}");
    }
    ensure!(g.classify(-delta).is_err() && g.classify(f64::NAN).is_err(), "invalid diameters accepted");
    Ok("pass/flag/flag/fail".into())
}

fn ac8_aggregators() -> Outcome {
    let values: Vec<f64> = (1..=40).map(f64::from).collect();
    let s = aggregate_layers(&values).unwrap();
    let sdev = (1599.0f64 / 12.0).sqrt();
    for (got, want, name) in [(s.ave, 20.5, "AVE"), (s.sdev, sdev, "SDEV"), (s.min10, 2.5, "MIN"), (s.max10, 38.5, "MAX")] {
        ensure!((got - want).abs() <= AGGREGATE_ABS, "{name} = {got}, expected {want}");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut shuffled = values.clone();
    for _ in 0..1000 {
        shuffled.shuffle(&mut rng);
        ensure!(aggregate_layers(&shuffled).unwrap() == s, "summary depends on order");
    }
    Ok(format!("({}, {:.4}, {}, {})", s.ave, s.sdev, s.min10, s.max10))
}

fn closure_errors(noise: f64, algorithm: Algorithm, targets: &[PorosityTarget]) -> Result<Vec<f64>, String> {
    let base = SetupConfig::reference().build(Vec::new()).map_err(|e| e.to_string())?;
    let spec = SynthSpec { noise_sigma: noise, seed: 9, ..SynthSpec::default() };
    let out = generate_synthetic(&spec, &base).map_err(|e| e.to_string())?;
    let ds = Dataset::build(&out.setup, &out.porosity, &PhysicalConstants::default()).map_err(|e| e.to_string())?;
    let rows = ds.rows(ModelKind::Physics);
    let learner = AlgorithmLearner { algorithm, hyper: Hyperparameters::default() };
    targets
        .iter()
        .map(|&t| {
            cross_validate(&rows, &ds.targets(t), &learner, 5, ErrorMetric::Percentage, 0)
                .map(|r| r.mean_error)
                .map_err(|e| e.to_string())
        })
        .collect()
}

fn ac9_closure() -> Outcome {
    let started = Instant::now();
    let exact = closure_errors(0.0, Algorithm::Linear, &PorosityTarget::ALL)?;
    let worst_exact = exact.iter().copied().fold(0.0, f64::max);
    ensure!(worst_exact <= CLOSURE_EXACT, "noise-free physics model error {worst_exact:.4}");
    let noisy = closure_errors(0.05, Algorithm::SvrRbf, &[PorosityTarget::MeanD, PorosityTarget::MedianD])?;
    ensure!(noisy.iter().all(|&e| e <= CLOSURE_NOISY), "svrRBF errors {noisy:?}");
    within(Duration::from_secs(300), started)?;
    Ok(format!(
        "noise 0: max {:.2}%; noise 0.05 svrRBF mean {:.2}%, median {:.2}%",
        100.0 * worst_exact,
        100.0 * noisy[0],
        100.0 * noisy[1]
    ))
}

fn ac10_regions() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let params = RegionParams::default();
    let width = 1.0 / params.bins as f64;
    let targets = [PorosityTarget::MeanD, PorosityTarget::MedianD, PorosityTarget::MedianSpacing];
    let mut worst = 0.0f64;
    for trial in 0..20 {
        // encouraging and suppressing intervals at least 3 bins long, separated
        // by at least 3 neutral bins, in random order
        let cut = |rng: &mut ChaCha8Rng, lo: f64, hi: f64| rng.random_range(lo..hi);
        let a = cut(&mut rng, 0.0, 0.1);
        let b = cut(&mut rng, a + 0.15, a + 0.25);
        let c = cut(&mut rng, b + 0.15, b + 0.25);
        let d = cut(&mut rng, c + 0.15, (c + 0.4).min(1.0));
        let flip = rng.random_bool(0.5);
        let (enc, sup) = if flip { ((c, d), (a, b)) } else { ((a, b), (c, d)) };

        let (scale, shift) = (10f64.powf(rng.random_range(-3.0..6.0)), rng.random_range(-5.0..5.0));
        let mut values = Vec::new();
        for i in 0..4000 {
            let e = if i == 0 { 0.0 } else if i == 1 { 1.0 } else { rng.random::<f64>() };
            let p = if e >= enc.0 && e < enc.1 {
                rng.random_range(0.75..1.0)
            } else if e >= sup.0 && e < sup.1 {
                rng.random_range(0.0..0.2)
            } else if rng.random_bool(0.35) {
                rng.random_range(0.4..0.6)
            } else {
                rng.random_range(0.05..0.25)
            };
            values.push((format!("P{i:04}"), shift + scale * e, 20.0 + 40.0 * p));
        }
        values.push(("lo".into(), shift + scale * 0.5, 20.0));
        values.push(("hi".into(), shift + scale * 0.5, 60.0));
        let target = targets[trial % targets.len()];
        let map = EffectPorosityMap::from_values(Effect::EnergyDensity, Aggregator::Ave, target, &values).unwrap();
        let regions = detect_regions(&map, &params).unwrap();
        let find = |kind: InfluenceKind| regions.iter().filter(|r| r.kind == kind).collect::<Vec<_>>();
        for (kind, (lo, hi)) in [(InfluenceKind::Encouraging, enc), (InfluenceKind::Suppressing, sup)] {
            let found = find(kind);
            ensure!(found.len() == 1, "trial {trial}: {} {kind} regions in {regions:?}", found.len());
            let r = found[0];
            let err = (r.lo - lo).abs().max((r.hi - hi.min(1.0)).abs());
            worst = worst.max(err / width);
            ensure!(err <= width + 1e-12, "trial {trial}: {kind} [{}, {}] vs [{lo}, {hi}]", r.lo, r.hi);
        }
    }
    Ok(format!("20 constructions, worst endpoint error {worst:.2} bin widths"))
}

fn ac11_persistence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let x: Vec<Vec<f64>> = (0..40).map(|_| (0..4).map(|_| rng.random_range(0.0..100.0)).collect()).collect();
    let y: Vec<f64> = x.iter().map(|r| 20.0 + (r[0] / 30.0).sin() * 5.0 + r[1] * 0.1).collect();
    let queries: Vec<Vec<f64>> = (0..50).map(|_| (0..4).map(|_| rng.random_range(0.0..100.0)).collect()).collect();
    let mut worst = 0.0f64;
    for alg in Algorithm::ALL {
        let m = TrainedModel::fit(alg, &Hyperparameters::default(), &x, &y).map_err(|e| e.to_string())?;
        let back = TrainedModel::from_json(&m.to_json().unwrap()).map_err(|e| e.to_string())?;
        for q in &queries {
            worst = worst.max(rel(m.predict(q).unwrap(), back.predict(q).unwrap()));
        }
        ensure!(back.to_json().unwrap() == m.to_json().unwrap(), "{alg}: json not stable");
    }
    ensure!(worst <= ROUND_TRIP_REL, "save/load prediction deviation {worst:e}");

    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let spec = SynthSpec { n_parts: 60, noise_sigma: 0.05, seed: 42, ..SynthSpec::default() };
    let mut digests = Vec::new();
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let dir = tmp.path().join(run);
        let (out, manifest) = write_synthetic(&dir, &spec, &SetupConfig::reference()).map_err(|e| e.to_string())?;
        digests.push(std::fs::read(dir.join("manifest.json")).unwrap());
        ensure!(manifest.files.len() == 3, "manifest lists {} files", manifest.files.len());

        let ds = Dataset::build(&out.setup, &out.porosity, &PhysicalConstants::default()).unwrap();
        let config = ComparisonConfig {
            seed: 5,
            algorithms: vec![Algorithm::Linear, Algorithm::SvrRbf],
            ..ComparisonConfig::default()
        };
        let matrix = run_comparison(&ds, &config).map_err(|e| e.to_string())?;
        let mut csv = Vec::new();
        matrix.write_csv(&mut csv).unwrap();
        let json = serde_json::to_vec(&matrix).unwrap();

        let profiles = ds.profiles();
        let porosity = ds.porosity();
        let map = porophys_core::pipge::build_map(&profiles, &porosity, Effect::AbsPressure, Aggregator::Max, PorosityTarget::MaxD)
            .map_err(|e| e.to_string())?;
        let regions = detect_regions(&map, &RegionParams::default()).unwrap();
        let maps_dir = dir.join("maps");
        export_maps(std::slice::from_ref(&map), &[regions], &RegionParams::default(), &maps_dir).map_err(|e| e.to_string())?;
        let exported = [map.file_name(), "regions.json".to_string()].map(|f| std::fs::read(maps_dir.join(f)).unwrap());
        outputs.push((csv, json, exported));
    }
    ensure!(digests[0] == digests[1], "synthetic manifests differ");
    ensure!(outputs[0] == outputs[1], "comparison or map outputs differ");
    Ok(format!("6 algorithms round-trip, worst {worst:.1e}; outputs byte-identical"))
}

type Criterion = (&'static str, &'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 11] = [
        ("AC1", "physics oracle suite", ac1_physics_oracles),
        ("AC2", "analytic landmarks", ac2_landmarks),
        ("AC3", "SVR correctness", ac3_svr),
        ("AC4", "GPR correctness", ac4_gpr),
        ("AC5", "linear regression", ac5_linear),
        ("AC6", "CV harness", ac6_cv),
        ("AC7", "quality gate", ac7_gate),
        ("AC8", "aggregators", ac8_aggregators),
        ("AC9", "pipeline closure", ac9_closure),
        ("AC10", "PIPGE planted regions", ac10_regions),
        ("AC11", "determinism and persistence", ac11_persistence),
    ];
    let mut failed = 0;
    for (id, name, check) in criteria {
        let started = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = started.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS {id} {name}: {detail} [{secs:.2}s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {id} {name}: {detail} [{secs:.2}s]");
            }
        }
    }
    println!("{} of {} acceptance criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
