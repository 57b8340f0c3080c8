//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Runs with `cargo test -p weakcvx-harness --test acceptance`.

use std::time::{Duration, Instant};

use weakcvx::linalg::dist_sq;
use weakcvx::problems::{generate_lad, generate_phase_retrieval, generate_quadratic};
use weakcvx::rng::{gaussian_vector, unit_sphere_point};
use weakcvx::stationarity::prox_gradient_norm;
use weakcvx::{
    make_schedule, moreau_envelope, run_model_based, run_psg, AveragingMode, DenseVector, ModelFamily,
    ProblemInstance, Regularizer, RngStream, RunOptions, ScheduleKind,
};
use weakcvx_harness::verify::{
    linear_model_prox_vs_grid, proxlinear_blind_vs_generic, proxlinear_blind_vs_grid, proxlinear_phase_vs_generic,
    proxlinear_phase_vs_grid, proxpoint_blind_vs_grid, proxpoint_phase_vs_grid, verify_all, Fault, VerifyOptions,
};
use weakcvx_harness::{run_sweep, ProblemSpec, SweepConfig, SweepResult};
use weakcvx::oracle::OracleReport;

const HORIZONS: [usize; 3] = [100, 1_000, 10_000];
const SEEDS: u64 = 50;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn reports_outcome(reports: &[OracleReport], elapsed: Duration, limit: Duration) -> Outcome {
    let mut detail = Vec::new();
    for r in reports {
        detail.push(format!(
            "{} n={} err={:.2e}/{:.0e}",
            r.op_name, r.instances_checked, r.max_abs_error, r.tolerance
        ));
    }
    detail.push(format!("{:.1}s", elapsed.as_secs_f64()));
    let passed = reports.iter().all(|r| r.passed) && elapsed < limit;
    outcome(passed, detail.join("; "))
}

fn options(instances: usize) -> VerifyOptions {
    VerifyOptions {
        instances,
        ..VerifyOptions::default()
    }
}

fn full() -> RunOptions {
    RunOptions {
        full_trajectory: true,
        log_objective: false,
        ..RunOptions::default()
    }
}

fn prox_linear_closed_forms() -> Outcome {
    let start = Instant::now();
    let o = options(1000);
    let reports = [
        linear_model_prox_vs_grid(&o),
        proxlinear_phase_vs_grid(&o),
        proxlinear_phase_vs_generic(&o),
        proxlinear_blind_vs_grid(&o),
        proxlinear_blind_vs_generic(&o),
    ];
    reports_outcome(&reports, start.elapsed(), Duration::from_secs(30))
}

fn prox_point_phase() -> Outcome {
    let start = Instant::now();
    let reports = proxpoint_phase_vs_grid(&options(1000));
    reports_outcome(&reports, start.elapsed(), Duration::from_secs(60))
}

fn prox_point_blind() -> Outcome {
    let start = Instant::now();
    let reports = proxpoint_blind_vs_grid(&options(500));
    reports_outcome(&reports, start.elapsed(), Duration::from_secs(300))
}

fn phase_5_15() -> (ProblemInstance, DenseVector) {
    let mut rng = RngStream::new(2024, 0);
    let problem = generate_phase_retrieval(&mut rng, 5, 15).unwrap();
    let x0 = unit_sphere_point(&mut rng, 5).unwrap();
    (problem, x0)
}

/// Subgradients taken by an unregularized subgradient run, recovered from
/// consecutive iterates.
fn step_subgradients(trajectory: &[DenseVector], alpha: f64) -> impl Iterator<Item = f64> + '_ {
    trajectory
        .windows(2)
        .map(move |w| dist_sq(w[0].as_slice(), w[1].as_slice()) / (alpha * alpha))
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn descent_inequality() -> Outcome {
    let start = Instant::now();
    let (problem, x0) = phase_5_15();
    let rho = problem.weak_convexity();
    let rho_bar = 2.0 * rho;
    let lambda = 1.0 / rho_bar;
    let schedule = make_schedule(ScheduleKind::ConstantAlpha { gamma: 0.01 }, 0).unwrap();
    let alpha = schedule.alpha(0);
    let reg = Regularizer::Zero;
    let before = moreau_envelope(&problem, &reg, &x0, lambda, 1e-8).unwrap();
    let mut after = Vec::new();
    let mut second_moment = 0.0;
    for k in 0..500 {
        let record = run_psg(&problem, &reg, &schedule, &x0, &mut RngStream::new(7, k), &full()).unwrap();
        let trajectory = record.trajectory.unwrap();
        second_moment += step_subgradients(&trajectory, alpha).sum::<f64>();
        after.push(moreau_envelope(&problem, &reg, &trajectory[1], lambda, 1e-8).unwrap().envelope_value);
    }
    let l2 = second_moment / 500.0;
    let (mean, se) = mean_and_se(&after);
    let bound = before.envelope_value - alpha * (rho_bar - rho) / rho_bar * before.grad_norm.powi(2)
        + alpha * alpha * rho_bar * l2 / 2.0
        + 3.0 * se;
    let elapsed = start.elapsed();
    outcome(
        mean <= bound && elapsed < Duration::from_secs(120),
        format!(
            "mean {mean:.6e} <= bound {bound:.6e} (start {:.6e}, se {se:.1e}); {:.1}s",
            before.envelope_value,
            elapsed.as_secs_f64()
        ),
    )
}

fn rate_bound() -> Outcome {
    let start = Instant::now();
    let (problem, x0) = phase_5_15();
    let rho = problem.weak_convexity();
    let lambda = 0.5 / rho;
    let gamma = 0.1;
    let reg = Regularizer::Zero;
    let start_value = moreau_envelope(&problem, &reg, &x0, lambda, 1e-8).unwrap().envelope_value;
    let mut passed = true;
    let mut detail = Vec::new();
    for t in HORIZONS {
        let schedule = make_schedule(ScheduleKind::ConstantAlpha { gamma }, t).unwrap();
        let alpha = schedule.alpha(0);
        let (mut grad_sq, mut second_moment, mut steps) = (0.0, 0.0, 0usize);
        for seed in 0..SEEDS {
            let record = run_psg(&problem, &reg, &schedule, &x0, &mut RngStream::new(seed, 1), &full()).unwrap();
            let trajectory = record.trajectory.as_ref().unwrap();
            second_moment += step_subgradients(trajectory, alpha).sum::<f64>();
            steps += trajectory.len() - 1;
            grad_sq += moreau_envelope(&problem, &reg, &record.x_star, lambda, 1e-8).unwrap().grad_norm.powi(2);
        }
        let mean = grad_sq / SEEDS as f64;
        let l2 = second_moment / steps as f64;
        let bound = 2.0 * (start_value + rho * l2 * gamma * gamma) / (gamma * ((t + 1) as f64).sqrt());
        passed &= mean <= bound;
        detail.push(format!("T={t}: {mean:.3e} <= {bound:.3e}"));
    }
    let elapsed = start.elapsed();
    detail.push(format!("{:.1}s", elapsed.as_secs_f64()));
    outcome(passed && elapsed < Duration::from_secs(600), detail.join("; "))
}

fn lad_5_20(mu: f64) -> (ProblemInstance, DenseVector) {
    let mut rng = RngStream::new(2025, 0);
    let problem = generate_lad(&mut rng, 5, 20, mu).unwrap();
    let x0 = unit_sphere_point(&mut rng, 5).unwrap();
    (problem, x0)
}

/// Mean of the squared per-datum Lipschitz constants of the model slopes.
fn model_lipschitz_sq(problem: &ProblemInstance) -> f64 {
    let m = problem.num_data();
    (0..m).map(|i| problem.lipschitz_on_ball(i, 1.0).powi(2)).sum::<f64>() / m as f64
}

fn composite(problem: &ProblemInstance, reg: &Regularizer, x: &DenseVector) -> f64 {
    problem.objective(x).unwrap() + reg.value(x).unwrap()
}

fn averaged_gap(
    problem: &ProblemInstance,
    reg: &Regularizer,
    family: ModelFamily,
    kind: ScheduleKind,
    horizon: usize,
    averaging: AveragingMode,
    x0: &DenseVector,
    optimum: f64,
) -> f64 {
    let schedule = make_schedule(kind, horizon).unwrap();
    let options = RunOptions {
        averaging: Some(averaging),
        log_objective: false,
        ..RunOptions::default()
    };
    let total: f64 = (0..SEEDS)
        .map(|seed| {
            let record = run_model_based(problem, reg, family, &schedule, x0, &mut RngStream::new(seed, 1), &options)
                .unwrap();
            composite(problem, reg, &record.averaged_iterate.unwrap()) - optimum
        })
        .sum();
    total / SEEDS as f64
}

fn convex_rate() -> Outcome {
    let start = Instant::now();
    let (problem, x0) = lad_5_20(0.0);
    let truth = problem.ground_truth().unwrap().clone();
    let reg = Regularizer::Zero;
    let optimum = composite(&problem, &reg, &truth);
    let gamma = 0.5;
    let l2 = model_lipschitz_sq(&problem);
    let mut passed = true;
    let mut detail = Vec::new();
    for family in [ModelFamily::ProxPoint, ModelFamily::ProxLinear] {
        for t in HORIZONS {
            let gap = averaged_gap(
                &problem,
                &reg,
                family,
                ScheduleKind::ConstantAlpha { gamma },
                t,
                AveragingMode::Uniform,
                &x0,
                optimum,
            );
            let bound = (0.5 * dist_sq(x0.as_slice(), truth.as_slice()) + l2 * gamma * gamma)
                / (gamma * ((t + 1) as f64).sqrt());
            passed &= gap <= bound;
            detail.push(format!("{family} T={t}: {gap:.3e} <= {bound:.3e}"));
        }
    }
    let elapsed = start.elapsed();
    detail.push(format!("{:.1}s", elapsed.as_secs_f64()));
    outcome(passed && elapsed < Duration::from_secs(600), detail.join("; "))
}

/// Minimizer of `f + r` by repeated exact proximal steps on the whole
/// objective; `f + r` is strongly convex, so the iteration contracts.
fn strongly_convex_minimizer(problem: &ProblemInstance, reg: &Regularizer, x0: &DenseVector) -> DenseVector {
    let mut x = x0.clone();
    for _ in 0..200 {
        let next = moreau_envelope(problem, reg, &x, 10.0, 1e-14).unwrap().prox_point;
        let moved = dist_sq(next.as_slice(), x.as_slice()).sqrt();
        x = next;
        if moved <= 1e-12 {
            break;
        }
    }
    x
}

fn strongly_convex_rate() -> Outcome {
    let start = Instant::now();
    let mu = 1.0;
    let (problem, x0) = lad_5_20(mu);
    let reg = Regularizer::squared_l2(mu).unwrap();
    let x_star = strongly_convex_minimizer(&problem, &reg, &x0);
    let optimum = composite(&problem, &reg, &x_star);
    let l2 = model_lipschitz_sq(&problem);
    let mut passed = true;
    let mut detail = vec![format!("phi* {optimum:.6e}")];
    for family in [ModelFamily::ProxPoint, ModelFamily::ProxLinear] {
        for t in HORIZONS {
            let gap = averaged_gap(
                &problem,
                &reg,
                family,
                ScheduleKind::StronglyConvex { mu },
                t,
                AveragingMode::StronglyConvex,
                &x0,
                optimum,
            );
            let t2 = (t + 2) as f64;
            let bound = mu * dist_sq(x0.as_slice(), x_star.as_slice()) / (t2 * t2) + 8.0 * l2 / (mu * t2);
            passed &= gap <= bound;
            detail.push(format!("{family} T={t}: {gap:.3e} <= {bound:.3e}"));
        }
    }
    let elapsed = start.elapsed();
    detail.push(format!("{:.1}s", elapsed.as_secs_f64()));
    outcome(passed && elapsed < Duration::from_secs(600), detail.join("; "))
}

fn sweep_counts(result: &SweepResult, target: f64) -> [usize; 3] {
    ModelFamily::ALL.map(|m| result.reach_count(m, target))
}

fn csv_bytes(result: &SweepResult) -> Vec<u8> {
    let mut out = Vec::new();
    result.write_csv(&mut out).unwrap();
    out
}

fn qualitative_sweeps(phase_csv: &mut Vec<u8>) -> Outcome {
    let start = Instant::now();
    let phase = SweepConfig::default();
    let blind = SweepConfig {
        problem: ProblemSpec::blind(10, 10, 30),
        rounds: 10,
        ..SweepConfig::default()
    };
    let mut passed = true;
    let mut detail = Vec::new();
    for config in [&phase, &blind] {
        let result = run_sweep(config).unwrap();
        if config == &phase {
            *phase_csv = csv_bytes(&result);
        }
        let [sgd, linear, point] = sweep_counts(&result, config.target);
        passed &= linear >= sgd && point >= sgd;
        detail.push(format!("{}: sgd {sgd}, prox-linear {linear}, prox-point {point}", config.problem));
    }
    let elapsed = start.elapsed();
    detail.push(format!("{:.1}s", elapsed.as_secs_f64()));
    outcome(passed && elapsed < Duration::from_secs(1800), detail.join("; "))
}

fn proportionality() -> Outcome {
    let start = Instant::now();
    let mut rng = RngStream::new(2026, 0);
    let rho = 2.0;
    let problem = generate_quadratic(&mut rng, 5, rho).unwrap();
    let reg = Regularizer::indicator_ball(1.0).unwrap();
    let upper = 1.5 * (1.0 + 1.0 / 2f64.sqrt());
    let (mut low, mut high) = (f64::INFINITY, 0.0f64);
    let mut passed = true;
    for _ in 0..100 {
        let g = gaussian_vector(&mut rng, 5);
        let x = DenseVector::new(g.iter().map(|v| 1.5 * v).collect()).unwrap();
        let envelope = moreau_envelope(&problem, &reg, &x, 0.5 / rho, 1e-12).unwrap().grad_norm;
        let mapping = prox_gradient_norm(&problem, &reg, &x, 1.0 / rho).unwrap();
        passed &= 0.25 * envelope <= mapping + 1e-4 && mapping <= upper * envelope + 1e-4;
        if envelope > 0.0 {
            low = low.min(mapping / envelope);
            high = high.max(mapping / envelope);
        }
    }
    let elapsed = start.elapsed();
    outcome(
        passed && elapsed < Duration::from_secs(60),
        format!(
            "ratio range [{low:.3}, {high:.3}] within [0.25, {upper:.3}]; {:.1}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn determinism(first: &[u8]) -> Outcome {
    let second = csv_bytes(&run_sweep(&SweepConfig::default()).unwrap());
    outcome(
        !first.is_empty() && first == second.as_slice(),
        format!("{} bytes, identical: {}", second.len(), first == second.as_slice()),
    )
}

fn fault_injection() -> Outcome {
    let pristine = verify_all(&VerifyOptions::default());
    let mut passed = pristine.iter().all(|r| r.passed);
    let mut detail = vec![format!("pristine {}/{} passed", pristine.iter().filter(|r| r.passed).count(), pristine.len())];
    for fault in Fault::ALL {
        let reports = verify_all(&VerifyOptions {
            instances: 50,
            fault: Some(fault),
            ..VerifyOptions::default()
        });
        let caught = reports.iter().any(|r| !r.passed);
        passed &= caught;
        if !caught {
            detail.push(format!("{fault} not detected"));
        }
    }
    if passed {
        detail.push(format!("all {} faults detected", Fault::ALL.len()));
    }
    outcome(passed, detail.join("; "))
}

fn main() {
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let mut phase_csv = Vec::new();
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    let mut run = |n: usize, name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let o = f();
        println!("{} criterion {n:>2} {name}: {}", if o.passed { "PASS" } else { "FAIL" }, o.detail);
        results.push((n, name, o));
    };
    run(1, "prox-linear closed forms", &mut prox_linear_closed_forms);
    run(2, "prox-point phase candidates", &mut prox_point_phase);
    run(3, "prox-point blind candidates", &mut prox_point_blind);
    run(4, "descent inequality", &mut descent_inequality);
    run(5, "nonconvex rate bound", &mut rate_bound);
    run(6, "convex rate", &mut convex_rate);
    run(7, "strongly convex rate", &mut strongly_convex_rate);
    run(8, "qualitative sweep ordering", &mut || qualitative_sweeps(&mut phase_csv));
    run(9, "stationarity proportionality", &mut proportionality);
    run(10, "sweep determinism", &mut || determinism(&phase_csv));
    run(11, "verify with fault injection", &mut fault_injection);
    let failed = results.iter().filter(|(_, _, o)| !o.passed).count();
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
