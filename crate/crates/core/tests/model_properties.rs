use weakcvx::linalg::{dist_sq, norm};
use weakcvx::models::subproblem_value;
use weakcvx::problems::{
    generate_blind_deconvolution, generate_cvar, generate_lad, generate_phase_retrieval, generate_quadratic,
};
use weakcvx::rng::gaussian_vector;
use weakcvx::{model_step, model_value, DenseVector, ModelFamily, ProblemInstance, Regularizer, RngStream};

fn instances(rng: &mut RngStream) -> Vec<ProblemInstance> {
    vec![
        generate_phase_retrieval(rng, 3, 8).unwrap(),
        generate_blind_deconvolution(rng, 2, 3, 8).unwrap(),
        generate_lad(rng, 3, 8, 0.0).unwrap(),
        generate_cvar(rng, 3, 8, 0.3).unwrap(),
        generate_quadratic(rng, 3, 1.5).unwrap(),
    ]
}

fn point_in_ball(rng: &mut RngStream, d: usize, radius: f64) -> DenseVector {
    let g = gaussian_vector(rng, d);
    let scale = radius * rng.uniform() / norm(g.as_slice()).max(1e-12);
    DenseVector::new(g.iter().map(|v| v * scale).collect()).unwrap()
}

#[test]
fn one_sided_accuracy() {
    let mut rng = RngStream::new(11, 0);
    for problem in instances(&mut rng) {
        for family in ModelFamily::ALL {
            let tau = problem.constants(family).tau;
            let mut worst = f64::NEG_INFINITY;
            for _ in 0..1000 {
                let x = point_in_ball(&mut rng, problem.dim(), 3.0);
                let y = point_in_ball(&mut rng, problem.dim(), 3.0);
                let m = problem.num_data();
                let gap: f64 = (0..m)
                    .map(|i| {
                        model_value(family, &problem, &x, i, &y).unwrap() - problem.datum_objective(i, &y).unwrap()
                    })
                    .sum::<f64>()
                    / m as f64;
                let bound = 0.5 * tau * dist_sq(x.as_slice(), y.as_slice());
                worst = worst.max(gap - bound);
            }
            assert!(worst <= 1e-8, "{} {family}: excess {worst}", problem.kind());
        }
    }
}

#[test]
fn model_agrees_with_loss_at_base() {
    let mut rng = RngStream::new(12, 0);
    for problem in instances(&mut rng) {
        let x = point_in_ball(&mut rng, problem.dim(), 2.0);
        for family in ModelFamily::ALL {
            for i in 0..problem.num_data() {
                let model = model_value(family, &problem, &x, i, &x).unwrap();
                assert!((model - problem.datum_objective(i, &x).unwrap()).abs() <= 1e-12);
            }
        }
    }
}

#[test]
fn lipschitz_property() {
    let radius = 2.0;
    let mut rng = RngStream::new(13, 0);
    for problem in instances(&mut rng) {
        for family in ModelFamily::ALL {
            for _ in 0..1000 {
                let x = point_in_ball(&mut rng, problem.dim(), radius);
                let y = point_in_ball(&mut rng, problem.dim(), radius);
                let i = rng.index(problem.num_data());
                let drop = model_value(family, &problem, &x, i, &x).unwrap()
                    - model_value(family, &problem, &x, i, &y).unwrap();
                let bound = problem.lipschitz_on_ball(i, radius) * dist_sq(x.as_slice(), y.as_slice()).sqrt();
                assert!(drop <= bound + 1e-10, "{} {family}: {drop} > {bound}", problem.kind());
            }
        }
    }
}

#[test]
fn steps_beat_perturbed_candidates() {
    let mut rng = RngStream::new(14, 0);
    let regs = [Regularizer::Zero, Regularizer::squared_l2(0.5).unwrap()];
    for problem in instances(&mut rng) {
        for family in ModelFamily::ALL {
            for reg in &regs {
                for _ in 0..20 {
                    let x = point_in_ball(&mut rng, problem.dim(), 2.0);
                    let i = rng.index(problem.num_data());
                    let beta = problem.constants(family).eta + 0.5 + 10.0 * rng.uniform();
                    let y = model_step(family, &problem, reg, &x, i, beta).unwrap();
                    let best = subproblem_value(family, &problem, reg, &x, i, beta, &y).unwrap();
                    for _ in 0..50 {
                        let scale = 10f64.powf(-4.0 * rng.uniform());
                        let e = gaussian_vector(&mut rng, problem.dim());
                        let cand = DenseVector::new(y.iter().zip(e.iter()).map(|(a, b)| a + scale * b).collect())
                            .unwrap();
                        let value = subproblem_value(family, &problem, reg, &x, i, beta, &cand).unwrap();
                        assert!(best <= value + 1e-9, "{} {family}: {best} > {value}", problem.kind());
                    }
                }
            }
        }
    }
}
