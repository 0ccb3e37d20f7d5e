// Build the transform bundle from an optimal dual and verify the copula
// optimality conditions.

use mmot::cost::CostSpec;
use mmot::measures::{discretize_density, DensitySpec};
use mmot::mmot::{gauge_normalize, recover_dual, solve_primal, MmotProblem};
use mmot::transforms::{lower_convex_envelope_1d, verify_copula_optimality, TransformBundle};

pub fn run_example() -> mmot::Result<()> {
    let env = lower_convex_envelope_1d(&[-1.0, 0.0, 1.0], &[1.0, 2.0, 1.0], 0.0)?;
    println!("envelope of a tent at 0: {env}");

    let mu = discretize_density(&DensitySpec::uniform(-0.5, 0.5), 3)?;
    let nu = discretize_density(&DensitySpec::uniform(-1.0, 1.0), 4)?;
    let problem = MmotProblem::new(vec![mu.clone(), mu], vec![nu.clone(), nu], CostSpec::MaxNormSigned { sign: -1.0 })?;
    let primal = solve_primal(&problem)?;
    let dual = gauge_normalize(&recover_dual(&problem, &primal)?, &problem);

    let bundle = TransformBundle::build(&problem, &dual)?;
    for (xi, x) in problem.x_grid().points().iter().enumerate() {
        let gamma = &bundle.gamma[xi];
        let fmt = |v: &[f64]| v.iter().map(|t| format!("{:+.4}", t + 0.0)).collect::<Vec<_>>().join(", ");
        println!("x = ({})  alpha = {:+.6}  gamma = ({})", fmt(x.coords()), bundle.alpha[xi], fmt(gamma));
    }
    let inv = bundle.invariants(&problem);
    println!("bundle invariants {inv:?}");

    let report = verify_copula_optimality(&problem, &dual, &primal.plan, &bundle, 1e-8);
    println!("copula conditions {:?}", report.passed);
    if !report.all_passed() {
        return Err(mmot::Error::InvalidPlan("copula conditions failed".into()));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> mmot::Result<()> {
    run_example()
}
