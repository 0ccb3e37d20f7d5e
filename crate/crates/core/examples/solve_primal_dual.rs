// Solve a two-dimensional martingale transport problem, recover the dual
// potentials and certify optimality.

use mmot::cost::CostSpec;
use mmot::measures::{discretize_density, DensitySpec};
use mmot::mmot::{certify, gauge_normalize, recover_dual, solve_primal, MmotProblem};

pub fn run_example() -> mmot::Result<()> {
    let mu = discretize_density(&DensitySpec::uniform(-0.5, 0.5), 4)?;
    let nu = discretize_density(&DensitySpec::uniform(-1.0, 1.0), 6)?;
    let problem = MmotProblem::new(vec![mu.clone(), mu], vec![nu.clone(), nu], CostSpec::euclidean_neg())?;

    let primal = solve_primal(&problem)?;
    let dual = gauge_normalize(&recover_dual(&problem, &primal)?, &problem);
    let cert = certify(&problem, &dual, &primal.plan);

    println!("variables      {}", problem.n_vars());
    println!("primal value   {:.12}", cert.primal_value);
    println!("dual value     {:.12}", cert.dual_value);
    println!("max violation  {:.3e}", cert.max_violation);
    println!("support slack  {:.3e}", cert.max_support_residual);
    println!("support size   {}", primal.plan.support_len());
    if !cert.passes(1e-8) {
        return Err(mmot::Error::InvalidPlan(format!("certificate failed: {cert:?}")));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> mmot::Result<()> {
    run_example()
}
