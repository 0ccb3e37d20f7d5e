// Check the twist condition of a cost and whether an optimal plan is
// supported on a graph over a coordinate set.

use mmot::cost::CostSpec;
use mmot::geometry::{check_graph_structure, twist_check};
use mmot::measures::{discretize_density, DensitySpec};
use mmot::mmot::{solve_primal, MmotProblem};

pub fn run_example() -> mmot::Result<()> {
    let axes = vec![vec![-0.9, -0.3, 0.35, 0.9], vec![-0.9, -0.3, 0.35, 0.9]];
    let cost = CostSpec::NegProductPair { i: 0, j: 1 };
    for s in [vec![0], vec![1], vec![0, 1]] {
        let twisted = twist_check(&cost, &s, &[0.1, 0.2], &vec![0.3; s.len()], &axes, 1e-9)?;
        println!("-y0 y1 twisted over {s:?}: {twisted}");
    }

    let mu = discretize_density(&DensitySpec::uniform(-0.5, 0.5), 3)?;
    let nu = discretize_density(&DensitySpec::uniform(-1.0, 1.0), 4)?;
    let problem = MmotProblem::new(vec![mu.clone(), mu], vec![nu.clone(), nu], cost)?;
    let plan = solve_primal(&problem)?.plan;
    for s in [vec![0], vec![1]] {
        let g = check_graph_structure(&plan, &s, 1e-6);
        println!("graph over {s:?}: {} ({} violations)", g.passed, g.violations.len());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> mmot::Result<()> {
    run_example()
}
