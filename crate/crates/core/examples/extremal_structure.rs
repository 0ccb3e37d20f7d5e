// Inspect the geometry of an optimal plan: extreme points of conditional
// supports, the staying decomposition and the one-dimensional reader.

use mmot::cost::CostSpec;
use mmot::geometry::{check_conditional_extremality, staying_decomposition, three_point_structure_1d, NOISE_FLOOR};
use mmot::measures::{discretize_density, DensitySpec, DiscreteMeasure};
use mmot::mmot::{solve_primal, MmotProblem};

pub fn run_example() -> mmot::Result<()> {
    let mu = discretize_density(&DensitySpec::uniform(-0.5, 0.5), 3)?;
    let nu = discretize_density(&DensitySpec::uniform(-1.0, 1.0), 4)?;
    let problem = MmotProblem::new(vec![mu.clone(), mu], vec![nu.clone(), nu], CostSpec::euclidean_neg())?;
    let plan = solve_primal(&problem)?.plan;

    let ext = check_conditional_extremality(&plan, NOISE_FLOOR);
    println!("mass on extreme points {:.4}, worst conditional {:.4}", ext.mass_weighted_fraction, ext.worst_fraction);

    let stay = staying_decomposition(&plan);
    println!("mass staying put {:.4}, dominance {}", stay.diagonal_part + 0.0, stay.dominance_ok);

    // single-atom spread: every x splits into at most two points
    let mu1 = DiscreteMeasure::new([(-0.5, 0.5), (0.5, 0.5)])?;
    let nu1 = DiscreteMeasure::new([(-1.0, 0.25), (-0.5, 0.25), (0.5, 0.25), (1.0, 0.25)])?;
    let one = MmotProblem::new(vec![mu1], vec![nu1], CostSpec::PosNorm { p: 2.0 })?;
    let plan1 = solve_primal(&one)?.plan;
    match three_point_structure_1d(&plan1, 1e-9) {
        Ok(s) => {
            for r in &s.records {
                println!(
                    "x = {:+.3}: t- = {:+.3}  t+ = {:+.3}  stay = {:.3}",
                    r.x, r.t_minus, r.t_plus, r.stay_weight
                );
            }
        }
        Err(e) => println!("not three-point: {e}"),
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> mmot::Result<()> {
    run_example()
}
