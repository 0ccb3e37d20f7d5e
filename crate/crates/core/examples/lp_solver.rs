// Use the dense simplex directly: solve a small LP, inspect multipliers and
// round-trip the plain-text dump.

use mmot::lp::{check_kkt, parse_lp_dump, solve_lp, write_lp_dump, LinearProgram, LpStatus};

pub fn run_example() -> mmot::Result<()> {
    // min x0 + 2 x1 + 3 x2  s.t.  x0 + x1 + x2 = 1,  x1 - x2 = 0.2
    let mut lp = LinearProgram::with_objective(vec![1.0, 2.0, 3.0]);
    lp.add_row([(0, 1.0), (1, 1.0), (2, 1.0)], 1.0);
    lp.add_row([(1, 1.0), (2, -1.0)], 0.2);

    let sol = solve_lp(&lp)?;
    assert_eq!(sol.status, LpStatus::Optimal);
    println!("x = {:?}", sol.primal);
    println!("y = {:?}", sol.dual);
    println!("value {:.12} after {} pivots", sol.objective_value, sol.iterations);

    let kkt = check_kkt(&lp, &sol, 1e-10);
    println!("kkt {kkt:?}");

    let text = write_lp_dump(&lp);
    print!("{text}");
    let again = solve_lp(&parse_lp_dump(&text)?)?;
    println!("round trip identical: {}", again.primal == sol.primal);
    Ok(())
}

#[allow(dead_code)]
fn main() -> mmot::Result<()> {
    run_example()
}
