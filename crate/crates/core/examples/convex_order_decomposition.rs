// Check convex order between two measures on the line and split the pair
// into irreducible components.

use mmot::measures::{convex_order_check, potential_eval, DiscreteMeasure, DEFAULT_ORDER_TOL};
use mmot::structure::{irreducibility_check, irreducible_components};

pub fn run_example() -> mmot::Result<()> {
    let mu = DiscreteMeasure::new([(-2.0, 0.25), (0.0, 0.25), (2.0, 0.5)])?;
    let nu = DiscreteMeasure::new([(-3.0, 0.125), (-1.0, 0.125), (0.0, 0.25), (1.0, 0.25), (3.0, 0.25)])?;

    for x in [-3.0, -1.0, 0.0, 1.0, 2.0, 3.0] {
        println!("u_mu({x:+}) = {:.4}  u_nu({x:+}) = {:.4}", potential_eval(&mu, x)?, potential_eval(&nu, x)?);
    }
    let order = convex_order_check(&mu, &nu, DEFAULT_ORDER_TOL)?;
    println!("convex order: {}", order.ordered);

    let d = irreducible_components(&mu, &nu)?;
    println!("fixed part: {:?}", d.fixed.atoms());
    for c in &d.components {
        println!(
            "component {}: ({}, {})  mu {:?}  nu {:?}  irreducible {}",
            c.index,
            c.lo,
            c.hi,
            c.mu.atoms(),
            c.nu.atoms(),
            irreducibility_check(&c.mu, &c.nu)?
        );
    }
    let back = d.reconstruct_mu().max_atom_diff(&mu).max(d.reconstruct_nu().max_atom_diff(&nu));
    println!("reconstruction error {back:.1e}");

    let reversed = convex_order_check(&nu, &mu, DEFAULT_ORDER_TOL)?;
    println!("reversed pair ordered: {}  witness {:?}", reversed.ordered, reversed.witness);
    Ok(())
}

#[allow(dead_code)]
fn main() -> mmot::Result<()> {
    run_example()
}
