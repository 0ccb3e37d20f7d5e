// Rebuild the worked instances at small grid sizes and print each claim.

use mmot::reproduce::{reproduce, Example};

pub fn run_example() -> mmot::Result<()> {
    for (example, n) in [(Example::Ex2_4, 1), (Example::Ex2_7, 4), (Example::Ex2_8, 4)] {
        let r = reproduce(example, Some(n), None)?;
        println!("{example} n={n} value={:.12} passed={}", r.value, r.passed);
        for c in &r.claims {
            println!("  {c}");
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> mmot::Result<()> {
    run_example()
}
