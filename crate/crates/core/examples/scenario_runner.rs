// Run a scenario with a full pipeline and write its report directory.

use mmot::scenario::{run_scenario, Scenario};

const SCENARIO: &str = r#"{
  "name": "sq-neg-euclid",
  "problem": {
    "d": 2,
    "marginals": {
      "mu": [{"density": {"kind": "uniform", "lo": -0.5, "hi": 0.5}, "cells": 3},
             {"density": {"kind": "uniform", "lo": -0.5, "hi": 0.5}, "cells": 3}],
      "nu": [{"density": {"kind": "uniform", "lo": -1.0, "hi": 1.0}, "cells": 4},
             {"density": {"kind": "uniform", "lo": -1.0, "hi": 1.0}, "cells": 4}]
    },
    "cost": {"kind": "neg_norm", "p": 2.0}
  },
  "pipeline": ["solve", "dual", "normalize", "transforms", "copula_check", "extremality", "staying", "graph(0)"],
  "tolerances": {"graph": 1e-6}
}"#;

pub fn run_example() -> mmot::Result<()> {
    let scenario = Scenario::from_json(SCENARIO, "inline")?;
    let report = run_scenario(&scenario, None, None)?;
    for stage in &report.stages {
        println!("{}", stage.stage);
        for a in &stage.assertions {
            println!("  {a}");
        }
    }
    let out = std::env::temp_dir().join(format!("mmot-example-{}", std::process::id()));
    report.write_to(&out.join(&report.name))?;
    println!("passed {} report in {}", report.passed, out.display());
    std::fs::remove_dir_all(&out)?;
    Ok(())
}

#[allow(dead_code)]
fn main() -> mmot::Result<()> {
    run_example()
}
