use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Transport cost `c(x, y)` on `R^d × R^d`.
///
/// Coordinate indices are zero-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CostSpec {
    /// `-‖x - y‖_p`
    NegNorm { p: f64 },
    /// `+‖x - y‖_p`
    PosNorm { p: f64 },
    /// `sign · max_i |x_i - y_i|`
    MaxNormSigned { sign: f64 },
    /// `-y_i y_j`
    NegProductPair { i: usize, j: usize },
    /// Dense `|X| × |Y|` values indexed by grid position.
    Table { table: Vec<Vec<f64>> },
}

fn p_norm(p: f64, x: &[f64], y: &[f64]) -> f64 {
    if p == 2.0 {
        x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    } else {
        x.iter().zip(y).map(|(a, b)| (a - b).abs().powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

impl CostSpec {
    pub fn euclidean_neg() -> Self {
        CostSpec::NegNorm { p: 2.0 }
    }

    pub fn euclidean_pos() -> Self {
        CostSpec::PosNorm { p: 2.0 }
    }

    /// Checks parameters against the dimension and grid sizes.
    pub fn validate(&self, d: usize, n_x: usize, n_y: usize) -> Result<()> {
        match self {
            CostSpec::NegNorm { p } | CostSpec::PosNorm { p } => {
                if !(p.is_finite() && *p > 1.0) {
                    return Err(Error::InvalidProblem(format!("norm exponent {p} must lie in (1, inf)")));
                }
            }
            CostSpec::MaxNormSigned { sign } => {
                if *sign != 1.0 && *sign != -1.0 {
                    return Err(Error::InvalidProblem(format!("max-norm sign must be +1 or -1, got {sign}")));
                }
            }
            CostSpec::NegProductPair { i, j } => {
                if *i >= d || *j >= d {
                    return Err(Error::InvalidProblem(format!("product pair ({i}, {j}) out of range for d = {d}")));
                }
            }
            CostSpec::Table { table } => {
                if table.len() != n_x || table.iter().any(|r| r.len() != n_y) {
                    return Err(Error::InvalidProblem(format!("cost table must be {n_x} x {n_y}")));
                }
                if table.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidProblem("cost table has non-finite entries".into()));
                }
            }
        }
        Ok(())
    }

    /// Cost at grid indices `(xi, yj)` with coordinates `x`, `y`.
    pub fn eval(&self, xi: usize, x: &[f64], yj: usize, y: &[f64]) -> f64 {
        match self {
            CostSpec::Table { table } => table[xi][yj],
            _ => self.eval_point(x, y).expect("analytic cost"),
        }
    }

    /// Cost at arbitrary points; table costs have no off-grid values.
    pub fn eval_point(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        Ok(match self {
            CostSpec::NegNorm { p } => -p_norm(*p, x, y),
            CostSpec::PosNorm { p } => p_norm(*p, x, y),
            CostSpec::MaxNormSigned { sign } => {
                sign * x.iter().zip(y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
            }
            CostSpec::NegProductPair { i, j } => -y[*i] * y[*j],
            CostSpec::Table { .. } => return Err(Error::NotDifferentiable),
        })
    }

    /// Whether `y ↦ c(x, y)` is smooth away from `y = x` (table costs are not known to be).
    pub fn is_analytic(&self) -> bool {
        !matches!(self, CostSpec::Table { .. })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluations() {
        let x = [0.0, 0.0];
        let y = [3.0, -4.0];
        assert_eq!(CostSpec::euclidean_neg().eval_point(&x, &y).unwrap(), -5.0);
        assert_eq!(CostSpec::euclidean_pos().eval_point(&x, &y).unwrap(), 5.0);
        assert_eq!(CostSpec::MaxNormSigned { sign: 1.0 }.eval_point(&x, &y).unwrap(), 4.0);
        assert_eq!(CostSpec::NegProductPair { i: 0, j: 1 }.eval_point(&x, &y).unwrap(), 12.0);
        let p3 = CostSpec::PosNorm { p: 3.0 }.eval_point(&[0.0], &[-2.0]).unwrap();
        assert!((p3 - 2.0).abs() < 1e-14);
        assert_eq!(CostSpec::euclidean_pos().eval_point(&y, &y).unwrap(), 0.0);
        let t = CostSpec::Table { table: vec![vec![1.0, 2.0]] };
        assert_eq!(t.eval(0, &[0.0], 1, &[0.0]), 2.0);
        assert!(t.eval_point(&[0.0], &[0.0]).is_err());
    }

    #[test]
    fn validation() {
        assert!(CostSpec::NegNorm { p: 1.0 }.validate(2, 1, 1).is_err());
        assert!(CostSpec::MaxNormSigned { sign: 0.5 }.validate(2, 1, 1).is_err());
        assert!(CostSpec::NegProductPair { i: 0, j: 2 }.validate(2, 1, 1).is_err());
        assert!(CostSpec::Table { table: vec![vec![0.0; 3]; 2] }.validate(1, 2, 3).is_ok());
        assert!(CostSpec::Table { table: vec![vec![0.0; 3]; 2] }.validate(1, 3, 2).is_err());
    }

    #[test]
    fn json_tags() {
        let c: CostSpec = serde_json::from_str(r#"{"kind":"neg_norm","p":2.0}"#).unwrap();
        assert_eq!(c, CostSpec::euclidean_neg());
        let c: CostSpec = serde_json::from_str(r#"{"kind":"neg_product_pair","i":0,"j":1}"#).unwrap();
        assert_eq!(c, CostSpec::NegProductPair { i: 0, j: 1 });
    }
}
