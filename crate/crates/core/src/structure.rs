//! Irreducible decomposition of a convex-ordered pair on the line.
//!
//! The open set `{u_mu < u_nu}` splits into maximal open intervals `I_k`.
//! `mu` restricted to each `I_k` is the component's initial law; `nu`
//! restricted to `I_k` plus endpoint masses fixed by the mass and mean
//! identities is its terminal law. What `mu` leaves on `{u_mu = u_nu}` is
//! common to both measures and stays put.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{convex_order_check, DiscreteMeasure, DEFAULT_ORDER_TOL};

/// Potentials closer than this count as touching.
pub const TOUCH_TOL: f64 = 1e-12;

/// Endpoint masses above `-NEG_MASS_TOL` are clamped to zero when negative.
const NEG_MASS_TOL: f64 = 1e-9;

fn ser_bound<S: serde::Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_some(v)
    } else {
        s.serialize_none()
    }
}

fn de_lo<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NEG_INFINITY))
}

fn de_hi<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
}

/// One irreducible component `(I_k, J_k, mu_k, nu_k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrreducibleComponent {
    /// One-based position from the left.
    pub index: usize,
    /// Left end of the open interval `I_k`; `-inf` (JSON `null`) if unbounded.
    #[serde(serialize_with = "ser_bound", deserialize_with = "de_lo")]
    pub lo: f64,
    #[serde(serialize_with = "ser_bound", deserialize_with = "de_hi")]
    pub hi: f64,
    /// `J_k` contains `lo` (resp. `hi`) when `nu_k` has an atom there.
    pub closed_lo: bool,
    pub closed_hi: bool,
    pub mu: DiscreteMeasure,
    pub nu: DiscreteMeasure,
}

impl IrreducibleComponent {
    pub fn contains_open(&self, x: f64) -> bool {
        x > self.lo && x < self.hi
    }

    pub fn contains_closed(&self, x: f64) -> bool {
        self.contains_open(x) || (self.closed_lo && x == self.lo) || (self.closed_hi && x == self.hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    /// `mu` on `{u_mu = u_nu}`.
    pub fixed: DiscreteMeasure,
    /// `nu` minus everything assigned to components; equals `fixed` for
    /// valid inputs.
    pub fixed_nu: DiscreteMeasure,
    pub components: Vec<IrreducibleComponent>,
}

impl Decomposition {
    /// `fixed + Σ mu_k`.
    pub fn reconstruct_mu(&self) -> DiscreteMeasure {
        self.components.iter().fold(self.fixed.clone(), |acc, c| acc.add(&c.mu))
    }

    /// `fixed_nu + Σ nu_k`.
    pub fn reconstruct_nu(&self) -> DiscreteMeasure {
        self.components.iter().fold(self.fixed_nu.clone(), |acc, c| acc.add(&c.nu))
    }
}

/// Canonical decomposition of `mu ≤_c nu` into a fixed part and
/// irreducible components, ordered left to right.
pub fn irreducible_components(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<Decomposition> {
    let order = convex_order_check(mu, nu, DEFAULT_ORDER_TOL)?;
    if !order.ordered {
        return Err(Error::NotInConvexOrder(format!("{:?}", order.witness)));
    }

    let mut points: Vec<f64> = mu.positions().chain(nu.positions()).collect();
    points.sort_by(f64::total_cmp);
    points.dedup_by(|a, b| (*a - *b).abs() <= crate::measures::ATOM_MATCH_TOL);
    let positive: Vec<bool> = points
        .iter()
        .map(|&z| nu.potential(z) - mu.potential(z) > TOUCH_TOL)
        .collect();

    // Runs of consecutive evaluation points with a positive gap. The gap is
    // linear between points and zero beyond the extreme atoms, so every run
    // is bracketed by touching points.
    let mut intervals: Vec<(f64, f64)> = Vec::new();
    let mut k = 0;
    while k < points.len() {
        if !positive[k] {
            k += 1;
            continue;
        }
        let start = k;
        while k < points.len() && positive[k] {
            k += 1;
        }
        let lo = if start == 0 { f64::NEG_INFINITY } else { points[start - 1] };
        let hi = if k == points.len() { f64::INFINITY } else { points[k] };
        intervals.push((lo, hi));
    }

    let mut components = Vec::new();
    let mut nu_left = nu.atoms().to_vec();
    for (lo, hi) in intervals {
        let mu_k = mu.restrict(|x| x > lo && x < hi);
        if mu_k.is_empty() {
            // A gap not carrying mu is impossible when the potentials agree at both ends.
            continue;
        }
        let nu_inner = nu.restrict(|x| x > lo && x < hi);
        let mass_rest = mu_k.mass() - nu_inner.mass();
        let moment_rest = mu_k.mean() * mu_k.mass() - nu_inner.mean() * nu_inner.mass();

        // p at lo, q at hi: p + q = mass_rest, lo p + hi q = moment_rest.
        let (p, q) = match (lo.is_finite(), hi.is_finite()) {
            (true, true) => {
                let det = hi - lo;
                if det.abs() <= TOUCH_TOL {
                    return Err(Error::DegenerateComponent { lo, hi });
                }
                ((hi * mass_rest - moment_rest) / det, (moment_rest - lo * mass_rest) / det)
            }
            (false, true) => (0.0, mass_rest),
            (true, false) => (mass_rest, 0.0),
            (false, false) => (0.0, 0.0),
        };
        if p < -NEG_MASS_TOL || q < -NEG_MASS_TOL {
            return Err(Error::DegenerateComponent { lo, hi });
        }
        let (p, q) = (p.max(0.0), q.max(0.0));

        let mut nu_atoms: Vec<(f64, f64)> = nu_inner.atoms().to_vec();
        for (end, w) in [(lo, p), (hi, q)] {
            if w > 0.0 && end.is_finite() {
                nu_atoms.push((end, w));
                if let Some(a) = nu_left.iter_mut().find(|a| (a.0 - end).abs() <= crate::measures::ATOM_MATCH_TOL) {
                    a.1 -= w;
                } else {
                    return Err(Error::DegenerateComponent { lo, hi });
                }
            }
        }
        for a in nu_left.iter_mut().filter(|a| a.0 > lo && a.0 < hi) {
            a.1 = 0.0;
        }
        components.push(IrreducibleComponent {
            index: components.len() + 1,
            lo,
            hi,
            closed_lo: p > 0.0,
            closed_hi: q > 0.0,
            mu: mu_k,
            nu: DiscreteMeasure::new(nu_atoms)?,
        });
    }

    let fixed = mu.restrict(|x| !components.iter().any(|c| c.contains_open(x)));
    let fixed_nu = DiscreteMeasure::new(nu_left.into_iter().map(|(x, w)| (x, if w > NEG_MASS_TOL { w } else { 0.0 })))?;
    Ok(Decomposition {
        fixed,
        fixed_nu,
        components,
    })
}

/// `true` iff the pair is a single irreducible component with no fixed part.
pub fn irreducibility_check(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<bool> {
    let dec = irreducible_components(mu, nu)?;
    Ok(dec.fixed.is_empty()
        && dec.components.len() == 1
        && (dec.components[0].mu.mass() - mu.mass()).abs() <= DEFAULT_ORDER_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(atoms: &[(f64, f64)]) -> DiscreteMeasure {
        DiscreteMeasure::new(atoms.iter().copied()).unwrap()
    }

    #[test]
    fn single_component() {
        let mu = DiscreteMeasure::dirac(0.0);
        let nu = m(&[(-1.0, 0.5), (1.0, 0.5)]);
        let dec = irreducible_components(&mu, &nu).unwrap();
        assert!(dec.fixed.is_empty());
        assert_eq!(dec.components.len(), 1);
        let c = &dec.components[0];
        assert_eq!((c.lo, c.hi, c.closed_lo, c.closed_hi), (-1.0, 1.0, true, true));
        assert_eq!(c.nu, nu);
        assert!(irreducibility_check(&mu, &nu).unwrap());
    }

    #[test]
    fn two_components_split_shared_atom() {
        let mu = m(&[(-1.0, 0.5), (1.0, 0.5)]);
        let nu = m(&[(-2.0, 0.25), (0.0, 0.5), (2.0, 0.25)]);
        // u_mu(0) = 1 = u_nu(0): the potentials touch at the middle atom.
        assert_eq!(mu.potential(0.0), 1.0);
        assert_eq!(nu.potential(0.0), 1.0);
        let dec = irreducible_components(&mu, &nu).unwrap();
        assert_eq!(dec.components.len(), 2);
        let (a, b) = (&dec.components[0], &dec.components[1]);
        assert_eq!((a.lo, a.hi), (-2.0, 0.0));
        assert_eq!(a.mu, m(&[(-1.0, 0.5)]));
        assert_eq!(a.nu, m(&[(-2.0, 0.25), (0.0, 0.25)]));
        assert_eq!((b.lo, b.hi), (0.0, 2.0));
        assert_eq!(b.mu, m(&[(1.0, 0.5)]));
        assert_eq!(b.nu, m(&[(0.0, 0.25), (2.0, 0.25)]));
        assert!(dec.fixed.is_empty());
        assert!(dec.fixed_nu.is_empty());
        assert!(!irreducibility_check(&mu, &nu).unwrap());
    }

    #[test]
    fn identical_measures_are_fixed() {
        let mu = m(&[(-1.0, 0.2), (0.5, 0.3), (3.0, 0.5)]);
        let dec = irreducible_components(&mu, &mu).unwrap();
        assert!(dec.components.is_empty());
        assert_eq!(dec.fixed, mu);
        assert_eq!(dec.fixed_nu.max_atom_diff(&mu), 0.0);
        assert!(!irreducibility_check(&mu, &mu).unwrap());
    }

    #[test]
    fn fixed_atom_between_components() {
        // mass 1/3 at 0 stays, the outer pieces spread.
        let mu = m(&[(-2.0, 1.0 / 3.0), (0.0, 1.0 / 3.0), (2.0, 1.0 / 3.0)]);
        let nu = m(&[(-3.0, 1.0 / 6.0), (-1.0, 1.0 / 6.0), (0.0, 1.0 / 3.0), (1.0, 1.0 / 6.0), (3.0, 1.0 / 6.0)]);
        let dec = irreducible_components(&mu, &nu).unwrap();
        assert_eq!(dec.components.len(), 2);
        assert_eq!(dec.fixed, m(&[(0.0, 1.0 / 3.0)]));
        assert!(dec.fixed.max_atom_diff(&dec.fixed_nu) < 1e-12);
        assert!(dec.reconstruct_mu().max_atom_diff(&mu) < 1e-12);
        assert!(dec.reconstruct_nu().max_atom_diff(&nu) < 1e-12);
    }

    #[test]
    fn rejects_unordered() {
        let mu = m(&[(-1.0, 0.5), (1.0, 0.5)]);
        assert!(matches!(
            irreducible_components(&mu, &DiscreteMeasure::dirac(0.0)),
            Err(Error::NotInConvexOrder(_))
        ));
    }

    #[test]
    fn json_bounds() {
        let mu = DiscreteMeasure::dirac(0.0);
        let nu = m(&[(-1.0, 0.5), (1.0, 0.5)]);
        let mut c = irreducible_components(&mu, &nu).unwrap().components.remove(0);
        c.lo = f64::NEG_INFINITY;
        let v = serde_json::to_value(&c).unwrap();
        assert!(v["lo"].is_null());
        assert_eq!(v["hi"], 1.0);
        let back: IrreducibleComponent = serde_json::from_value(v).unwrap();
        assert_eq!(back.lo, f64::NEG_INFINITY);
    }
}
