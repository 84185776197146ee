use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use super::state::{pauli_product, rho_from_t, DensityMatrix4, Pauli, TriangularParams, LOWER};
use crate::{Error, Result, C64};

/// Lower bound applied to outcome probabilities before taking logs.
pub const PROBABILITY_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BasisPair(pub Pauli, pub Pauli);

impl fmt::Display for BasisPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.0.as_char(), self.1.as_char())
    }
}

impl FromStr for BasisPair {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let c: Vec<char> = s.chars().collect();
        if c.len() != 2 {
            return Err(Error::param(format!("basis must be two letters, got `{s}`")));
        }
        Ok(BasisPair(Pauli::from_char(c[0])?, Pauli::from_char(c[1])?))
    }
}

impl Serialize for BasisPair {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BasisPair {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A measured two-outcome correlation `⟨σ_i σ_j⟩` from `N` coincidences.
///
/// `pseudo` marks constraints that are not measured data; the bootstrap
/// leaves them untouched.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementRecord {
    pub basis: BasisPair,
    pub expectation: f64,
    #[serde(rename = "N")]
    pub n: u64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub pseudo: bool,
}

impl MeasurementRecord {
    pub fn new(basis: &str, expectation: f64, n: u64) -> Result<Self> {
        let r = MeasurementRecord { basis: basis.parse()?, expectation, n, pseudo: false };
        r.validate()?;
        Ok(r)
    }

    pub fn pseudo(basis: &str, expectation: f64, n: u64) -> Result<Self> {
        Ok(MeasurementRecord { pseudo: true, ..Self::new(basis, expectation, n)? })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.expectation.abs() <= 1.0) {
            return Err(Error::param(format!(
                "expectation of {} must lie in [-1, 1], got {}",
                self.basis, self.expectation
            )));
        }
        Ok(())
    }

    /// Counts in the `+` and `−` outcomes, `N(1 ± E)/2`.
    pub fn outcome_counts(&self) -> (f64, f64) {
        let n = self.n as f64;
        (0.5 * n * (1.0 + self.expectation), 0.5 * n * (1.0 - self.expectation))
    }

    pub fn operator(&self) -> Matrix4<C64> {
        pauli_product(self.basis.0, self.basis.1)
    }
}

/// Validates records and drops those with no counts.
pub fn informative_records(records: &[MeasurementRecord]) -> Result<Vec<MeasurementRecord>> {
    let mut out = Vec::with_capacity(records.len());
    for r in records {
        r.validate()?;
        if r.n == 0 {
            log::warn!("dropping record {} with zero coincidences", r.basis);
        } else {
            out.push(*r);
        }
    }
    Ok(out)
}

/// `Σ (N/2)[(1+E) ln Tr(ρP⁺) + (1−E) ln Tr(ρP⁻)]` with the probabilities
/// clamped at [`PROBABILITY_FLOOR`].
pub fn log_likelihood(rho: &DensityMatrix4, records: &[MeasurementRecord]) -> f64 {
    records
        .iter()
        .map(|r| {
            let e = rho.expectation(&r.operator());
            let (np, nm) = r.outcome_counts();
            let pp = (0.5 * (1.0 + e)).max(PROBABILITY_FLOOR);
            let pm = (0.5 * (1.0 - e)).max(PROBABILITY_FLOOR);
            np * pp.ln() + nm * pm.ln()
        })
        .sum()
}

/// Negative log-likelihood as a function of the triangular parameters,
/// with operators precomputed.
pub struct Objective {
    terms: Vec<(Matrix4<C64>, f64, f64)>,
}

impl Objective {
    pub fn new(records: &[MeasurementRecord]) -> Self {
        Objective {
            terms: records
                .iter()
                .map(|r| {
                    let (np, nm) = r.outcome_counts();
                    (r.operator(), np, nm)
                })
                .collect(),
        }
    }

    pub fn value(&self, p: &TriangularParams) -> f64 {
        match rho_from_t(p) {
            Ok(rho) => -self.ll(&rho),
            Err(_) => f64::INFINITY,
        }
    }

    fn ll(&self, rho: &DensityMatrix4) -> f64 {
        self.terms
            .iter()
            .map(|(op, np, nm)| {
                let e = rho.expectation(op);
                np * (0.5 * (1.0 + e)).max(PROBABILITY_FLOOR).ln() + nm * (0.5 * (1.0 - e)).max(PROBABILITY_FLOOR).ln()
            })
            .sum()
    }

    /// Value and gradient of the negative log-likelihood.
    ///
    /// With `A = T†T`, `n = Tr A` and `G = ∂L/∂ρ`, the differential is
    /// `dL = (2/n) Re Tr(H T† dT)` where `H = G − Tr(Gρ) I`.
    pub fn value_and_gradient(&self, p: &TriangularParams) -> (f64, [f64; 16]) {
        let t = p.t_matrix();
        let a = t.adjoint() * t;
        let n = a.trace().re;
        if !(n > 0.0) || !n.is_finite() {
            return (f64::INFINITY, [0.0; 16]);
        }
        let rho = DensityMatrix4(a / C64::from(n));
        let mut ll = 0.0;
        let mut g = Matrix4::<C64>::zeros();
        for (op, np, nm) in &self.terms {
            let e = rho.expectation(op);
            let pp = 0.5 * (1.0 + e);
            let pm = 0.5 * (1.0 - e);
            let mut c = 0.0;
            if pp > PROBABILITY_FLOOR {
                ll += np * pp.ln();
                c += 0.5 * np / pp;
            } else {
                ll += np * PROBABILITY_FLOOR.ln();
            }
            if pm > PROBABILITY_FLOOR {
                ll += nm * pm.ln();
                c -= 0.5 * nm / pm;
            } else {
                ll += nm * PROBABILITY_FLOOR.ln();
            }
            g += op * C64::from(c);
        }
        let shift = (g * rho.0).trace().re;
        let h = g - Matrix4::identity() * C64::from(shift);
        let k = h * t.adjoint() * C64::from(2.0 / n);
        let mut grad = [0.0; 16];
        for d in 0..4 {
            grad[d] = -k[(d, d)].re;
        }
        for (m, &(i, j)) in LOWER.iter().enumerate() {
            grad[4 + 2 * m] = -k[(j, i)].re;
            grad[5 + 2 * m] = k[(j, i)].im;
        }
        (-ll, grad)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bell_records(n: u64) -> Vec<MeasurementRecord> {
        [("xx", 1.0), ("yy", 1.0), ("xy", 0.0), ("yx", 0.0), ("zz", -1.0)]
            .iter()
            .map(|&(b, e)| MeasurementRecord::new(b, e, n).unwrap())
            .collect()
    }

    #[test]
    fn mixed_state_zero_records() {
        let recs: Vec<_> = ["xx", "yz", "zz"].iter().map(|b| MeasurementRecord::new(b, 0.0, 50).unwrap()).collect();
        let ll = log_likelihood(&DensityMatrix4::maximally_mixed(), &recs);
        assert!((ll - 150.0 * 0.5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn clamping_keeps_likelihood_finite() {
        let recs = vec![MeasurementRecord::new("zz", 1.0, 10).unwrap()];
        let ll = log_likelihood(&DensityMatrix4::bell(), &recs);
        assert!((ll - 10.0 * PROBABILITY_FLOOR.ln()).abs() < 1e-9);
    }

    #[test]
    fn bell_state_beats_perturbations() {
        let recs = bell_records(100);
        let best = log_likelihood(&DensityMatrix4::bell(), &recs);
        for k in 1..=10 {
            let w = 1.0 - 0.01 * k as f64;
            let rho = DensityMatrix4(
                DensityMatrix4::bell().0 * C64::from(w) + DensityMatrix4::maximally_mixed().0 * C64::from(1.0 - w),
            );
            assert!(log_likelihood(&rho, &recs) < best);
        }
    }

    #[test]
    fn record_json_shape() {
        let r: MeasurementRecord = serde_json::from_str(r#"{"basis":"xx","expectation":0.679,"N":112}"#).unwrap();
        assert_eq!(r.basis, BasisPair(Pauli::X, Pauli::X));
        assert_eq!(r.n, 112);
        assert_eq!(serde_json::to_string(&r).unwrap(), r#"{"basis":"xx","expectation":0.679,"N":112}"#);
        assert!(serde_json::from_str::<MeasurementRecord>(r#"{"basis":"xw","expectation":0.1,"N":1}"#).is_err());
        assert!(MeasurementRecord::new("xx", 1.5, 3).is_err());
    }

    #[test]
    fn zero_count_records_dropped() {
        let recs = vec![MeasurementRecord::new("xx", 0.3, 0).unwrap(), MeasurementRecord::new("yy", 0.3, 4).unwrap()];
        assert_eq!(informative_records(&recs).unwrap().len(), 1);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let obj = Objective::new(&bell_records(37));
        let p =
            TriangularParams([0.9, 0.4, 0.7, 0.3, 0.1, -0.2, 0.3, 0.05, -0.1, 0.2, 0.15, 0.0, -0.3, 0.1, 0.2, -0.05]);
        let (f, g) = obj.value_and_gradient(&p);
        assert!((f - obj.value(&p)).abs() < 1e-12 * f.abs());
        for k in 0..16 {
            let h = 1e-6;
            let mut a = p;
            let mut b = p;
            a.0[k] += h;
            b.0[k] -= h;
            let fd = (obj.value(&a) - obj.value(&b)) / (2.0 * h);
            assert!((fd - g[k]).abs() < 1e-5 * (1.0 + g[k].abs()), "k={k}: {fd} vs {}", g[k]);
        }
    }
}
