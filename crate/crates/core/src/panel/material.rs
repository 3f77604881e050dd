use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Elastic-plastic steel with a yield plateau followed by power-law hardening.
///
/// Stresses in Pa. The hardening branch `K (eps0 + eps)^n` is offset by
/// [`MaterialLaw::ref_strain`] so that it meets the plateau exactly at `eps_l`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MaterialLaw {
    pub youngs_modulus: f64,
    pub poisson_ratio: f64,
    pub yield_stress: f64,
    pub hardening_coefficient: f64,
    pub hardening_exponent: f64,
    pub plateau_strain: f64,
}

impl Default for MaterialLaw {
    fn default() -> Self {
        Self {
            youngs_modulus: 200e9,
            poisson_ratio: 0.3,
            yield_stress: 355e6,
            hardening_coefficient: 530e6,
            hardening_exponent: 0.26,
            plateau_strain: 0.006,
        }
    }
}

impl MaterialLaw {
    pub fn validate(&self) -> Result<()> {
        let ok = self.youngs_modulus > 0.0
            && self.poisson_ratio > 0.0
            && self.poisson_ratio < 0.5
            && self.yield_stress > 0.0
            && self.hardening_coefficient > 0.0
            && self.hardening_exponent > 0.0
            && self.hardening_exponent < 1.0
            && self.plateau_strain > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid material law {self:?}")))
        }
    }

    pub fn shear_modulus(&self) -> f64 {
        self.youngs_modulus / (2.0 * (1.0 + self.poisson_ratio))
    }

    /// Strain offset of the hardening branch: `(sigma0 / K)^(1/n) - eps_l`.
    pub fn ref_strain(&self) -> f64 {
        (self.yield_stress / self.hardening_coefficient).powf(1.0 / self.hardening_exponent)
            - self.plateau_strain
    }

    /// Flow stress at equivalent plastic strain `plastic_strain`.
    pub fn flow_stress(&self, plastic_strain: f64) -> Result<f64> {
        if plastic_strain.is_nan() || plastic_strain < 0.0 {
            return Err(Error::Domain(format!(
                "plastic strain must be non-negative, got {plastic_strain}"
            )));
        }
        if plastic_strain <= self.plateau_strain {
            Ok(self.yield_stress)
        } else {
            Ok(self.hardening_coefficient
                * (self.ref_strain() + plastic_strain).powf(self.hardening_exponent))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference values evaluated independently at 40 significant digits.
    const EPS0: f64 = 0.208_085_116_128_701_583_353_752_399;
    const SIGMA_AT_5PCT: f64 = 372.678_414_363_979_597e6;

    #[test]
    fn initial_yield() {
        assert_eq!(MaterialLaw::default().flow_stress(0.0).unwrap(), 355e6);
    }

    #[test]
    fn plateau_boundary_and_continuity() {
        let law = MaterialLaw::default();
        assert_eq!(law.flow_stress(0.006).unwrap(), 355e6);
        let just_after = law.flow_stress(0.006 + 1e-15).unwrap();
        assert!((just_after - 355e6).abs() / 355e6 < 1e-9);
        let hardening_at_plateau = law.hardening_coefficient
            * (law.ref_strain() + law.plateau_strain).powf(law.hardening_exponent);
        assert!((hardening_at_plateau - 355e6).abs() / 355e6 < 1e-9);
    }

    #[test]
    fn ref_strain_value() {
        let law = MaterialLaw::default();
        assert!((law.ref_strain() - EPS0).abs() < 1e-12);
    }

    #[test]
    fn ref_strain_when_yield_equals_k() {
        let law = MaterialLaw {
            hardening_coefficient: 355e6,
            ..MaterialLaw::default()
        };
        assert!((law.ref_strain() - (1.0 - 0.006)).abs() < 1e-15);
    }

    #[test]
    fn hardening_value() {
        let s = MaterialLaw::default().flow_stress(0.05).unwrap();
        assert!((s - SIGMA_AT_5PCT).abs() / SIGMA_AT_5PCT < 1e-12);
    }

    #[test]
    fn negative_strain_is_domain_error() {
        assert!(matches!(
            MaterialLaw::default().flow_stress(-1e-3),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn monotone_on_dense_grid() {
        let law = MaterialLaw::default();
        let mut prev = law.flow_stress(0.0).unwrap();
        for i in 1..=50_000 {
            let s = law.flow_stress(0.5 * i as f64 / 50_000.0).unwrap();
            assert!(s >= prev);
            prev = s;
        }
    }
}
