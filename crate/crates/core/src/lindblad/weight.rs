//! Transition weights γ(ω) and the closed-form coefficient table
//! α_{ν1,ν2} = ∫ γ(ω) f̂(ω - ν1) f̂(ω - ν2) dω.
//!
//! The product of the two filters is e^{-Δ²/8σ²} times a normal density of
//! mean ν̄ and variance σ², so α is e^{-Δ²/8σ²} E[γ(ω)] with ω ~ N(ν̄, σ²).

use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::spectrum::Spectrum;
use crate::special::{erfcx, norm_cdf, norm_sf};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightKind {
    Metropolis,
    Gaussian,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Weight {
    pub kind: WeightKind,
    pub beta: f64,
    pub sigma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_gamma: Option<f64>,
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {v}")))
    }
}

impl Weight {
    pub fn metropolis(beta: f64, sigma: f64) -> Result<Self> {
        check_positive("beta", beta)?;
        check_positive("sigma", sigma)?;
        Ok(Weight { kind: WeightKind::Metropolis, beta, sigma, omega_gamma: None, sigma_gamma: None })
    }

    /// Gaussian weight; needs σ_γ² = 2ω_γ/β - σ² > 0.
    pub fn gaussian(beta: f64, sigma: f64, omega_gamma: f64) -> Result<Self> {
        check_positive("beta", beta)?;
        check_positive("sigma", sigma)?;
        let var = 2.0 * omega_gamma / beta - sigma * sigma;
        if !(var > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "Gaussian weight needs omega_gamma > beta sigma^2 / 2 = {}, got {omega_gamma}",
                beta * sigma * sigma / 2.0
            )));
        }
        Ok(Weight { kind: WeightKind::Gaussian, beta, sigma, omega_gamma: Some(omega_gamma), sigma_gamma: Some(var.sqrt()) })
    }

    /// Re-validate after deserialization and fill in σ_γ.
    pub fn validated(self) -> Result<Self> {
        match self.kind {
            WeightKind::Metropolis => Weight::metropolis(self.beta, self.sigma),
            WeightKind::Gaussian => {
                let og = self
                    .omega_gamma
                    .ok_or_else(|| Error::InvalidParameter("Gaussian weight needs omega_gamma".into()))?;
                Weight::gaussian(self.beta, self.sigma, og)
            }
        }
    }

    fn gauss_params(&self) -> (f64, f64) {
        (self.omega_gamma.unwrap_or(0.0), self.sigma_gamma.unwrap_or(1.0))
    }

    pub fn gamma(&self, omega: f64) -> f64 {
        match self.kind {
            WeightKind::Metropolis => {
                (-self.beta * (omega + self.beta * self.sigma * self.sigma / 2.0).max(0.0)).exp()
            }
            WeightKind::Gaussian => {
                let (og, sg) = self.gauss_params();
                (-(omega + og).powi(2) / (2.0 * sg * sg)).exp()
            }
        }
    }

    /// α_{ν1,ν2}
    pub fn alpha(&self, nu1: f64, nu2: f64) -> f64 {
        let (b, s) = (self.beta, self.sigma);
        let m = 0.5 * (nu1 + nu2);
        let off = (-(nu1 - nu2).powi(2) / (8.0 * s * s)).exp();
        match self.kind {
            WeightKind::Metropolis => {
                let u = -b * s / 2.0 - m / s;
                let v = (b * s * s / 2.0 - m) / s;
                let upper = if v >= 0.0 {
                    0.5 * erfcx(v / SQRT_2) * (-b * b * s * s / 8.0 - b * m / 2.0 - m * m / (2.0 * s * s)).exp()
                } else {
                    (-b * m).exp() * norm_sf(v)
                };
                off * (norm_cdf(u) + upper)
            }
            WeightKind::Gaussian => {
                let (og, sg) = self.gauss_params();
                let tot = s * s + sg * sg;
                off * sg / tot.sqrt() * (-(m + og).powi(2) / (2.0 * tot)).exp()
            }
        }
    }

    /// h_{ν1,ν2} = α_{ν1,ν2} e^{β(ν1+ν2)/4}, symmetric under ν̄ → -ν̄.
    pub fn h(&self, nu1: f64, nu2: f64) -> f64 {
        let (b, s) = (self.beta, self.sigma);
        let m = 0.5 * (nu1 + nu2);
        let off = (-(nu1 - nu2).powi(2) / (8.0 * s * s)).exp();
        match self.kind {
            WeightKind::Metropolis => {
                // Φ(-z) e^{βm/2} with z = βσ/2 + m/σ
                let part = |m: f64| {
                    let z = b * s / 2.0 + m / s;
                    if z >= 0.0 {
                        0.5 * erfcx(z / SQRT_2) * (-b * b * s * s / 8.0 - m * m / (2.0 * s * s)).exp()
                    } else {
                        norm_cdf(-z) * (b * m / 2.0).exp()
                    }
                };
                off * (part(m) + part(-m))
            }
            WeightKind::Gaussian => {
                let (og, sg) = self.gauss_params();
                off * sg * (b / (2.0 * og)).sqrt() * (-b * og / 4.0 - b * m * m / (4.0 * og)).exp()
            }
        }
    }
}

/// Largest Bohr list for which the full α table is stored.
pub const MAX_BOHR_TABLE: usize = 4600;

/// α over all pairs of the deduplicated Bohr list, column-major.
#[derive(Clone, Debug)]
pub struct TransitionCoeffs {
    pub bohr: Vec<f64>,
    table: Vec<f64>,
}

impl TransitionCoeffs {
    pub fn from_fn(bohr: &[f64], f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let nb = bohr.len();
        if nb > MAX_BOHR_TABLE {
            return Err(Error::Capacity { what: format!("Bohr table with {nb} frequencies"), limit: MAX_BOHR_TABLE });
        }
        let mut table = vec![0.0; nb * nb];
        for b2 in 0..nb {
            for b1 in 0..=b2 {
                let v = f(bohr[b1], bohr[b2]);
                table[b1 + b2 * nb] = v;
                table[b2 + b1 * nb] = v;
            }
        }
        Ok(TransitionCoeffs { bohr: bohr.to_vec(), table })
    }

    pub fn zeros(bohr: &[f64]) -> Self {
        TransitionCoeffs { bohr: bohr.to_vec(), table: vec![0.0; bohr.len() * bohr.len()] }
    }

    pub fn len(&self) -> usize {
        self.bohr.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bohr.is_empty()
    }

    #[inline]
    pub fn get(&self, b1: usize, b2: usize) -> f64 {
        self.table[b1 + b2 * self.bohr.len()]
    }

    /// Column of the table for fixed second index.
    #[inline]
    pub fn column(&self, b2: usize) -> &[f64] {
        let nb = self.bohr.len();
        &self.table[b2 * nb..(b2 + 1) * nb]
    }
}

pub fn transition_coefficients(spec: &Spectrum, w: &Weight) -> Result<TransitionCoeffs> {
    TransitionCoeffs::from_fn(&spec.bohr, |a, b| w.alpha(a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oft::OftParams;
    use crate::quad::adaptive_real_line;

    /// ∫ γ(ω) f̂(ω-ν1) f̂(ω-ν2) dω by adaptive quadrature.
    fn alpha_oracle(w: &Weight, nu1: f64, nu2: f64) -> f64 {
        let p = OftParams::new(w.sigma).unwrap();
        let mut breaks = vec![nu1, nu2, 0.5 * (nu1 + nu2)];
        match w.kind {
            WeightKind::Metropolis => breaks.push(-w.beta * w.sigma * w.sigma / 2.0),
            WeightKind::Gaussian => breaks.push(-w.omega_gamma.unwrap()),
        }
        adaptive_real_line(|x| w.gamma(x) * p.fhat(x - nu1) * p.fhat(x - nu2), &breaks, 1e-17, 1e-13).unwrap()
    }

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * a.abs().max(b.abs()) + 1e-15
    }

    #[test]
    fn metropolis_closed_form_matches_quadrature() {
        let nus = [-6.0, -2.5, -0.7, 0.0, 0.3, 1.9, 4.0];
        for beta in [0.2, 1.0, 4.0] {
            for sigma in [0.25, 1.0, 2.0] {
                let w = Weight::metropolis(beta, sigma).unwrap();
                for &a in &nus {
                    for &b in &nus {
                        let c = w.alpha(a, b);
                        let o = alpha_oracle(&w, a, b);
                        assert!(close(c, o, 1e-10), "beta={beta} sigma={sigma} nu=({a},{b}): {c} vs {o}");
                    }
                }
            }
        }
    }

    #[test]
    fn gaussian_closed_form_matches_quadrature() {
        for (beta, sigma, og) in [(1.0, 1.0, 1.0), (0.2, 0.5, 0.3), (4.0, 0.25, 0.5)] {
            let w = Weight::gaussian(beta, sigma, og).unwrap();
            assert!((beta * (w.sigma_gamma.unwrap().powi(2) + sigma * sigma) - 2.0 * og).abs() < 1e-12);
            for a in [-3.0, -0.5, 0.0, 0.8, 2.2] {
                for b in [-1.0, 0.0, 1.5] {
                    let c = w.alpha(a, b);
                    let o = alpha_oracle(&w, a, b);
                    assert!(close(c, o, 1e-12), "{c} vs {o}");
                }
            }
        }
    }

    #[test]
    fn golden_value_at_origin() {
        let w = Weight::metropolis(1.0, 1.0).unwrap();
        let o = alpha_oracle(&w, 0.0, 0.0);
        assert!((w.alpha(0.0, 0.0) - o).abs() < 1e-12);
        // 2 Φ(-1/2)
        assert!((w.alpha(0.0, 0.0) - 0.617_075_077_451_974).abs() < 1e-14);
    }

    #[test]
    fn deep_downhill_is_unity() {
        let w = Weight::metropolis(1.0, 0.5).unwrap();
        let nu = -20.0 * 0.5 - 0.25 - 1.0;
        assert!((w.alpha(nu, nu) - 1.0).abs() < 1e-8);
        assert!((alpha_oracle(&w, nu, nu) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn h_is_alpha_times_exponential() {
        for w in [Weight::metropolis(1.3, 0.6).unwrap(), Weight::gaussian(0.7, 1.1, 1.0).unwrap()] {
            for a in [-3.0, -0.4, 0.0, 1.2, 5.0] {
                for b in [-2.0, 0.1, 2.7] {
                    let want = w.alpha(a, b) * (w.beta * (a + b) / 4.0).exp();
                    assert!(close(w.h(a, b), want, 1e-12));
                    assert!(close(w.h(a, b), w.h(-a, -b), 1e-12));
                }
            }
        }
    }

    #[test]
    fn metropolis_h_as_x_integral() {
        use crate::quad::adaptive_upper;
        for (beta, sigma) in [(1.0, 1.0), (0.3, 2.0), (3.0, 0.4)] {
            let w = Weight::metropolis(beta, sigma).unwrap();
            for (a, b) in [(0.0, 0.0), (1.5, -0.5), (-2.0, -3.0), (0.7, 4.0)] {
                let s = a + b;
                let f = |x: f64| 0.5 * (beta / (std::f64::consts::PI * x)).sqrt() * (-beta * s * s / (16.0 * x) - beta * x / 4.0).exp();
                let i = adaptive_upper(f, beta * sigma * sigma / 2.0, 1e-16, 1e-13).unwrap();
                let want = i * (-(a - b) * (a - b) / (8.0 * sigma * sigma)).exp();
                assert!(close(w.h(a, b), want, 1e-10), "{} vs {want}", w.h(a, b));
            }
        }
    }

    #[test]
    fn invalid_gaussian_rejected() {
        assert!(Weight::gaussian(1.0, 1.0, 0.5).is_err());
        assert!(Weight::metropolis(0.0, 1.0).is_err());
        assert!(Weight::metropolis(1.0, -1.0).is_err());
    }

    #[test]
    fn table_symmetry_and_range() {
        let bohr = [-2.0, -0.5, 0.0, 0.5, 2.0];
        let w = Weight::metropolis(2.0, 0.5).unwrap();
        let t = TransitionCoeffs::from_fn(&bohr, |a, b| w.alpha(a, b)).unwrap();
        for i in 0..5 {
            assert!(t.get(i, i) >= 0.0 && t.get(i, i) <= 1.0 + 1e-12);
            for j in 0..5 {
                assert_eq!(t.get(i, j), t.get(j, i));
            }
        }
    }

    proptest::proptest! {
        #[test]
        fn metropolis_diagonal_in_unit_interval(nu in -30.0f64..30.0, beta in 0.05f64..5.0, sigma in 0.05f64..3.0) {
            let w = Weight::metropolis(beta, sigma).unwrap();
            let a = w.alpha(nu, nu);
            proptest::prop_assert!(a >= 0.0 && a <= 1.0 + 1e-12);
            proptest::prop_assert!(w.h(nu, nu).is_finite());
        }
    }
}
