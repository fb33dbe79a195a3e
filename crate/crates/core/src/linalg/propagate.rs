//! e^{tL}[X] by two routes: the KMS spectral calculus (dense) and an
//! adaptive Dormand-Prince integrator on the structured action.

use faer::{c64, Mat};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::kms::KmsSpectral;
use crate::linalg::superop::SuperOp;
use crate::quad::gauss_legendre;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Spectral,
    Ode,
}

#[derive(Clone, Copy, Debug)]
pub struct OdeOptions {
    pub tol: f64,
    pub h0: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions { tol: 1e-9, h0: 1e-3, max_steps: 2_000_000 }
    }
}

// Dormand-Prince 5(4) tableau
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] =
    [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];

fn axpy(y: &Mat<c64>, terms: &[(f64, &Mat<c64>)]) -> Mat<c64> {
    let mut out = y.clone();
    for (w, k) in terms {
        if *w != 0.0 {
            out += faer::Scale(c64::new(*w, 0.0)) * *k;
        }
    }
    out
}

/// Integrate dy/dt = f(y) from 0 to t with local error control.
pub fn dopri<F>(f: F, y0: &Mat<c64>, t: f64, opts: OdeOptions) -> Result<Mat<c64>>
where
    F: Fn(&Mat<c64>) -> Mat<c64>,
{
    if t < 0.0 {
        return Err(Error::InvalidParameter(format!("negative time {t}")));
    }
    let mut y = y0.clone();
    if t == 0.0 {
        return Ok(y);
    }
    let mut s = 0.0;
    let mut h = opts.h0.min(t);
    let mut k1 = f(&y);
    let mut steps = 0usize;
    let hmin = 1e-14 * t.max(1.0);
    while s < t {
        if steps >= opts.max_steps {
            return Err(Error::Stiffness { t: s, h, detail: format!("step budget {} exhausted", opts.max_steps) });
        }
        steps += 1;
        h = h.min(t - s);
        let mut k: Vec<Mat<c64>> = Vec::with_capacity(7);
        k.push(k1.clone());
        for i in 1..7 {
            let terms: Vec<(f64, &Mat<c64>)> = (0..i).map(|j| (h * A[i][j], &k[j])).collect();
            let yi = axpy(&y, &terms);
            k.push(f(&yi));
        }
        let t5: Vec<(f64, &Mat<c64>)> = (0..7).map(|j| (h * B5[j], &k[j])).collect();
        let y5 = axpy(&y, &t5);
        let mut err: f64 = 0.0;
        for c in 0..y.ncols() {
            for r in 0..y.nrows() {
                let mut e = c64::new(0.0, 0.0);
                for j in 0..7 {
                    e += k[j][(r, c)] * (h * (B5[j] - B4[j]));
                }
                let sc = opts.tol * (1.0 + y5[(r, c)].norm().max(y[(r, c)].norm()));
                let q = e.norm() / sc;
                err = if q.is_nan() || !y5[(r, c)].norm().is_finite() { f64::INFINITY } else { err.max(q) };
            }
        }
        if !err.is_finite() {
            err = 1e10;
        }
        if err <= 1.0 {
            s += h;
            y = y5;
            k1 = k.pop().unwrap();
        }
        let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= fac;
        if h < hmin && s < t {
            return Err(Error::Stiffness { t: s, h, detail: "step size underflow".into() });
        }
    }
    Ok(y)
}

/// e^{tL}[x0] in the computational basis.
pub fn propagate(l: &SuperOp, x0: &Mat<c64>, t: f64, backend: Backend) -> Result<Mat<c64>> {
    if t < 0.0 {
        return Err(Error::InvalidParameter(format!("negative time {t}")));
    }
    if t == 0.0 {
        return Ok(x0.clone());
    }
    match backend {
        Backend::Spectral => Ok(KmsSpectral::new(l)?.propagate(x0, t)),
        Backend::Ode => {
            let y0 = l.to_frame(x0);
            let y = dopri(|y| l.apply_in_frame(y), &y0, t, OdeOptions::default())?;
            Ok(l.from_frame(&y))
        }
    }
}

/// e^{tL†}[x0] by the ODE route.
pub fn propagate_heisenberg_ode(l: &SuperOp, x0: &Mat<c64>, t: f64) -> Result<Mat<c64>> {
    let y0 = l.to_frame(x0);
    let y = dopri(|y| l.apply_adjoint_in_frame(y), &y0, t, OdeOptions::default())?;
    Ok(l.from_frame(&y))
}

/// (1/t) ∫_0^t e^{sL}[x] ds by Gauss-Legendre in s over ODE-propagated
/// states. Returns the estimate with the doubled rule and the change against
/// `nodes` points.
pub fn time_average_ode(l: &SuperOp, x: &Mat<c64>, t: f64, nodes: usize) -> Result<(Mat<c64>, f64)> {
    average_ode(l, x, t, nodes, false)
}

/// (1/t) ∫_0^t e^{sL†}[x] ds, as above.
pub fn time_average_ode_heisenberg(l: &SuperOp, x: &Mat<c64>, t: f64, nodes: usize) -> Result<(Mat<c64>, f64)> {
    average_ode(l, x, t, nodes, true)
}

fn average_ode(l: &SuperOp, x: &Mat<c64>, t: f64, nodes: usize, heis: bool) -> Result<(Mat<c64>, f64)> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("time average needs t > 0, got {t}")));
    }
    let rhs = |v: &Mat<c64>| if heis { l.apply_adjoint_in_frame(v) } else { l.apply_in_frame(v) };
    let rule = |m: usize| -> Result<Mat<c64>> {
        let (xs, ws) = gauss_legendre(m);
        let mut pts: Vec<(f64, f64)> = xs.iter().zip(&ws).map(|(&x, &w)| (0.5 * t * (x + 1.0), 0.5 * w)).collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut y = l.to_frame(x);
        let mut s = 0.0;
        let mut acc = Mat::<c64>::zeros(y.nrows(), y.ncols());
        for (si, wi) in pts {
            y = dopri(&rhs, &y, si - s, OdeOptions::default())?;
            s = si;
            acc += faer::Scale(c64::new(wi, 0.0)) * &y;
        }
        Ok(acc)
    };
    let a = rule(nodes)?;
    let b = rule(2 * nodes)?;
    let change = (&a - &b).norm_l2() / b.norm_l2().max(1e-300);
    Ok((l.from_frame(&b), change))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ops::random_complex;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    #[test]
    fn scalar_decay() {
        let y0 = Mat::from_fn(1, 1, |_, _| c64::new(1.0, 0.0));
        let y = dopri(|y| faer::Scale(c64::new(-2.0, 1.0)) * y, &y0, 1.5, OdeOptions::default()).unwrap();
        let want = (c64::new(-2.0, 1.0) * 1.5).exp();
        assert!((y[(0, 0)] - want).norm() < 1e-8);
    }

    #[test]
    fn zero_time_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let x = random_complex(2, 2, &mut rng);
        let op = SuperOp::zero(2);
        for b in [Backend::Spectral, Backend::Ode] {
            assert_eq!((&propagate(&op, &x, 0.0, b).unwrap() - &x).norm_max(), 0.0);
            assert!((&propagate(&op, &x, 3.0, b).unwrap() - &x).norm_max() < 1e-14);
        }
    }

    #[test]
    fn stiff_problem_reports_underflow() {
        let op = SuperOp::from_action(1, Arc::new(|y: &Mat<c64>| faer::Scale(c64::new(-1e300, 0.0)) * y), None);
        let y0 = Mat::from_fn(1, 1, |_, _| c64::new(1.0, 0.0));
        let r = propagate(&op, &y0, 1.0, Backend::Ode);
        assert!(matches!(r, Err(Error::Stiffness { .. })));
    }
}
