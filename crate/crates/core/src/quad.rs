//! Gauss-Legendre rules and an adaptive Gauss-Kronrod integrator.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * p - pm) / (z * z - 1.0);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        if n == 1 {
            return (vec![0.0], vec![2.0]);
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Composite Gauss-Legendre on [a, b] split into `panels`.
pub fn gl_integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize, panels: usize) -> f64 {
    let (x, w) = gauss_legendre(n);
    let h = (b - a) / panels as f64;
    let mut s = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * h;
        let mid = lo + 0.5 * h;
        for (xi, wi) in x.iter().zip(&w) {
            s += wi * f(mid + 0.5 * h * xi);
        }
    }
    s * 0.5 * h
}

const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077208980220123,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];
const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[10] * fc;
    let mut g = 0.0;
    for j in 0..10 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss-Kronrod (21-point) on a finite interval.
pub fn adaptive<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<f64> {
    let mut stack = vec![(a, b, gk21(&f, a, b))];
    let mut total = 0.0;
    let mut budget = 200_000usize;
    let mut est = stack[0].2 .0;
    while let Some((lo, hi, (v, e))) = stack.pop() {
        let tol = abs_tol.max(rel_tol * est.abs());
        let width_frac = (hi - lo) / (b - a);
        if e <= tol * width_frac.max(1e-12) || hi - lo < 1e-14 * (b - a).abs().max(1.0) {
            total += v;
            continue;
        }
        if budget == 0 {
            return Err(Error::QuadratureNonConvergence(format!("interval [{lo:.6e}, {hi:.6e}] error {e:.3e}")));
        }
        budget -= 1;
        let mid = 0.5 * (lo + hi);
        let l = gk21(&f, lo, mid);
        let r = gk21(&f, mid, hi);
        est += l.0 + r.0 - v;
        stack.push((lo, mid, l));
        stack.push((mid, hi, r));
    }
    Ok(total)
}

/// ∫_a^∞ f via x = a + u/(1-u).
pub fn adaptive_upper<F: Fn(f64) -> f64>(f: F, a: f64, abs_tol: f64, rel_tol: f64) -> Result<f64> {
    adaptive(
        |u| {
            if u >= 1.0 {
                return 0.0;
            }
            let x = a + u / (1.0 - u);
            let j = 1.0 / ((1.0 - u) * (1.0 - u));
            let v = f(x) * j;
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        abs_tol,
        rel_tol,
    )
}

/// ∫_{-∞}^b f
pub fn adaptive_lower<F: Fn(f64) -> f64>(f: F, b: f64, abs_tol: f64, rel_tol: f64) -> Result<f64> {
    adaptive_upper(|x| f(2.0 * b - x), b, abs_tol, rel_tol)
}

/// ∫ over the real line with optional interior break points.
pub fn adaptive_real_line<F: Fn(f64) -> f64>(f: F, breaks: &[f64], abs_tol: f64, rel_tol: f64) -> Result<f64> {
    let mut pts: Vec<f64> = breaks.to_vec();
    pts.sort_by(|a, b| a.total_cmp(b));
    pts.dedup();
    if pts.is_empty() {
        pts.push(0.0);
    }
    let mut s = adaptive_lower(&f, pts[0], abs_tol, rel_tol)?;
    for w in pts.windows(2) {
        s += adaptive(&f, w[0], w[1], abs_tol, rel_tol)?;
    }
    s += adaptive_upper(&f, *pts.last().unwrap(), abs_tol, rel_tol)?;
    Ok(s)
}
