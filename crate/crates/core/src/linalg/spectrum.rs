use faer::{c64, Mat, Side};

use crate::error::{Error, Result};
use crate::linalg::ops::{hermiticity_defect, op_norm};

/// Eigen-decomposition of a Hermitian matrix with its deduplicated Bohr
/// frequencies.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub energies: Vec<f64>,
    /// columns are eigenvectors
    pub vectors: Mat<c64>,
    /// ascending, sign-symmetric, contains 0
    pub bohr: Vec<f64>,
    /// `bohr_index[i + j * d]` is the index of E_i - E_j in `bohr`
    pub bohr_index: Vec<u32>,
    pub dedup_tol: f64,
    pub norm: f64,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    #[inline]
    pub fn bohr_of(&self, i: usize, j: usize) -> usize {
        self.bohr_index[i + j * self.dim()] as usize
    }

    /// Index of ν = 0 in the Bohr list.
    pub fn zero_index(&self) -> usize {
        self.bohr.len() / 2
    }

    /// (i, j) pairs with E_i - E_j in the cluster `b`.
    pub fn bohr_pairs(&self, b: usize) -> Vec<(usize, usize)> {
        let d = self.dim();
        let mut out = Vec::new();
        for j in 0..d {
            for i in 0..d {
                if self.bohr_of(i, j) == b {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn reconstruct(&self) -> Mat<c64> {
        let u = &self.vectors;
        let d = self.dim();
        let ud = Mat::from_fn(d, d, |r, c| u[(r, c)] * self.energies[c]);
        &ud * u.adjoint()
    }

    pub fn min_energy(&self) -> f64 {
        self.energies[0]
    }
}

pub fn hermitian_eig(m: &Mat<c64>) -> Result<Spectrum> {
    let d = m.nrows();
    if d == 0 || m.ncols() != d {
        return Err(Error::InvalidSize(format!("need a square nonempty matrix, got {}x{}", d, m.ncols())));
    }
    let defect = hermiticity_defect(m);
    if defect > 1e-10 {
        return Err(Error::NumericDomain(format!("matrix is not Hermitian (defect {defect:.3e})")));
    }
    let e = m.self_adjoint_eigen(Side::Lower).map_err(|e| Error::NumericDomain(format!("{e:?}")))?;
    let s = e.S();
    let energies: Vec<f64> = (0..d).map(|i| s[i].re).collect();
    let vectors = e.U().to_owned();
    let norm = op_norm(m);
    let dedup_tol = 1e-9 * norm.max(1.0);
    let (bohr, bohr_index) = bohr_clusters(&energies, dedup_tol);
    Ok(Spectrum { energies, vectors, bohr, bohr_index, dedup_tol, norm })
}

/// Cluster |E_i - E_j| by single linkage with gap `tol`, then mirror.
fn bohr_clusters(e: &[f64], tol: f64) -> (Vec<f64>, Vec<u32>) {
    let d = e.len();
    let mut diffs: Vec<(f64, usize)> = Vec::with_capacity(d * d);
    for j in 0..d {
        for i in 0..d {
            diffs.push(((e[i] - e[j]).abs(), i + j * d));
        }
    }
    diffs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut cluster_of = vec![0usize; d * d];
    let mut reps: Vec<(f64, usize)> = Vec::new();
    let mut prev = f64::NEG_INFINITY;
    for &(v, idx) in &diffs {
        if reps.is_empty() || v - prev > tol {
            reps.push((0.0, 0));
        }
        let last = reps.len() - 1;
        reps[last].0 += v;
        reps[last].1 += 1;
        cluster_of[idx] = last;
        prev = v;
    }
    // the first cluster always holds the diagonal zeros
    let mut mags: Vec<f64> = reps.iter().map(|(s, c)| s / *c as f64).collect();
    mags[0] = 0.0;
    let k = mags.len() - 1;
    let mut bohr = Vec::with_capacity(2 * k + 1);
    for m in mags[1..].iter().rev() {
        bohr.push(-m);
    }
    bohr.extend(mags.iter().copied());
    let mut index = vec![0u32; d * d];
    for j in 0..d {
        for i in 0..d {
            let c = cluster_of[i + j * d];
            index[i + j * d] = if c == 0 {
                k as u32
            } else if e[i] > e[j] {
                (k + c) as u32
            } else {
                (k - c) as u32
            };
        }
    }
    (bohr, index)
}
