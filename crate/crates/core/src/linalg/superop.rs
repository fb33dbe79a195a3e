use std::fmt;
use std::sync::Arc;

use faer::{c64, Mat};

use crate::linalg::ops::{from_frame, to_frame, unvec, vec_of};

pub type Action = Arc<dyn Fn(&Mat<c64>) -> Mat<c64> + Send + Sync>;

/// Linear map on d x d operators.
///
/// Both representations act in an optional frame `U`: a computational-basis
/// input X is mapped to U† X U, acted on, and mapped back. The dense matrix
/// uses column stacking. `kms` holds the diagonal of ρ^{1/4}(·)ρ^{1/4} in the
/// same frame when that similarity is diagonal there.
#[derive(Clone)]
pub struct SuperOp {
    dim: usize,
    frame: Option<Arc<Mat<c64>>>,
    dense: Option<Arc<Mat<c64>>>,
    action: Option<Action>,
    adjoint_action: Option<Action>,
    kms: Option<Arc<Vec<f64>>>,
}

impl fmt::Debug for SuperOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SuperOp")
            .field("dim", &self.dim)
            .field("framed", &self.frame.is_some())
            .field("dense", &self.dense.is_some())
            .field("action", &self.action.is_some())
            .finish()
    }
}

impl SuperOp {
    pub fn from_dense(dim: usize, m: Mat<c64>) -> Self {
        assert_eq!(m.nrows(), dim * dim);
        SuperOp { dim, frame: None, dense: Some(Arc::new(m)), action: None, adjoint_action: None, kms: None }
    }

    pub fn from_action(dim: usize, action: Action, adjoint: Option<Action>) -> Self {
        SuperOp { dim, frame: None, dense: None, action: Some(action), adjoint_action: adjoint, kms: None }
    }

    pub fn zero(dim: usize) -> Self {
        let d2 = dim * dim;
        SuperOp::from_dense(dim, Mat::zeros(d2, d2)).with_kms(vec![1.0; d2])
    }

    pub fn identity(dim: usize) -> Self {
        let d2 = dim * dim;
        SuperOp::from_dense(dim, Mat::identity(d2, d2)).with_kms(vec![1.0; d2])
    }

    pub fn with_frame(mut self, u: Arc<Mat<c64>>) -> Self {
        self.frame = Some(u);
        self
    }

    pub fn with_kms(mut self, s: Vec<f64>) -> Self {
        assert_eq!(s.len(), self.dim * self.dim);
        self.kms = Some(Arc::new(s));
        self
    }

    pub fn with_dense(mut self, m: Mat<c64>) -> Self {
        self.dense = Some(Arc::new(m));
        self
    }

    pub fn with_action(mut self, a: Action, adjoint: Option<Action>) -> Self {
        self.action = Some(a);
        self.adjoint_action = adjoint;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dense(&self) -> Option<&Mat<c64>> {
        self.dense.as_deref()
    }

    pub fn dense_arc(&self) -> Option<Arc<Mat<c64>>> {
        self.dense.clone()
    }

    pub fn frame(&self) -> Option<&Mat<c64>> {
        self.frame.as_deref()
    }

    pub fn frame_arc(&self) -> Option<Arc<Mat<c64>>> {
        self.frame.clone()
    }

    pub fn kms(&self) -> Option<&[f64]> {
        self.kms.as_deref().map(|v| v.as_slice())
    }

    pub fn has_action(&self) -> bool {
        self.action.is_some()
    }

    pub fn to_frame(&self, x: &Mat<c64>) -> Mat<c64> {
        match &self.frame {
            Some(u) => to_frame(u, x),
            None => x.clone(),
        }
    }

    pub fn from_frame(&self, x: &Mat<c64>) -> Mat<c64> {
        match &self.frame {
            Some(u) => from_frame(u, x),
            None => x.clone(),
        }
    }

    pub fn apply_dense_in_frame(&self, x: &Mat<c64>) -> Option<Mat<c64>> {
        let m = self.dense.as_ref()?;
        let v = vec_of(x);
        let d2 = v.len();
        let mut out = vec![c64::new(0.0, 0.0); d2];
        for (c, &vc) in v.iter().enumerate() {
            if vc == c64::new(0.0, 0.0) {
                continue;
            }
            let col = m.col(c);
            for r in 0..d2 {
                out[r] += col[r] * vc;
            }
        }
        Some(unvec(&out, self.dim))
    }

    pub fn apply_action_in_frame(&self, x: &Mat<c64>) -> Option<Mat<c64>> {
        self.action.as_ref().map(|a| a(x))
    }

    /// Prefers the structured action, falls back to the dense matrix.
    pub fn apply_in_frame(&self, x: &Mat<c64>) -> Mat<c64> {
        self.apply_action_in_frame(x)
            .or_else(|| self.apply_dense_in_frame(x))
            .expect("superoperator has no representation")
    }

    pub fn apply(&self, x: &Mat<c64>) -> Mat<c64> {
        self.from_frame(&self.apply_in_frame(&self.to_frame(x)))
    }

    /// Hilbert-Schmidt adjoint applied in the frame.
    pub fn apply_adjoint_in_frame(&self, x: &Mat<c64>) -> Mat<c64> {
        if let Some(a) = &self.adjoint_action {
            return a(x);
        }
        let m = self.dense.as_ref().expect("adjoint needs a dense matrix or adjoint action");
        let v = vec_of(x);
        let d2 = v.len();
        let out: Vec<c64> = (0..d2)
            .map(|c| {
                let col = m.col(c);
                let mut s = c64::new(0.0, 0.0);
                for r in 0..d2 {
                    s += col[r].conj() * v[r];
                }
                s
            })
            .collect();
        unvec(&out, self.dim)
    }

    pub fn apply_adjoint(&self, x: &Mat<c64>) -> Mat<c64> {
        self.from_frame(&self.apply_adjoint_in_frame(&self.to_frame(x)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ops::{random_complex, trace};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_and_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let x = random_complex(4, 4, &mut rng);
        assert_eq!(SuperOp::zero(4).apply(&x).norm_max(), 0.0);
        assert_eq!((&SuperOp::identity(4).apply(&x) - &x).norm_max(), 0.0);
    }

    #[test]
    fn dense_adjoint_is_hilbert_schmidt_adjoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = random_complex(9, 9, &mut rng);
        let op = SuperOp::from_dense(3, m);
        let x = random_complex(3, 3, &mut rng);
        let y = random_complex(3, 3, &mut rng);
        let lhs = trace(&(x.adjoint() * op.apply(&y)));
        let rhs = trace(&(op.apply_adjoint(&x).adjoint() * &y));
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn framed_action_matches_conjugation() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_complex(2, 2, &mut rng);
        let u = {
            let q = random_complex(2, 2, &mut rng).qr();
            q.compute_Q()
        };
        let ad = a.clone();
        let op = SuperOp::from_action(2, Arc::new(move |x: &Mat<c64>| &ad * x), None).with_frame(Arc::new(u.clone()));
        let x = random_complex(2, 2, &mut rng);
        let want = &u * &a * u.adjoint() * &x;
        assert!((&op.apply(&x) - &want).norm_max() < 1e-12);
    }
}
