//! Operators of the form `sum_i A_{i,1} ⊗ ... ⊗ A_{i,d}`.

use nalgebra::DMatrixView;

use crate::error::{TtError, TtResult};
use crate::linalg::{self, Mat};
use crate::sum_round::TTSum;
use crate::tensor::{Core, DenseTensor, TTTensor};

/// One square factor `A_{i,k}`, stored in the cheapest form that represents it.
#[derive(Debug, Clone, PartialEq)]
pub enum ModeFactor {
    Identity(usize),
    Diagonal(Vec<f64>),
    Dense(Mat),
}

impl ModeFactor {
    pub fn size(&self) -> usize {
        match self {
            ModeFactor::Identity(n) => *n,
            ModeFactor::Diagonal(v) => v.len(),
            ModeFactor::Dense(m) => m.nrows(),
        }
    }

    pub fn to_dense(&self) -> Mat {
        match self {
            ModeFactor::Identity(n) => Mat::identity(*n, *n),
            ModeFactor::Diagonal(v) => Mat::from_diagonal(&nalgebra::DVector::from_column_slice(v)),
            ModeFactor::Dense(m) => m.clone(),
        }
    }

    /// Mode product of a `left x n x right` array (first index fastest) with this factor.
    fn apply_to(&self, data: &[f64], left: usize, right: usize) -> Vec<f64> {
        let n = self.size();
        match self {
            ModeFactor::Identity(_) => data.to_vec(),
            ModeFactor::Diagonal(diag) => {
                let mut out = data.to_vec();
                for (idx, v) in out.iter_mut().enumerate() {
                    *v *= diag[(idx / left) % n];
                }
                out
            }
            ModeFactor::Dense(a) => {
                let block = left * n;
                let mut out = Vec::with_capacity(data.len());
                for g in 0..right {
                    // slab g is the left x n matrix B_g; result slab is B_g A^T
                    let b = DMatrixView::from_slice(&data[g * block..(g + 1) * block], left, n);
                    out.extend_from_slice(linalg::matmul_nt(&b, a).as_slice());
                }
                out
            }
        }
    }
}

/// A Kronecker-sum operator on tensors with fixed mode sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct KroneckerSumOperator {
    terms: Vec<Vec<ModeFactor>>,
}

impl KroneckerSumOperator {
    pub fn new(terms: Vec<Vec<ModeFactor>>) -> TtResult<Self> {
        let first = terms.first().ok_or(TtError::EmptyTermList)?;
        if first.is_empty() {
            return Err(TtError::InvalidConfig(
                "operator terms need at least one factor".into(),
            ));
        }
        let sizes: Vec<usize> = first.iter().map(ModeFactor::size).collect();
        for (i, term) in terms.iter().enumerate() {
            let s: Vec<usize> = term.iter().map(ModeFactor::size).collect();
            if s != sizes {
                return Err(TtError::ModeSizeMismatch(format!(
                    "term {} has mode sizes {s:?}, term 1 has {sizes:?}",
                    i + 1
                )));
            }
            for f in term {
                if let ModeFactor::Dense(m) = f {
                    if !m.is_square() {
                        return Err(TtError::InvalidConfig(format!(
                            "factor of shape {:?} is not square",
                            m.shape()
                        )));
                    }
                }
            }
        }
        Ok(Self { terms })
    }

    pub fn terms(&self) -> &[Vec<ModeFactor>] {
        &self.terms
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn mode_sizes(&self) -> Vec<usize> {
        self.terms[0].iter().map(ModeFactor::size).collect()
    }

    fn check_modes(&self, modes: &[usize]) -> TtResult<()> {
        if modes != self.mode_sizes().as_slice() {
            return Err(TtError::ModeSizeMismatch(format!(
                "operator acts on {:?}, tensor has {modes:?}",
                self.mode_sizes()
            )));
        }
        Ok(())
    }

    /// Term `i` applied core-wise to `x`; ranks are unchanged.
    pub fn apply_term(&self, i: usize, x: &TTTensor) -> TtResult<TTTensor> {
        self.check_modes(&x.mode_sizes())?;
        let cores = x
            .cores()
            .iter()
            .zip(&self.terms[i])
            .map(|(c, f)| {
                let (rl, n, rr) = c.shape();
                Core::new(rl, n, rr, f.apply_to(c.data(), rl, rr))
            })
            .collect::<TtResult<Vec<_>>>()?;
        TTTensor::new(cores)
    }

    /// `A x` as an unrounded sum with one term per Kronecker product.
    pub fn apply(&self, x: &TTTensor) -> TtResult<TTSum> {
        let terms = (0..self.terms.len())
            .map(|i| self.apply_term(i, x))
            .collect::<TtResult<Vec<_>>>()?;
        TTSum::new(terms)
    }

    /// Dense matrix-free application, used to verify TT results.
    pub fn apply_dense(&self, x: &DenseTensor) -> TtResult<DenseTensor> {
        self.check_modes(x.mode_sizes())?;
        let modes = self.mode_sizes();
        let mut acc = vec![0.0; x.data().len()];
        for term in &self.terms {
            let mut cur = x.data().to_vec();
            for (k, f) in term.iter().enumerate() {
                let left: usize = modes[..k].iter().product();
                let right: usize = modes[k + 1..].iter().product();
                cur = f.apply_to(&cur, left, right);
            }
            for (a, c) in acc.iter_mut().zip(&cur) {
                *a += c;
            }
        }
        DenseTensor::new(modes, acc)
    }
}
