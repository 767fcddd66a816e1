//! Exact arithmetic helpers and the fraction-free linear solver.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `n!` as a big integer.
pub fn factorial(n: u64) -> BigInt {
    (2..=n).fold(BigInt::one(), |acc, k| acc * k)
}

/// Exact rational power. Zero to a negative power is an error.
pub fn rat_pow(base: &BigRational, exp: i64) -> Result<BigRational> {
    base.int_pow(exp)
}

/// Number of matchings (including the empty one) on `n` labelled points:
/// `sum_k C(n, 2k) (2k-1)!!`. Upper bound on the structure count of any
/// `n`-base system.
pub fn matching_upper_bound(n: u64) -> BigInt {
    // a(n) = a(n-1) + (n-1) a(n-2)
    let (mut prev, mut cur) = (BigInt::one(), BigInt::one());
    for k in 2..=n {
        let next = &cur + &prev * (k - 1);
        prev = cur;
        cur = next;
    }
    cur
}

/// A square system `sum_i x_i * node_i^j = rhs_j` for `j = 1..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct VandermondeSystem<T> {
    pub nodes: Vec<T>,
    pub rhs: Vec<T>,
}

impl<T: Scalar> VandermondeSystem<T> {
    pub fn new(nodes: Vec<T>, rhs: Vec<T>) -> Result<Self> {
        if nodes.len() != rhs.len() {
            return Err(Error::InvalidArgument(format!(
                "{} nodes but {} right-hand sides",
                nodes.len(),
                rhs.len()
            )));
        }
        for (a, i) in nodes.iter().zip(0..) {
            if a.is_zero() {
                return Err(Error::Singular(format!("node {i} is zero")));
            }
            if nodes[..i].iter().any(|b| b == a) {
                return Err(Error::Singular(format!("duplicate node {}", a.render())));
            }
        }
        Ok(Self { nodes, rhs })
    }

    /// Row `j` (1-based power) is `node_1^j .. node_N^j | rhs_j`.
    pub fn augmented_matrix(&self) -> Vec<Vec<T>> {
        let n = self.nodes.len();
        let mut powers: Vec<T> = self.nodes.clone();
        let mut rows = Vec::with_capacity(n);
        for j in 0..n {
            let mut row = powers.clone();
            row.push(self.rhs[j].clone());
            rows.push(row);
            for (p, x) in powers.iter_mut().zip(&self.nodes) {
                *p = p.clone() * x.clone();
            }
        }
        rows
    }

    pub fn solve(&self) -> Result<Vec<T>> {
        let mut rows = self.augmented_matrix();
        for row in rows.iter_mut() {
            T::clear_denominators(row);
        }
        bareiss_solve(rows)
    }
}

/// Solves the Vandermonde system given by `nodes` and `rhs`.
pub fn solve_vandermonde<T: Scalar>(nodes: Vec<T>, rhs: Vec<T>) -> Result<Vec<T>> {
    VandermondeSystem::new(nodes, rhs)?.solve()
}

/// Fraction-free (Bareiss) elimination on an `N x (N+1)` augmented matrix,
/// followed by back substitution.
///
/// With integral entries every division in the elimination is exact, so the
/// exact scalar never leaves the integers until back substitution.
pub fn bareiss_solve<T: Scalar>(mut m: Vec<Vec<T>>) -> Result<Vec<T>> {
    let n = m.len();
    if m.iter().any(|row| row.len() != n + 1) {
        return Err(Error::InvalidArgument("matrix is not N x (N+1)".into()));
    }
    let mut prev = T::one();
    for k in 0..n {
        let pivot = (k..n)
            .filter(|&r| !m[r][k].is_zero())
            .max_by(|&a, &b| {
                m[a][k]
                    .abs()
                    .partial_cmp(&m[b][k].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
                    // earliest row wins ties
                    .then(b.cmp(&a))
            })
            .ok_or_else(|| Error::Singular(format!("no pivot in column {k}")))?;
        m.swap(k, pivot);
        for i in k + 1..n {
            for j in k + 1..=n {
                let v = (m[i][j].clone() * m[k][k].clone() - m[i][k].clone() * m[k][j].clone())
                    / prev.clone();
                m[i][j] = v;
            }
            m[i][k] = T::zero();
        }
        prev = m[k][k].clone();
    }
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let mut acc = m[i][n].clone();
        for j in i + 1..n {
            acc = acc - m[i][j].clone() * x[j].clone();
        }
        x[i] = acc / m[i][i].clone();
    }
    Ok(x)
}
