//! Dense linear-algebra helpers on top of nalgebra's SVD.

use nalgebra::{DMatrix, DVector, SVD};

use crate::error::{Error, Result};

/// Rank-k truncated SVD: `(U_k, sigma_k, V_k^T)`, singular values descending.
#[derive(Debug, Clone)]
pub struct TruncatedSvd {
    pub u: DMatrix<f64>,
    pub sigma: DVector<f64>,
    pub v_t: DMatrix<f64>,
    /// Every singular value of the input, descending.
    pub all_sigma: Vec<f64>,
}

pub fn truncated_svd(m: &DMatrix<f64>, k: usize) -> Result<TruncatedSvd> {
    let (r, c) = m.shape();
    if k == 0 || k > r.min(c) {
        return Err(Error::RankTooLarge { k, rows: r, cols: c });
    }
    let svd = SVD::new(m.clone(), true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^T");
    Ok(TruncatedSvd {
        u: u.columns(0, k).into_owned(),
        sigma: svd.singular_values.rows(0, k).into_owned(),
        v_t: v_t.rows(0, k).into_owned(),
        all_sigma: svd.singular_values.iter().copied().collect(),
    })
}

pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Number of singular values above `rel_tol * sigma_max`.
pub fn numerical_rank(sigma: &[f64], rel_tol: f64) -> usize {
    let max = sigma.iter().copied().fold(0.0, f64::max);
    if max <= 0.0 {
        return 0;
    }
    sigma.iter().filter(|&&s| s > rel_tol * max).count()
}

/// Position of the largest ratio `sigma[i-1] / sigma[i]` among the values
/// above `rel_tol * sigma_max`; the full count if there is no drop.
pub fn gap_rank(sigma: &[f64], rel_tol: f64) -> usize {
    let n = numerical_rank(sigma, rel_tol);
    if n < 2 {
        return n;
    }
    let mut best = (n, 1.0);
    for i in 1..n {
        let ratio = sigma[i - 1] / sigma[i];
        if ratio > best.1 {
            best = (i, ratio);
        }
    }
    best.0
}

/// Moore-Penrose pseudo-inverse; singular values at or below
/// `rel_cutoff * sigma_max` are treated as zero.
pub fn pseudo_inverse(m: &DMatrix<f64>, rel_cutoff: f64) -> DMatrix<f64> {
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return DMatrix::zeros(c, r);
    }
    let svd = SVD::new(m.clone(), true, true);
    let max = svd.singular_values.max();
    if max <= 0.0 {
        return DMatrix::zeros(c, r);
    }
    let cut = rel_cutoff * max;
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^T");
    let mut out = DMatrix::zeros(c, r);
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > cut {
            out += (v_t.row(i).transpose() * u.column(i).transpose()) / s;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn matrix() -> impl Strategy<Value = DMatrix<f64>> {
        (1usize..6, 1usize..6).prop_flat_map(|(r, c)| {
            proptest::collection::vec(-5.0f64..5.0, r * c).prop_map(move |v| DMatrix::from_vec(r, c, v))
        })
    }

    #[test]
    fn rank_of_outer_product() {
        let a = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let b = DVector::from_vec(vec![1.0, -1.0]);
        let m = &a * b.transpose();
        assert_eq!(numerical_rank(&singular_values(&m), 1e-10), 1);
        assert_eq!(numerical_rank(&[0.0, 0.0], 1e-6), 0);
    }

    #[test]
    fn gap_rank_finds_the_drop() {
        assert_eq!(gap_rank(&[9.0, 4.0, 0.4, 0.3, 0.2], 1e-6), 2);
        assert_eq!(gap_rank(&[1.0, 1.0, 1.0], 1e-6), 3);
        assert_eq!(gap_rank(&[1.0, 0.5, 1e-9], 1e-6), 1);
        assert_eq!(gap_rank(&[2.0], 1e-6), 1);
    }

    #[test]
    fn truncation_rejects_large_rank() {
        let m = DMatrix::<f64>::identity(3, 2);
        assert!(matches!(truncated_svd(&m, 3), Err(Error::RankTooLarge { .. })));
        assert!(matches!(truncated_svd(&m, 0), Err(Error::RankTooLarge { .. })));
        let t = truncated_svd(&m, 2).unwrap();
        assert_eq!(t.u.shape(), (3, 2));
        assert_eq!(t.v_t.shape(), (2, 2));
    }

    proptest! {
        #[test]
        fn pinv_satisfies_penrose(m in matrix()) {
            let p = pseudo_inverse(&m, 1e-10);
            let scale = 1.0 + m.amax();
            prop_assert!((&m * &p * &m - &m).amax() < 1e-8 * scale * scale);
            prop_assert!((&p * &m * &p - &p).amax() < 1e-6 * (1.0 + p.amax()).powi(3));
        }

        #[test]
        fn truncated_svd_reconstructs_full_rank(m in matrix()) {
            let k = m.nrows().min(m.ncols());
            let t = truncated_svd(&m, k).unwrap();
            let back = &t.u * DMatrix::from_diagonal(&t.sigma) * &t.v_t;
            prop_assert!((back - &m).amax() < 1e-9 * (1.0 + m.amax()));
            prop_assert!(t.sigma.iter().zip(t.sigma.iter().skip(1)).all(|(a, b)| a >= b));
        }
    }
}
