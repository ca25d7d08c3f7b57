//! Small dense linear-algebra helpers: determinants via LU with partial
//! pivoting. Matrices here are tiny (the state dimension), so no attempt is
//! made at blocking or allocation reuse beyond what the callers do.

/// Determinant of a square matrix given as rows. Partial pivoting keeps the
/// elimination stable; a zero pivot column means the matrix is exactly
/// singular and the determinant is returned as exactly `0.0`.
pub(crate) fn det(mut m: Vec<Vec<f64>>) -> f64 {
    let n = m.len();
    debug_assert!(m.iter().all(|row| row.len() == n));
    let mut sign = 1.0;
    let mut product = 1.0;
    for k in 0..n {
        let (pivot_row, pivot_abs) = (k..n)
            .map(|r| (r, m[r][k].abs()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("non-empty pivot range");
        if pivot_abs == 0.0 {
            return 0.0;
        }
        if pivot_row != k {
            m.swap(pivot_row, k);
            sign = -sign;
        }
        let pivot = m[k][k];
        product *= pivot;
        let (upper, lower) = m.split_at_mut(k + 1);
        let pivot_row = &upper[k];
        for row in lower {
            let factor = row[k] / pivot;
            if factor == 0.0 {
                continue;
            }
            for (c, entry) in row.iter_mut().enumerate().skip(k + 1) {
                *entry -= factor * pivot_row[c];
            }
        }
    }
    sign * product
}

/// Largest absolute entry; callers report it as a rough conditioning signal
/// alongside determinant values.
pub(crate) fn max_abs(m: &[Vec<f64>]) -> f64 {
    m.iter()
        .flat_map(|row| row.iter())
        .fold(0.0f64, |acc, v| acc.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn small_determinants() {
        assert_eq!(det(vec![vec![3.0]]), 3.0);
        assert_eq!(det(vec![vec![1.0, 2.0], vec![3.0, 4.0]]), -2.0);
        let m = vec![
            vec![2.0, 0.0, 1.0],
            vec![1.0, 3.0, 2.0],
            vec![1.0, 1.0, 0.0],
        ];
        assert_relative_eq!(det(m), -6.0, max_relative = 1e-14);
    }

    #[test]
    fn singular_matrix_gives_exact_zero() {
        let m = vec![
            vec![1.0, 2.0, 3.0],
            vec![2.0, 4.0, 6.0],
            vec![0.5, 1.0, 1.5],
        ];
        assert_eq!(det(m), 0.0);
        // Identical rows, no pivoting rescue possible.
        let m = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        assert_eq!(det(m), 0.0);
    }

    #[test]
    fn pivoting_handles_zero_leading_entry() {
        let m = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        assert_eq!(det(m), -1.0);
        let m = vec![
            vec![0.0, 0.0, 1.0],
            vec![0.0, 1.0, 0.0],
            vec![1.0, 0.0, 0.0],
        ];
        assert_eq!(det(m), -1.0);
    }

    #[test]
    fn permutation_parity() {
        // det of a permutation matrix is the permutation's sign.
        let m = vec![
            vec![0.0, 1.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0, 0.0],
            vec![0.0, 0.0, 0.0, 1.0],
            vec![1.0, 0.0, 0.0, 0.0],
        ];
        assert_eq!(det(m), -1.0); // 4-cycle = odd permutation
    }

    #[test]
    fn max_abs_scans_everything() {
        let m = vec![vec![1.0, -5.0], vec![2.0, 3.0]];
        assert_eq!(max_abs(&m), 5.0);
    }
}
