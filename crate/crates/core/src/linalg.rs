//! Fixed-size 4×4 dense matrix helpers.
//!
//! Everything in this crate lives in a four-dimensional space (four parameters,
//! four observables), so plain arrays are enough.

use crate::error::{Error, Result};

pub type Vec4 = [f64; 4];
pub type Mat4 = [[f64; 4]; 4];

pub const IDENTITY: Mat4 = [
    [1.0, 0.0, 0.0, 0.0],
    [0.0, 1.0, 0.0, 0.0],
    [0.0, 0.0, 1.0, 0.0],
    [0.0, 0.0, 0.0, 1.0],
];

/// Relative pivot threshold used by [`invert_symmetric`].
pub const PIVOT_RTOL: f64 = 1e-14;

pub fn transpose(a: &Mat4) -> Mat4 {
    let mut t = [[0.0; 4]; 4];
    for (i, row) in a.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            t[j][i] = v;
        }
    }
    t
}

pub fn matmul(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut c = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            c[i][j] = (0..4).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}

pub fn scale(a: &Mat4, s: f64) -> Mat4 {
    a.map(|row| row.map(|v| v * s))
}

/// Replaces `a` by `(a + a^T) / 2`.
pub fn symmetrize(a: &mut Mat4) {
    for i in 0..4 {
        for j in (i + 1)..4 {
            let m = 0.5 * (a[i][j] + a[j][i]);
            a[i][j] = m;
            a[j][i] = m;
        }
    }
}

pub fn max_abs(a: &Mat4) -> f64 {
    a.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()))
}

pub fn diagonal(a: &Mat4) -> Vec4 {
    [a[0][0], a[1][1], a[2][2], a[3][3]]
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn determinant(a: &Mat4) -> f64 {
    let mut m = *a;
    let mut det = 1.0;
    for col in 0..4 {
        let pivot_row = (col..4)
            .max_by(|&r, &s| m[r][col].abs().total_cmp(&m[s][col].abs()))
            .unwrap_or(col);
        if m[pivot_row][col] == 0.0 {
            return 0.0;
        }
        if pivot_row != col {
            m.swap(pivot_row, col);
            det = -det;
        }
        let p = m[col][col];
        det *= p;
        for r in (col + 1)..4 {
            let f = m[r][col] / p;
            for c in col..4 {
                m[r][c] -= f * m[col][c];
            }
        }
    }
    det
}

/// Inverse of a symmetric matrix by Gauss-Jordan elimination with partial
/// pivoting. The result is symmetrized to remove round-off asymmetry.
///
/// Fails with [`Error::SingularMatrix`] when a pivot falls below
/// `PIVOT_RTOL * max|a|`.
pub fn invert_symmetric(a: &Mat4) -> Result<Mat4> {
    let mut inv = invert(a)?;
    symmetrize(&mut inv);
    Ok(inv)
}

/// Gauss-Jordan inverse with partial pivoting.
pub fn invert(a: &Mat4) -> Result<Mat4> {
    let scale = max_abs(a);
    let threshold = PIVOT_RTOL * scale;
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::SingularMatrix {
            pivot: 0.0,
            threshold,
        });
    }

    let mut m = *a;
    let mut inv = IDENTITY;
    for col in 0..4 {
        let pivot_row = (col..4)
            .max_by(|&r, &s| m[r][col].abs().total_cmp(&m[s][col].abs()))
            .unwrap_or(col);
        let pivot = m[pivot_row][col];
        if pivot.abs() < threshold {
            return Err(Error::SingularMatrix {
                pivot: pivot.abs(),
                threshold,
            });
        }
        m.swap(pivot_row, col);
        inv.swap(pivot_row, col);

        for c in 0..4 {
            m[col][c] /= pivot;
            inv[col][c] /= pivot;
        }
        for r in 0..4 {
            if r == col {
                continue;
            }
            let f = m[r][col];
            if f == 0.0 {
                continue;
            }
            for c in 0..4 {
                m[r][c] -= f * m[col][c];
                inv[r][c] -= f * inv[col][c];
            }
        }
    }
    Ok(inv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn diag(d: Vec4) -> Mat4 {
        let mut m = [[0.0; 4]; 4];
        for i in 0..4 {
            m[i][i] = d[i];
        }
        m
    }

    #[test]
    fn identity_inverts_to_identity() {
        assert_eq!(invert_symmetric(&IDENTITY).unwrap(), IDENTITY);
    }

    #[test]
    fn diagonal_inverse() {
        let inv = invert_symmetric(&diag([2.0, 4.0, 5.0, 10.0])).unwrap();
        assert_eq!(inv, diag([0.5, 0.25, 0.2, 0.1]));
    }

    #[test]
    fn zero_row_is_singular() {
        let a = [
            [2.0, 1.0, 0.0, 0.0],
            [1.0, 3.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ];
        assert!(matches!(
            invert_symmetric(&a),
            Err(Error::SingularMatrix { .. })
        ));
        assert!(matches!(
            invert_symmetric(&[[0.0; 4]; 4]),
            Err(Error::SingularMatrix { .. })
        ));
    }

    #[test]
    fn inverse_of_dense_spd() {
        let a = [
            [4.0, 1.0, 0.5, 0.2],
            [1.0, 3.0, 0.3, 0.1],
            [0.5, 0.3, 2.0, 0.4],
            [0.2, 0.1, 0.4, 1.5],
        ];
        let inv = invert_symmetric(&a).unwrap();
        let prod = matmul(&a, &inv);
        for i in 0..4 {
            for j in 0..4 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((prod[i][j] - e).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn general_inverse_of_nonsymmetric() {
        let a = [
            [2.0, 1.0, 0.0, 3.0],
            [0.5, -1.0, 2.0, 0.0],
            [1.0, 0.0, 1.0, -2.0],
            [0.0, 4.0, 1.0, 1.0],
        ];
        let prod = matmul(&a, &invert(&a).unwrap());
        for i in 0..4 {
            for j in 0..4 {
                assert!((prod[i][j] - IDENTITY[i][j]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn determinant_by_permutation_expansion() {
        // Leibniz formula over all 24 permutations.
        fn leibniz(a: &Mat4) -> f64 {
            let mut total = 0.0;
            let idx = [0usize, 1, 2, 3];
            for p0 in idx {
                for p1 in idx {
                    for p2 in idx {
                        for p3 in idx {
                            let p = [p0, p1, p2, p3];
                            let mut seen = [false; 4];
                            if p.iter().any(|&k| std::mem::replace(&mut seen[k], true)) {
                                continue;
                            }
                            let inversions = (0..4)
                                .flat_map(|i| ((i + 1)..4).map(move |j| (i, j)))
                                .filter(|&(i, j)| p[i] > p[j])
                                .count();
                            let sign = if inversions % 2 == 0 { 1.0 } else { -1.0 };
                            total += sign * (0..4).map(|i| a[i][p[i]]).product::<f64>();
                        }
                    }
                }
            }
            total
        }
        let a = [
            [1.0, 0.3, -0.2, 0.9],
            [0.0, 0.8, -1.1, -0.4],
            [0.0, 0.6, 0.0, -0.2],
            [0.2, 0.0, -0.7, -0.2],
        ];
        assert_relative_eq!(determinant(&a), leibniz(&a), max_relative = 1e-13);
        assert_eq!(determinant(&IDENTITY), 1.0);
    }
}
