use super::Matrix;

/// All singular values of `m` in descending order, by one-sided Jacobi
/// rotations. Slow but independent of power iteration, so it serves as the
/// reference for [`super::spectral_norm`].
pub fn jacobi_singular_values(m: &Matrix) -> Vec<f64> {
    // Work on the orientation with fewer columns; rotate column pairs until
    // they are mutually orthogonal.
    let a = if m.cols() > m.rows() { m.transpose() } else { m.clone() };
    let (rows, cols) = a.shape();
    let mut c: Vec<Vec<f64>> = (0..cols).map(|j| a.column(j)).collect();
    for _sweep in 0..100 {
        let mut off = 0.0_f64;
        for p in 0..cols {
            for q in p + 1..cols {
                let alpha: f64 = c[p].iter().map(|x| x * x).sum();
                let beta: f64 = c[q].iter().map(|x| x * x).sum();
                let gamma: f64 = c[p].iter().zip(&c[q]).map(|(x, y)| x * y).sum();
                if gamma == 0.0 {
                    continue;
                }
                off = off.max(gamma.abs() / (alpha * beta).sqrt());
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for i in 0..rows {
                    let (x, y) = (c[p][i], c[q][i]);
                    c[p][i] = cs * x - sn * y;
                    c[q][i] = sn * x + cs * y;
                }
            }
        }
        if off < 1e-15 {
            break;
        }
    }
    let mut s: Vec<f64> = c.iter().map(|col| super::l2_norm(col)).collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_and_rank_one() {
        let d = Matrix::diag(&[1.0, 5.0, 3.0]);
        let s = jacobi_singular_values(&d);
        for (a, b) in s.iter().zip([5.0, 3.0, 1.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        // u v^T with ||u|| = 5, ||v|| = sqrt(2).
        let r = Matrix::from_rows(&[vec![3.0, 3.0], vec![4.0, 4.0]]).unwrap();
        let s = jacobi_singular_values(&r);
        assert!((s[0] - 5.0 * 2f64.sqrt()).abs() < 1e-12);
        assert!(s[1].abs() < 1e-12);
    }

    #[test]
    fn squares_sum_to_frobenius() {
        let m = Matrix::random_normal(4, 6, 1.0, 3);
        let s = jacobi_singular_values(&m);
        let sum: f64 = s.iter().map(|x| x * x).sum();
        let fro = super::super::frobenius_norm(&m);
        assert!((sum.sqrt() - fro).abs() < 1e-12 * fro);
    }
}
