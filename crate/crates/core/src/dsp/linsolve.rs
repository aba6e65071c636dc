use alloc::vec;
use alloc::vec::Vec;

/// Inverts a small symmetric positive-definite matrix (row-major `n × n`)
/// by Gauss–Jordan elimination with partial pivoting.
pub(crate) fn invert_symmetric(a: &[f64], n: usize) -> Option<Vec<f64>> {
    debug_assert_eq!(a.len(), n * n);
    let mut m = a.to_vec();
    let mut inv = vec![0.0; n * n];
    for i in 0..n {
        inv[i * n + i] = 1.0;
    }
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&r1, &r2| libm::fabs(m[r1 * n + col]).total_cmp(&libm::fabs(m[r2 * n + col])))?;
        let p = m[pivot * n + col];
        if libm::fabs(p) < 1e-300 {
            return None;
        }
        if pivot != col {
            for k in 0..n {
                m.swap(pivot * n + k, col * n + k);
                inv.swap(pivot * n + k, col * n + k);
            }
        }
        let scale = 1.0 / m[col * n + col];
        for k in 0..n {
            m[col * n + k] *= scale;
            inv[col * n + k] *= scale;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let factor = m[r * n + col];
            if factor == 0.0 {
                continue;
            }
            for k in 0..n {
                m[r * n + k] -= factor * m[col * n + k];
                inv[r * n + k] -= factor * inv[col * n + k];
            }
        }
    }
    Some(inv)
}
