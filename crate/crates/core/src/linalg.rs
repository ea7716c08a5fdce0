//! Small dense least-squares solver used for ansatz coefficient fits.

use crate::lines::LineArray;
use crate::scalar::Scalar;

/// Minimum-norm least-squares solution of `A x ≈ b`.
///
/// Householder QR with column pivoting fixes the numerical rank `k`; a second
/// Householder pass on the transposed `k × p` trapezoid then removes the null
/// space (complete orthogonal decomposition). Rank-deficient systems therefore
/// get the unique shortest minimizer instead of one that depends on pivot order.
pub fn least_squares<T: Scalar>(a: &LineArray<T>, b: &[T]) -> Vec<T> {
    let m = a.rows();
    let p = a.cols();
    assert_eq!(b.len(), m, "right-hand side length mismatch");
    if p == 0 {
        return Vec::new();
    }
    // column-major working copy
    let mut cols: Vec<Vec<T>> = (0..p).map(|k| (0..m).map(|i| a[(i, k)]).collect()).collect();
    let mut rhs = b.to_vec();
    let mut perm: Vec<usize> = (0..p).collect();
    let mut norms: Vec<T> = cols.iter().map(|c| c.iter().map(|&v| v * v).sum()).collect();
    let steps = m.min(p);
    let mut diag = Vec::with_capacity(steps);
    let scale0 = norms.iter().fold(T::zero(), |acc, &v| acc.max(v)).sqrt();
    let tol = T::epsilon() * T::from_count(m.max(p)) * T::lit(10.0) * scale0;

    let mut rank = 0;
    for k in 0..steps {
        // pivot: largest remaining column norm
        let (piv, _) = norms[k..]
            .iter()
            .enumerate()
            .fold((k, T::neg_infinity()), |best, (i, &v)| {
                if v > best.1 {
                    (k + i, v)
                } else {
                    best
                }
            });
        cols.swap(k, piv);
        norms.swap(k, piv);
        perm.swap(k, piv);

        let alpha_sq: T = cols[k][k..].iter().map(|&v| v * v).sum();
        let alpha = alpha_sq.sqrt();
        if alpha <= tol {
            break;
        }
        let sign = if cols[k][k] >= T::zero() { T::one() } else { -T::one() };
        let r_kk = -sign * alpha;
        // Householder vector v = x - r_kk e_k, stored in place
        let mut v: Vec<T> = cols[k][k..].to_vec();
        v[0] -= r_kk;
        let vnorm_sq: T = v.iter().map(|&x| x * x).sum();
        if vnorm_sq > T::zero() {
            let reflect = |x: &mut [T]| {
                let dot: T = v.iter().zip(x.iter()).map(|(&a, &b)| a * b).sum();
                let f = T::lit(2.0) * dot / vnorm_sq;
                for (xi, &vi) in x.iter_mut().zip(&v) {
                    *xi -= f * vi;
                }
            };
            for col in cols.iter_mut().skip(k + 1) {
                reflect(&mut col[k..]);
            }
            reflect(&mut rhs[k..]);
        }
        cols[k][k] = r_kk;
        for v in cols[k].iter_mut().skip(k + 1) {
            *v = T::zero();
        }
        diag.push(r_kk);
        rank += 1;
        for i in k + 1..p {
            norms[i] = cols[i][k + 1..].iter().map(|&v| v * v).sum();
        }
    }

    if rank == 0 {
        return vec![T::zero(); p];
    }
    // rows of the trapezoid [R11 R12] as columns of its transpose (p × rank)
    let mut tr: Vec<Vec<T>> = (0..rank).map(|k| (0..p).map(|i| if i >= k { cols[i][k] } else { T::zero() }).collect()).collect();
    for (k, d) in diag.iter().enumerate() {
        tr[k][k] = *d;
    }
    // QR of the transpose: tr = Z [L; 0]
    let mut reflectors: Vec<(usize, Vec<T>, T)> = Vec::with_capacity(rank);
    for k in 0..rank {
        let alpha = tr[k][k..].iter().map(|&v| v * v).sum::<T>().sqrt();
        let sign = if tr[k][k] >= T::zero() { T::one() } else { -T::one() };
        let l_kk = -sign * alpha;
        let mut v: Vec<T> = tr[k][k..].to_vec();
        v[0] -= l_kk;
        let vnorm_sq: T = v.iter().map(|&x| x * x).sum();
        if vnorm_sq > T::zero() {
            for col in tr.iter_mut().skip(k + 1) {
                let dot: T = v.iter().zip(&col[k..]).map(|(&a, &b)| a * b).sum();
                let f = T::lit(2.0) * dot / vnorm_sq;
                for (xi, &vi) in col[k..].iter_mut().zip(&v) {
                    *xi -= f * vi;
                }
            }
        }
        tr[k][k] = l_kk;
        reflectors.push((k, v, vnorm_sq));
    }
    // [R11 R12] y = c  ⇔  Lᵀ w = c with y = Z [w; 0]
    let mut y = vec![T::zero(); p];
    for k in 0..rank {
        let mut s = rhs[k];
        for i in 0..k {
            s -= tr[k][i] * y[i];
        }
        y[k] = s / tr[k][k];
    }
    for (k, v, vnorm_sq) in reflectors.iter().rev() {
        if *vnorm_sq > T::zero() {
            let dot: T = v.iter().zip(&y[*k..]).map(|(&a, &b)| a * b).sum();
            let f = T::lit(2.0) * dot / *vnorm_sq;
            for (yi, &vi) in y[*k..].iter_mut().zip(v) {
                *yi -= f * vi;
            }
        }
    }
    let mut x = vec![T::zero(); p];
    for (k, &col) in perm.iter().enumerate() {
        x[col] = y[k];
    }
    x
}
