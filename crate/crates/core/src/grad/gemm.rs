use super::real::Real;

/// `C[m, n] = op(A) op(B)` with `f64` accumulation.
///
/// `a` is `[m, k]` (or `[k, m]` when `ta`); `b` is `[k, n]` (or `[n, k]` when `tb`).
pub(crate) fn gemm<T: Real>(a: &[T], b: &[T], m: usize, k: usize, n: usize, ta: bool, tb: bool) -> Vec<T> {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    let mut bk = vec![0.0f64; k * n];
    if tb {
        for j in 0..n {
            for p in 0..k {
                bk[p * n + j] = b[j * k + p].f64();
            }
        }
    } else {
        for (d, s) in bk.iter_mut().zip(b) {
            *d = s.f64();
        }
    }
    let mut out = Vec::with_capacity(m * n);
    let mut acc = vec![0.0f64; n];
    for i in 0..m {
        acc.iter_mut().for_each(|x| *x = 0.0);
        for p in 0..k {
            let aip = if ta { a[p * m + i] } else { a[i * k + p] }.f64();
            if aip == 0.0 {
                continue;
            }
            let row = &bk[p * n..(p + 1) * n];
            for (c, &bv) in acc.iter_mut().zip(row) {
                *c += aip * bv;
            }
        }
        out.extend(acc.iter().map(|&x| T::of(x)));
    }
    out
}
