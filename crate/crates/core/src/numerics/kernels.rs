/// Dot product with four independent accumulators.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 4];
    let chunks = n / 4;
    for c in 0..chunks {
        let k = 4 * c;
        acc[0] += a[k] * b[k];
        acc[1] += a[k + 1] * b[k + 1];
        acc[2] += a[k + 2] * b[k + 2];
        acc[3] += a[k + 3] * b[k + 3];
    }
    let mut tail = 0.0;
    for k in 4 * chunks..n {
        tail += a[k] * b[k];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Four dot products of `rows[r]` against a shared `x`, sharing the loads of `x`.
#[inline]
pub(crate) fn dot4(rows: [&[f64]; 4], x: &[f64]) -> [f64; 4] {
    let n = x.len();
    let (r0, r1, r2, r3) = (&rows[0][..n], &rows[1][..n], &rows[2][..n], &rows[3][..n]);
    let mut a = [0.0f64; 4];
    let mut b = [0.0f64; 4];
    let half = n / 2;
    for c in 0..half {
        let k = 2 * c;
        let (x0, x1) = (x[k], x[k + 1]);
        a[0] += r0[k] * x0;
        b[0] += r0[k + 1] * x1;
        a[1] += r1[k] * x0;
        b[1] += r1[k + 1] * x1;
        a[2] += r2[k] * x0;
        b[2] += r2[k + 1] * x1;
        a[3] += r3[k] * x0;
        b[3] += r3[k + 1] * x1;
    }
    if n % 2 == 1 {
        let k = n - 1;
        a[0] += r0[k] * x[k];
        a[1] += r1[k] * x[k];
        a[2] += r2[k] * x[k];
        a[3] += r3[k] * x[k];
    }
    [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]]
}

/// `y += alpha * x`
#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Neumaier-compensated sum of a sequence, with exact products formed by FMA.
///
/// Each term is given as a pair `(a, b)` whose product is accumulated.
pub fn sum_compensated<I: IntoIterator<Item = (f64, f64)>>(terms: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    let mut add = |x: f64| {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    };
    for (a, b) in terms {
        let p = a * b;
        let err = a.mul_add(b, -p);
        add(p);
        add(err);
    }
    sum + comp
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dot_matches_naive() {
        let a: Vec<f64> = (0..11).map(|i| i as f64 * 0.5 - 2.0).collect();
        let b: Vec<f64> = (0..11).map(|i| (i * i) as f64 * 0.25).collect();
        let naive: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        assert!((dot(&a, &b) - naive).abs() < 1e-12);
        let rows = [&a[..], &b[..], &a[..], &b[..]];
        let d = dot4(rows, &b);
        assert!((d[0] - naive).abs() < 1e-12);
        assert!((d[1] - dot(&b, &b)).abs() < 1e-12);
    }

    #[test]
    fn compensated_sum_recovers_cancellation() {
        let terms = vec![(1e16, 1.0), (1.0, 1.0), (-1e16, 1.0)];
        assert_eq!(sum_compensated(terms), 1.0);
    }
}
