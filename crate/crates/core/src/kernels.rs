//! Inner loops of the split search.
//!
//! Sums use a fixed lane layout and are never fused or reassociated by the
//! compiler, so every code path returns bit-identical results whether or not
//! the AVX2 variant is selected at runtime.

const LANES: usize = 8;

#[inline(always)]
fn lane_sum(s: [f64; LANES]) -> f64 {
    ((s[0] + s[1]) + (s[2] + s[3])) + ((s[4] + s[5]) + (s[6] + s[7]))
}

#[inline(always)]
fn add_and_norm(acc: &mut [f64], row: &[f64]) -> f64 {
    let mut s = [0.0f64; LANES];
    let mut ca = acc.chunks_exact_mut(LANES);
    let mut cr = row.chunks_exact(LANES);
    for (a, r) in (&mut ca).zip(&mut cr) {
        for k in 0..LANES {
            a[k] += r[k];
            s[k] += a[k] * a[k];
        }
    }
    let mut tail = 0.0;
    for (a, r) in ca.into_remainder().iter_mut().zip(cr.remainder()) {
        *a += r;
        tail += *a * *a;
    }
    lane_sum(s) + tail
}

#[inline(always)]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut s = [0.0f64; LANES];
    let mut ca = a.chunks_exact(LANES);
    let mut cb = b.chunks_exact(LANES);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for k in 0..LANES {
            s[k] += x[k] * y[k];
        }
    }
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    lane_sum(s) + tail
}

#[inline(always)]
fn prefix_norms_impl(acc: &mut [f64], rows: &[f64], order: &[u32], norms: &mut [f64]) {
    let width = acc.len();
    acc.iter_mut().for_each(|a| *a = 0.0);
    for (norm, &r) in norms.iter_mut().zip(order) {
        let r = r as usize;
        *norm = add_and_norm(acc, &rows[r * width..(r + 1) * width]);
    }
}

#[inline(always)]
fn gram_impl(rows: &[f64], width: usize, g: &mut [f64]) {
    let c = rows.len() / width;
    for i in 0..c {
        let ri = &rows[i * width..(i + 1) * width];
        for j in 0..=i {
            let v = dot(ri, &rows[j * width..(j + 1) * width]);
            g[i * c + j] = v;
            g[j * c + i] = v;
        }
    }
}

#[cfg(target_arch = "x86_64")]
mod avx2 {
    #[target_feature(enable = "avx2")]
    pub(super) unsafe fn prefix_norms(acc: &mut [f64], rows: &[f64], order: &[u32], norms: &mut [f64]) {
        super::prefix_norms_impl(acc, rows, order, norms)
    }

    #[target_feature(enable = "avx2")]
    pub(super) unsafe fn gram(rows: &[f64], width: usize, g: &mut [f64]) {
        super::gram_impl(rows, width, g)
    }
}

#[cfg(target_arch = "x86_64")]
fn has_avx2() -> bool {
    std::arch::is_x86_feature_detected!("avx2")
}

/// `norms[k] = ‖Σ_{j ≤ k} rows[order[j]]‖²` for every `k < norms.len()`,
/// where `rows` holds rows of `acc.len()` values. `acc` is scratch space.
pub(crate) fn prefix_norms(acc: &mut [f64], rows: &[f64], order: &[u32], norms: &mut [f64]) {
    debug_assert!(norms.len() <= order.len());
    #[cfg(target_arch = "x86_64")]
    if has_avx2() {
        // SAFETY: the CPU supports AVX2.
        return unsafe { avx2::prefix_norms(acc, rows, order, norms) };
    }
    prefix_norms_impl(acc, rows, order, norms)
}

/// Full Gram matrix `g[i·c + j] = ⟨row i, row j⟩` of `c = rows.len() / width` rows.
pub(crate) fn gram(rows: &[f64], width: usize, g: &mut [f64]) {
    debug_assert_eq!(g.len(), (rows.len() / width).pow(2));
    #[cfg(target_arch = "x86_64")]
    if has_avx2() {
        // SAFETY: the CPU supports AVX2.
        return unsafe { avx2::gram(rows, width, g) };
    }
    gram_impl(rows, width, g)
}

/// Same quantity as [`prefix_norms`] computed from a Gram matrix over `c`
/// rows, with `order` holding row positions in `0..c`.
pub(crate) fn gram_prefix_norms(g: &[f64], c: usize, order: &[u32], norms: &mut [f64]) {
    let mut s = 0.0;
    for (k, norm) in norms.iter_mut().enumerate() {
        let r = order[k] as usize;
        let row = &g[r * c..(r + 1) * c];
        let cross: f64 = order[..k].iter().map(|&j| row[j as usize]).sum();
        s += 2.0 * cross + row[r];
        *norm = s;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::SeedStream;
    use rand::Rng;

    fn random_rows(c: usize, width: usize, seed: u64) -> Vec<f64> {
        let mut rng = SeedStream::new(seed).rng();
        (0..c * width).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    fn naive_norms(rows: &[f64], width: usize, order: &[u32]) -> Vec<f64> {
        let mut acc = vec![0.0; width];
        order
            .iter()
            .map(|&r| {
                for (a, v) in acc.iter_mut().zip(&rows[r as usize * width..]) {
                    *a += v;
                }
                acc.iter().map(|a| a * a).sum()
            })
            .collect()
    }

    #[test]
    fn prefix_norms_match_naive() {
        for width in [1, 3, 8, 13, 64] {
            let rows = random_rows(20, width, width as u64);
            let order: Vec<u32> = (0..20).rev().collect();
            let mut acc = vec![0.0; width];
            let mut norms = vec![0.0; 19];
            prefix_norms(&mut acc, &rows, &order, &mut norms);
            for (a, b) in norms.iter().zip(naive_norms(&rows, width, &order)) {
                assert!((a - b).abs() <= 1e-12 * b.max(1.0), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn gram_path_matches_dense_path() {
        let (c, width) = (30, 17);
        let rows = random_rows(c, width, 9);
        let mut g = vec![0.0; c * c];
        gram(&rows, width, &mut g);
        let order: Vec<u32> = (0..c as u32).map(|i| (i * 7) % c as u32).collect();
        let mut via_gram = vec![0.0; c - 1];
        gram_prefix_norms(&g, c, &order, &mut via_gram);
        let naive = naive_norms(&rows, width, &order);
        for (a, b) in via_gram.iter().zip(naive) {
            assert!((a - b).abs() <= 1e-10 * b.max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn dispatch_is_bit_identical() {
        let (c, width) = (25, 37);
        let rows = random_rows(c, width, 3);
        let order: Vec<u32> = (0..c as u32).collect();
        let mut acc = vec![0.0; width];
        let (mut a, mut b) = (vec![0.0; c], vec![0.0; c]);
        prefix_norms(&mut acc, &rows, &order, &mut a);
        prefix_norms_impl(&mut acc, &rows, &order, &mut b);
        assert_eq!(a, b);
        let (mut ga, mut gb) = (vec![0.0; c * c], vec![0.0; c * c]);
        gram(&rows, width, &mut ga);
        gram_impl(&rows, width, &mut gb);
        assert_eq!(ga, gb);
    }
}
