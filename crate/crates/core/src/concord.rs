//! Exact concordance counting for Kendall's kernel in `O(n log² n)`.

use crate::fenwick::{dense_ranks, CountFenwick};
use crate::numeric::sign;

const BLOCK: usize = 32;

#[inline]
fn concordance(a: [f64; 2], b: [f64; 2]) -> i64 {
    (sign(b[0] - a[0]) * sign(b[1] - a[1])) as i64
}

/// `out[k] = Σ_{i<k} sign(x_i - x_k) sign(y_i - y_k)`.
pub(crate) fn concordance_with_earlier(p: &[[f64; 2]]) -> Vec<i64> {
    let n = p.len();
    let ys: Vec<f64> = p.iter().map(|q| q[1]).collect();
    let (y_rank, distinct) = dense_ranks(&ys);
    let mut out = vec![0i64; n];
    let mut tree = CountFenwick::new(distinct);
    let mut scratch = Scratch::default();
    solve(p, &y_rank, 0, n, &mut out, &mut tree, &mut scratch);
    out
}

/// `Σ_{j≠i} sign(x_j - x_i) sign(y_j - y_i)` for every `i`.
pub(crate) fn concordance_rows(p: &[[f64; 2]]) -> Vec<i64> {
    let earlier = concordance_with_earlier(p);
    let reversed: Vec<[f64; 2]> = p.iter().rev().copied().collect();
    let later = concordance_with_earlier(&reversed);
    earlier
        .iter()
        .zip(later.iter().rev())
        .map(|(a, b)| a + b)
        .collect()
}

#[derive(Default)]
struct Scratch {
    left: Vec<usize>,
    right: Vec<usize>,
    left_y: Vec<usize>,
}

fn solve(
    p: &[[f64; 2]],
    y_rank: &[usize],
    lo: usize,
    hi: usize,
    out: &mut [i64],
    tree: &mut CountFenwick,
    scratch: &mut Scratch,
) {
    if hi - lo <= BLOCK {
        for k in lo..hi {
            out[k] += (lo..k).map(|i| concordance(p[i], p[k])).sum::<i64>();
        }
        return;
    }
    let mid = lo + (hi - lo) / 2;
    solve(p, y_rank, lo, mid, out, tree, scratch);
    solve(p, y_rank, mid, hi, out, tree, scratch);

    let by_x = |a: &usize, b: &usize| p[*a][0].total_cmp(&p[*b][0]);
    scratch.left.clear();
    scratch.left.extend(lo..mid);
    scratch.left.sort_by(by_x);
    scratch.right.clear();
    scratch.right.extend(mid..hi);
    scratch.right.sort_by(by_x);
    scratch.left_y.clear();
    scratch.left_y.extend((lo..mid).map(|i| y_rank[i]));
    scratch.left_y.sort_unstable();

    // Y(S) = #{y_i > y_q} - #{y_i < y_q} over a set S of earlier points.
    let y_balance = |tree: &CountFenwick, size: i64, r: usize| -> i64 {
        let below = tree.below(r);
        let at_or_below = tree.below(r + 1);
        (size - at_or_below) - below
    };

    // contribution(q) = Y(x_i > x_q) - Y(x_i < x_q)
    //                 = Y(all) - Y(x_i ≤ x_q) - Y(x_i < x_q)
    for &q in &scratch.right {
        let r = y_rank[q];
        let below = scratch.left_y.partition_point(|&v| v < r) as i64;
        let at_or_below = scratch.left_y.partition_point(|&v| v <= r) as i64;
        out[q] += (mid - lo) as i64 - at_or_below - below;
    }
    for strict in [true, false] {
        let mut inserted = 0usize;
        for &q in &scratch.right {
            let xq = p[q][0];
            while inserted < scratch.left.len() {
                let xi = p[scratch.left[inserted]][0];
                let take = if strict { xi < xq } else { xi <= xq };
                if !take {
                    break;
                }
                tree.add(y_rank[scratch.left[inserted]], 1);
                inserted += 1;
            }
            out[q] -= y_balance(tree, inserted as i64, y_rank[q]);
        }
        for &i in &scratch.left[..inserted] {
            tree.add(y_rank[i], -1);
        }
    }
}
