//! Empirical statistics used to check samplers and generated data: rank
//! correlations, Kolmogorov distance to the uniform law, and a chi-square
//! goodness-of-fit test for count data.

use crate::distributions::chisq_sf;

/// Kendall's tau-b in `O(n log n)` (Knight's merge-sort algorithm), tie-corrected.
///
/// Returns `NaN` when either input is constant.
pub fn kendall_tau<T: PartialOrd + Copy>(x: &[T], y: &[T]) -> f64 {
    assert_eq!(x.len(), y.len(), "kendall_tau needs paired samples");
    let n = x.len();
    if n < 2 {
        return f64::NAN;
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| {
        x[a].partial_cmp(&x[b])
            .unwrap()
            .then(y[a].partial_cmp(&y[b]).unwrap())
    });

    let pairs = |t: u64| t * (t.saturating_sub(1)) / 2;
    let n0 = pairs(n as u64);

    // ties in x, and joint ties in (x, y)
    let (mut x_ties, mut joint_ties) = (0u64, 0u64);
    let (mut run_x, mut run_xy) = (1u64, 1u64);
    for w in idx.windows(2) {
        let (a, b) = (w[0], w[1]);
        if x[a] == x[b] {
            run_x += 1;
            if y[a] == y[b] {
                run_xy += 1;
            } else {
                joint_ties += pairs(run_xy);
                run_xy = 1;
            }
        } else {
            x_ties += pairs(run_x);
            joint_ties += pairs(run_xy);
            run_x = 1;
            run_xy = 1;
        }
    }
    x_ties += pairs(run_x);
    joint_ties += pairs(run_xy);

    let mut ys: Vec<T> = idx.iter().map(|&i| y[i]).collect();
    let mut buf = ys.clone();
    let swaps = merge_count(&mut ys, &mut buf);

    let mut y_ties = 0u64;
    let mut run_y = 1u64;
    for w in ys.windows(2) {
        if w[0] == w[1] {
            run_y += 1;
        } else {
            y_ties += pairs(run_y);
            run_y = 1;
        }
    }
    y_ties += pairs(run_y);

    let numerator =
        n0 as f64 - x_ties as f64 - y_ties as f64 + joint_ties as f64 - 2.0 * swaps as f64;
    let denominator = ((n0 - x_ties) as f64 * (n0 - y_ties) as f64).sqrt();
    numerator / denominator
}

/// Stable merge sort of `v`, returning the number of strict inversions.
fn merge_count<T: PartialOrd + Copy>(v: &mut [T], buf: &mut [T]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = {
        let (left, right) = v.split_at_mut(mid);
        let (bl, br) = buf.split_at_mut(mid);
        merge_count(left, bl) + merge_count(right, br)
    };
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if v[j] < v[i] {
            buf[k] = v[j];
            swaps += (mid - i) as u64;
            j += 1;
        } else {
            buf[k] = v[i];
            i += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&v[i..mid]);
    k += mid - i;
    buf[k..k + n - j].copy_from_slice(&v[j..n]);
    v.copy_from_slice(&buf[..n]);
    swaps
}

/// Mid-ranks (1-based, ties averaged).
pub fn ranks<T: PartialOrd + Copy>(x: &[T]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].partial_cmp(&x[b]).unwrap());
    let mut out = vec![0.0; x.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && x[idx[end]] == x[idx[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &idx[start..end] {
            out[i] = rank;
        }
        start = end;
    }
    out
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

pub fn spearman<T: PartialOrd + Copy>(x: &[T], y: &[T]) -> f64 {
    pearson(&ranks(x), &ranks(y))
}

/// Kolmogorov distance between the empirical CDF of `xs` and Uniform(0, 1).
pub fn ks_uniform(xs: &[f64]) -> f64 {
    let mut sorted = xs.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &u)| {
            let lo = u - i as f64 / n;
            let hi = (i + 1) as f64 / n - u;
            lo.max(hi)
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoodnessOfFit {
    pub statistic: f64,
    pub df: u32,
    pub pvalue: f64,
}

/// Pearson chi-square test of observed integer counts against a pmf.
///
/// Cells are the support points `0, 1, ...` pooled from both ends until each
/// holds an expected count of at least `min_expected`; the last cell absorbs
/// the whole upper tail.
pub fn chisq_gof(samples: &[u64], pmf: impl Fn(u64) -> f64, min_expected: f64) -> GoodnessOfFit {
    let n = samples.len() as f64;
    let max = samples.iter().copied().max().unwrap_or(0);
    let mut observed = vec![0u64; max as usize + 1];
    for &s in samples {
        observed[s as usize] += 1;
    }

    // build cells over k = 0.. until the cumulative mass leaves < min_expected behind
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut exp_acc, mut obs_acc) = (0.0, 0.0);
    let mut mass = 0.0;
    let mut k = 0u64;
    loop {
        let pk = pmf(k);
        mass += pk;
        exp_acc += n * pk;
        obs_acc += observed.get(k as usize).copied().unwrap_or(0) as f64;
        k += 1;
        if exp_acc >= min_expected {
            cells.push((obs_acc, exp_acc));
            exp_acc = 0.0;
            obs_acc = 0.0;
        }
        if n * (1.0 - mass) < min_expected {
            break;
        }
    }
    // upper tail: everything at or beyond k, plus any unflushed remainder
    let tail_obs: u64 = observed.iter().skip(k as usize).sum();
    let tail = (
        obs_acc + tail_obs as f64,
        exp_acc + n * (1.0 - mass).max(0.0),
    );
    match cells.last_mut() {
        Some(last) if tail.1 < min_expected => {
            last.0 += tail.0;
            last.1 += tail.1;
        }
        _ => cells.push(tail),
    }

    let statistic: f64 = cells.iter().map(|&(o, e)| (o - e) * (o - e) / e).sum();
    let df = (cells.len() - 1).max(1) as u32;
    GoodnessOfFit {
        statistic,
        df,
        pvalue: chisq_sf(statistic, df).unwrap_or(f64::NAN),
    }
}
