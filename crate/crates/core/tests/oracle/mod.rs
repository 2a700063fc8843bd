//! Brute-force TV-Hausdorff distance between convex hulls of point lists.
//!
//! Uses no library code. The outer supremum is taken over a barycentric grid
//! that contains every generator; the supremum of a convex function over a
//! polytope is attained at a vertex, so this part is exact. The inner
//! infimum is searched on a coarse grid, then on two zoomed windows around
//! the best point found, which overestimates the true value by at most a few
//! times 1e-5 on the unit simplex.

pub fn tv(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

fn combine(gens: &[Vec<f64>], lambda: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; gens[0].len()];
    for (g, l) in gens.iter().zip(lambda) {
        for (o, x) in out.iter_mut().zip(g) {
            *o += l * x;
        }
    }
    out
}

/// All weight vectors of length `k` with entries in `{0, 1/m, ..., 1}` summing to 1.
pub fn barycentric_grid(k: usize, m: usize) -> Vec<Vec<f64>> {
    fn rec(k: usize, left: usize, m: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if k == 1 {
            prefix.push(left);
            out.push(prefix.iter().map(|&c| c as f64 / m as f64).collect());
            prefix.pop();
            return;
        }
        for c in 0..=left {
            prefix.push(c);
            rec(k - 1, left - c, m, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(k, m, m, &mut Vec::new(), &mut out);
    out
}

fn offsets(dims: usize, radius: i64) -> Vec<Vec<i64>> {
    let mut out = vec![vec![]];
    for _ in 0..dims {
        let mut next = Vec::new();
        for o in &out {
            for d in -radius..=radius {
                let mut v = o.clone();
                v.push(d);
                next.push(v);
            }
        }
        out = next;
    }
    out
}

fn point_to_hull(p: &[f64], gens: &[Vec<f64>]) -> f64 {
    let k = gens.len();
    let eval = |lambda: &[f64]| tv(p, &combine(gens, lambda));
    let mut best = barycentric_grid(k, 60)
        .into_iter()
        .map(|l| (eval(&l), l))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .unwrap();
    let mut step = 1.0 / 60.0;
    for _ in 0..2 {
        step /= 20.0;
        let centre = best.1.clone();
        for off in offsets(k - 1, 40) {
            let mut lambda = centre.clone();
            for (i, d) in off.iter().enumerate() {
                lambda[i] += *d as f64 * step;
            }
            let rest: f64 = lambda[..k - 1].iter().sum();
            lambda[k - 1] = 1.0 - rest;
            if lambda.iter().any(|&l| l < -1e-15) {
                continue;
            }
            let v = eval(&lambda);
            if v < best.0 {
                best = (v, lambda);
            }
        }
    }
    best.0
}

fn directed(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    barycentric_grid(a.len(), 8)
        .iter()
        .map(|l| point_to_hull(&combine(a, l), b))
        .fold(0.0, f64::max)
}

pub fn hausdorff_tv_grid(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    directed(a, b).max(directed(b, a))
}
