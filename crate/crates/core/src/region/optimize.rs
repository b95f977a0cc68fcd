//! Small derivative-free optimizers for low-dimensional concave problems.

/// Slack allowed when checking a linear constraint, relative to its target.
pub const FEASIBILITY_TOL: f64 = 1e-12;
pub const GOLDEN_TOL: f64 = 1e-12;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Maximizes a unimodal `f` on [lo, hi]. The endpoints are also compared, so
/// maxima on the boundary are returned exactly.
pub fn golden_section_max<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let (flo, fhi) = (f(lo), f(hi));
    let mut best = if fhi > flo { (hi, fhi) } else { (lo, flo) };
    if hi - lo <= tol {
        return best;
    }
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    let fx = f(x);
    for cand in [(c, fc), (d, fd), (x, fx)] {
        if cand.1 > best.1 {
            best = cand;
        }
    }
    best
}

/// Every point of the probability simplex in `dim` coordinates whose entries
/// are multiples of 1/steps, in lexicographic order.
pub fn simplex_grid(dim: usize, steps: usize) -> Vec<Vec<f64>> {
    fn rec(dim: usize, left: usize, steps: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if cur.len() + 1 == dim {
            cur.push(left);
            out.push(cur.iter().map(|&c| c as f64 / steps as f64).collect());
            cur.pop();
            return;
        }
        for c in 0..=left {
            cur.push(c);
            rec(dim, left - c, steps, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if dim > 0 {
        rec(dim, steps, steps.max(1), &mut Vec::with_capacity(dim), &mut out);
    }
    out
}

/// c·p ≥ target.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub coeffs: Vec<f64>,
    pub target: f64,
}

impl LinearConstraint {
    pub fn value(&self, p: &[f64]) -> f64 {
        self.coeffs.iter().zip(p).map(|(c, x)| c * x).sum()
    }

    pub fn holds(&self, p: &[f64]) -> bool {
        self.value(p) >= self.target - FEASIBILITY_TOL * (1.0 + self.target.abs())
    }
}

pub fn all_hold(constraints: &[LinearConstraint], p: &[f64]) -> bool {
    constraints.iter().all(|c| c.holds(p))
}

/// Feasible set of α = p(1) for binary inputs, as an interval. Nearly empty
/// intervals (from rounding at the edge of feasibility) collapse to a point.
pub fn binary_interval(constraints: &[LinearConstraint]) -> Option<(f64, f64)> {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for c in constraints {
        let (c0, c1) = (c.coeffs[0], c.coeffs[1]);
        let slope = c1 - c0;
        let slack = FEASIBILITY_TOL * (1.0 + c.target.abs());
        if slope.abs() <= slack {
            if c0.max(c1) < c.target - slack {
                return None;
            }
            continue;
        }
        let bound = (c.target - c0) / slope;
        if slope > 0.0 {
            lo = lo.max(bound);
        } else {
            hi = hi.min(bound);
        }
    }
    if lo <= hi {
        return Some((lo.clamp(0.0, 1.0), hi.clamp(0.0, 1.0)));
    }
    if lo - hi <= 1e-9 {
        let mid = (0.5 * (lo + hi)).clamp(0.0, 1.0);
        let p = [1.0 - mid, mid];
        if all_hold(constraints, &p) {
            return Some((mid, mid));
        }
    }
    None
}

/// Greedy pair-exchange search on the simplex: moves mass between two
/// coordinates while the objective improves, halving the step on stalls.
pub fn simplex_pattern_search<F, G>(start: Vec<f64>, f: &F, feasible: &G, step: f64, min_step: f64) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> bool,
{
    let dim = start.len();
    let mut x = start;
    let mut fx = f(&x);
    let mut h = step;
    let mut trial = x.clone();
    while h >= min_step {
        let mut improved = false;
        for i in 0..dim {
            for j in 0..dim {
                if i == j || x[j] <= 0.0 {
                    continue;
                }
                let mv = h.min(x[j]);
                trial.copy_from_slice(&x);
                trial[i] += mv;
                trial[j] -= mv;
                if feasible(&trial) {
                    let ft = f(&trial);
                    if ft > fx {
                        x.copy_from_slice(&trial);
                        fx = ft;
                        improved = true;
                    }
                }
            }
        }
        if !improved {
            h *= 0.5;
        }
    }
    (x, fx)
}

/// Maximizes a concave `f` over {p in the simplex : every constraint holds}.
///
/// Binary inputs use the exact feasible interval and golden-section search;
/// larger alphabets use a simplex grid at `steps` followed by pattern search.
pub fn maximize_concave<F>(dim: usize, f: F, constraints: &[LinearConstraint], steps: usize) -> Option<(Vec<f64>, f64)>
where
    F: Fn(&[f64]) -> f64,
{
    match dim {
        0 => None,
        1 => {
            let p = vec![1.0];
            all_hold(constraints, &p).then(|| {
                let v = f(&p);
                (p, v)
            })
        }
        2 => {
            let (lo, hi) = binary_interval(constraints)?;
            let (a, v) = golden_section_max(|a| f(&[1.0 - a, a]), lo, hi, GOLDEN_TOL);
            Some((vec![1.0 - a, a], v))
        }
        _ => {
            let feasible = |p: &[f64]| all_hold(constraints, p);
            let mut best: Option<(Vec<f64>, f64)> = None;
            for p in simplex_grid(dim, steps) {
                if feasible(&p) {
                    let v = f(&p);
                    if best.as_ref().map_or(true, |b| v > b.1) {
                        best = Some((p, v));
                    }
                }
            }
            // vertices are exact maximizers of linear constraints; keep them as candidates
            for x in 0..dim {
                let mut p = vec![0.0; dim];
                p[x] = 1.0;
                if feasible(&p) {
                    let v = f(&p);
                    if best.as_ref().map_or(true, |b| v > b.1) {
                        best = Some((p, v));
                    }
                }
            }
            let (p, _) = best?;
            Some(simplex_pattern_search(p, &f, &feasible, 1.0 / steps.max(1) as f64, 1e-12))
        }
    }
}

/// Coordinate pattern search inside a box; `f` returns `None` where infeasible.
pub fn box_pattern_search<F>(start: Vec<f64>, f: &F, bounds: &[(f64, f64)], steps: &[f64], min_step: f64) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> Option<f64>,
{
    let mut x = start;
    let mut fx = f(&x).unwrap_or(f64::NEG_INFINITY);
    let mut h: Vec<f64> = steps.to_vec();
    let mut trial = x.clone();
    loop {
        let mut improved = false;
        for d in 0..x.len() {
            for sign in [1.0, -1.0] {
                trial.copy_from_slice(&x);
                trial[d] = (x[d] + sign * h[d]).clamp(bounds[d].0, bounds[d].1);
                if trial[d] == x[d] {
                    continue;
                }
                if let Some(v) = f(&trial) {
                    if v > fx {
                        x.copy_from_slice(&trial);
                        fx = v;
                        improved = true;
                    }
                }
            }
        }
        if !improved {
            if h.iter().all(|&s| s < min_step) {
                break;
            }
            for s in &mut h {
                *s *= 0.5;
            }
        }
    }
    (x, fx)
}
