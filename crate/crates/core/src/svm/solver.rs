//! Soft-margin linear SVM in two dimensions.
//!
//! Minimizes `½‖w‖² + c·Σ max(0, 1 - y_i(w·x_i + b))` with an unregularized
//! bias. The dual is solved by sequential minimal optimization with the
//! maximal-violating-pair rule; for the current `w` the optimal bias is
//! computed exactly, which gives a primal value and so a duality gap. The run
//! stops once the relative gap is below `tol`, then a few exact line searches
//! on the primal finish the job. Every step is deterministic.

#[derive(Debug, Clone)]
pub(crate) struct Solution {
    pub w: [f64; 2],
    pub b: f64,
    pub objective: f64,
    pub dual_objective: f64,
    /// Primal objective of the incumbent after each gap check and each
    /// polishing sweep; non-increasing.
    pub trace: Vec<f64>,
    pub iterations: usize,
}

const GAP_CHECK_EVERY: usize = 8;

fn dot(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

pub(crate) fn primal(x: &[[f64; 2]], y: &[f64], c: f64, w: &[f64; 2], b: f64) -> f64 {
    let hinge: f64 = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| (1.0 - yi * (dot(w, xi) + b)).max(0.0))
        .sum();
    0.5 * dot(w, w) + c * hinge
}

/// Bias minimizing the hinge sum for fixed `w`.
///
/// Each hinge term has one kink at `b_i = y_i - w·x_i` and every kink raises
/// the slope by one, starting from `-n₊` on the far left. The slope is zero
/// between the `n₊`-th and `(n₊+1)`-th smallest kinks; the midpoint is taken.
pub(crate) fn optimal_bias(x: &[[f64; 2]], y: &[f64], w: &[f64; 2]) -> f64 {
    let n_plus = y.iter().filter(|v| **v > 0.0).count();
    let mut kinks: Vec<f64> = x.iter().zip(y).map(|(xi, yi)| yi - dot(w, xi)).collect();
    kinks.sort_by(f64::total_cmp);
    0.5 * (kinks[n_plus - 1] + kinks[n_plus])
}

/// Exact minimizer along `t ↦ f(w + t·dw, b + t·db)`, a convex piecewise
/// quadratic. Returns the step, or `None` when `t = 0` is already optimal.
fn line_search(
    x: &[[f64; 2]],
    y: &[f64],
    c: f64,
    w: &[f64; 2],
    b: f64,
    dw: [f64; 2],
    db: f64,
) -> Option<f64> {
    // hinge_i(t) = max(0, m_i - t·s_i)
    let terms: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| (1.0 - yi * (dot(w, xi) + b), yi * (dot(&dw, xi) + db)))
        .collect();
    let quad = dot(&dw, &dw);
    let lin = dot(w, &dw);
    let one_sided = |dir: f64| {
        let active: f64 = terms
            .iter()
            .filter(|(m, s)| *m > 0.0 || (*m == 0.0 && dir * s < 0.0))
            .map(|(_, s)| s)
            .sum();
        lin - c * active
    };
    let dir = if one_sided(1.0) < 0.0 {
        1.0
    } else if one_sided(-1.0) > 0.0 {
        -1.0
    } else {
        return None;
    };

    // search t > 0 along dir·d
    let (lin, terms): (f64, Vec<(f64, f64)>) = (
        dir * lin,
        terms.into_iter().map(|(m, s)| (m, dir * s)).collect(),
    );
    let mut active: f64 = terms
        .iter()
        .filter(|(m, s)| *m > 0.0 || (*m == 0.0 && *s < 0.0))
        .map(|(_, s)| s)
        .sum();
    let mut kinks: Vec<(f64, f64)> = terms
        .iter()
        .filter(|(m, s)| *s != 0.0 && m / s > 0.0)
        .map(|(m, s)| (m / s, *s))
        .collect();
    kinks.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut lo = 0.0;
    for (t_k, s_k) in kinks {
        if quad > 0.0 {
            let t_star = (c * active - lin) / quad;
            if t_star <= t_k {
                return Some(dir * t_star.max(lo));
            }
        }
        // crossing the kink toggles the term
        if s_k > 0.0 {
            active -= s_k;
        } else {
            active += s_k;
        }
        lo = t_k;
        if lin + quad * lo - c * active >= 0.0 {
            return Some(dir * lo);
        }
    }
    if quad > 0.0 {
        Some(dir * ((c * active - lin) / quad).max(lo))
    } else {
        None
    }
}

pub(crate) fn solve(
    x: &[[f64; 2]],
    y: &[f64],
    c: f64,
    tol: f64,
    max_iterations: usize,
) -> Solution {
    let n = x.len();
    let mut alpha = vec![0.0; n];
    let mut w = [0.0, 0.0];
    let mut grad = vec![-1.0; n];

    let mut best_w = w;
    let mut best_b = optimal_bias(x, y, &w);
    let mut best_p = primal(x, y, c, &w, best_b);
    let mut dual = 0.0;
    let mut trace = vec![best_p];
    let mut iterations = 0;

    loop {
        // maximal violating pair
        let (mut i, mut g_max) = (usize::MAX, f64::NEG_INFINITY);
        let (mut j, mut g_min) = (usize::MAX, f64::INFINITY);
        for k in 0..n {
            let v = -y[k] * grad[k];
            let up = if y[k] > 0.0 {
                alpha[k] < c
            } else {
                alpha[k] > 0.0
            };
            let low = if y[k] > 0.0 {
                alpha[k] > 0.0
            } else {
                alpha[k] < c
            };
            if up && v > g_max {
                g_max = v;
                i = k;
            }
            if low && v < g_min {
                g_min = v;
                j = k;
            }
        }
        let kkt_done = i == usize::MAX || j == usize::MAX || g_max - g_min < 1e-12;

        if iterations % GAP_CHECK_EVERY == 0 || kkt_done || iterations >= max_iterations {
            let b = optimal_bias(x, y, &w);
            let p = primal(x, y, c, &w, b);
            dual = alpha.iter().sum::<f64>() - 0.5 * dot(&w, &w);
            if p < best_p {
                best_p = p;
                best_w = w;
                best_b = b;
            }
            trace.push(best_p);
            if best_p - dual <= tol * best_p.abs().max(f64::MIN_POSITIVE) || kkt_done {
                break;
            }
            if iterations >= max_iterations {
                break;
            }
        }
        iterations += 1;

        // move along d with d_i = y_i, d_j = -y_j
        let diff = [x[i][0] - x[j][0], x[i][1] - x[j][1]];
        let curvature = dot(&diff, &diff);
        let slope = y[i] * grad[i] - y[j] * grad[j];
        let cap_i = if y[i] > 0.0 { c - alpha[i] } else { alpha[i] };
        let cap_j = if y[j] > 0.0 { alpha[j] } else { c - alpha[j] };
        let cap = cap_i.min(cap_j);
        let t = if curvature > 1e-12 {
            (-slope / curvature).min(cap)
        } else {
            cap
        };
        if t <= 0.0 {
            break;
        }
        alpha[i] += t * y[i];
        alpha[j] -= t * y[j];
        w[0] += t * diff[0];
        w[1] += t * diff[1];
        for k in 0..n {
            grad[k] = y[k] * dot(&w, &x[k]) - 1.0;
        }
    }

    // primal polish: exact line searches along the coordinate axes
    let directions = [([1.0, 0.0], 0.0), ([0.0, 1.0], 0.0), ([0.0, 0.0], 1.0)];
    for _ in 0..50 {
        let before = best_p;
        for (dw, db) in directions {
            if let Some(t) = line_search(x, y, c, &best_w, best_b, dw, db) {
                let cand_w = [best_w[0] + t * dw[0], best_w[1] + t * dw[1]];
                let cand_b = best_b + t * db;
                let p = primal(x, y, c, &cand_w, cand_b);
                if p < best_p {
                    best_p = p;
                    best_w = cand_w;
                    best_b = cand_b;
                }
            }
        }
        trace.push(best_p);
        if before - best_p <= tol * best_p.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }

    Solution {
        w: best_w,
        b: best_b,
        objective: best_p,
        dual_objective: dual,
        trace,
        iterations,
    }
}
