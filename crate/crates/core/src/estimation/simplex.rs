//! Nelder-Mead simplex descent in the unit box.
//!
//! Coordinates flagged as periodic are left unbounded (the caller wraps them
//! when mapping back to parameters); all others are projected onto `[0, 1]`
//! after every move. Coefficients follow the dimension-adaptive choice of
//! Gao and Han (2012).

pub(crate) struct SimplexOptions {
    pub max_iterations: usize,
    /// Stop once every vertex lies within this distance of the best one.
    pub diameter_tol: f64,
    pub initial_step: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct SimplexOutcome<const N: usize> {
    pub x: [f64; N],
    pub f: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub(crate) fn minimize<const N: usize, F>(
    objective: F,
    start: [f64; N],
    periodic: [bool; N],
    opts: &SimplexOptions,
) -> SimplexOutcome<N>
where
    F: Fn(&[f64; N]) -> f64,
{
    let n = N as f64;
    let (reflect, expand, contract, shrink) = (1.0, 1.0 + 2.0 / n, 0.75 - 0.5 / n, 1.0 - 1.0 / n);

    let project = |mut x: [f64; N]| {
        for (v, p) in x.iter_mut().zip(periodic) {
            if !p {
                *v = v.clamp(0.0, 1.0);
            }
        }
        x
    };
    let eval = |x: &[f64; N]| {
        let f = objective(x);
        if f.is_nan() {
            f64::INFINITY
        } else {
            f
        }
    };

    let start = project(start);
    let mut vertices: Vec<([f64; N], f64)> = Vec::with_capacity(N + 1);
    vertices.push((start, eval(&start)));
    for i in 0..N {
        let mut x = start;
        // step inward when the start sits near the upper face
        let step = if !periodic[i] && x[i] + opts.initial_step > 1.0 {
            -opts.initial_step
        } else {
            opts.initial_step
        };
        x[i] += step;
        let x = project(x);
        vertices.push((x, eval(&x)));
    }

    let mut iterations = 0;
    let mut converged = false;
    loop {
        vertices.sort_by(|a, b| a.1.total_cmp(&b.1));
        if diameter(&vertices) < opts.diameter_tol {
            converged = true;
            break;
        }
        if iterations >= opts.max_iterations {
            break;
        }
        iterations += 1;

        let mut centroid = [0.0; N];
        for (x, _) in &vertices[..N] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v / n;
            }
        }
        let worst = vertices[N];
        let along = |t: f64| {
            project(std::array::from_fn(|i| {
                centroid[i] + t * (worst.0[i] - centroid[i])
            }))
        };

        let xr = along(-reflect);
        let fr = eval(&xr);
        if fr < vertices[0].1 {
            let xe = along(-reflect * expand);
            let fe = eval(&xe);
            vertices[N] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < vertices[N - 1].1 {
            vertices[N] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < worst.1 {
            let xc = along(-reflect * contract);
            (xc, eval(&xc))
        } else {
            let xc = along(contract);
            (xc, eval(&xc))
        };
        if fc < fr.min(worst.1) {
            vertices[N] = (xc, fc);
            continue;
        }
        let best = vertices[0].0;
        for vertex in vertices.iter_mut().skip(1) {
            let x = project(std::array::from_fn(|i| {
                best[i] + shrink * (vertex.0[i] - best[i])
            }));
            *vertex = (x, eval(&x));
        }
    }

    SimplexOutcome {
        x: vertices[0].0,
        f: vertices[0].1,
        iterations,
        converged,
    }
}

fn diameter<const N: usize>(vertices: &[([f64; N], f64)]) -> f64 {
    let best = &vertices[0].0;
    vertices[1..]
        .iter()
        .map(|(x, _)| {
            x.iter()
                .zip(best)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0, f64::max)
}
