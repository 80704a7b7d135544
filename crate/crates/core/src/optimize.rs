//! One-dimensional minimization: golden-section search and a log-spaced
//! probe grid followed by golden-section refinement.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum {
    pub x: f64,
    pub value: f64,
    pub evaluations: usize,
}

/// Golden-section search for a minimum of `f` on `[lo, hi]`, stopping once
/// the bracket is narrower than `xtol`.
pub fn golden_section<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    xtol: f64,
    max_iter: usize,
) -> Minimum {
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut evaluations = 2;
    for _ in 0..max_iter {
        if (b - a).abs() <= xtol {
            break;
        }
        if fc <= fd {
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
        evaluations += 1;
    }
    if fc <= fd {
        Minimum { x: c, value: fc, evaluations }
    } else {
        Minimum { x: d, value: fd, evaluations }
    }
}

/// `count` points from `lo` to `hi` inclusive, equally spaced in log scale.
pub fn log_space(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > 0.0, "log_space needs positive bounds");
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..count)
                .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
                .collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeOutcome {
    pub x: f64,
    pub value: f64,
    pub best_probe: f64,
    pub best_probe_value: f64,
    pub evaluations: usize,
    /// The best probe was the last grid point.
    pub hit_upper: bool,
}

/// Evaluates `f` on a log-spaced grid over `[lo, hi]`, then refines around
/// the best probe with golden-section search in `ln x`, to relative
/// tolerance `rel_tol`. The returned point is never worse than the best probe.
pub fn probe_then_refine<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    probes: usize,
    rel_tol: f64,
) -> ProbeOutcome {
    let grid = log_space(lo, hi, probes.max(3));
    let values: Vec<f64> = grid.iter().map(|&x| f(x)).collect();
    let best = values
        .iter()
        .enumerate()
        .filter(|(_, v)| !v.is_nan())
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let left = grid[best.saturating_sub(1)];
    let right = grid[(best + 1).min(grid.len() - 1)];
    let refined = golden_section(
        |u| f(u.exp()),
        left.ln(),
        right.ln(),
        (1.0 + rel_tol).ln(),
        200,
    );
    let (x, value) = if refined.value <= values[best] {
        (refined.x.exp(), refined.value)
    } else {
        (grid[best], values[best])
    };
    ProbeOutcome {
        x,
        value,
        best_probe: grid[best],
        best_probe_value: values[best],
        evaluations: grid.len() + refined.evaluations,
        hit_upper: best == grid.len() - 1,
    }
}
