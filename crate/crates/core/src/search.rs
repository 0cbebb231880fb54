//! Internal numerical search utilities: seeded sampling, scalar root localization,
//! golden-section minimization, and a derivative-free pattern search.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Deterministic per-stream generator. Streams keep independent computations
/// (for example per-atom searches) decoupled from one another.
pub(crate) fn seeded_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Standard normal via Box-Muller.
pub(crate) fn gaussian(rng: &mut ChaCha20Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

pub(crate) fn gaussian_vec(rng: &mut ChaCha20Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| gaussian(rng)).collect()
}

/// A random vector of unit length under the given norm function.
pub(crate) fn random_unit(
    rng: &mut ChaCha20Rng,
    dim: usize,
    norm: &impl Fn(&[f64]) -> f64,
) -> Vec<f64> {
    loop {
        let v = gaussian_vec(rng, dim);
        let n = norm(&v);
        if n > 1e-8 {
            return v.iter().map(|&x| x / n).collect();
        }
    }
}

/// Bisection for `f(t) = target` on `[lo, hi]`, assuming `f(lo) - target` and
/// `f(hi) - target` have opposite (or zero) signs.
pub(crate) fn bisect_to(
    f: &impl Fn(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    target: f64,
    iters: usize,
) -> f64 {
    let mut flo = f(lo) - target;
    if flo == 0.0 {
        return lo;
    }
    if f(hi) - target == 0.0 {
        return hi;
    }
    for _ in 0..iters {
        let mid = 0.5 * (lo + hi);
        let fmid = f(mid) - target;
        if fmid == 0.0 {
            return mid;
        }
        if (fmid > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// All solutions of `f(t) = target` found by scanning `segments` equal pieces of
/// `[lo, hi]` for sign changes and bisecting each.
pub(crate) fn scan_roots(
    f: &impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    target: f64,
    segments: usize,
) -> Vec<f64> {
    let mut roots = Vec::new();
    let h = (hi - lo) / segments as f64;
    let mut t_prev = lo;
    let mut g_prev = f(lo) - target;
    if g_prev.abs() <= 1e-13 {
        roots.push(lo);
    }
    for k in 1..=segments {
        let t = lo + h * k as f64;
        let g = f(t) - target;
        if g.abs() <= 1e-13 {
            roots.push(t);
        } else if g_prev != 0.0 && (g > 0.0) != (g_prev > 0.0) {
            roots.push(bisect_to(f, t_prev, t, target, 80));
        }
        t_prev = t;
        g_prev = g;
    }
    roots
}

/// Golden-section minimization of a unimodal-ish scalar function on `[a, b]`.
pub(crate) fn golden_min(
    f: &impl Fn(f64) -> f64,
    mut a: f64,
    mut b: f64,
    iters: usize,
) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iters {
        if fc < fd {
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
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Coordinate-wise pattern search. Starting from `state`, tries +/- step moves on
/// each coordinate, keeps improvements, and halves the step after a sweep without
/// progress. Infeasible states are signalled by `eval` returning +inf.
pub(crate) fn pattern_search(
    state: &mut [f64],
    eval: &impl Fn(&[f64]) -> f64,
    sweeps: usize,
    step0: f64,
) -> f64 {
    let mut best = eval(state);
    let mut step = step0;
    let mut trial = state.to_vec();
    for _ in 0..sweeps {
        let mut improved = false;
        for i in 0..state.len() {
            for sgn in [1.0, -1.0] {
                trial.copy_from_slice(state);
                trial[i] += sgn * step;
                let v = eval(&trial);
                if v < best - 1e-15 {
                    best = v;
                    state.copy_from_slice(&trial);
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            step *= 0.5;
            if step < 1e-10 {
                break;
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_cube_root() {
        let f = |t: f64| t * t * t;
        let r = bisect_to(&f, 0.0, 2.0, 5.0, 80);
        assert!((r - 5f64.powf(1.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn scan_finds_both_roots() {
        let f = |t: f64| t * t;
        let roots = scan_roots(&f, -2.0, 2.0, 1.0, 64);
        assert_eq!(roots.len(), 2);
        assert!((roots[0] + 1.0).abs() < 1e-10 && (roots[1] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn golden_minimizes_parabola() {
        // Argument accuracy for a derivative-free method on a flat quadratic is
        // sqrt(machine epsilon); the value converges fully.
        let f = |t: f64| (t - 0.3) * (t - 0.3) + 1.0;
        let (x, fx) = golden_min(&f, -1.0, 1.0, 80);
        assert!((x - 0.3).abs() < 1e-6);
        assert!((fx - 1.0).abs() < 1e-15);
    }

    #[test]
    fn pattern_search_descends() {
        let eval = |s: &[f64]| (s[0] - 1.0).powi(2) + (s[1] + 2.0).powi(2);
        let mut state = vec![0.0, 0.0];
        let best = pattern_search(&mut state, &eval, 200, 0.5);
        assert!(best < 1e-12);
    }

    #[test]
    fn seeded_rng_is_deterministic() {
        let mut a = seeded_rng(7, 3);
        let mut b = seeded_rng(7, 3);
        for _ in 0..10 {
            assert_eq!(gaussian(&mut a), gaussian(&mut b));
        }
        let mut c = seeded_rng(7, 4);
        assert_ne!(gaussian(&mut a), gaussian(&mut c));
    }
}
