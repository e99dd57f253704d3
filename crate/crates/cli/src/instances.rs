//! Seed-fixed random instances used by `repro` and the test suites.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::problem::{Hierarchy, MonoTermSpec, PolySpec, ProblemFile, SetSpec, TrigTermSpec};

/// Seed of the three-polynomial instance behind the one-dimensional figures.
pub const FIG_SEED: u64 = 1000;
/// Seed of the instance on which alternating two-stage stalls.
pub const ALTERNATE_SEED: u64 = 1008;
/// Seed of the bivariate instance.
pub const BIVARIATE_SEED: u64 = 2001;
/// Seed of the four-polynomial instance on the square.
pub const SQUARE_SEED: u64 = 4000;

fn empty(set_x: SetSpec) -> ProblemFile {
    ProblemFile {
        command: None,
        seed: None,
        set_x: Some(set_x),
        set_y: None,
        g: None,
        g_list: None,
        hierarchy: None,
        levels: None,
        iters: None,
        matrix: None,
    }
}

/// `c_0 + Σ_{w=1}^{deg} c_w cos 2πwx + s_w sin 2πwx` with coefficients
/// uniform on `[−1, 1]`.
pub fn random_trig(rng: &mut ChaCha8Rng, deg: i32) -> PolySpec {
    let mut terms = vec![TrigTermSpec { freq: vec![0], cos: rng.random_range(-1.0..1.0), sin: 0.0 }];
    for w in 1..=deg {
        let cos = rng.random_range(-1.0..1.0);
        let sin = rng.random_range(-1.0..1.0);
        terms.push(TrigTermSpec { freq: vec![w], cos, sin });
    }
    PolySpec::Trig { terms }
}

/// Three random degree-2 trigonometric polynomials on `[0, 1]`, data degree
/// `r = 2`.
pub fn three_poly(seed: u64) -> ProblemFile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g: Vec<PolySpec> = (0..3).map(|_| random_trig(&mut rng, 2)).collect();
    ProblemFile {
        set_y: Some(SetSpec::Finite { p: 3 }),
        g_list: Some(g),
        seed: Some(0),
        ..empty(SetSpec::Trig { d: 1, r: 2, s: None })
    }
}

/// Random `g(x, y)` on `[0, 1]²` with frequencies `|a| ≤ 2`, `0 ≤ b ≤ 2`,
/// minimized over `x` and maximized over `y`.
pub fn bivariate(seed: u64) -> ProblemFile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut terms = Vec::new();
    for a in -2..=2i32 {
        for b in 0..=2i32 {
            if b == 0 && a < 0 {
                continue;
            }
            let cos = rng.random_range(-1.0..1.0);
            let sin = if a == 0 && b == 0 { 0.0 } else { rng.random_range(-1.0..1.0) };
            terms.push(TrigTermSpec { freq: vec![a, b], cos, sin });
        }
    }
    ProblemFile {
        set_y: Some(SetSpec::Trig { d: 1, r: 1, s: None }),
        g: Some(PolySpec::Trig { terms }),
        hierarchy: Some(Hierarchy { sx: Some(2), sy: Some(2) }),
        seed: Some(0),
        ..empty(SetSpec::Trig { d: 1, r: 1, s: None })
    }
}

/// Two random linear-plus-pairwise functions on `{−1, 1}³`.
pub fn boolean(seed: u64) -> ProblemFile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mk = || {
        let mut terms = vec![MonoTermSpec { exp: vec![0, 0, 0], coef: rng.random_range(-1.0..1.0) }];
        for i in 0..3 {
            let mut e = vec![0; 3];
            e[i] = 1;
            terms.push(MonoTermSpec { exp: e, coef: rng.random_range(-1.0..1.0) });
        }
        for i in 0..3 {
            for j in i + 1..3 {
                let mut e = vec![0; 3];
                e[i] = 1;
                e[j] = 1;
                terms.push(MonoTermSpec { exp: e, coef: rng.random_range(-1.0..1.0) });
            }
        }
        PolySpec::Monomial { terms }
    };
    let g = vec![mk(), mk()];
    ProblemFile {
        set_y: Some(SetSpec::Finite { p: 2 }),
        g_list: Some(g),
        seed: Some(0),
        ..empty(SetSpec::Boolcube { d: 3, r: 1, s: None })
    }
}

/// Four random trigonometric polynomials on `[0, 1]²` with frequencies in
/// `{−1, 0, 1}²`.
pub fn four_poly_square(seed: u64) -> ProblemFile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let freqs = [[0, 0], [1, 0], [0, 1], [1, 1], [1, -1]];
    let g: Vec<PolySpec> = (0..4)
        .map(|_| {
            let terms = freqs
                .iter()
                .map(|w| {
                    let cos = rng.random_range(-1.0..1.0);
                    let sin = if w == &[0, 0] { 0.0 } else { rng.random_range(-1.0..1.0) };
                    TrigTermSpec { freq: w.to_vec(), cos, sin }
                })
                .collect();
            PolySpec::Trig { terms }
        })
        .collect();
    ProblemFile {
        set_y: Some(SetSpec::Finite { p: 4 }),
        g_list: Some(g),
        seed: Some(0),
        ..empty(SetSpec::Trig { d: 2, r: 1, s: None })
    }
}

/// `{x ∈ [−1, 1] : x − 2 ≥ 0}`, which is empty.
pub fn shifted_line() -> ProblemFile {
    ProblemFile {
        g_list: Some(vec![PolySpec::Monomial {
            terms: vec![MonoTermSpec { exp: vec![0], coef: -2.0 }, MonoTermSpec { exp: vec![1], coef: 1.0 }],
        }]),
        seed: Some(0),
        ..empty(SetSpec::Ball { d: 1, r: 1, s: None })
    }
}
