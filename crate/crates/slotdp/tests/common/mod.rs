//! Shared fixtures and independent oracles for the integration suites.
//!
//! The oracles here deliberately avoid the library's solver paths: the
//! backup oracle evaluates the price-space objective on a dense decision
//! grid with its own logit arithmetic, the closure oracle enumerates
//! support subsets directly, and the Hessian oracle uses central finite
//! differences of the revenue term.

#![allow(dead_code)]

use rand::RngExt;
use slotdp::{CostModel, ProblemInstance, StateGrid};

/// The 1-area, 2-slot reference instance solved throughout the suites.
pub fn example_instance() -> ProblemInstance {
    ProblemInstance {
        num_areas: 1,
        num_slots: 2,
        horizon: 200,
        lambda: 0.5,
        area_prob: vec![1.0],
        beta_c: 1.0,
        beta_slot: vec![1.0, -1.0],
        beta_d: -1.0,
        d_min: 0.0,
        d_max: 2.0,
        r: 1.0,
        capacity: vec![4, 4],
        cost: CostModel::Affine {
            intercept: 2.0,
            coefficients: vec![1.0, 2.0],
        },
    }
}

/// Same parameters on a 3x3 lattice (capacity 2 per pair), used by the
/// randomized suites.
pub fn small_instance() -> ProblemInstance {
    let mut inst = example_instance();
    inst.horizon = 40;
    inst.capacity = vec![2, 2];
    inst
}

/// Two areas with one slot each; the backup should decompose per area.
pub fn two_area_instance() -> ProblemInstance {
    ProblemInstance {
        num_areas: 2,
        num_slots: 1,
        horizon: 10,
        lambda: 0.6,
        area_prob: vec![0.7, 0.3],
        beta_c: 0.5,
        beta_slot: vec![0.0],
        beta_d: -1.2,
        d_min: 0.0,
        d_max: 2.0,
        r: 0.8,
        capacity: vec![2, 3],
        cost: CostModel::Affine {
            intercept: 1.0,
            coefficients: vec![0.5, 1.5],
        },
    }
}

/// Dense price-grid backup oracle for single-area instances with up to two
/// open slots. Evaluates the revenue-plus-continuation bracket directly.
pub fn oracle_backup_single_area(
    inst: &ProblemInstance,
    grid: &StateGrid,
    v_next: &[f64],
    state: usize,
    points: usize,
) -> f64 {
    assert_eq!(inst.num_areas, 1);
    let base = v_next[state];
    let open: Vec<usize> = (0..inst.num_slots)
        .filter(|s| grid.successor(state, *s).is_some())
        .collect();
    let weight = inst.lambda * inst.area_prob[0];
    let price = |i: usize| inst.d_min + (inst.d_max - inst.d_min) * i as f64 / (points - 1) as f64;
    let gain = |s: usize| inst.r + v_next[grid.successor(state, s).unwrap()] - base;

    match open.len() {
        0 => base,
        1 => {
            let s = open[0];
            let u = inst.beta_c + inst.beta_slot[s];
            let g = gain(s);
            let mut best = f64::NEG_INFINITY;
            for i in 0..points {
                let d = price(i);
                let e = (u + inst.beta_d * d).exp();
                let value = weight * e / (e + 1.0) * (g + d);
                best = best.max(value);
            }
            base + best
        }
        2 => {
            let (s1, s2) = (open[0], open[1]);
            let (u1, u2) = (
                inst.beta_c + inst.beta_slot[s1],
                inst.beta_c + inst.beta_slot[s2],
            );
            let (g1, g2) = (gain(s1), gain(s2));
            let e1: Vec<f64> = (0..points)
                .map(|i| (u1 + inst.beta_d * price(i)).exp())
                .collect();
            let e2: Vec<f64> = (0..points)
                .map(|j| (u2 + inst.beta_d * price(j)).exp())
                .collect();
            let mut best = f64::NEG_INFINITY;
            for i in 0..points {
                let d1 = price(i);
                let num1 = e1[i] * (g1 + d1);
                for j in 0..points {
                    let d2 = price(j);
                    let denom = e1[i] + e2[j] + 1.0;
                    let value = weight * (num1 + e2[j] * (g2 + d2)) / denom;
                    if value > best {
                        best = value;
                    }
                }
            }
            base + best
        }
        _ => panic!("oracle supports at most two open slots"),
    }
}

/// Joint price-grid backup oracle for two single-slot areas; optimises both
/// prices together rather than area by area.
pub fn oracle_backup_joint_two_areas(
    inst: &ProblemInstance,
    grid: &StateGrid,
    v_next: &[f64],
    state: usize,
    points: usize,
) -> f64 {
    assert_eq!(inst.num_areas, 2);
    assert_eq!(inst.num_slots, 1);
    let base = v_next[state];
    let price = |i: usize| inst.d_min + (inst.d_max - inst.d_min) * i as f64 / (points - 1) as f64;
    let u = inst.beta_c + inst.beta_slot[0];

    let area_values: Vec<Option<(f64, f64)>> = (0..2)
        .map(|a| {
            grid.successor(state, a).map(|succ| {
                let weight = inst.lambda * inst.area_prob[a];
                (weight, inst.r + v_next[succ] - base)
            })
        })
        .collect();

    let area_best = |a: usize, d: f64| -> f64 {
        match area_values[a] {
            None => 0.0,
            Some((weight, gain)) => {
                let e = (u + inst.beta_d * d).exp();
                weight * e / (e + 1.0) * (gain + d)
            }
        }
    };

    let mut best = f64::NEG_INFINITY;
    for i in 0..points {
        let v1 = area_best(0, price(i));
        for j in 0..points {
            let value = v1 + area_best(1, price(j));
            if value > best {
                best = value;
            }
        }
    }
    base + best
}

/// Brute-force concave closure on a 2-d lattice: the best convex
/// combination over all support subsets of size at most three.
pub fn caratheodory_closure(grid: &StateGrid, values: &[f64], target: &[f64]) -> f64 {
    assert_eq!(grid.dimension(), 2);
    let pts: Vec<[f64; 2]> = (0..grid.state_count())
        .map(|idx| {
            let x = grid.state(idx);
            [f64::from(x[0]), f64::from(x[1])]
        })
        .collect();
    let n = pts.len();
    let (tx, ty) = (target[0], target[1]);
    let mut best = f64::NEG_INFINITY;

    // Singletons.
    for i in 0..n {
        if (pts[i][0] - tx).abs() < 1e-12 && (pts[i][1] - ty).abs() < 1e-12 {
            best = best.max(values[i]);
        }
    }
    // Pairs: solve target = mu * p + (1 - mu) * q along the segment.
    for i in 0..n {
        for j in (i + 1)..n {
            let (p, q) = (pts[i], pts[j]);
            let (dx, dy) = (p[0] - q[0], p[1] - q[1]);
            let mu = if dx.abs() > dy.abs() {
                if dx.abs() < 1e-12 {
                    continue;
                }
                (tx - q[0]) / dx
            } else {
                if dy.abs() < 1e-12 {
                    continue;
                }
                (ty - q[1]) / dy
            };
            if !(-1e-12..=1.0 + 1e-12).contains(&mu) {
                continue;
            }
            let rx = mu * p[0] + (1.0 - mu) * q[0] - tx;
            let ry = mu * p[1] + (1.0 - mu) * q[1] - ty;
            if rx.abs() > 1e-9 || ry.abs() > 1e-9 {
                continue;
            }
            best = best.max(mu * values[i] + (1.0 - mu) * values[j]);
        }
    }
    // Triples: solve the 3x3 barycentric system by Cramer's rule.
    for i in 0..n {
        for j in (i + 1)..n {
            for k in (j + 1)..n {
                let (p, q, s) = (pts[i], pts[j], pts[k]);
                let det = (p[0] - s[0]) * (q[1] - s[1]) - (q[0] - s[0]) * (p[1] - s[1]);
                if det.abs() < 1e-9 {
                    continue; // collinear: covered by pairs
                }
                let m1 = ((tx - s[0]) * (q[1] - s[1]) - (q[0] - s[0]) * (ty - s[1])) / det;
                let m2 = ((p[0] - s[0]) * (ty - s[1]) - (tx - s[0]) * (p[1] - s[1])) / det;
                let m3 = 1.0 - m1 - m2;
                if m1 < -1e-12 || m2 < -1e-12 || m3 < -1e-12 {
                    continue;
                }
                best = best.max(m1 * values[i] + m2 * values[j] + m3 * values[k]);
            }
        }
    }
    best
}

/// Central-difference Hessian of the single-area revenue term, treating the
/// slot masses and the no-purchase mass as independent coordinates.
pub fn fd_hessian_single_area(inst: &ProblemInstance, masses: &[f64], p0: f64) -> Vec<f64> {
    assert_eq!(inst.num_areas, 1);
    let s = inst.num_slots;
    let n = s + 1;
    let f = |coords: &[f64]| -> f64 {
        let last = coords[s];
        let mut total = 0.0;
        for slot in 0..s {
            let mass = coords[slot];
            let u = inst.beta_c + inst.beta_slot[slot];
            total += mass * (inst.r + ((mass / last).ln() - u) / inst.beta_d);
        }
        total
    };
    let mut at = masses.to_vec();
    at.push(p0);
    let step: Vec<f64> = at.iter().map(|p| 3e-4 * p).collect();

    let mut h = vec![0.0f64; n * n];
    let f0 = f(&at);
    for i in 0..n {
        let mut plus = at.clone();
        let mut minus = at.clone();
        plus[i] += step[i];
        minus[i] -= step[i];
        h[i * n + i] = (f(&plus) - 2.0 * f0 + f(&minus)) / (step[i] * step[i]);
        for j in (i + 1)..n {
            let mut pp = at.clone();
            let mut pm = at.clone();
            let mut mp = at.clone();
            let mut mm = at.clone();
            pp[i] += step[i];
            pp[j] += step[j];
            pm[i] += step[i];
            pm[j] -= step[j];
            mp[i] -= step[i];
            mp[j] += step[j];
            mm[i] -= step[i];
            mm[j] -= step[j];
            let mixed = (f(&pp) - f(&pm) - f(&mp) + f(&mm)) / (4.0 * step[i] * step[j]);
            h[i * n + j] = mixed;
            h[j * n + i] = mixed;
        }
    }
    h
}

/// Random table bounded by `bound` in absolute value.
pub fn random_table<R: RngExt>(rng: &mut R, len: usize, bound: f64) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(-bound..bound)).collect()
}

/// Random strictly concave-extensible table: the pointwise minimum of a few
/// affine functions plus a separable concave quadratic. The quadratic keeps
/// every extensibility margin at least its curvature, so the implied
/// arrival-rate bounds are finite.
pub fn random_concave_table<R: RngExt>(rng: &mut R, grid: &StateGrid) -> Vec<f64> {
    let planes: Vec<[f64; 3]> = (0..rng.random_range(3..=5))
        .map(|_| {
            [
                rng.random_range(-3.0..3.0),
                rng.random_range(-3.0..3.0),
                rng.random_range(-3.0..3.0),
            ]
        })
        .collect();
    let curvature = rng.random_range(0.05..0.3);
    (0..grid.state_count())
        .map(|idx| {
            let x = grid.state(idx);
            let (a, b) = (f64::from(x[0]), f64::from(x[1]));
            let hull = planes
                .iter()
                .map(|[c, ca, cb]| c + ca * a + cb * b)
                .fold(f64::INFINITY, f64::min);
            hull - curvature * (a * a + b * b)
        })
        .collect()
}
