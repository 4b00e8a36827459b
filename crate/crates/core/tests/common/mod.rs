#![allow(dead_code)]

use olplab::distributions::StreamRng;
use olplab::domain::{Arrival, Instance};

/// Random instance with `c ~ U[-0.2, 1]`, `a_ij ~ U[-0.3, 1]` (some
/// negative entries to leave the knapsack path) and `d ~ U[0.1, 0.7]`.
pub fn random_instance(rng: &mut StreamRng, horizon: usize, m: usize, signed: bool) -> Instance {
    let lo = if signed { -0.3 } else { 0.0 };
    let arrivals: Vec<Arrival> = (0..horizon)
        .map(|_| {
            let c = rng.uniform(if signed { -0.2 } else { 0.0 }, 1.0);
            Arrival::new(c, (0..m).map(|_| rng.uniform(lo, 1.0)).collect())
        })
        .collect();
    let d = (0..m).map(|_| rng.uniform(0.1, 0.7)).collect();
    Instance::from_arrivals(&arrivals, d).unwrap()
}

/// `<b,y> + sum_t [c_t - <a_t,y>]_+`, the LP dual objective at `y >= 0`.
pub fn lp_dual_value(instance: &Instance, b: &[f64], y: &[f64]) -> f64 {
    let lin: f64 = b.iter().zip(y).map(|(b, y)| b * y).sum();
    lin + instance
        .iter()
        .map(|arr| (arr.c - arr.a.iter().zip(y).map(|(a, y)| a * y).sum::<f64>()).max(0.0))
        .sum::<f64>()
}

/// Brute-force optimum of `max <c,x> s.t. Ax <= b, 0 <= x <= 1`: every vertex
/// has each variable at a bound except at most `m`, which are pinned by as
/// many tight rows. Enumerates all such choices and keeps the best feasible.
pub fn vertex_enumeration(instance: &Instance, b: &[f64]) -> f64 {
    let n = instance.horizon();
    let m = instance.m;
    let mut best = f64::NEG_INFINITY;
    let mut state = vec![0u8; n]; // 0 lower, 1 upper, 2 free
    loop {
        let free: Vec<usize> = (0..n).filter(|&j| state[j] == 2).collect();
        if free.len() <= m {
            for rows in subsets(m, free.len()) {
                if let Some(x) = pin(instance, b, &state, &free, &rows) {
                    if feasible(instance, b, &x) {
                        let v: f64 = instance.c.iter().zip(&x).map(|(c, x)| c * x).sum();
                        best = best.max(v);
                    }
                }
            }
        }
        // next ternary assignment
        let mut j = 0;
        while j < n && state[j] == 2 {
            state[j] = 0;
            j += 1;
        }
        if j == n {
            break;
        }
        state[j] += 1;
    }
    best
}

fn subsets(m: usize, k: usize) -> Vec<Vec<usize>> {
    (0u32..1 << m)
        .filter(|mask| mask.count_ones() as usize == k)
        .map(|mask| (0..m).filter(|i| mask & (1 << i) != 0).collect())
        .collect()
}

fn pin(instance: &Instance, b: &[f64], state: &[u8], free: &[usize], rows: &[usize]) -> Option<Vec<f64>> {
    let m = instance.m;
    let mut x: Vec<f64> = state.iter().map(|s| if *s == 1 { 1.0 } else { 0.0 }).collect();
    let k = free.len();
    if k == 0 {
        return Some(x);
    }
    // k x k system: sum_{j free} a_{j,i} x_j = b_i - fixed part, for i in rows
    let mut mat = vec![0.0; k * (k + 1)];
    for (r, &i) in rows.iter().enumerate() {
        let fixed: f64 = (0..instance.horizon()).map(|j| instance.a[j * m + i] * x[j]).sum();
        for (c, &j) in free.iter().enumerate() {
            mat[r * (k + 1) + c] = instance.a[j * m + i];
        }
        mat[r * (k + 1) + k] = b[i] - fixed;
    }
    let sol = gauss(&mut mat, k)?;
    for (c, &j) in free.iter().enumerate() {
        x[j] = sol[c];
    }
    Some(x)
}

fn gauss(mat: &mut [f64], k: usize) -> Option<Vec<f64>> {
    let w = k + 1;
    for col in 0..k {
        let piv = (col..k).max_by(|&p, &q| mat[p * w + col].abs().total_cmp(&mat[q * w + col].abs()))?;
        if mat[piv * w + col].abs() < 1e-12 {
            return None;
        }
        for c in 0..w {
            mat.swap(col * w + c, piv * w + c);
        }
        for r in 0..k {
            if r != col {
                let f = mat[r * w + col] / mat[col * w + col];
                for c in col..w {
                    mat[r * w + c] -= f * mat[col * w + c];
                }
            }
        }
    }
    Some((0..k).map(|r| mat[r * w + k] / mat[r * w + r]).collect())
}

fn feasible(instance: &Instance, b: &[f64], x: &[f64]) -> bool {
    let tol = 1e-9;
    if x.iter().any(|v| *v < -tol || *v > 1.0 + tol) {
        return false;
    }
    (0..instance.m).all(|i| {
        let used: f64 = instance.iter().zip(x).map(|(arr, x)| arr.a[i] * x).sum();
        used <= b[i] + tol
    })
}

/// Relative tolerance scale used by the duality checks.
pub fn scale(instance: &Instance, b: &[f64]) -> f64 {
    1.0 + instance.c.iter().map(|c| c.abs()).sum::<f64>() + b.iter().map(|v| v.abs()).sum::<f64>()
}
