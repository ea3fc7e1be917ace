//! Mixing-theory toolkit on enumerated state spaces.

use crate::chain::Dense;
use crate::numeric::Scalar;
use crate::par::{map_range, Exec};
use crate::{Error, Result};
use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

pub const STEP_CAP: usize = 1_000_000;

pub fn tv(mu: &[f64], nu: &[f64]) -> Result<f64> {
    if mu.len() != nu.len() {
        return Err(Error::Mismatch(format!("{} vs {}", mu.len(), nu.len())));
    }
    Ok(0.5 * mu.iter().zip(nu).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

pub fn to_matrix(p: &Dense<impl Scalar>) -> DMatrix<f64> {
    let n = p.len();
    DMatrix::from_fn(n, n, |i, j| p[i][j].to_f64())
}

/// max_y |(πP)(y) − π(y)|.
pub fn stationarity_residual(p: &DMatrix<f64>, pi: &[f64]) -> f64 {
    let n = pi.len();
    (0..n)
        .map(|y| ((0..n).map(|x| pi[x] * p[(x, y)]).sum::<f64>() - pi[y]).abs())
        .fold(0.0, f64::max)
}

/// max_{x,y} |π(x)P(x,y) − π(y)P(y,x)|.
pub fn reversibility_residual(p: &DMatrix<f64>, pi: &[f64]) -> f64 {
    let n = pi.len();
    let mut r: f64 = 0.0;
    for x in 0..n {
        for y in x + 1..n {
            r = r.max((pi[x] * p[(x, y)] - pi[y] * p[(y, x)]).abs());
        }
    }
    r
}

/// Exact detailed balance check.
pub fn detailed_balance_exact<T: Scalar>(p: &Dense<T>, pi: &[T]) -> bool {
    let n = pi.len();
    (0..n).all(|x| {
        (x + 1..n).all(|y| pi[x].clone() * p[x][y].clone() == pi[y].clone() * p[y][x].clone())
    })
}

/// Exact detailed balance on sparse rows: every stored entry has a matching reverse entry.
pub fn detailed_balance_sparse<T: Scalar>(rows: &[Vec<(usize, T)>], pi: &[T]) -> bool {
    let get = |x: usize, y: usize| -> T {
        rows[x].binary_search_by_key(&y, |e| e.0).map(|i| rows[x][i].1.clone()).unwrap_or_else(|_| T::zero())
    };
    rows.len() == pi.len()
        && rows.iter().enumerate().all(|(x, r)| {
            r.iter().all(|(y, p)| pi[x].clone() * p.clone() == pi[*y].clone() * get(*y, x))
        })
}

fn check_stationary(p: &DMatrix<f64>, pi: &[f64]) -> Result<()> {
    if p.nrows() != pi.len() || p.ncols() != pi.len() {
        return Err(Error::Mismatch("matrix and distribution sizes".into()));
    }
    let r = stationarity_residual(p, pi);
    if r > 1e-9 {
        return Err(Error::NotStationary(r));
    }
    Ok(())
}

fn max_row_tv(m: &DMatrix<f64>, pi: &[f64], exec: Exec) -> f64 {
    let n = pi.len();
    map_range(exec, n, |x| 0.5 * (0..n).map(|y| (m[(x, y)] - pi[y]).abs()).sum::<f64>())
        .into_iter()
        .fold(0.0, f64::max)
}

fn mul(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a * b
}

/// d(t) = max_x tv(P^t(x,·), π).
pub fn worst_case_distance(p: &DMatrix<f64>, pi: &[f64], t: usize) -> Result<f64> {
    check_stationary(p, pi)?;
    Ok(max_row_tv(&power(p, t), pi, Exec::default()))
}

pub fn power(p: &DMatrix<f64>, mut t: usize) -> DMatrix<f64> {
    let n = p.nrows();
    let mut acc = DMatrix::<f64>::identity(n, n);
    let mut base = p.clone();
    while t > 0 {
        if t & 1 == 1 {
            acc = mul(&acc, &base);
        }
        t >>= 1;
        if t > 0 {
            base = mul(&base, &base);
        }
    }
    acc
}

/// d(0), d(1), …, d(tmax) by repeated multiplication.
pub fn d_curve(p: &DMatrix<f64>, pi: &[f64], tmax: usize) -> Result<Vec<f64>> {
    check_stationary(p, pi)?;
    let n = pi.len();
    let mut cur = DMatrix::<f64>::identity(n, n);
    let mut out = vec![max_row_tv(&cur, pi, Exec::default())];
    for _ in 0..tmax {
        cur = mul(&cur, p);
        out.push(max_row_tv(&cur, pi, Exec::default()));
    }
    Ok(out)
}

/// min{t : d(t) ≤ ε}, by doubling then bisection over matrix powers.
pub fn mixing_time(p: &DMatrix<f64>, pi: &[f64], eps: f64) -> Result<usize> {
    mixing_time_capped(p, pi, eps, STEP_CAP)
}

pub fn mixing_time_capped(p: &DMatrix<f64>, pi: &[f64], eps: f64, cap: usize) -> Result<usize> {
    check_stationary(p, pi)?;
    let exec = Exec::default();
    let n = pi.len();
    if max_row_tv(&DMatrix::identity(n, n), pi, exec) <= eps {
        return Ok(0);
    }
    // powers[k] = P^(2^k)
    let mut powers = vec![p.clone()];
    let mut t = 1usize;
    while max_row_tv(powers.last().unwrap(), pi, exec) > eps {
        if t >= cap {
            return Err(Error::Guard(format!("mixing time exceeds the step cap {cap}")));
        }
        let last = powers.last().unwrap();
        powers.push(mul(last, last));
        t *= 2;
    }
    // d(lo) > ε ≥ d(hi); lo's power kept as a product of binary powers
    let k = powers.len() - 1;
    if k == 0 {
        return Ok(1);
    }
    let mut lo = t / 2;
    let mut lo_mat = powers[k - 1].clone();
    for j in (0..k - 1).rev() {
        let cand = mul(&lo_mat, &powers[j]);
        if max_row_tv(&cand, pi, exec) > eps {
            lo += 1 << j;
            lo_mat = cand;
        }
    }
    Ok(lo + 1)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Spectrum {
    /// Eigenvalues in decreasing order.
    pub eigenvalues: Vec<f64>,
    pub gamma: f64,
    pub gamma_star: f64,
}

impl Spectrum {
    pub fn t_rel(&self) -> f64 {
        1.0 / self.gamma_star
    }
}

/// Eigenvalues of the π-symmetrized kernel and the two gaps.
pub fn spectral_gap(p: &DMatrix<f64>, pi: &[f64]) -> Result<Spectrum> {
    let n = pi.len();
    if p.nrows() != n || p.ncols() != n {
        return Err(Error::Mismatch("matrix and distribution sizes".into()));
    }
    let r = reversibility_residual(p, pi);
    if r > 1e-9 {
        return Err(Error::NotReversible(r));
    }
    let s: Vec<f64> = pi.iter().map(|x| x.sqrt()).collect();
    let a = DMatrix::from_fn(n, n, |i, j| {
        let x = s[i] * p[(i, j)] / s[j];
        let y = s[j] * p[(j, i)] / s[i];
        0.5 * (x + y)
    });
    let mut ev: Vec<f64> = SymmetricEigen::new(a).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let gamma = if n > 1 { 1.0 - ev[1] } else { 1.0 };
    let lstar = ev.iter().skip(1).map(|x| x.abs()).fold(0.0, f64::max);
    let gamma_star = if n > 1 { 1.0 - lstar } else { 1.0 };
    let lazy = (0..n).all(|i| p[(i, i)] >= 0.5 - 1e-12);
    if lazy && (gamma - gamma_star).abs() > 1e-9 {
        return Err(Error::Argument(format!("lazy kernel with gamma {gamma} != gamma* {gamma_star}")));
    }
    Ok(Spectrum { eigenvalues: ev, gamma, gamma_star })
}

/// (lower, upper) = ((t_rel − 1)·log(1/(2ε)), log(1/(ε·π_min))·t_rel).
pub fn relaxation_bounds(t_rel: f64, pi_min: f64, eps: f64) -> (f64, f64) {
    ((t_rel - 1.0) * (1.0 / (2.0 * eps)).ln(), (1.0 / (eps * pi_min)).ln() * t_rel)
}

/// Paths between states, as sequences of state indices, keyed by their endpoints.
#[derive(Clone, Debug, Default)]
pub struct PathFamily {
    pub paths: Vec<((usize, usize), Vec<usize>)>,
}

/// Worst-edge load of routing `pt`'s transitions along `paths` through `p`'s support.
pub fn congestion_ratio(
    p: &DMatrix<f64>,
    pi: &[f64],
    pt: &DMatrix<f64>,
    pit: &[f64],
    paths: &PathFamily,
) -> Result<f64> {
    let n = pi.len();
    let mut load = std::collections::HashMap::<(usize, usize), f64>::new();
    for &((x, y), ref path) in &paths.paths {
        if path.first() != Some(&x) || path.last() != Some(&y) {
            return Err(Error::Argument(format!("path endpoints for ({x},{y})")));
        }
        let len = (path.len() - 1) as f64;
        let qt = pit[x] * pt[(x, y)];
        for w in path.windows(2) {
            let (a, b) = (w[0], w[1]);
            if a >= n || b >= n || p[(a, b)] <= 0.0 {
                return Err(Error::OffSupport(a, b));
            }
            *load.entry((a, b)).or_insert(0.0) += qt * len;
        }
    }
    Ok(load
        .into_iter()
        .map(|((a, b), l)| l / (pi[a] * p[(a, b)]))
        .fold(0.0, f64::max))
}

fn adjacency(p: &DMatrix<f64>) -> Vec<Vec<usize>> {
    let n = p.nrows();
    (0..n)
        .map(|x| (0..n).filter(|&y| y != x && (p[(x, y)] > 0.0 || p[(y, x)] > 0.0)).collect())
        .collect()
}

/// Diameter of the support graph; `None` when disconnected.
pub fn diameter(p: &DMatrix<f64>) -> Option<usize> {
    let adj = adjacency(p);
    let n = adj.len();
    let ecc = map_range(Exec::default(), n, |s| {
        let mut dist = vec![usize::MAX; n];
        dist[s] = 0;
        let mut q = VecDeque::from([s]);
        let mut far = 0;
        let mut seen = 1;
        while let Some(x) = q.pop_front() {
            far = far.max(dist[x]);
            for &y in &adj[x] {
                if dist[y] == usize::MAX {
                    dist[y] = dist[x] + 1;
                    seen += 1;
                    q.push_back(y);
                }
            }
        }
        (seen == n).then_some(far)
    });
    ecc.into_iter().try_fold(0, |m, e| e.map(|e| m.max(e)))
}

pub fn diameter_lower_bound(p: &DMatrix<f64>) -> Option<f64> {
    diameter(p).map(|l| l as f64 / 2.0)
}

/// Connected components of the support graph, each sorted, ordered by smallest member.
pub fn support_components(p: &DMatrix<f64>) -> Vec<Vec<usize>> {
    let n = p.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while parent[r] != r {
            r = parent[r];
        }
        let mut y = x;
        while parent[y] != r {
            let nx = parent[y];
            parent[y] = r;
            y = nx;
        }
        r
    }
    for x in 0..n {
        for y in 0..n {
            if x != y && p[(x, y)] > 0.0 {
                let (a, b) = (find(&mut parent, x), find(&mut parent, y));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for x in 0..n {
        let r = find(&mut parent, x);
        groups.entry(r).or_default().push(x);
    }
    groups.into_values().collect()
}

/// 1 − θ for a measured contraction factor θ.
pub fn contraction_gap_bound(theta: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&theta) {
        return Err(Error::Argument(format!("contraction factor {theta} outside [0,1)")));
    }
    Ok(1.0 - theta)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Sandwich {
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Report {
    pub gamma: f64,
    pub gamma_star: f64,
    pub t_rel: f64,
    pub t_mix: usize,
    pub d_curve: Vec<f64>,
    pub diameter: Option<usize>,
    pub components: usize,
    pub congestion_b: Option<f64>,
    pub sandwich: Sandwich,
}

/// Full analysis of a reversible kernel; `curve_len` bounds the emitted d(t) prefix.
pub fn analyze(p: &DMatrix<f64>, pi: &[f64], curve_len: usize) -> Result<Report> {
    let spec = spectral_gap(p, pi)?;
    let t_mix = mixing_time(p, pi, 0.25)?;
    let pi_min = pi.iter().copied().fold(f64::INFINITY, f64::min);
    let (lower, upper) = relaxation_bounds(spec.t_rel(), pi_min, 0.25);
    Ok(Report {
        gamma: spec.gamma,
        gamma_star: spec.gamma_star,
        t_rel: spec.t_rel(),
        t_mix,
        d_curve: d_curve(p, pi, curve_len.min(t_mix))?,
        diameter: diameter(p),
        components: support_components(p).len(),
        congestion_b: None,
        sandwich: Sandwich { lower, upper },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_state() {
        let p = DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.5, 0.5]);
        let pi = [0.5, 0.5];
        assert_eq!(mixing_time(&p, &pi, 0.25).unwrap(), 1);
        let s = spectral_gap(&p, &pi).unwrap();
        assert!((s.gamma - 1.0).abs() < 1e-12);
        assert!((tv(&[0.5, 0.5], &[1.0, 0.0]).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn identity_gap_zero() {
        let p = DMatrix::<f64>::identity(3, 3);
        let s = spectral_gap(&p, &[0.2, 0.3, 0.5]).unwrap();
        assert!(s.gamma.abs() < 1e-12);
        assert_eq!(support_components(&p).len(), 3);
    }
}
