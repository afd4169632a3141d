use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lattice::lattice_transform;
use super::LatticeSpec;
use crate::error::{Error, Result};
use crate::profiles::PointPotential;

const MAX_DIM: u128 = 2_000_000;
const DENSE_LIMIT: usize = 800;

/// Basis used for exact diagonalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sector {
    /// Momentum occupation states with total momentum index K (mod M).
    Momentum(i64),
    /// Site occupation states, all momenta together.
    RealSpace,
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) as u128 / (i + 1) as u128;
    }
    r
}

/// Ranks sorted combinations in colex order.
struct Ranker {
    table: Vec<Vec<u64>>,
}

impl Ranker {
    fn new(m: usize, n: usize) -> Self {
        let table = (0..=m)
            .map(|i| (0..=n).map(|j| binomial(i, j) as u64).collect())
            .collect();
        Self { table }
    }

    fn rank(&self, combo: &[usize]) -> u64 {
        combo.iter().enumerate().map(|(i, c)| self.table[*c][i + 1]).sum()
    }
}

fn combinations(m: usize, n: usize, mut keep: impl FnMut(&[usize]) -> bool) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut c: Vec<usize> = (0..n).collect();
    loop {
        if keep(&c) {
            out.push(c.clone());
        }
        // next combination in lexicographic order
        let mut i = n;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if c[i] < m - n + i {
                break;
            }
        }
        c[i] += 1;
        for j in i + 1..n {
            c[j] = c[j - 1] + 1;
        }
    }
}

fn annihilate(state: &mut Vec<usize>, k: usize) -> Option<f64> {
    let pos = state.binary_search(&k).ok()?;
    state.remove(pos);
    Some(if pos % 2 == 0 { 1.0 } else { -1.0 })
}

fn create(state: &mut Vec<usize>, k: usize) -> Option<f64> {
    match state.binary_search(&k) {
        Ok(_) => None,
        Err(pos) => {
            state.insert(pos, k);
            Some(if pos % 2 == 0 { 1.0 } else { -1.0 })
        }
    }
}

/// Symmetric sparse matrix in row-compressed form.
struct Csr {
    rows: Vec<Vec<(usize, f64)>>,
}

impl Csr {
    fn dim(&self) -> usize {
        self.rows.len()
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .par_iter()
            .map(|r| r.iter().map(|(j, v)| v * x[*j]).sum())
            .collect()
    }

    fn dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for (i, r) in self.rows.iter().enumerate() {
            for (j, v) in r {
                m[(i, *j)] += v;
            }
        }
        m
    }
}

fn merge_row(mut entries: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    entries.sort_by_key(|e| e.0);
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
    for (j, v) in entries {
        match out.last_mut() {
            Some(last) if last.0 == j => last.1 += v,
            _ => out.push((j, v)),
        }
    }
    out
}

fn momentum_hamiltonian(spec: &LatticeSpec, p: &PointPotential, k_total: i64) -> Result<Csr> {
    let m = spec.m;
    let target = k_total.rem_euclid(m as i64) as usize;
    let basis = combinations(m, spec.n, |c| c.iter().sum::<usize>() % m == target);
    let ranker = Ranker::new(m, spec.n);
    let index: std::collections::HashMap<u64, usize> =
        basis.iter().enumerate().map(|(i, c)| (ranker.rank(c), i)).collect();
    let vt = lattice_transform(spec, p)?;
    let coef: Vec<f64> = vt.iter().map(|v| v / (spec.l * spec.l)).collect();
    let band: Vec<f64> = (0..m).map(|j| spec.band(j as i64)).collect();
    let rows = basis
        .par_iter()
        .map(|s| {
            let mut entries = vec![(index[&ranker.rank(s)], s.iter().map(|j| band[*j]).sum::<f64>())];
            for &k1 in s {
                for &k2 in s {
                    if k1 == k2 {
                        continue;
                    }
                    for q in 0..m {
                        if coef[q] == 0.0 {
                            continue;
                        }
                        let mut t = s.clone();
                        let mut sign = annihilate(&mut t, k1).unwrap();
                        sign *= annihilate(&mut t, k2).unwrap();
                        let Some(s3) = create(&mut t, (k2 + m - q) % m) else { continue };
                        let Some(s4) = create(&mut t, (k1 + q) % m) else { continue };
                        sign *= s3 * s4;
                        entries.push((index[&ranker.rank(&t)], sign * coef[q]));
                    }
                }
            }
            merge_row(entries)
        })
        .collect();
    Ok(Csr { rows })
}

fn real_space_hamiltonian(spec: &LatticeSpec, p: &PointPotential) -> Result<Csr> {
    let m = spec.m;
    let ranker = Ranker::new(m, spec.n);
    let mut basis = combinations(m, spec.n, |_| true);
    // row i holds the state of colex rank i
    basis.sort_by_key(|c| ranker.rank(c));
    let half = m as i64 / 2;
    let pot: Vec<f64> = (0..m as i64)
        .map(|d| {
            // separation folded into [-M/2, M/2)
            let d = if d >= half { d - m as i64 } else { d };
            p.eval(d as f64 * spec.kappa)
        })
        .collect::<Result<_>>()?;
    let hop = 1.0 / (spec.l * spec.kappa * spec.kappa);
    let rows = basis
        .par_iter()
        .map(|s| {
            let mut diag = 2.0 * hop * spec.n as f64;
            for &i in s {
                for &j in s {
                    if i != j {
                        diag += pot[(i + m - j) % m] / spec.l;
                    }
                }
            }
            let mut entries = vec![(ranker.rank(s) as usize, diag)];
            for &i in s {
                for j in [(i + 1) % m, (i + m - 1) % m] {
                    let mut t = s.clone();
                    let s1 = annihilate(&mut t, i).unwrap();
                    if let Some(s2) = create(&mut t, j) {
                        entries.push((ranker.rank(&t) as usize, -hop * s1 * s2));
                    }
                }
            }
            merge_row(entries)
        })
        .collect();
    Ok(Csr { rows })
}

fn lowest_eigenvalues(h: &Csr, n_levels: usize) -> Result<Vec<f64>> {
    let dim = h.dim();
    let n_levels = n_levels.min(dim);
    if dim <= DENSE_LIMIT {
        let eig = SymmetricEigen::new(h.dense());
        let mut v: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        v.sort_by(f64::total_cmp);
        v.truncate(n_levels);
        return Ok(v);
    }
    lanczos(h, n_levels)
}

/// Lanczos with full reorthogonalization from a fixed start vector.
fn lanczos(h: &Csr, n_levels: usize) -> Result<Vec<f64>> {
    let dim = h.dim();
    let max_steps = dim.min(600).min((60_000_000 / dim).max(4 * n_levels + 40));
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut v: Vec<f64> = (0..dim).map(|i| 1.0 + 0.3 * ((i as f64 + 1.0) * 0.7).sin()).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut last = (f64::INFINITY, Vec::new());
    for step in 0..max_steps {
        let mut w = h.apply(&v);
        let a: f64 = w.iter().zip(&v).map(|(x, y)| x * y).sum();
        alpha.push(a);
        basis.push(v.clone());
        for _ in 0..2 {
            for b in &basis {
                let c: f64 = w.iter().zip(b).map(|(x, y)| x * y).sum();
                w.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
        let bnorm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        let m = alpha.len();
        if m >= n_levels && (step % 10 == 9 || bnorm < 1e-12 || step + 1 == max_steps) {
            let t = DMatrix::from_fn(m, m, |i, j| {
                if i == j {
                    alpha[i]
                } else if i + 1 == j {
                    beta[i]
                } else if j + 1 == i {
                    beta[j]
                } else {
                    0.0
                }
            });
            let eig = SymmetricEigen::new(t);
            let mut order: Vec<usize> = (0..m).collect();
            order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
            let vals: Vec<f64> = order[..n_levels].iter().map(|&i| eig.eigenvalues[i]).collect();
            let resid = order[..n_levels]
                .iter()
                .map(|&i| {
                    let r = bnorm * eig.eigenvectors[(m - 1, i)].abs();
                    r / eig.eigenvalues[i].abs().max(1e-300)
                })
                .fold(0.0f64, f64::max);
            if resid < 1e-13 || bnorm < 1e-12 {
                return Ok(vals);
            }
            last = (resid, vals);
        }
        if bnorm < 1e-12 {
            break;
        }
        beta.push(bnorm);
        v = w.iter().map(|x| x / bnorm).collect();
    }
    if last.0 < 1e-10 {
        return Ok(last.1);
    }
    Err(Error::NoConvergence {
        what: "Lanczos eigenvalues",
        residual: last.0,
    })
}

/// Lowest `n_levels` eigenvalues of H0 + V in the chosen sector. The
/// Hamiltonian is the lattice one, normalized per unit length.
pub fn exact_diag(spec: &LatticeSpec, p: &PointPotential, n_levels: usize, sector: Sector) -> Result<Vec<f64>> {
    let dim = binomial(spec.m, spec.n);
    if dim > MAX_DIM {
        return Err(Error::DimensionTooLarge { dim, limit: MAX_DIM });
    }
    let h = match sector {
        Sector::Momentum(k) => momentum_hamiltonian(spec, p, k)?,
        Sector::RealSpace => real_space_hamiltonian(spec, p)?,
    };
    if h.dim() == 0 {
        return Ok(Vec::new());
    }
    lowest_eigenvalues(&h, n_levels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::MollifierProfile;

    #[test]
    fn combination_ranks_are_dense() {
        let r = Ranker::new(7, 3);
        let mut ranks: Vec<u64> = combinations(7, 3, |_| true).iter().map(|c| r.rank(c)).collect();
        ranks.sort_unstable();
        assert_eq!(ranks, (0..35).collect::<Vec<u64>>());
    }

    #[test]
    fn free_spectrum_is_band_sums() {
        let spec = LatticeSpec::new(12, 3.0, 2).unwrap();
        let p = PointPotential::duality_preserving(MollifierProfile::tanh(), 0.5, 0.0).unwrap();
        let e = exact_diag(&spec, &p, 1, Sector::Momentum(0)).unwrap();
        assert!((e[0] - 2.0 * spec.band(1)).abs() < 1e-12);
        let all = exact_diag(&spec, &p, 1, Sector::RealSpace).unwrap();
        assert!((all[0] - spec.band(1)).abs() < 1e-12);
    }

    #[test]
    fn sectors_reproduce_real_space_spectrum() {
        let spec = LatticeSpec::new(10, 2.5, 3).unwrap();
        let p = PointPotential::duality_preserving(MollifierProfile::tanh(), 0.6, 0.2).unwrap();
        let mut from_sectors: Vec<f64> = (0..10)
            .flat_map(|k| exact_diag(&spec, &p, 200, Sector::Momentum(k)).unwrap())
            .collect();
        from_sectors.sort_by(f64::total_cmp);
        let direct = exact_diag(&spec, &p, 200, Sector::RealSpace).unwrap();
        assert_eq!(from_sectors.len(), direct.len());
        for (a, b) in from_sectors.iter().zip(&direct) {
            assert!((a - b).abs() < 1e-10 * (1.0 + b.abs()), "{a} {b}");
        }
    }

    #[test]
    fn lanczos_matches_dense() {
        let spec = LatticeSpec::new(60, 6.0, 3).unwrap();
        let p = PointPotential::duality_preserving(MollifierProfile::tanh(), 0.4, 0.1).unwrap();
        let h = momentum_hamiltonian(&spec, &p, 0).unwrap();
        assert!(h.dim() > DENSE_LIMIT / 2);
        let dense = {
            let eig = SymmetricEigen::new(h.dense());
            let mut v: Vec<f64> = eig.eigenvalues.iter().copied().collect();
            v.sort_by(f64::total_cmp);
            v
        };
        let l = lanczos(&h, 3).unwrap();
        for i in 0..3 {
            assert!((l[i] - dense[i]).abs() < 1e-9 * dense[i].abs(), "{} {}", l[i], dense[i]);
        }
    }
}
