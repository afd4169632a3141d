use rayon::prelude::*;

use super::{EnergyBreakdown, FreeState, LatticeSpec};
use crate::error::{Error, Result};
use crate::numerics::quad::pairwise_sum;
use crate::profiles::PointPotential;

/// Lattice transform kappa sum_{n=-M/2}^{M/2-1} V(n kappa) e^{i lambda n} at
/// every lambda = 2 pi j / M, j = 0..M. The potential is even, so the sum is
/// real (the unpaired n = -M/2 term contributes (-1)^j).
pub fn lattice_transform(spec: &LatticeSpec, p: &PointPotential) -> Result<Vec<f64>> {
    let m = spec.m as i64;
    let samples: Vec<f64> = (-m / 2..m / 2)
        .map(|n| p.eval(n as f64 * spec.kappa))
        .collect::<Result<_>>()?;
    let out = (0..spec.m)
        .into_par_iter()
        .map(|j| {
            let terms: Vec<f64> = (-m / 2..m / 2)
                .zip(&samples)
                .map(|(n, v)| {
                    // reduce j n mod M before the cosine to keep the phase exact
                    let r = (j as i64 * n).rem_euclid(m);
                    v * spec.momentum(r).cos()
                })
                .collect();
            spec.kappa * pairwise_sum(&terms)
        })
        .collect();
    Ok(out)
}

/// E0, E1 and E2 of a zero-momentum free state from the lattice sums of
/// Rayleigh-Schrodinger perturbation theory (energies per unit length).
pub fn lattice_pt(spec: &LatticeSpec, state: &FreeState, p: &PointPotential) -> Result<EnergyBreakdown> {
    let state = FreeState::new(spec, state.indices.clone())?;
    let mut warnings = Vec::new();
    if p.a < 10.0 * spec.kappa {
        warnings.push(format!(
            "range a = {} is below 10 kappa = {}: the potential is not resolved by the lattice",
            p.a,
            10.0 * spec.kappa
        ));
    }
    let vt = lattice_transform(spec, p)?;
    let m = spec.m as i64;
    let l = spec.l;
    let idx: Vec<i64> = state.indices.clone();
    let occupied = |j: i64| idx.iter().any(|i| (i - j).rem_euclid(m) == 0);
    let s2 = |j: i64| {
        let s = (std::f64::consts::PI * j as f64 / m as f64).sin();
        s * s
    };
    let vt_at = |j: i64| vt[spec.fold(j)];

    let e0 = pairwise_sum(&idx.iter().map(|j| spec.band(*j)).collect::<Vec<_>>());

    let mut first = Vec::with_capacity(idx.len() * idx.len());
    for &lam in &idx {
        for &mu in &idx {
            first.push(vt_at(0) - vt_at(lam - mu));
        }
    }
    let e1 = pairwise_sum(&first) / (l * l);

    let pairs: Vec<(i64, i64)> = idx.iter().flat_map(|&a| idx.iter().map(move |&b| (a, b))).collect();
    let scale = vt.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    let rows: Vec<Result<Vec<f64>>> = pairs
        .par_iter()
        .map(|&(lam, mu)| {
            let mut terms = Vec::with_capacity(spec.m);
            for nu in 0..m {
                if occupied(lam + nu) || occupied(mu - nu) {
                    continue;
                }
                let num = vt_at(lam - mu + nu) - vt_at(nu);
                let num = num * num;
                let den = s2(lam) + s2(mu) - s2(lam + nu) - s2(mu - nu);
                if den.abs() < 1e-13 {
                    if num <= 1e-24 * scale * scale {
                        continue;
                    }
                    return Err(Error::DegenerateDenominator {
                        lambda: spec.momentum(lam),
                        mu: spec.momentum(mu),
                        nu: spec.momentum(nu),
                    });
                }
                terms.push(num / den);
            }
            Ok(terms)
        })
        .collect();
    let mut all = Vec::new();
    for r in rows {
        all.extend(r?);
    }
    let e2 = spec.kappa * spec.kappa / (4.0 * l * l * l) * pairwise_sum(&all);

    Ok(EnergyBreakdown {
        e0,
        e1,
        e2,
        order: 2,
        a: p.a,
        beta: p.beta,
        warnings,
        ..EnergyBreakdown::default()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::MollifierProfile;

    #[test]
    fn free_gas_has_only_kinetic_energy() {
        let spec = LatticeSpec::new(32, 4.0, 2).unwrap();
        let st = FreeState::ground(&spec).unwrap();
        let p = PointPotential::duality_preserving(MollifierProfile::tanh(), 0.5, 0.0).unwrap();
        let e = lattice_pt(&spec, &st, &p).unwrap();
        assert_eq!(e.e1, 0.0);
        assert_eq!(e.e2, 0.0);
        let s = (std::f64::consts::PI / 32.0).sin();
        let expect = 2.0 * 4.0 * s * s / (spec.kappa * spec.kappa * 4.0);
        assert!((e.e0 - expect).abs() < 1e-14 * expect);
    }

    #[test]
    fn second_order_lowers_the_ground_state() {
        let spec = LatticeSpec::new(32, 4.0, 2).unwrap();
        let st = FreeState::ground(&spec).unwrap();
        let p = PointPotential::duality_preserving(MollifierProfile::tanh(), 0.5, 0.1).unwrap();
        let e = lattice_pt(&spec, &st, &p).unwrap();
        assert!(e.e2 < 0.0);
        assert!(e.e1 < 0.0);
    }
}
