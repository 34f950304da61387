//! Executable forms of the equations every memory structure must satisfy:
//! tests and updates on disjoint addresses commute, and all operations are
//! equivariant under address renaming.
//!
//! Each check returns `Err` with a description of the first mismatch.
//! [`run_suite`] draws random instances through [`RandomInstances`].

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    rename_addr, Address, IntMemory, IntRegisters, MemoryStructure, OpLabel, ProbMemory, ProbRegisters, QuantumMemory,
    QuantumRegisters, Renaming,
};
use crate::pars::Distribution;

type Branches<M> = BTreeMap<(bool, bool), (f64, M)>;

fn cascade<S: MemoryStructure>(ms: &S, m: &S::Mem, first: Address, second: Address) -> Branches<S::Mem> {
    let mut out = BTreeMap::new();
    for ((x, mx), px) in ms.test(first, m).iter() {
        for ((y, mxy), pxy) in ms.test(second, mx).iter() {
            out.insert((*x, *y), (px * pxy, mxy.clone()));
        }
    }
    out
}

fn same_tests<S: MemoryStructure>(
    ms: &S,
    a: &Distribution<(bool, S::Mem)>,
    b: &Distribution<(bool, S::Mem)>,
    tol: f64,
) -> bool {
    a.approx_eq_by(b, tol, |(x, m), (y, n)| x == y && ms.approx_eq(m, n, tol))
}

/// Testing `i` then `j` matches testing `j` then `i`: for every outcome
/// pair the branch masses `p_x·p_xy` and `q_y·q_yx` agree and so do the
/// branch memories.
pub fn test_test<S: MemoryStructure>(ms: &S, m: &S::Mem, i: Address, j: Address, tol: f64) -> Result<(), String> {
    if i == j {
        return Err(format!("test-test needs distinct addresses, got {i} twice"));
    }
    let ij = cascade(ms, m, i, j);
    let ji = cascade(ms, m, j, i);
    for x in [false, true] {
        for y in [false, true] {
            let lhs = ij.get(&(x, y));
            let rhs = ji.get(&(y, x));
            let (pl, pr) = (lhs.map_or(0.0, |b| b.0), rhs.map_or(0.0, |b| b.0));
            if (pl - pr).abs() > tol {
                return Err(format!("test {i}/{j} outcome ({x},{y}): mass {pl} vs {pr}"));
            }
            if let (Some((p, ml)), Some((_, mr))) = (lhs, rhs) {
                if *p > tol && !ms.approx_eq(ml, mr, tol) {
                    return Err(format!("test {i}/{j} outcome ({x},{y}): {} vs {}", ms.describe(ml), ms.describe(mr)));
                }
            }
        }
    }
    Ok(())
}

/// Updating `ks` then testing `j` matches testing `j` then updating `ks` in
/// both branches.
pub fn test_update<S: MemoryStructure>(
    ms: &S,
    m: &S::Mem,
    j: Address,
    ks: &[Address],
    label: &str,
    tol: f64,
) -> Result<(), String> {
    if ks.contains(&j) {
        return Err(format!("test-update needs {j} outside {ks:?}"));
    }
    let updated = ms.update(ks, label, m).map_err(|e| e.to_string())?;
    let lhs = ms.test(j, &updated);
    let mut rhs = Distribution::empty();
    for ((b, mb), p) in ms.test(j, m).iter() {
        rhs.add((*b, ms.update(ks, label, mb).map_err(|e| e.to_string())?), p);
    }
    if same_tests(ms, &lhs, &rhs, tol) {
        Ok(())
    } else {
        Err(format!("test {j} / update {label}{ks:?}: {lhs:?} vs {rhs:?}"))
    }
}

/// Updates on disjoint tuples commute.
pub fn update_update<S: MemoryStructure>(
    ms: &S,
    m: &S::Mem,
    first: (&[Address], &str),
    second: (&[Address], &str),
    tol: f64,
) -> Result<(), String> {
    if first.0.iter().any(|a| second.0.contains(a)) {
        return Err(format!("update-update needs disjoint tuples, got {:?} and {:?}", first.0, second.0));
    }
    let run = |a: (&[Address], &str), b: (&[Address], &str)| -> Result<S::Mem, String> {
        let mid = ms.update(a.0, a.1, m).map_err(|e| e.to_string())?;
        ms.update(b.0, b.1, &mid).map_err(|e| e.to_string())
    };
    let lhs = run(first, second)?;
    let rhs = run(second, first)?;
    if ms.approx_eq(&lhs, &rhs, tol) {
        Ok(())
    } else {
        Err(format!(
            "update {}{:?} / {}{:?}: {} vs {}",
            first.1,
            first.0,
            second.1,
            second.0,
            ms.describe(&lhs),
            ms.describe(&rhs)
        ))
    }
}

/// `test(σ(i), σ·m)` is the renaming of `test(i, m)`.
pub fn test_equivariance<S: MemoryStructure>(
    ms: &S,
    m: &S::Mem,
    i: Address,
    sigma: &Renaming,
    tol: f64,
) -> Result<(), String> {
    let lhs = ms.test(rename_addr(sigma, i), &ms.rename(m, sigma));
    let rhs = ms.test(i, m).map(|(b, mb)| (*b, ms.rename(mb, sigma)));
    if same_tests(ms, &lhs, &rhs, tol) {
        Ok(())
    } else {
        Err(format!("test {i} is not equivariant under {sigma:?}"))
    }
}

/// `update(σ(ks), l, σ·m)` is the renaming of `update(ks, l, m)`.
pub fn update_equivariance<S: MemoryStructure>(
    ms: &S,
    m: &S::Mem,
    ks: &[Address],
    label: &str,
    sigma: &Renaming,
    tol: f64,
) -> Result<(), String> {
    let moved: Vec<Address> = ks.iter().map(|a| rename_addr(sigma, *a)).collect();
    let lhs = ms.update(&moved, label, &ms.rename(m, sigma)).map_err(|e| e.to_string())?;
    let rhs = ms.rename(&ms.update(ks, label, m).map_err(|e| e.to_string())?, sigma);
    if ms.approx_eq(&lhs, &rhs, tol) {
        Ok(())
    } else {
        Err(format!("update {label}{ks:?} is not equivariant under {sigma:?}"))
    }
}

/// Random memories and operations for property checks.
pub trait RandomInstances: MemoryStructure {
    /// A memory whose support lies within `0..ADDRESS_POOL`.
    fn random_memory(&self, rng: &mut ChaCha8Rng) -> Self::Mem;

    fn random_label(&self, rng: &mut ChaCha8Rng) -> OpLabel {
        self.labels().choose(rng).expect("at least one operation").clone()
    }
}

/// Addresses used by the random generators.
pub const ADDRESS_POOL: usize = 6;

impl RandomInstances for IntRegisters {
    fn random_memory(&self, rng: &mut ChaCha8Rng) -> IntMemory {
        let values: Vec<u64> =
            (0..ADDRESS_POOL).map(|_| if rng.gen_bool(0.4) { 0 } else { rng.gen_range(1..5) }).collect();
        IntMemory::from_values(&values)
    }
}

impl RandomInstances for ProbRegisters {
    fn random_memory(&self, rng: &mut ChaCha8Rng) -> ProbMemory {
        let values: Vec<f64> = (0..ADDRESS_POOL)
            .map(|_| match rng.gen_range(0..4) {
                0 => 0.0,
                1 => 1.0,
                2 => 0.5,
                _ => rng.gen_range(0.0..=1.0),
            })
            .collect();
        ProbMemory::from_values(&values)
    }
}

impl RandomInstances for QuantumRegisters {
    fn random_memory(&self, rng: &mut ChaCha8Rng) -> QuantumMemory {
        let mut pool: Vec<Address> = (0..ADDRESS_POOL).collect();
        pool.shuffle(rng);
        let n = rng.gen_range(0..=4);
        let mut bound: Vec<Address> = pool[..n].to_vec();
        bound.sort_unstable();
        let mut amps: Vec<Complex64> =
            (0..1usize << n).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-6 {
            amps.iter_mut().for_each(|a| *a = Complex64::new(0.0, 0.0));
            amps[0] = Complex64::new(1.0, 0.0);
        } else {
            amps.iter_mut().for_each(|a| *a /= norm);
        }
        QuantumMemory::from_parts(bound, amps)
    }
}

/// Outcome of [`run_suite`]: instance counts and failures per family.
#[derive(Clone, Debug, Default)]
pub struct SuiteReport {
    pub test_test: usize,
    pub test_update: usize,
    pub update_update: usize,
    pub equivariance: usize,
    pub failures: Vec<String>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

fn distinct(rng: &mut ChaCha8Rng, n: usize) -> Vec<Address> {
    let mut pool: Vec<Address> = (0..ADDRESS_POOL + 2).collect();
    pool.shuffle(rng);
    pool.truncate(n);
    pool
}

fn random_permutation(rng: &mut ChaCha8Rng) -> Renaming {
    let domain: Vec<Address> = (0..ADDRESS_POOL + 2).collect();
    let mut image = domain.clone();
    image.shuffle(rng);
    domain.into_iter().zip(image).collect()
}

/// Runs `instances` random instances of each equation family on `ms`.
pub fn run_suite<S: RandomInstances>(ms: &S, instances: usize, seed: u64, tol: f64) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = SuiteReport::default();
    let record = |r: Result<(), String>, family: &str, failures: &mut Vec<String>| {
        if let Err(e) = r {
            failures.push(format!("{family}: {e}"));
        }
    };
    for _ in 0..instances {
        let m = ms.random_memory(&mut rng);
        let ij = distinct(&mut rng, 2);
        record(test_test(ms, &m, ij[0], ij[1], tol), "test-test", &mut report.failures);
        report.test_test += 1;

        let l = ms.random_label(&mut rng);
        let addrs = distinct(&mut rng, l.arity + 1);
        record(
            test_update(ms, &m, addrs[l.arity], &addrs[..l.arity], &l.name, tol),
            "test-update",
            &mut report.failures,
        );
        report.test_update += 1;

        let l1 = ms.random_label(&mut rng);
        let l2 = ms.random_label(&mut rng);
        let addrs = distinct(&mut rng, l1.arity + l2.arity);
        let (k1, k2) = addrs.split_at(l1.arity);
        record(update_update(ms, &m, (k1, &l1.name), (k2, &l2.name), tol), "update-update", &mut report.failures);
        report.update_update += 1;

        let sigma = random_permutation(&mut rng);
        let i = rng.gen_range(0..ADDRESS_POOL + 2);
        record(test_equivariance(ms, &m, i, &sigma, tol), "test-equivariance", &mut report.failures);
        let l = ms.random_label(&mut rng);
        let ks = distinct(&mut rng, l.arity);
        record(update_equivariance(ms, &m, &ks, &l.name, &sigma, tol), "update-equivariance", &mut report.failures);
        report.equivariance += 1;
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pars::TOL;

    #[test]
    fn suites_pass_on_all_backends() {
        assert!(run_suite(&IntRegisters, 200, 1, TOL).passed());
        assert!(run_suite(&ProbRegisters, 200, 2, TOL).passed());
        let report = run_suite(&QuantumRegisters::default(), 200, 3, TOL);
        assert!(report.passed(), "{:?}", report.failures);
    }

    #[test]
    fn a_non_commuting_structure_is_caught() {
        let q = QuantumRegisters::default();
        let m = q.update(&[0], "H", &q.initial()).unwrap();
        assert!(update_update(&q, &m, (&[0], "H"), (&[0, 1], "CNOT"), TOL).is_err());
        assert!(test_update(&q, &m, 0, &[0], "H", TOL).is_err());
    }

    #[test]
    fn entangled_tests_commute() {
        let q = QuantumRegisters::default();
        let m = q.update(&[1], "H", &q.initial()).unwrap();
        let m = q.update(&[0, 1], "CNOT", &m).unwrap();
        assert!(test_test(&q, &m, 0, 1, TOL).is_ok());
        assert!(test_update(&q, &m, 0, &[1], "H", TOL).is_ok());
    }

    #[test]
    fn quantum_memories_stay_normalized() {
        let q = QuantumRegisters::default();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let m = q.random_memory(&mut rng);
            let l = q.random_label(&mut rng);
            let ks = distinct(&mut rng, l.arity);
            let u = q.update(&ks, &l.name, &m).unwrap();
            assert!((u.norm_sqr() - 1.0).abs() < 1e-9);
            let t = q.test(rng.gen_range(0..ADDRESS_POOL), &u);
            assert!((t.mass() - 1.0).abs() < 1e-9);
            for ((_, after), _) in t.iter() {
                assert!((after.norm_sqr() - 1.0).abs() < 1e-9);
            }
        }
    }
}
