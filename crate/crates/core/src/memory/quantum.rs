//! Quantum registers: a normalized state vector over the bound addresses,
//! with every unbound address implicitly in state |0⟩.

use std::collections::BTreeSet;
use std::hash::{Hash, Hasher};

use indexmap::IndexMap;
use num_complex::Complex64;
use thiserror::Error;

use super::{check_tuple, rename_addr, Address, MemoryError, MemoryStructure, OpLabel, Renaming};
use crate::pars::{Distribution, PRUNE_BELOW, TOL};

/// A unitary acting on `arity` qubits, stored row-major as a
/// `2^arity × 2^arity` matrix. The first qubit of the tuple is the most
/// significant bit of the row and column index.
#[derive(Clone, Debug, PartialEq)]
pub struct Gate {
    pub arity: usize,
    pub matrix: Vec<Complex64>,
}

impl Gate {
    /// Builds a gate after checking the shape and `U†U = I` within `1e-9`.
    pub fn new(name: &str, arity: usize, matrix: Vec<Complex64>) -> Result<Gate, GateError> {
        let dim = 1usize << arity;
        if matrix.len() != dim * dim {
            return Err(GateError::Shape { name: name.to_string(), expected: dim * dim, got: matrix.len() });
        }
        for r in 0..dim {
            for c in 0..dim {
                let dot: Complex64 = (0..dim).map(|k| matrix[k * dim + r].conj() * matrix[k * dim + c]).sum();
                let want = if r == c { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
                if (dot - want).norm() > TOL {
                    return Err(GateError::NotUnitary(name.to_string()));
                }
            }
        }
        Ok(Gate { arity, matrix })
    }

    fn dim(&self) -> usize {
        1 << self.arity
    }
}

/// Errors raised while loading a gate configuration.
#[derive(Clone, Debug, Error, PartialEq)]
pub enum GateError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("gate `{name}` needs {expected} matrix entries, got {got}")]
    Shape { name: String, expected: usize, got: usize },
    #[error("gate `{0}` is not unitary")]
    NotUnitary(String),
    #[error("bad complex literal `{0}`")]
    Complex(String),
}

/// The named gates available as update operations.
#[derive(Clone, Debug, PartialEq)]
pub struct GateSet {
    gates: IndexMap<String, Gate>,
}

impl Default for GateSet {
    fn default() -> Self {
        GateSet::builtin()
    }
}

impl GateSet {
    /// H, X, Z and CNOT. CNOT maps `|xy⟩` to `|x⊕y⟩ ⊗ |y⟩`: the first
    /// qubit of its tuple is the target and the second the control.
    pub fn builtin() -> GateSet {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let re = |v: &[f64]| v.iter().map(|x| Complex64::new(*x, 0.0)).collect::<Vec<_>>();
        let mut gates = IndexMap::new();
        gates.insert("H".to_string(), Gate { arity: 1, matrix: re(&[s, s, s, -s]) });
        gates.insert("X".to_string(), Gate { arity: 1, matrix: re(&[0.0, 1.0, 1.0, 0.0]) });
        gates.insert("Z".to_string(), Gate { arity: 1, matrix: re(&[1.0, 0.0, 0.0, -1.0]) });
        #[rustfmt::skip]
        let cnot = re(&[
            1.0, 0.0, 0.0, 0.0,
            0.0, 0.0, 0.0, 1.0,
            0.0, 0.0, 1.0, 0.0,
            0.0, 1.0, 0.0, 0.0,
        ]);
        gates.insert("CNOT".to_string(), Gate { arity: 2, matrix: cnot });
        GateSet { gates }
    }

    /// Adds or replaces a gate.
    pub fn insert(&mut self, name: &str, gate: Gate) {
        self.gates.insert(name.to_string(), gate);
    }

    pub fn get(&self, name: &str) -> Option<&Gate> {
        self.gates.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.gates.keys().map(String::as_str)
    }

    /// The built-in gates extended with the entries of a configuration
    /// text. Each non-blank line not starting with `#` or `--` reads
    /// `name, arity, e11, e12, …` with the matrix entries in row-major
    /// order written as complex literals such as `0.5`, `-i`, `1-2i`.
    pub fn parse_config(text: &str) -> Result<GateSet, GateError> {
        let mut set = GateSet::builtin();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with("--") {
                continue;
            }
            let syntax = |message: String| GateError::Syntax { line: idx + 1, message };
            let mut fields = line.split(',').map(str::trim);
            let name = fields.next().filter(|n| !n.is_empty()).ok_or_else(|| syntax("missing gate name".into()))?;
            if !name.chars().next().is_some_and(|c| c.is_ascii_alphabetic())
                || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
            {
                return Err(syntax(format!("invalid gate name `{name}`")));
            }
            let arity: usize = fields
                .next()
                .ok_or_else(|| syntax("missing arity".into()))?
                .parse()
                .map_err(|_| syntax("arity is not a natural number".into()))?;
            if arity > 8 {
                return Err(syntax(format!("arity {arity} is too large")));
            }
            let entries =
                fields.flat_map(|f| f.split_whitespace()).map(parse_complex).collect::<Result<Vec<_>, _>>()?;
            set.insert(name, Gate::new(name, arity, entries)?);
        }
        Ok(set)
    }
}

/// Parses `a`, `bi`, `a+bi`, `a-bi`, `i`, `-i` with optional spaces removed.
pub fn parse_complex(text: &str) -> Result<Complex64, GateError> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || GateError::Complex(text.to_string());
    if s.is_empty() {
        return Err(bad());
    }
    let imag_part = |t: &str| -> Result<f64, GateError> {
        match t {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            other => other.parse::<f64>().map_err(|_| bad()),
        }
    };
    if let Some(body) = s.strip_suffix('i') {
        let split = body
            .char_indices()
            .skip(1)
            .filter(|(k, c)| (*c == '+' || *c == '-') && !matches!(body.as_bytes()[k - 1], b'e' | b'E'))
            .map(|(k, _)| k)
            .last();
        match split {
            Some(k) => {
                let re = body[..k].parse::<f64>().map_err(|_| bad())?;
                Ok(Complex64::new(re, imag_part(&body[k..])?))
            }
            None => Ok(Complex64::new(0.0, imag_part(body)?)),
        }
    } else {
        Ok(Complex64::new(s.parse::<f64>().map_err(|_| bad())?, 0.0))
    }
}

/// A state vector over `bound` (sorted ascending, qubit `k` of the vector
/// is `bound[k]`, qubit 0 being the most significant bit of a basis index).
#[derive(Clone, Debug)]
pub struct QuantumMemory {
    bound: Vec<Address>,
    amps: Vec<Complex64>,
}

impl Default for QuantumMemory {
    fn default() -> Self {
        QuantumMemory { bound: Vec::new(), amps: vec![Complex64::new(1.0, 0.0)] }
    }
}

impl PartialEq for QuantumMemory {
    fn eq(&self, other: &Self) -> bool {
        self.bound == other.bound && self.amps == other.amps
    }
}

impl Eq for QuantumMemory {}

impl Hash for QuantumMemory {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.bound.hash(state);
        for a in &self.amps {
            (a.re + 0.0).to_bits().hash(state);
            (a.im + 0.0).to_bits().hash(state);
        }
    }
}

impl QuantumMemory {
    /// Builds a memory from a sorted list of distinct addresses and a
    /// normalized amplitude vector of matching length.
    pub fn from_parts(bound: Vec<Address>, amps: Vec<Complex64>) -> QuantumMemory {
        assert!(bound.windows(2).all(|w| w[0] < w[1]), "bound addresses must be strictly increasing");
        assert_eq!(amps.len(), 1 << bound.len(), "amplitude vector has the wrong length");
        QuantumMemory { bound, amps }
    }

    pub fn bound(&self) -> &[Address] {
        &self.bound
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn n(&self) -> usize {
        self.bound.len()
    }

    fn bit(&self, k: usize) -> usize {
        1 << (self.n() - 1 - k)
    }

    fn position(&self, a: Address) -> Option<usize> {
        self.bound.binary_search(&a).ok()
    }

    /// Probability that qubit `a` reads 1.
    pub fn prob_one(&self, a: Address) -> f64 {
        match self.position(a) {
            None => 0.0,
            Some(k) => {
                let bit = self.bit(k);
                self.amps.iter().enumerate().filter(|(x, _)| x & bit != 0).map(|(_, c)| c.norm_sqr()).sum()
            }
        }
    }

    /// Tensors in |0⟩ for every address of `addrs` not yet bound.
    fn bind_all(&self, addrs: &[Address]) -> QuantumMemory {
        let mut m = self.clone();
        for a in addrs {
            if let Err(pos) = m.bound.binary_search(a) {
                let n = m.n();
                let low_mask = (1usize << (n - pos)) - 1;
                let mut amps = vec![Complex64::new(0.0, 0.0); 1 << (n + 1)];
                for (x, c) in m.amps.iter().enumerate() {
                    let y = ((x >> (n - pos)) << (n + 1 - pos)) | (x & low_mask);
                    amps[y] = *c;
                }
                m.bound.insert(pos, *a);
                m.amps = amps;
            }
        }
        m
    }

    fn apply(&mut self, gate: &Gate, addrs: &[Address]) {
        let bits: Vec<usize> = addrs.iter().map(|a| self.bit(self.position(*a).expect("bound"))).collect();
        let mask: usize = bits.iter().sum();
        let dim = gate.dim();
        let offset = |g: usize| -> usize {
            bits.iter().enumerate().filter(|(j, _)| g & (1 << (gate.arity - 1 - j)) != 0).map(|(_, b)| *b).sum()
        };
        let offsets: Vec<usize> = (0..dim).map(offset).collect();
        let mut input = vec![Complex64::new(0.0, 0.0); dim];
        for base in 0..self.amps.len() {
            if base & mask != 0 {
                continue;
            }
            for (g, off) in offsets.iter().enumerate() {
                input[g] = self.amps[base | off];
            }
            for (r, off) in offsets.iter().enumerate() {
                self.amps[base | off] = (0..dim).map(|c| gate.matrix[r * dim + c] * input[c]).sum();
            }
        }
    }

    /// Projects qubit `a` (which must be bound) on `outcome` and removes it.
    fn collapse(&self, a: Address, outcome: bool, p: f64) -> QuantumMemory {
        let k = self.position(a).expect("bound");
        let n = self.n();
        let bit = self.bit(k);
        let scale = 1.0 / p.sqrt();
        let low_mask = bit - 1;
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << (n - 1)];
        for (x, c) in self.amps.iter().enumerate() {
            if (x & bit != 0) == outcome {
                let y = ((x >> (n - k)) << (n - 1 - k)) | (x & low_mask);
                amps[y] = c * scale;
            }
        }
        let mut bound = self.bound.clone();
        bound.remove(k);
        QuantumMemory { bound, amps }
    }
}

/// The quantum memory structure over a configurable gate set.
#[derive(Clone, Debug, Default)]
pub struct QuantumRegisters {
    pub gates: GateSet,
}

impl QuantumRegisters {
    pub fn new(gates: GateSet) -> Self {
        QuantumRegisters { gates }
    }
}

impl MemoryStructure for QuantumRegisters {
    type Mem = QuantumMemory;

    fn name(&self) -> &'static str {
        "quantum"
    }

    fn initial(&self) -> QuantumMemory {
        QuantumMemory::default()
    }

    fn labels(&self) -> Vec<OpLabel> {
        self.gates.gates.iter().map(|(n, g)| OpLabel::new(n, g.arity)).collect()
    }

    fn label(&self, name: &str) -> Option<OpLabel> {
        self.gates.get(name).map(|g| OpLabel::new(name, g.arity))
    }

    fn test(&self, i: Address, m: &QuantumMemory) -> Distribution<(bool, QuantumMemory)> {
        if m.position(i).is_none() {
            return Distribution::dirac((false, m.clone()));
        }
        let p1 = m.prob_one(i).clamp(0.0, 1.0);
        let mut d = Distribution::empty();
        for (outcome, p) in [(false, 1.0 - p1), (true, p1)] {
            if p >= PRUNE_BELOW {
                d.add((outcome, m.collapse(i, outcome, p)), p);
            }
        }
        d
    }

    fn update(&self, addrs: &[Address], label: &str, m: &QuantumMemory) -> Result<QuantumMemory, MemoryError> {
        let gate = self.gates.get(label).ok_or_else(|| MemoryError::UnknownLabel(label.to_string()))?;
        check_tuple(addrs, &OpLabel::new(label, gate.arity))?;
        let mut out = m.bind_all(addrs);
        out.apply(gate, addrs);
        Ok(out)
    }

    fn support(&self, m: &QuantumMemory) -> BTreeSet<Address> {
        m.bound.iter().copied().collect()
    }

    fn rename(&self, m: &QuantumMemory, sigma: &Renaming) -> QuantumMemory {
        let n = m.n();
        let images: Vec<Address> = m.bound.iter().map(|a| rename_addr(sigma, *a)).collect();
        let mut bound = images.clone();
        bound.sort_unstable();
        let new_pos: Vec<usize> = images.iter().map(|a| bound.binary_search(a).expect("present")).collect();
        if new_pos.iter().enumerate().all(|(k, p)| k == *p) {
            return QuantumMemory { bound, amps: m.amps.clone() };
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); m.amps.len()];
        for (x, c) in m.amps.iter().enumerate() {
            let mut y = 0;
            for (k, p) in new_pos.iter().enumerate() {
                if x & (1 << (n - 1 - k)) != 0 {
                    y |= 1 << (n - 1 - p);
                }
            }
            amps[y] = *c;
        }
        QuantumMemory { bound, amps }
    }

    fn approx_eq(&self, a: &QuantumMemory, b: &QuantumMemory, tol: f64) -> bool {
        a.bound == b.bound && a.amps.iter().zip(&b.amps).all(|(x, y)| (x - y).norm() <= tol)
    }

    fn readout(&self, m: &QuantumMemory, i: Address) -> String {
        let p = m.prob_one(i);
        if p <= TOL {
            "0".into()
        } else if p >= 1.0 - TOL {
            "1".into()
        } else {
            "?".into()
        }
    }

    fn describe(&self, m: &QuantumMemory) -> String {
        let n = m.n();
        let terms: Vec<String> = m
            .amps
            .iter()
            .enumerate()
            .filter(|(_, c)| c.norm() > TOL)
            .map(|(x, c)| {
                let ket: String = (0..n).map(|k| if x & (1 << (n - 1 - k)) != 0 { '1' } else { '0' }).collect();
                let coeff =
                    if c.im.abs() <= TOL { format!("{:.6}", c.re) } else { format!("({:.6}{:+.6}i)", c.re, c.im) };
                format!("{coeff}|{ket}>")
            })
            .collect();
        format!("{:?} {}", m.bound, terms.join(" + "))
    }

    fn unreferenced_order(&self, m: &QuantumMemory, referenced: &BTreeSet<Address>) -> Vec<Address> {
        m.bound.iter().copied().filter(|a| !referenced.contains(a)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn close(a: &QuantumMemory, bound: &[Address], amps: &[f64]) -> bool {
        a.bound == bound
            && a.amps.len() == amps.len()
            && a.amps.iter().zip(amps).all(|(x, y)| (x - c(*y)).norm() < 1e-9)
    }

    const S: f64 = std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn hadamard_on_fresh_address() {
        let q = QuantumRegisters::default();
        let m = q.update(&[0], "H", &q.initial()).unwrap();
        assert!(close(&m, &[0], &[S, S]));
    }

    #[test]
    fn bell_state_and_measurement() {
        let q = QuantumRegisters::default();
        let m = q.update(&[1], "H", &q.initial()).unwrap();
        let m = q.update(&[0, 1], "CNOT", &m).unwrap();
        assert!(close(&m, &[0, 1], &[S, 0.0, 0.0, S]));
        let t = q.test(0, &m);
        assert_eq!(t.len(), 2);
        for ((b, after), p) in t.iter() {
            assert!((p - 0.5).abs() < 1e-9);
            let expect = if *b { [0.0, 1.0] } else { [1.0, 0.0] };
            assert!(close(after, &[1], &expect));
        }
    }

    #[test]
    fn measuring_a_plus_state() {
        let q = QuantumRegisters::default();
        let m = q.update(&[0], "H", &q.initial()).unwrap();
        let t = q.test(0, &m);
        for ((_, after), p) in t.iter() {
            assert!((p - 0.5).abs() < 1e-9);
            assert!(after.bound.is_empty());
        }
    }

    #[test]
    fn measuring_fresh_address() {
        let q = QuantumRegisters::default();
        let m = q.update(&[2], "X", &q.initial()).unwrap();
        let t = q.test(5, &m);
        assert_eq!(t.get(&(false, m.clone())), 1.0);
    }

    #[test]
    fn cnot_flips_first_qubit() {
        let q = QuantumRegisters::default();
        let m = q.update(&[1], "X", &q.initial()).unwrap();
        let m = q.update(&[0, 1], "CNOT", &m).unwrap();
        assert!(close(&m, &[0, 1], &[0.0, 0.0, 0.0, 1.0]));
        let m = q.update(&[0], "X", &q.initial()).unwrap();
        let m = q.update(&[0, 1], "CNOT", &m).unwrap();
        assert!(close(&m, &[0, 1], &[0.0, 0.0, 1.0, 0.0]));
    }

    #[test]
    fn gate_order_follows_tuple_not_address() {
        let q = QuantumRegisters::default();
        let m = q.update(&[3], "X", &q.initial()).unwrap();
        let m = q.update(&[5, 3], "CNOT", &m).unwrap();
        assert_eq!(q.readout(&m, 5), "1");
        assert_eq!(q.readout(&m, 3), "1");
    }

    #[test]
    fn identity_gate_from_config() {
        let gates = GateSet::parse_config("# identity\nI, 1, 1, 0, 0, 1\n").unwrap();
        let q = QuantumRegisters::new(gates);
        let m = q.update(&[0], "H", &q.initial()).unwrap();
        assert_eq!(q.update(&[0], "I", &m).unwrap(), m);
    }

    #[test]
    fn config_rejects_non_unitary() {
        assert_eq!(GateSet::parse_config("B, 1, 1 1 0 1").unwrap_err(), GateError::NotUnitary("B".into()));
        assert!(matches!(GateSet::parse_config("B, 1, 1 0 0").unwrap_err(), GateError::Shape { .. }));
        assert!(matches!(GateSet::parse_config("B, x, 1").unwrap_err(), GateError::Syntax { line: 1, .. }));
    }

    #[test]
    fn config_phase_gate() {
        let gates = GateSet::parse_config("S, 1, 1, 0, 0, i").unwrap();
        assert_eq!(gates.get("S").unwrap().matrix[3], Complex64::new(0.0, 1.0));
    }

    #[test]
    fn complex_literals() {
        assert_eq!(parse_complex("0.5").unwrap(), Complex64::new(0.5, 0.0));
        assert_eq!(parse_complex("-i").unwrap(), Complex64::new(0.0, -1.0));
        assert_eq!(parse_complex("1-2i").unwrap(), Complex64::new(1.0, -2.0));
        assert_eq!(parse_complex("1e-3+1e-3i").unwrap(), Complex64::new(1e-3, 1e-3));
        assert_eq!(parse_complex("0.25i").unwrap(), Complex64::new(0.0, 0.25));
        assert!(parse_complex("1+").is_err());
        assert!(parse_complex("").is_err());
    }

    #[test]
    fn rename_permutes_qubits() {
        let q = QuantumRegisters::default();
        let m = q.update(&[0], "X", &q.initial()).unwrap();
        let m = q.update(&[1], "H", &m).unwrap();
        let swap: Renaming = [(0, 1), (1, 0)].into_iter().collect();
        let r = q.rename(&m, &swap);
        assert_eq!(q.readout(&r, 1), "1");
        assert_eq!(q.readout(&r, 0), "?");
        assert_eq!(q.rename(&r, &swap), m);
    }

    #[test]
    fn partial_updates() {
        let q = QuantumRegisters::default();
        assert!(q.update(&[1, 1], "CNOT", &q.initial()).is_err());
        assert!(q.update(&[1], "CNOT", &q.initial()).is_err());
        assert!(q.update(&[1], "T", &q.initial()).is_err());
    }
}
