//! Exact small-register state-vector engine.
//!
//! A [`StateVector`] holds all 2^n complex amplitudes of an n-qubit register
//! (n <= 24). Qubit index 0 is the least-significant bit of the basis-state
//! index; that single convention governs every table in this crate.
//!
//! Global phase is not observable and is not part of any contract here:
//! collapsed states and prepared states are defined up to a phase factor.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bell::BellOutcome;
use crate::error::{Error, Result};
use crate::rng::RngStream;

pub const MAX_QUBITS: usize = 24;

/// Normalization / probability bookkeeping tolerance.
pub const NORM_TOLERANCE: f64 = 1e-9;

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Index of a qubit within one register.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct WireLabel(pub usize);

impl From<usize> for WireLabel {
    fn from(i: usize) -> Self {
        WireLabel(i)
    }
}

/// The two single-photon measurement bases: Z = {|0>, |1>}, X = {|+>, |->}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MeasurementBasis {
    Z,
    X,
}

impl std::fmt::Display for MeasurementBasis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MeasurementBasis::Z => write!(f, "Z"),
            MeasurementBasis::X => write!(f, "X"),
        }
    }
}

/// Dense complex-amplitude register.
#[derive(Debug, Clone)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// Fresh register in |0...0>.
    pub fn new(n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::RegisterSize { n_qubits });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(Self { n_qubits, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn check_wire(&self, q: WireLabel) -> Result<usize> {
        if q.0 >= self.n_qubits {
            return Err(Error::WireOutOfRange {
                wire: q.0,
                n_qubits: self.n_qubits,
            });
        }
        Ok(q.0)
    }

    fn check_pair(&self, a: WireLabel, b: WireLabel) -> Result<(usize, usize)> {
        let a = self.check_wire(a)?;
        let b = self.check_wire(b)?;
        if a == b {
            return Err(Error::DuplicateWire { wire: a });
        }
        Ok((a, b))
    }

    /// Apply one of {I, sigma_x, i sigma_y, sigma_z} to qubit `q`.
    /// i sigma_y uses the sign convention |0><1| - |1><0|.
    pub fn apply_pauli(&mut self, q: WireLabel, op: crate::bell::PauliOp) -> Result<()> {
        use crate::bell::PauliOp;
        let q = self.check_wire(q)?;
        let mask = 1usize << q;
        match op {
            PauliOp::I => {}
            PauliOp::X => {
                for i in 0..self.amps.len() {
                    if i & mask == 0 {
                        self.amps.swap(i, i | mask);
                    }
                }
            }
            PauliOp::Z => {
                for (i, a) in self.amps.iter_mut().enumerate() {
                    if i & mask != 0 {
                        *a = -*a;
                    }
                }
            }
            PauliOp::Iy => {
                for i in 0..self.amps.len() {
                    if i & mask == 0 {
                        let j = i | mask;
                        let lo = self.amps[i];
                        let hi = self.amps[j];
                        self.amps[i] = hi;
                        self.amps[j] = -lo;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn apply_hadamard(&mut self, q: WireLabel) -> Result<()> {
        let q = self.check_wire(q)?;
        let mask = 1usize << q;
        for i in 0..self.amps.len() {
            if i & mask == 0 {
                let j = i | mask;
                let lo = self.amps[i];
                let hi = self.amps[j];
                self.amps[i] = (lo + hi) * FRAC_1_SQRT_2;
                self.amps[j] = (lo - hi) * FRAC_1_SQRT_2;
            }
        }
        Ok(())
    }

    pub fn apply_cnot(&mut self, control: WireLabel, target: WireLabel) -> Result<()> {
        let (c, t) = self.check_pair(control, target)?;
        let c_mask = 1usize << c;
        let t_mask = 1usize << t;
        for i in 0..self.amps.len() {
            if i & c_mask != 0 && i & t_mask == 0 {
                self.amps.swap(i, i | t_mask);
            }
        }
        Ok(())
    }

    /// Put wires `(a, b)` into the requested Bell state.
    ///
    /// Both wires must currently be |0> and unentangled with the rest of the
    /// register (every amplitude with either bit set must vanish); anything
    /// else is a caller bug and is rejected.
    pub fn prepare_bell_pair(&mut self, a: WireLabel, b: WireLabel, kind: BellOutcome) -> Result<()> {
        let (a, b) = self.check_pair(a, b)?;
        let pair_mask = (1usize << a) | (1usize << b);
        let clean = self
            .amps
            .iter()
            .enumerate()
            .all(|(i, amp)| i & pair_mask == 0 || amp.norm_sqr() < 1e-24);
        if !clean {
            return Err(Error::NotGroundState { a, b });
        }
        // |flip> on b and |phase> on a, then H(a), CNOT(a -> b)
        if kind.phase_bit() == 1 {
            self.apply_pauli(WireLabel(a), crate::bell::PauliOp::X)?;
        }
        if kind.flip_bit() == 1 {
            self.apply_pauli(WireLabel(b), crate::bell::PauliOp::X)?;
        }
        self.apply_hadamard(WireLabel(a))?;
        self.apply_cnot(WireLabel(a), WireLabel(b))?;
        Ok(())
    }

    /// Born-rule measurement of one qubit. Outcome 0 maps to |0> (Z) or |+>
    /// (X); outcome 1 to |1> or |->. The register collapses and renormalizes.
    pub fn measure_single(
        &mut self,
        q: WireLabel,
        basis: MeasurementBasis,
        rng: &mut RngStream,
    ) -> Result<u8> {
        let qi = self.check_wire(q)?;
        if basis == MeasurementBasis::X {
            self.apply_hadamard(q)?;
        }
        let outcome = self.collapse_z(qi, rng);
        if basis == MeasurementBasis::X {
            self.apply_hadamard(q)?;
        }
        outcome
    }

    fn collapse_z(&mut self, q: usize, rng: &mut RngStream) -> Result<u8> {
        let mask = 1usize << q;
        let mut p0 = 0.0;
        let mut p1 = 0.0;
        for (i, a) in self.amps.iter().enumerate() {
            if i & mask == 0 {
                p0 += a.norm_sqr();
            } else {
                p1 += a.norm_sqr();
            }
        }
        let total = p0 + p1;
        if (total - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::ProbabilityInconsistent { total });
        }
        let outcome = u8::from(rng.uniform() < p1);
        let keep = if outcome == 1 { p1 } else { p0 };
        let scale = 1.0 / keep.sqrt();
        for (i, a) in self.amps.iter_mut().enumerate() {
            let bit = u8::from(i & mask != 0);
            if bit == outcome {
                *a *= scale;
            } else {
                *a = Complex64::new(0.0, 0.0);
            }
        }
        Ok(outcome)
    }

    /// Projective Bell-basis measurement of wires `(a, b)`.
    ///
    /// Implemented as a basis change (CNOT then Hadamard), two Z
    /// measurements, and the inverse rotation, leaving the register collapsed
    /// onto the reported Bell state (up to global phase).
    pub fn measure_bell(
        &mut self,
        a: WireLabel,
        b: WireLabel,
        rng: &mut RngStream,
    ) -> Result<BellOutcome> {
        self.check_pair(a, b)?;
        self.apply_cnot(a, b)?;
        self.apply_hadamard(a)?;
        let phase = self.collapse_z(a.0, rng)?;
        let flip = self.collapse_z(b.0, rng)?;
        self.apply_hadamard(a)?;
        self.apply_cnot(a, b)?;
        Ok(BellOutcome::from_bits(flip, phase))
    }

    /// The four Bell-outcome probabilities for wires `(a, b)`, without
    /// collapsing. Indexed by [`BellOutcome::index`].
    pub fn bell_probabilities(&self, a: WireLabel, b: WireLabel) -> Result<[f64; 4]> {
        self.check_pair(a, b)?;
        let mut rotated = self.clone();
        rotated.apply_cnot(a, b)?;
        rotated.apply_hadamard(a)?;
        let a_mask = 1usize << a.0;
        let b_mask = 1usize << b.0;
        let mut probs = [0.0; 4];
        for (i, amp) in rotated.amps.iter().enumerate() {
            let phase = u8::from(i & a_mask != 0);
            let flip = u8::from(i & b_mask != 0);
            probs[BellOutcome::from_bits(flip, phase).index()] += amp.norm_sqr();
        }
        Ok(probs)
    }

    /// Exact joint distribution of simultaneous Bell measurements on several
    /// disjoint wire pairs. Returns the nonzero-probability outcome tuples
    /// (one [`BellOutcome`] per pair, in argument order), deterministically
    /// ordered. Entries below 1e-12 are treated as numeric dust and dropped.
    pub fn joint_bell_probabilities(
        &self,
        pairs: &[(WireLabel, WireLabel)],
    ) -> Result<Vec<(Vec<BellOutcome>, f64)>> {
        let mut seen = std::collections::BTreeSet::new();
        for &(a, b) in pairs {
            self.check_pair(a, b)?;
            for w in [a.0, b.0] {
                if !seen.insert(w) {
                    return Err(Error::DuplicateWire { wire: w });
                }
            }
        }
        let mut rotated = self.clone();
        for &(a, b) in pairs {
            rotated.apply_cnot(a, b)?;
            rotated.apply_hadamard(a)?;
        }
        let n_keys = 1usize << (2 * pairs.len());
        let mut acc = vec![0.0f64; n_keys];
        for (i, amp) in rotated.amps.iter().enumerate() {
            let p = amp.norm_sqr();
            if p == 0.0 {
                continue;
            }
            let mut key = 0usize;
            for (k, &(a, b)) in pairs.iter().enumerate() {
                let phase = (i >> a.0) & 1;
                let flip = (i >> b.0) & 1;
                key |= ((flip << 1) | phase) << (2 * k);
            }
            acc[key] += p;
        }
        let mut out = Vec::new();
        for (key, &p) in acc.iter().enumerate() {
            if p > 1e-12 {
                let outcomes = (0..pairs.len())
                    .map(|k| BellOutcome::from_index((key >> (2 * k)) & 0b11))
                    .collect();
                out.push((outcomes, p));
            }
        }
        Ok(out)
    }
}
