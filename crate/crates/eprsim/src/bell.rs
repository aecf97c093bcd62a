//! Analytic Bell-label algebra: the two-bit encoding of the four Bell
//! states, the Pauli encoding map, exact entanglement-swap distributions,
//! and the message/key decoding tables.
//!
//! Everything here is pure label arithmetic, deliberately independent of
//! the state-vector engine in [`crate::qstate`] so the two implementations
//! can serve as each other's oracle.
//!
//! Labels form a Klein four-group under XOR: a Bell state is a pair of bits
//! `(flip, phase)` and swapping two pairs composes labels component-wise.

use std::fmt;
use std::ops::BitXor;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One of the four Bell states, encoded as `(flip, phase)` bits:
/// phi+ = (0,0), phi- = (0,1), psi+ = (1,0), psi- = (1,1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BellOutcome {
    #[serde(rename = "phi+")]
    PhiPlus,
    #[serde(rename = "phi-")]
    PhiMinus,
    #[serde(rename = "psi+")]
    PsiPlus,
    #[serde(rename = "psi-")]
    PsiMinus,
}

impl BellOutcome {
    pub const ALL: [BellOutcome; 4] = [
        BellOutcome::PhiPlus,
        BellOutcome::PhiMinus,
        BellOutcome::PsiPlus,
        BellOutcome::PsiMinus,
    ];

    /// Bit 1 when the two qubits are anti-aligned in the Z basis (psi states).
    pub fn flip_bit(self) -> u8 {
        match self {
            BellOutcome::PhiPlus | BellOutcome::PhiMinus => 0,
            BellOutcome::PsiPlus | BellOutcome::PsiMinus => 1,
        }
    }

    /// Bit 1 for the minus-superposition states.
    pub fn phase_bit(self) -> u8 {
        match self {
            BellOutcome::PhiPlus | BellOutcome::PsiPlus => 0,
            BellOutcome::PhiMinus | BellOutcome::PsiMinus => 1,
        }
    }

    pub fn from_bits(flip: u8, phase: u8) -> Self {
        match (flip & 1, phase & 1) {
            (0, 0) => BellOutcome::PhiPlus,
            (0, 1) => BellOutcome::PhiMinus,
            (1, 0) => BellOutcome::PsiPlus,
            (1, 1) => BellOutcome::PsiMinus,
            _ => unreachable!(),
        }
    }

    /// Dense index `flip << 1 | phase`, matching the order of [`Self::ALL`].
    pub fn index(self) -> usize {
        ((self.flip_bit() << 1) | self.phase_bit()) as usize
    }

    pub fn from_index(i: usize) -> Self {
        Self::from_bits((i >> 1) as u8, (i & 1) as u8)
    }
}

impl BitXor for BellOutcome {
    type Output = BellOutcome;

    fn bitxor(self, rhs: BellOutcome) -> BellOutcome {
        BellOutcome::from_bits(
            self.flip_bit() ^ rhs.flip_bit(),
            self.phase_bit() ^ rhs.phase_bit(),
        )
    }
}

impl fmt::Display for BellOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            BellOutcome::PhiPlus => "phi+",
            BellOutcome::PhiMinus => "phi-",
            BellOutcome::PsiPlus => "psi+",
            BellOutcome::PsiMinus => "psi-",
        };
        write!(f, "{s}")
    }
}

/// Single-qubit message operations. `Iy` is i*sigma_y with the sign
/// convention |0><1| - |1><0|.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PauliOp {
    #[serde(rename = "I")]
    I,
    #[serde(rename = "sigma_x")]
    X,
    #[serde(rename = "i_sigma_y")]
    Iy,
    #[serde(rename = "sigma_z")]
    Z,
}

impl PauliOp {
    pub const ALL: [PauliOp; 4] = [PauliOp::I, PauliOp::X, PauliOp::Iy, PauliOp::Z];
}

impl fmt::Display for PauliOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            PauliOp::I => "I",
            PauliOp::X => "sigma_x",
            PauliOp::Iy => "i_sigma_y",
            PauliOp::Z => "sigma_z",
        };
        write!(f, "{s}")
    }
}

/// A two-bit message symbol `hi lo`, i.e. "00".."11".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Dibit {
    pub hi: u8,
    pub lo: u8,
}

impl Dibit {
    pub const ALL: [Dibit; 4] = [
        Dibit { hi: 0, lo: 0 },
        Dibit { hi: 0, lo: 1 },
        Dibit { hi: 1, lo: 0 },
        Dibit { hi: 1, lo: 1 },
    ];

    pub fn new(hi: u8, lo: u8) -> Self {
        Self {
            hi: hi & 1,
            lo: lo & 1,
        }
    }

    /// Value 0..=3 with `hi` as the more significant bit.
    pub fn value(self) -> u8 {
        (self.hi << 1) | self.lo
    }

    pub fn from_value(v: u8) -> Self {
        Self::new((v >> 1) & 1, v & 1)
    }
}

impl fmt::Display for Dibit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.hi, self.lo)
    }
}

impl Serialize for Dibit {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Dibit {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        let bytes = s.as_bytes();
        if bytes.len() != 2 || !bytes.iter().all(|b| *b == b'0' || *b == b'1') {
            return Err(serde::de::Error::custom(format!("bad dibit `{s}`")));
        }
        Ok(Dibit::new(bytes[0] - b'0', bytes[1] - b'0'))
    }
}

/// Render a dibit sequence as a plain bit string, e.g. [01, 10] -> "0110".
pub fn dibits_to_bit_string(dibits: &[Dibit]) -> String {
    let mut s = String::with_capacity(dibits.len() * 2);
    for d in dibits {
        s.push(char::from(b'0' + d.hi));
        s.push(char::from(b'0' + d.lo));
    }
    s
}

/// Parse a hex string into dibits, two per hex digit, most significant first.
pub fn hex_to_dibits(hex: &str) -> Result<Vec<Dibit>> {
    let mut out = Vec::with_capacity(hex.len() * 2);
    for c in hex.chars() {
        let v = c.to_digit(16).ok_or_else(|| Error::InvalidSpec {
            field: "message_hex",
            reason: format!("`{c}` is not a hex digit"),
        })? as u8;
        out.push(Dibit::from_value(v >> 2));
        out.push(Dibit::from_value(v & 0b11));
    }
    Ok(out)
}

/// Bell state of a phi+ pair after `op` acts on one of its qubits.
pub fn pauli_encode(op: PauliOp) -> BellOutcome {
    match op {
        PauliOp::I => BellOutcome::PhiPlus,
        PauliOp::X => BellOutcome::PsiPlus,
        PauliOp::Iy => BellOutcome::PsiMinus,
        PauliOp::Z => BellOutcome::PhiMinus,
    }
}

/// Message coding: 00 -> I, 01 -> sigma_x, 10 -> i sigma_y, 11 -> sigma_z.
pub fn dibit_to_pauli(d: Dibit) -> PauliOp {
    match d.value() {
        0b00 => PauliOp::I,
        0b01 => PauliOp::X,
        0b10 => PauliOp::Iy,
        _ => PauliOp::Z,
    }
}

pub fn pauli_to_dibit(op: PauliOp) -> Dibit {
    match op {
        PauliOp::I => Dibit::from_value(0b00),
        PauliOp::X => Dibit::from_value(0b01),
        PauliOp::Iy => Dibit::from_value(0b10),
        PauliOp::Z => Dibit::from_value(0b11),
    }
}

/// Key coding: phi+ -> 00, phi- -> 01, psi+ -> 10, psi- -> 11.
/// Equals the `(flip, phase)` bits of the canonical encoding.
pub fn bell_to_dibit(b: BellOutcome) -> Dibit {
    Dibit::new(b.flip_bit(), b.phase_bit())
}

pub fn dibit_to_bell(d: Dibit) -> BellOutcome {
    BellOutcome::from_bits(d.hi, d.lo)
}

/// Joint distribution of the rewired Bell outcomes after one swap.
#[derive(Debug, Clone, PartialEq)]
pub struct SwapDistribution {
    probs: [[f64; 4]; 4],
}

impl SwapDistribution {
    /// Probability of `(outcome_ad, outcome_bc)` on the rewired pairs.
    pub fn probability(&self, ad: BellOutcome, bc: BellOutcome) -> f64 {
        self.probs[ad.index()][bc.index()]
    }

    /// Entries with nonzero probability, in canonical (ad, bc) order.
    pub fn support(&self) -> Vec<(BellOutcome, BellOutcome, f64)> {
        let mut out = Vec::new();
        for ad in BellOutcome::ALL {
            for bc in BellOutcome::ALL {
                let p = self.probability(ad, bc);
                if p > 0.0 {
                    out.push((ad, bc, p));
                }
            }
        }
        out
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().flatten().sum()
    }
}

/// Exact swap law for two source pairs `(1,2) = left` and `(3,4) = right`:
/// Bell-measuring (1,4) and (2,3) yields, with probability 1/4 each, the
/// four outcome pairs satisfying `outcome_14 XOR outcome_23 = left XOR right`;
/// every other pair has probability 0.
pub fn swap_distribution(left: BellOutcome, right: BellOutcome) -> SwapDistribution {
    let target = left ^ right;
    let mut probs = [[0.0; 4]; 4];
    for ad in BellOutcome::ALL {
        let bc = ad ^ target;
        probs[ad.index()][bc.index()] = 0.25;
    }
    SwapDistribution { probs }
}

/// Recover the sender's dibit from the two published swap outcomes.
///
/// The sender's Pauli turned her phi+ pair into `pauli_encode(op)`, and the
/// swap preserves the XOR of source labels, so `alice XOR bob` is exactly
/// that encoded state.
pub fn decode_qsdc(alice: BellOutcome, bob: BellOutcome) -> Dibit {
    let encoded = alice ^ bob;
    let op = PauliOp::ALL
        .into_iter()
        .find(|&op| pauli_encode(op) == encoded)
        .expect("pauli_encode is a bijection");
    pauli_to_dibit(op)
}

/// XOR-fold of Bell outcomes; phi+ is the identity element.
pub fn xor_fold(outcomes: &[BellOutcome]) -> BellOutcome {
    outcomes
        .iter()
        .fold(BellOutcome::PhiPlus, |acc, &o| acc ^ o)
}

/// Collaborators pool their Bell outcomes to reconstruct the dealer's
/// outcome and the shared key. Valid because every source pair is phi+,
/// the group identity, so the ring of outcomes XORs to phi+.
pub fn qss_decode(collaborators: &[BellOutcome]) -> Result<(BellOutcome, Dibit)> {
    if collaborators.len() < 2 {
        return Err(Error::TooFewCollaborators {
            got: collaborators.len(),
        });
    }
    let alice = xor_fold(collaborators);
    Ok((alice, bell_to_dibit(alice)))
}

// ---------------------------------------------------------------------------
// Published decoding tables, hard-coded in the printed row order.
// ---------------------------------------------------------------------------

/// Message-recovery table rows: dibit, its Pauli, and the four
/// (sender outcome, receiver outcome) cells that decode to it.
pub type MessageTable = [(Dibit, PauliOp, [(BellOutcome, BellOutcome); 4]); 4];

/// Key-establishment table rows: dealer outcome, the four
/// (second party, third party) outcome cells, and the shared key.
pub type KeyTable = [(BellOutcome, [(BellOutcome, BellOutcome); 4], Dibit); 4];

use BellOutcome::{PhiMinus as Fm, PhiPlus as Fp, PsiMinus as Sm, PsiPlus as Sp};

/// The published message-recovery table for the two-step protocol.
pub const MESSAGE_TABLE: MessageTable = [
    (
        Dibit { hi: 0, lo: 0 },
        PauliOp::I,
        [(Fp, Fp), (Fm, Fm), (Sp, Sp), (Sm, Sm)],
    ),
    (
        Dibit { hi: 0, lo: 1 },
        PauliOp::X,
        [(Fp, Sp), (Fm, Sm), (Sp, Fp), (Sm, Fm)],
    ),
    (
        Dibit { hi: 1, lo: 0 },
        PauliOp::Iy,
        [(Fm, Sp), (Fp, Sm), (Sm, Fp), (Sp, Fm)],
    ),
    (
        Dibit { hi: 1, lo: 1 },
        PauliOp::Z,
        [(Fp, Fm), (Fm, Fp), (Sm, Sp), (Sp, Sm)],
    ),
];

/// The published three-party key-establishment table.
pub const KEY_TABLE: KeyTable = [
    (
        Fp,
        [(Fp, Fp), (Fm, Fm), (Sp, Sp), (Sm, Sm)],
        Dibit { hi: 0, lo: 0 },
    ),
    (
        Fm,
        [(Fp, Fm), (Fm, Fp), (Sm, Sp), (Sp, Sm)],
        Dibit { hi: 0, lo: 1 },
    ),
    (
        Sp,
        [(Fp, Sp), (Fm, Sm), (Sp, Fp), (Sm, Fm)],
        Dibit { hi: 1, lo: 0 },
    ),
    (
        Sm,
        [(Fm, Sp), (Fp, Sm), (Sm, Fp), (Sp, Fm)],
        Dibit { hi: 1, lo: 1 },
    ),
];

/// Regenerate the message table from the algebra alone.
///
/// Rows are in dibit order; cells within a row are in canonical sender-label
/// order (use [`render_message_table`] for order-insensitive comparison).
pub fn regenerate_message_table() -> MessageTable {
    let mut rows = MESSAGE_TABLE; // shape template; every field is overwritten
    for (i, d) in Dibit::ALL.into_iter().enumerate() {
        let op = dibit_to_pauli(d);
        let encoded = pauli_encode(op);
        let mut cells = [(Fp, Fp); 4];
        for (j, alice) in BellOutcome::ALL.into_iter().enumerate() {
            cells[j] = (alice, alice ^ encoded);
        }
        rows[i] = (d, op, cells);
    }
    rows
}

/// Regenerate the key table from the algebra alone.
pub fn regenerate_key_table() -> KeyTable {
    let mut rows = KEY_TABLE;
    for (i, alice) in BellOutcome::ALL.into_iter().enumerate() {
        let mut cells = [(Fp, Fp); 4];
        for (j, bob) in BellOutcome::ALL.into_iter().enumerate() {
            // charlie must XOR with bob to alice
            cells[j] = (bob, bob ^ alice);
        }
        rows[i] = (alice, cells, bell_to_dibit(alice));
    }
    rows
}

fn sorted_cells(cells: &[(BellOutcome, BellOutcome); 4]) -> [(BellOutcome, BellOutcome); 4] {
    let mut c = *cells;
    c.sort();
    c
}

/// Canonical text rendering of a message table (cells sorted within rows),
/// so regenerated and hard-coded tables can be compared byte for byte.
pub fn render_message_table(table: &MessageTable) -> String {
    let mut out = String::from("secret | operation | (sender, receiver) results\n");
    for (d, op, cells) in table {
        let cells = sorted_cells(cells)
            .iter()
            .map(|(a, b)| format!("({a}, {b})"))
            .collect::<Vec<_>>()
            .join(" ");
        out.push_str(&format!("{d} | {op} | {cells}\n"));
    }
    out
}

/// Canonical text rendering of a key table.
pub fn render_key_table(table: &KeyTable) -> String {
    let mut out = String::from("dealer result | (second, third) results | key\n");
    for (alice, cells, key) in table {
        let cells = sorted_cells(cells)
            .iter()
            .map(|(a, b)| format!("({a}, {b})"))
            .collect::<Vec<_>>()
            .join(" ");
        out.push_str(&format!("{alice} | {cells} | {key}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bell_encoding_round_trips() {
        for b in BellOutcome::ALL {
            assert_eq!(BellOutcome::from_bits(b.flip_bit(), b.phase_bit()), b);
            assert_eq!(BellOutcome::from_index(b.index()), b);
        }
    }

    #[test]
    fn xor_is_klein_four_group() {
        let id = BellOutcome::PhiPlus;
        for a in BellOutcome::ALL {
            assert_eq!(a ^ id, a);
            assert_eq!(a ^ a, id); // every element is its own inverse
            for b in BellOutcome::ALL {
                assert_eq!(a ^ b, b ^ a);
                for c in BellOutcome::ALL {
                    assert_eq!((a ^ b) ^ c, a ^ (b ^ c));
                }
            }
        }
    }

    #[test]
    fn pauli_encode_matches_published_map() {
        assert_eq!(pauli_encode(PauliOp::I), BellOutcome::PhiPlus);
        assert_eq!(pauli_encode(PauliOp::X), BellOutcome::PsiPlus);
        assert_eq!(pauli_encode(PauliOp::Iy), BellOutcome::PsiMinus);
        assert_eq!(pauli_encode(PauliOp::Z), BellOutcome::PhiMinus);
    }

    #[test]
    fn dibit_pauli_bijection() {
        assert_eq!(dibit_to_pauli(Dibit::from_value(0b00)), PauliOp::I);
        assert_eq!(dibit_to_pauli(Dibit::from_value(0b10)), PauliOp::Iy);
        for d in Dibit::ALL {
            assert_eq!(pauli_to_dibit(dibit_to_pauli(d)), d);
        }
        for op in PauliOp::ALL {
            assert_eq!(dibit_to_pauli(pauli_to_dibit(op)), op);
        }
    }

    #[test]
    fn bell_dibit_coding() {
        assert_eq!(bell_to_dibit(BellOutcome::PhiPlus), Dibit::from_value(0b00));
        assert_eq!(bell_to_dibit(BellOutcome::PsiMinus), Dibit::from_value(0b11));
        for b in BellOutcome::ALL {
            let d = bell_to_dibit(b);
            assert_eq!(d.hi, b.flip_bit());
            assert_eq!(d.lo, b.phase_bit());
            assert_eq!(dibit_to_bell(d), b);
        }
    }

    #[test]
    fn swap_distribution_phi_plus_pair() {
        // identical source pairs correlate the rewired outcomes exactly
        let d = swap_distribution(Fp, Fp);
        for o in BellOutcome::ALL {
            assert_eq!(d.probability(o, o), 0.25);
        }
        assert_eq!(d.probability(Fp, Fm), 0.0);
        assert!((d.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn swap_distribution_psi_plus_left() {
        let d = swap_distribution(Sp, Fp);
        for (ad, bc) in [(Fp, Sp), (Fm, Sm), (Sp, Fp), (Sm, Fm)] {
            assert_eq!(d.probability(ad, bc), 0.25);
        }
        assert_eq!(d.support().len(), 4);
    }

    #[test]
    fn swap_distribution_xor_law_all_16() {
        for left in BellOutcome::ALL {
            for right in BellOutcome::ALL {
                let d = swap_distribution(left, right);
                let support = d.support();
                assert_eq!(support.len(), 4);
                for (ad, bc, p) in support {
                    assert_eq!(ad ^ bc, left ^ right);
                    assert_eq!(p, 0.25);
                }
                assert!((d.total() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn decode_qsdc_published_examples() {
        assert_eq!(decode_qsdc(Sm, Fm), Dibit::from_value(0b01));
        assert_eq!(decode_qsdc(Fp, Fp), Dibit::from_value(0b00));
        assert_eq!(decode_qsdc(Fm, Sp), Dibit::from_value(0b10));
    }

    #[test]
    fn decode_qsdc_total_and_correct() {
        // every (dibit, sender-outcome) combination decodes back exactly
        for d in Dibit::ALL {
            let encoded = pauli_encode(dibit_to_pauli(d));
            for alice in BellOutcome::ALL {
                let bob = alice ^ encoded;
                assert_eq!(decode_qsdc(alice, bob), d);
            }
        }
    }

    #[test]
    fn qss_decode_published_examples() {
        let (alice, key) = qss_decode(&[Fp, Fm]).unwrap();
        assert_eq!(alice, Fm);
        assert_eq!(key, Dibit::from_value(0b01));

        let (alice, key) = qss_decode(&[Sp, Sp]).unwrap();
        assert_eq!(alice, Fp);
        assert_eq!(key, Dibit::from_value(0b00));
    }

    #[test]
    fn qss_decode_identity_chain() {
        for len in 2..10 {
            let chain = vec![Fp; len];
            let (alice, key) = qss_decode(&chain).unwrap();
            assert_eq!(alice, Fp);
            assert_eq!(key, Dibit::from_value(0b00));
        }
    }

    #[test]
    fn qss_decode_rejects_single_collaborator() {
        assert!(matches!(
            qss_decode(&[Fp]),
            Err(Error::TooFewCollaborators { got: 1 })
        ));
        assert!(qss_decode(&[]).is_err());
    }

    #[test]
    fn regenerated_tables_are_byte_identical() {
        assert_eq!(
            render_message_table(&regenerate_message_table()),
            render_message_table(&MESSAGE_TABLE)
        );
        assert_eq!(
            render_key_table(&regenerate_key_table()),
            render_key_table(&KEY_TABLE)
        );
    }

    #[test]
    fn message_table_cells_agree_with_decode() {
        for (d, op, cells) in &MESSAGE_TABLE {
            assert_eq!(dibit_to_pauli(*d), *op);
            for (alice, bob) in cells {
                assert_eq!(decode_qsdc(*alice, *bob), *d);
            }
        }
    }

    #[test]
    fn key_table_cells_agree_with_qss_decode() {
        for (alice, cells, key) in &KEY_TABLE {
            assert_eq!(bell_to_dibit(*alice), *key);
            for (bob, charlie) in cells {
                let (inferred, k) = qss_decode(&[*bob, *charlie]).unwrap();
                assert_eq!(inferred, *alice);
                assert_eq!(k, *key);
            }
        }
    }

    #[test]
    fn hex_parsing() {
        assert_eq!(
            hex_to_dibits("1b").unwrap(),
            vec![
                Dibit::from_value(0b00),
                Dibit::from_value(0b01),
                Dibit::from_value(0b10),
                Dibit::from_value(0b11),
            ]
        );
        assert!(hex_to_dibits("xy").is_err());
        assert_eq!(
            dibits_to_bit_string(&hex_to_dibits("1b").unwrap()),
            "00011011"
        );
    }
}
