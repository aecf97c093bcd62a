//! Channel models applied to photons in transit: the eavesdropper the
//! random Z/X sampling check is designed to catch, plus a Pauli noise
//! channel for calibration.
//!
//! A [`ChannelModel`] is immutable configuration; [`transmit`] applies it to
//! one photon of a session-owned register and returns what Eve learned.

use serde::{Deserialize, Serialize};

use crate::bell::PauliOp;
use crate::error::Result;
use crate::qstate::{MeasurementBasis, StateVector, WireLabel};
use crate::rng::RngStream;

/// Basis policy of an intercept-resend eavesdropper.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InterceptStrategy {
    AlwaysZ,
    AlwaysX,
    RandomZx,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelKind {
    /// Photons pass untouched.
    Ideal,
    /// Eve measures each photon and forwards the collapsed state.
    InterceptResend {
        strategy: InterceptStrategy,
    },
    /// With probability `noise_prob`, a uniformly random Pauli
    /// (including identity) hits the photon.
    Depolarizing {
        noise_prob: f64,
    },
}

/// Which transmission links the channel affects.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LinkMask {
    All,
    Only(Vec<usize>),
}

impl LinkMask {
    pub fn covers(&self, link: usize) -> bool {
        match self {
            LinkMask::All => true,
            LinkMask::Only(links) => links.contains(&link),
        }
    }
}

/// One channel kind plus the set of links it applies to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    pub kind: ChannelKind,
    pub links: LinkMask,
}

impl ChannelModel {
    pub fn ideal() -> Self {
        Self {
            kind: ChannelKind::Ideal,
            links: LinkMask::All,
        }
    }

    pub fn intercept_resend(strategy: InterceptStrategy, links: LinkMask) -> Self {
        Self {
            kind: ChannelKind::InterceptResend { strategy },
            links,
        }
    }

    pub fn depolarizing(noise_prob: f64, links: LinkMask) -> Self {
        Self {
            kind: ChannelKind::Depolarizing { noise_prob },
            links,
        }
    }

    pub fn is_attack(&self) -> bool {
        self.kind != ChannelKind::Ideal
    }

    /// Links whose check statistics this channel perturbs.
    pub fn scored_links(&self, all_links: usize) -> Vec<usize> {
        if !self.is_attack() {
            return (0..all_links).collect();
        }
        (0..all_links).filter(|&l| self.links.covers(l)).collect()
    }
}

impl Default for ChannelModel {
    fn default() -> Self {
        Self::ideal()
    }
}

/// What Eve learned from one intercepted photon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EveTap {
    pub link: usize,
    pub position: usize,
    pub basis: MeasurementBasis,
    pub outcome: u8,
}

/// Accumulated eavesdropper knowledge for one session.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EveRecord {
    pub taps: Vec<EveTap>,
}

impl EveRecord {
    pub fn push(&mut self, tap: Option<EveTap>) {
        if let Some(t) = tap {
            self.taps.push(t);
        }
    }

    pub fn lookup(&self, link: usize, position: usize) -> Option<&EveTap> {
        self.taps
            .iter()
            .find(|t| t.link == link && t.position == position)
    }

    pub fn intercepted(&self) -> usize {
        self.taps.len()
    }
}

/// Send qubit `q` through the channel on `link`. Returns Eve's tap, if any.
///
/// Ideal links (and links outside the mask) leave the state untouched and
/// consume no randomness.
pub fn transmit(
    state: &mut StateVector,
    q: WireLabel,
    channel: &ChannelModel,
    link: usize,
    position: usize,
    rng: &mut RngStream,
) -> Result<Option<EveTap>> {
    if !channel.links.covers(link) {
        return Ok(None);
    }
    match channel.kind {
        ChannelKind::Ideal => Ok(None),
        ChannelKind::InterceptResend { strategy } => {
            let basis = match strategy {
                InterceptStrategy::AlwaysZ => MeasurementBasis::Z,
                InterceptStrategy::AlwaysX => MeasurementBasis::X,
                InterceptStrategy::RandomZx => {
                    if rng.bit() == 0 {
                        MeasurementBasis::Z
                    } else {
                        MeasurementBasis::X
                    }
                }
            };
            let outcome = state.measure_single(q, basis, rng)?;
            Ok(Some(EveTap {
                link,
                position,
                basis,
                outcome,
            }))
        }
        ChannelKind::Depolarizing { noise_prob } => {
            if rng.chance(noise_prob) {
                let op = match rng.below(4) {
                    0 => PauliOp::I,
                    1 => PauliOp::X,
                    2 => PauliOp::Iy,
                    _ => PauliOp::Z,
                };
                state.apply_pauli(q, op)?;
            }
            Ok(None)
        }
    }
}

/// Closed-form probability that one checked phi+ pair flags an error under
/// the random Z/X comparison, given the channel hit its transmitted photon.
///
/// Intercept-resend: Eve's basis matches the check basis half the time and
/// is then invisible; otherwise the pair decorrelates and mismatches half
/// the time, giving 1/4 for every strategy. Depolarizing: sigma_x is
/// invisible in X, sigma_z in Z, i sigma_y visible in both, identity never,
/// averaging to 1/2 per hit.
pub fn detection_probability(channel: &ChannelModel) -> f64 {
    match channel.kind {
        ChannelKind::Ideal => 0.0,
        ChannelKind::InterceptResend { .. } => 0.25,
        ChannelKind::Depolarizing { noise_prob } => noise_prob * 0.5,
    }
}
