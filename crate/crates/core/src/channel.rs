//! Channel identities: the 21 PSG derivations and the in-ear channel.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

/// PSG derivations in canonical order.
pub const PSG_CHANNELS: [&str; 21] = [
    "C3-M2", "F3-M2", "O1-M2", "C4-M1", "F4-M1", "O2-M1", "C3", "C4", "F3", "F4", "O1", "O2",
    "E1-M1", "E1-M2", "E2-M1", "E2-M2", "E1", "E2", "M1", "M2", "M2-M1",
];

pub const INEAR_CHANNEL: &str = "CH1";

/// A channel from the PSG set or the single in-ear channel.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ChannelId(u8);

impl ChannelId {
    pub const CH1: ChannelId = ChannelId(PSG_CHANNELS.len() as u8);

    pub fn psg(index: usize) -> Option<ChannelId> {
        (index < PSG_CHANNELS.len()).then(|| ChannelId(index as u8))
    }

    /// All PSG channels in canonical order.
    pub fn psg_set() -> impl Iterator<Item = ChannelId> {
        (0..PSG_CHANNELS.len()).map(|i| ChannelId(i as u8))
    }

    pub fn is_inear(self) -> bool {
        self == Self::CH1
    }

    /// Canonical position: PSG order, then CH1.
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn name(self) -> &'static str {
        PSG_CHANNELS
            .get(self.0 as usize)
            .copied()
            .unwrap_or(INEAR_CHANNEL)
    }
}

impl fmt::Display for ChannelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Debug for ChannelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ChannelId({})", self.name())
    }
}

impl FromStr for ChannelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        if t.eq_ignore_ascii_case(INEAR_CHANNEL) {
            return Ok(ChannelId::CH1);
        }
        PSG_CHANNELS
            .iter()
            .position(|c| c.eq_ignore_ascii_case(t))
            .map(|i| ChannelId(i as u8))
            .ok_or_else(|| Error::Invalid(format!("unknown channel {t:?}")))
    }
}

impl Serialize for ChannelId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for ChannelId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
