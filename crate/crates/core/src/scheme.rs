use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::chain::ChainKind;

/// Topology and retransmission policy of a status-update link.
#[derive(
    Debug,
    Clone,
    Copy,
    PartialEq,
    Eq,
    PartialOrd,
    Ord,
    Hash,
    Serialize,
    Deserialize,
    clap::ValueEnum,
)]
pub enum Scheme {
    /// One hop, a fresh packet every slot.
    #[serde(rename = "single-noarq")]
    #[value(name = "single-noarq")]
    SingleNonArq,
    /// One hop, the same packet until it gets through.
    #[serde(rename = "single-arq")]
    #[value(name = "single-arq")]
    SingleArq,
    /// Source, relay, destination; any failure restarts with a fresh packet.
    #[serde(rename = "two-noarq")]
    #[value(name = "two-noarq")]
    TwoNonArq,
    /// Source, relay, destination; the relay retransmits on second-hop failure.
    #[serde(rename = "two-arq")]
    #[value(name = "two-arq")]
    TwoArq,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [
        Scheme::SingleNonArq,
        Scheme::SingleArq,
        Scheme::TwoNonArq,
        Scheme::TwoArq,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::SingleNonArq => "single-noarq",
            Scheme::SingleArq => "single-arq",
            Scheme::TwoNonArq => "two-noarq",
            Scheme::TwoArq => "two-arq",
        }
    }

    pub fn is_two_hop(self) -> bool {
        matches!(self, Scheme::TwoNonArq | Scheme::TwoArq)
    }

    pub fn uses_arq(self) -> bool {
        matches!(self, Scheme::SingleArq | Scheme::TwoArq)
    }

    pub fn chain_kind(self) -> ChainKind {
        if self.uses_arq() {
            ChainKind::Arq
        } else {
            ChainKind::NonArq
        }
    }

    /// Stable small integer used in seed derivation. Never reorder.
    pub(crate) fn id(self) -> u64 {
        match self {
            Scheme::SingleNonArq => 0,
            Scheme::SingleArq => 1,
            Scheme::TwoNonArq => 2,
            Scheme::TwoArq => 3,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scheme::ALL
            .into_iter()
            .find(|scheme| scheme.name() == s)
            .ok_or_else(|| format!("unknown scheme {s:?}"))
    }
}
