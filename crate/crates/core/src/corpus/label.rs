use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The seven utterance intentions, in their fixed class order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum IntentLabel {
    /// statement
    S,
    /// yes/no question
    YN,
    /// wh-question
    WH,
    /// rhetorical question
    RQ,
    /// command
    C,
    /// request
    R,
    /// rhetorical command
    RC,
}

impl IntentLabel {
    pub const ALL: [IntentLabel; 7] = [
        IntentLabel::S,
        IntentLabel::YN,
        IntentLabel::WH,
        IntentLabel::RQ,
        IntentLabel::C,
        IntentLabel::R,
        IntentLabel::RC,
    ];

    pub fn ordinal(self) -> usize {
        self as usize
    }

    pub fn from_ordinal(i: usize) -> Result<Self> {
        Self::ALL
            .get(i)
            .copied()
            .ok_or_else(|| Error::Label(format!("class index {i} out of range")))
    }

    pub fn name(self) -> &'static str {
        match self {
            IntentLabel::S => "S",
            IntentLabel::YN => "YN",
            IntentLabel::WH => "WH",
            IntentLabel::RQ => "RQ",
            IntentLabel::C => "C",
            IntentLabel::R => "R",
            IntentLabel::RC => "RC",
        }
    }
}

impl fmt::Display for IntentLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for IntentLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        Self::ALL
            .into_iter()
            .find(|l| l.name().eq_ignore_ascii_case(t))
            .ok_or_else(|| Error::Label(format!("unknown label {s:?}")))
    }
}
