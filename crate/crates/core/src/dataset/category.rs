use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Traffic class of a record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttackCategory {
    Normal,
    DoS,
    Probe,
    U2R,
    R2L,
}

impl AttackCategory {
    pub const ATTACKS: [AttackCategory; 4] = [
        AttackCategory::DoS,
        AttackCategory::Probe,
        AttackCategory::U2R,
        AttackCategory::R2L,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AttackCategory::Normal => "normal",
            AttackCategory::DoS => "dos",
            AttackCategory::Probe => "probe",
            AttackCategory::U2R => "u2r",
            AttackCategory::R2L => "r2l",
        }
    }

    pub fn is_attack(self) -> bool {
        self != AttackCategory::Normal
    }
}

impl fmt::Display for AttackCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AttackCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "normal" => AttackCategory::Normal,
            "dos" => AttackCategory::DoS,
            "probe" => AttackCategory::Probe,
            "u2r" => AttackCategory::U2R,
            "r2l" => AttackCategory::R2L,
            other => return Err(Error::Format(format!("unknown category {other:?}"))),
        })
    }
}

/// Every attack name that appears in the NSL-KDD files, with its category.
///
/// `named` and `sendmail` occur in `KDDTest+` and are remote-to-local
/// attacks in the standard NSL-KDD taxonomy.
pub const ATTACK_NAMES: [(&str, AttackCategory); 39] = {
    use AttackCategory::*;
    [
        ("neptune", DoS),
        ("smurf", DoS),
        ("back", DoS),
        ("teardrop", DoS),
        ("pod", DoS),
        ("land", DoS),
        ("apache2", DoS),
        ("mailbomb", DoS),
        ("processtable", DoS),
        ("udpstorm", DoS),
        ("worm", DoS),
        ("ipsweep", Probe),
        ("nmap", Probe),
        ("portsweep", Probe),
        ("satan", Probe),
        ("mscan", Probe),
        ("saint", Probe),
        ("buffer_overflow", U2R),
        ("loadmodule", U2R),
        ("perl", U2R),
        ("rootkit", U2R),
        ("httptunnel", U2R),
        ("ps", U2R),
        ("sqlattack", U2R),
        ("xterm", U2R),
        ("ftp_write", R2L),
        ("guess_passwd", R2L),
        ("imap", R2L),
        ("multihop", R2L),
        ("phf", R2L),
        ("spy", R2L),
        ("warezclient", R2L),
        ("warezmaster", R2L),
        ("snmpgetattack", R2L),
        ("snmpguess", R2L),
        ("xlock", R2L),
        ("xsnoop", R2L),
        ("named", R2L),
        ("sendmail", R2L),
    ]
};

/// Maps a raw label to its traffic class. Unknown labels are an error.
pub fn map_attack_category(label: &str) -> Result<AttackCategory> {
    if label == "normal" {
        return Ok(AttackCategory::Normal);
    }
    ATTACK_NAMES
        .iter()
        .find(|(name, _)| *name == label)
        .map(|(_, cat)| *cat)
        .ok_or_else(|| Error::UnknownLabel(label.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_examples() {
        assert_eq!(map_attack_category("smurf").unwrap(), AttackCategory::DoS);
        assert_eq!(
            map_attack_category("httptunnel").unwrap(),
            AttackCategory::U2R
        );
        assert_eq!(
            map_attack_category("normal").unwrap(),
            AttackCategory::Normal
        );
        assert_eq!(map_attack_category("named").unwrap(), AttackCategory::R2L);
    }

    #[test]
    fn unknown_is_rejected() {
        for bad in ["", "Normal", "neptune ", "unknown", "dos"] {
            assert!(matches!(
                map_attack_category(bad),
                Err(Error::UnknownLabel(_))
            ));
        }
    }

    #[test]
    fn names_are_unique_and_never_normal() {
        let mut names: Vec<_> = ATTACK_NAMES.iter().map(|(n, _)| *n).collect();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), ATTACK_NAMES.len());
        assert!(ATTACK_NAMES.iter().all(|(_, c)| c.is_attack()));
    }

    #[test]
    fn category_string_round_trip() {
        for c in [AttackCategory::Normal]
            .into_iter()
            .chain(AttackCategory::ATTACKS)
        {
            assert_eq!(c.as_str().parse::<AttackCategory>().unwrap(), c);
        }
    }
}
