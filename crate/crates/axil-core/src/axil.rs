//! Experience-priority grading: maps (ease of substitution, exposition,
//! quality-of-experience impact) to a discrete priority level, plus the
//! level-to-real mapping used when levels feed a numeric objective.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// How easily the user can substitute the application's function
/// (e.g. with a phone).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EaseOfSubstitution {
    Easy,
    Medium,
    Difficult,
}

/// How often users are exposed to the application.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Exposition {
    Rare,
    Low,
    Medium,
    High,
}

/// How strongly losing the application degrades the experience.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum QoeImpact {
    Minimal,
    Low,
    Medium,
    High,
}

/// The three grading inputs bundled together.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AxilInputs {
    pub ease: EaseOfSubstitution,
    pub exposition: Exposition,
    pub qoe: QoeImpact,
}

/// Discrete priority level, ordered `None < A < B < C < D`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AxilLevel {
    None,
    A,
    B,
    C,
    D,
}

/// The grading table, indexed `[ease][exposition][qoe]`, storing level
/// ordinals (0 = none .. 4 = D). Rows follow the enum orders above.
const LEVEL_TABLE: [[[u8; 4]; 4]; 3] = [
    // Easy
    [
        [0, 0, 0, 0], // Rare
        [0, 0, 0, 0], // Low
        [0, 0, 0, 1], // Medium
        [0, 0, 1, 2], // High
    ],
    // Medium
    [
        [0, 0, 0, 0], // Rare
        [0, 0, 0, 1], // Low
        [0, 0, 1, 2], // Medium
        [0, 1, 2, 3], // High
    ],
    // Difficult
    [
        [0, 0, 0, 1], // Rare
        [0, 0, 1, 2], // Low
        [0, 1, 2, 3], // Medium
        [1, 2, 3, 4], // High
    ],
];

const LEVELS: [AxilLevel; 5] = [
    AxilLevel::None,
    AxilLevel::A,
    AxilLevel::B,
    AxilLevel::C,
    AxilLevel::D,
];

/// Grades the three inputs into a priority level.
pub fn axil_level(inputs: AxilInputs) -> AxilLevel {
    let cell = LEVEL_TABLE[inputs.ease as usize][inputs.exposition as usize][inputs.qoe as usize];
    LEVELS[cell as usize]
}

/// Maps a level to a non-negative real.
///
/// The default mapping is `(none, A, B, C, D) -> (0, 1, 2, 3, 4)`. A custom
/// mapping must list five non-negative values in non-decreasing level order.
pub fn level_value(level: AxilLevel, mapping: Option<&[f64; 5]>) -> Result<f64> {
    let default = [0.0, 1.0, 2.0, 3.0, 4.0];
    let map = mapping.unwrap_or(&default);
    for (i, v) in map.iter().enumerate() {
        if !v.is_finite() || *v < 0.0 {
            return Err(Error::invalid_argument(format!(
                "level mapping entry {i} is {v}, expected finite and non-negative"
            )));
        }
        if i > 0 && *v < map[i - 1] {
            return Err(Error::invalid_argument(format!(
                "level mapping must be non-decreasing, but entry {i} ({v}) < entry {} ({})",
                i - 1,
                map[i - 1]
            )));
        }
    }
    Ok(map[level as usize])
}

impl fmt::Display for AxilLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            AxilLevel::None => "-",
            AxilLevel::A => "A",
            AxilLevel::B => "B",
            AxilLevel::C => "C",
            AxilLevel::D => "D",
        };
        f.write_str(s)
    }
}

impl FromStr for EaseOfSubstitution {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "easy" => Ok(EaseOfSubstitution::Easy),
            "medium" => Ok(EaseOfSubstitution::Medium),
            "difficult" => Ok(EaseOfSubstitution::Difficult),
            _ => Err(Error::invalid_argument(format!(
                "unknown ease of substitution {s:?} (expected easy | medium | difficult)"
            ))),
        }
    }
}

impl FromStr for Exposition {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rare" => Ok(Exposition::Rare),
            "low" => Ok(Exposition::Low),
            "medium" => Ok(Exposition::Medium),
            "high" => Ok(Exposition::High),
            _ => Err(Error::invalid_argument(format!(
                "unknown exposition {s:?} (expected rare | low | medium | high)"
            ))),
        }
    }
}

impl FromStr for QoeImpact {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "minimal" => Ok(QoeImpact::Minimal),
            "low" => Ok(QoeImpact::Low),
            "medium" => Ok(QoeImpact::Medium),
            "high" => Ok(QoeImpact::High),
            _ => Err(Error::invalid_argument(format!(
                "unknown qoe impact {s:?} (expected minimal | low | medium | high)"
            ))),
        }
    }
}

pub const ALL_EASE: [EaseOfSubstitution; 3] = [
    EaseOfSubstitution::Easy,
    EaseOfSubstitution::Medium,
    EaseOfSubstitution::Difficult,
];
pub const ALL_EXPOSITION: [Exposition; 4] = [
    Exposition::Rare,
    Exposition::Low,
    Exposition::Medium,
    Exposition::High,
];
pub const ALL_QOE: [QoeImpact; 4] = [
    QoeImpact::Minimal,
    QoeImpact::Low,
    QoeImpact::Medium,
    QoeImpact::High,
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spot_checks() {
        let grade = |e, x, q| {
            axil_level(AxilInputs {
                ease: e,
                exposition: x,
                qoe: q,
            })
        };
        assert_eq!(
            grade(
                EaseOfSubstitution::Easy,
                Exposition::Rare,
                QoeImpact::Minimal
            ),
            AxilLevel::None
        );
        assert_eq!(
            grade(
                EaseOfSubstitution::Difficult,
                Exposition::High,
                QoeImpact::High
            ),
            AxilLevel::D
        );
        assert_eq!(
            grade(
                EaseOfSubstitution::Medium,
                Exposition::Medium,
                QoeImpact::High
            ),
            AxilLevel::B
        );
        assert_eq!(
            grade(EaseOfSubstitution::Easy, Exposition::High, QoeImpact::High),
            AxilLevel::B
        );
        assert_eq!(
            grade(
                EaseOfSubstitution::Difficult,
                Exposition::Rare,
                QoeImpact::High
            ),
            AxilLevel::A
        );
    }

    /// Every cell of the table satisfies the closed form
    /// `ordinal = max(0, ease + exposition + qoe - 4)`, which was derived by
    /// hand from the full grid and catches single-cell transcription slips.
    #[test]
    fn table_matches_closed_form() {
        for e in ALL_EASE {
            for x in ALL_EXPOSITION {
                for q in ALL_QOE {
                    let got = axil_level(AxilInputs {
                        ease: e,
                        exposition: x,
                        qoe: q,
                    }) as i32;
                    let want = (e as i32 + x as i32 + q as i32 - 4).max(0);
                    assert_eq!(got, want, "cell ({e:?}, {x:?}, {q:?})");
                }
            }
        }
    }

    /// Raising any single input (others fixed) never lowers the level.
    #[test]
    fn table_is_monotone_in_each_input() {
        let grade = |e, x, q| {
            axil_level(AxilInputs {
                ease: e,
                exposition: x,
                qoe: q,
            })
        };
        for w in ALL_EASE.windows(2) {
            for x in ALL_EXPOSITION {
                for q in ALL_QOE {
                    assert!(grade(w[0], x, q) <= grade(w[1], x, q));
                }
            }
        }
        for e in ALL_EASE {
            for w in ALL_EXPOSITION.windows(2) {
                for q in ALL_QOE {
                    assert!(grade(e, w[0], q) <= grade(e, w[1], q));
                }
            }
        }
        for e in ALL_EASE {
            for x in ALL_EXPOSITION {
                for w in ALL_QOE.windows(2) {
                    assert!(grade(e, x, w[0]) <= grade(e, x, w[1]));
                }
            }
        }
    }

    #[test]
    fn level_value_default_and_custom() {
        assert_eq!(level_value(AxilLevel::None, None).unwrap(), 0.0);
        assert_eq!(level_value(AxilLevel::D, None).unwrap(), 4.0);
        let custom = [0.0, 0.5, 1.1, 2.0, 3.5];
        assert_eq!(level_value(AxilLevel::B, Some(&custom)).unwrap(), 1.1);
    }

    #[test]
    fn level_value_rejects_bad_mappings() {
        assert!(level_value(AxilLevel::A, Some(&[0.0, -1.0, 2.0, 3.0, 4.0])).is_err());
        assert!(level_value(AxilLevel::A, Some(&[0.0, 2.0, 1.0, 3.0, 4.0])).is_err());
        assert!(level_value(AxilLevel::A, Some(&[0.0, f64::NAN, 1.0, 3.0, 4.0])).is_err());
        // Non-decreasing (with plateaus) is fine.
        assert!(level_value(AxilLevel::A, Some(&[0.0, 0.0, 1.0, 1.0, 4.0])).is_ok());
    }

    #[test]
    fn level_order_and_display() {
        assert!(AxilLevel::None < AxilLevel::A);
        assert!(AxilLevel::A < AxilLevel::B);
        assert!(AxilLevel::B < AxilLevel::C);
        assert!(AxilLevel::C < AxilLevel::D);
        assert_eq!(AxilLevel::None.to_string(), "-");
        assert_eq!(AxilLevel::C.to_string(), "C");
    }

    #[test]
    fn input_parsing() {
        assert_eq!(
            "Difficult".parse::<EaseOfSubstitution>().unwrap(),
            EaseOfSubstitution::Difficult
        );
        assert_eq!("rare".parse::<Exposition>().unwrap(), Exposition::Rare);
        assert_eq!("MINIMAL".parse::<QoeImpact>().unwrap(), QoeImpact::Minimal);
        assert!("sometimes".parse::<Exposition>().is_err());
    }
}
