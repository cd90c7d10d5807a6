//! Size bounds for exhaustive procedures.

/// Largest `n` each exhaustive procedure accepts.
///
/// `PANDORA_MAX_N`, when set to an integer, replaces every bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub class_check: usize,
    pub gross_substitutes: usize,
    pub adaptive: usize,
    pub fixed_order: usize,
    pub impulsive: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            class_check: 14,
            gross_substitutes: 10,
            adaptive: 14,
            fixed_order: 8,
            impulsive: 8,
        }
    }
}

impl Limits {
    pub const ENV_VAR: &'static str = "PANDORA_MAX_N";

    pub fn uniform(n: usize) -> Self {
        Limits {
            class_check: n,
            gross_substitutes: n,
            adaptive: n,
            fixed_order: n,
            impulsive: n,
        }
    }

    pub fn from_env() -> Self {
        match std::env::var(Self::ENV_VAR).ok().and_then(|v| v.trim().parse().ok()) {
            Some(n) => Limits::uniform(n),
            None => Limits::default(),
        }
    }
}
