use crate::error::{KakeyaError, Result};

/// Environment variable that overrides the default item cap.
pub const BUDGET_ENV: &str = "KAKEYA_BUDGET";

const DEFAULT_ITEMS: u64 = 50_000_000;

/// Cap on materialized items: tree nodes, tubes, enumerated labelings,
/// sweep events.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    pub items: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            items: DEFAULT_ITEMS,
        }
    }
}

impl Budget {
    pub fn new(items: u64) -> Budget {
        Budget { items }
    }

    /// Reads `KAKEYA_BUDGET`, falling back to the default when unset.
    pub fn from_env() -> Result<Budget> {
        match std::env::var(BUDGET_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map(Budget::new)
                .map_err(|_| KakeyaError::Parse(format!("{BUDGET_ENV}={v:?} is not an integer"))),
            Err(_) => Ok(Budget::default()),
        }
    }

    pub fn check(&self, what: &'static str, needed: u128) -> Result<()> {
        self.check_with_hint(what, needed, "")
    }

    pub fn check_with_hint(&self, what: &'static str, needed: u128, hint: &'static str) -> Result<()> {
        if needed > self.items as u128 {
            Err(KakeyaError::Budget {
                what,
                needed,
                budget: self.items,
                hint,
            })
        } else {
            Ok(())
        }
    }
}
