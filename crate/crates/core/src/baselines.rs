//! Comparison and ablation variants built from the same learner.

use std::fmt;
use std::str::FromStr;

use crate::error::{OomdError, Result};
use crate::learner::{Learner, LearnerConfig};
use crate::optimism::{EmaOptimism, Optimism, ZeroOptimism};
use crate::ExpertId;

/// Largest learning rate kept by the single-layer MsMwC grid.
pub const MSMWC_MAX_ETA: f64 = 1.0 / 32.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    Proposed,
    Msmwc,
    Unsafeguarded,
    ProposedNoOptimism,
    MsmwcNoOptimism,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::Proposed,
        Variant::Msmwc,
        Variant::Unsafeguarded,
        Variant::ProposedNoOptimism,
        Variant::MsmwcNoOptimism,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Proposed => "proposed",
            Variant::Msmwc => "msmwc",
            Variant::Unsafeguarded => "unsafeguarded",
            Variant::ProposedNoOptimism => "proposed_no_optimism",
            Variant::MsmwcNoOptimism => "msmwc_no_optimism",
        }
    }

    pub fn uses_optimism(self) -> bool {
        matches!(self, Variant::Proposed | Variant::Msmwc | Variant::Unsafeguarded)
    }

    pub fn is_msmwc(self) -> bool {
        matches!(self, Variant::Msmwc | Variant::MsmwcNoOptimism)
    }

    /// Applies the variant's restrictions on top of `base`.
    pub fn configure(self, base: &LearnerConfig) -> LearnerConfig {
        let mut cfg = base.clone();
        cfg.optimism_enabled = self.uses_optimism();
        match self {
            Variant::Proposed | Variant::ProposedNoOptimism => {}
            Variant::Msmwc | Variant::MsmwcNoOptimism => {
                cfg.max_eta = Some(MSMWC_MAX_ETA);
                cfg.safeguard_enabled = false;
            }
            Variant::Unsafeguarded => cfg.safeguard_enabled = false,
        }
        cfg
    }

    pub fn optimism(self) -> Box<dyn Optimism> {
        if self.uses_optimism() {
            Box::new(EmaOptimism::default())
        } else {
            Box::new(ZeroOptimism)
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = OomdError;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s.trim())
            .ok_or_else(|| OomdError::Config(format!("unknown variant `{s}`")))
    }
}

/// A variant together with the configuration it modifies.
#[derive(Debug, Clone, PartialEq)]
pub struct VariantSpec {
    pub variant: Variant,
    pub base: LearnerConfig,
}

impl VariantSpec {
    pub fn new(variant: Variant, base: LearnerConfig) -> Self {
        Self { variant, base }
    }

    pub fn config(&self) -> LearnerConfig {
        self.variant.configure(&self.base)
    }
}

pub fn make_variant(spec: &VariantSpec, experts: &[ExpertId]) -> Result<Learner> {
    if spec.base.horizon < 2 {
        return Err(OomdError::HorizonTooShort(spec.base.horizon));
    }
    Learner::new(spec.config(), experts)
}
