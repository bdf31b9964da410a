use std::fmt;

use serde::{Deserialize, Serialize};

macro_rules! id_type {
    ($(#[$meta:meta])* $name:ident($inner:ty), $prefix:literal) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub $inner);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!($prefix, "{}"), self.0)
            }
        }
    };
}

id_type!(
    /// Reviewer identity. Ordering is used for every deterministic tie-break.
    ///
    /// Ledgers index dense tables by the raw value, so identifiers are expected
    /// to be small (see [`crate::ledger::MAX_REVIEWER_ID`]).
    ReviewerId(u32),
    "r"
);
id_type!(
    /// One of the areas of expertise fixed when an engine is created.
    AreaId(u32),
    "area"
);
id_type!(AssetId(u64), "asset");
id_type!(
    /// Sequential identifier of one asset life cycle inside an engine.
    RoundId(u64),
    "round"
);
