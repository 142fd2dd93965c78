//! The example programs and evidence files shipped in `programs/`.

/// `many :- dist_gt(~(number), 9)` with `number ~ poisson(6)`.
pub const MANY: &str = include_str!("../programs/many.dc");
/// Drawing red balls from an urn of unknown size.
pub const NOGREEN: &str = include_str!("../programs/nogreen.dc");
/// The urn with a uniform prior on the number of balls.
pub const URN: &str = include_str!("../programs/urn.dc");
/// The urn with a Poisson prior on the number of balls.
pub const URN_POISSON: &str = include_str!("../programs/urn_poisson.dc");
/// Ten draws observed as green.
pub const URN_EVIDENCE: &str = include_str!("../programs/urn.ev");

/// Evidence that none of the first `d` draws was green.
pub fn nogreen_evidence(d: u32) -> String {
    format!("+nogreen({d}).\n")
}

/// The query whose probability is 1 under any nogreen evidence.
pub const NOGREEN_QUERY: &str = "dist_eq(~(color(~(drawnball(1)))), red)";
