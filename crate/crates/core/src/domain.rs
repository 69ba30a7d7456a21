//! Symbolic domain model: spatial arrangements, objects, panel property
//! vectors, relevance masks, and whole puzzle tasks. All types are immutable
//! values after construction and safe to share across workers.

use serde::{Deserialize, Serialize};

/// Number of global object slots across all arrangements.
pub const NUM_SLOTS: usize = 25;
/// Number of spatial arrangements.
pub const NUM_ARRANGEMENTS: usize = 7;
/// Distinct color values.
pub const NUM_COLORS: usize = 10;
/// Distinct size values.
pub const NUM_SIZES: usize = 6;
/// Distinct shape types, ordered by edge count (triangle first, circle last).
pub const NUM_TYPES: usize = 5;

/// Fill intensities indexed by color. Index 0 is white, index 9 black.
pub const COLOR_VALUES: [u8; NUM_COLORS] = [255, 224, 196, 168, 140, 112, 84, 56, 28, 0];
/// Size scale factors indexed by size; multiplied by the slot half-cell to get
/// the circumradius.
pub const SIZE_VALUES: [f32; NUM_SIZES] = [0.4, 0.5, 0.6, 0.7, 0.8, 0.9];
/// Shape names indexed by type, ordered by edge count.
pub const TYPE_NAMES: [&str; NUM_TYPES] = ["triangle", "square", "pentagon", "hexagon", "circle"];

/// One of the seven spatial arrangements a panel can use. Each owns a
/// contiguous run of the 25 global object slots; the runs are disjoint and
/// cover [0, 25) in the declaration order below.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArrangementKind {
    CenterSingle,
    DistributeFour,
    DistributeNine,
    InCenterSingleOutCenterSingle,
    InDistributeFourOutCenterSingle,
    LeftCenterSingleRightCenterSingle,
    UpCenterSingleDownCenterSingle,
}

impl ArrangementKind {
    pub const ALL: [ArrangementKind; NUM_ARRANGEMENTS] = [
        ArrangementKind::CenterSingle,
        ArrangementKind::DistributeFour,
        ArrangementKind::DistributeNine,
        ArrangementKind::InCenterSingleOutCenterSingle,
        ArrangementKind::InDistributeFourOutCenterSingle,
        ArrangementKind::LeftCenterSingleRightCenterSingle,
        ArrangementKind::UpCenterSingleDownCenterSingle,
    ];

    pub fn index(self) -> usize {
        Self::ALL.iter().position(|&k| k == self).unwrap()
    }

    pub fn from_index(i: usize) -> Option<ArrangementKind> {
        Self::ALL.get(i).copied()
    }

    /// Global slot interval owned by this arrangement. Composite arrangements
    /// order inner slots before outer, left before right, up before down;
    /// grid slots are row-major.
    pub fn slot_range(self) -> std::ops::Range<usize> {
        match self {
            ArrangementKind::CenterSingle => 0..1,
            ArrangementKind::DistributeFour => 1..5,
            ArrangementKind::DistributeNine => 5..14,
            ArrangementKind::InCenterSingleOutCenterSingle => 14..16,
            ArrangementKind::InDistributeFourOutCenterSingle => 16..21,
            ArrangementKind::LeftCenterSingleRightCenterSingle => 21..23,
            ArrangementKind::UpCenterSingleDownCenterSingle => 23..25,
        }
    }

    /// Maximum number of objects the arrangement can hold.
    pub fn max_objects(self) -> usize {
        self.slot_range().len()
    }

    pub fn name(self) -> &'static str {
        match self {
            ArrangementKind::CenterSingle => "center-single",
            ArrangementKind::DistributeFour => "distribute-four",
            ArrangementKind::DistributeNine => "distribute-nine",
            ArrangementKind::InCenterSingleOutCenterSingle => "in-center-single-out-center-single",
            ArrangementKind::InDistributeFourOutCenterSingle => {
                "in-distribute-four-out-center-single"
            }
            ArrangementKind::LeftCenterSingleRightCenterSingle => {
                "left-center-single-right-center-single"
            }
            ArrangementKind::UpCenterSingleDownCenterSingle => {
                "up-center-single-down-center-single"
            }
        }
    }
}

/// Appearance of one object: indices into the color, size, and type tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ObjectSpec {
    pub color: u8,
    pub size: u8,
    pub shape: u8,
}

impl ObjectSpec {
    pub fn new(color: u8, size: u8, shape: u8) -> Self {
        ObjectSpec { color, size, shape }
    }

    pub fn in_range(&self) -> bool {
        (self.color as usize) < NUM_COLORS
            && (self.size as usize) < NUM_SIZES
            && (self.shape as usize) < NUM_TYPES
    }
}

/// Symbolic description of one panel: an arrangement, 25 presence bits, and
/// per-slot object appearances. 1 + 25 + 75 = 101 variables in total.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PropertyVector {
    pub arrangement: ArrangementKind,
    pub present: [bool; NUM_SLOTS],
    pub objects: [Option<ObjectSpec>; NUM_SLOTS],
}

impl PropertyVector {
    /// Panel with the given arrangement and objects placed at `slots`, which
    /// must lie inside the arrangement's slot range.
    pub fn from_objects(
        arrangement: ArrangementKind,
        objects: &[(usize, ObjectSpec)],
    ) -> PropertyVector {
        let mut present = [false; NUM_SLOTS];
        let mut objs = [None; NUM_SLOTS];
        for &(slot, spec) in objects {
            present[slot] = true;
            objs[slot] = Some(spec);
        }
        PropertyVector { arrangement, present, objects: objs }
    }

    /// Slots holding an object, in ascending order.
    pub fn present_slots(&self) -> Vec<usize> {
        (0..NUM_SLOTS).filter(|&i| self.present[i]).collect()
    }

    pub fn object_count(&self) -> usize {
        self.present.iter().filter(|&&p| p).count()
    }

    /// Number of relevant variables: 1 for the arrangement, one per slot in
    /// the arrangement's range, and 3 per present object. Ranges over [5, 37].
    pub fn relevant_count(&self) -> usize {
        1 + self.arrangement.max_objects() + 3 * self.object_count()
    }

    /// Collects every violated invariant. Violations are data, not failures;
    /// a well-formed vector yields an empty list.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let range = self.arrangement.slot_range();
        for i in 0..NUM_SLOTS {
            if self.present[i] && !range.contains(&i) {
                out.push(Violation::SlotOutsideArrangement { slot: i });
            }
            if self.present[i] {
                match self.objects[i] {
                    None => out.push(Violation::MissingObjectSpec { slot: i }),
                    Some(o) if !o.in_range() => {
                        out.push(Violation::AttributeOutOfRange { slot: i })
                    }
                    Some(_) => {}
                }
            }
        }
        if self.object_count() == 0 {
            out.push(Violation::NoObjects);
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }
}

/// A single broken invariant reported by [`PropertyVector::validate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Violation {
    /// A presence bit is set outside the arrangement's slot range.
    SlotOutsideArrangement { slot: usize },
    /// No slot is present; every arrangement holds at least one object.
    NoObjects,
    /// A present slot has no object specification.
    MissingObjectSpec { slot: usize },
    /// An object attribute index is outside its value table.
    AttributeOutOfRange { slot: usize },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::SlotOutsideArrangement { slot } => {
                write!(f, "slot {slot} is outside the arrangement's slot range")
            }
            Violation::NoObjects => write!(f, "panel contains no objects"),
            Violation::MissingObjectSpec { slot } => {
                write!(f, "present slot {slot} has no object spec")
            }
            Violation::AttributeOutOfRange { slot } => {
                write!(f, "object at slot {slot} has an out-of-range attribute")
            }
        }
    }
}

/// Which variables of a panel count when comparing against a source vector:
/// the arrangement always does, `present_relevant` marks the source
/// arrangement's slot range (the set V), and `object_relevant` marks the
/// source's occupied slots (the set V').
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RelevanceMask {
    pub present_relevant: [bool; NUM_SLOTS],
    pub object_relevant: [bool; NUM_SLOTS],
}

impl RelevanceMask {
    /// 1 + |V| + 3 |V'|.
    pub fn relevant_count(&self) -> usize {
        let v = self.present_relevant.iter().filter(|&&b| b).count();
        let vp = self.object_relevant.iter().filter(|&&b| b).count();
        1 + v + 3 * vp
    }
}

/// Whether the answer set leaks the correct panel through attribute
/// marginals (biased) or is constructed so no single attribute is
/// modal-decisive (unbiased).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BiasMode {
    Biased,
    Unbiased,
}

/// A complete puzzle: 8 context panels (row-major positions 0..7), the true
/// completion of the ninth cell, 8 candidate answers, and the rule tags each
/// grid row obeys. Rasters are regenerated on demand from the symbols, so a
/// task stores none.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RpmTask {
    pub context: [PropertyVector; 8],
    pub query_truth: PropertyVector,
    pub answers: Vec<PropertyVector>,
    pub correct_index: usize,
    pub rule_meta: Vec<crate::taskgen::RuleSpec>,
    pub bias_mode: BiasMode,
    /// Generation coordinates, recorded for reproducibility.
    pub seed_index: u64,
}

impl RpmTask {
    /// All nine grid panels in row-major order, the query last.
    pub fn grid_panels(&self) -> [&PropertyVector; 9] {
        [
            &self.context[0],
            &self.context[1],
            &self.context[2],
            &self.context[3],
            &self.context[4],
            &self.context[5],
            &self.context[6],
            &self.context[7],
            &self.query_truth,
        ]
    }

    /// The three grid rows, each completed with the query truth where needed.
    pub fn rows(&self) -> [[&PropertyVector; 3]; 3] {
        let g = self.grid_panels();
        [[g[0], g[1], g[2]], [g[3], g[4], g[5]], [g[6], g[7], g[8]]]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slot_ranges_cover_all_slots_in_order() {
        let mut next = 0;
        for kind in ArrangementKind::ALL {
            let r = kind.slot_range();
            assert_eq!(r.start, next, "{} starts at {}", kind.name(), r.start);
            next = r.end;
        }
        assert_eq!(next, NUM_SLOTS);
    }

    #[test]
    fn capacities_match_declared_arrangements() {
        let expect = [1, 4, 9, 2, 5, 2, 2];
        for (kind, want) in ArrangementKind::ALL.iter().zip(expect) {
            assert_eq!(kind.max_objects(), want, "{}", kind.name());
        }
    }

    #[test]
    fn relevant_count_anchors() {
        let single = PropertyVector::from_objects(
            ArrangementKind::CenterSingle,
            &[(0, ObjectSpec::new(0, 0, 0))],
        );
        assert_eq!(single.relevant_count(), 5);

        let full: Vec<(usize, ObjectSpec)> =
            (5..14).map(|s| (s, ObjectSpec::new(1, 2, 3))).collect();
        let nine = PropertyVector::from_objects(ArrangementKind::DistributeNine, &full);
        assert_eq!(nine.relevant_count(), 37);

        let pair = PropertyVector::from_objects(
            ArrangementKind::DistributeFour,
            &[(1, ObjectSpec::new(0, 0, 0)), (3, ObjectSpec::new(1, 1, 1))],
        );
        assert_eq!(pair.relevant_count(), 11);
    }

    #[test]
    fn validate_flags_out_of_range_slot() {
        let p = PropertyVector::from_objects(
            ArrangementKind::DistributeFour,
            &[(0, ObjectSpec::new(0, 0, 0)), (1, ObjectSpec::new(0, 0, 0))],
        );
        assert!(p
            .validate()
            .contains(&Violation::SlotOutsideArrangement { slot: 0 }));
    }

    #[test]
    fn validate_flags_empty_panel() {
        let p = PropertyVector {
            arrangement: ArrangementKind::CenterSingle,
            present: [false; NUM_SLOTS],
            objects: [None; NUM_SLOTS],
        };
        assert_eq!(p.validate(), vec![Violation::NoObjects]);
    }

    #[test]
    fn validate_flags_missing_object_spec() {
        let mut p = PropertyVector::from_objects(
            ArrangementKind::CenterSingle,
            &[(0, ObjectSpec::new(0, 0, 0))],
        );
        p.objects[0] = None;
        assert_eq!(p.validate(), vec![Violation::MissingObjectSpec { slot: 0 }]);
    }

    #[test]
    fn validate_accepts_well_formed_panel() {
        let p = PropertyVector::from_objects(
            ArrangementKind::CenterSingle,
            &[(0, ObjectSpec::new(9, 5, 4))],
        );
        assert!(p.is_valid());
    }

    #[test]
    fn attribute_range_is_enforced() {
        let p = PropertyVector::from_objects(
            ArrangementKind::CenterSingle,
            &[(0, ObjectSpec::new(10, 0, 0))],
        );
        assert_eq!(p.validate(), vec![Violation::AttributeOutOfRange { slot: 0 }]);
    }
}
