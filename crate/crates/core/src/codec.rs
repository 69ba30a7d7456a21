//! Conversion between symbolic property vectors and the 557-dimensional
//! encoded form, relevance resolution, and every distance used by the loss
//! and the choice maker.
//!
//! Encoded layout: dims [0,7) arrangement distribution, [7,32) independent
//! presence probabilities, then for each slot i a 21-dim block at
//! 32 + 21*i holding color(10) + size(6) + type(5) distributions.

use crate::domain::{
    ArrangementKind, ObjectSpec, PropertyVector, RelevanceMask, NUM_ARRANGEMENTS, NUM_COLORS,
    NUM_SIZES, NUM_SLOTS, NUM_TYPES,
};

/// Total encoded dimensionality: 7 + 25 + 25 * (10 + 6 + 5).
pub const ENCODED_DIM: usize = 557;

/// Offset of the presence block.
pub const PRESENT_OFFSET: usize = NUM_ARRANGEMENTS;
/// Offset of the first per-slot attribute block.
pub const SLOT_OFFSET: usize = NUM_ARRANGEMENTS + NUM_SLOTS;
/// Width of one per-slot attribute block.
pub const SLOT_BLOCK: usize = NUM_COLORS + NUM_SIZES + NUM_TYPES;

/// Probabilities are clamped to this interval before any logarithm.
pub const PROB_CLAMP: f32 = 1e-7;

/// Start of the color / size / type sub-blocks for slot `i`.
pub fn slot_color_offset(i: usize) -> usize {
    SLOT_OFFSET + SLOT_BLOCK * i
}
pub fn slot_size_offset(i: usize) -> usize {
    slot_color_offset(i) + NUM_COLORS
}
pub fn slot_type_offset(i: usize) -> usize {
    slot_size_offset(i) + NUM_SIZES
}

/// Loss weights per variable group, fixed constants tuned so each group's
/// average contribution to the distance is comparable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub arrangement: f32,
    pub present: f32,
    pub color: f32,
    pub size: f32,
    pub shape: f32,
}

impl LossWeights {
    pub const DEFAULT: LossWeights = LossWeights {
        arrangement: 1.0,
        present: 2.834_269_87,
        color: 0.852_128_36,
        size: 1.096_005,
        shape: 1.219_433_85,
    };
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights::DEFAULT
    }
}

/// 557 values in [0, 1]: a one-hot target or a model output whose categorical
/// groups each sum to 1 (attribute blocks of absent slots are all-zero in
/// one-hot targets).
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedPanel {
    pub values: Vec<f32>,
}

impl EncodedPanel {
    pub fn zeros() -> EncodedPanel {
        EncodedPanel { values: vec![0.0; ENCODED_DIM] }
    }

    pub fn from_values(values: Vec<f32>) -> EncodedPanel {
        assert_eq!(values.len(), ENCODED_DIM, "encoded panel must have {ENCODED_DIM} dims");
        EncodedPanel { values }
    }

    pub fn arrangement_probs(&self) -> &[f32] {
        &self.values[..NUM_ARRANGEMENTS]
    }

    pub fn presence_prob(&self, slot: usize) -> f32 {
        self.values[PRESENT_OFFSET + slot]
    }

    pub fn color_probs(&self, slot: usize) -> &[f32] {
        &self.values[slot_color_offset(slot)..slot_color_offset(slot) + NUM_COLORS]
    }

    pub fn size_probs(&self, slot: usize) -> &[f32] {
        &self.values[slot_size_offset(slot)..slot_size_offset(slot) + NUM_SIZES]
    }

    pub fn type_probs(&self, slot: usize) -> &[f32] {
        &self.values[slot_type_offset(slot)..slot_type_offset(slot) + NUM_TYPES]
    }

    /// Checks that every categorical group sums to one within `tol`.
    /// Attribute blocks that are entirely zero (one-hot encodings of absent
    /// slots) are accepted as well.
    pub fn groups_normalized(&self, tol: f32) -> bool {
        let sum_ok = |s: &[f32]| {
            let total: f32 = s.iter().sum();
            (total - 1.0).abs() <= tol || s.iter().all(|&v| v == 0.0)
        };
        if !sum_ok(self.arrangement_probs()) {
            return false;
        }
        (0..NUM_SLOTS).all(|i| {
            sum_ok(self.color_probs(i)) && sum_ok(self.size_probs(i)) && sum_ok(self.type_probs(i))
        })
    }
}

/// One-hot encoding of a valid property vector. Absent slots encode presence
/// probability 0 and all-zero attribute blocks.
pub fn encode(p: &PropertyVector) -> EncodedPanel {
    let mut e = EncodedPanel::zeros();
    e.values[p.arrangement.index()] = 1.0;
    for i in 0..NUM_SLOTS {
        if p.present[i] {
            e.values[PRESENT_OFFSET + i] = 1.0;
            let o = p.objects[i].expect("valid vector has objects at present slots");
            e.values[slot_color_offset(i) + o.color as usize] = 1.0;
            e.values[slot_size_offset(i) + o.size as usize] = 1.0;
            e.values[slot_type_offset(i) + o.shape as usize] = 1.0;
        }
    }
    e
}

/// Index of the maximum value; ties resolve to the lowest index.
fn argmax(values: &[f32]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Inverse of [`encode`] for arbitrary (possibly soft) encodings.
///
/// The arrangement is the argmax of the first 7 dims; presence bits use a 0.5
/// threshold restricted to the decoded arrangement's slot range; attributes
/// are per-block argmaxes. If no in-range presence exceeds 0.5 the highest
/// probability in-range slot is forced present so the result has at least one
/// object. All argmax ties resolve to the lowest index.
pub fn decode(e: &EncodedPanel) -> PropertyVector {
    let arrangement = ArrangementKind::from_index(argmax(e.arrangement_probs())).unwrap();
    let range = arrangement.slot_range();

    let mut present = [false; NUM_SLOTS];
    let mut any = false;
    for i in range.clone() {
        if e.presence_prob(i) > 0.5 {
            present[i] = true;
            any = true;
        }
    }
    if !any {
        let mut best = range.start;
        for i in range.clone() {
            if e.presence_prob(i) > e.presence_prob(best) {
                best = i;
            }
        }
        present[best] = true;
    }

    let mut objects = [None; NUM_SLOTS];
    for i in 0..NUM_SLOTS {
        if present[i] {
            objects[i] = Some(ObjectSpec::new(
                argmax(e.color_probs(i)) as u8,
                argmax(e.size_probs(i)) as u8,
                argmax(e.type_probs(i)) as u8,
            ));
        }
    }
    PropertyVector { arrangement, present, objects }
}

/// Relevance cascade: the source arrangement selects the slot set V, the
/// source presence bits narrow V to the occupied set V', and V' selects the
/// appearance properties that count.
pub fn resolve_relevance(source: &PropertyVector) -> RelevanceMask {
    let mut present_relevant = [false; NUM_SLOTS];
    let mut object_relevant = [false; NUM_SLOTS];
    for i in source.arrangement.slot_range() {
        present_relevant[i] = true;
        if source.present[i] {
            object_relevant[i] = true;
        }
    }
    RelevanceMask { present_relevant, object_relevant }
}

/// Count of mismatches between `p` and `q` on the variables `source` deems
/// relevant: the arrangement, presence over V, and object attributes over V'.
/// A slot in V' where one side lacks the object counts as 3 mismatches.
pub fn hamming(p: &PropertyVector, q: &PropertyVector, source: &PropertyVector) -> u32 {
    let mask = resolve_relevance(source);
    let mut dist = u32::from(p.arrangement != q.arrangement);
    for i in 0..NUM_SLOTS {
        if mask.present_relevant[i] && p.present[i] != q.present[i] {
            dist += 1;
        }
        if mask.object_relevant[i] {
            dist += match (p.objects[i], q.objects[i]) {
                (Some(a), Some(b)) => {
                    u32::from(a.color != b.color)
                        + u32::from(a.size != b.size)
                        + u32::from(a.shape != b.shape)
                }
                (None, None) => 0,
                _ => 3,
            };
        }
    }
    dist
}

fn clamp_prob(p: f32) -> f32 {
    p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
}

/// -sum target_k ln pred_k over one categorical block.
fn categorical_ce(pred: &[f32], target: &[f32]) -> f32 {
    pred.iter()
        .zip(target)
        .filter(|&(_, &t)| t > 0.0)
        .map(|(&p, &t)| -t * clamp_prob(p).ln())
        .sum()
}

/// Binary cross-entropy of one presence probability against a soft target.
fn binary_ce(pred: f32, target: f32) -> f32 {
    let p = clamp_prob(pred);
    -(target * p.ln() + (1.0 - target) * (1.0 - p).ln())
}

/// Weighted cross-entropy of `pred` against a reference encoding, restricted
/// to the groups `mask` marks relevant. The reference may be one-hot or soft.
fn weighted_ce_masked(
    pred: &EncodedPanel,
    reference: &EncodedPanel,
    mask: &RelevanceMask,
    w: &LossWeights,
) -> f32 {
    let mut loss = w.arrangement * categorical_ce(pred.arrangement_probs(), reference.arrangement_probs());
    for i in 0..NUM_SLOTS {
        if mask.present_relevant[i] {
            loss += w.present * binary_ce(pred.presence_prob(i), reference.presence_prob(i));
        }
        if mask.object_relevant[i] {
            loss += w.color * categorical_ce(pred.color_probs(i), reference.color_probs(i));
            loss += w.size * categorical_ce(pred.size_probs(i), reference.size_probs(i));
            loss += w.shape * categorical_ce(pred.type_probs(i), reference.type_probs(i));
        }
    }
    loss
}

/// Training / metric loss: weighted cross-entropy of a predicted encoding
/// against the one-hot encoding of `target`, with relevance taken from
/// `source` (in training the source is the target itself).
pub fn weighted_cross_entropy(
    pred: &EncodedPanel,
    target: &PropertyVector,
    source: &PropertyVector,
) -> f32 {
    weighted_ce_masked(pred, &encode(target), &resolve_relevance(source), &LossWeights::DEFAULT)
}

/// Per-dimension loss weights for the encoded layout: group weight where the
/// dimension is relevant under `source`, zero elsewhere. The categorical
/// flag marks blocks handled with categorical rather than binary
/// cross-entropy. Used by the tensor-engine loss op so its semantics match
/// [`weighted_cross_entropy`] exactly.
pub fn per_dim_weights(source: &PropertyVector, w: &LossWeights) -> Vec<f32> {
    let mask = resolve_relevance(source);
    let mut out = vec![0.0f32; ENCODED_DIM];
    for d in 0..NUM_ARRANGEMENTS {
        out[d] = w.arrangement;
    }
    for i in 0..NUM_SLOTS {
        if mask.present_relevant[i] {
            out[PRESENT_OFFSET + i] = w.present;
        }
        if mask.object_relevant[i] {
            out[slot_color_offset(i)..slot_size_offset(i)].fill(w.color);
            out[slot_size_offset(i)..slot_type_offset(i)].fill(w.size);
            out[slot_type_offset(i)..slot_type_offset(i) + NUM_TYPES].fill(w.shape);
        }
    }
    out
}

/// Which distance the choice maker uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistanceKind {
    /// Weighted cross-entropy on raw distributions; the classification side
    /// provides both the relevance (via its decoding) and the soft reference
    /// distributions.
    Prob,
    /// Hamming distance between the decoded vectors, relevance from the
    /// decoded classification.
    Hamming,
}

/// Distance between a prediction and a classification. The classification is
/// the source of relevance in both kinds.
pub fn dcm_distance(pred: &EncodedPanel, cls: &EncodedPanel, kind: DistanceKind) -> f32 {
    let cls_decoded = decode(cls);
    match kind {
        DistanceKind::Prob => {
            let mask = resolve_relevance(&cls_decoded);
            weighted_ce_masked(pred, cls, &mask, &LossWeights::DEFAULT)
        }
        DistanceKind::Hamming => {
            let pred_decoded = decode(pred);
            hamming(&pred_decoded, &cls_decoded, &cls_decoded) as f32
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::COLOR_VALUES;
    use rand::Rng;

    /// Random valid property vector for property-style tests.
    pub fn random_vector(rng: &mut impl Rng) -> PropertyVector {
        let arrangement = ArrangementKind::ALL[rng.gen_range(0..NUM_ARRANGEMENTS)];
        let range = arrangement.slot_range();
        let count = rng.gen_range(1..=range.len());
        let mut slots: Vec<usize> = range.collect();
        // Fisher-Yates prefix shuffle to pick `count` distinct slots.
        for i in 0..count {
            let j = rng.gen_range(i..slots.len());
            slots.swap(i, j);
        }
        let objects: Vec<(usize, ObjectSpec)> = slots[..count]
            .iter()
            .map(|&s| {
                (
                    s,
                    ObjectSpec::new(
                        rng.gen_range(0..NUM_COLORS) as u8,
                        rng.gen_range(0..NUM_SIZES) as u8,
                        rng.gen_range(0..NUM_TYPES) as u8,
                    ),
                )
            })
            .collect();
        PropertyVector::from_objects(arrangement, &objects)
    }

    fn center_single(color: u8, size: u8, shape: u8) -> PropertyVector {
        PropertyVector::from_objects(
            ArrangementKind::CenterSingle,
            &[(0, ObjectSpec::new(color, size, shape))],
        )
    }

    #[test]
    fn encode_center_single_arrangement_is_one_hot() {
        let e = encode(&center_single(0, 0, 0));
        assert_eq!(e.arrangement_probs(), &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(e.values.len(), ENCODED_DIM);
    }

    #[test]
    fn encoding_offsets_form_a_bijection_over_557_dims() {
        // Every symbolic variable owns a disjoint dim group; together the
        // groups cover [0, 557) exactly once.
        let mut covered = vec![0u32; ENCODED_DIM];
        for d in 0..NUM_ARRANGEMENTS {
            covered[d] += 1;
        }
        for i in 0..NUM_SLOTS {
            covered[PRESENT_OFFSET + i] += 1;
            for d in slot_color_offset(i)..slot_color_offset(i) + SLOT_BLOCK {
                covered[d] += 1;
            }
        }
        assert!(covered.iter().all(|&c| c == 1));
    }

    #[test]
    fn round_trip_10k_random_vectors() {
        let mut rng = crate::rng::stream(0xC0DEC, 0);
        for _ in 0..10_000 {
            let p = random_vector(&mut rng);
            assert_eq!(decode(&encode(&p)), p);
        }
    }

    #[test]
    fn decode_uniform_arrangement_breaks_tie_low() {
        let mut e = EncodedPanel::zeros();
        for d in 0..NUM_ARRANGEMENTS {
            e.values[d] = 1.0 / NUM_ARRANGEMENTS as f32;
        }
        // No presence above 0.5 either: slot 0 is forced present.
        let p = decode(&e);
        assert_eq!(p.arrangement, ArrangementKind::CenterSingle);
        assert!(p.present[0]);
        assert_eq!(p.object_count(), 1);
    }

    #[test]
    fn noisy_decode_matches_per_group_maximizer_oracle() {
        // Oracle: independent per-group argmax over the same noisy encoding.
        let mut rng = crate::rng::stream(0xC0DEC, 1);
        for _ in 0..1_000 {
            let p = random_vector(&mut rng);
            let mut e = encode(&p);
            for v in e.values.iter_mut() {
                *v += rng.gen_range(0.0..0.3f32);
            }
            // Renormalize categorical groups; clamp presence to [0, 1].
            let norm = |s: &mut [f32]| {
                let total: f32 = s.iter().sum();
                for v in s.iter_mut() {
                    *v /= total;
                }
            };
            norm(&mut e.values[..NUM_ARRANGEMENTS]);
            for i in 0..NUM_SLOTS {
                e.values[PRESENT_OFFSET + i] = e.values[PRESENT_OFFSET + i].min(1.0);
                norm(&mut e.values[slot_color_offset(i)..slot_size_offset(i)]);
                norm(&mut e.values[slot_size_offset(i)..slot_type_offset(i)]);
                norm(&mut e.values[slot_type_offset(i)..slot_type_offset(i) + NUM_TYPES]);
            }

            let decoded = decode(&e);

            // Independent oracle path.
            let arr_oracle = (0..NUM_ARRANGEMENTS)
                .max_by(|&a, &b| e.values[a].partial_cmp(&e.values[b]).unwrap().then(b.cmp(&a)))
                .unwrap();
            assert_eq!(decoded.arrangement.index(), arr_oracle);
            for i in decoded.arrangement.slot_range() {
                assert_eq!(decoded.present[i], e.presence_prob(i) > 0.5);
                if decoded.present[i] {
                    let o = decoded.objects[i].unwrap();
                    let pick = |s: &[f32]| {
                        (0..s.len())
                            .max_by(|&a, &b| s[a].partial_cmp(&s[b]).unwrap().then(b.cmp(&a)))
                            .unwrap() as u8
                    };
                    assert_eq!(o.color, pick(e.color_probs(i)));
                    assert_eq!(o.size, pick(e.size_probs(i)));
                    assert_eq!(o.shape, pick(e.type_probs(i)));
                }
            }
        }
    }

    #[test]
    fn relevance_anchors() {
        let single = center_single(0, 0, 0);
        let m = resolve_relevance(&single);
        assert_eq!(m.relevant_count(), 5);
        assert!(m.present_relevant[0] && m.object_relevant[0]);
        assert!(!m.present_relevant[1]);

        let pair = PropertyVector::from_objects(
            ArrangementKind::DistributeFour,
            &[(1, ObjectSpec::new(0, 0, 0)), (3, ObjectSpec::new(0, 0, 0))],
        );
        let m = resolve_relevance(&pair);
        assert_eq!(m.present_relevant.iter().filter(|&&b| b).count(), 4);
        assert_eq!(m.object_relevant.iter().filter(|&&b| b).count(), 2);
        assert_eq!(m.relevant_count(), 11);
    }

    #[test]
    fn relevance_matches_brute_force_cascade() {
        // Oracle: re-derive the three-step cascade directly.
        let mut rng = crate::rng::stream(0xC0DEC, 2);
        for _ in 0..1_000 {
            let p = random_vector(&mut rng);
            let m = resolve_relevance(&p);
            for i in 0..NUM_SLOTS {
                let in_v = p.arrangement.slot_range().contains(&i);
                let in_vp = in_v && p.present[i];
                assert_eq!(m.present_relevant[i], in_v);
                assert_eq!(m.object_relevant[i], in_vp);
            }
            assert_eq!(m.relevant_count(), p.relevant_count());
        }
    }

    #[test]
    fn hamming_identity_and_worst_case() {
        let mut rng = crate::rng::stream(0xC0DEC, 3);
        let p = random_vector(&mut rng);
        assert_eq!(hamming(&p, &p, &p), 0);

        let full: Vec<(usize, ObjectSpec)> =
            (5..14).map(|s| (s, ObjectSpec::new(1, 2, 3))).collect();
        let truth = PropertyVector::from_objects(ArrangementKind::DistributeNine, &full);
        let pred = center_single(0, 0, 0);
        assert_eq!(hamming(&pred, &truth, &truth), 37);
    }

    #[test]
    fn hamming_is_symmetric_for_fixed_source() {
        let mut rng = crate::rng::stream(0xC0DEC, 4);
        for _ in 0..1_000 {
            let p = random_vector(&mut rng);
            let q = random_vector(&mut rng);
            let s = random_vector(&mut rng);
            assert_eq!(hamming(&p, &q, &s), hamming(&q, &p, &s));
        }
    }

    #[test]
    fn perfect_prediction_has_clamp_floor_loss() {
        let mut rng = crate::rng::stream(0xC0DEC, 5);
        for _ in 0..100 {
            let p = random_vector(&mut rng);
            let loss = weighted_cross_entropy(&encode(&p), &p, &p);
            assert!(loss >= 0.0 && loss < 1e-4, "loss {loss}");
        }
    }

    #[test]
    fn uniform_arrangement_block_costs_ln7() {
        let target = center_single(2, 3, 1);
        let mut e = encode(&target);
        for d in 0..NUM_ARRANGEMENTS {
            e.values[d] = 1.0 / NUM_ARRANGEMENTS as f32;
        }
        let loss = weighted_cross_entropy(&e, &target, &target);
        let ln7 = (NUM_ARRANGEMENTS as f32).ln();
        assert!((loss - ln7).abs() < 1e-4, "loss {loss} vs ln7 {ln7}");
    }

    #[test]
    fn loss_positive_whenever_a_relevant_argmax_differs() {
        let mut rng = crate::rng::stream(0xC0DEC, 6);
        for _ in 0..1_000 {
            let target = random_vector(&mut rng);
            let other = random_vector(&mut rng);
            let loss = weighted_cross_entropy(&encode(&other), &target, &target);
            if other != target {
                // Any relevant difference forces a -ln(clamp(0)) term.
                if hamming(&other, &target, &target) > 0 {
                    assert!(loss > 1.0, "loss {loss}");
                }
            }
        }
    }

    #[test]
    fn irrelevant_dims_do_not_move_loss_or_distance() {
        let mut rng = crate::rng::stream(0xC0DEC, 7);
        for _ in 0..200 {
            let target = random_vector(&mut rng);
            let mut pred = encode(&target);
            let base_loss = weighted_cross_entropy(&pred, &target, &target);
            let base_dist = dcm_distance(&pred, &encode(&target), DistanceKind::Prob);
            let weights = per_dim_weights(&target, &LossWeights::DEFAULT);
            // Perturb every irrelevant dim.
            for d in 0..ENCODED_DIM {
                if weights[d] == 0.0 {
                    pred.values[d] = rng.gen_range(0.0..1.0);
                }
            }
            assert_eq!(weighted_cross_entropy(&pred, &target, &target), base_loss);
            assert_eq!(dcm_distance(&pred, &encode(&target), DistanceKind::Prob), base_dist);
        }
    }

    #[test]
    fn dcm_distance_identity() {
        let p = center_single(4, 2, 3);
        let e = encode(&p);
        assert_eq!(dcm_distance(&e, &e, DistanceKind::Hamming), 0.0);
        let prob = dcm_distance(&e, &e, DistanceKind::Prob);
        assert!(prob >= 0.0 && prob < 1e-4, "prob distance {prob}");
    }

    #[test]
    fn prob_distance_minimized_at_relevance_matching_candidate() {
        // Oracle: exhaustive comparison across a synthetic answer set.
        let mut rng = crate::rng::stream(0xC0DEC, 8);
        for _ in 0..500 {
            let truth = random_vector(&mut rng);
            let pred = encode(&truth);
            let mut candidates = vec![truth.clone()];
            for _ in 0..7 {
                let mut c = truth.clone();
                // Perturb one attribute of one present object.
                let slots = c.present_slots();
                let slot = slots[rng.gen_range(0..slots.len())];
                let o = c.objects[slot].as_mut().unwrap();
                match rng.gen_range(0..3) {
                    0 => o.color = (o.color + 1 + rng.gen_range(0..9) as u8) % 10,
                    1 => o.size = (o.size + 1 + rng.gen_range(0..5) as u8) % 6,
                    _ => o.shape = (o.shape + 1 + rng.gen_range(0..4) as u8) % 5,
                }
                candidates.push(c);
            }
            let dists: Vec<f32> = candidates
                .iter()
                .map(|c| dcm_distance(&pred, &encode(c), DistanceKind::Prob))
                .collect();
            let min_idx = (0..dists.len())
                .min_by(|&a, &b| dists[a].partial_cmp(&dists[b]).unwrap())
                .unwrap();
            assert_eq!(min_idx, 0, "dists {dists:?}");
        }
    }

    #[test]
    fn hamming_kind_ties_exist_but_prob_ties_do_not() {
        // Hamming ties are easy to craft.
        let a = center_single(1, 1, 1);
        let b = center_single(2, 1, 1);
        let c = center_single(1, 2, 1);
        let pred = encode(&a);
        let d_b = dcm_distance(&pred, &encode(&b), DistanceKind::Hamming);
        let d_c = dcm_distance(&pred, &encode(&c), DistanceKind::Hamming);
        assert_eq!(d_b, d_c);

        // Prob distances over random soft pairs: no exact ties observed.
        let mut rng = crate::rng::stream(0xC0DEC, 9);
        let mut ties = 0;
        for _ in 0..10_000 {
            let truth = random_vector(&mut rng);
            let mut pred = encode(&truth);
            for v in pred.values.iter_mut() {
                *v = (*v + rng.gen_range(0.0..0.3f32)).min(1.0);
            }
            let c1 = random_vector(&mut rng);
            let c2 = random_vector(&mut rng);
            if c1 == c2 {
                continue;
            }
            let d1 = dcm_distance(&pred, &encode(&c1), DistanceKind::Prob);
            let d2 = dcm_distance(&pred, &encode(&c2), DistanceKind::Prob);
            if d1 == d2 {
                ties += 1;
            }
        }
        assert_eq!(ties, 0);
    }

    #[test]
    fn color_table_sanity() {
        assert_eq!(COLOR_VALUES[0], 255);
        assert_eq!(COLOR_VALUES[9], 0);
    }
}
