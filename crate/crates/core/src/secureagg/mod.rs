//! Simulated multi-party secure aggregation.
//!
//! Clients submit vectors over the ring of `u64` words (addition modulo
//! 2^64). Each unordered client pair shares a mask stream derived from the
//! round seed; client `i` adds the pair mask for every `j > i` and subtracts
//! it for every `j < i`, so the masks cancel in the sum and each individual
//! message looks uniform. When clients drop out before aggregation, the
//! surviving pair seeds are replayed to strip the orphaned masks, exactly as
//! the seed-disclosure step of a deployed protocol would.
//!
//! Mask streams come from ChaCha20 seeded per pair via SHA-256, so
//! transcripts are bit-reproducible across platforms.

use crate::seeding::derive_seed;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::sync::Mutex;

#[derive(Debug, thiserror::Error)]
pub enum AggError {
    #[error("duplicate client id {0} in round setup")]
    DuplicateId(usize),
    #[error("round needs at least one participant")]
    NoParticipants,
    #[error("client {0} is not a participant of this round")]
    NotParticipant(usize),
    #[error("client {0} already submitted")]
    DoubleSubmission(usize),
    #[error("payload length {got} does not match round length {expected}")]
    WrongLength { got: usize, expected: usize },
    #[error("round already aggregated")]
    AlreadyAggregated,
    #[error("dropout must be declared before aggregation")]
    LateDropout,
    #[error("cannot drop every client of a round")]
    AllDropped,
    #[error("protocol stall: missing submissions from {0:?} without declared dropout")]
    Stalled(Vec<usize>),
    #[error("fixed-point value {0} out of representable range")]
    FixedPointRange(f64),
}

/// A vector of `u64` words under componentwise wrapping addition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RingVector(pub Vec<u64>);

impl RingVector {
    pub fn zeros(len: usize) -> Self {
        Self(vec![0; len])
    }

    pub fn from_counts(counts: &[u64]) -> Self {
        Self(counts.to_vec())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn add_assign(&mut self, other: &RingVector) {
        debug_assert_eq!(self.len(), other.len());
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a = a.wrapping_add(*b);
        }
    }

    pub fn sub_assign(&mut self, other: &RingVector) {
        debug_assert_eq!(self.len(), other.len());
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a = a.wrapping_sub(*b);
        }
    }
}

/// Two's-complement fixed point with a power-of-two scale. Encoding, modular
/// aggregation, and decoding reproduce the real sum within `k / scale` per
/// element for `k` summands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixedPointCodec {
    pub scale_bits: u32,
}

impl Default for FixedPointCodec {
    fn default() -> Self {
        Self { scale_bits: 20 }
    }
}

impl FixedPointCodec {
    pub fn new(scale_bits: u32) -> Self {
        assert!(scale_bits < 62);
        Self { scale_bits }
    }

    pub fn scale(&self) -> f64 {
        (1u64 << self.scale_bits) as f64
    }

    pub fn encode(&self, x: f64) -> Result<u64, AggError> {
        if !x.is_finite() {
            return Err(AggError::FixedPointRange(x));
        }
        let scaled = (x * self.scale()).round();
        if scaled.abs() >= (i64::MAX as f64) / 2.0 {
            return Err(AggError::FixedPointRange(x));
        }
        Ok((scaled as i64) as u64)
    }

    pub fn decode(&self, w: u64) -> f64 {
        (w as i64) as f64 / self.scale()
    }

    pub fn encode_vec(&self, xs: &[f64]) -> Result<RingVector, AggError> {
        Ok(RingVector(xs.iter().map(|&x| self.encode(x)).collect::<Result<_, _>>()?))
    }

    pub fn decode_vec(&self, v: &RingVector) -> Vec<f64> {
        v.0.iter().map(|&w| self.decode(w)).collect()
    }
}

/// Everything the simulated server sees in one round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundTranscript {
    pub round_id: u64,
    pub participants: Vec<usize>,
    pub vector_len: usize,
    /// Masked messages exactly as received, keyed by client id.
    pub masked_messages: BTreeMap<usize, Vec<u64>>,
    pub dropouts: Vec<usize>,
    pub aggregate: Vec<u64>,
    /// Set when the round ran with a single participant, whose message is
    /// necessarily its raw payload.
    pub unprotected: bool,
}

#[derive(Debug)]
struct RoundState {
    masked: BTreeMap<usize, RingVector>,
    dropped: BTreeSet<usize>,
    aggregated: bool,
}

/// One aggregation round: a state machine accepting concurrent submissions
/// from distinct clients, one dropout declaration phase, and a single
/// aggregation.
#[derive(Debug)]
pub struct AggregationRound {
    round_id: u64,
    vector_len: usize,
    participants: BTreeSet<usize>,
    seed: u64,
    state: Mutex<RoundState>,
}

impl AggregationRound {
    /// Establishes pairwise mask seeds for every unordered client pair.
    /// A single-participant round is allowed but flagged unprotected.
    pub fn setup(participants: &[usize], vector_len: usize, seed: u64) -> Result<Self, AggError> {
        if participants.is_empty() {
            return Err(AggError::NoParticipants);
        }
        let mut set = BTreeSet::new();
        for &p in participants {
            if !set.insert(p) {
                return Err(AggError::DuplicateId(p));
            }
        }
        Ok(Self {
            round_id: seed,
            vector_len,
            participants: set,
            seed,
            state: Mutex::new(RoundState {
                masked: BTreeMap::new(),
                dropped: BTreeSet::new(),
                aggregated: false,
            }),
        })
    }

    pub fn participants(&self) -> Vec<usize> {
        self.participants.iter().copied().collect()
    }

    fn pair_mask(&self, lo: usize, hi: usize) -> RingVector {
        debug_assert!(lo < hi);
        let seed = derive_seed(self.seed, "pair-mask", &[lo as u64, hi as u64]);
        let mut rng = ChaCha20Rng::from_seed(seed);
        RingVector((0..self.vector_len).map(|_| rng.next_u64()).collect())
    }

    /// Masks and records a client payload:
    /// `message = payload + sum_{j>i} mask_ij - sum_{j<i} mask_ji (mod 2^64)`.
    pub fn submit(&self, client: usize, payload: &RingVector) -> Result<RingVector, AggError> {
        if !self.participants.contains(&client) {
            return Err(AggError::NotParticipant(client));
        }
        if payload.len() != self.vector_len {
            return Err(AggError::WrongLength { got: payload.len(), expected: self.vector_len });
        }
        let mut message = payload.clone();
        for &other in &self.participants {
            if other == client {
                continue;
            }
            let (lo, hi) = (client.min(other), client.max(other));
            let mask = self.pair_mask(lo, hi);
            if client == lo {
                message.add_assign(&mask);
            } else {
                message.sub_assign(&mask);
            }
        }
        let mut state = self.state.lock().unwrap();
        if state.aggregated {
            return Err(AggError::AlreadyAggregated);
        }
        if state.masked.contains_key(&client) {
            return Err(AggError::DoubleSubmission(client));
        }
        state.masked.insert(client, message.clone());
        Ok(message)
    }

    /// Batch submission for the in-process driver: every submitting client's
    /// message is masked exactly as in [`AggregationRound::submit`], but each
    /// pair stream is generated once and applied to both endpoints.
    pub fn submit_all(
        &self,
        payloads: &BTreeMap<usize, RingVector>,
    ) -> Result<(), AggError> {
        for (&client, payload) in payloads {
            if !self.participants.contains(&client) {
                return Err(AggError::NotParticipant(client));
            }
            if payload.len() != self.vector_len {
                return Err(AggError::WrongLength {
                    got: payload.len(),
                    expected: self.vector_len,
                });
            }
        }
        let mut messages: BTreeMap<usize, RingVector> =
            payloads.iter().map(|(&c, p)| (c, p.clone())).collect();
        let ids: Vec<usize> = self.participants.iter().copied().collect();
        for (i, &lo) in ids.iter().enumerate() {
            for &hi in &ids[i + 1..] {
                if !messages.contains_key(&lo) && !messages.contains_key(&hi) {
                    continue;
                }
                let mask = self.pair_mask(lo, hi);
                if let Some(msg) = messages.get_mut(&lo) {
                    msg.add_assign(&mask);
                }
                if let Some(msg) = messages.get_mut(&hi) {
                    msg.sub_assign(&mask);
                }
            }
        }
        let mut state = self.state.lock().unwrap();
        if state.aggregated {
            return Err(AggError::AlreadyAggregated);
        }
        for (client, message) in messages {
            if state.masked.contains_key(&client) {
                return Err(AggError::DoubleSubmission(client));
            }
            state.masked.insert(client, message);
        }
        Ok(())
    }

    /// Declares clients dropped. Their payloads are excluded; the masks they
    /// shared with survivors are repaired during aggregation.
    pub fn inject_dropout(&self, clients: &[usize]) -> Result<(), AggError> {
        let mut state = self.state.lock().unwrap();
        if state.aggregated {
            return Err(AggError::LateDropout);
        }
        for &c in clients {
            if !self.participants.contains(&c) {
                return Err(AggError::NotParticipant(c));
            }
        }
        for &c in clients {
            state.dropped.insert(c);
        }
        if state.dropped.len() == self.participants.len() {
            return Err(AggError::AllDropped);
        }
        Ok(())
    }

    /// Sums the survivors' masked messages, strips masks shared with dropped
    /// clients, and freezes the transcript. Callable exactly once.
    pub fn aggregate(&self) -> Result<(RingVector, RoundTranscript), AggError> {
        let mut state = self.state.lock().unwrap();
        if state.aggregated {
            return Err(AggError::AlreadyAggregated);
        }
        let survivors: Vec<usize> = self
            .participants
            .iter()
            .copied()
            .filter(|c| !state.dropped.contains(c))
            .collect();
        let missing: Vec<usize> =
            survivors.iter().copied().filter(|c| !state.masked.contains_key(c)).collect();
        if !missing.is_empty() {
            return Err(AggError::Stalled(missing));
        }
        let mut total = RingVector::zeros(self.vector_len);
        for c in &survivors {
            total.add_assign(&state.masked[c]);
        }
        // Mask repair: survivors reveal their pair seeds with the dropped
        // set; recompute and cancel those streams.
        for &d in &state.dropped {
            for &s in &survivors {
                let (lo, hi) = (s.min(d), s.max(d));
                let mask = self.pair_mask(lo, hi);
                if s == lo {
                    total.sub_assign(&mask);
                } else {
                    total.add_assign(&mask);
                }
            }
        }
        state.aggregated = true;
        let transcript = RoundTranscript {
            round_id: self.round_id,
            participants: self.participants(),
            vector_len: self.vector_len,
            masked_messages: state
                .masked
                .iter()
                .filter(|(c, _)| !state.dropped.contains(c))
                .map(|(&c, v)| (c, v.0.clone()))
                .collect(),
            dropouts: state.dropped.iter().copied().collect(),
            aggregate: total.0.clone(),
            unprotected: survivors.len() == 1,
        };
        Ok((total, transcript))
    }
}

/// Session helper owning the round counter, a wholesale dropout script, and
/// the transcript log. Each call to [`Aggregator::sum`] runs one full round.
#[derive(Debug)]
pub struct Aggregator {
    master_seed: u64,
    scripted_dropout: BTreeSet<usize>,
    next_round: u64,
    transcripts: Vec<RoundTranscript>,
}

impl Aggregator {
    pub fn new(master_seed: u64) -> Self {
        Self {
            master_seed,
            scripted_dropout: BTreeSet::new(),
            next_round: 0,
            transcripts: Vec::new(),
        }
    }

    /// Marks clients as dropped for every subsequent round.
    pub fn script_dropout(&mut self, clients: impl IntoIterator<Item = usize>) {
        self.scripted_dropout.extend(clients);
    }

    pub fn scripted_dropout(&self) -> Vec<usize> {
        self.scripted_dropout.iter().copied().collect()
    }

    /// Clients of `participants` that will actually submit.
    pub fn survivors(&self, participants: &[usize]) -> Vec<usize> {
        participants
            .iter()
            .copied()
            .filter(|c| !self.scripted_dropout.contains(c))
            .collect()
    }

    /// Runs one round: survivors submit `payload_for(client)`, scripted
    /// dropouts are injected, and the aggregate is returned.
    pub fn sum(
        &mut self,
        participants: &[usize],
        vector_len: usize,
        mut payload_for: impl FnMut(usize) -> RingVector,
    ) -> Result<RingVector, AggError> {
        let seed = crate::seeding::derive_u64(self.master_seed, "round", &[self.next_round]);
        self.next_round += 1;
        let round = AggregationRound::setup(participants, vector_len, seed)?;
        let dropped: Vec<usize> = participants
            .iter()
            .copied()
            .filter(|c| self.scripted_dropout.contains(c))
            .collect();
        let payloads: BTreeMap<usize, RingVector> = participants
            .iter()
            .copied()
            .filter(|c| !dropped.contains(c))
            .map(|c| (c, payload_for(c)))
            .collect();
        round.submit_all(&payloads)?;
        if !dropped.is_empty() {
            round.inject_dropout(&dropped)?;
        }
        let (total, transcript) = round.aggregate()?;
        self.transcripts.push(transcript);
        Ok(total)
    }

    pub fn transcripts(&self) -> &[RoundTranscript] {
        &self.transcripts
    }

    pub fn take_transcripts(&mut self) -> Vec<RoundTranscript> {
        std::mem::take(&mut self.transcripts)
    }

    pub fn rounds_run(&self) -> u64 {
        self.next_round
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts(v: &[u64]) -> RingVector {
        RingVector::from_counts(v)
    }

    #[test]
    fn two_clients_cancel_exactly() {
        let round = AggregationRound::setup(&[0, 1], 3, 7).unwrap();
        let m0 = round.submit(0, &counts(&[1, 2, 3])).unwrap();
        let m1 = round.submit(1, &counts(&[10, 20, 30])).unwrap();
        assert_ne!(m0.0, vec![1, 2, 3], "message must not expose the payload");
        assert_ne!(m1.0, vec![10, 20, 30]);
        let (total, transcript) = round.aggregate().unwrap();
        assert_eq!(total.0, vec![11, 22, 33]);
        assert!(!transcript.unprotected);
    }

    #[test]
    fn single_client_round_is_flagged() {
        let round = AggregationRound::setup(&[4], 2, 1).unwrap();
        round.submit(4, &counts(&[5, 6])).unwrap();
        let (total, transcript) = round.aggregate().unwrap();
        assert_eq!(total.0, vec![5, 6]);
        assert!(transcript.unprotected);
    }

    #[test]
    fn ten_clients_match_plain_sum() {
        let round = AggregationRound::setup(&(0..10).collect::<Vec<_>>(), 4, 99).unwrap();
        let mut expected = [0u64; 4];
        for c in 0..10 {
            let payload: Vec<u64> = (0..4).map(|k| (c * 13 + k * 7) as u64).collect();
            for (e, p) in expected.iter_mut().zip(&payload) {
                *e += p;
            }
            round.submit(c, &counts(&payload)).unwrap();
        }
        let (total, _) = round.aggregate().unwrap();
        assert_eq!(total.0, expected.to_vec());
    }

    #[test]
    fn dropout_repair_matches_survivor_sum() {
        let round = AggregationRound::setup(&[0, 1, 2, 3, 4], 2, 5).unwrap();
        for c in 0..5usize {
            round.submit(c, &counts(&[c as u64, 1])).unwrap();
        }
        round.inject_dropout(&[2]).unwrap();
        let (total, transcript) = round.aggregate().unwrap();
        assert_eq!(total.0, vec![8, 4]);
        assert_eq!(transcript.dropouts, vec![2]);
        assert!(!transcript.masked_messages.contains_key(&2));
    }

    #[test]
    fn dropping_everyone_is_an_error() {
        let round = AggregationRound::setup(&[0, 1], 1, 3).unwrap();
        assert!(matches!(round.inject_dropout(&[0, 1]), Err(AggError::AllDropped)));
    }

    #[test]
    fn protocol_errors() {
        let round = AggregationRound::setup(&[0, 1], 2, 3).unwrap();
        assert!(matches!(
            round.submit(5, &counts(&[0, 0])),
            Err(AggError::NotParticipant(5))
        ));
        assert!(matches!(
            round.submit(0, &counts(&[0])),
            Err(AggError::WrongLength { .. })
        ));
        round.submit(0, &counts(&[0, 0])).unwrap();
        assert!(matches!(
            round.submit(0, &counts(&[0, 0])),
            Err(AggError::DoubleSubmission(0))
        ));
        assert!(matches!(round.aggregate(), Err(AggError::Stalled(ref v)) if v == &vec![1]));
        assert!(matches!(
            AggregationRound::setup(&[1, 1], 1, 0),
            Err(AggError::DuplicateId(1))
        ));
    }

    #[test]
    fn batch_submission_matches_per_client_masking() {
        let payloads: BTreeMap<usize, RingVector> = (0..6usize)
            .map(|c| (c, RingVector::from_counts(&[c as u64 * 3 + 1, 77, c as u64])))
            .collect();
        let clients: Vec<usize> = payloads.keys().copied().collect();

        let one_by_one = AggregationRound::setup(&clients, 3, 19).unwrap();
        let mut expected_msgs = BTreeMap::new();
        for (&c, p) in &payloads {
            expected_msgs.insert(c, one_by_one.submit(c, p).unwrap());
        }
        let (total_a, _) = one_by_one.aggregate().unwrap();

        let batched = AggregationRound::setup(&clients, 3, 19).unwrap();
        batched.submit_all(&payloads).unwrap();
        let (total_b, transcript) = batched.aggregate().unwrap();

        assert_eq!(total_a, total_b);
        for (&c, msg) in &transcript.masked_messages {
            assert_eq!(msg, &expected_msgs[&c].0, "client {c} message differs");
        }
    }

    #[test]
    fn aggregate_once_only() {
        let round = AggregationRound::setup(&[0], 1, 3).unwrap();
        round.submit(0, &counts(&[1])).unwrap();
        round.aggregate().unwrap();
        assert!(matches!(round.aggregate(), Err(AggError::AlreadyAggregated)));
    }

    #[test]
    fn fixed_point_roundtrip_and_sum_error() {
        let codec = FixedPointCodec::default();
        let xs = [1.25, -3.5, 0.000123, 1e6];
        for &x in &xs {
            let err = (codec.decode(codec.encode(x).unwrap()) - x).abs();
            assert!(err <= 1.0 / codec.scale());
        }
        // Aggregated fixed-point sum within k/scale of the real sum.
        let k = 8;
        let mut ring = RingVector::zeros(1);
        let mut real = 0.0;
        for i in 0..k {
            let x = (i as f64) * 0.3333 - 1.2;
            real += x;
            ring.add_assign(&codec.encode_vec(&[x]).unwrap());
        }
        let decoded = codec.decode_vec(&ring)[0];
        assert!((decoded - real).abs() <= k as f64 / codec.scale());
        assert!(codec.encode(f64::NAN).is_err());
        assert!(codec.encode(1e30).is_err());
    }

    #[test]
    fn concurrent_submissions_serialize() {
        let round = AggregationRound::setup(&(0..8).collect::<Vec<_>>(), 16, 11).unwrap();
        std::thread::scope(|scope| {
            for c in 0..8usize {
                let round = &round;
                scope.spawn(move || {
                    let payload: Vec<u64> = (0..16).map(|k| (c + k) as u64).collect();
                    round.submit(c, &RingVector(payload)).unwrap();
                });
            }
        });
        let (total, _) = round.aggregate().unwrap();
        let expected: Vec<u64> =
            (0..16).map(|k| (0..8).map(|c| (c + k) as u64).sum()).collect();
        assert_eq!(total.0, expected);
    }

    #[test]
    fn aggregator_scripts_dropout_wholesale() {
        let mut agg = Aggregator::new(17);
        agg.script_dropout([1]);
        let clients = [0, 1, 2];
        let total = agg
            .sum(&clients, 2, |c| RingVector::from_counts(&[c as u64, 10]))
            .unwrap();
        assert_eq!(total.0, vec![2, 20]);
        assert_eq!(agg.survivors(&clients), vec![0, 2]);
        assert_eq!(agg.transcripts().len(), 1);
    }

    #[test]
    fn transcripts_are_reproducible() {
        let run = || {
            let mut agg = Aggregator::new(5);
            agg.sum(&[0, 1, 2], 3, |c| RingVector::from_counts(&[c as u64; 3])).unwrap();
            agg.sum(&[0, 1], 2, |c| RingVector::from_counts(&[c as u64 + 7; 2])).unwrap();
            serde_json::to_string(agg.transcripts()).unwrap()
        };
        assert_eq!(run(), run());
    }
}
