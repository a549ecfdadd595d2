use std::cmp::Ordering;
use std::collections::HashMap;

/// Per-frame emission cap used when no other is configured.
pub const DEFAULT_MAX_SYMBOLS_PER_FRAME: usize = 10;

/// Label-history side of a transducer.
pub trait Predictor {
    type State: Clone;

    /// State before any label has been emitted.
    fn start(&self) -> Self::State;

    /// State after emitting `token` from `state`.
    fn step(&self, state: &Self::State, token: u32) -> Self::State;
}

/// Combines one encoder frame with a predictor state into log-probabilities
/// over the vocabulary (blank included).
pub trait Joiner<E, S> {
    fn log_probs(&self, frame: &E, state: &S) -> Vec<f64>;
}

impl<E, S, F> Joiner<E, S> for F
where
    F: Fn(&E, &S) -> Vec<f64>,
{
    fn log_probs(&self, frame: &E, state: &S) -> Vec<f64> {
        self(frame, state)
    }
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = k;
        }
    }
    best
}

/// Greedy decoding: at each frame keep emitting the arg-max symbol until it is
/// blank or `max_symbols_per_frame` labels have been emitted.
pub fn greedy_decode<E, P, J>(
    encoder_out: &[E],
    predictor: &P,
    joiner: &J,
    blank: u32,
    max_symbols_per_frame: usize,
) -> Vec<u32>
where
    P: Predictor,
    J: Joiner<E, P::State>,
{
    let cap = max_symbols_per_frame.max(1);
    let mut state = predictor.start();
    let mut output = Vec::new();
    for frame in encoder_out {
        for _ in 0..cap {
            let k = argmax(&joiner.log_probs(frame, &state)) as u32;
            if k == blank {
                break;
            }
            output.push(k);
            state = predictor.step(&state, k);
        }
    }
    output
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BeamConfig {
    pub beam_width: usize,
    pub max_symbols_per_frame: usize,
    /// Hypotheses stop growing at this many labels.
    pub max_output_len: Option<usize>,
}

impl BeamConfig {
    pub fn new(beam_width: usize) -> Self {
        Self {
            beam_width,
            max_symbols_per_frame: DEFAULT_MAX_SYMBOLS_PER_FRAME,
            max_output_len: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    pub tokens: Vec<u32>,
    /// Log of the summed probability of every kept alignment of `tokens`.
    pub score: f64,
}

struct Entry<S> {
    tokens: Vec<u32>,
    score: f64,
    state: S,
}

/// Best score first; equal scores fall back to lexicographic token order.
fn rank(a_tokens: &[u32], a_score: f64, b_tokens: &[u32], b_score: f64) -> Ordering {
    b_score.total_cmp(&a_score).then_with(|| a_tokens.cmp(b_tokens))
}

/// Accumulates hypotheses, merging identical label sequences by log-adding
/// their scores.
struct Pool<S> {
    entries: Vec<Entry<S>>,
    index: HashMap<Vec<u32>, usize>,
}

impl<S> Pool<S> {
    fn new() -> Self {
        Self {
            entries: Vec::new(),
            index: HashMap::new(),
        }
    }

    fn add(&mut self, tokens: Vec<u32>, score: f64, state: impl FnOnce() -> S) {
        match self.index.get(&tokens) {
            Some(&i) => {
                let e = &mut self.entries[i];
                e.score = crate::math::log_add(e.score, score);
            }
            None => {
                self.index.insert(tokens.clone(), self.entries.len());
                self.entries.push(Entry {
                    tokens,
                    score,
                    state: state(),
                });
            }
        }
    }

    fn into_top(self, width: usize) -> Vec<Entry<S>> {
        let mut entries = self.entries;
        entries.sort_by(|a, b| rank(&a.tokens, a.score, &b.tokens, b.score));
        entries.truncate(width);
        entries
    }
}

/// Frame-synchronous transducer beam search.
///
/// Within a frame, hypotheses either emit blank (and wait for the next frame)
/// or extend by a label (and stay on the frame, up to
/// `max_symbols_per_frame` labels). Identical label sequences are merged by
/// summing probabilities. Both pools are pruned to `beam_width`; in-frame
/// extensions that cannot beat a full frame-end pool are dropped. Returns the
/// final hypotheses, best first, with exact ties ordered lexicographically.
pub fn beam_decode<E, P, J>(
    encoder_out: &[E],
    predictor: &P,
    joiner: &J,
    blank: u32,
    config: BeamConfig,
) -> Vec<Hypothesis>
where
    P: Predictor,
    J: Joiner<E, P::State>,
{
    let width = config.beam_width.max(1);
    let cap = config.max_symbols_per_frame.max(1);
    let max_len = config.max_output_len.unwrap_or(usize::MAX);
    let mut beam = vec![Entry {
        tokens: Vec::new(),
        score: 0.0,
        state: predictor.start(),
    }];
    for frame in encoder_out {
        let mut ended: Pool<P::State> = Pool::new();
        let mut current = beam;
        for emitted in 0..=cap {
            let mut extended: Pool<(P::State, u32)> = Pool::new();
            for hyp in &current {
                let lp = joiner.log_probs(frame, &hyp.state);
                ended.add(hyp.tokens.clone(), hyp.score + lp[blank as usize], || hyp.state.clone());
                if emitted == cap || hyp.tokens.len() >= max_len {
                    continue;
                }
                for (k, &l) in lp.iter().enumerate() {
                    if k as u32 == blank {
                        continue;
                    }
                    let mut tokens = hyp.tokens.clone();
                    tokens.push(k as u32);
                    extended.add(tokens, hyp.score + l, || (hyp.state.clone(), k as u32));
                }
            }
            // Prune the frame-end pool in place so later rounds keep merging.
            let kept = std::mem::replace(&mut ended, Pool::new()).into_top(width);
            for e in kept {
                let state = e.state;
                ended.add(e.tokens, e.score, || state);
            }
            let floor = if ended.entries.len() >= width {
                ended.entries.iter().map(|e| e.score).fold(f64::INFINITY, f64::min)
            } else {
                f64::NEG_INFINITY
            };
            current = extended
                .into_top(width)
                .into_iter()
                .filter(|e| e.score > floor)
                .map(|e| {
                    let (parent, token) = e.state;
                    Entry {
                        state: predictor.step(&parent, token),
                        tokens: e.tokens,
                        score: e.score,
                    }
                })
                .collect();
            if current.is_empty() {
                break;
            }
        }
        beam = ended.into_top(width);
    }
    beam.into_iter()
        .map(|e| Hypothesis {
            tokens: e.tokens,
            score: e.score,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{log_softmax_in_place, mix_seed};

    /// Predictor whose state is the emitted prefix itself.
    struct PrefixPredictor;

    impl Predictor for PrefixPredictor {
        type State = Vec<u32>;

        fn start(&self) -> Vec<u32> {
            Vec::new()
        }

        fn step(&self, state: &Vec<u32>, token: u32) -> Vec<u32> {
            let mut s = state.clone();
            s.push(token);
            s
        }
    }

    /// Pseudo-random log-probabilities as a function of (frame, prefix).
    fn hashed_joiner(vocab: usize, seed: u64, sharpness: f64) -> impl Fn(&usize, &Vec<u32>) -> Vec<f64> {
        move |frame: &usize, prefix: &Vec<u32>| {
            let mut h = mix_seed(seed, *frame as u64);
            for &t in prefix {
                h = mix_seed(h, t as u64 + 1);
            }
            let mut logits: Vec<f64> = (0..vocab)
                .map(|k| {
                    let r = mix_seed(h, k as u64);
                    sharpness * ((r >> 11) as f64 / (1u64 << 53) as f64 - 0.5)
                })
                .collect();
            log_softmax_in_place(&mut logits);
            logits
        }
    }

    /// Near-one-hot joiner: `table(frame, prefix)` gets almost all the mass.
    fn peaked(vocab: usize, pick: impl Fn(usize, &[u32]) -> u32) -> impl Fn(&usize, &Vec<u32>) -> Vec<f64> {
        move |frame: &usize, prefix: &Vec<u32>| {
            let chosen = pick(*frame, prefix) as usize;
            let mut logits = vec![0.0; vocab];
            logits[chosen] = 20.0;
            log_softmax_in_place(&mut logits);
            logits
        }
    }

    #[test]
    fn blank_first_joiner_emits_nothing() {
        let frames: Vec<usize> = (0..5).collect();
        let joiner = peaked(4, |_, _| 0);
        assert!(greedy_decode(&frames, &PrefixPredictor, &joiner, 0, 10).is_empty());
    }

    #[test]
    fn crafted_joiner_emits_one_label() {
        let frames: Vec<usize> = (0..4).collect();
        let joiner = peaked(5, |t, prefix| if t == 0 && prefix.is_empty() { 3 } else { 0 });
        assert_eq!(greedy_decode(&frames, &PrefixPredictor, &joiner, 0, 10), vec![3]);
    }

    #[test]
    fn never_blank_hits_the_cap() {
        let frames: Vec<usize> = (0..3).collect();
        let joiner = peaked(3, |_, _| 2);
        assert_eq!(greedy_decode(&frames, &PrefixPredictor, &joiner, 0, 4).len(), 12);
    }

    #[test]
    fn width_one_beam_equals_greedy_on_peaked_joiners() {
        for seed in 0..30u64 {
            let frames: Vec<usize> = (0..5).collect();
            // Emit labels until the prefix reaches a per-frame quota that grows
            // by at most the cap, so greedy never has to force a frame advance.
            let quota = move |t: usize| (0..=t).map(|f| mix_seed(seed, f as u64) % 4).sum::<u64>() as usize;
            let joiner = peaked(4, move |t, prefix| {
                if prefix.len() < quota(t) {
                    1 + (mix_seed(seed ^ 7, prefix.len() as u64) % 3) as u32
                } else {
                    0
                }
            });
            let greedy = greedy_decode(&frames, &PrefixPredictor, &joiner, 0, 3);
            let mut cfg = BeamConfig::new(1);
            cfg.max_symbols_per_frame = 3;
            let beam = beam_decode(&frames, &PrefixPredictor, &joiner, 0, cfg);
            assert_eq!(beam[0].tokens, greedy, "seed {seed}");
        }
    }

    /// Exact `P(y|x)` for a prefix-conditioned model by enumerating alignments.
    fn sequence_log_prob(frames: usize, joiner: &impl Fn(&usize, &Vec<u32>) -> Vec<f64>, y: &[u32]) -> f64 {
        fn walk(
            frames: usize,
            joiner: &impl Fn(&usize, &Vec<u32>) -> Vec<f64>,
            y: &[u32],
            t: usize,
            u: usize,
            acc: f64,
            out: &mut Vec<f64>,
        ) {
            let lp = joiner(&t, &y[..u].to_vec());
            if t == frames - 1 && u == y.len() {
                out.push(acc + lp[0]);
                return;
            }
            if t + 1 < frames {
                walk(frames, joiner, y, t + 1, u, acc + lp[0], out);
            }
            if u < y.len() {
                walk(frames, joiner, y, t, u + 1, acc + lp[y[u] as usize], out);
            }
        }
        let mut scores = Vec::new();
        walk(frames, joiner, y, 0, 0, 0.0, &mut scores);
        crate::math::log_sum_exp(&scores)
    }

    #[test]
    fn wide_beam_finds_the_exhaustive_optimum() {
        for seed in 0..40u64 {
            let frames = 1 + (seed % 3) as usize;
            let vocab = 2 + (seed % 3) as usize;
            let max_len = 2;
            let joiner = hashed_joiner(vocab, seed, 6.0);
            // All label sequences of length <= max_len.
            let mut seqs: Vec<Vec<u32>> = vec![vec![]];
            let mut frontier = seqs.clone();
            for _ in 0..max_len {
                let mut next = Vec::new();
                for s in &frontier {
                    for k in 1..vocab as u32 {
                        let mut e = s.clone();
                        e.push(k);
                        next.push(e);
                    }
                }
                seqs.extend(next.iter().cloned());
                frontier = next;
            }
            let scored: Vec<(Vec<u32>, f64)> = seqs
                .into_iter()
                .map(|s| {
                    let lp = sequence_log_prob(frames, &joiner, &s);
                    (s, lp)
                })
                .collect();
            let best = scored
                .iter()
                .min_by(|a, b| rank(&a.0, a.1, &b.0, b.1))
                .unwrap();
            let cfg = BeamConfig {
                beam_width: 10_000,
                max_symbols_per_frame: max_len,
                max_output_len: Some(max_len),
            };
            let inputs: Vec<usize> = (0..frames).collect();
            let hyps = beam_decode(&inputs, &PrefixPredictor, &joiner, 0, cfg);
            assert_eq!(hyps[0].tokens, best.0, "seed {seed}");
            assert!((hyps[0].score - best.1).abs() < 1e-9);
            // Unpruned search scores every sequence exactly.
            for h in &hyps {
                let exact = scored.iter().find(|(s, _)| s == &h.tokens).unwrap().1;
                assert!((h.score - exact).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn exact_ties_are_lexicographic() {
        // Uniform distribution: [1] and [2] have identical scores.
        let uniform = |_: &usize, _: &Vec<u32>| vec![(1.0f64 / 3.0).ln(); 3];
        let cfg = BeamConfig {
            beam_width: 8,
            max_symbols_per_frame: 1,
            max_output_len: Some(1),
        };
        let hyps = beam_decode(&[0usize], &PrefixPredictor, &uniform, 0, cfg);
        let order: Vec<Vec<u32>> = hyps.iter().map(|h| h.tokens.clone()).collect();
        assert_eq!(order, vec![vec![], vec![1], vec![2]]);
        assert_eq!(hyps[1].score, hyps[2].score);
    }

    #[test]
    fn pruned_scores_are_bounded_by_exact_search() {
        // Pruning only drops alignment mass: no width beats unpruned search,
        // and no reported score exceeds the sequence's exact probability.
        let exact_cfg = BeamConfig {
            beam_width: usize::MAX,
            max_symbols_per_frame: 3,
            max_output_len: Some(4),
        };
        for seed in 0..100u64 {
            let frames: Vec<usize> = (0..3).collect();
            let joiner = hashed_joiner(3, seed, 4.0);
            let exact = beam_decode(&frames, &PrefixPredictor, &joiner, 0, exact_cfg);
            for width in 1..=6 {
                let cfg = BeamConfig {
                    beam_width: width,
                    ..exact_cfg
                };
                let hyps = beam_decode(&frames, &PrefixPredictor, &joiner, 0, cfg);
                assert!(hyps.len() <= width);
                assert!(hyps[0].score <= exact[0].score + 1e-12);
                for h in &hyps {
                    let full = exact.iter().find(|e| e.tokens == h.tokens).unwrap();
                    assert!(h.score <= full.score + 1e-12);
                }
            }
        }
    }
}
