//! The random-walk lower-bound game: a lazy-labelling coupling of transcripts
//! on the two random-walk instances, its TV bound, transcript and adaptive
//! distinguishers, and the marble-drawing experiment.

use std::collections::{HashMap, HashSet};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Starts, WalkTranscript, WeightedGraph};
use crate::instances::{count_reds, gen_rw_instance, relabel_random, Jar, JarCase, Which};
use crate::rng::{par_chunked_sum, RandomSource};

fn check_ell(ell: usize) -> Result<()> {
    if ell < 3 || ell % 2 == 0 {
        return Err(Error::InvalidParameter(format!("ℓ must be odd and at least 3, got {ell}")));
    }
    Ok(())
}

/// `min(1, 2m²T²/n + mT/2^ℓ)`.
pub fn tv_bound(m: usize, t: usize, n: usize, ell: usize) -> Result<f64> {
    if m == 0 || t == 0 || n == 0 || ell == 0 {
        return Err(Error::InvalidParameter("tv_bound needs positive arguments".into()));
    }
    let mt = (m * t) as f64;
    Ok((2.0 * mt * mt / n as f64 + mt / 2f64.powi(ell as i32)).clamp(0.0, 1.0))
}

/// The instance sizes behind the non-adaptive lower bound at accuracy `ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkThreshold {
    /// Largest odd integer strictly below `1/(4ε)`.
    pub ell: usize,
    /// `2·2^{2ℓ}`.
    pub n: u64,
    /// `2^{1/(4ε)} / 16`: step counts at or below this cannot succeed w.p. > 3/4.
    pub max_steps: f64,
}

pub fn walk_threshold(eps: f64) -> Result<WalkThreshold> {
    if !(eps > 0.0 && eps < 1.0 / 12.0) {
        return Err(Error::InvalidParameter(format!("ε must lie in (0, 1/12) for ℓ ≥ 3, got {eps}")));
    }
    let x = 1.0 / (4.0 * eps);
    let mut ell = x.ceil() as usize - 1;
    if ell % 2 == 0 {
        ell -= 1;
    }
    if ell > 30 {
        return Err(Error::InvalidParameter(format!("ε = {eps} gives ℓ = {ell}, too large")));
    }
    Ok(WalkThreshold { ell, n: 2u64 << (2 * ell), max_steps: 2f64.powf(x) / 16.0 })
}

/// One run of the coupling: both transcripts plus the proof's event flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingOutcome {
    pub s1: WalkTranscript,
    pub s2: WalkTranscript,
    pub equal: bool,
    /// No cycle is entered twice at a segment start (walk start or RESET).
    pub event1_held: bool,
    /// Every segment takes fewer than `ℓ` ring steps.
    pub event2_held: bool,
    pub reset_count: usize,
    pub max_segment_steps: usize,
}

struct CycleWalker {
    len: usize,
    labels: HashMap<u32, u32>,
    seen_cycles: HashSet<u32>,
    repeated_cycle: bool,
    current: u32,
}

impl CycleWalker {
    fn new(len: usize) -> Self {
        Self { len, labels: HashMap::new(), seen_cycles: HashSet::new(), repeated_cycle: false, current: 0 }
    }

    fn enter(&mut self, vertex: u32) {
        self.current = vertex;
        if !self.seen_cycles.insert(vertex / self.len as u32) {
            self.repeated_cycle = true;
        }
    }

    fn ring_step(&mut self, right: bool) {
        let len = self.len as u32;
        let (c, p) = (self.current / len, self.current % len);
        let p = if right { (p + 1) % len } else { (p + len - 1) % len };
        self.current = c * len + p;
    }

    fn label(&mut self, fresh: u32) -> usize {
        *self.labels.entry(self.current).or_insert(fresh) as usize + 1
    }
}

/// Draws the next entry of a uniformly random permutation of `0..size`,
/// given the entries drawn so far.
fn next_permutation_entry<R: Rng + ?Sized>(used: &mut HashSet<u32>, size: u32, rng: &mut R) -> u32 {
    loop {
        let x = rng.gen_range(0..size);
        if used.insert(x) {
            return x;
        }
    }
}

/// Simulates the lazy-labelling coupling between the random-walk instances
/// with `2n` rings of length `ℓ` and `n` rings of length `2ℓ`. Each step moves
/// right or left in both rings with probability 1/4 each, or resets both
/// walks to independent uniform vertices with probability 1/2. Newly visited
/// vertices take the next label of a shared random permutation.
pub fn coupling_run(ell: usize, n: usize, m: usize, t: usize, source: RandomSource) -> Result<CouplingOutcome> {
    check_ell(ell)?;
    if n == 0 || m == 0 {
        return Err(Error::InvalidParameter("coupling needs n >= 1 and m >= 1".into()));
    }
    let size = 2 * n * ell;
    if size > u32::MAX as usize || m * (t + 1) > size {
        return Err(Error::InvalidParameter(format!("{} labels requested from {size}", m * (t + 1))));
    }
    let size = size as u32;
    let mut rng = source.rng();
    let mut used = HashSet::new();
    let mut w1 = CycleWalker::new(ell);
    let mut w2 = CycleWalker::new(2 * ell);
    let mut s1 = Vec::with_capacity(m);
    let mut s2 = Vec::with_capacity(m);
    let (mut resets, mut max_segment, mut long_segment) = (0, 0, false);
    for _ in 0..m {
        w1.enter(rng.gen_range(0..size));
        w2.enter(rng.gen_range(0..size));
        let fresh = next_permutation_entry(&mut used, size, &mut rng);
        let mut a = vec![w1.label(fresh)];
        let mut b = vec![w2.label(fresh)];
        let mut segment = 0;
        for _ in 0..t {
            match rng.gen_range(0..4u8) {
                0 | 1 => {
                    let right = rng.gen::<bool>();
                    w1.ring_step(right);
                    w2.ring_step(right);
                    segment += 1;
                    max_segment = max_segment.max(segment);
                    if segment >= ell {
                        long_segment = true;
                    }
                }
                _ => {
                    resets += 1;
                    segment = 0;
                    w1.enter(rng.gen_range(0..size));
                    w2.enter(rng.gen_range(0..size));
                }
            }
            let fresh = next_permutation_entry(&mut used, size, &mut rng);
            a.push(w1.label(fresh));
            b.push(w2.label(fresh));
        }
        s1.push(a);
        s2.push(b);
    }
    let equal = s1 == s2;
    Ok(CouplingOutcome {
        s1: WalkTranscript::from_walks(s1)?,
        s2: WalkTranscript::from_walks(s2)?,
        equal,
        event1_held: !w1.repeated_cycle && !w2.repeated_cycle,
        event2_held: !long_segment,
        reset_count: resets,
        max_segment_steps: max_segment,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingSummary {
    pub trials: u64,
    pub unequal: u64,
    pub event1_failures: u64,
    pub event2_failures: u64,
    /// Runs where both events held but the transcripts differed.
    pub implication_violations: u64,
    pub p_unequal: f64,
    pub sigma: f64,
    pub tv_bound: f64,
    pub event1_bound: f64,
    pub event2_bound: f64,
}

/// Repeats [`coupling_run`] `trials` times; trial `i` uses `source.fork(i)`.
pub fn coupling_experiment(
    ell: usize,
    n: usize,
    m: usize,
    t: usize,
    trials: u64,
    source: RandomSource,
) -> Result<CouplingSummary> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be positive".into()));
    }
    let counts = (0..trials)
        .into_par_iter()
        .map(|i| {
            let o = coupling_run(ell, n, m, t, source.fork(i))?;
            Ok::<_, Error>([
                !o.equal as u64,
                !o.event1_held as u64,
                !o.event2_held as u64,
                (o.event1_held && o.event2_held && !o.equal) as u64,
            ])
        })
        .try_reduce(|| [0u64; 4], |a, b| Ok([a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]]))?;
    let p = counts[0] as f64 / trials as f64;
    let mt = (m * t) as f64;
    Ok(CouplingSummary {
        trials,
        unequal: counts[0],
        event1_failures: counts[1],
        event2_failures: counts[2],
        implication_violations: counts[3],
        p_unequal: p,
        sigma: (p * (1.0 - p) / trials as f64).sqrt(),
        tv_bound: tv_bound(m, t.max(1), n, ell)?,
        event1_bound: 2.0 * mt * mt / n as f64,
        event2_bound: mt / 2f64.powi(ell as i32),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Guess {
    G1,
    G2,
    Unknown,
}

/// Number of lag-`ℓ` and lag-`2ℓ` loop witnesses in a transcript.
///
/// A witness is a label that reappears exactly `L` steps later in the same
/// walk, where the `L` labels in between are distinct and every consecutive
/// pair among them is observed at least twice somewhere in the transcript.
/// Repeated observation is the evidence that a pair is a ring edge rather
/// than a uniform jump.
pub fn loop_witnesses(transcript: &WalkTranscript, ell: usize) -> (usize, usize) {
    let mut pairs: HashMap<(usize, usize), u32> = HashMap::new();
    for walk in transcript.walks() {
        for w in walk.windows(2) {
            if w[0] != w[1] {
                *pairs.entry((w[0].min(w[1]), w[0].max(w[1]))).or_default() += 1;
            }
        }
    }
    let ring_pair = |a: usize, b: usize| pairs.get(&(a.min(b), a.max(b))).is_some_and(|&c| c >= 2);
    let mut counts = [0usize; 2];
    let mut window = HashSet::new();
    for walk in transcript.walks() {
        for (slot, lag) in [ell, 2 * ell].into_iter().enumerate() {
            for i in 0..walk.len().saturating_sub(lag) {
                if walk[i] != walk[i + lag] {
                    continue;
                }
                window.clear();
                let segment = &walk[i..i + lag];
                if segment.iter().all(|x| window.insert(*x))
                    && walk[i..=i + lag].windows(2).all(|w| ring_pair(w[0], w[1]))
                {
                    counts[slot] += 1;
                }
            }
        }
    }
    (counts[0], counts[1])
}

/// Guesses `G1` on any lag-`ℓ` loop witness, otherwise `G2` on a lag-`2ℓ`
/// witness, otherwise `Unknown`.
pub fn loop_detector(transcript: &WalkTranscript, ell: usize) -> Guess {
    match loop_witnesses(transcript, ell) {
        (c1, _) if c1 > 0 => Guess::G1,
        (_, c2) if c2 > 0 => Guess::G2,
        _ => Guess::Unknown,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameResult {
    pub trials: u64,
    pub successes: u64,
    /// Trials decided by a coin flip or counted as half a success.
    pub ties: u64,
    /// `(successes + ties/2)/trials − 1/2`; ties count as half a success
    /// when they are not resolved by a coin.
    pub advantage: f64,
    pub theoretical_bound: f64,
}

fn which_for(index: u64) -> Which {
    if index % 2 == 0 {
        Which::G1
    } else {
        Which::G2
    }
}

/// Plays the non-adaptive game: each seed picks `G1`/`G2` alternately,
/// builds the random-walk instance with random labels, runs `m` uniform walks
/// of length `T`, and scores [`loop_detector`]. Unknown guesses are resolved
/// by a fair coin.
pub fn loop_game(ell: usize, n: usize, m: usize, t: usize, seeds: u64, source: RandomSource) -> Result<GameResult> {
    if seeds == 0 {
        return Err(Error::InvalidParameter("seeds must be positive".into()));
    }
    let mut successes = 0;
    let mut coins = 0;
    for s in 0..seeds {
        let run = source.fork(s);
        let which = which_for(s);
        let graph = relabel_random(&gen_rw_instance(ell, which, Some(n))?, run.fork(0))?;
        let transcript = graph.run_walks(m, t, &Starts::Uniform, run.fork(1))?;
        let guess = match loop_detector(&transcript, ell) {
            Guess::Unknown => {
                coins += 1;
                if run.fork(2).rng().gen::<bool>() {
                    Guess::G1
                } else {
                    Guess::G2
                }
            }
            g => g,
        };
        let correct = matches!((guess, which), (Guess::G1, Which::G1) | (Guess::G2, Which::G2));
        successes += correct as u64;
    }
    Ok(GameResult {
        trials: seeds,
        successes,
        ties: coins,
        advantage: successes as f64 / seeds as f64 - 0.5,
        theoretical_bound: tv_bound(m, t, n, ell)?,
    })
}

/// Result of one adaptive probe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeOutcome {
    pub cycle_length: usize,
    pub steps: u64,
}

/// Hard step budget `3·2ℓ·r + 2ℓ` for a probe with `r` repetitions.
pub fn probe_budget(ell: usize, reps: usize) -> u64 {
    (3 * 2 * ell * reps + 2 * ell) as u64
}

const PROBE_RETRIES: usize = 3;

/// The two most frequent destinations of `reps` one-step walks from `v`
/// (ignoring `v`), doubling `reps` on a tie with the third.
fn ring_neighbors<R: Rng + ?Sized>(
    graph: &WeightedGraph,
    v: usize,
    reps: usize,
    steps: &mut u64,
    rng: &mut R,
) -> Result<(usize, usize)> {
    let mut r = reps;
    for _ in 0..=PROBE_RETRIES {
        let mut counts: HashMap<usize, usize> = HashMap::new();
        for _ in 0..r {
            let u = graph.walk_step(v, rng)?;
            if u != v {
                *counts.entry(u).or_default() += 1;
            }
        }
        *steps += r as u64;
        let mut ranked: Vec<(usize, usize)> = counts.into_iter().map(|(u, c)| (c, u)).collect();
        ranked.sort_unstable_by(|a, b| b.cmp(a));
        let third = ranked.get(2).map_or(0, |x| x.0);
        if ranked.len() >= 2 && ranked[1].0 > third && ranked[1].0 >= 2 {
            return Ok((ranked[0].1, ranked[1].1));
        }
        r *= 2;
    }
    Err(Error::Numerical(format!("ring neighbors of vertex {v} stayed ambiguous after {PROBE_RETRIES} retries")))
}

/// Adaptive strategy: from a uniform vertex, identify its two ring neighbors
/// by majority over `reps` one-step walks, then keep stepping to the
/// neighbor that is not the previous vertex until the start reappears.
/// Fails once the hard budget is spent.
pub fn adaptive_cycle_probe(graph: &WeightedGraph, ell: usize, reps: usize, source: RandomSource) -> Result<ProbeOutcome> {
    check_ell(ell)?;
    if reps == 0 {
        return Err(Error::InvalidParameter("reps must be positive".into()));
    }
    let budget = probe_budget(ell, reps);
    let mut rng = source.rng();
    let mut steps = 0u64;
    let start = graph.uniform_index(&mut rng) + 1;
    let (first, _) = ring_neighbors(graph, start, reps, &mut steps, &mut rng)?;
    let (mut prev, mut cur) = (start, first);
    let mut length = 1;
    steps += 1;
    while cur != start {
        if steps > budget {
            return Err(Error::BudgetExceeded { required: steps, cap: budget });
        }
        let (a, b) = ring_neighbors(graph, cur, reps, &mut steps, &mut rng)?;
        let next = if a != prev {
            a
        } else {
            b
        };
        prev = cur;
        cur = next;
        length += 1;
        steps += 1;
    }
    if steps > budget {
        return Err(Error::BudgetExceeded { required: steps, cap: budget });
    }
    Ok(ProbeOutcome { cycle_length: length, steps })
}

/// Plays the adaptive game: seeds alternate `G1`/`G2`, each with freshly
/// relabelled instances; a probe that errors counts as a failure.
pub fn probe_game(ell: usize, n: usize, reps: usize, seeds: u64, source: RandomSource) -> Result<GameResult> {
    if seeds == 0 {
        return Err(Error::InvalidParameter("seeds must be positive".into()));
    }
    let mut successes = 0;
    for s in 0..seeds {
        let run = source.fork(s);
        let which = which_for(s);
        let graph = relabel_random(&gen_rw_instance(ell, which, Some(n))?, run.fork(0))?;
        let expected = match which {
            Which::G1 => ell,
            Which::G2 => 2 * ell,
        };
        if let Ok(o) = adaptive_cycle_probe(&graph, ell, reps, run.fork(1)) {
            successes += (o.cycle_length == expected && o.steps <= probe_budget(ell, reps)) as u64;
        }
    }
    Ok(GameResult {
        trials: seeds,
        successes,
        ties: 0,
        advantage: successes as f64 / seeds as f64 - 0.5,
        theoretical_bound: probe_budget(ell, reps) as f64,
    })
}

/// `2s²/n + sqrt(s/2)·ε` with `ε = 2α − 1`, clamped to 1.
pub fn marble_tv_bound(alpha: f64, n: usize, s: usize) -> f64 {
    let eps = 2.0 * alpha - 1.0;
    let s = s as f64;
    (2.0 * s * s / n as f64 + (s / 2.0).sqrt() * eps).min(1.0)
}

/// Threshold test on the red count: more than `s/2` reds means the first
/// case, fewer means the second, and a tie scores half. Trials alternate
/// between the two cases.
pub fn marble_experiment(
    alpha: f64,
    n: usize,
    s: usize,
    replacement: bool,
    trials: u64,
    source: RandomSource,
) -> Result<GameResult> {
    let jars = [Jar::new(alpha, n, JarCase::Case1)?, Jar::new(alpha, n, JarCase::Case2)?];
    if !replacement && s > n {
        return Err(Error::InvalidParameter(format!("cannot draw {s} of {n} marbles without replacement")));
    }
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be positive".into()));
    }
    // successes in the high half, ties in the low half; CHUNK is even, so
    // local parity matches global trial parity
    let packed = par_chunked_sum(trials, source, |rng, count| {
        let (mut wins, mut ties) = (0u64, 0u64);
        for i in 0..count {
            let case = (i % 2) as usize;
            let reds = count_reds(&jars[case], s, replacement, rng);
            match (2 * reds).cmp(&s) {
                std::cmp::Ordering::Greater => wins += (case == 0) as u64,
                std::cmp::Ordering::Less => wins += (case == 1) as u64,
                std::cmp::Ordering::Equal => ties += 1,
            }
        }
        (wins << 32) | ties
    });
    let (successes, ties) = (packed >> 32, packed & 0xFFFF_FFFF);
    Ok(GameResult {
        trials,
        successes,
        ties,
        advantage: (successes as f64 + 0.5 * ties as f64) / trials as f64 - 0.5,
        theoretical_bound: marble_tv_bound(alpha, n, s),
    })
}
