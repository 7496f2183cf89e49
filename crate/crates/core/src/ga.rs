//! Generational binary GA over 40-bit shaper encodings.
//!
//! Each generation the whole population is scored, the best `elite_count`
//! individuals are copied unchanged, and the rest of the offspring comes
//! from binary tournament selection, 1-point crossover and a single-bit
//! mutation applied with probability `mutation_prob` to each child.
//!
//! The evolutionary trajectory only depends on the seed: selection,
//! crossover and mutation draw from one sequential ChaCha stream, while
//! scoring may run in parallel.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitness::FitnessValue;
use crate::params::ShaperParams;

pub const CHROMOSOME_BITS: u32 = 40;
const MASK: u64 = (1 << CHROMOSOME_BITS) - 1;

// Field layout, most significant field first.
const K_SHIFT: u32 = 34;
const L_SHIFT: u32 = 28;
const M1_SHIFT: u32 = 14;
const M2_SHIFT: u32 = 0;
const FIELD6: u64 = 0x3f;
const FIELD14: u64 = 0x3fff;

/// A 40-bit individual. Bit 0 is the most significant bit of the `k` field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Chromosome(u64);

impl Chromosome {
    pub fn from_bits(bits: u64) -> Result<Self> {
        if bits > MASK {
            return Err(Error::Domain("chromosome wider than 40 bits"));
        }
        Ok(Chromosome(bits))
    }

    pub fn bits(&self) -> u64 {
        self.0
    }

    /// Bit at position `i`, counted from the left.
    pub fn bit(&self, i: u32) -> bool {
        assert!(i < CHROMOSOME_BITS);
        (self.0 >> (CHROMOSOME_BITS - 1 - i)) & 1 == 1
    }

    pub fn flip(self, i: u32) -> Self {
        assert!(i < CHROMOSOME_BITS);
        Chromosome(self.0 ^ (1 << (CHROMOSOME_BITS - 1 - i)))
    }

    pub fn random(rng: &mut impl Rng) -> Self {
        Chromosome(rng.random::<u64>() & MASK)
    }

    pub fn hamming(&self, other: &Chromosome) -> u32 {
        (self.0 ^ other.0).count_ones()
    }
}

impl fmt::Display for Chromosome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:040b}", self.0)
    }
}

impl FromStr for Chromosome {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.len() != CHROMOSOME_BITS as usize || !s.bytes().all(|b| b == b'0' || b == b'1') {
            return Err(Error::Domain("chromosome must be 40 binary digits"));
        }
        Ok(Chromosome(u64::from_str_radix(s, 2).expect("validated")))
    }
}

impl Serialize for Chromosome {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Chromosome {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

pub fn encode(params: &ShaperParams) -> Chromosome {
    let k = params.k() as u64 & FIELD6;
    let l = params.l() as u64 & FIELD6;
    let m1 = params.m1() as u16 as u64 & FIELD14;
    let m2 = params.m2() as u16 as u64 & FIELD14;
    Chromosome(k << K_SHIFT | l << L_SHIFT | m1 << M1_SHIFT | m2 << M2_SHIFT)
}

fn sign_extend14(field: u64) -> i64 {
    ((field as i64) << 50) >> 50
}

pub fn decode(c: &Chromosome) -> ShaperParams {
    let bits = c.0;
    ShaperParams::new(
        ((bits >> K_SHIFT) & FIELD6) as i64,
        ((bits >> L_SHIFT) & FIELD6) as i64,
        sign_extend14((bits >> M1_SHIFT) & FIELD14),
        sign_extend14((bits >> M2_SHIFT) & FIELD14),
    )
    .expect("every 40-bit pattern decodes to in-range fields")
}

/// Winner of a binary tournament between individuals `first` and `second`:
/// the lower fitness, or `first` on a tie.
pub fn binary_tournament(fitnesses: &[FitnessValue], first: usize, second: usize) -> usize {
    if fitnesses[second] < fitnesses[first] {
        second
    } else {
        first
    }
}

/// Draws two indices uniformly with replacement and returns the winner.
pub fn tournament_select(fitnesses: &[FitnessValue], rng: &mut impl Rng) -> usize {
    assert!(!fitnesses.is_empty(), "tournament over an empty population");
    let first = rng.random_range(0..fitnesses.len());
    let second = rng.random_range(0..fitnesses.len());
    binary_tournament(fitnesses, first, second)
}

/// Children of a cut after the first `cut` bits: `a[..cut] + b[cut..]` and
/// `b[..cut] + a[cut..]`.
pub fn crossover_at(a: Chromosome, b: Chromosome, cut: u32) -> (Chromosome, Chromosome) {
    assert!(cut <= CHROMOSOME_BITS);
    let tail = if cut == 0 { MASK } else { MASK >> cut };
    let head = MASK & !tail;
    (
        Chromosome(a.0 & head | b.0 & tail),
        Chromosome(b.0 & head | a.0 & tail),
    )
}

/// 1-point crossover with the cut drawn uniformly from 1..=39.
pub fn one_point_crossover(
    a: Chromosome,
    b: Chromosome,
    rng: &mut impl Rng,
) -> (Chromosome, Chromosome) {
    let cut = rng.random_range(1..CHROMOSOME_BITS);
    crossover_at(a, b, cut)
}

/// With probability `mutation_prob` flips one uniformly chosen bit.
pub fn mutate(c: Chromosome, mutation_prob: f64, rng: &mut impl Rng) -> Chromosome {
    if rng.random_bool(mutation_prob.clamp(0.0, 1.0)) {
        c.flip(rng.random_range(0..CHROMOSOME_BITS))
    } else {
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaConfig {
    pub population_size: usize,
    pub elite_count: usize,
    /// Chance that a child gets one bit flipped.
    pub mutation_prob: f64,
    pub max_generations: usize,
    /// Evolution stops once the best fitness is at or below this value.
    pub target_fitness: FitnessValue,
    pub seed: u64,
    /// Individuals placed at the front of the initial population; the rest
    /// is random. Empty means evolution from scratch.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub initial_population: Vec<ShaperParams>,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population_size: 125,
            elite_count: 4,
            mutation_prob: 0.1,
            max_generations: 20_000,
            target_fitness: 0,
            seed: 0,
            initial_population: Vec::new(),
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population_size < 2 {
            return Err(Error::Config("population_size must be at least 2".into()));
        }
        if self.elite_count >= self.population_size {
            return Err(Error::Config(
                "elite_count must be smaller than population_size".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.mutation_prob) {
            return Err(Error::Config("mutation_prob must be in [0, 1]".into()));
        }
        if self.max_generations == 0 {
            return Err(Error::Config("max_generations must be at least 1".into()));
        }
        if self.initial_population.len() > self.population_size {
            return Err(Error::Config(
                "initial_population larger than population_size".into(),
            ));
        }
        Ok(())
    }

    pub fn with_seed(self, seed: u64) -> Self {
        GaConfig { seed, ..self }
    }

    pub fn with_initial(self, initial_population: Vec<ShaperParams>) -> Self {
        GaConfig {
            initial_population,
            ..self
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionResult {
    pub best_params: ShaperParams,
    pub best_chromosome: Chromosome,
    pub best_fitness: FitnessValue,
    /// Generations scored, counting the initial population.
    pub generations: usize,
    /// Calls made to the fitness function. Individuals already scored in the
    /// previous generation are not re-evaluated.
    pub evaluations: u64,
    /// Seconds.
    pub wall_time: f64,
    /// Best fitness of each generation.
    pub fitness_trace: Vec<FitnessValue>,
    pub seed: u64,
    pub converged: bool,
}

impl EvolutionResult {
    /// Equality ignoring wall-clock time.
    pub fn same_trajectory(&self, other: &EvolutionResult) -> bool {
        EvolutionResult {
            wall_time: 0.0,
            ..self.clone()
        } == EvolutionResult {
            wall_time: 0.0,
            ..other.clone()
        }
    }
}

/// A scored generation, handed to observers.
pub struct Generation<'a> {
    /// 1-based.
    pub index: usize,
    pub population: &'a [Chromosome],
    pub fitness: &'a [FitnessValue],
}

/// Runs the GA, scoring individuals one at a time.
pub fn evolve<F>(config: &GaConfig, eval_fn: F) -> Result<EvolutionResult>
where
    F: Fn(&ShaperParams) -> FitnessValue,
{
    evolve_observed(
        config,
        |pop: &[Chromosome]| pop.iter().map(|c| eval_fn(&decode(c))).collect(),
        |_| {},
    )
}

/// Runs the GA, scoring each generation on the rayon thread pool. The
/// result is identical to [`evolve`].
pub fn evolve_parallel<F>(config: &GaConfig, eval_fn: F) -> Result<EvolutionResult>
where
    F: Fn(&ShaperParams) -> FitnessValue + Sync,
{
    evolve_observed(
        config,
        |pop: &[Chromosome]| pop.par_iter().map(|c| eval_fn(&decode(c))).collect(),
        |_| {},
    )
}

/// Core loop. `score` maps a batch of chromosomes to their fitness in order;
/// `observe` sees every scored generation.
pub fn evolve_observed<S, O>(
    config: &GaConfig,
    mut score: S,
    mut observe: O,
) -> Result<EvolutionResult>
where
    S: FnMut(&[Chromosome]) -> Vec<FitnessValue>,
    O: FnMut(&Generation<'_>),
{
    config.validate()?;
    let start = Instant::now();
    let n = config.population_size;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut population: Vec<Chromosome> = (0..n).map(|_| Chromosome::random(&mut rng)).collect();
    for (slot, p) in population.iter_mut().zip(&config.initial_population) {
        *slot = encode(p);
    }
    let mut known: HashMap<Chromosome, FitnessValue> = HashMap::new();
    let mut trace = Vec::new();
    let mut evaluations = 0u64;

    loop {
        let mut fresh: Vec<Chromosome> = population
            .iter()
            .filter(|c| !known.contains_key(c))
            .copied()
            .collect();
        fresh.sort_unstable();
        fresh.dedup();
        let scores = score(&fresh);
        assert_eq!(
            scores.len(),
            fresh.len(),
            "scorer returned wrong batch size"
        );
        evaluations += fresh.len() as u64;
        let mut current: HashMap<Chromosome, FitnessValue> =
            fresh.into_iter().zip(scores).collect();
        for c in &population {
            if let Some(&f) = known.get(c) {
                current.insert(*c, f);
            }
        }
        let fitness: Vec<FitnessValue> = population.iter().map(|c| current[c]).collect();
        known = current;

        observe(&Generation {
            index: trace.len() + 1,
            population: &population,
            fitness: &fitness,
        });

        let mut ranked: Vec<usize> = (0..n).collect();
        ranked.sort_by_key(|&i| (fitness[i], population[i]));
        let best = ranked[0];
        trace.push(fitness[best]);

        let converged = fitness[best] <= config.target_fitness;
        if converged || trace.len() >= config.max_generations {
            return Ok(EvolutionResult {
                best_params: decode(&population[best]),
                best_chromosome: population[best],
                best_fitness: fitness[best],
                generations: trace.len(),
                evaluations,
                wall_time: start.elapsed().as_secs_f64(),
                fitness_trace: trace,
                seed: config.seed,
                converged,
            });
        }

        let mut offspring: Vec<Chromosome> = ranked[..config.elite_count]
            .iter()
            .map(|&i| population[i])
            .collect();
        while offspring.len() < n {
            let a = population[tournament_select(&fitness, &mut rng)];
            let b = population[tournament_select(&fitness, &mut rng)];
            let (c1, c2) = one_point_crossover(a, b, &mut rng);
            let c1 = mutate(c1, config.mutation_prob, &mut rng);
            let c2 = mutate(c2, config.mutation_prob, &mut rng);
            offspring.push(c1);
            if offspring.len() < n {
                offspring.push(c2);
            }
        }
        population = offspring;
    }
}
