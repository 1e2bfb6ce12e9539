//! Brute-force recovery of token secrets, attack-cost measurement, and
//! micro-instrumentation of the action evaluations.
//!
//! Two search strategies are implemented. The *full* mode enumerates
//! scalar pairs `(lambda, omega)` in row-major order and recomputes the
//! candidate token for each pair. The *reduced* mode exploits the
//! structural collapse of the scheme: a token depends on its secrets only
//! through `c = lambda * omega mod (p-1)`, because the token equals the
//! public-exponent token raised entry-wise to `c`. It therefore searches
//! the single residue `c` over `[1, p-2]`.
//!
//! The same collapse means the full enumeration meets a token match long
//! before it reaches the true pair: `(1, c)` already reproduces the
//! target token, so a token-equality scan exits within its first row.
//! [`CostPoint`] therefore reports the observed trials of each scan *and*
//! the row-major rank of the true pair — the price a pair-enumerating
//! attacker would pay if only the exact secret counted as a hit.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use std::time::{Duration, Instant};

use rand::Rng;

use crate::action::{
    entrywise_pow, two_sided_action, two_sided_action_counted, two_sided_action_naive_counted,
};
use crate::error::{Error, Result};
use crate::kap::{derive_key, make_token, PrivateKey, PublicParams, Token};
use crate::matrix::Dims;

/// How candidate secrets are enumerated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchMode {
    /// Scalar pairs `(lambda, omega)`, row-major over `[1, p-2]^2`.
    Full,
    /// The collapsed residue `c = lambda * omega mod (p-1)` over `[1, p-2]`.
    Reduced,
}

/// Whether a search may fan out across threads. `Parallel` quietly runs
/// sequentially when the `parallel` feature is compiled out. Either way
/// the outcome matches the sequential scan exactly: parallel searches
/// keep the lowest-index hit, independent of worker count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

/// Outcome of one recovery attempt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttackResult {
    /// Scalars reproducing the target token, if the search succeeded.
    pub recovered: Option<(u64, u64)>,
    /// Candidates evaluated; on success, the 1-based rank of the hit.
    pub trials: u64,
    pub elapsed: Duration,
}

impl AttackResult {
    pub fn found(&self) -> bool {
        self.recovered.is_some()
    }
}

/// Hard ceiling on enumerable candidates, guarding against accidentally
/// unbounded scans. Full mode stays under it for `p <= 8194`; reduced
/// mode for `p <= 2^26`.
pub const SEARCH_LIMIT: u128 = 1 << 26;

/// Number of candidates a search over `p` would enumerate, or an error
/// when that exceeds [`SEARCH_LIMIT`].
pub fn search_domain(p: u64, mode: SearchMode) -> Result<u64> {
    if p < 5 {
        return Err(Error::NotPrime(p));
    }
    let side = (p - 2) as u128;
    let domain = match mode {
        SearchMode::Full => side * side,
        SearchMode::Reduced => side,
    };
    if domain > SEARCH_LIMIT {
        return Err(Error::SearchSpaceTooLarge {
            domain,
            limit: SEARCH_LIMIT,
        });
    }
    Ok(domain as u64)
}

/// Searches for scalars that reproduce `target`, trying at most `budget`
/// candidates. See [`brute_force_recover_with`].
pub fn brute_force_recover(
    params: &PublicParams,
    target: &Token,
    budget: u64,
    mode: SearchMode,
) -> Result<AttackResult> {
    brute_force_recover_with(params, target, budget, mode, Execution::default())
}

/// Searches for scalars whose token equals `target`.
///
/// A successful hit is re-verified against the ordinary token pipeline.
/// Completeness: any token produced by in-range scalars is found within
/// the domain, because the collapsed residue of the true secret is
/// itself a candidate. The all-ones token is reachable both from
/// vanishing scalar products and (when the public token's entry orders
/// do not span the whole group) from honest secrets; the scan treats it
/// like any other target and reports the first preimage, if one exists.
pub fn brute_force_recover_with(
    params: &PublicParams,
    target: &Token,
    budget: u64,
    mode: SearchMode,
    exec: Execution,
) -> Result<AttackResult> {
    if target.matrix().dims() != params.dims() {
        return Err(Error::DimMismatch {
            left_rows: params.dims().rows(),
            left_cols: params.dims().cols(),
            right_rows: target.matrix().dims().rows(),
            right_cols: target.matrix().dims().cols(),
        });
    }
    if target.matrix().modulus() != params.modulus() {
        return Err(Error::ModulusMismatch(
            params.prime(),
            target.matrix().modulus().p(),
        ));
    }
    let domain = search_domain(params.prime(), mode)?;
    let start = Instant::now();
    let steps = domain.min(budget);
    let hit = match mode {
        SearchMode::Full => run_full(params, target, steps, exec),
        SearchMode::Reduced => run_reduced(params, target, steps, exec),
    };

    let result = match hit {
        None => AttackResult {
            recovered: None,
            trials: steps,
            elapsed: start.elapsed(),
        },
        Some(index) => {
            let (lambda, omega) = match mode {
                SearchMode::Full => index_to_pair(index, params.prime()),
                SearchMode::Reduced => (1, index + 1),
            };
            // The reduced scan matched via entry-wise powers; the scalar
            // law guarantees the pipeline agrees, and test builds check.
            let candidate = PrivateKey::from_scalars(params, lambda, omega)?;
            debug_assert_eq!(make_token(params, &candidate)?.matrix(), target.matrix());
            AttackResult {
                recovered: Some((lambda, omega)),
                trials: index + 1,
                elapsed: start.elapsed(),
            }
        }
    };
    Ok(result)
}

#[inline]
fn index_to_pair(index: u64, p: u64) -> (u64, u64) {
    let side = p - 2;
    (1 + index / side, 1 + index % side)
}

fn full_candidate_matches(params: &PublicParams, target: &Token, index: u64) -> bool {
    let (lambda, omega) = index_to_pair(index, params.prime());
    let key = PrivateKey::from_scalars(params, lambda, omega).expect("in-range scalars");
    match make_token(params, &key) {
        Ok(token) => token.matrix() == target.matrix(),
        Err(_) => false,
    }
}

fn run_full(params: &PublicParams, target: &Token, steps: u64, exec: Execution) -> Option<u64> {
    match exec {
        Execution::Sequential => (0..steps).find(|&t| full_candidate_matches(params, target, t)),
        #[cfg(feature = "parallel")]
        Execution::Parallel => (0..steps)
            .into_par_iter()
            .find_first(|&t| full_candidate_matches(params, target, t)),
        #[cfg(not(feature = "parallel"))]
        Execution::Parallel => (0..steps).find(|&t| full_candidate_matches(params, target, t)),
    }
}

fn run_reduced(params: &PublicParams, target: &Token, steps: u64, exec: Execution) -> Option<u64> {
    // Token of the unit scalars: everything else is an entry-wise power.
    let t0 = two_sided_action(params.x(), params.base(), params.y())
        .expect("params are internally consistent");
    match exec {
        Execution::Sequential => {
            // Incremental scan: stepping to the next candidate multiplies
            // each entry by t0 once — m*n multiplications, no pows.
            let modulus = params.modulus();
            let mut cur = t0.entries().to_vec();
            let want = target.matrix().entries();
            for step in 0..steps {
                if cur == want {
                    return Some(step);
                }
                for (c, &t) in cur.iter_mut().zip(t0.entries()) {
                    *c = modulus.mul(*c, t);
                }
            }
            None
        }
        #[cfg(feature = "parallel")]
        Execution::Parallel => (0..steps)
            .into_par_iter()
            .find_first(|&step| &entrywise_pow(&t0, step + 1) == target.matrix()),
        #[cfg(not(feature = "parallel"))]
        Execution::Parallel => {
            (0..steps).find(|&step| &entrywise_pow(&t0, step + 1) == target.matrix())
        }
    }
}

/// Aggregated trials of one search mode over a batch of instances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeStats {
    /// Instances where the scan found a matching secret. Both scans are
    /// complete over their domain, so anything below `samples` is a bug.
    pub found: u32,
    pub mean_trials: f64,
    pub max_trials: u64,
}

/// Attack-cost measurements for one prime.
#[derive(Debug, Clone, PartialEq)]
pub struct CostPoint {
    pub p: u64,
    pub rows: usize,
    pub cols: usize,
    pub samples: u32,
    /// Token-match pair enumeration, when requested. The structural
    /// collapse keeps its hits within the first enumeration row.
    pub full: Option<ModeStats>,
    /// Residue scan, when requested; mean expected near `(p-2)/2`.
    pub reduced: Option<ModeStats>,
    /// Row-major rank of the *true* pair, mean expected near
    /// `(p-2)^2 / 2`; measured on every sample regardless of modes.
    pub pair_rank_mean: f64,
    pub pair_rank_max: u64,
    /// Of the samples where some search ran, how many recovered secrets
    /// derived the same shared key as the true secret against a fresh
    /// peer token. `None` when no mode was requested.
    pub key_equivalent: Option<u32>,
    pub elapsed: Duration,
}

struct SampleStats {
    full: Option<(bool, u64)>,
    reduced: Option<(bool, u64)>,
    pair_rank: u64,
    key_equivalent: Option<bool>,
}

/// Runs recoveries over fresh instances at each prime in `primes` and
/// aggregates the observed costs. Every requested mode must clear
/// [`search_domain`] for every prime, or the whole curve is refused.
/// Instances are drawn sequentially from `rng` (a seeded run is fully
/// reproducible) and searched independently, in parallel when enabled.
pub fn attack_cost_curve<R: Rng>(
    primes: &[u64],
    dims: Dims,
    samples: u32,
    modes: &[SearchMode],
    rng: &mut R,
) -> Result<Vec<CostPoint>> {
    for &p in primes {
        if p < 5 {
            return Err(Error::NotPrime(p));
        }
        for &mode in modes {
            search_domain(p, mode)?;
        }
    }

    let mut points = Vec::with_capacity(primes.len());
    for &p in primes {
        let start = Instant::now();

        let mut instances = Vec::with_capacity(samples as usize);
        for _ in 0..samples {
            let params = PublicParams::with_prime(p, dims, rng)?;
            let secret = PrivateKey::generate(&params, rng);
            let peer = PrivateKey::generate(&params, rng);
            instances.push((params, secret, peer));
        }

        let stats = map_instances(&instances, |(params, secret, peer)| {
            sample_stats(params, secret, peer, modes)
        })?;

        let n = samples.max(1) as f64;
        let mode_stats = |pick: fn(&SampleStats) -> Option<(bool, u64)>| -> Option<ModeStats> {
            let runs: Vec<(bool, u64)> = stats.iter().filter_map(pick).collect();
            if runs.is_empty() {
                return None;
            }
            Some(ModeStats {
                found: runs.iter().filter(|(found, _)| *found).count() as u32,
                mean_trials: runs.iter().map(|&(_, t)| t as f64).sum::<f64>() / n,
                max_trials: runs.iter().map(|&(_, t)| t).max().unwrap_or(0),
            })
        };

        points.push(CostPoint {
            p,
            rows: dims.rows(),
            cols: dims.cols(),
            samples,
            full: mode_stats(|s| s.full),
            reduced: mode_stats(|s| s.reduced),
            pair_rank_mean: stats.iter().map(|s| s.pair_rank as f64).sum::<f64>() / n,
            pair_rank_max: stats.iter().map(|s| s.pair_rank).max().unwrap_or(0),
            key_equivalent: if modes.is_empty() {
                None
            } else {
                Some(
                    stats
                        .iter()
                        .filter(|s| s.key_equivalent == Some(true))
                        .count() as u32,
                )
            },
            elapsed: start.elapsed(),
        });
    }
    Ok(points)
}

fn map_instances<T, F>(
    instances: &[(PublicParams, PrivateKey, PrivateKey)],
    f: F,
) -> Result<Vec<T>>
where
    F: Fn(&(PublicParams, PrivateKey, PrivateKey)) -> Result<T> + Sync + Send,
    T: Send,
{
    #[cfg(feature = "parallel")]
    {
        instances.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        instances.iter().map(f).collect()
    }
}

/// Outcome of one measured recovery: found flag, trials spent, and the
/// recovered scalars if any.
type ModeRun = Option<(bool, u64, Option<(u64, u64)>)>;

fn sample_stats(
    params: &PublicParams,
    secret: &PrivateKey,
    peer: &PrivateKey,
    modes: &[SearchMode],
) -> Result<SampleStats> {
    let target = make_token(params, secret)?;

    let run = |mode: SearchMode| -> Result<ModeRun> {
        if !modes.contains(&mode) {
            return Ok(None);
        }
        let domain = search_domain(params.prime(), mode)?;
        let out =
            brute_force_recover_with(params, &target, domain, mode, Execution::Sequential)?;
        Ok(Some((out.found(), out.trials, out.recovered)))
    };

    let full = run(SearchMode::Full)?;
    let reduced = run(SearchMode::Reduced)?;

    let side = params.prime() - 2;
    let pair_rank = (secret.lambda() - 1) * side + secret.omega();

    // Does a recovered secret agree with the true one against a fresh
    // peer token — breaking the session rather than just the token?
    let recovered = reduced
        .and_then(|(_, _, r)| r)
        .or(full.and_then(|(_, _, r)| r));
    let key_equivalent = match (full.is_some() || reduced.is_some(), recovered) {
        (false, _) => None,
        (true, None) => Some(false),
        (true, Some((lambda, omega))) => {
            let peer_token = make_token(params, peer)?;
            let candidate = PrivateKey::from_scalars(params, lambda, omega)?;
            let true_key = derive_key(params, secret, &peer_token)?;
            let candidate_key = derive_key(params, &candidate, &peer_token)?;
            Some(true_key.session_key() == candidate_key.session_key())
        }
    };

    Ok(SampleStats {
        full: full.map(|(found, trials, _)| (found, trials)),
        reduced: reduced.map(|(found, trials, _)| (found, trials)),
        pair_rank,
        key_equivalent,
    })
}

/// Median wall-clock timings for token construction and key derivation,
/// plus exact exponentiation counts for both evaluation strategies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchReport {
    pub p_bits: u32,
    pub rows: usize,
    pub cols: usize,
    pub iterations: u32,
    pub token_median: Duration,
    pub derive_median: Duration,
    /// Exponentiations per two-sided action, factored: `n^3 + m*n^2`.
    pub modexp_factored: u64,
    /// Exponentiations per two-sided action, direct: `m*n^3`.
    pub modexp_naive: u64,
}

fn median(mut xs: Vec<Duration>) -> Duration {
    xs.sort();
    xs[xs.len() / 2]
}

/// Times token construction and key derivation over fresh parameters.
pub fn bench<R: Rng>(
    p_bits: u32,
    dims: Dims,
    iterations: u32,
    rng: &mut R,
) -> Result<BenchReport> {
    let iterations = iterations.max(1);
    let params = PublicParams::generate(p_bits, dims, rng)?;
    let alice = PrivateKey::generate(&params, rng);
    let bob = PrivateKey::generate(&params, rng);
    let token_b = make_token(&params, &bob)?;

    let mut token_times = Vec::with_capacity(iterations as usize);
    let mut derive_times = Vec::with_capacity(iterations as usize);
    for _ in 0..iterations {
        let t = Instant::now();
        let token = make_token(&params, &alice)?;
        token_times.push(t.elapsed());
        std::hint::black_box(token);

        let t = Instant::now();
        let key = derive_key(&params, &alice, &token_b)?;
        derive_times.push(t.elapsed());
        std::hint::black_box(key);
    }

    let (fast, modexp_factored) =
        two_sided_action_counted(alice.left(), params.base(), alice.right())?;
    let (slow, modexp_naive) =
        two_sided_action_naive_counted(alice.left(), params.base(), alice.right())?;
    debug_assert_eq!(fast, slow);

    Ok(BenchReport {
        p_bits,
        rows: dims.rows(),
        cols: dims.cols(),
        iterations,
        token_median: median(token_times),
        derive_median: median(derive_times),
        modexp_factored,
        modexp_naive,
    })
}
