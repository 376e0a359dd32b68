//! Acceptance battery. Each criterion is checked directly against pinned
//! values, cross-checked with the suite verdict, and held to a time budget.
//! Prints one PASS/FAIL line per criterion; exits non-zero if any fails.

use std::collections::BTreeSet;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_rational::BigRational;

use spectral_multiplicity::circle::{CirclePoint, GeneratorAllocator};
use spectral_multiplicity::markov::{
    coupling_from_markov, dimension_identity, inclusion_exclusion_identity, markov_from_coupling,
    project_markov, random_coupling, random_coupling_onto, random_space, FactorStructure,
};
use spectral_multiplicity::measure::generic_measure;
use spectral_multiplicity::permgroup::{closure, orbit_count_free, Perm};
use spectral_multiplicity::spectral::{
    check_krot, check_translate_singularity, check_vproste, cs_criterion, fock_multiplicity_set,
    girsanov_step, minimal_m_for_cs, nonsimple_counterexample, Caps,
};
use spectral_multiplicity::suite::{
    random_relation_measure, run_criterion, two_relation_measure, SuiteConfig,
};

use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20240601;

fn config() -> SuiteConfig {
    SuiteConfig {
        seed: SEED,
        caps: Caps::default(),
    }
}

type Check = std::result::Result<(), String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Check {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn suite_agrees(id: u8) -> Check {
    let r = run_criterion(id, &config());
    ensure(
        r.passed,
        format!("suite verdict for criterion {id} is FAIL: {}", r.details),
    )
}

fn factorial(n: u64) -> u64 {
    (1..=n).product()
}

fn c1_orbit_formula() -> Check {
    let cat: Vec<(usize, Vec<Vec<usize>>)> = vec![
        (3, vec![]),
        (3, vec![vec![1, 0, 2]]),
        (3, vec![vec![1, 2, 0]]),
        (3, vec![vec![1, 0, 2], vec![1, 2, 0]]),
        (4, vec![]),
        (4, vec![vec![1, 0, 2, 3]]),
        (4, vec![vec![1, 0, 3, 2]]),
        (4, vec![vec![1, 2, 3, 0]]),
        (4, vec![vec![1, 0, 3, 2], vec![2, 3, 0, 1]]),
        (4, vec![vec![1, 2, 3, 0], vec![2, 1, 0, 3]]),
        (4, vec![vec![1, 2, 0, 3], vec![0, 2, 3, 1]]),
        (4, vec![vec![1, 2, 3, 0], vec![1, 0, 2, 3]]),
    ];
    let expected_orders = [1u64, 2, 3, 6, 1, 2, 2, 4, 4, 8, 12, 24];
    for ((n, gens), order) in cat.into_iter().zip(expected_orders) {
        let gens: Vec<Perm> = gens.into_iter().map(|g| Perm::new(g).unwrap()).collect();
        let g = closure(n, &gens, 8).map_err(|e| e.to_string())?;
        ensure(
            g.order() == order,
            format!("order {} != {order}", g.order()),
        )?;
        let c = orbit_count_free(&g).map_err(|e| e.to_string())?;
        ensure(
            c.enumerated == factorial(n as u64) / order,
            format!("n={n} #G={order}: {} orbits", c.enumerated),
        )?;
    }
    suite_agrees(1)
}

fn c2_krot() -> Check {
    for (k, m, expected) in [(1, 2, 2), (1, 3, 6), (2, 2, 6), (2, 3, 90), (3, 2, 20)] {
        let d = m * k + 2;
        let r = check_krot(k, m, d, &Caps::default()).map_err(|e| e.to_string())?;
        ensure(
            r.generic_value == Some(expected) && r.homogeneous_on_generic,
            format!(
                "(k,m)=({k},{m}): generic {:?}, expected {expected}",
                r.generic_value
            ),
        )?;
        ensure(
            r.subgroup_agrees == Some(true),
            format!("({k},{m}) subgroup route disagrees"),
        )?;
        ensure(
            r.subgroup_generic_value == Some(expected),
            format!("({k},{m}) subgroup value"),
        )?;
        if (d as u64).pow((m * k) as u32) <= 4096 {
            ensure(
                r.matrix_agrees == Some(true),
                format!("({k},{m}) matrix route disagrees"),
            )?;
            ensure(
                r.matrix_generic_value == Some(expected),
                format!("({k},{m}) matrix value"),
            )?;
        }
    }
    suite_agrees(2)
}

fn c3_fock() -> Check {
    let r = fock_multiplicity_set(2, 4, 8, &Caps::default()).map_err(|e| e.to_string())?;
    let expected: BTreeSet<u64> = [1, 3, 15, 105].into();
    ensure(
        r.multiplicities == expected,
        format!("got {:?}", r.multiplicities),
    )?;
    ensure(r.levels_disjoint, "level supports overlap")?;
    suite_agrees(3)
}

fn c4_cs() -> Check {
    ensure(
        cs_criterion(1, 2, 2).map_err(|e| e.to_string())?.holds,
        "cs(1,2,2) false",
    )?;
    // a_m evaluated from scratch with big integers.
    let fact = |n: u64| (1..=n).fold(BigUint::from(1u32), |a, i| a * i);
    let a = |k: u64, m: u64| {
        BigRational::new(
            (fact(m).pow(k as u32 + 1) * fact(k).pow(m as u32)).into(),
            fact(m * k).into(),
        )
    };
    for (k, m) in [(1, 2), (2, 2), (3, 5)] {
        let r = minimal_m_for_cs(k, 30).map_err(|e| e.to_string())?;
        ensure(r.m == m, format!("k={k}: m={} expected {m}", r.m))?;
        let own: Vec<BigRational> = (1..=m).map(|j| a(k, j)).collect();
        ensure(r.sequence == own, format!("k={k}: sequence mismatch"))?;
    }
    let r = minimal_m_for_cs(2, 30).unwrap();
    ensure(
        r.sequence[1] == BigRational::new(4.into(), 3.into()),
        "a_2 != 4/3 for k=2",
    )?;
    suite_agrees(4)
}

fn c5_translate() -> Check {
    let mut alloc = GeneratorAllocator::new();
    let sigma = generic_measure(4, &mut alloc).unwrap();
    let caps = Caps::default();
    for (n, m) in (1..=3).cartesian_product(1..=3) {
        let a = alloc.fresh();
        let s = check_translate_singularity(&sigma, n, m, &a, &caps).map_err(|e| e.to_string())?;
        ensure(s, format!("n={n} m={m} fresh a: not singular"))?;
        if n == m {
            let s = check_translate_singularity(&sigma, n, m, &CirclePoint::identity(), &caps)
                .map_err(|e| e.to_string())?;
            ensure(!s, format!("n=m={n}, a=1: reported singular"))?;
        }
    }
    suite_agrees(5)
}

fn c6_girsanov() -> Check {
    let r =
        girsanov_step(&two_relation_measure(), 2, &Caps::default()).map_err(|e| e.to_string())?;
    ensure(r.q == 2, format!("q = {}", r.q))?;
    ensure(
        r.orbit_count >= 4,
        format!("level-4 orbit count {}", r.orbit_count),
    )?;
    let distinct: BTreeSet<Vec<CirclePoint>> = r
        .witnesses
        .iter()
        .map(|w| w.iter().cloned().sorted().collect())
        .collect();
    ensure(
        distinct.len() == 4,
        format!("{} witness multisets", distinct.len()),
    )?;
    suite_agrees(6)
}

fn c7_nonsimple() -> Check {
    let mut alloc = GeneratorAllocator::new();
    let sigma = generic_measure(2, &mut alloc).unwrap();
    let a = alloc.fresh();
    let r = nonsimple_counterexample(&sigma, &a, &Caps::default()).map_err(|e| e.to_string())?;
    let w = r.witness.ok_or("no two-orbit fiber")?;
    ensure(
        w.multisets.len() == 2,
        format!("fiber has {} orbits", w.multisets.len()),
    )?;
    ensure(!r.overlap.is_empty(), "tau and its translate are disjoint")?;
    suite_agrees(7)
}

fn c8_vproste() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    for i in 0..200 {
        let relations = rng.gen_range(0..=2);
        let sigma = random_relation_measure(&mut rng, 6, relations);
        let r = check_vproste(&sigma, 4, &Caps::default()).map_err(|e| e.to_string())?;
        ensure(
            r.passed,
            format!("instance {i} violates monotone simplicity: {sigma}"),
        )?;
    }
    suite_agrees(8)
}

fn c9_markov() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    for _ in 0..50 {
        let (rows, cols) = (rng.gen_range(1..=4), rng.gen_range(1..=4));
        let lambda = random_coupling(&mut rng, rows, cols, 7);
        let phi = markov_from_coupling(&lambda);
        ensure(coupling_from_markov(&phi) == lambda, "coupling round trip")?;
        ensure(
            markov_from_coupling(&coupling_from_markov(&phi)) == phi,
            "operator round trip",
        )?;
    }
    for n in 1..=3 {
        for dims in (0..n).map(|_| 1..=3usize).multi_cartesian_product() {
            let comps = dims.iter().map(|&d| random_space(&mut rng, d, 4)).collect();
            let factor = FactorStructure::new(comps).unwrap();
            let lambda = random_coupling_onto(&mut rng, 2, &factor.product_space(), 5);
            let phi = markov_from_coupling(&lambda);
            for sel in (0..=n).flat_map(|l| (0..n).combinations(l)) {
                let c = project_markov(&phi, &factor, &sel).map_err(|e| e.to_string())?;
                ensure(
                    c.agree,
                    format!("projection identity fails for {dims:?} {sel:?}"),
                )?;
            }
        }
    }
    for n in 2..=4 {
        for _ in 0..2 {
            let dims: Vec<usize> = (0..n).map(|_| rng.gen_range(1..=3)).collect();
            let comps = dims.iter().map(|&d| random_space(&mut rng, d, 4)).collect();
            let r = inclusion_exclusion_identity(&FactorStructure::new(comps).unwrap(), 4096)
                .map_err(|e| e.to_string())?;
            ensure(
                r.tensor_expansion && r.factor_expansion,
                format!("expansion fails for {dims:?}"),
            )?;
        }
    }
    let r = inclusion_exclusion_identity(&FactorStructure::uniform(&[3, 3, 3, 3]).unwrap(), 4096)
        .map_err(|e| e.to_string())?;
    ensure(
        r.passed && r.rank_identity == Some(true),
        "3x3x3x3 identity",
    )?;
    for _ in 0..20 {
        let dims: Vec<usize> = (0..rng.gen_range(1..=6))
            .map(|_| rng.gen_range(1..=6))
            .collect();
        let (lhs, rhs) = dimension_identity(&dims);
        let subset_sum: u64 = (1u32..1 << dims.len())
            .map(|mask| {
                (0..dims.len())
                    .filter(|i| mask & (1 << i) != 0)
                    .map(|i| dims[i] as u64 - 1)
                    .product::<u64>()
            })
            .sum();
        let expansion: u64 = dims.iter().map(|&d| d as u64).product::<u64>() - 1;
        ensure(
            lhs == expansion && rhs == subset_sum && lhs == rhs,
            format!("dimension identity for {dims:?}"),
        )?;
    }
    suite_agrees(9)
}

fn c10_determinism() -> Check {
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_specmult"))
            .args(["--format", "json", "--seed", &SEED.to_string(), "suite"])
            .output()
            .map_err(|e| e.to_string())
    };
    let first = run()?;
    let second = run()?;
    ensure(
        first.status.code() == Some(0),
        format!("suite exit {:?}", first.status.code()),
    )?;
    ensure(!first.stdout.is_empty(), "empty suite output")?;
    ensure(
        first.stdout == second.stdout,
        "suite JSON differs between runs",
    )?;
    let v: serde_json::Value = serde_json::from_slice(&first.stdout).map_err(|e| e.to_string())?;
    ensure(v["seed"] == SEED, "seed not recorded")?;
    ensure(
        v["report"]["criteria"].as_array().map(Vec::len) == Some(10),
        "criteria count",
    )?;
    suite_agrees(10)
}

type Criterion = (u8, &'static str, Duration, fn() -> Check);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        (1, "orbit formula", Duration::from_secs(1), c1_orbit_formula),
        (
            2,
            "block subgroup multiplicities",
            Duration::from_secs(60),
            c2_krot,
        ),
        (
            3,
            "symmetric Fock multiplicity set",
            Duration::from_secs(120),
            c3_fock,
        ),
        (
            4,
            "convolution singularity arithmetic",
            Duration::from_secs(1),
            c4_cs,
        ),
        (
            5,
            "translate singularity",
            Duration::from_secs(10),
            c5_translate,
        ),
        (
            6,
            "multiplicity amplification",
            Duration::from_secs(60),
            c6_girsanov,
        ),
        (
            7,
            "non-simplicity counterexample",
            Duration::from_secs(1),
            c7_nonsimple,
        ),
        (
            8,
            "monotone simplicity",
            Duration::from_secs(120),
            c8_vproste,
        ),
        (9, "Markov identities", Duration::from_secs(30), c9_markov),
        (10, "determinism", Duration::from_secs(300), c10_determinism),
    ];
    let mut failures = 0;
    for (id, name, budget, check) in criteria {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let outcome = outcome.and_then(|()| {
            ensure(
                elapsed <= budget,
                format!("took {elapsed:?}, budget {budget:?}"),
            )
        });
        match outcome {
            Ok(()) => println!(
                "PASS  {id:>2}  {name}  ({:.3}s / {}s)",
                elapsed.as_secs_f64(),
                budget.as_secs()
            ),
            Err(msg) => {
                failures += 1;
                println!(
                    "FAIL  {id:>2}  {name}  ({:.3}s / {}s): {msg}",
                    elapsed.as_secs_f64(),
                    budget.as_secs()
                );
            }
        }
    }
    println!("{} of 10 criteria passed", 10 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
