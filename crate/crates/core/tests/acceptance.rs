//! Acceptance suite: one test per criterion, each printing a pass/fail line.
//! Run with `cargo test -p bincsp --test acceptance -- --nocapture` to see
//! the lines; the test verdicts carry the same information.

mod common;

use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use bincsp::analyzer::{
    analyze_language, is_critical_ternary, SearchOptions, Verdict,
};
use bincsp::binary_core::BinaryCore;
use bincsp::generator::random_instance;
use bincsp::impgraph::{build_graph, find_cycle, find_sink_singleton, narrow_verified};
use bincsp::minimality::{
    establish_minimality, establish_minimality_with_order, eq_only_pairs, RevisionOrder,
};
use bincsp::orbits::{enumerate_orbits, LabelSet, Orbit, PairLabel};
use bincsp::relalg::{bowtie, bowtie3, conjunction_of_pairs, exist_join, Relation, SetOp};
use bincsp::solver::{brute_force_solve, solve, verify_certificate, SolveResult};

use common::{load_core, load_language, oracle_exist_join};

fn pass(criterion: usize, what: &str) {
    println!("ACCEPTANCE {criterion} ({what}): PASS");
}

/// Independent partition counter (restricted growth strings).
fn bell(n: usize) -> usize {
    fn rec(depth: usize, n: usize, max: usize) -> usize {
        if depth == n {
            return 1;
        }
        (0..=max + 1).map(|b| rec(depth + 1, n, max.max(b))).sum()
    }
    if n == 0 {
        1
    } else {
        rec(1, n, 0)
    }
}

#[test]
fn acceptance_1_orbit_count_oracle_equivalence() {
    let start = Instant::now();
    let equality = load_core("equality");
    // Frozen expected values, recomputed by the independent partition
    // enumerator: Bell(2..=5) = 2, 5, 15, 52.
    let frozen = [(2usize, 2usize), (3, 5), (4, 15), (5, 52)];
    for (k, expected) in frozen {
        assert_eq!(bell(k), expected, "oracle disagrees with frozen value");
        assert_eq!(
            enumerate_orbits(&equality, k).unwrap().len(),
            expected,
            "equality core k={k}"
        );
    }
    let graph = load_core("random-graph");
    // Independent count: partitions weighted by labelings 2^(pairs of blocks).
    let oracle: usize = common::all_partitions(3)
        .iter()
        .map(|p| {
            let blocks = p.iter().max().unwrap() + 1;
            1usize << (blocks * (blocks - 1) / 2)
        })
        .sum();
    assert_eq!(oracle, 15);
    assert_eq!(enumerate_orbits(&graph, 3).unwrap().len(), 15);
    assert!(start.elapsed() < Duration::from_secs(1), "criterion 1 over budget");
    pass(1, "orbit-count oracle equivalence");
}

struct Campaign {
    total: usize,
    agreements: usize,
    sat_certificates_verified: bool,
    clause_language_hard_runs: usize,
    elapsed: Duration,
}

fn campaign() -> &'static Campaign {
    static CAMPAIGN: OnceLock<Campaign> = OnceLock::new();
    CAMPAIGN.get_or_init(run_campaign)
}

fn run_campaign() -> Campaign {
    let start = Instant::now();
    let equality = load_core("equality");
    let graph = load_core("random-graph");
    // Disequality clauses over the equality core; one-clause relations over
    // the random graph core (conjunctions of clauses arise as instances).
    let neq_language: Vec<(String, Relation)> = vec![
        ("neq".into(), Relation::from_formula(&equality, 2, "1!=2").unwrap()),
        ("clause2".into(), Relation::from_formula(&equality, 4, "1!=2 | 3!=4").unwrap()),
        ("clause21".into(), Relation::from_formula(&equality, 3, "1!=2 | 2!=3").unwrap()),
    ];
    let clause_language = load_language("graph-clauses", &graph);

    let mut rng = ChaCha8Rng::seed_from_u64(0xb1c5);
    let mut total = 0usize;
    let mut agreements = 0usize;
    let mut sat_ok = true;
    let mut hard_runs = 0usize;

    let run_batch = |core: &BinaryCore,
                         language: &[(String, Relation)],
                         runs: usize,
                         rng: &mut ChaCha8Rng,
                         count_hard: &mut usize,
                         total: &mut usize,
                         agreements: &mut usize,
                         sat_ok: &mut bool| {
        for _ in 0..runs {
            let n_vars = rng.gen_range(2..=6);
            let n_constraints = rng.gen_range(1..=5);
            let inst = random_instance(rng, language, n_vars, n_constraints).unwrap();
            *total += 1;
            let oracle = brute_force_solve(&inst, core, 8).unwrap();
            match solve(&inst, core).unwrap() {
                SolveResult::Sat { certificate, .. } => {
                    if oracle.is_some() {
                        *agreements += 1;
                    }
                    if !verify_certificate(&certificate, &inst, core) {
                        *sat_ok = false;
                    }
                    // The oracle's certificate verifies too.
                    if let Some(cert) = &oracle {
                        if !verify_certificate(cert, &inst, core) {
                            *sat_ok = false;
                        }
                    }
                }
                SolveResult::Unsat { .. } => {
                    if oracle.is_none() {
                        *agreements += 1;
                    }
                }
                SolveResult::ImplicationallyHard { .. } => {
                    *count_hard += 1;
                }
            }
        }
    };

    let mut unused = 0usize;
    run_batch(
        &equality,
        &neq_language,
        250,
        &mut rng,
        &mut unused,
        &mut total,
        &mut agreements,
        &mut sat_ok,
    );
    run_batch(
        &graph,
        &clause_language,
        250,
        &mut rng,
        &mut hard_runs,
        &mut total,
        &mut agreements,
        &mut sat_ok,
    );
    Campaign {
        total,
        agreements,
        sat_certificates_verified: sat_ok,
        clause_language_hard_runs: hard_runs + unused,
        elapsed: start.elapsed(),
    }
}

#[test]
fn acceptance_2_solver_oracle_agreement() {
    let c = campaign();
    assert!(c.total >= 500, "need at least 500 runs, got {}", c.total);
    assert_eq!(
        c.agreements, c.total,
        "solver and oracle must agree on all runs"
    );
    assert!(c.sat_certificates_verified, "all SAT certificates verify");
    assert!(
        c.elapsed < Duration::from_secs(300),
        "criterion 2 over budget: {:?}",
        c.elapsed
    );
    pass(2, "solver-oracle agreement on 500+ randomized instances");
}

#[test]
fn acceptance_3_alternation_cycle_reproduction() {
    let start = Instant::now();
    let core = load_core("two-cliques");
    let language = load_language("alternation", &core);
    let r = &language[0].1;
    let inst = bincsp::minimality::Instance::new(
        vec!["x1".into(), "x2".into(), "x3".into()],
        vec![bincsp::minimality::Constraint {
            scope: vec![0, 1, 2],
            relation: r.clone(),
        }],
    )
    .unwrap();
    let minimal = establish_minimality(&inst, 2, 3, &core).unwrap();
    assert!(!minimal.trivial);
    let graph = build_graph(&minimal.instance, &core).unwrap();
    assert!(
        find_cycle(&graph).is_some(),
        "the single-constraint instance must have a cyclic implication graph"
    );
    assert!(start.elapsed() < Duration::from_secs(1), "criterion 3 over budget");
    pass(3, "single-constraint cyclic implication graph");
}

#[test]
fn acceptance_4_distinctness_witness_reproduction() {
    let start = Instant::now();
    for name in ["random-graph", "liberal-digraph"] {
        let core = load_core(name);
        let sig = core.signature();
        let mut orbitals = sig.orbitals();
        let o1 = Relation::from_label_set(LabelSet::singleton(PairLabel::Orbital(
            orbitals.next().unwrap(),
        )));
        let o2 = Relation::from_label_set(LabelSet::singleton(PairLabel::Orbital(
            orbitals.next().unwrap(),
        )));
        // ∃x0 O1(x0,x1) ∧ O2(x0,x2) for distinct anti-reflexive orbitals.
        let atoms: [(&Relation, &[usize]); 2] = [(&o1, &[2, 0]), (&o2, &[2, 1])];
        let psi = exist_join(&core, &atoms, &[0, 1]).unwrap();
        assert_eq!(
            psi.label_set(),
            LabelSet::all_orbitals(sig),
            "psi must define exactly the disequality relation over {name}"
        );
    }
    assert!(start.elapsed() < Duration::from_secs(1), "criterion 4 over budget");
    pass(4, "distinctness witness evaluates to the disequality relation");
}

#[test]
fn acceptance_5_narrowing_preservation() {
    let core = load_core("random-graph");
    let sig = core.signature();
    let language = load_language("graph-clauses", &core);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut qualifying = 0usize;
    let mut preserved = 0usize;
    let mut attempts = 0usize;
    while qualifying < 100 && attempts < 3000 {
        attempts += 1;
        let n_vars = rng.gen_range(3..=5);
        let n_constraints = rng.gen_range(1..=4);
        let inst = random_instance(&mut rng, &language, n_vars, n_constraints).unwrap();
        let outcome = establish_minimality(&inst, 2, 3, &core).unwrap();
        if outcome.trivial {
            continue;
        }
        let minimal = outcome.instance;
        if !minimal.entails_no_equalities(sig) || !eq_only_pairs(&minimal, sig).unwrap().is_empty()
        {
            continue;
        }
        let graph = build_graph(&minimal, &core).unwrap();
        if find_cycle(&graph).is_some() {
            continue;
        }
        let Some(sink) = find_sink_singleton(&graph) else {
            continue;
        };
        qualifying += 1;
        let vertex = &graph.vertices[sink];
        if narrow_verified(&minimal, vertex.pair, &vertex.c, &core, 3).is_ok() {
            preserved += 1;
        }
    }
    assert_eq!(qualifying, 100, "not enough qualifying instances generated");
    assert_eq!(preserved, 100, "narrowing must preserve minimality and non-triviality");
    pass(5, "narrowing at a sink preserves minimality in 100/100 cases");
}

#[test]
fn acceptance_6_minimization_confluence() {
    let equality = load_core("equality");
    let graph = load_core("random-graph");
    let neq_language: Vec<(String, Relation)> = vec![
        ("neq".into(), Relation::from_formula(&equality, 2, "1!=2").unwrap()),
        ("clause2".into(), Relation::from_formula(&equality, 4, "1!=2 | 3!=4").unwrap()),
    ];
    let clause_language = load_language("graph-clauses", &graph);
    let mut rng = ChaCha8Rng::seed_from_u64(0xc0f1);
    for case in 0..100 {
        let (core, language) = if case % 2 == 0 {
            (&equality, &neq_language)
        } else {
            (&graph, &clause_language)
        };
        let n_vars = rng.gen_range(2..=5);
        let n_constraints = rng.gen_range(1..=4);
        let inst = random_instance(&mut rng, language, n_vars, n_constraints).unwrap();
        let reference = establish_minimality(&inst, 2, 3, core).unwrap();
        for seed in 0..10u64 {
            let shuffled = establish_minimality_with_order(
                &inst,
                2,
                3,
                core,
                RevisionOrder::Shuffled(seed),
            )
            .unwrap();
            assert_eq!(
                shuffled.instance.constraints.len(),
                reference.instance.constraints.len()
            );
            for (a, b) in shuffled
                .instance
                .constraints
                .iter()
                .zip(&reference.instance.constraints)
            {
                assert_eq!(a.scope, b.scope);
                assert_eq!(a.relation, b.relation, "fixpoints differ across orders");
            }
        }
    }
    pass(6, "minimization fixpoint identical across 100 x 10 revision orders");
}

#[test]
fn acceptance_7_critical_ternary_certification() {
    let core = load_core("random-graph");
    // The mirrored-pair relation is accepted.
    let r = Relation::from_formula(&core, 3, "(E(1,2) & E(2,3)) | (N(1,2) & N(2,3))").unwrap();
    let e = Relation::from_formula(&core, 2, "E(1,2)").unwrap();
    let n = Relation::from_formula(&core, 2, "N(1,2)").unwrap();
    assert!(is_critical_ternary(&core, &r, &e, &n, &e, &n));
    // Mutation: deleting any orbit family flips the verdict.
    for family in ["E(1,2) & E(2,3)", "N(1,2) & N(2,3)"] {
        let fam = Relation::from_formula(&core, 3, family).unwrap();
        let mutated = r.combine(&fam, SetOp::Minus).unwrap();
        assert!(!is_critical_ternary(&core, &mutated, &e, &n, &e, &n));
    }
    // Full analyzer pipeline on the liberalized implicationally hard
    // language: the alternation relation over the bound-free graph core.
    let language = load_language("alternation", &core);
    let report = analyze_language(&core, &language, SearchOptions::default()).unwrap();
    match report.verdict {
        Verdict::NoBoundedStrictWidth { witness, .. } => {
            assert!(witness.verify(&core).unwrap(), "witness must replay and verify");
            assert!(!witness.trace.is_empty());
        }
        other => panic!("expected a no-bounded-strict-width verdict, got {other:?}"),
    }
    pass(7, "critical-ternary certification with replayable trace and mutations");
}

#[test]
fn acceptance_8_bowtie_law_checks() {
    let graph = load_core("random-graph");
    let digraph = load_core("liberal-digraph");
    let mut rng = ChaCha8Rng::seed_from_u64(0xb041e);
    let mut checked = 0usize;

    // 120 ternary cases over both liberal cores, oracle cross-checked.
    for case in 0..120 {
        let core = if case % 2 == 0 { &graph } else { &digraph };
        checked += 1;
        ternary_law_case(core, &mut rng);
    }
    // 40 quaternary bowtie and 40 bowtie3 cases over the graph core.
    for _ in 0..40 {
        checked += 1;
        quaternary_law_case(&graph, &mut rng);
    }
    for _ in 0..40 {
        checked += 1;
        bowtie3_law_case(&graph, &mut rng);
    }
    assert_eq!(checked, 200);
    pass(8, "bowtie laws hold in 200/200 sampled cases with tuple-level cross-check");
}

fn random_orbital(core: &BinaryCore, rng: &mut ChaCha8Rng) -> bincsp::binary_core::OrbitalId {
    let k = core.orbital_count();
    bincsp::binary_core::OrbitalId::from_index(rng.gen_range(0..k))
}

/// A random relation containing `seed` plus arbitrary extra orbits.
fn relation_containing(
    core: &BinaryCore,
    arity: usize,
    seed: &Relation,
    rng: &mut ChaCha8Rng,
) -> Relation {
    let all: Vec<Orbit> = enumerate_orbits(core, arity).unwrap().into_iter().collect();
    let mut orbits: Vec<Orbit> = seed.orbits().cloned().collect();
    for o in all {
        if rng.gen_bool(0.25) {
            orbits.push(o);
        }
    }
    Relation::new(arity, orbits).unwrap()
}

fn ternary_law_case(core: &BinaryCore, rng: &mut ChaCha8Rng) {
    let sig = core.signature();
    let (o1, o2, o3) = (
        random_orbital(core, rng),
        random_orbital(core, rng),
        random_orbital(core, rng),
    );
    let orb = |o| LabelSet::singleton(PairLabel::Orbital(o));
    // R1 contains all injective O1 O2-tuples, R2 all injective O2⁻¹ O3.
    let seed1 = injective_family(core, &[((0, 1), orb(o1)), ((1, 2), orb(o2))]);
    let seed2 = injective_family(core, &[((0, 1), orb(sig.inverse(o2))), ((1, 2), orb(o3))]);
    let r1 = relation_containing(core, 3, &seed1, rng);
    let r2 = relation_containing(core, 3, &seed2, rng);
    let r3 = bowtie(core, &r1, &r2).unwrap();
    // All injective O1 O3-tuples appear.
    let expected_injective = injective_family(core, &[((0, 1), orb(o1)), ((1, 2), orb(o3))]);
    assert!(
        expected_injective.is_subset(&r3),
        "bowtie misses injective tuples"
    );
    // The full product family appears, including the merged case.
    let full_family = conjunction_of_pairs(core, 3, &[((0, 1), orb(o1)), ((1, 2), orb(o3))]);
    assert!(full_family.is_subset(&r3), "bowtie misses the product family");
    // Tuple-level cross-check of the whole join.
    let atoms: [(&Relation, &[usize]); 2] = [(&r1, &[0, 1, 3]), (&r2, &[3, 1, 2])];
    assert_eq!(r3, oracle_exist_join(core, &atoms, &[0, 1, 2]));
}

fn quaternary_law_case(core: &BinaryCore, rng: &mut ChaCha8Rng) {
    let sig = core.signature();
    let (o1, o2, o3) = (
        random_orbital(core, rng),
        random_orbital(core, rng),
        random_orbital(core, rng),
    );
    let orb = |o| LabelSet::singleton(PairLabel::Orbital(o));
    let seed1 = injective_family(core, &[((0, 1), orb(o1)), ((2, 3), orb(o2))]);
    let seed2 = injective_family(core, &[((0, 1), orb(sig.inverse(o2))), ((2, 3), orb(o3))]);
    let r1 = relation_containing(core, 4, &seed1, rng);
    let r2 = relation_containing(core, 4, &seed2, rng);
    let r3 = bowtie(core, &r1, &r2).unwrap();
    let expected = injective_family(core, &[((0, 1), orb(o1)), ((2, 3), orb(o3))]);
    assert!(expected.is_subset(&r3), "quaternary bowtie misses injective tuples");
    let atoms: [(&Relation, &[usize]); 2] = [(&r1, &[0, 1, 4, 5]), (&r2, &[5, 4, 2, 3])];
    assert_eq!(r3, oracle_exist_join(core, &atoms, &[0, 1, 2, 3]));
}

fn bowtie3_law_case(core: &BinaryCore, rng: &mut ChaCha8Rng) {
    let sig = core.signature();
    let (o1, o2, o3) = (
        random_orbital(core, rng),
        random_orbital(core, rng),
        random_orbital(core, rng),
    );
    let orb = |o| LabelSet::singleton(PairLabel::Orbital(o));
    // Seeds contain all injective O1 O2- and O2⁻¹ O3-tuples.
    let seed1 = injective_family(core, &[((0, 1), orb(o1)), ((2, 3), orb(o2))]);
    let seed2 = injective_family(core, &[((0, 1), orb(sig.inverse(o2))), ((2, 3), orb(o3))]);
    let r1 = relation_containing(core, 4, &seed1, rng);
    let r2 = relation_containing(core, 4, &seed2, rng);
    let r3 = bowtie3(core, &r1, &r2).unwrap();
    // The result contains O1(x1,x2) ∧ O3(x2,x3) in full.
    let family = conjunction_of_pairs(core, 3, &[((0, 1), orb(o1)), ((1, 2), orb(o3))]);
    assert!(family.is_subset(&r3), "bowtie3 misses the product family");
    let atoms: [(&Relation, &[usize]); 2] = [(&r1, &[0, 1, 3, 4]), (&r2, &[4, 3, 1, 2])];
    assert_eq!(r3, oracle_exist_join(core, &atoms, &[0, 1, 2]));
}

/// All injective orbits matching the pair constraints.
fn injective_family(
    core: &BinaryCore,
    constraints: &[((usize, usize), LabelSet)],
) -> Relation {
    let arity = constraints
        .iter()
        .map(|((i, j), _)| i.max(j) + 1)
        .max()
        .unwrap();
    let family = conjunction_of_pairs(core, arity, constraints);
    Relation::new(
        arity,
        family.orbits().filter(|o| o.is_injective()).cloned(),
    )
    .unwrap()
}

#[test]
fn acceptance_9_clause_language_never_hard() {
    let c = campaign();
    assert_eq!(
        c.clause_language_hard_runs, 0,
        "the clause language must never be implicationally hard at desk scale"
    );
    pass(9, "no implicationally-hard run over the clause language corpus");
}
