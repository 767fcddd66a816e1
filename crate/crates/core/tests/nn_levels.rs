use std::collections::BTreeSet;

use nuthermo::energy::{energy_nn_detailed, Energy, NNParams};
use nuthermo::levels::{levels_nn_dp, levels_nn_dp_all, levels_nn_dp_symmetric, levels_nn_grid};
use nuthermo::strand::{StrandOrdering, StrandSystem};
use nuthermo::structure::{is_noncrossing_in, Enumerator, StructureSpace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn params(name: &str) -> NNParams {
    let path = format!("{}/data/{name}", env!("CARGO_MANIFEST_DIR"));
    NNParams::parse(&std::fs::read_to_string(path).unwrap()).unwrap().extrapolated(12)
}

fn random_system(rng: &mut ChaCha8Rng, alphabet: &[u8]) -> StrandSystem {
    let c = rng.gen_range(1..=3);
    let n = rng.gen_range(c.max(2)..=10);
    let mut lens = vec![1; c];
    for _ in c..n {
        lens[rng.gen_range(0..c)] += 1;
    }
    let seqs: Vec<String> = lens
        .iter()
        .map(|&l| (0..l).map(|_| alphabet[rng.gen_range(0..alphabet.len())] as char).collect())
        .collect();
    StrandSystem::from_sequences(&seqs).unwrap()
}

/// Symmetry-free energies of NN-space structures, grouped by the ordering
/// they are crossing-free in, plus the full (rounded) totals.
fn brute(sys: &StrandSystem, p: &NNParams) -> (Vec<(StrandOrdering, BTreeSet<Energy>)>, BTreeSet<Energy>, BTreeSet<Energy>) {
    let orderings = StrandOrdering::all(sys.strand_count());
    let mut per: Vec<(StrandOrdering, BTreeSet<Energy>)> = orderings.iter().map(|o| (o.clone(), BTreeSet::new())).collect();
    let mut free = BTreeSet::new();
    let mut full = BTreeSet::new();
    let en = Enumerator::new(sys, StructureSpace::NEAREST_NEIGHBOUR, 200).unwrap();
    en.for_each(|s| {
        for (o, set) in per.iter_mut() {
            if is_noncrossing_in(&sys.flatten(o), s) {
                let e = energy_nn_detailed(sys, o, s, p).unwrap();
                set.insert(e.symmetry_free);
                free.insert(e.symmetry_free);
                full.insert(e.total);
            }
        }
    });
    (per, free, full)
}

#[test]
fn dp_matches_enumeration_per_ordering() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for name in ["toy_fine.params", "toy_coarse.params"] {
        let p = params(name);
        for round in 0..60 {
            // GC-rich strands fold far more often
            let alphabet: &[u8] = if round % 2 == 0 { b"ACGT" } else { b"GGCCAT" };
            let sys = random_system(&mut rng, alphabet);
            let (per, free, full) = brute(&sys, &p);
            for (o, want) in &per {
                let got = levels_nn_dp(&sys, o, &p, 3).unwrap();
                assert_eq!(got.levels, *want, "{sys} ordering {o} params {name}");
            }
            assert_eq!(levels_nn_dp_all(&sys, &p, 3).unwrap().levels, free, "{sys}");
            let sym = levels_nn_dp_symmetric(&sys, &p, 3).unwrap();
            assert!(sym.is_superset_of(full.iter().copied()), "{sys}");
            let grid = levels_nn_grid(&sys, &p);
            assert!(grid.is_superset_of(full.iter().copied()), "{sys}");
        }
    }
}
