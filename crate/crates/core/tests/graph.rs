mod common;

use common::random_team;
use ltlcoord::graph::{complete_edges, incidence, is_connected, sense_edges, EdgeSet};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn shuffled<R: Rng>(rng: &mut R, n: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    for k in (1..n).rev() {
        p.swap(k, rng.gen_range(0..=k));
    }
    p
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    /// Sensing and connectivity do not depend on how agents are numbered.
    #[test]
    fn relabeling_preserves_sensed_graph(seed in any::<u64>(), n in 2usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_team(&mut rng, n, 3);
        let perm = shuffled(&mut rng, n);
        let y: Vec<Vec<f64>> = perm.iter().map(|&p| x[p].clone()).collect();
        let d = vec![4.0; n];
        let ex = sense_edges(&x, &d);
        let ey = sense_edges(&y, &d);
        prop_assert!(is_connected(&ex, n) && is_connected(&ey, n));
        prop_assert_eq!(ex.len(), ey.len());
        for &(a, b) in ey.edges() {
            let (p, q) = (perm[a], perm[b]);
            prop_assert!(ex.contains(p.min(q), p.max(q)));
        }
    }

    /// Every incidence column has one −1 at the tail and one +1 at the head.
    #[test]
    fn incidence_columns_sum_to_zero(seed in any::<u64>(), n in 2usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_team(&mut rng, n, 2);
        let e0 = sense_edges(&x, &vec![4.0; n]);
        let full = complete_edges(n, &e0);
        prop_assert_eq!(full.len(), n * (n - 1) / 2);
        prop_assert_eq!(&full.edges()[..e0.len()], e0.edges());
        let d = incidence(&full, n);
        prop_assert!(d.column_sums().iter().all(|&s| s == 0));
        for (m, &(t, h)) in full.edges().iter().enumerate() {
            prop_assert_eq!(d.get(t, m), -1);
            prop_assert_eq!(d.get(h, m), 1);
        }
    }

    #[test]
    fn dropping_a_bridge_disconnects(n in 2usize..10) {
        let path: Vec<(usize, usize)> = (0..n - 1).map(|k| (k, k + 1)).collect();
        prop_assert!(is_connected(&EdgeSet::new(path.clone(), n).unwrap(), n));
        for cut in 0..n - 1 {
            let mut e = path.clone();
            e.remove(cut);
            prop_assert!(!is_connected(&EdgeSet::new(e, n).unwrap(), n));
        }
    }
}
