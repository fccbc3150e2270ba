mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use bihet::graph::{build_graph, NodeId, NodeKind};
use bihet::sampling::{build_neighbor_sets, generate_walks, positive_pairs, rwr_walk, NegativeSampler, WalkConfig};

#[test]
fn walks_stay_on_edges_or_restart() {
    let g = build_graph(&common::star()).unwrap();
    let config = WalkConfig {
        walks_per_node: 3,
        ..WalkConfig::default()
    };
    let walks = generate_walks(&g, &config);
    assert_eq!(walks.len(), g.node_count());
    for (start, per_node) in walks.iter().enumerate() {
        assert_eq!(per_node.len(), 3);
        for w in per_node {
            assert_eq!(w.len(), config.walk_length);
            assert_eq!(w[0], start);
            for pair in w.windows(2) {
                let adjacent = g.distinct_neighbors(pair[0]).contains(&pair[1]);
                assert!(adjacent || pair[1] == start, "{w:?}");
            }
        }
    }
    assert_eq!(walks, generate_walks(&g, &config));
}

#[test]
fn full_restart_never_leaves_the_start() {
    let g = build_graph(&common::star()).unwrap();
    let config = WalkConfig {
        restart_prob: 1.0,
        ..WalkConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    assert!(rwr_walk(&g, 1, &config, &mut rng).iter().all(|&v| v == 1));
}

#[test]
fn isolated_node_walk_is_constant() {
    let mut data = common::star();
    data.users.push(common::user("alone", 0));
    let g = build_graph(&data).unwrap();
    let v = g.global(NodeId::user(3));
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    assert!(rwr_walk(&g, v, &WalkConfig::default(), &mut rng).iter().all(|&x| x == v));
    let sets = build_neighbor_sets(&g, &WalkConfig::default()).unwrap();
    assert!(sets.of(NodeKind::User, v).is_empty() && sets.of(NodeKind::Tweet, v).is_empty());
}

#[test]
fn neighbour_sets_split_by_type_and_exclude_self() {
    let g = build_graph(&common::star()).unwrap();
    let config = WalkConfig {
        topk_user: 2,
        ..WalkConfig::default()
    };
    let sets = build_neighbor_sets(&g, &config).unwrap();
    let hub = g.global(NodeId::tweet(0));
    let hub_users = sets.of(NodeKind::User, hub);
    assert_eq!(hub_users.len(), 2);
    assert!(hub_users.iter().all(|&(n, _)| n < 3));
    assert!(sets.of(NodeKind::Tweet, hub).is_empty());
    for u in 0..3 {
        assert_eq!(sets.ids(NodeKind::Tweet, u), vec![hub]);
        let users = sets.of(NodeKind::User, u);
        assert!(users.len() <= 2 && users.iter().all(|&(n, _)| n != u && n < 3));
        assert!(users.windows(2).all(|w| w[0].1 >= w[1].1));
    }
}

#[test]
fn positive_pairs_respect_window() {
    let walk = vec![vec![vec![0, 1, 0, 2]]];
    let pairs: Vec<_> = positive_pairs(walk.iter().flatten(), 1).collect();
    assert_eq!(pairs, vec![(0, 1), (1, 0), (1, 0), (0, 1), (0, 2), (2, 0)]);
    let wide: Vec<_> = positive_pairs(walk.iter().flatten(), 2).collect();
    assert!(wide.contains(&(1, 2)) && !wide.contains(&(0, 0)));
}

#[test]
fn negative_sampler_follows_activity() {
    let g = build_graph(&common::star()).unwrap();
    let sampler = NegativeSampler::new(&g).unwrap();
    let probs = sampler.user_probabilities().unwrap();
    let want = [4.0 / 46.0, 1.0 / 46.0, 41.0 / 46.0];
    for (p, w) in probs.iter().zip(want) {
        assert!((p - w).abs() < 1e-12);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let n = 100_000;
    let mut counts = [0usize; 3];
    for _ in 0..n {
        counts[sampler.sample(NodeKind::User, &mut rng).unwrap()] += 1;
    }
    // chi-square with 2 degrees of freedom; 13.8 is the 0.999 quantile
    let chi: f64 = counts
        .iter()
        .zip(want)
        .map(|(&c, w)| {
            let e = w * n as f64;
            (c as f64 - e).powi(2) / e
        })
        .sum();
    assert!(chi < 13.8, "chi-square {chi} for {counts:?}");

    let hub = g.global(NodeId::tweet(0));
    assert_eq!(sampler.sample(NodeKind::Tweet, &mut rng).unwrap(), hub);
}
