use proptest::prelude::*;
use threadgrid::corpus::{load_corpus, serialize_thread, Post, Role};
use threadgrid::eval::{edge_scores, score_predictions, tree_accuracy};
use threadgrid::grid::{linearize_grid, ConversationalGrid};
use threadgrid::neural::ranking_loss;
use threadgrid::tree::{candidate_count, enumerate_candidate_trees};
use threadgrid::{ParentVector, Sentence, Thread};

fn parent_vector(max_posts: usize) -> impl Strategy<Value = ParentVector> {
    (1..=max_posts).prop_flat_map(|n| {
        let parents: Vec<BoxedStrategy<usize>> = (2..=n).map(|i| (1..i).boxed()).collect();
        parents.prop_map(|ps| {
            let mut raw = vec![0];
            raw.extend(ps);
            ParentVector::new(raw).unwrap()
        })
    })
}

/// Gold/prediction sets over the same thread sizes.
fn aligned_sets() -> impl Strategy<Value = Vec<(ParentVector, ParentVector)>> {
    prop::collection::vec(
        (1..=4usize).prop_flat_map(|n| {
            let one = move || {
                (2..=n)
                    .map(|i| (1..i).boxed())
                    .collect::<Vec<_>>()
                    .prop_map(|ps| ParentVector::new([vec![0], ps].concat()).unwrap())
            };
            (one(), one())
        }),
        1..20,
    )
}

/// Independent edge count: walk raw parent slices by index.
fn brute_edge_accuracy(pairs: &[(ParentVector, ParentVector)]) -> f64 {
    let (mut hit, mut total) = (0, 0);
    for (g, p) in pairs {
        let (g, p) = (g.as_slice(), p.as_slice());
        for i in 1..g.len() {
            total += 1;
            if g[i] == p[i] {
                hit += 1;
            }
        }
    }
    if total == 0 {
        1.0
    } else {
        hit as f64 / total as f64
    }
}

proptest! {
    #[test]
    fn parent_vectors_parse_back(pv in parent_vector(9)) {
        let text = pv.to_string();
        prop_assert_eq!(ParentVector::parse(&text, Some(pv.len())).unwrap(), pv.clone());
        for (child, parent) in pv.links() {
            prop_assert!(parent >= 1 && parent < child);
        }
    }

    #[test]
    fn enumeration_contains_every_valid_tree(pv in parent_vector(6)) {
        let all = enumerate_candidate_trees(pv.len()).unwrap();
        prop_assert_eq!(all.len() as u128, candidate_count(pv.len()));
        prop_assert!(all.contains(&pv));
    }

    #[test]
    fn metrics_match_brute_force(pairs in aligned_sets()) {
        let golds: Vec<_> = pairs.iter().map(|p| p.0.clone()).collect();
        let preds: Vec<_> = pairs.iter().map(|p| p.1.clone()).collect();
        let e = edge_scores(&preds, &golds).unwrap();
        prop_assert_eq!(e.accuracy, brute_edge_accuracy(&pairs));
        let r = score_predictions(&preds, &golds).unwrap();
        for v in [r.tree_accuracy, r.edge_accuracy, r.edge_precision, r.edge_recall, r.edge_f1] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        if r.edge_precision + r.edge_recall == 0.0 {
            prop_assert_eq!(r.edge_f1, 0.0);
        }
        prop_assert_eq!(tree_accuracy(&preds, &preds).unwrap(), 1.0);
    }

    #[test]
    fn hinge_is_monotone(pos in -10.0f64..10.0, neg in -10.0f64..10.0, d in 0.0f64..5.0) {
        prop_assert!(ranking_loss(pos + d, neg) <= ranking_loss(pos, neg));
        prop_assert!(ranking_loss(pos, neg + d) >= ranking_loss(pos, neg));
        prop_assert!(ranking_loss(pos, neg) >= 0.0);
    }

    #[test]
    fn linearization_separates_grids_that_differ(
        cells in prop::collection::vec(0..4usize, 12),
        flip in 0..12usize,
        to in 1..4usize,
    ) {
        let roles = [Role::S, Role::O, Role::X, Role::Absent];
        // 2 entities, depths of sizes 1, 2, 3
        let make = |c: &[usize]| {
            let mut rows = Vec::new();
            let mut k = 0;
            for size in [1usize, 2, 3] {
                let mut row = Vec::new();
                for _ in 0..2 {
                    row.push(c[k..k + size].iter().map(|&i| roles[i]).collect());
                    k += size;
                }
                rows.push(row);
            }
            ConversationalGrid { entities: vec!["a".into(), "b".into()], rows }
        };
        let mut other = cells.clone();
        other[flip] = (other[flip] + to) % 4;
        let (a, b) = (make(&cells), make(&other));
        prop_assert_ne!(linearize_grid(&a, 16), linearize_grid(&b, 16));
    }

    #[test]
    fn threads_survive_serialization(
        sizes in prop::collection::vec(1..4usize, 1..5),
        words in prop::collection::vec("[a-z]{3,8}", 12),
        seed in any::<u64>(),
    ) {
        let mut w = words.iter().cycle().skip((seed % 12) as usize);
        let posts: Vec<Post> = sizes.iter().enumerate().map(|(i, &k)| Post {
            post_id: i + 1,
            author: format!("user{i}"),
            sentences: (0..k).map(|_| Sentence::new(format!("{} {}.", w.next().unwrap(), w.next().unwrap()))).collect(),
        }).collect();
        let n = posts.len();
        let thread = Thread {
            thread_id: format!("t{seed}"),
            posts,
            gold_parents: Some(ParentVector::all_previous(n)),
        };
        let line = serialize_thread(&thread);
        let back = load_corpus(line.as_bytes()).unwrap();
        prop_assert_eq!(back, vec![thread]);
    }
}
