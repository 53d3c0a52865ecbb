use approx::assert_relative_eq;
use rand::Rng;

use super::*;
use crate::error::Error;
use crate::matrix::Matrix;
use crate::rng::{stream_rng, Stream};
use crate::SearchBudget;

fn two_block() -> Matrix {
    Matrix::from_fn(4, |i, j| if (i < 2) != (j < 2) { 1.0 } else { 0.0 })
}

fn complete(n: usize) -> Matrix {
    Matrix::from_fn(n, |i, j| if i == j { 0.0 } else { 1.0 })
}

fn random_graph(n: usize, p: f64, rng: &mut impl Rng) -> Matrix {
    let mut a = Matrix::zeros(n);
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < p {
                a.set(i, j, 1.0);
                a.set(j, i, 1.0);
            }
        }
    }
    a
}

fn budget(restarts: usize, seed: u64) -> SearchBudget {
    SearchBudget {
        restarts,
        max_iters: 100_000,
        seed,
    }
}

/// Min over all label vectors in [0,k)^n of Σ (A − (A/π)^π)², with block
/// means computed directly cell by cell.
fn brute_ls(a: &Matrix, min_size: usize, k: usize) -> f64 {
    let n = a.n();
    let mut labels = vec![0usize; n];
    let mut best = f64::INFINITY;
    loop {
        let mut sizes = vec![0; k];
        labels.iter().for_each(|&c| sizes[c] += 1);
        if sizes.iter().all(|&s| s == 0 || s >= min_size) {
            let mut sq = 0.0;
            for x in 0..k {
                for y in 0..k {
                    let cells: Vec<(usize, usize)> = (0..n)
                        .flat_map(|i| (0..n).map(move |j| (i, j)))
                        .filter(|&(i, j)| labels[i] == x && labels[j] == y)
                        .collect();
                    if cells.is_empty() {
                        continue;
                    }
                    let mean = cells.iter().map(|&(i, j)| a.get(i, j)).sum::<f64>() / cells.len() as f64;
                    sq += cells.iter().map(|&(i, j)| (a.get(i, j) - mean).powi(2)).sum::<f64>();
                }
            }
            best = best.min(sq);
        }
        let mut pos = 0;
        loop {
            if pos == n {
                return best;
            }
            labels[pos] += 1;
            if labels[pos] < k {
                break;
            }
            labels[pos] = 0;
            pos += 1;
        }
    }
}

#[test]
fn block_average_examples() {
    let c = 0.7;
    let a = Matrix::from_fn(5, |i, j| if i == j { 0.0 } else { c });
    let (b, l) = block_average(&a, &Partition::trivial(5)).unwrap();
    assert_relative_eq!(b.get(0, 0), c * 20.0 / 25.0, epsilon = 1e-15);
    assert!(l.data().iter().all(|&v| v == b.get(0, 0)));

    let (b, _) = block_average(&Matrix::zeros(3), &Partition::from_assignment(vec![0, 1, 0])).unwrap();
    assert!(b.data().iter().all(|&v| v == 0.0));

    let (b, l) = block_average(&two_block(), &Partition::from_assignment(vec![0, 0, 1, 1])).unwrap();
    assert_eq!(b.data(), &[0.0, 1.0, 1.0, 0.0]);
    assert_eq!(l, two_block());
}

#[test]
fn block_average_empty_class_is_zero() {
    let a = complete(3);
    let pi = Partition::new(vec![0, 0, 2], 3).unwrap();
    let (b, _) = block_average(&a, &pi).unwrap();
    assert!((0..3).all(|x| b.get(1, x) == 0.0 && b.get(x, 1) == 0.0));
    assert_eq!(b.get(0, 2), 1.0);
}

#[test]
fn kappa_rule_examples() {
    assert_eq!(kappa_rule(10, 0.2).unwrap(), (2, 5));
    assert_eq!(kappa_rule(4, 0.5).unwrap(), (2, 2));
    assert_eq!(kappa_rule(128, 0.25).unwrap(), (32, 4));
    assert_eq!(kappa_rule(10, 0.3).unwrap(), (3, 4));
    assert!(matches!(kappa_rule(4, 0.2), Err(Error::Parameter(_))));
    assert!(matches!(kappa_rule(4, 0.0), Err(Error::Parameter(_))));
    assert!(matches!(kappa_rule(4, 1.5), Err(Error::Parameter(_))));
}

#[test]
fn constrained_enumeration_matches_filter() {
    for n in 1..=8 {
        for min_size in 1..=3 {
            for max_classes in 1..=4 {
                let mut seen = Vec::new();
                for_each_constrained_partition(n, min_size, max_classes, &mut |l, _| seen.push(l.to_vec()));
                let mut sorted = seen.clone();
                sorted.sort();
                assert_eq!(seen, sorted, "not in lexicographic order");
                // filter every restricted growth string
                let mut expected = 0;
                let total = (n as u32).pow(n as u32) as usize;
                for code in 0..total {
                    let mut c = code;
                    let l: Vec<usize> = (0..n)
                        .map(|_| {
                            let d = c % n;
                            c /= n;
                            d
                        })
                        .collect();
                    let mut next = 0;
                    let rgs = l.iter().all(|&x| {
                        let ok = x <= next;
                        if x == next {
                            next += 1;
                        }
                        ok
                    });
                    if rgs && Partition::from_assignment(l).satisfies(min_size, max_classes) {
                        expected += 1;
                    }
                }
                assert_eq!(seen.len(), expected, "n={n} m={min_size} k={max_classes}");
            }
        }
    }
}

#[test]
fn ls_exact_examples() {
    let r = least_squares_exact(&two_block(), 0.5).unwrap();
    assert_eq!(r.partition.assign(), &[0, 0, 1, 1]);
    assert_eq!(r.objective, 0.0);
    assert_eq!(r.model.b_flat(), &[0.0, 1.0, 1.0, 0.0]);
    assert_eq!(r.model.p(), &[0.5, 0.5]);

    let r = least_squares_exact(&Matrix::zeros(4), 0.5).unwrap();
    assert_eq!(r.objective, 0.0);
    assert_eq!(r.partition.assign(), &[0, 0, 0, 0]);
    assert!(r.model.b_flat().iter().all(|&v| v == 0.0));
}

#[test]
fn ls_exact_complete_graph_ties() {
    // The three 2+2 splits tie (residual only on the diagonal blocks) and beat
    // the single block; the canonical one is returned.
    let a = complete(4);
    let score = |assign: Vec<usize>| {
        let pi = Partition::from_assignment(assign);
        let (_, l) = block_average(&a, &pi).unwrap();
        crate::metrics::matrix_lp(&a.sub(&l).unwrap(), 2.0)
    };
    let splits = [score(vec![0, 0, 1, 1]), score(vec![0, 1, 0, 1]), score(vec![0, 1, 1, 0])];
    assert_eq!(splits[0], splits[1]);
    assert_eq!(splits[0], splits[2]);
    assert!(splits[0] < score(vec![0, 0, 0, 0]));
    let r = least_squares_exact(&a, 0.5).unwrap();
    assert_eq!(r.partition.assign(), &[0, 0, 1, 1]);
    assert_eq!(r.objective, splits[0]);
    assert_relative_eq!(r.objective, (8.0f64 * 0.25 / 16.0).sqrt(), epsilon = 1e-15);
}

#[test]
fn ls_exact_against_brute_force() {
    let mut rng = stream_rng(11, Stream::Trial);
    for trial in 0..100 {
        let n = 4 + trial % 5;
        let a = random_graph(n, 0.5, &mut rng);
        let r = least_squares_exact(&a, 0.3).unwrap();
        let (m, k) = kappa_rule(n, 0.3).unwrap();
        let brute = brute_ls(&a, m, k);
        let got = r.objective.powi(2) * (n * n) as f64;
        assert!((got - brute).abs() <= 1e-9, "trial {trial}: {got} vs {brute}");
        assert!(r.partition.satisfies(m, k));
    }
}

#[test]
fn ls_size_and_parameter_errors() {
    assert!(matches!(least_squares_exact(&Matrix::zeros(14), 0.5), Err(Error::Size { .. })));
    assert!(matches!(least_squares_exact(&Matrix::zeros(4), 0.1), Err(Error::Parameter(_))));
    assert!(matches!(least_squares_search(&Matrix::zeros(4), 0.1, &budget(1, 0)), Err(Error::Parameter(_))));
}

#[test]
fn ls_search_never_beats_exact() {
    let mut rng = stream_rng(12, Stream::Trial);
    for trial in 0..40 {
        let n = 5 + trial % 6;
        let a = random_graph(n, 0.4, &mut rng);
        let e = least_squares_exact(&a, 0.2).unwrap();
        let s = least_squares_search(&a, 0.2, &budget(20, trial as u64)).unwrap();
        assert!(s.objective >= e.objective - 1e-12);
        let (m, k) = kappa_rule(n, 0.2).unwrap();
        assert!(s.partition.satisfies(m, k));
    }
}

#[test]
fn ls_search_zero_matrix() {
    let r = least_squares_search(&Matrix::zeros(8), 0.25, &budget(0, 3)).unwrap();
    assert_eq!(r.objective, 0.0);
    assert!(r.diagnostics.trace.is_empty());
}

#[test]
fn ls_search_trace_is_monotone() {
    let mut rng = stream_rng(13, Stream::Trial);
    let a = random_graph(60, 0.3, &mut rng);
    let r = least_squares_search(&a, 0.1, &budget(4, 1)).unwrap();
    for w in r.diagnostics.trace.windows(2) {
        assert!(w[1] <= w[0] + 1e-12, "{w:?}");
    }
    if let Some(last) = r.diagnostics.trace.last() {
        assert_relative_eq!(*last, r.objective, epsilon = 1e-9);
    }
}

#[test]
fn ls_search_finds_planted_blocks() {
    let mut rng = stream_rng(14, Stream::Trial);
    let n = 40;
    let mut a = Matrix::zeros(n);
    for i in 0..n {
        for j in i + 1..n {
            let p = if (i < 20) == (j < 20) { 0.9 } else { 0.05 };
            if rng.random::<f64>() < p {
                a.set(i, j, 1.0);
                a.set(j, i, 1.0);
            }
        }
    }
    let r = least_squares_search(&a, 0.5, &budget(8, 2)).unwrap();
    let expected: Vec<usize> = (0..n).map(|i| usize::from(i >= 20)).collect();
    assert_eq!(r.partition.assign(), expected.as_slice());
}

#[test]
fn search_is_thread_independent() {
    let mut rng = stream_rng(15, Stream::Trial);
    let a = random_graph(30, 0.3, &mut rng);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| least_squares_search(&a, 0.2, &budget(6, 9)).unwrap())
    };
    assert_eq!(run(1), run(3));
}

#[test]
fn cut_exact_examples() {
    let r = least_cut_exact(&two_block(), 0.5).unwrap();
    assert_eq!(r.partition.assign(), &[0, 0, 1, 1]);
    assert_eq!(r.objective, 0.0);
    assert_eq!(least_cut_exact(&Matrix::zeros(5), 0.4).unwrap().objective, 0.0);
    let flat = Matrix::from_fn(6, |_, _| 0.5);
    let r = least_cut_exact(&flat, 0.5).unwrap();
    assert_eq!(r.objective, 0.0);
    assert_eq!(r.partition.assign(), &[0; 6]);
    // 0.3 is not dyadic, so block means carry rounding noise
    let flat = Matrix::from_fn(6, |_, _| 0.3);
    let r = least_cut_exact(&flat, 0.5).unwrap();
    assert!(r.objective <= 1e-15);
    assert_eq!(r.partition.assign(), &[0; 6]);
    assert!(matches!(least_cut_exact(&Matrix::zeros(11), 0.5), Err(Error::Size { .. })));
}

#[test]
fn cut_exact_is_minimal_and_search_dominated() {
    let mut rng = stream_rng(16, Stream::Trial);
    for trial in 0..15 {
        let n = 5 + trial % 3;
        let a = random_graph(n, 0.5, &mut rng);
        let e = least_cut_exact(&a, 0.3).unwrap();
        let (m, k) = kappa_rule(n, 0.3).unwrap();
        let mut best = f64::INFINITY;
        for_each_constrained_partition(n, m, k, &mut |l, _| {
            let pi = Partition::from_assignment(l.to_vec());
            let (_, lift) = block_average(&a, &pi).unwrap();
            best = best.min(crate::metrics::norms::tests::brute_cut(&a.sub(&lift).unwrap()));
        });
        assert!((e.objective - best).abs() <= 1e-12);
        let s = least_cut_search(&a, 0.3, &budget(4, trial as u64)).unwrap();
        assert!(s.objective >= e.objective - 1e-12);
        assert!(s.diagnostics.caveat.is_none());
    }
}

#[test]
fn cut_search_zero_matrix() {
    let r = least_cut_search(&Matrix::zeros(16), 0.25, &budget(1, 0)).unwrap();
    assert_eq!(r.objective, 0.0);
    assert!(r.diagnostics.caveat.is_some());
}

#[test]
fn degree_sorting_examples() {
    let mut rng = stream_rng(17, Stream::Trial);
    let a = random_graph(9, 0.5, &mut rng);
    let r = degree_sorting(&a, 1).unwrap();
    assert_relative_eq!(r.model.b(0, 0), crate::matrix::density(&a), epsilon = 1e-15);

    let mut star = Matrix::zeros(4);
    for j in 1..4 {
        star.set(0, j, 1.0);
        star.set(j, 0, 1.0);
    }
    let r = degree_sorting(&star, 2).unwrap();
    assert_eq!(r.partition.assign(), &[0, 0, 1, 1]);
    assert_eq!(r.model.b_flat(), &[0.5, 0.5, 0.5, 0.0]);

    let cycle = Matrix::from_fn(6, |i, j| if (i + 1) % 6 == j || (j + 1) % 6 == i { 1.0 } else { 0.0 });
    let r = degree_sorting(&cycle, 3).unwrap();
    assert_eq!(r.partition.assign(), &[0, 0, 1, 1, 2, 2]);

    assert!(matches!(degree_sorting(&Matrix::zeros(3), 2), Err(Error::Degenerate(_))));
    assert!(matches!(degree_sorting(&star, 0), Err(Error::Parameter(_))));
}

#[test]
fn degree_sorting_drops_empty_classes() {
    let r = degree_sorting(&complete(3), 5).unwrap();
    assert_eq!(r.model.k(), 3);
    assert_eq!(r.diagnostics.empty_classes_dropped, 2);
}

#[test]
fn outputs_are_well_formed() {
    let mut rng = stream_rng(18, Stream::Trial);
    for trial in 0..10 {
        let n = 6 + trial;
        let a = random_graph(n, 0.4, &mut rng);
        if a.total() == 0.0 {
            continue;
        }
        let rho = crate::matrix::density(&a);
        let results = [
            least_squares_search(&a, 0.25, &budget(2, 0)).unwrap(),
            degree_sorting(&a, 3).unwrap(),
        ];
        for r in results {
            let sizes = r.partition.sizes();
            for (i, &s) in sizes.iter().enumerate() {
                assert_eq!(r.model.p()[i], s as f64 / n as f64);
            }
            assert!((r.model.p().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            let k = r.model.k();
            for x in 0..k {
                for y in 0..k {
                    assert_eq!(r.model.b(x, y), r.model.b(y, x));
                    assert_relative_eq!(r.normalized.b(x, y), r.model.b(x, y) / rho, epsilon = 1e-12);
                }
            }
            let (b, _) = block_average(&a, &r.partition).unwrap();
            assert_eq!(b.data(), r.model.b_flat());
        }
    }
}

#[test]
fn result_serializes() {
    let r = least_squares_exact(&two_block(), 0.5).unwrap();
    let json = r.to_json().unwrap();
    let back: EstimationResult = serde_json::from_str(&json).unwrap();
    assert_eq!(back, r);
}
