//! Property-based invariants: distribution well-formedness, thermodynamic
//! monotonicity, metric identities, and persistence determinism, all over
//! randomized corpora, queries, and fields.

use proptest::prelude::*;

use infograv::field::potential;
use infograv::metrics::{conductivity_total, hallucination_proxy, sensitivity, stability};
use infograv::model::{
    sequence_logprob, tokenize, train, DistSource, DistributionView, LanguageModel, TokenId,
    TokenPredictor,
};
use infograv::sampler::{boltzmann, generate, Temperature, Trajectory};
use infograv::stats::{spearman, PROB_FLOOR};

const LEXICON: [&str; 8] = ["sun", "moon", "star", "wind", "rain", "cloud", "sky", "sea"];

fn corpus() -> impl Strategy<Value = String> {
    prop::collection::vec(0usize..LEXICON.len(), 5..80).prop_map(|ids| {
        ids.iter()
            .map(|&i| LEXICON[i])
            .collect::<Vec<_>>()
            .join(" ")
    })
}

/// Corpus text plus training settings covering every supported order.
fn model_inputs() -> impl Strategy<Value = (String, usize, f64)> {
    (corpus(), 1usize..=3, 0.1f64..0.9)
}

/// Raw id stream; tests fold ids into the trained vocabulary.
fn raw_ids(min_len: usize, max_len: usize) -> impl Strategy<Value = Vec<u32>> {
    prop::collection::vec(0u32..64, min_len..=max_len)
}

fn fold(ids: &[u32], model: &LanguageModel) -> Vec<TokenId> {
    let v = model.vocab_size() as u32;
    ids.iter().map(|&i| TokenId(i % v)).collect()
}

fn traj_from(tokens: Vec<TokenId>) -> Trajectory {
    let n = tokens.len();
    let surfaces = tokens.iter().map(|t| format!("#{}", t.0)).collect();
    Trajectory::new(tokens, surfaces, vec![0.0; n], vec![1.0; n], 0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn next_dist_is_a_floored_distribution(
        (text, order, discount) in model_inputs(),
        ctx in raw_ids(0, 6),
    ) {
        let model = train(&text, order, discount).unwrap();
        let dist = model.next_dist(&fold(&ctx, &model));
        let sum: f64 = dist.probs().iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-9);
        prop_assert!(dist.probs().iter().all(|&p| (PROB_FLOOR..=1.0).contains(&p)));
    }

    #[test]
    fn saved_models_reserialize_identically(
        (text, order, discount) in model_inputs(),
    ) {
        let model = train(&text, order, discount).unwrap();
        let bytes = model.to_json_bytes().unwrap();
        let reloaded = LanguageModel::from_json_bytes(&bytes).unwrap();
        prop_assert_eq!(bytes, reloaded.to_json_bytes().unwrap());
    }

    #[test]
    fn generation_is_a_function_of_the_seed(
        (text, order, discount) in model_inputs(),
        q in raw_ids(1, 4),
        seed in any::<u64>(),
        temp in 0.2f64..3.0,
    ) {
        let model = train(&text, order, discount).unwrap();
        let q = fold(&q, &model);
        let t = Temperature::new(temp).unwrap();
        let a = generate(&model, &q, t, 12, seed).unwrap();
        let b = generate(&model, &q, t, 12, seed).unwrap();
        prop_assert_eq!(a.tokens(), b.tokens());
        prop_assert_eq!(a.phis(), b.phis());
        prop_assert_eq!(a.action(), b.action());
    }

    #[test]
    fn sensitivity_tv_is_a_metric_across_queries(
        (text, order, discount) in model_inputs(),
        a in raw_ids(1, 4),
        b in raw_ids(1, 4),
        c in raw_ids(1, 4),
    ) {
        let model = train(&text, order, discount).unwrap();
        let (a, b, c) = (fold(&a, &model), fold(&b, &model), fold(&c, &model));
        let ab = sensitivity(&model, &a, &b).unwrap().total_variation;
        let ba = sensitivity(&model, &b, &a).unwrap().total_variation;
        let ac = sensitivity(&model, &a, &c).unwrap().total_variation;
        let bc = sensitivity(&model, &b, &c).unwrap().total_variation;
        prop_assert!((ab - ba).abs() < 1e-12, "symmetry: {} vs {}", ab, ba);
        prop_assert!(ac <= ab + bc + 1e-12, "triangle: {} > {} + {}", ac, ab, bc);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&ab));
    }

    #[test]
    fn stability_is_one_on_identity_and_ignores_duplicates(
        (text, order, discount) in model_inputs(),
        q in raw_ids(1, 4),
        p in raw_ids(1, 4),
    ) {
        let model = train(&text, order, discount).unwrap();
        let q = fold(&q, &model);
        let p = fold(&p, &model);
        prop_assert_eq!(stability(&model, &q, std::slice::from_ref(&q)).unwrap(), 1.0);
        let once = stability(&model, &q, std::slice::from_ref(&p)).unwrap();
        let twice = stability(&model, &q, &[p.clone(), p.clone()]).unwrap();
        prop_assert!((once - twice).abs() < 1e-12);
        prop_assert!((0.0 - 1e-12..=1.0 + 1e-12).contains(&once));
    }

    #[test]
    fn conductivity_decomposes_by_the_chain_rule(
        (text, order, discount) in model_inputs(),
        q in raw_ids(1, 3),
        r1 in raw_ids(1, 3),
        r2 in raw_ids(1, 3),
    ) {
        let model = train(&text, order, discount).unwrap();
        let q = fold(&q, &model);
        let r1 = fold(&r1, &model);
        let r2 = fold(&r2, &model);
        let joined: Vec<TokenId> = r1.iter().chain(&r2).copied().collect();
        let q_r1: Vec<TokenId> = q.iter().chain(&r1).copied().collect();

        let whole = conductivity_total(&model, &q, &joined).unwrap();
        let part1 = conductivity_total(&model, &q, &r1).unwrap();
        let part2 = sequence_logprob(&model, &r2, &q_r1).unwrap()
            - sequence_logprob(&model, &r2, &r1).unwrap();
        prop_assert!((whole - (part1 + part2)).abs() < 1e-9);
    }

    #[test]
    fn coarser_windows_never_find_fewer_voids(
        (text, _, discount) in model_inputs(),
        ids in raw_ids(3, 10),
    ) {
        // fixed order 3 so the baseline tracks windows of length 1..=3
        let model = train(&text, 3, discount).unwrap();
        let traj = traj_from(fold(&ids, &model));
        let r1 = hallucination_proxy(&traj, model.baseline(), 1).unwrap().oos_rate;
        let r2 = hallucination_proxy(&traj, model.baseline(), 2).unwrap().oos_rate;
        let r3 = hallucination_proxy(&traj, model.baseline(), 3).unwrap().oos_rate;
        prop_assert!(r1 <= r2 + 1e-12, "order 1 rate {} above order 2 rate {}", r1, r2);
        prop_assert!(r2 <= r3 + 1e-12, "order 2 rate {} above order 3 rate {}", r2, r3);
    }
}

proptest! {
    #[test]
    fn tokenization_is_idempotent(text in ".{0,60}") {
        let once = tokenize(&text);
        let rejoined = once.join(" ");
        prop_assert_eq!(tokenize(&rejoined), once);
    }

    #[test]
    fn boltzmann_entropy_is_monotone_in_temperature(
        phis in prop::collection::vec(0.0f64..20.0, 2..40),
        lo_exp in -3.0f64..4.0,
        hi_exp in -3.0f64..4.0,
    ) {
        let field = infograv::field::PotentialField::from_values("random", phis).unwrap();
        let (lo_exp, hi_exp) = if lo_exp <= hi_exp { (lo_exp, hi_exp) } else { (hi_exp, lo_exp) };
        let cold = boltzmann(&field, Temperature::new(10f64.powf(lo_exp)).unwrap());
        let hot = boltzmann(&field, Temperature::new(10f64.powf(hi_exp)).unwrap());
        let h_cold = infograv::stats::shannon_entropy(cold.probs());
        let h_hot = infograv::stats::shannon_entropy(hot.probs());
        prop_assert!(h_cold <= h_hot + 1e-9, "entropy fell from {} to {}", h_cold, h_hot);
    }

    #[test]
    fn unit_temperature_rescaling_is_the_identity(
        raw in prop::collection::vec(1e-6f64..1.0, 2..40),
    ) {
        let dist = DistributionView::new("random", raw, DistSource::Builtin).unwrap();
        let back = boltzmann(&potential(&dist), Temperature::new(1.0).unwrap());
        for (a, b) in dist.probs().iter().zip(back.probs()) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn potentials_stay_inside_the_printable_range(
        raw in prop::collection::vec(1e-12f64..1.0, 2..40),
    ) {
        let dist = DistributionView::new("random", raw, DistSource::Builtin).unwrap();
        let field = potential(&dist);
        let cap = infograv::stats::max_potential();
        prop_assert!(field.phi().iter().all(|&p| (0.0..=cap).contains(&p)));
    }

    #[test]
    fn spearman_stays_in_range_and_is_one_on_itself(
        x in prop::collection::vec(-100.0f64..100.0, 2..20),
        y in prop::collection::vec(-100.0f64..100.0, 2..20),
    ) {
        let n = x.len().min(y.len());
        if let Some(r) = spearman(&x[..n], &y[..n]) {
            prop_assert!(r.abs() <= 1.0 + 1e-12);
        }
        let distinct = x.iter().any(|&v| v != x[0]);
        match spearman(&x, &x) {
            Some(r) => prop_assert!((r - 1.0).abs() < 1e-9),
            None => prop_assert!(!distinct || x.len() < 2),
        }
    }
}
