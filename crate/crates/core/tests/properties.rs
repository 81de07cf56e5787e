mod common;

use std::collections::BTreeSet;

use common::*;
use morphic_core::annotate::{tau, transduct_system, AnnotationContext, TransductOutcome};
use morphic_core::dekking::{erasure_parts, image_system, morphic_image_pipeline, PipelineOutcome};
use morphic_core::engine::{fixpoint_prefix, limit_status};
use morphic_core::periodicity::{detect_eventual_period, PeriodVerdict};
use morphic_core::spectral::*;
use morphic_core::transducer::compose;
use morphic_core::{LimitStatus, MorphicSystem, Symbol, Word};
use num_traits::ToPrimitive;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn apply_is_a_homomorphism(seed in any::<u64>()) {
        let mut r = rng(seed);
        let sigma = alphabet(3);
        let h = random_morphism(&mut r, &sigma, &sigma, 0, 3);
        let u = random_word(&mut r, &sigma, 0, 6);
        let v = random_word(&mut r, &sigma, 0, 6);
        let whole = h.apply(&u.concat(&v)).unwrap();
        prop_assert_eq!(whole, h.apply(&u).unwrap().concat(&h.apply(&v).unwrap()));
    }

    #[test]
    fn morphism_composition(seed in any::<u64>()) {
        let mut r = rng(seed);
        let sigma = alphabet(3);
        let f = random_morphism(&mut r, &sigma, &sigma, 0, 3);
        let g = random_morphism(&mut r, &sigma, &sigma, 0, 3);
        let x = random_word(&mut r, &sigma, 0, 8);
        let gf = g.compose(&f).unwrap();
        prop_assert_eq!(gf.apply(&x).unwrap(), g.apply(&f.apply(&x).unwrap()).unwrap());
    }

    #[test]
    fn fixpoint_matches_iteration(seed in any::<u64>()) {
        let mut r = rng(seed);
        let k = r.gen_range(1..=4);
        let h = random_prolongable(&mut r, k, 0, 3);
        let a = h.source().symbol(0).clone();
        if let Some(want) = fixpoint_oracle(&h, &a, 300) {
            let sys = MorphicSystem::pure(h.clone(), a.clone()).unwrap();
            prop_assert_eq!(fixpoint_prefix(&sys, 300).unwrap(), want);
            prop_assert_eq!(limit_status(&h, &Word::from(vec![a])).unwrap(), LimitStatus::Infinite);
        }
    }

    #[test]
    fn transducer_composition(seed in any::<u64>()) {
        let mut r = rng(seed);
        let s1 = alphabet(r.gen_range(1..=3));
        let s2 = alphabet(r.gen_range(1..=3));
        let s3 = alphabet(r.gen_range(1..=3));
        let (na, nb) = (r.gen_range(1..=3), r.gen_range(1..=3));
        let a = random_transducer(&mut r, &s1, &s2, na, 0, 2);
        let b = random_transducer(&mut r, &s2, &s3, nb, 0, 2);
        let ba = compose(&b, &a).unwrap();
        for _ in 0..20 {
            let x = random_word(&mut r, &s1, 0, 10);
            prop_assert_eq!(ba.apply(&x).unwrap(), transduce_oracle(&b, &transduce_oracle(&a, &x)));
        }
    }

    #[test]
    fn tau_and_theta_follow_their_definitions(seed in any::<u64>()) {
        let mut r = rng(seed);
        let sigma = alphabet(r.gen_range(1..=3));
        let h = random_prolongable(&mut r, sigma.len(), 1, 3);
        let states = r.gen_range(1..=3);
        let m = random_transducer(&mut r, &sigma, &sigma, states, 1, 2);
        let ctx = AnnotationContext::new(&m, &h).unwrap();
        let u = random_word(&mut r, &sigma, 0, 5);
        let v = random_word(&mut r, &sigma, 0, 5);
        // τ read off by running the machine from each state
        let direct = |x: &Word| -> Vec<usize> {
            m.states().iter().map(|q| {
                let end = m.run(q, x).unwrap().end_state;
                m.states().index_of(&end).unwrap()
            }).collect()
        };
        prop_assert_eq!(&tau(&m, &u).unwrap().0, &direct(&u));
        let uv = u.concat(&v);
        prop_assert_eq!(tau(&m, &u).unwrap().then(&tau(&m, &v).unwrap()), tau(&m, &uv).unwrap());
        // Θ(u) = (τ_u, τ_h(u), …) and Θ(h(u)) is one step along
        let theta = ctx.theta(&u).unwrap();
        let mut x = u.clone();
        for entry in theta.entries() {
            prop_assert_eq!(&entry.0, &direct(&x));
            x = h.apply(&x).unwrap();
        }
        prop_assert_eq!(ctx.theta_step(&theta), ctx.theta(&h.apply(&u).unwrap()).unwrap());
    }

    #[test]
    fn unblock_commutes_with_iteration(seed in any::<u64>()) {
        let mut r = rng(seed);
        let k = r.gen_range(2..=4);
        let g = random_prolongable(&mut r, k, 0, 3);
        let gamma: BTreeSet<Symbol> = g.source().iter().filter(|_| r.gen_bool(0.4)).cloned().collect();
        let Ok(e) = erasure_parts(&g, &gamma, g.source().symbol(0)) else { return Ok(()); };
        let gr = g.power(e.power, 1 << 20).unwrap();
        for d in &e.delta {
            let lhs = e.unblock(e.xi.image(d).unwrap()).unwrap();
            let content = e.unblock(&Word::from(vec![d.clone()])).unwrap();
            let rhs = gr.apply(&content).unwrap().erase(&e.dead);
            prop_assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn char_poly_matches_cofactor_determinant(seed in any::<u64>()) {
        let mut r = rng(seed);
        let sigma = alphabet(r.gen_range(1..=5));
        let h = random_morphism(&mut r, &sigma, &sigma, 0, 4);
        let mat = incidence_matrix(&h).unwrap();
        let ints: Vec<Vec<i128>> = mat.entries.iter()
            .map(|row| row.iter().map(|x| x.to_i128().unwrap()).collect())
            .collect();
        let cp = char_poly(&mat);
        prop_assert_eq!(cp.degree(), sigma.len());
        for x in -3i128..=3 {
            let exact = cp.coeffs.iter().rev()
                .fold(0i128, |acc, c| acc * x + c.to_i128().unwrap());
            prop_assert_eq!(exact, det_shifted(&ints, x));
        }
    }

    #[test]
    fn perron_root_is_a_bounded_root(seed in any::<u64>()) {
        let mut r = rng(seed);
        let sigma = alphabet(r.gen_range(1..=5));
        let h = random_morphism(&mut r, &sigma, &sigma, 0, 4);
        let mat = incidence_matrix(&h).unwrap();
        let rho = dominant_eigenvalue(&mat, INTERNAL_TOL).unwrap();
        let sums: Vec<f64> = mat.column_sums().iter().map(|x| x.to_f64().unwrap()).collect();
        let lo = sums.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = sums.iter().cloned().fold(0.0, f64::max);
        prop_assert!(rho >= lo - 1e-9 && rho <= hi + 1e-9);
        prop_assert!(char_poly_residual(&mat, rho) < 1e-6);
        // nothing real and larger is a root
        let coeffs: Vec<f64> = char_poly(&mat).coeffs.iter().map(|c| c.to_f64().unwrap()).collect();
        let top = largest_root(&coeffs, -1.0, hi + 1.0);
        prop_assert!(top <= rho + 1e-6, "{top} > {rho}");
    }

    #[test]
    fn image_matrix_is_a_zero_column_extension(seed in any::<u64>()) {
        let mut r = rng(seed);
        let k = r.gen_range(1..=4);
        let g = random_prolongable(&mut r, k, 0, 3);
        let h = random_morphism(&mut r, g.source(), g.source(), 1, 3);
        let Ok(img) = image_system(&g, &h, g.source().symbol(0)) else { return Ok(()); };
        let mg = incidence_matrix(&g).unwrap();
        let mx = incidence_matrix(&img.xi).unwrap();
        let embedding: Vec<usize> = g.source().iter()
            .map(|b| img.delta.index_of(&sym(&format!("[{b}]"))).unwrap())
            .collect();
        prop_assert!(verify_zero_column_extension(&mg, &mx, &embedding).unwrap());
    }

    #[test]
    fn periodic_words_are_detected(seed in any::<u64>()) {
        let mut r = rng(seed);
        let sigma = alphabet(3);
        let u = random_word(&mut r, &sigma, 0, 6);
        let v = random_word(&mut r, &sigma, 1, 6);
        let mut x = u.clone();
        while x.len() < 64 {
            x = x.concat(&v);
        }
        match detect_eventual_period(&x, 8, 8).unwrap() {
            PeriodVerdict::Found { preperiod, period } => {
                prop_assert!(preperiod <= u.len() && period <= v.len());
                let l = x.letters();
                prop_assert!((preperiod..l.len() - period).all(|i| l[i] == l[i + period]));
            }
            PeriodVerdict::NoneFound { .. } => prop_assert!(false, "missed a period"),
        }
    }

    #[test]
    fn pipeline_matches_direct_image(seed in any::<u64>()) {
        let mut r = rng(seed);
        let k = r.gen_range(1..=3);
        let g = random_prolongable(&mut r, k, 1, 3);
        let h = random_morphism(&mut r, g.source(), &alphabet(2), 0, 2);
        let a = g.source().symbol(0).clone();
        let sys = MorphicSystem::pure(g.clone(), a.clone()).unwrap();
        let Some(x) = iterate_until(&g, &a, 200, 1 << 20, |x| h.apply(x).unwrap().len()) else {
            return Ok(());
        };
        let direct = h.apply(&x).unwrap().prefix(200);
        match morphic_image_pipeline(&sys, &h).unwrap() {
            PipelineOutcome::System(out) => prop_assert_eq!(fixpoint_prefix(&out, 200).unwrap(), direct),
            PipelineOutcome::Finite(w) => prop_assert!(false, "finite {w} but oracle grew"),
        }
    }

    #[test]
    fn transduct_matches_direct_transduction(seed in any::<u64>()) {
        let mut r = rng(seed);
        let k = r.gen_range(1..=3);
        let g = random_prolongable(&mut r, k, 1, 3);
        let states = r.gen_range(1..=3);
        let m = random_transducer(&mut r, g.source(), &alphabet(2), states, 0, 2);
        let a = g.source().symbol(0).clone();
        let sys = MorphicSystem::pure(g.clone(), a.clone()).unwrap();
        let Some(x) = iterate_until(&g, &a, 200, 1 << 20, |x| transduce_oracle(&m, x).len()) else {
            return Ok(());
        };
        let direct = transduce_oracle(&m, &x).prefix(200);
        match transduct_system(&m, &sys).unwrap() {
            TransductOutcome::System(t) => {
                prop_assert_eq!(fixpoint_prefix(&t.flattened, 200).unwrap(), direct);
                prop_assert!(verify_annotation_rowsum(&g, &t.annotated));
            }
            TransductOutcome::Finite(w) => prop_assert!(false, "finite {w} but oracle grew"),
        }
    }
}
