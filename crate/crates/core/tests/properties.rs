use proptest::prelude::*;

use qpvkex_core::auth::{hash_tag, CodecParams, HashFamilyParams};
use qpvkex_core::bits::BitString;
use qpvkex_core::bounds::*;
use qpvkex_core::quantum::{binary_entropy, binary_entropy_inv};

fn bits(max: usize) -> impl Strategy<Value = BitString> {
    prop::collection::vec(any::<bool>(), 0..max).prop_map(BitString::from_bools)
}

fn eps() -> impl Strategy<Value = f64> {
    0.0..=1.0f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn binary_and_hex_round_trip(b in bits(200)) {
        prop_assert_eq!(BitString::from_binary(&b.to_binary()).unwrap(), b.clone());
        prop_assert_eq!(BitString::from_uint(&b.to_uint(), b.len()).unwrap(), b);
    }

    #[test]
    fn codec_round_trip(l_k in 1usize..160, seed in any::<u64>()) {
        use rand::SeedableRng;
        let p = CodecParams::new(l_k).unwrap();
        let k = BitString::random(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed), l_k);
        let cw = p.encode(&k).unwrap();
        prop_assert!(p.tamper_check(&cw));
        prop_assert_eq!(cw.hamming_weight(), p.half_length + 2);
        prop_assert_eq!(p.decode(&cw).unwrap(), k);
    }

    #[test]
    fn single_flips_fail_the_tamper_check(l_k in 1usize..40, v in any::<u64>(), i in any::<prop::sample::Index>()) {
        let p = CodecParams::new(l_k).unwrap();
        let k = BitString::from_u64(v & ((1u64 << l_k.min(63)) - 1), l_k).unwrap();
        let mut cw = p.encode(&k).unwrap();
        cw.flip(i.index(p.code_length));
        prop_assert!(!p.tamper_check(&cw));
    }

    #[test]
    fn tags_have_tag_length(l_t in prop::sample::select(vec![1usize, 2, 3, 4, 5, 6, 7, 8, 16, 32, 64]), m in bits(300)) {
        let params = HashFamilyParams::new(300, l_t).unwrap();
        let key = BitString::zeros(params.key_bits);
        let tag = hash_tag(&params, &key, &m).unwrap();
        prop_assert_eq!(tag.len(), l_t);
        // k1 = 0 leaves only k2
        prop_assert_eq!(tag, BitString::zeros(l_t));
    }

    #[test]
    fn entropy_inverse_round_trip(y in 0.0..=1.0f64) {
        let x = binary_entropy_inv(y).unwrap();
        prop_assert!((0.0..=0.5).contains(&x));
        prop_assert!((binary_entropy(x).unwrap() - y).abs() < 1e-12);
    }

    #[test]
    fn composition_bounds_monotone_in_eps(a in eps(), b in eps(), c in eps(), d in eps(), e in eps(), l_k in 1usize..200, bump in 0.0..0.1f64) {
        let p = SecurityParams { eps_qkd: a, eps_qpv: b, eps_rob_qkd: c, eps_rob_qpv: d, delta_hash: e, l_k, ..Default::default() };
        let up = |x: f64| (x + bump).min(1.0);
        let variants = [
            SecurityParams { eps_qkd: up(a), ..p },
            SecurityParams { eps_qpv: up(b), ..p },
            SecurityParams { eps_rob_qkd: up(c), ..p },
            SecurityParams { eps_rob_qpv: up(d), ..p },
            SecurityParams { delta_hash: up(e), ..p },
        ];
        for q in variants {
            for f in [protocol2_soundness, protocol2_robustness, protocol3_security, protocol3_robustness] {
                let (lo, hi) = (f(&p).unwrap(), f(&q).unwrap());
                prop_assert!(hi.raw >= lo.raw && hi.value >= lo.value);
            }
        }
        for v in [Thm1Variant::PaperLiteral, Thm1Variant::Exponential] {
            prop_assert!(thm1_bound(up(a), 8, b, v).unwrap().raw >= thm1_bound(a, 8, b, v).unwrap().raw);
            prop_assert!(thm1_bound(a, 8, up(b), v).unwrap().raw >= thm1_bound(a, 8, b, v).unwrap().raw);
        }
    }

    #[test]
    fn clamped_values_stay_in_unit_interval(a in eps(), b in eps(), l_k in 1usize..500) {
        let p = SecurityParams { eps_qkd: a, eps_qpv: b, eps_rob_qkd: a, eps_rob_qpv: b, delta_hash: a, l_k, ..Default::default() };
        for f in [protocol2_soundness, protocol2_robustness, protocol3_security, protocol3_robustness] {
            let bound = f(&p).unwrap();
            prop_assert!((0.0..=1.0).contains(&bound.value));
            prop_assert_eq!(bound.value, bound.raw.clamp(0.0, 1.0));
        }
    }

    #[test]
    fn nu_reproduces_its_argument(q0 in 1.0..20.0f64, delta in 1e-6..=1.0f64, alpha_frac in 0.0..1e-3f64) {
        match nu_value(q0, delta, alpha_frac) {
            Ok(nu) => {
                let arg = nu_argument(q0, delta, alpha_frac).unwrap();
                prop_assert!((binary_entropy(nu).unwrap() - arg).abs() < 1e-10);
            }
            Err(BoundsError::Infeasible(arg)) => prop_assert!(arg < 0.0),
            Err(e) => prop_assert!(false, "{e}"),
        }
    }

    #[test]
    fn eps_lb_is_affine_in_eps_thres(eta in 0.0..=1.0f64, t in 0.0..0.99f64, nu in 0.0..=0.5f64, alpha in 1.0..64.0f64) {
        let eta_thres = t.min(eta);
        let raw = |e: f64| eps_lower_bound(&PartitionParams { eta, eta_thres, eps_thres: e, nu, alpha }).unwrap().raw;
        let (a, b, c) = (raw(0.1), raw(0.3), raw(0.5));
        prop_assert!(((b - a) - (c - b)).abs() < 1e-12);
        prop_assert!(raw(0.0).abs() < 1e-15);
    }

    #[test]
    fn rounding_size_dominates_alice_net(q in 0u32..10, delta in 1e-6..=1.0f64) {
        let k = classical_rounding_size(q, delta).unwrap() as f64;
        let na = net_sizes(q, delta / 6.0).unwrap().log2_na;
        prop_assert!(k >= na);
    }

    #[test]
    fn lp_closed_form_matches_grid(eta_r in 0.0..=1.0f64, t in 0.0..0.99f64, e in 0.0..=1.0f64, eta in 0.0..=1.0f64, nu in 0.0..=1.0f64) {
        let step = 1e-2;
        let closed = lp_error_lower_bound(eta_r, t, e, eta, nu).unwrap();
        let grid = lp_brute_force_oracle(eta_r, t, e, eta, nu, step).unwrap();
        prop_assert!(grid >= closed - 1e-12);
        prop_assert!(grid - closed <= 2.0 * step * e * eta + 1e-12);
    }
}
