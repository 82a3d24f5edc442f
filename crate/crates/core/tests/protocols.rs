use qpvkex_core::auth::HashFamilyParams;
use qpvkex_core::bits::BitString;
use qpvkex_core::kex::{run_protocol1, run_protocol3, ChannelAdversary, ChannelAttack, ExchangeSettings};
use qpvkex_core::msgauth::{send_authenticated, MsgAdversary, MsgAuthConfig};
use qpvkex_core::qpv::{run_qpv, ProverStrategy, QpvConfig, RunOptions};
use qpvkex_core::trials::{run_trials, RateEstimate};

fn small_exchange() -> ExchangeSettings {
    let mut s = ExchangeSettings::default();
    s.qpv.rounds = 8;
    s.msg_auth.qpv.rounds = 1;
    s
}

#[test]
fn honest_abort_tracks_codeword_weight() {
    let eps_rob = 0.02;
    let qpv = QpvConfig { rounds: 4, ..QpvConfig::default() };
    let cfg = MsgAuthConfig::new(HashFamilyParams::new(16, 4).unwrap(), qpv, None, 0.0, eps_rob, None).unwrap();
    let ones = cfg.codec.half_length + 2;
    let msg = BitString::from_binary("1011").unwrap();
    let outs = run_trials(20_000, 5, true, |s| send_authenticated(&cfg, &msg, &MsgAdversary::None, s).unwrap());
    let abort = RateEstimate::count(&outs, |o| !o.auth_pass);
    let expected = 1.0 - (1.0 - eps_rob).powi(ones as i32);
    let sigma = (expected * (1.0 - expected) / 20_000.0).sqrt();
    assert!((abort.rate - expected).abs() <= 4.0 * sigma, "{} vs {expected}", abort.rate);
    assert!(outs.iter().all(|o| o.auth_pass == (o.decoded_key.as_ref() == Some(&o.key))));
}

#[test]
fn relay_off_position_fails_timing() {
    let cfg = QpvConfig { rounds: 50, ..QpvConfig::default() };
    let run = run_qpv(&cfg, &ProverStrategy::OffPositionRelay { offset: 0.3 }, 3, &RunOptions::default()).unwrap();
    assert!(!run.verdict.passed());
    assert_eq!(run.stats.timing_failures, 50);
}

#[test]
fn protocol1_keys_agree_or_abort() {
    let cfg = small_exchange().protocol1().unwrap();
    let attacks = [
        ChannelAdversary::none(),
        ChannelAdversary::new(ChannelAttack::TamperBobMessages { indices: vec![3, 1500] }, 0.0),
        ChannelAdversary::new(ChannelAttack::TamperTag, 0.0),
        ChannelAdversary::new(ChannelAttack::BlockFinalQpv, 0.0),
        ChannelAdversary::new(ChannelAttack::ImpersonateAtWrongPosition, 0.5),
    ];
    for adv in &attacks {
        let outs = run_trials(200, 11, true, |s| run_protocol1(&cfg, adv, s).unwrap());
        for o in &outs {
            o.check_invariants().unwrap();
            // both keys or neither: I_PE is shared and Bob keys on I_QPV
            assert_eq!(o.key_a.is_some(), o.key_b.is_some());
            if let (Some(a), Some(b)) = (&o.key_a, &o.key_b) {
                assert_eq!(a, b);
            }
        }
        let keyed = outs.iter().filter(|o| o.key_a.is_some()).count();
        match adv.attack {
            // the tag travels authenticated, so tag-based attacks do nothing
            ChannelAttack::None | ChannelAttack::TamperTag | ChannelAttack::ImpersonateAtWrongPosition => {
                assert_eq!(keyed, 200)
            }
            _ => assert!(keyed < 200),
        }
    }
}

#[test]
fn protocol3_honest_noiseless_always_keys() {
    let cfg = small_exchange().protocol3().unwrap();
    let outs = run_trials(100, 12, true, |s| run_protocol3(&cfg, &ChannelAdversary::none(), s).unwrap());
    for o in &outs {
        o.check_invariants().unwrap();
        assert!(o.key_a.is_some() && o.key_a == o.key_b);
        assert!(o.key_a.as_ref().unwrap().len() > 0);
    }
}

#[test]
fn protocol3_tampering_never_yields_bob_key_with_wrong_transcript() {
    let cfg = small_exchange().protocol3().unwrap();
    let outs = run_trials(300, 13, true, |s| {
        let adv = ChannelAdversary::new(ChannelAttack::TamperBobMessages { indices: vec![(s % 1000) as usize] }, 0.0);
        run_protocol3(&cfg, &adv, s).unwrap()
    });
    for o in &outs {
        o.check_invariants().unwrap();
        assert!(!o.indicators.omega_m);
    }
    // hash collisions at l_T = 16 are ~2^-16 per trial
    assert!(outs.iter().filter(|o| o.key_b.is_some()).count() <= 1);
}

#[test]
fn protocol3_robustness_with_injected_failures() {
    let (eps_qkd, eps_run, eps_final) = (0.01, 0.002, 0.01);
    let mut s = small_exchange();
    s.qkd.eps_rob = eps_qkd;
    s.msg_auth.eps_rob = eps_run;
    s.eps_rob_qpv = eps_final;
    let cfg = s.protocol3().unwrap();
    let n = 4000;
    let outs = run_trials(n, 14, true, |seed| run_protocol3(&cfg, &ChannelAdversary::none(), seed).unwrap());
    let aborts = RateEstimate::count(&outs, |o| o.aborted());
    // forced QKD abort, a dropped key-transfer run, or a dropped closing run
    let ones = cfg.msg_auth.codec.half_length + 2;
    let expected = 1.0 - (1.0 - eps_qkd) * (1.0 - eps_run).powi(ones as i32) * (1.0 - eps_final);
    let sigma = (expected * (1.0 - expected) / n as f64).sqrt();
    assert!((aborts.rate - expected).abs() <= 4.0 * sigma, "{} vs {expected}", aborts.rate);
}

#[test]
fn outcomes_are_deterministic() {
    let cfg = small_exchange().protocol3().unwrap();
    let adv = ChannelAdversary::new(ChannelAttack::ImpersonateAtWrongPosition, 0.3);
    let a = run_protocol3(&cfg, &adv, 99).unwrap();
    let b = run_protocol3(&cfg, &adv, 99).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.transcript_digest.len(), 64);
}
