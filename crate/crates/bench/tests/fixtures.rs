use psrplan_bench::{learned, posyadmin3, tiger};
use psrplan_core::psr::RankRule;

#[test]
fn fixtures_give_usable_models() {
    let m = learned(&tiger(), 100, 6, RankRule::Gap(1e-6));
    assert_eq!(m.rank(), 2);
    let m = learned(&posyadmin3(), 100, 8, RankRule::Fixed(20));
    let d = m.obs_distribution(&m.initial_state(), 0).unwrap();
    assert!((d.probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
}
