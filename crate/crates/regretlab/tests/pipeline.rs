use num_traits::ToPrimitive;
use regretlab::game_model::{GameSpec, PayoffTable};
use regretlab::games::{make_phi_regret, BaseMaps};
use regretlab::seq_complexity::{rad_exact, triplex_certificate_linear, RadSign};
use regretlab::value_engine::{
    best_response_value, exact_value, exact_value_rational, extract_minimax_strategy, simulate, Adversary, EngineOptions,
    Player,
};

fn rps() -> PayoffTable {
    PayoffTable::scalar(&[vec![0.5, 1.0, 0.0], vec![0.0, 0.5, 1.0], vec![1.0, 0.0, 0.5]]).unwrap()
}

#[test]
fn json_game_round_trip_keeps_value() {
    let g = make_phi_regret(rps(), BaseMaps::Internal, 2, 1 << 20).unwrap();
    let back = GameSpec::from_json(&g.to_json()).unwrap();
    let opts = EngineOptions::default();
    assert_eq!(exact_value(&g, &opts).unwrap().to_bits(), exact_value(&back, &opts).unwrap().to_bits());
}

#[test]
fn minimax_table_attains_value() {
    let opts = EngineOptions::default();
    for maps in [BaseMaps::Internal, BaseMaps::Swap] {
        let g = make_phi_regret(rps(), maps, 2, 1 << 20).unwrap();
        let v = exact_value(&g, &opts).unwrap();
        let s = extract_minimax_strategy(&g, &opts).unwrap();
        assert!((best_response_value(&g, &s, &opts).unwrap() - v).abs() < 1e-9);
    }
}

#[test]
fn parallel_and_sequential_agree_bitwise() {
    let g = make_phi_regret(rps(), BaseMaps::Internal, 3, 1 << 20).unwrap();
    let par = EngineOptions::default();
    let seq = EngineOptions::sequential();
    assert_eq!(exact_value(&g, &par).unwrap().to_bits(), exact_value(&g, &seq).unwrap().to_bits());
    assert_eq!(
        rad_exact(&g, &g.transforms, RadSign::B, &par).unwrap().to_bits(),
        rad_exact(&g, &g.transforms, RadSign::B, &seq).unwrap().to_bits()
    );
    let a = simulate(&g, &Player::Minimax, &Adversary::Uniform, 11, 300, &par).unwrap();
    let b = simulate(&g, &Player::Minimax, &Adversary::Uniform, 11, 300, &seq).unwrap();
    assert_eq!(a, b);
}

#[test]
fn rational_oracle_and_certificate_on_internal_regret() {
    let g = make_phi_regret(rps(), BaseMaps::Internal, 2, 1 << 20).unwrap();
    let opts = EngineOptions::default();
    let v = exact_value(&g, &opts).unwrap();
    assert!((exact_value_rational(&g).unwrap().to_f64().unwrap() - v).abs() < 1e-8);
    let c = triplex_certificate_linear(&g, &opts).unwrap();
    assert!(c.holds && c.val <= 2.0 * c.rad + 1e-9);
}

#[test]
fn best_response_simulation_matches_value() {
    // Against its best response the minimax table's expected regret is the value.
    let g = make_phi_regret(rps(), BaseMaps::Internal, 2, 1 << 20).unwrap();
    let opts = EngineOptions::default();
    let v = exact_value(&g, &opts).unwrap();
    let r = simulate(&g, &Player::Minimax, &Adversary::BestResponse, 5, 40_000, &opts).unwrap();
    let n = r.len() as f64;
    let mean = r.iter().sum::<f64>() / n;
    let sd = (r.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    assert!((mean - v).abs() <= 4.0 * sd / n.sqrt() + 1e-12, "mean {mean} value {v}");
}
