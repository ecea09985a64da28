use relaynet::payment::{
    run_ideal, run_protocol, ExchangeParams, ExchangeSchedule, PayeeBehavior, PayerBehavior,
};

fn schedules(n: usize) -> Vec<ExchangeSchedule> {
    let mut out = Vec::new();
    let k = PayeeBehavior::ALL.len();
    for payer in PayerBehavior::ALL {
        for code in 0..k.pow(n as u32) {
            let mut c = code;
            let payees = (0..n)
                .map(|_| {
                    let b = PayeeBehavior::ALL[c % k];
                    c /= k;
                    b
                })
                .collect();
            out.push(ExchangeSchedule { payer, payees });
        }
    }
    out
}

#[test]
fn protocol_matches_ideal_model_for_up_to_three_hops() {
    for n in 1..=3usize {
        let fees: Vec<u64> = (1..=n as u64).rev().collect();
        let params = ExchangeParams::new(fees, 500);
        for (idx, s) in schedules(n).iter().enumerate() {
            let real = run_protocol(&params, s, idx as u64);
            let ideal = run_ideal(&params, s);
            assert_eq!(real, ideal, "n={n} schedule={s:?}");
        }
    }
}
