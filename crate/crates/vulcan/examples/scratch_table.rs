use vulcan::domains::bandit::{bandit_model, table1_machines};
use vulcan::reward::RewardFunctional;
use vulcan::risk_bound::RiskBound;
use vulcan::SampleBudget;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let budget: u64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(4_000_000);
    let reps: u64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(20);
    let model5 = bandit_model(table1_machines(), 5, 1.0, RiskBound::linear(0.002)).unwrap();
    let fs5 = vulcan::vulcanfs(&model5, RewardFunctional::ExpectedStep, 10_000_000).unwrap();
    let fs_value = fs5.root_value.unwrap();
    let t = std::time::Instant::now();

    let handles: Vec<_> = (0..2)
        .map(|w| {
            let model = bandit_model(table1_machines(), 5, 1.0, RiskBound::linear(0.002)).unwrap();
            let fs_policy = fs5.policy.clone();
            std::thread::spawn(move || {
                let mut matches = 0u64;
                let mut err_sum = 0.0f64;
                for seed in (w..reps).step_by(2) {
                    let mut rng = vulcan::planner_rng(1000, seed);
                    let r = vulcan::vulcan(
                        &model,
                        RewardFunctional::ExpectedStep,
                        SampleBudget::Samples(budget),
                        std::f64::consts::SQRT_2,
                        &mut vulcan::UniformDefaultPolicy,
                        &mut rng,
                    );
                    if r.policy.same_decisions(&fs_policy) {
                        matches += 1;
                    }
                    let value = vulcan::evaluate_policy(&model, &r.policy)
                        .map(|e| e.expected_reward)
                        .unwrap_or(0.0);
                    err_sum += (value - fs_value).abs() / fs_value;
                }
                (matches, err_sum)
            })
        })
        .collect();
    let mut matches = 0;
    let mut err = 0.0;
    for h in handles {
        let (m, e) = h.join().unwrap();
        matches += m;
        err += e;
    }
    println!(
        "budget {budget}: {matches}/{reps} exact, mean err {:.5}%, wall {:?}",
        err / reps as f64 * 100.0,
        t.elapsed()
    );
}
